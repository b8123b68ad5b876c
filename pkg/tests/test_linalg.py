import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thzdet.errors import NonConvergence, RankDeficient
from thzdet.linalg import (
    apply_permutation,
    cyclic_permutations,
    lll_reduce,
    orthogonality_defect,
    qrd,
    real_embedding,
    sorted_qrd,
    sqrd_order,
    wrd,
)


def cgauss(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rel_err(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def check_decomposition(h, dec):
    q_t = h.shape[-1]
    hp = apply_permutation(h, dec.perm)
    assert rel_err(dec.q @ dec.r, hp) < 1e-10
    assert np.linalg.norm(dec.q.conj().T @ dec.q - np.eye(q_t)) < 1e-10
    assert np.all(np.tril(dec.r, -1) == 0)
    d = np.diag(dec.r)
    assert np.all(d.imag == 0) and np.all(d.real > 0)
    assert sorted(dec.perm.tolist()) == list(range(q_t))


def punctured_mask(q_t):
    i, j = np.indices((q_t, q_t))
    return (i < j) & (j < q_t - 1)


class TestQrd:
    def test_identity(self):
        dec = qrd(np.eye(2))
        np.testing.assert_allclose(dec.q, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(dec.r, np.eye(2), atol=1e-15)
        np.testing.assert_array_equal(dec.perm, [0, 1])

    def test_swap(self):
        h = np.array([[0, 1], [1, 0]])
        dec = qrd(h)
        np.testing.assert_allclose(dec.q, h, atol=1e-15)
        np.testing.assert_allclose(dec.r, np.eye(2), atol=1e-15)

    @pytest.mark.parametrize("shape", [(4, 4), (6, 3), (16, 8)])
    def test_reconstruction(self, shape):
        h = cgauss(np.random.default_rng(1), *shape)
        check_decomposition(h, qrd(h))

    def test_batched_matches_single(self):
        hs = cgauss(np.random.default_rng(2), 5, 4, 4)
        dec = qrd(hs)
        for b in range(5):
            single = qrd(hs[b])
            np.testing.assert_allclose(dec.r[b], single.r, atol=1e-13)

    def test_q_preserves_norm(self):
        rng = np.random.default_rng(3)
        h = cgauss(rng, 4, 4)
        n = cgauss(rng, 4)
        q = qrd(h).q
        assert abs(np.linalg.norm(q.conj().T @ n) - np.linalg.norm(n)) < 1e-10

    def test_rank_deficient(self):
        h = np.array([[1, 2], [2, 4]], dtype=complex)
        with pytest.raises(RankDeficient):
            qrd(h)

    @pytest.mark.parametrize("bad", [np.ones((2, 3)), np.array([[np.nan, 0], [0, 1]]), np.ones(3)])
    def test_bad_input(self, bad):
        with pytest.raises(ValueError):
            qrd(bad)


class TestSortedQrd:
    def test_strongest_column_detected_first(self):
        h = np.diag([1.0, 3.0, 2.0]).astype(complex)
        dec = sorted_qrd(h)
        # back-substitution starts from the last position
        assert dec.perm[-1] == 1
        np.testing.assert_array_equal(dec.perm, [0, 2, 1])

    def test_tie_keeps_identity(self):
        np.testing.assert_array_equal(sqrd_order(np.eye(4)), np.arange(4))

    def test_random(self):
        h = cgauss(np.random.default_rng(4), 4, 4)
        check_decomposition(h, sorted_qrd(h))

    def test_diagonal_grows(self):
        # the greedy rule picks the weakest residual each step
        rng = np.random.default_rng(5)
        h = cgauss(rng, 6, 6)
        dec = sorted_qrd(h)
        r = np.diag(dec.r).real
        for k in range(5):
            rest = np.linalg.norm(
                (np.eye(6) - dec.q[:, :k] @ dec.q[:, :k].conj().T)
                @ apply_permutation(h, dec.perm)[:, k:], axis=0)
            assert r[k] == pytest.approx(rest.min(), rel=1e-10)


class TestWrd:
    def test_two_by_two_is_qrd(self):
        h = cgauss(np.random.default_rng(6), 2, 2)
        np.testing.assert_allclose(wrd(h).r_dot, qrd(h).r, atol=1e-14)

    @pytest.mark.parametrize("q_t", [3, 4, 8, 16])
    def test_pattern_and_reconstruction(self, q_t):
        h = cgauss(np.random.default_rng(q_t), q_t, q_t)
        pd = wrd(h)
        hp = apply_permutation(h, pd.perm)
        mask = punctured_mask(q_t)
        assert np.all(pd.r_dot[mask] == 0)
        assert np.all(np.tril(pd.r_dot, -1) == 0)
        assert int(mask.sum()) == (q_t - 1) * (q_t - 2) // 2
        np.testing.assert_allclose(np.linalg.norm(pd.w, axis=0), 1.0, atol=1e-10)
        assert rel_err(pd.w.conj().T @ hp, pd.r_dot) < 1e-10

    def test_eight_has_21_punctures(self):
        pd = wrd(cgauss(np.random.default_rng(8), 8, 8))
        upper = np.triu(np.ones((8, 8), bool), 1)
        upper[:, -1] = False
        assert int(np.sum(pd.r_dot[upper] == 0)) == 21

    def test_w_not_unitary(self):
        pd = wrd(cgauss(np.random.default_rng(9), 4, 4))
        assert np.linalg.norm(pd.w.conj().T @ pd.w - np.eye(4)) > 1e-3

    def test_last_layer_matches_qrd(self):
        h = cgauss(np.random.default_rng(10), 5, 5)
        np.testing.assert_allclose(abs(wrd(h).r_dot[-1, -1]), qrd(h).r[-1, -1], rtol=1e-12)


class TestCyclic:
    def test_one(self):
        perms = cyclic_permutations(1)
        assert len(perms) == 1 and perms[0].tolist() == [0]

    def test_three_first_column_last(self):
        assert cyclic_permutations(3)[0].tolist() == [1, 2, 0]

    def test_four_distinct(self):
        perms = cyclic_permutations(4)
        assert {p[-1] for p in perms} == {0, 1, 2, 3}
        for p in perms:
            assert sorted(p.tolist()) == [0, 1, 2, 3]
            assert list(p[:-1]) == sorted(p[:-1])

    def test_invalid(self):
        with pytest.raises(ValueError):
            cyclic_permutations(0)


def lovasz_and_size_ok(b, delta):
    q, r = np.linalg.qr(b)
    d = np.diag(r)
    mu = (r / d[:, None]).T
    n = b.shape[1]
    size_ok = all(abs(mu[k, j]) <= 0.5 + 1e-9 for k in range(n) for j in range(k))
    lov_ok = all(d[k] ** 2 >= (delta - mu[k, k - 1] ** 2) * d[k - 1] ** 2 - 1e-9
                 for k in range(1, n))
    return size_ok, lov_ok


class TestLll:
    def test_orthogonal_fixed_point(self):
        red = lll_reduce(np.eye(3))
        np.testing.assert_array_equal(red.unimodular, np.eye(3, dtype=int))

    def test_defect_drops(self):
        h = np.array([[1.0, 0.99], [0.0, 0.01]])
        red = lll_reduce(h)
        assert orthogonality_defect(red.h_reduced) < orthogonality_defect(h)
        np.testing.assert_allclose(red.h_reduced, h @ red.unimodular, atol=1e-10)

    def test_ill_conditioned_complex(self):
        rng = np.random.default_rng(11)
        u, _, vh = np.linalg.svd(cgauss(rng, 4, 4))
        h = u @ np.diag([1, 0.5, 0.1, 0.004]) @ vh
        assert np.linalg.cond(h) > 100
        red = lll_reduce(h, delta=0.75)
        assert red.basis.shape == (8, 8)
        np.testing.assert_allclose(red.h_reduced, real_embedding(h) @ red.unimodular, atol=1e-10)
        assert abs(round(np.linalg.det(red.unimodular))) == 1
        assert lovasz_and_size_ok(red.h_reduced, 0.75) == (True, True)

    def test_cap(self):
        h = np.array([[1.0, 0.999999], [0.0, 1e-6]])
        with pytest.raises(NonConvergence):
            lll_reduce(h, max_iter=1)

    @pytest.mark.parametrize("delta", [0.25, 1.5])
    def test_bad_delta(self, delta):
        with pytest.raises(ValueError):
            lll_reduce(np.eye(2), delta=delta)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 4))
    def test_property(self, seed, n):
        b = np.random.default_rng(seed).standard_normal((n, n))
        red = lll_reduce(b)
        assert abs(round(np.linalg.det(red.unimodular))) == 1
        assert lovasz_and_size_ok(red.h_reduced, red.delta) == (True, True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
def test_decompositions_reconstruct(seed, n):
    h = cgauss(np.random.default_rng(seed), n, n)
    check_decomposition(h, qrd(h))
    check_decomposition(h, sorted_qrd(h))
    pd = wrd(h)
    assert rel_err(pd.w.conj().T @ apply_permutation(h, pd.perm), pd.r_dot) < 1e-10
    assert np.all(pd.r_dot[punctured_mask(n)] == 0)
