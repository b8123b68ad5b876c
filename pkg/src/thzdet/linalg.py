"""Complex dense decompositions used by the detectors.

All decompositions accept a single matrix of shape ``(Qr, Qt)`` or a stack of
matrices of shape ``(..., Qr, Qt)``; batch dimensions are carried through
unchanged.  Permutations are integer arrays ``perm`` such that the permuted
channel is ``h[..., :, perm]`` (``perm[k]`` is the original column index placed
at position ``k``).
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import NonConvergence, RankDeficient

RANK_TOL = 1e-12

__all__ = [
    "Decomposition",
    "PuncturedDecomposition",
    "ReducedBasis",
    "apply_permutation",
    "qrd",
    "sorted_qrd",
    "sqrd_order",
    "wrd",
    "lll_reduce",
    "real_embedding",
    "orthogonality_defect",
    "cyclic_permutations",
    "identity_permutation",
]


@dataclass(frozen=True)
class Decomposition:
    """``q @ r == h[..., :, perm]`` with unitary ``q`` and upper-triangular ``r``."""

    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray


@dataclass(frozen=True)
class PuncturedDecomposition:
    """Punctured (WR) decomposition ``w^H @ h[..., :, perm] == r_dot``.

    ``w`` has unit-norm, generally non-orthogonal columns.  ``r_dot`` is zero
    below the diagonal and between the diagonal and the last column, so each
    of the first ``Qt - 1`` rows couples only its own layer with the last one.
    """

    w: np.ndarray
    r_dot: np.ndarray
    perm: np.ndarray


@dataclass(frozen=True)
class ReducedBasis:
    """LLL output: ``h_reduced == basis @ unimodular``.

    ``basis`` is the lattice basis that was reduced; for complex input it is
    the real embedding returned by :func:`real_embedding`.
    """

    h_reduced: np.ndarray
    unimodular: np.ndarray
    delta: float
    basis: np.ndarray
    iterations: int


def identity_permutation(q_t: int, batch_shape=()) -> np.ndarray:
    return np.broadcast_to(np.arange(q_t), tuple(batch_shape) + (q_t,)).copy()


def apply_permutation(h: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Return ``h @ Pi`` i.e. the columns of ``h`` reordered by ``perm``."""
    perm = np.asarray(perm)
    if perm.ndim == 1:
        return h[..., :, perm]
    return np.take_along_axis(h, perm[..., None, :], axis=-1)


def _as_complex(h) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim < 2:
        raise ValueError("expected a matrix or a stack of matrices")
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix entries must be finite")
    return h.astype(np.complex128, copy=False)


def _check_shape(h: np.ndarray) -> None:
    q_r, q_t = h.shape[-2:]
    if q_r < q_t:
        raise ValueError(f"need rows >= cols, got {q_r}x{q_t}")


def qrd(h, perm: Optional[np.ndarray] = None) -> Decomposition:
    """Householder QR decomposition with a real non-negative ``R`` diagonal.

    Parameters
    ----------
    h : array_like, shape (..., Qr, Qt)
        Channel matrix (or stack), ``Qr >= Qt``.
    perm : array_like, optional
        Column permutation applied before factorisation.

    Raises
    ------
    RankDeficient
        If any ``|r_ii|`` falls below ``1e-12``.
    """
    h = _as_complex(h)
    _check_shape(h)
    q_t = h.shape[-1]
    if perm is None:
        perm = identity_permutation(q_t, h.shape[:-2])
    else:
        perm = np.broadcast_to(np.asarray(perm), h.shape[:-2] + (q_t,)).copy()
        h = apply_permutation(h, perm)
    # LAPACK geqrf: Householder reflections
    q, r = np.linalg.qr(h, mode="reduced")
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(diag)
    if np.any(mag < RANK_TOL):
        raise RankDeficient(f"pivot norm {mag.min():.3e} below {RANK_TOL}")
    phase = diag / mag
    r = np.triu(np.conj(phase)[..., :, None] * r)
    q = q * phase[..., None, :]
    idx = np.arange(q_t)
    r[..., idx, idx] = np.abs(r[..., idx, idx])
    return Decomposition(q=q, r=r, perm=perm)


def sqrd_order(h) -> np.ndarray:
    """Column order of the sorted QR decomposition.

    At every modified Gram-Schmidt step the remaining column with the smallest
    residual norm is placed next, so the strongest layers end up last in ``R``
    and are detected first by back-substitution.  Ties (relative 1e-12) go to
    the lowest original column index.
    """
    h = _as_complex(h)
    _check_shape(h)
    q_t = h.shape[-1]
    batch = h.shape[:-2]
    v = h.copy()
    norms = np.sum(np.abs(v) ** 2, axis=-2)
    used = np.zeros(batch + (q_t,), dtype=bool)
    order = np.empty(batch + (q_t,), dtype=np.intp)
    for k in range(q_t):
        masked = np.where(used, np.inf, norms)
        smallest = masked.min(axis=-1, keepdims=True)
        cand = (masked <= smallest * (1.0 + 1e-12)) & ~used
        idx = np.argmax(cand, axis=-1)
        order[..., k] = idx
        np.put_along_axis(used, idx[..., None], True, axis=-1)
        pivot = np.sqrt(np.take_along_axis(norms, idx[..., None], axis=-1))
        if np.any(pivot < RANK_TOL):
            raise RankDeficient(f"pivot norm {pivot.min():.3e} below {RANK_TOL}")
        col = np.take_along_axis(v, idx[..., None, None], axis=-1)[..., 0]
        q = col / pivot
        coeff = np.einsum("...i,...ij->...j", np.conj(q), v)
        v = v - q[..., :, None] * coeff[..., None, :]
        norms = np.sum(np.abs(v) ** 2, axis=-2)
    return order


def sorted_qrd(h) -> Decomposition:
    """Sorted QRD: V-BLAST style column ordering followed by Householder QR."""
    return qrd(h, perm=sqrd_order(h))


def wrd(h, perm: Optional[np.ndarray] = None) -> PuncturedDecomposition:
    """Punctured WR decomposition obtained from the QRD by row elimination.

    With ``h Pi = Q R`` and ``R = [[R11, r12], [0, r22]]`` the row operations
    ``T = blockdiag(diag(R11) R11^{-1}, 1)`` clear every entry of ``R11``
    above its diagonal.  ``W = Q T^H`` then satisfies ``W^H h Pi = T R``;
    finally each column of ``W`` (and the matching row of ``T R``) is scaled to
    unit norm.
    """
    dec = qrd(h, perm=perm)
    q, r = dec.q, dec.r
    q_t = r.shape[-1]
    if q_t <= 2:
        return PuncturedDecomposition(w=q.copy(), r_dot=r.copy(), perm=dec.perm)
    n = q_t - 1
    r11 = r[..., :n, :n]
    d11 = np.diagonal(r11, axis1=-2, axis2=-1)
    eye = np.broadcast_to(np.eye(n, dtype=complex), r11.shape)
    r11_inv = np.linalg.solve(r11, eye)
    t = np.zeros(r.shape, dtype=complex)
    t[..., :n, :n] = d11[..., :, None] * r11_inv
    t[..., n, n] = 1.0
    # unit diagonal by construction; kill round-off below it
    t = np.triu(t)
    idx = np.arange(n)
    t[..., idx, idx] = 1.0
    scale = np.linalg.norm(t, axis=-1)
    w = np.einsum("...ij,...kj->...ik", q, np.conj(t)) / scale[..., None, :]
    r_dot = np.zeros(r.shape, dtype=complex)
    r_dot[..., idx, idx] = d11 / scale[..., :n]
    r_dot[..., :n, n] = (t[..., :n, :n] @ r[..., :n, n:])[..., 0] / scale[..., :n]
    r_dot[..., n, n] = r[..., n, n] / scale[..., n]
    return PuncturedDecomposition(w=w, r_dot=r_dot, perm=dec.perm)


def cyclic_permutations(q_t: int) -> List[np.ndarray]:
    """Permutations moving column ``l`` last, keeping the others in order."""
    if q_t < 1:
        raise ValueError("q_t must be >= 1")
    perms = []
    for l in range(q_t):
        rest = [c for c in range(q_t) if c != l]
        perms.append(np.array(rest + [l], dtype=np.intp))
    return perms


def real_embedding(h) -> np.ndarray:
    """``[[Re H, -Im H], [Im H, Re H]]`` acting on ``[Re x; Im x]``."""
    h = np.asarray(h)
    re, im = h.real, h.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def orthogonality_defect(b) -> float:
    """``prod ||b_i|| / sqrt(det(B^H B))``; equals 1 only for orthogonal columns."""
    b = np.asarray(b)
    col = np.prod(np.linalg.norm(b, axis=0))
    vol = np.sqrt(abs(np.linalg.det(b.conj().T @ b)))
    return float(col / vol)


def _gso(b: np.ndarray):
    q, r = np.linalg.qr(b)
    d = np.diag(r)
    mu = (r / d[:, None]).T
    return mu, d**2


def lll_reduce(h, delta: float = 0.75, max_iter: Optional[int] = None) -> ReducedBasis:
    """LLL reduction of the column lattice of ``h``.

    Complex input is reduced through its real embedding so that the
    unimodular transform stays integer valued.

    Parameters
    ----------
    h : array_like, shape (Qr, Qt)
    delta : float
        Lovasz parameter in ``(0.25, 1]``.
    max_iter : int, optional
        Iteration cap; defaults to ``10 * n**2`` for an ``n``-column basis.

    Raises
    ------
    NonConvergence
        If the main loop exceeds ``max_iter`` iterations.
    """
    if not 0.25 < delta <= 1.0:
        raise ValueError("delta must lie in (0.25, 1]")
    h = np.asarray(h)
    if h.ndim != 2:
        raise ValueError("lll_reduce works on a single matrix")
    basis = real_embedding(h) if np.iscomplexobj(h) else h.astype(float)
    n = basis.shape[1]
    if max_iter is None:
        max_iter = 10 * n * n
    if np.linalg.matrix_rank(basis) < n:
        raise RankDeficient("lattice basis is not full column rank")
    b = basis.copy()
    u = np.eye(n, dtype=np.int64)
    mu, bnorm = _gso(b)
    k = 1
    iterations = 0
    while k < n:
        iterations += 1
        if iterations > max_iter:
            raise NonConvergence(f"LLL exceeded {max_iter} iterations")
        for j in range(k - 1, -1, -1):
            c = int(np.rint(mu[k, j]))
            if c:
                b[:, k] -= c * b[:, j]
                u[:, k] -= c * u[:, j]
                mu[k, : j + 1] -= c * mu[j, : j + 1]
        if bnorm[k] >= (delta - mu[k, k - 1] ** 2) * bnorm[k - 1]:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            u[:, [k - 1, k]] = u[:, [k, k - 1]]
            mu, bnorm = _gso(b)
            k = max(k - 1, 1)
    return ReducedBasis(h_reduced=b, unimodular=u, delta=delta, basis=basis,
                        iterations=iterations)
