import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from thzdet.channel import (
    C_LIGHT,
    AlphaMuParams,
    ArrayGeometry,
    CorrelationSpec,
    MixtureGammaParams,
    MultipathConfig,
    Rayleigh,
    alpha_mu_cdf,
    apply_correlation,
    delta_opt,
    draw_paths,
    dump_channel,
    evaluate_paths,
    exponential_correlation,
    gen_fading_matrix,
    gen_los_channel,
    gen_thz_multipath,
    gen_wideband,
    load_channel_dump,
    mean_entry_power,
    mixture_gamma_cdf,
    psd_sqrt,
    rayleigh_distance,
    sample_alpha_mu,
    sample_mixture_gamma,
)
from thzdet.errors import ConfigInvalid, NotPSD

N_KS = 10**6


class TestAlphaMu:
    def test_reduces_to_rayleigh_moment(self):
        p = AlphaMuParams(2.0, 1.0, 1.5)
        assert p.beta == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)
        assert p.moment(2) == pytest.approx(1.2732395 * 1.5**2, rel=1e-6)
        x = sample_alpha_mu(p, np.random.default_rng(0), 400_000)
        assert np.mean(x**2) == pytest.approx(p.moment(2), rel=0.01)

    @pytest.mark.parametrize("alpha,mu", [(2.0, 1.0), (1.3, 2.5), (3.0, 0.7)])
    def test_ks(self, alpha, mu):
        p = AlphaMuParams(alpha, mu, 0.8)
        x = sample_alpha_mu(p, np.random.default_rng(1), N_KS)
        assert np.all(x > 0)
        assert stats.kstest(x, lambda v: alpha_mu_cdf(p, v)).statistic < 0.005

    def test_scale_closure(self):
        rng = np.random.default_rng(2)
        a = sample_alpha_mu(AlphaMuParams(1.7, 1.4, 3.0), rng, 200_000)
        b = 3.0 * sample_alpha_mu(AlphaMuParams(1.7, 1.4, 1.0), rng, 200_000)
        assert stats.ks_2samp(a, b).statistic < 0.005

    def test_squared_closure(self):
        p = AlphaMuParams(2.4, 1.6, 1.0)
        y = sample_alpha_mu(p, np.random.default_rng(3), N_KS) ** 2
        beta_y = math.exp(special.gammaln(p.mu + 2 / p.alpha) - special.gammaln(p.mu))
        mean_y = p.moment(2)
        # Y is alpha-mu with (alpha/2, mu) and the beta_Y quoted above
        q = AlphaMuParams(p.alpha / 2, p.mu, mean_y)
        assert q.beta == pytest.approx(beta_y, rel=1e-12)
        assert stats.kstest(y, lambda v: alpha_mu_cdf(q, v)).statistic < 0.005

    @pytest.mark.parametrize("bad", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            AlphaMuParams(*bad)


class TestMixtureGamma:
    def test_single_component_mean(self):
        p = MixtureGammaParams(((1.0, 2.5, 4.0),))
        x = sample_mixture_gamma(p, np.random.default_rng(4), 200_000)
        assert np.mean(x) == pytest.approx(2.5 / 4.0, rel=0.01)
        assert p.moment(1) == pytest.approx(2.5 / 4.0)

    def test_ks_three_components(self):
        p = MixtureGammaParams(((1 / 3, 1.0, 1.0), (1 / 3, 3.0, 2.0), (1 / 3, 0.5, 0.3)))
        x = sample_mixture_gamma(p, np.random.default_rng(5), N_KS)
        assert np.all(x >= 0)
        assert stats.kstest(x, lambda v: mixture_gamma_cdf(p, v)).statistic < 0.005

    def test_rare_component_frequency(self):
        # well-separated components so the choice can be read off the sample
        p = MixtureGammaParams(((0.999, 200.0, 200.0), (0.001, 2000.0, 20.0)))
        n = N_KS
        x = sample_mixture_gamma(p, np.random.default_rng(6), n)
        k = int(np.sum(x > 10))
        sd = math.sqrt(n * 0.001 * 0.999)
        assert abs(k - n * 0.001) < 3 * sd

    @pytest.mark.parametrize("comps", [(), ((0.5, 1.0, 1.0),), ((1.0, 0.0, 1.0),)])
    def test_invalid(self, comps):
        with pytest.raises(ValueError):
            MixtureGammaParams(comps)


class TestFadingMatrix:
    def test_rayleigh_power(self):
        real = gen_fading_matrix(4, 4, Rayleigh(2.0), pathloss=0.5,
                                 rng=np.random.default_rng(7), size=20_000)
        assert real.h.shape == (20_000, 4, 4)
        p = np.mean(np.abs(real.h) ** 2)
        assert p == pytest.approx(0.25 * 2.0, rel=0.01)
        assert mean_entry_power(Rayleigh(2.0), 0.5) == pytest.approx(0.5)
        # circular: real and imaginary parts carry half the power each
        assert np.mean(real.h.real**2) == pytest.approx(p / 2, rel=0.02)

    def test_zero_pathloss(self):
        h = gen_fading_matrix(3, 2, Rayleigh(), 0.0, np.random.default_rng(0)).h
        assert np.all(h == 0)

    def test_alpha_mu_frobenius_mean(self):
        fad = AlphaMuParams(2.0, 2.0, 1.0)
        hs = gen_fading_matrix(16, 16, fad, 1.0, np.random.default_rng(8), size=4000).h
        fro = np.sum(np.abs(hs) ** 2, axis=(-2, -1))
        assert fro.mean() == pytest.approx(256 * fad.moment(2), rel=0.01)

    def test_deterministic(self):
        a = gen_fading_matrix(4, 4, Rayleigh(), rng=np.random.default_rng(9)).h
        b = gen_fading_matrix(4, 4, Rayleigh(), rng=np.random.default_rng(9)).h
        np.testing.assert_array_equal(a, b)


class TestCorrelation:
    def test_zero_is_identity(self):
        h = gen_fading_matrix(4, 4, Rayleigh(), rng=np.random.default_rng(10)).h
        np.testing.assert_allclose(apply_correlation(h, CorrelationSpec(0, 0)), h, atol=1e-14)

    def test_sqrt_is_symmetric_psd(self):
        r = exponential_correlation(6, 0.85)
        s = psd_sqrt(r)
        np.testing.assert_allclose(s, s.T, atol=1e-14)
        np.testing.assert_allclose(s @ s, r, atol=1e-12)
        assert np.linalg.eigvalsh(s).min() > -1e-12

    def test_not_psd(self):
        with pytest.raises(NotPSD):
            psd_sqrt(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_correlation_grows(self):
        rng = np.random.default_rng(11)
        hs = gen_fading_matrix(16, 16, Rayleigh(), rng=rng, size=2000).h

        def col_corr(x):
            return abs(np.mean(np.sum(x[..., 0].conj() * x[..., 1], axis=-1)))

        base = col_corr(hs)
        vals = [col_corr(apply_correlation(hs, CorrelationSpec(r, r))) for r in (0.3, 0.6, 0.85)]
        assert base < vals[0] < vals[1] < vals[2]

    def test_frobenius_submultiplicative(self):
        spec = CorrelationSpec(0.85, 0.85)
        hs = gen_fading_matrix(16, 16, Rayleigh(), rng=np.random.default_rng(12), size=200).h
        out = apply_correlation(hs, spec)
        bound = (np.linalg.norm(psd_sqrt(exponential_correlation(16, 0.85))) ** 2
                 * np.linalg.norm(hs, axis=(-2, -1)))
        assert np.all(np.linalg.norm(out, axis=(-2, -1)) <= bound)

    def test_invalid_rho(self):
        with pytest.raises(ValueError):
            CorrelationSpec(1.2, 0.0)


class TestGeometry:
    def test_delta_opt(self):
        assert delta_opt(1, 1.0, 4, 0.45e12) == pytest.approx(1.666e-4, rel=1e-3)
        assert delta_opt(3, 1.0, 4, 0.45e12) == pytest.approx(3 * delta_opt(1, 1.0, 4, 0.45e12))

    @pytest.mark.parametrize("z", [2, 0, -1, 1.5])
    def test_delta_opt_rejects(self, z):
        with pytest.raises(ValueError):
            delta_opt(z, 1.0, 4, 0.45e12)

    def test_rayleigh_distance(self):
        assert rayleigh_distance(0.01, 0.01, 0.001) == pytest.approx(0.8)
        assert rayleigh_distance(0.02, 0.02, 0.001) == pytest.approx(3.2)
        assert rayleigh_distance(0.01, 0.01, 0.002) == pytest.approx(0.4)

    def test_tuned_los_is_orthogonal(self):
        d = delta_opt(1, 1.0, 4, 0.45e12)
        good = gen_los_channel(ArrayGeometry.ula(4, 4, math.sqrt(d)), 1.0, 0.45e12).h
        bad = gen_los_channel(ArrayGeometry.ula(4, 4, math.sqrt(d / 10)), 1.0, 0.45e12).h
        assert np.linalg.cond(good) < 10
        assert np.linalg.cond(bad) > 100 * np.linalg.cond(good)

    @pytest.mark.parametrize("spacing", [1e-3, 1e-2])
    def test_single_pair_free_space(self, spacing):
        h = gen_los_channel(ArrayGeometry.ula(1, 1, spacing), 1.0, 0.45e12).h
        lam = C_LIGHT / 0.45e12
        assert abs(h[0, 0]) == pytest.approx(lam / (4 * math.pi), rel=1e-12)

    def test_invalid_geometry(self):
        with pytest.raises(ConfigInvalid):
            ArrayGeometry(sa_spacing_t_m=-1.0)
        with pytest.raises(ConfigInvalid):
            ArrayGeometry(ae_per_sa=2, ae_spacing_m=0.0)


def direct_sum(cfg, geom, paths, m):
    """Entry-by-entry summation of the LoS and NLoS terms (single-AE SAs)."""
    f = cfg.carrier_hz + m * cfg.bandwidth_hz / cfg.n_subcarriers
    df = m * cfg.bandwidth_hz / cfg.n_subcarriers
    k = 2 * math.pi * f / C_LIGHT
    tx, rx = geom.tx_positions(), geom.rx_positions(cfg.distance_m)
    ref = np.array([cfg.distance_m, 0.0, 0.0])
    h = np.zeros((geom.q_r, geom.q_t), complex)
    for r in range(geom.q_r):
        for t in range(geom.q_t):
            d = np.linalg.norm(rx[r] - tx[t])
            v = (cfg.los_gain * cfg.gain_t * cfg.gain_r * cfg.distance_m / d
                 * np.exp(-1j * k * (d - cfg.distance_m))
                 * np.exp(-2j * math.pi * df * cfg.tau_los_s))
            for p in range(paths.n_paths):
                az, el = paths.aod[p]
                u_t = np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])
                az, el = paths.aoa[p]
                u_r = -np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])
                v += (paths.gains[p] * cfg.gain_t * cfg.gain_r
                      * np.exp(-2j * math.pi * df * paths.delays_s[p])
                      * np.exp(1j * k * u_t @ tx[t]) * np.exp(-1j * k * u_r @ (rx[r] - ref)))
            h[r, t] = v
    return h


class TestMultipath:
    def test_los_only_delay_free(self):
        cfg = MultipathConfig(los_gain=0.3 - 0.2j, gain_t=2.0, gain_r=1.5)
        geom = ArrayGeometry.ula(1, 1, 1e-2)
        h = gen_thz_multipath(cfg, geom, 0, np.random.default_rng(0)).h
        assert h[0, 0] == pytest.approx((0.3 - 0.2j) * 3.0, rel=1e-12)

    def test_los_phase_slope(self):
        cfg = MultipathConfig(tau_los_s=1.3e-9, n_subcarriers=16, bandwidth_hz=8e9)
        geom = ArrayGeometry.ula(1, 1, 1e-2)
        paths = draw_paths(cfg, np.random.default_rng(0))
        hs = evaluate_paths(cfg, geom, paths, np.arange(16))[:, 0, 0]
        step = np.angle(hs[1:] / hs[:-1])
        expect = np.angle(np.exp(-2j * math.pi * cfg.bandwidth_hz / 16 * cfg.tau_los_s))
        np.testing.assert_allclose(step, expect, atol=1e-12)

    @pytest.mark.parametrize("m", [0, 5])
    def test_data_center_direct_sum(self, m):
        cfg = MultipathConfig(n_clusters=3, rays_per_cluster=4, n_subcarriers=8,
                              distance_m=2.0, tau_los_s=0.5e-9)
        geom = ArrayGeometry(sa_grid_t=(2, 2), sa_grid_r=(2, 2), sa_spacing_t_m=3e-3,
                             sa_spacing_r_m=4e-3)
        paths = draw_paths(cfg, np.random.default_rng(13))
        assert paths.n_paths == 12
        np.testing.assert_allclose(evaluate_paths(cfg, geom, paths, m),
                                   direct_sum(cfg, geom, paths, m), rtol=1e-10, atol=1e-13)

    def test_subcarrier_range(self):
        cfg = MultipathConfig(n_subcarriers=4)
        with pytest.raises(ConfigInvalid):
            gen_thz_multipath(cfg, ArrayGeometry(), 4, np.random.default_rng(0))

    @pytest.mark.parametrize("kw", [{"carrier_hz": 0}, {"n_subcarriers": 0},
                                    {"bandwidth_hz": -1.0}, {"tau_los_s": -1e-9}])
    def test_invalid_config(self, kw):
        with pytest.raises(ConfigInvalid):
            MultipathConfig(**kw)


class TestWideband:
    def test_single_subcarrier(self):
        cfg = MultipathConfig(n_clusters=2, rays_per_cluster=2)
        geom = ArrayGeometry()
        wb = gen_wideband(cfg, geom, np.random.default_rng(14))
        single = gen_thz_multipath(cfg, geom, 0, np.random.default_rng(14)).h
        assert len(wb) == 1
        np.testing.assert_array_equal(wb.per_subcarrier[0], single)

    def test_flat_limit_exact(self):
        cfg = MultipathConfig(n_clusters=2, rays_per_cluster=3, n_subcarriers=8,
                              delay_spread_s=0.0, ray_delay_spread_s=0.0, bandwidth_hz=0.0)
        hs = gen_wideband(cfg, ArrayGeometry(), np.random.default_rng(15)).per_subcarrier
        for m in range(1, 8):
            np.testing.assert_array_equal(hs[m], hs[0])

    def test_coherence_drops_with_delay_spread(self):
        def adjacent_change(spread, bw):
            cfg = MultipathConfig(n_clusters=3, rays_per_cluster=4, n_subcarriers=16,
                                  bandwidth_hz=bw, delay_spread_s=spread)
            hs = gen_wideband(cfg, ArrayGeometry(), np.random.default_rng(16)).per_subcarrier
            return np.mean(np.linalg.norm(np.diff(hs, axis=0), axis=(-2, -1)))

        assert adjacent_change(0.1e-9, 10e9) < adjacent_change(2e-9, 10e9)
        assert adjacent_change(2e-9, 2e9) < adjacent_change(2e-9, 10e9)


class TestDump:
    def test_round_trip(self):
        hs = gen_fading_matrix(3, 2, Rayleigh(), rng=np.random.default_rng(17), size=4).h
        buf = io.StringIO()
        dump_channel(hs, buf)
        assert buf.getvalue().splitlines()[0] == "3 2 4"
        buf.seek(0)
        np.testing.assert_array_equal(load_channel_dump(buf), hs)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            load_channel_dump(io.StringIO("2 2 1\n0.0 1.0\n"))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(0.5, 4.0), st.floats(0.1, 10.0))
def test_alpha_mu_moment_matches_sample(alpha, mu, mean):
    p = AlphaMuParams(alpha, mu, mean)
    x = sample_alpha_mu(p, np.random.default_rng(0), 50_000)
    # the first moment equals the configured mean by construction
    assert p.moment(1) == pytest.approx(mean, rel=1e-10)
    se = math.sqrt((p.moment(2) - mean**2) / x.size)
    assert abs(np.mean(x) - mean) < 6 * se
