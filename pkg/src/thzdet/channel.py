"""Channel generators.

Statistical models (Rayleigh, alpha-mu, mixture Gamma, exponential
correlation) produce i.i.d. draws with uniform phases.  Geometric models
evaluate a clustered multipath channel between planar arrays of subarrays
(SAs), each SA being a square grid of antenna elements (AEs), under the
hybrid spherical-planar wave model: spherical wavefronts between SA centres
for the line-of-sight (LoS) path, plane waves for scattered paths, and plane
waves within every SA.

All generators accept a ``numpy.random.Generator`` and are pure functions of
their inputs and the generator state.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy import special

from .errors import ConfigInvalid, NotPSD

C_LIGHT = 299_792_458.0

__all__ = [
    "C_LIGHT",
    "AlphaMuParams",
    "MixtureGammaParams",
    "Rayleigh",
    "CorrelationSpec",
    "ArrayGeometry",
    "MultipathConfig",
    "PathSet",
    "ChannelRealization",
    "WidebandChannel",
    "sample_alpha_mu",
    "alpha_mu_cdf",
    "sample_mixture_gamma",
    "mixture_gamma_cdf",
    "gen_fading_matrix",
    "mean_entry_power",
    "exponential_correlation",
    "psd_sqrt",
    "apply_correlation",
    "draw_paths",
    "evaluate_paths",
    "gen_thz_multipath",
    "gen_wideband",
    "gen_los_channel",
    "delta_opt",
    "optimal_spacing",
    "rayleigh_distance",
    "normalize_power",
    "dump_channel",
    "load_channel_dump",
]


# ------------------------------------------------------------------ fading


@dataclass(frozen=True)
class AlphaMuParams:
    """alpha-mu envelope law with mean ``mean``.

    ``(beta X / mean)**alpha`` is Gamma(mu, 1) distributed, with
    ``beta = Gamma(mu + 1/alpha) / Gamma(mu)``.
    """

    alpha: float
    mu: float
    mean: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.mu > 0 and self.mean > 0):
            raise ValueError("alpha, mu and mean must all be positive")

    @property
    def beta(self) -> float:
        return float(np.exp(special.gammaln(self.mu + 1.0 / self.alpha)
                            - special.gammaln(self.mu)))

    def moment(self, k: float) -> float:
        """``E[X**k]``."""
        return float((self.mean / self.beta) ** k * np.exp(
            special.gammaln(self.mu + k / self.alpha) - special.gammaln(self.mu)))


@dataclass(frozen=True)
class MixtureGammaParams:
    """Mixture of Gamma laws given as ``(weight, shape, rate)`` triples."""

    components: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        comps = tuple(tuple(float(v) for v in c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("need at least one component")
        w = np.array([c[0] for c in comps])
        if abs(w.sum() - 1.0) > 1e-9 or np.any(w < 0):
            raise ValueError("weights must be non-negative and sum to 1")
        if any(c[1] <= 0 or c[2] <= 0 for c in comps):
            raise ValueError("shapes and rates must be positive")

    def moment(self, k: float) -> float:
        return float(sum(w * np.exp(special.gammaln(b + k) - special.gammaln(b)) / z**k
                         for w, b, z in self.components))


@dataclass(frozen=True)
class Rayleigh:
    """Circularly symmetric complex Gaussian entries with ``E|h|^2 = power``."""

    power: float = 1.0

    def moment(self, k: float) -> float:
        return float(self.power ** (k / 2) * special.gamma(1 + k / 2))


Fading = Union[AlphaMuParams, MixtureGammaParams, Rayleigh]


def sample_alpha_mu(params: AlphaMuParams, rng: np.random.Generator, size=None):
    """Draw alpha-mu envelopes."""
    g = rng.gamma(params.mu, 1.0, size=size)
    return params.mean / params.beta * g ** (1.0 / params.alpha)


def alpha_mu_cdf(params: AlphaMuParams, x):
    x = np.asarray(x, dtype=float)
    t = (params.beta * np.clip(x, 0, None) / params.mean) ** params.alpha
    return special.gammainc(params.mu, t)


def sample_mixture_gamma(params: MixtureGammaParams, rng: np.random.Generator, size=None):
    """Pick a component with probability ``w_i``, then draw Gamma(shape, rate)."""
    w = np.array([c[0] for c in params.components])
    shape = np.array([c[1] for c in params.components])
    rate = np.array([c[2] for c in params.components])
    comp = rng.choice(len(w), size=size, p=w)
    return rng.gamma(shape[comp], 1.0 / rate[comp])


def mixture_gamma_cdf(params: MixtureGammaParams, x):
    x = np.clip(np.asarray(x, dtype=float), 0, None)
    return sum(w * special.gammainc(b, z * x) for w, b, z in params.components)


def _magnitudes(fading: Fading, rng, size):
    if isinstance(fading, AlphaMuParams):
        return sample_alpha_mu(fading, rng, size)
    if isinstance(fading, MixtureGammaParams):
        return sample_mixture_gamma(fading, rng, size)
    if isinstance(fading, Rayleigh):
        return np.sqrt(fading.power * rng.exponential(1.0, size=size))
    raise ConfigInvalid(f"unsupported fading law {fading!r}")


@dataclass
class ChannelRealization:
    """Channel matrix (or stack of matrices) plus generation metadata."""

    h: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.h.shape


def gen_fading_matrix(q_r: int, q_t: int, fading: Fading, pathloss: float = 1.0,
                      rng: Optional[np.random.Generator] = None, size=()) -> ChannelRealization:
    """I.i.d. fading matrix with uniform phases.

    Entry magnitudes are ``pathloss * |h_f|`` with ``|h_f|`` drawn from
    ``fading``; ``size`` prepends batch dimensions.
    """
    if q_r < 1 or q_t < 1:
        raise ValueError("dimensions must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    shape = tuple(np.atleast_1d(size).astype(int)) if size != () else ()
    shape = shape + (q_r, q_t)
    mag = _magnitudes(fading, rng, shape)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    h = pathloss * mag * np.exp(1j * phase)
    return ChannelRealization(h=h, meta={"model": type(fading).__name__,
                                         "pathloss": pathloss})


def mean_entry_power(fading: Fading, pathloss: float = 1.0) -> float:
    """``E|h|^2`` of :func:`gen_fading_matrix` entries."""
    return pathloss**2 * fading.moment(2)


# ------------------------------------------------------------- correlation


@dataclass(frozen=True)
class CorrelationSpec:
    rho_r: float = 0.0
    rho_t: float = 0.0

    def __post_init__(self):
        for rho in (self.rho_r, self.rho_t):
            if not 0.0 <= rho <= 1.0:
                raise ValueError("correlation coefficients must lie in [0, 1]")


def exponential_correlation(n: int, rho: float) -> np.ndarray:
    """``R[i, j] = rho**|i - j|``."""
    idx = np.arange(n)
    return float(rho) ** np.abs(idx[:, None] - idx[None, :])


def psd_sqrt(r: np.ndarray, clip: float = -1e-12) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[clip, 0)`` are treated as round-off and set to zero;
    anything more negative raises :class:`NotPSD`.
    """
    r = np.asarray(r)
    vals, vecs = np.linalg.eigh((r + r.conj().T) / 2)
    if np.any(vals < clip * max(1.0, np.abs(vals).max())):
        raise NotPSD(f"smallest eigenvalue {vals.min():.3e}")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def apply_correlation(h, spec: CorrelationSpec):
    """``R_r^{1/2} H R_t^{1/2}`` for exponential correlation matrices."""
    real = h if isinstance(h, ChannelRealization) else None
    mat = real.h if real is not None else np.asarray(h)
    q_r, q_t = mat.shape[-2:]
    sr = psd_sqrt(exponential_correlation(q_r, spec.rho_r))
    st = psd_sqrt(exponential_correlation(q_t, spec.rho_t))
    out = sr @ mat @ st
    if real is None:
        return out
    meta = dict(real.meta, rho_r=spec.rho_r, rho_t=spec.rho_t)
    return ChannelRealization(h=out, meta=meta)


# -------------------------------------------------------------- geometry


@dataclass(frozen=True)
class ArrayGeometry:
    """Transmit and receive arrays of subarrays facing each other.

    The transmit array lies in the ``x = 0`` plane and the receive array in
    the ``x = D`` plane, both centred on the ``x`` axis.  Subarray grids are
    ``(rows, cols)`` along ``(z, y)``; each SA holds ``ae_per_sa**2``
    elements spaced by ``ae_spacing_m``.  SA spacings are scalars or
    ``(dz, dy)`` pairs.
    """

    sa_grid_t: Tuple[int, int] = (1, 4)
    sa_grid_r: Tuple[int, int] = (1, 4)
    ae_per_sa: int = 1
    ae_spacing_m: float = 0.0
    sa_spacing_t_m: Union[float, Tuple[float, float]] = 1e-2
    sa_spacing_r_m: Union[float, Tuple[float, float]] = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "sa_grid_t", tuple(int(v) for v in self.sa_grid_t))
        object.__setattr__(self, "sa_grid_r", tuple(int(v) for v in self.sa_grid_r))
        for name in ("sa_spacing_t_m", "sa_spacing_r_m"):
            v = getattr(self, name)
            pair = tuple(float(s) for s in v) if np.ndim(v) else (float(v), float(v))
            if len(pair) != 2:
                raise ConfigInvalid(f"{name} must be a scalar or a (dz, dy) pair")
            object.__setattr__(self, name, pair)
        if min(self.sa_grid_t + self.sa_grid_r) < 1 or self.ae_per_sa < 1:
            raise ConfigInvalid("array dimensions must be >= 1")
        if min(self.sa_spacing_t_m + self.sa_spacing_r_m) <= 0:
            raise ConfigInvalid("SA spacings must be positive")
        if self.ae_per_sa > 1 and self.ae_spacing_m <= 0:
            raise ConfigInvalid("AE spacing must be positive")

    @property
    def q_t(self) -> int:
        return self.sa_grid_t[0] * self.sa_grid_t[1]

    @property
    def q_r(self) -> int:
        return self.sa_grid_r[0] * self.sa_grid_r[1]

    @staticmethod
    def _grid(rows, cols, spacing):
        dz, dy = (spacing, spacing) if np.ndim(spacing) == 0 else spacing
        z = (np.arange(rows) - (rows - 1) / 2) * dz
        y = (np.arange(cols) - (cols - 1) / 2) * dy
        zz, yy = np.meshgrid(z, y, indexing="ij")
        return np.stack([np.zeros(zz.size), yy.ravel(), zz.ravel()], axis=-1)

    def tx_positions(self) -> np.ndarray:
        return self._grid(*self.sa_grid_t, self.sa_spacing_t_m)

    def rx_positions(self, distance_m: float) -> np.ndarray:
        pos = self._grid(*self.sa_grid_r, self.sa_spacing_r_m)
        pos[:, 0] = distance_m
        return pos

    def ae_offsets(self) -> np.ndarray:
        """AE offsets inside an SA (in its own y-z plane)."""
        q = self.ae_per_sa
        return self._grid(q, q, self.ae_spacing_m)

    @classmethod
    def tuned(cls, grid_t, grid_r, distance_m: float, carrier_hz: float,
              scale: float = 1.0, z: int = 1):
        """Planar grids with per-axis spacing ``scale * sqrt(z D lambda / n)``.

        ``scale = 1`` gives the orthogonal LoS configuration when transmit and
        receive grids match; smaller scales make the channel ill-conditioned.
        """
        rows, cols = grid_t
        if tuple(grid_r) != tuple(grid_t):
            raise ConfigInvalid("spatial tuning needs identical Tx/Rx grids")
        dz = scale * optimal_spacing(z, distance_m, rows, carrier_hz)
        dy = scale * optimal_spacing(z, distance_m, cols, carrier_hz)
        return cls(sa_grid_t=tuple(grid_t), sa_grid_r=tuple(grid_r),
                   sa_spacing_t_m=(dz, dy), sa_spacing_r_m=(dz, dy))

    @classmethod
    def ula(cls, q_t: int, q_r: int, spacing_t_m: float, spacing_r_m: Optional[float] = None):
        """Uniform linear arrays of single-element subarrays."""
        return cls(sa_grid_t=(1, q_t), sa_grid_r=(1, q_r), ae_per_sa=1,
                   sa_spacing_t_m=spacing_t_m,
                   sa_spacing_r_m=spacing_t_m if spacing_r_m is None else spacing_r_m)


def _direction(az, el):
    """Unit vectors for azimuth (from +x towards +y) and elevation angles."""
    az = np.asarray(az)
    el = np.asarray(el)
    return np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)


def _array_factor(offsets, u, u0, f, f_c, q):
    """Planar-wave SA response with phase shifters steered at the carrier.

    ``(1/Q) sum_p exp(j 2 pi / c (f u - f_c u0) . p)``; frequency offsets from
    the carrier shift the beam (beam split).
    """
    k = (2 * np.pi / C_LIGHT) * (f * np.asarray(u) - f_c * np.asarray(u0))
    return np.exp(1j * (k @ offsets.T)).sum(axis=-1) / q


@dataclass
class MultipathConfig:
    """Parameters of the clustered THz multipath model.

    NLoS ray gains are circular complex Gaussian; cluster ``c`` (0-based)
    carries power proportional to ``exp(-c / cluster_decay)`` and the total
    NLoS power equals ``nlos_power * |los_gain|**2``.  Cluster excess delays
    are exponential with mean ``delay_spread_s``; rays add a uniform offset
    of up to ``ray_delay_spread_s``.  Cluster angles are uniform over
    ``angle_range_deg`` and rays scatter around them with Gaussian spread
    ``angle_spread_deg``.  Delays are measured from the receiver's timing
    reference; ``tau_los_s = 0`` (the default) means a receiver synchronised
    to the LoS arrival.  ``bandwidth_hz = 0`` gives the flat-fading limit in
    which every subcarrier sees the same matrix.
    """

    n_clusters: int = 0
    rays_per_cluster: int = 0
    carrier_hz: float = 0.3e12
    bandwidth_hz: float = 10e9
    n_subcarriers: int = 1
    distance_m: float = 2.0
    los_gain: complex = 1.0
    los: bool = True
    nlos_power: float = 0.1
    cluster_decay: float = 1.0
    delay_spread_s: float = 2e-9
    ray_delay_spread_s: float = 0.2e-9
    angle_range_deg: float = 60.0
    angle_spread_deg: float = 5.0
    tau_los_s: float = 0.0
    gain_t: float = 1.0
    gain_r: float = 1.0

    def __post_init__(self):
        if self.carrier_hz <= 0 or self.bandwidth_hz < 0:
            raise ConfigInvalid("carrier must be positive and bandwidth non-negative")
        if self.n_subcarriers < 1:
            raise ConfigInvalid("need at least one subcarrier")
        if self.n_clusters < 0 or self.rays_per_cluster < 0:
            raise ConfigInvalid("path counts must be non-negative")
        if self.distance_m <= 0:
            raise ConfigInvalid("distance must be positive")
        if self.tau_los_s < 0:
            raise ConfigInvalid("delays must be non-negative")

    @property
    def tau_los(self) -> float:
        return self.tau_los_s

    def subcarrier_freq(self, m) -> np.ndarray:
        return self.carrier_hz + np.asarray(m) * self.bandwidth_hz / self.n_subcarriers


@dataclass
class PathSet:
    """Drawn NLoS paths: one entry per ray."""

    gains: np.ndarray  # complex
    delays_s: np.ndarray
    aod: np.ndarray  # (n, 2) azimuth/elevation, radians, from +x
    aoa: np.ndarray  # (n, 2) arrival direction seen from the receiver, from -x

    def __post_init__(self):
        if np.any(self.delays_s < 0):
            raise ConfigInvalid("delays must be non-negative")

    @property
    def n_paths(self) -> int:
        return len(self.gains)


def draw_paths(cfg: MultipathConfig, rng: np.random.Generator) -> PathSet:
    """Draw the NLoS rays of one channel realisation."""
    n_c, n_r = cfg.n_clusters, cfg.rays_per_cluster
    n = n_c * n_r
    if n == 0:
        empty = np.zeros((0, 2))
        return PathSet(np.zeros(0, complex), np.zeros(0), empty, empty.copy())
    cl_power = np.exp(-np.arange(n_c) / cfg.cluster_decay)
    cl_power *= cfg.nlos_power * abs(cfg.los_gain) ** 2 / cl_power.sum() / n_r
    ray_power = np.repeat(cl_power, n_r)
    gains = np.sqrt(ray_power / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    excess = rng.exponential(cfg.delay_spread_s, size=n_c)
    delays = cfg.tau_los + np.repeat(excess, n_r) + rng.uniform(0, cfg.ray_delay_spread_s, n)
    half = np.deg2rad(cfg.angle_range_deg) / 2
    spread = np.deg2rad(cfg.angle_spread_deg)

    def angles():
        centre = rng.uniform(-half, half, size=(n_c, 2))
        return np.repeat(centre, n_r, axis=0) + spread * rng.standard_normal((n, 2))

    return PathSet(gains=gains, delays_s=delays, aod=angles(), aoa=angles())


def evaluate_paths(cfg: MultipathConfig, geom: ArrayGeometry, paths: PathSet, m) -> np.ndarray:
    """Channel matrices at subcarrier indices ``m`` (scalar or 1-D).

    Returns shape ``(Qr, Qt)`` for scalar ``m`` and ``(len(m), Qr, Qt)``
    otherwise.
    """
    scalar = np.ndim(m) == 0
    ms = np.atleast_1d(np.asarray(m))
    if np.any(ms < 0) or np.any(ms >= cfg.n_subcarriers):
        raise ConfigInvalid(f"subcarrier index out of range [0, {cfg.n_subcarriers})")
    f_c = cfg.carrier_hz
    freqs = cfg.subcarrier_freq(ms)
    offs = cfg.bandwidth_hz / cfg.n_subcarriers * ms
    tx = geom.tx_positions()
    rx = geom.rx_positions(cfg.distance_m)
    ae = geom.ae_offsets()
    q = geom.ae_per_sa
    d_vec = rx[:, None, :] - tx[None, :, :]
    dist = np.linalg.norm(d_vec, axis=-1)
    u_bs = np.array([1.0, 0.0, 0.0])
    out = np.zeros((len(ms), geom.q_r, geom.q_t), dtype=complex)
    for i, (f, df) in enumerate(zip(freqs, offs)):
        h = np.zeros((geom.q_r, geom.q_t), dtype=complex)
        if cfg.los:
            unit = d_vec / dist[..., None]
            a_t = _array_factor(ae, unit, u_bs, f, f_c, q)
            a_r = _array_factor(ae, -unit, -u_bs, f, f_c, q)
            sph = cfg.distance_m / dist * np.exp(
                -2j * np.pi * f * (dist - cfg.distance_m) / C_LIGHT)
            h += (cfg.los_gain * cfg.gain_t * cfg.gain_r * a_r * a_t * sph
                  * np.exp(-2j * np.pi * df * cfg.tau_los))
        if paths.n_paths:
            u_t = _direction(paths.aod[:, 0], paths.aod[:, 1])
            u_r = -_direction(paths.aoa[:, 0], paths.aoa[:, 1])
            # planar wave across SA centres and within each SA
            steer_t = np.exp(2j * np.pi * f / C_LIGHT * (u_t @ tx.T))  # (P, Qt)
            steer_r = np.exp(-2j * np.pi * f / C_LIGHT * (u_r @ rx.T))  # (P, Qr)
            steer_r *= np.exp(2j * np.pi * f / C_LIGHT * (u_r @ np.array([cfg.distance_m, 0, 0])))[:, None]
            a_t = _array_factor(ae, u_t, u_bs, f, f_c, q)
            a_r = _array_factor(ae, -u_r, -u_bs, f, f_c, q)
            coef = (paths.gains * cfg.gain_t * cfg.gain_r * a_t * a_r
                    * np.exp(-2j * np.pi * df * paths.delays_s))
            h += np.einsum("p,pr,pt->rt", coef, steer_r, steer_t)
        out[i] = h
    return out[0] if scalar else out


def gen_thz_multipath(cfg: MultipathConfig, geom: ArrayGeometry, m: int,
                      rng: np.random.Generator) -> ChannelRealization:
    """One SA-level realisation of the clustered multipath model at subcarrier ``m``."""
    paths = draw_paths(cfg, rng)
    return ChannelRealization(h=evaluate_paths(cfg, geom, paths, m),
                              meta={"model": "thz-multipath", "subcarrier": int(m),
                                    "paths": paths})


@dataclass
class WidebandChannel:
    per_subcarrier: np.ndarray  # (M, Qr, Qt)
    subcarrier_spacing_hz: float
    paths: Optional[PathSet] = None

    def __len__(self):
        return len(self.per_subcarrier)


def gen_wideband(cfg: MultipathConfig, geom: ArrayGeometry, rng: np.random.Generator,
                 paths: Optional[PathSet] = None) -> WidebandChannel:
    """All ``M`` subcarriers of one realisation sharing a single path draw."""
    paths = draw_paths(cfg, rng) if paths is None else paths
    hs = evaluate_paths(cfg, geom, paths, np.arange(cfg.n_subcarriers))
    return WidebandChannel(per_subcarrier=hs,
                           subcarrier_spacing_hz=cfg.bandwidth_hz / cfg.n_subcarriers,
                           paths=paths)


def gen_los_channel(geom: ArrayGeometry, distance_m: float, carrier_hz: float,
                    rng: Optional[np.random.Generator] = None,
                    position_jitter_m: float = 0.0) -> ChannelRealization:
    """LoS-only SA-level channel with exact spherical wavefronts.

    Entry ``(r, t)`` is the free-space gain ``lambda / (4 pi d) exp(-j 2 pi d /
    lambda)`` between SA centres (SA-internal beamforming towards broadside).
    ``position_jitter_m`` perturbs every SA centre by a Gaussian offset, which
    needs ``rng``.
    """
    if distance_m <= 0 or carrier_hz <= 0:
        raise ValueError("distance and frequency must be positive")
    lam = C_LIGHT / carrier_hz
    tx = geom.tx_positions()
    rx = geom.rx_positions(distance_m)
    if position_jitter_m:
        if rng is None:
            raise ValueError("position jitter needs an rng")
        tx = tx + position_jitter_m * rng.standard_normal(tx.shape)
        rx = rx + position_jitter_m * rng.standard_normal(rx.shape)
    d_vec = rx[:, None, :] - tx[None, :, :]
    d = np.linalg.norm(d_vec, axis=-1)
    ae = geom.ae_offsets()
    unit = d_vec / d[..., None]
    u_bs = np.array([1.0, 0.0, 0.0])
    a_t = _array_factor(ae, unit, u_bs, carrier_hz, carrier_hz, geom.ae_per_sa)
    a_r = _array_factor(ae, -unit, -u_bs, carrier_hz, carrier_hz, geom.ae_per_sa)
    h = lam / (4 * np.pi * d) * np.exp(-2j * np.pi * d / lam) * a_t * a_r
    return ChannelRealization(h=h, meta={"model": "los", "distance_m": distance_m,
                                         "carrier_hz": carrier_hz})


def delta_opt(z: int, distance_m: float, q_t: int, carrier_hz: float) -> float:
    """``z D c / (Qt f)`` for odd ``z``: the product ``Delta_t * Delta_r`` that
    makes a broadside ULA LoS channel orthogonal."""
    if int(z) != z or z < 1 or z % 2 == 0:
        raise ValueError(f"z must be a positive odd integer, got {z}")
    return z * distance_m * C_LIGHT / (q_t * carrier_hz)


def optimal_spacing(z: int, distance_m: float, q_t: int, carrier_hz: float) -> float:
    """Equal Tx/Rx SA spacing ``sqrt(delta_opt)``."""
    return float(np.sqrt(delta_opt(z, distance_m, q_t, carrier_hz)))


def rayleigh_distance(d_t_m: float, d_r_m: float, wavelength_m: float) -> float:
    """Near/far-field boundary ``2 (D_t + D_r)^2 / lambda``."""
    if min(d_t_m, d_r_m, wavelength_m) <= 0:
        raise ValueError("inputs must be positive")
    return 2.0 * (d_t_m + d_r_m) ** 2 / wavelength_m


def normalize_power(h: np.ndarray, axes=(-2, -1)) -> np.ndarray:
    """Scale so the mean ``|h_ij|^2`` over ``axes`` equals one."""
    p = np.mean(np.abs(h) ** 2, axis=axes, keepdims=True)
    return h / np.sqrt(p)


# ------------------------------------------------------------------- dump


def dump_channel(hs: np.ndarray, fh) -> None:
    """Write ``(M, Qr, Qt)`` (or ``(Qr, Qt)``) matrices as text.

    Header ``"Q_r Q_t M"`` then one ``"re im"`` line per entry, row-major,
    subcarrier after subcarrier.
    """
    hs = np.asarray(hs)
    if hs.ndim == 2:
        hs = hs[None]
    m, q_r, q_t = hs.shape
    fh.write(f"{q_r} {q_t} {m}\n")
    for v in hs.reshape(-1):
        fh.write(f"{float(v.real)!r} {float(v.imag)!r}\n")


def load_channel_dump(fh) -> np.ndarray:
    q_r, q_t, m = (int(v) for v in fh.readline().split())
    vals = np.loadtxt(fh, ndmin=2)
    if vals.shape != (m * q_r * q_t, 2):
        raise ValueError("dump length does not match its header")
    return (vals[:, 0] + 1j * vals[:, 1]).reshape(m, q_r, q_t)
