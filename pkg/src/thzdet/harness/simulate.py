"""Monte Carlo engine: BER sweeps, wideband reuse and PEP experiments.

Randomness is organised in chunks.  Chunk ``c`` of SNR point ``p`` draws
everything (channels, symbols, noise) from a generator seeded with
``(seed, p, c)``, so results depend neither on the number of workers nor on
which worker ran a chunk.  Chunks are reduced in index order and the
early-stopping rule is applied chunk by chunk during that reduction.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .. import analysis
from ..channel import (AlphaMuParams, ArrayGeometry, CorrelationSpec, MixtureGammaParams,
                       MultipathConfig, Rayleigh, apply_correlation, evaluate_paths,
                       draw_paths, gen_fading_matrix, gen_los_channel, mean_entry_power,
                       normalize_power)
from ..complexity import flops_detector, reuse_plan
from ..constellation import get_constellation
from ..detectors import DetectorInput, run_detector
from ..errors import ConfigInvalid, ThzdetError
from .config import SimulationConfig, config_hash

__all__ = [
    "ResultRecord",
    "PepRecord",
    "FlopsRecord",
    "snr_to_sigma2",
    "make_sampler",
    "make_wideband_sampler",
    "run_ber_sweep",
    "run_wideband_reuse",
    "run_pep_experiment",
    "draw_channels",
]

Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass
class ResultRecord:
    """One (detector, SNR) point.  ``failed`` holds an error message if the
    detector raised; the point then reports ``nan`` rates."""

    detector: str
    snr_db: float
    ber: float
    ser: float
    trials: int
    bit_errors: int
    wall_time_s: float
    config_hash: str
    failed: Optional[str] = field(default=None, compare=False)


@dataclass
class PepRecord:
    snr_db: float
    quantity: str
    estimate: float
    method: str
    trials: int
    stderr: float


@dataclass
class FlopsRecord:
    scheme: str
    reuse: float
    m_subcarriers: int
    radd: int
    rmul: int


def snr_to_sigma2(snr_db: float, q_t: int) -> float:
    """``sigma^2 = Qt / SNR`` for unit-energy symbols on unit-power channels."""
    return q_t / 10.0 ** (snr_db / 10.0)


# ---------------------------------------------------------------- channels


def _fading(ch: dict):
    model = ch["model"]
    if model == "rayleigh":
        return Rayleigh(float(ch.get("power", 1.0)))
    if model == "alpha-mu":
        return AlphaMuParams(float(ch.get("alpha", 2.0)), float(ch.get("mu", 1.0)),
                             float(ch.get("mean", 1.0)))
    if model == "mixture-gamma":
        comps = ch.get("components")
        if not comps:
            raise ConfigInvalid("mixture-gamma needs components")
        return MixtureGammaParams(tuple(tuple(float(v) for v in c) for c in comps))
    raise ConfigInvalid(f"model {model!r} has no fading law")


def _geometry(ch: dict) -> ArrayGeometry:
    geo = ch["geometry"]
    grid_t, grid_r = tuple(geo["sa_grid_t"]), tuple(geo["sa_grid_r"])
    ae = int(geo.get("ae_per_sa", 1))
    ae_sp = float(geo.get("ae_spacing_m", 0.0))
    if "spacing_t_m" in geo or "spacing_r_m" in geo:
        sp_t = geo.get("spacing_t_m", geo.get("spacing_r_m"))
        sp_r = geo.get("spacing_r_m", sp_t)
        return ArrayGeometry(grid_t, grid_r, ae, ae_sp, sp_t, sp_r)
    tuned = ArrayGeometry.tuned(grid_t, grid_r, float(ch.get("distance_m", 2.0)),
                                float(ch.get("carrier_hz", 0.3e12)),
                                scale=float(geo.get("scale", 1.0)))
    return ArrayGeometry(grid_t, grid_r, ae, ae_sp, tuned.sa_spacing_t_m,
                         tuned.sa_spacing_r_m)


def _multipath_cfg(ch: dict, n_subcarriers: int = 1, bandwidth_hz: float = 10e9):
    keys = ("n_clusters", "rays_per_cluster", "nlos_power", "delay_spread_s",
            "ray_delay_spread_s", "angle_range_deg", "angle_spread_deg")
    kw = {k: ch[k] for k in keys if k in ch}
    return MultipathConfig(carrier_hz=float(ch.get("carrier_hz", 0.3e12)),
                           distance_m=float(ch.get("distance_m", 2.0)),
                           n_subcarriers=n_subcarriers, bandwidth_hz=bandwidth_hz, **kw)


def _normalize(h, ch, fading=None):
    mode = ch["normalize"]
    if mode == "realization":
        return normalize_power(h)
    if mode == "expected" and fading is not None:
        return h / np.sqrt(mean_entry_power(fading))
    return h


def make_sampler(cfg: SimulationConfig) -> Sampler:
    """``sampler(rng, n) -> (n, Qr, Qt)`` channel draws for ``cfg.channel``."""
    ch, q_t, q_r = cfg.channel, cfg.q_t, cfg.q_r
    model = ch["model"]
    corr = CorrelationSpec(float(ch.get("rho_r", 0.0)), float(ch.get("rho_t", 0.0)))
    correlated = corr.rho_r > 0 or corr.rho_t > 0

    if model in ("rayleigh", "alpha-mu", "mixture-gamma"):
        fading = _fading(ch)

        def sampler(rng, n):
            h = gen_fading_matrix(q_r, q_t, fading, rng=rng, size=(n,)).h
            if correlated:
                h = apply_correlation(h, corr)
            return _normalize(h, ch, fading)

        return sampler

    geom = _geometry(ch)
    if model == "los":
        jitter = float(ch.get("position_jitter_m", 0.0))
        dist, f = float(ch.get("distance_m", 2.0)), float(ch.get("carrier_hz", 0.3e12))
        if not jitter:
            fixed = _normalize(gen_los_channel(geom, dist, f).h, ch)

            def sampler(rng, n):
                return np.broadcast_to(fixed, (n, q_r, q_t)).copy()

            return sampler

        def sampler(rng, n):
            h = np.stack([gen_los_channel(geom, dist, f, rng, jitter).h for _ in range(n)])
            return _normalize(h, ch)

        return sampler

    mp = _multipath_cfg(ch)

    def sampler(rng, n):
        h = np.stack([evaluate_paths(mp, geom, draw_paths(mp, rng), 0) for _ in range(n)])
        return _normalize(h, ch)

    return sampler


def make_wideband_sampler(cfg: SimulationConfig) -> Callable[[np.random.Generator, int],
                                                               np.ndarray]:
    """``sampler(rng, n) -> (n, M, Qr, Qt)``; one path draw per realisation.

    Normalisation (if any) is over all subcarriers of a realisation, so the
    frequency response keeps its shape.
    """
    ch, wb = cfg.channel, cfg.wideband
    geom = _geometry(ch)
    mp = _multipath_cfg(ch, wb.n_subcarriers, wb.bandwidth_hz)
    ms = np.arange(wb.n_subcarriers)

    def sampler(rng, n):
        h = np.stack([evaluate_paths(mp, geom, draw_paths(mp, rng), ms) for _ in range(n)])
        if ch["normalize"] == "realization":
            h = normalize_power(h, axes=(-3, -2, -1))
        return h

    return sampler


def draw_channels(cfg: SimulationConfig, count: Optional[int] = None) -> np.ndarray:
    """Channel matrices for ``channel-dump``: ``(count, Qr, Qt)`` or, for
    wideband configs, the ``(M, Qr, Qt)`` response of one realisation."""
    rng = np.random.default_rng([cfg.seed, 0, 0])
    if cfg.wideband is not None and cfg.channel["model"] == "multipath":
        return make_wideband_sampler(cfg)(rng, 1)[0]
    return make_sampler(cfg)(rng, cfg.dump_count if count is None else count)


# ------------------------------------------------------------------ chunks


def _chunk_rng(seed: int, point: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng([seed, point, chunk])


def _chunk_sizes(cfg: SimulationConfig, unit: int = 1) -> List[int]:
    """Trial counts of the chunks of one point; each chunk is a multiple of
    ``unit`` trials (one wideband realisation carries ``M`` trials)."""
    per = max(unit, (cfg.chunk_size // unit) * unit)
    n_full, rest = divmod(cfg.max_trials, per)
    sizes = [per] * n_full
    rest = (rest // unit) * unit
    if rest:
        sizes.append(rest)
    if not sizes:
        sizes = [unit]
    return sizes


def _bits_and_syms(const, idx_true, idx_hat):
    sym = int(np.count_nonzero(idx_true != idx_hat))
    bits = int(np.count_nonzero(const.indices_to_bits(idx_true) != const.indices_to_bits(idx_hat)))
    return bits, sym


def _detect_all(cfg, labels_specs, inp_for, idx, const):
    """Run each (label, spec[, h_override]) and return counts per label."""
    out = {}
    for label, spec, h_det in labels_specs:
        t0 = time.perf_counter()
        try:
            inp = inp_for(h_det)
            res = run_detector(spec.name, inp, **spec.params)
            b, s = _bits_and_syms(const, idx, res.indices)
            out[label] = (b, s, time.perf_counter() - t0, None)
        except (ThzdetError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out[label] = (0, 0, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}")
    return out


def _sweep_chunk(args):
    cfg, point, chunk, n, active = args
    const = get_constellation(cfg.constellation)
    rng = _chunk_rng(cfg.seed, point, chunk)
    sigma2 = snr_to_sigma2(cfg.snr_db[point], cfg.q_t)
    h = make_sampler(cfg)(rng, n)
    idx = rng.integers(0, const.order, size=(n, cfg.q_t))
    noise = np.sqrt(sigma2 / 2) * (rng.standard_normal((n, cfg.q_r))
                                   + 1j * rng.standard_normal((n, cfg.q_r)))
    y = np.einsum("bij,bj->bi", h, const.points[idx]) + noise

    def inp_for(_):
        return DetectorInput(y=y, h=h, sigma2=sigma2, constellation=const)

    specs = [(d.label, d, None) for d in cfg.detectors if d.label in active]
    return n, _detect_all(cfg, specs, inp_for, idx, const)


def _wideband_chunk(args):
    cfg, point, chunk, n, active = args
    const = get_constellation(cfg.constellation)
    wb = cfg.wideband
    m = wb.n_subcarriers
    n_real = n // m
    rng = _chunk_rng(cfg.seed, point, chunk)
    sigma2 = snr_to_sigma2(cfg.snr_db[point], cfg.q_t)
    hw = make_wideband_sampler(cfg)(rng, n_real)  # (R, M, Qr, Qt)
    idx = rng.integers(0, const.order, size=(n_real, m, cfg.q_t))
    noise = np.sqrt(sigma2 / 2) * (rng.standard_normal((n_real, m, cfg.q_r))
                                   + 1j * rng.standard_normal((n_real, m, cfg.q_r)))
    y = np.einsum("rmij,rmj->rmi", hw, const.points[idx]) + noise
    y = y.reshape(-1, cfg.q_r)
    idx = idx.reshape(-1, cfg.q_t)

    def inp_for(h_det):
        return DetectorInput(y=y, h=h_det, sigma2=sigma2, constellation=const)

    # reusing a decomposition is detecting with the source subcarrier's matrix
    specs = []
    for p in wb.reuse:
        src = np.asarray(reuse_plan(m, p).source)
        h_det = hw[:, src].reshape(-1, cfg.q_r, cfg.q_t)
        for d in cfg.detectors:
            if _reuse_label(d.label, p) in active:
                specs.append((_reuse_label(d.label, p), d, h_det))
    return n_real * m, _detect_all(cfg, specs, inp_for, idx, const)


def _reuse_label(label: str, p: float) -> str:
    return f"{label}@P={p:g}"


@dataclass
class _Acc:
    trials: int = 0
    bits: int = 0
    syms: int = 0
    wall: float = 0.0
    done: bool = False
    failed: Optional[str] = None


def _run_points(cfg: SimulationConfig, labels: Sequence[str], chunk_fn, unit: int,
                workers: int) -> List[ResultRecord]:
    const = get_constellation(cfg.constellation)
    nbits = const.nbits
    sizes = _chunk_sizes(cfg, unit)
    h = config_hash(cfg)
    records = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers and workers > 1 else None
    try:
        for point, snr in enumerate(cfg.snr_db):
            acc = {lab: _Acc() for lab in labels}
            batch = max(1, workers or 1)
            c = 0
            while c < len(sizes) and not all(a.done for a in acc.values()):
                # draws do not depend on which detectors run, so finished ones are skipped
                active = frozenset(lab for lab, a in acc.items() if not a.done)
                jobs = [(cfg, point, k, sizes[k], active)
                        for k in range(c, min(c + batch, len(sizes)))]
                results = list(pool.map(chunk_fn, jobs)) if pool else [chunk_fn(j) for j in jobs]
                for (n, counts) in results:  # ordered reduction
                    for lab, a in acc.items():
                        if a.done:
                            continue
                        b, s, wall, err = counts[lab]
                        if err is not None:
                            a.failed, a.done = err, True
                            continue
                        a.trials += n
                        a.bits += b
                        a.syms += s
                        a.wall += wall
                        if a.bits >= cfg.target_errors:
                            a.done = True
                c += len(jobs)
            for lab in labels:
                a = acc[lab]
                wall = round(a.wall, 6) if cfg.record_wall_time else 0.0
                if a.failed is not None:
                    records.append(ResultRecord(lab, snr, float("nan"), float("nan"), a.trials,
                                                a.bits, wall, h, failed=a.failed))
                    continue
                ber = a.bits / (a.trials * cfg.q_t * nbits)
                ser = a.syms / (a.trials * cfg.q_t)
                records.append(ResultRecord(lab, snr, ber, ser, a.trials, a.bits, wall, h))
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def run_ber_sweep(cfg: SimulationConfig, workers: int = 1) -> List[ResultRecord]:
    """BER/SER per (detector, SNR) with paired draws across detectors.

    Each detector stops accumulating once it has ``target_errors`` bit
    errors; the run stops when every detector has stopped or the
    ``max_trials`` cap is reached.
    """
    if cfg.kind not in ("sweep", "wideband"):
        raise ConfigInvalid(f"run_ber_sweep needs a sweep config, got {cfg.kind!r}")
    return _run_points(cfg, [d.label for d in cfg.detectors], _sweep_chunk, 1, workers)


def run_wideband_reuse(cfg: SimulationConfig, workers: int = 1
                       ) -> Tuple[List[ResultRecord], List[FlopsRecord]]:
    """Per-subcarrier detection with decompositions shared per the reuse plan.

    Every reuse fraction sees the same channels, symbols and noise.  Returns
    the BER records (labels ``"<detector>@P=<p>"``) and the model FLOPs of
    the detectors that have a closed-form cost.
    """
    if cfg.wideband is None:
        raise ConfigInvalid("no [wideband] table")
    m = cfg.wideband.n_subcarriers
    labels = [_reuse_label(d.label, p) for p in cfg.wideband.reuse for d in cfg.detectors]
    recs = _run_points(cfg, labels, _wideband_chunk, m, workers)
    const = get_constellation(cfg.constellation)
    schemes = {"sic": "sic", "sic-sorted": "sic", "lord": "lord", "vlord": "lord",
               "ssd": "ssd"}
    flops = []
    for d in cfg.detectors:
        scheme = schemes.get(d.name)
        if scheme is None:
            continue
        for p in cfg.wideband.reuse:
            fc = flops_detector(scheme, cfg.q_t, const.order, m, reuse_plan(m, p), q_r=cfg.q_r)
            flops.append(FlopsRecord(d.label, p, m, fc.radd, fc.rmul))
    return recs, flops


def run_pep_experiment(cfg: SimulationConfig) -> List[PepRecord]:
    """Simulated PEPs, upper-bound expressions and the quadrature lower bound.

    ``x1`` is the all-``points[0]`` vector and ``x2`` differs from it at
    ``diff_positions`` (replaced by the nearest distinct point).  The lower
    bound uses the moment-matched law of ``||H||_F^2`` built from the i.i.d.
    per-entry alpha-mu law (Rayleigh is alpha-mu with ``alpha = 2,
    mu = 1``); under correlation it uses the uncorrelated entries.
    """
    if cfg.pep is None:
        raise ConfigInvalid("no [pep] table")
    const = get_constellation(cfg.constellation)
    ch = cfg.channel
    sampler = make_sampler(cfg)
    x1 = np.full(cfg.q_t, const.points[0])
    d_pt = np.abs(const.points - const.points[0])
    d_pt[0] = np.inf
    x2 = x1.copy()
    x2[list(cfg.pep.diff_positions)] = const.points[int(np.argmin(d_pt))]
    d = x1 - x2
    d_norm2 = float(np.vdot(d, d).real)
    if ch["model"] == "rayleigh":
        entry = AlphaMuParams(2.0, 1.0, float(np.sqrt(np.pi * ch.get("power", 1.0)) / 2))
    else:
        entry = _fading(ch)
    if ch["normalize"] == "expected":
        entry = AlphaMuParams(entry.alpha, entry.mu,
                              entry.mean / np.sqrt(entry.moment(2)))
    approx = analysis.moment_match([entry] * (cfg.q_t * cfg.q_r), cfg.pep.psi)
    out = []
    for point, snr in enumerate(cfg.snr_db):
        s2 = snr_to_sigma2(snr, cfg.q_t)
        rng = _chunk_rng(cfg.seed, point, 0)
        ests = {
            "lower_quadrature": analysis.pep_lower_bound(approx, d_norm2, s2),
            "simulated_ml": analysis.pep_simulate(sampler, x1, x2, s2, "ml",
                                                  cfg.pep.sim_trials, rng),
            "upper_ml": analysis.pep_ml_bound(sampler, d, s2, cfg.pep.bound_trials, rng),
            "simulated_pml": analysis.pep_simulate(sampler, x1, x2, s2, "pml",
                                                   cfg.pep.sim_trials, rng),
            "upper_pml": analysis.pep_pml_bound(sampler, d, s2, cfg.pep.bound_trials, rng),
            "pml_true_w": analysis.pep_pml_bound(sampler, d, s2, cfg.pep.bound_trials, rng,
                                                 use_true_w=True),
        }
        for q, e in ests.items():
            out.append(PepRecord(snr, q, e.value, e.method, e.trials_or_nodes, e.stderr))
    return out
