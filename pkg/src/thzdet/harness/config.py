"""TOML experiment configuration.

Schema (every table is optional unless noted; unknown keys are errors)::

    kind = "sweep"              # sweep | pep | wideband | channel-dump
    seed = 7                    # required

    [system]
    q_t = 4
    q_r = 4                     # defaults to q_t
    constellation = "qam4"

    [channel]
    model = "rayleigh"          # rayleigh | alpha-mu | mixture-gamma | los | multipath
    normalize = "expected"      # expected | realization | none
    alpha = 2.0                 # alpha-mu
    mu = 2.0
    mean = 1.0
    power = 1.0                 # rayleigh
    components = [[w, shape, rate], ...]   # mixture-gamma
    rho_r = 0.0                 # exponential correlation
    rho_t = 0.0
    carrier_hz = 0.3e12         # los / multipath
    distance_m = 2.0
    position_jitter_m = 0.0     # los
    n_clusters = 0              # multipath
    rays_per_cluster = 0
    nlos_power = 0.1
    delay_spread_s = 2e-9
    ray_delay_spread_s = 0.2e-9
    angle_range_deg = 60.0
    angle_spread_deg = 5.0

    [channel.geometry]          # los / multipath
    sa_grid_t = [1, 4]
    sa_grid_r = [1, 4]
    scale = 1.0                 # tuned spacing scale * sqrt(D lambda / n)
    spacing_t_m = 0.01          # explicit spacing instead of ``scale``
    spacing_r_m = 0.01
    ae_per_sa = 1
    ae_spacing_m = 0.0

    [sweep]
    snr_db = [0, 3, 6]          # or snr_start / snr_stop / snr_step (stop inclusive)
    target_errors = 200
    max_trials = 1000000
    chunk_size = 1000

    [[detectors]]               # required for sweep and wideband
    name = "lord"
    label = "lord"              # optional, defaults to name (+ parameters)
    # any other key is passed to the detector

    [wideband]
    n_subcarriers = 64
    bandwidth_hz = 10e9         # 0 gives the flat-fading limit
    reuse = [0.0, 0.25, 0.5]

    [pep]
    diff_positions = [0]        # symbols that differ between x1 and x2
    psi = 2
    sim_trials = 100000
    bound_trials = 20000

    [dump]
    count = 1

    [output]
    record_wall_time = true
"""

import copy
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..constellation import get_constellation
from ..detectors import DETECTORS
from ..errors import ConfigInvalid

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

KINDS = ("sweep", "pep", "wideband", "channel-dump")
MODELS = ("rayleigh", "alpha-mu", "mixture-gamma", "los", "multipath")
NORMALIZE = ("expected", "realization", "none")

_TOP = {"kind", "seed", "system", "channel", "sweep", "detectors", "wideband", "pep",
        "dump", "output"}
_SYSTEM = {"q_t", "q_r", "constellation"}
_CHANNEL = {"model", "normalize", "alpha", "mu", "mean", "power", "components", "rho_r",
            "rho_t", "carrier_hz", "distance_m", "position_jitter_m", "n_clusters",
            "rays_per_cluster", "nlos_power", "delay_spread_s", "ray_delay_spread_s",
            "angle_range_deg", "angle_spread_deg", "geometry"}
_GEOMETRY = {"sa_grid_t", "sa_grid_r", "scale", "spacing_t_m", "spacing_r_m", "ae_per_sa",
             "ae_spacing_m"}
_SWEEP = {"snr_db", "snr_start", "snr_stop", "snr_step", "target_errors", "max_trials",
          "chunk_size"}
_WIDEBAND = {"n_subcarriers", "bandwidth_hz", "reuse"}
_PEP = {"diff_positions", "psi", "sim_trials", "bound_trials"}
_DUMP = {"count"}
_OUTPUT = {"record_wall_time"}


def _check_keys(table: dict, allowed: set, where: str) -> None:
    if not isinstance(table, dict):
        raise ConfigInvalid(f"{where} must be a table")
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigInvalid(f"unknown key(s) in {where}: {', '.join(extra)}")


@dataclass(frozen=True)
class DetectorSpec:
    name: str
    label: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class WidebandSpec:
    n_subcarriers: int = 64
    bandwidth_hz: float = 10e9
    reuse: Tuple[float, ...] = (0.0, 0.25, 0.5)


@dataclass(frozen=True)
class PepSpec:
    diff_positions: Tuple[int, ...] = (0,)
    psi: int = 2
    sim_trials: int = 100_000
    bound_trials: int = 20_000


@dataclass(frozen=True)
class SimulationConfig:
    kind: str
    seed: int
    q_t: int
    q_r: int
    constellation: str
    channel: Dict[str, Any]
    detectors: Tuple[DetectorSpec, ...]
    snr_db: Tuple[float, ...]
    target_errors: int = 200
    max_trials: int = 1_000_000
    chunk_size: int = 1000
    wideband: Optional[WidebandSpec] = None
    pep: Optional[PepSpec] = None
    dump_count: int = 1
    record_wall_time: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    def with_seed(self, seed: int) -> "SimulationConfig":
        d = copy.copy(self)
        object.__setattr__(d, "seed", _as_seed(seed))
        return d


def _as_seed(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < 2**64:
        raise ConfigInvalid("seed must be an integer in [0, 2**64)")
    return int(v)


def _pos_int(v, what) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigInvalid(f"{what} must be a positive integer")
    return int(v)


def _snr_grid(sweep: dict) -> Tuple[float, ...]:
    if "snr_db" in sweep:
        if any(k in sweep for k in ("snr_start", "snr_stop", "snr_step")):
            raise ConfigInvalid("give either snr_db or snr_start/snr_stop/snr_step")
        grid = [float(v) for v in sweep["snr_db"]]
    elif "snr_start" in sweep:
        start, stop = float(sweep["snr_start"]), float(sweep.get("snr_stop", sweep["snr_start"]))
        step = float(sweep.get("snr_step", 1.0))
        if step <= 0:
            raise ConfigInvalid("snr_step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        grid = [start + i * step for i in range(max(n, 0))]
    else:
        grid = []
    if not grid:
        raise ConfigInvalid("SNR grid must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigInvalid("SNR grid must be strictly increasing")
    return tuple(grid)


def _detector(entry: dict, i: int) -> DetectorSpec:
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigInvalid(f"detectors[{i}] needs a name")
    name = entry["name"]
    if name not in DETECTORS:
        raise ConfigInvalid(f"detectors[{i}]: unknown detector {name!r}")
    params = {k: v for k, v in entry.items() if k not in ("name", "label")}
    if "label" in entry:
        label = str(entry["label"])
    else:
        label = name + "".join(f"-{k}{v}" for k, v in sorted(params.items()))
    if "," in label or "\n" in label:
        raise ConfigInvalid("detector labels may not contain commas or newlines")
    return DetectorSpec(name=name, label=label, params=params)


def _channel(ch: dict, q_t: int, q_r: int) -> dict:
    _check_keys(ch, _CHANNEL, "[channel]")
    ch = copy.deepcopy(ch)
    model = ch.setdefault("model", "rayleigh")
    if model not in MODELS:
        raise ConfigInvalid(f"unknown channel model {model!r}")
    geometric = model in ("los", "multipath")
    ch.setdefault("normalize", "realization" if geometric else "expected")
    if ch["normalize"] not in NORMALIZE:
        raise ConfigInvalid(f"normalize must be one of {NORMALIZE}")
    for k in ("rho_r", "rho_t"):
        if not 0.0 <= float(ch.get(k, 0.0)) <= 1.0:
            raise ConfigInvalid(f"{k} must lie in [0, 1]")
    if geometric:
        geo = ch.setdefault("geometry", {})
        _check_keys(geo, _GEOMETRY, "[channel.geometry]")
        grid_t = tuple(geo.setdefault("sa_grid_t", [1, q_t]))
        grid_r = tuple(geo.setdefault("sa_grid_r", [1, q_r]))
        if grid_t[0] * grid_t[1] != q_t or grid_r[0] * grid_r[1] != q_r:
            raise ConfigInvalid("SA grids do not match q_t / q_r")
        if "scale" in geo and ("spacing_t_m" in geo or "spacing_r_m" in geo):
            raise ConfigInvalid("give either a tuned scale or explicit spacings")
    elif "geometry" in ch:
        raise ConfigInvalid(f"geometry is not used by the {model!r} model")
    return ch


def parse_config(raw: dict) -> SimulationConfig:
    """Validate a decoded TOML document into a :class:`SimulationConfig`."""
    _check_keys(raw, _TOP, "top level")
    kind = raw.get("kind", "sweep")
    if kind not in KINDS:
        raise ConfigInvalid(f"unknown kind {kind!r}")
    if "seed" not in raw:
        raise ConfigInvalid("seed is required")
    seed = _as_seed(raw["seed"])
    system = raw.get("system", {})
    _check_keys(system, _SYSTEM, "[system]")
    q_t = _pos_int(system.get("q_t", 4), "q_t")
    q_r = _pos_int(system.get("q_r", q_t), "q_r")
    if q_r < q_t:
        raise ConfigInvalid("q_r must be >= q_t")
    const = system.get("constellation", "qam4")
    try:
        get_constellation(const)
    except (KeyError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from None
    channel = _channel(raw.get("channel", {}), q_t, q_r)

    sweep = raw.get("sweep", {})
    _check_keys(sweep, _SWEEP, "[sweep]")
    snr = _snr_grid(sweep) if kind in ("sweep", "pep", "wideband") else (0.0,)
    dets_raw = raw.get("detectors", [])
    if not isinstance(dets_raw, list):
        raise ConfigInvalid("detectors must be an array of tables")
    dets = tuple(_detector(e, i) for i, e in enumerate(dets_raw))
    if kind in ("sweep", "wideband") and not dets:
        raise ConfigInvalid("at least one detector is required")
    labels = [d.label for d in dets]
    if len(set(labels)) != len(labels):
        raise ConfigInvalid("detector labels must be unique")

    wide = None
    if "wideband" in raw:
        w = raw["wideband"]
        _check_keys(w, _WIDEBAND, "[wideband]")
        reuse = tuple(float(p) for p in w.get("reuse", (0.0, 0.25, 0.5)))
        if not reuse or any(not 0 <= p < 1 for p in reuse):
            raise ConfigInvalid("reuse fractions must lie in [0, 1)")
        bw = float(w.get("bandwidth_hz", 10e9))
        if bw < 0:
            raise ConfigInvalid("bandwidth must be non-negative")
        wide = WidebandSpec(_pos_int(w.get("n_subcarriers", 64), "n_subcarriers"), bw, reuse)
    if kind == "wideband":
        if wide is None:
            raise ConfigInvalid("wideband experiments need a [wideband] table")
        if channel["model"] != "multipath":
            raise ConfigInvalid("wideband experiments need the multipath channel model")

    pep = None
    if "pep" in raw or kind == "pep":
        p = raw.get("pep", {})
        _check_keys(p, _PEP, "[pep]")
        pos = tuple(int(v) for v in p.get("diff_positions", (0,)))
        if not pos or any(not 0 <= v < q_t for v in pos) or len(set(pos)) != len(pos):
            raise ConfigInvalid("diff_positions must be distinct indices in [0, q_t)")
        pep = PepSpec(pos, _pos_int(p.get("psi", 2), "psi"),
                      _pos_int(p.get("sim_trials", 100_000), "sim_trials"),
                      _pos_int(p.get("bound_trials", 20_000), "bound_trials"))
        if kind == "pep" and channel["model"] not in ("alpha-mu", "rayleigh"):
            raise ConfigInvalid("PEP experiments need an alpha-mu or rayleigh channel")

    dump = raw.get("dump", {})
    _check_keys(dump, _DUMP, "[dump]")
    out = raw.get("output", {})
    _check_keys(out, _OUTPUT, "[output]")
    rwt = out.get("record_wall_time", True)
    if not isinstance(rwt, bool):
        raise ConfigInvalid("record_wall_time must be a boolean")

    return SimulationConfig(
        kind=kind, seed=seed, q_t=q_t, q_r=q_r, constellation=const, channel=channel,
        detectors=dets, snr_db=snr,
        target_errors=_pos_int(sweep.get("target_errors", 200), "target_errors"),
        max_trials=_pos_int(sweep.get("max_trials", 1_000_000), "max_trials"),
        chunk_size=_pos_int(sweep.get("chunk_size", 1000), "chunk_size"),
        wideband=wide, pep=pep,
        dump_count=_pos_int(dump.get("count", 1), "dump count"),
        record_wall_time=rwt,
    )


def loads_config(text: str) -> SimulationConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"malformed TOML: {exc}") from None
    return parse_config(raw)


def load_config(path) -> SimulationConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigInvalid(f"malformed TOML in {path}: {exc}") from None
    return parse_config(raw)


def config_hash(cfg: SimulationConfig) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON form.

    The output options are excluded so that switching timing on or off does
    not change the identity of an experiment.
    """
    d = cfg.to_dict()
    d.pop("record_wall_time")
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
