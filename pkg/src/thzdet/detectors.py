"""MIMO detectors with hard decisions and max-log LLRs.

Every detector works on a single system (``y`` of shape ``(Qr,)``, ``h`` of
shape ``(Qr, Qt)``) or on a stack of independent systems with arbitrary leading
batch dimensions.  Soft outputs follow ``llr = ln P(c=1) / P(c=0)`` in the
max-log form ``(d_0 - d_1) / sigma2`` where ``d_b`` is the smallest metric over
the candidates whose bit equals ``b``; a positive LLR therefore means bit 1.
When a candidate list holds no counter-hypothesis the LLR is clamped to
``+-LLR_MAX``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .constellation import Constellation
from .errors import TooLarge, UnknownScheme
from .linalg import cyclic_permutations, lll_reduce, qrd, sorted_qrd, sqrd_order, wrd

LLR_MAX = 50.0
ML_GUARD = 2**24
# complex entries per chunk of the exhaustive search
_CHUNK_ELEMS = 2**22

__all__ = [
    "LLR_MAX",
    "DetectorInput",
    "DetectionResult",
    "SqldConfig",
    "detect_ml",
    "detect_pml",
    "detect_zf",
    "detect_sic_zf",
    "detect_lr_zf",
    "detect_kbest",
    "detect_lord",
    "detect_vlord",
    "detect_ssd",
    "detect_sqld",
    "sqld_permutations",
    "DETECTORS",
    "run_detector",
]


@dataclass
class DetectorInput:
    """Received vector(s), channel(s), noise variance and constellation.

    ``sigma2`` is the total variance of each complex noise entry,
    ``E|n_i|^2``; it may be a scalar or broadcast against the batch shape.
    """

    y: np.ndarray
    h: np.ndarray
    sigma2: object
    constellation: Constellation

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=complex)
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.ndim < 2 or self.y.shape != self.h.shape[:-1]:
            raise ValueError(
                f"inconsistent shapes y{self.y.shape} and h{self.h.shape}")
        s2 = np.asarray(self.sigma2, dtype=float)
        if np.any(s2 <= 0):
            raise ValueError("sigma2 must be positive")
        self.sigma2 = np.broadcast_to(s2, self.batch_shape)

    @property
    def batch_shape(self):
        return self.h.shape[:-2]

    @property
    def q_t(self) -> int:
        return self.h.shape[-1]


@dataclass
class DetectionResult:
    """Detector output.

    Attributes
    ----------
    indices : ndarray, shape (..., Qt)
        Constellation indices of the hard decision.
    hard : ndarray, shape (..., Qt)
        Hard symbol decisions.
    llrs : ndarray or None, shape (..., nbits, Qt)
        Max-log LLRs, positive for bit 1.
    metric : ndarray, shape (...)
        ``||y - H x_hat||^2``.
    layer_metrics : ndarray or None, shape (..., Qt)
        Best candidate metric of every decomposition, for the layered
        detectors.  LORD and V-LORD report ``||y - H x||^2``; SSD reports its
        punctured metric.
    """

    indices: np.ndarray
    hard: np.ndarray
    llrs: Optional[np.ndarray]
    metric: np.ndarray
    layer_metrics: Optional[np.ndarray] = None

    def bits(self, constellation: Constellation) -> np.ndarray:
        """Hard bits, shape (..., nbits, Qt)."""
        return np.swapaxes(constellation.indices_to_bits(self.indices), -1, -2)


@dataclass(frozen=True)
class SqldConfig:
    """``eta`` punctured layers, ``sorting`` column-ordering criterion.

    ``placement`` selects how a root column reaches the last position:
    ``"shift"`` moves it there and keeps the other columns in sorted order,
    ``"swap"`` exchanges it with the column currently last.
    """

    eta: int = 0
    sorting: str = "vblast"
    placement: str = "shift"


# ---------------------------------------------------------------- helpers


def _herm(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _metric(y, h, x):
    r = y - np.einsum("...ij,...j->...i", h, x)
    return np.sum(np.abs(r) ** 2, axis=-1)


def _llrs_from_symbol_metrics(dsym, const: Constellation, sigma2):
    """LLRs from per-symbol-value minimum metrics.

    ``dsym[..., t, k]`` is the smallest metric among candidates with symbol
    ``t`` equal to point ``k`` (``inf`` when none exists).
    """
    masks = const.masks  # (nbits, 2, K)
    big = np.where(masks[None, :, :, :], dsym[..., :, None, None, :], np.inf)
    dmin = big.min(axis=-1)  # (..., Qt, nbits, 2)
    d0, d1 = dmin[..., 0], dmin[..., 1]
    s2 = np.asarray(sigma2)[..., None, None]
    with np.errstate(invalid="ignore"):
        llr = (d0 - d1) / s2
    llr = np.where(np.isinf(d1) & np.isfinite(d0), -LLR_MAX, llr)
    llr = np.where(np.isinf(d0) & np.isfinite(d1), LLR_MAX, llr)
    return np.swapaxes(llr, -1, -2)


def _list_symbol_metrics(cand_idx, metrics, order):
    """Reduce a candidate list to ``dsym`` (see above).

    cand_idx : (..., S, Qt) indices; metrics : (..., S).
    """
    onehot = cand_idx[..., None] == np.arange(order)
    vals = np.where(onehot, metrics[..., :, None, None], np.inf)
    return vals.min(axis=-3)


def _result(inp, indices, llrs, layer_metrics=None):
    const = inp.constellation
    hard = const.points[indices]
    metric = _metric(inp.y, inp.h, hard)
    return DetectionResult(indices=indices, hard=hard, llrs=llrs, metric=metric,
                           layer_metrics=layer_metrics)


def _flat(inp):
    """Flatten batch dims; returns (y, h, sigma2, batch_shape)."""
    shape = inp.batch_shape
    n = int(np.prod(shape)) if shape else 1
    y = inp.y.reshape(n, inp.y.shape[-1])
    h = inp.h.reshape((n,) + inp.h.shape[-2:])
    s2 = np.reshape(inp.sigma2, n)
    return y, h, s2, shape


def _unflat(arr, shape):
    return arr.reshape(tuple(shape) + arr.shape[1:])


# ----------------------------------------------------------- exhaustive


def _exhaustive(y, h, const: Constellation, guard: int):
    """Full lattice search of ``||y - h x||^2``; flat batch in, flat out."""
    q_t = h.shape[-1]
    n_cand = const.order**q_t
    if n_cand > guard:
        raise TooLarge(f"{n_cand} candidates exceed the guard {guard}")
    cand_idx = const.candidate_indices(q_t)
    cands = const.points[cand_idx]  # (C, Qt)
    n = y.shape[0]
    per = max(1, _CHUNK_ELEMS // (n_cand * y.shape[-1]))
    best = np.empty(n, dtype=np.intp)
    best_d = np.empty(n)
    dsym = np.empty((n, q_t, const.order))
    for lo in range(0, n, per):
        hi = min(n, lo + per)
        hx = np.einsum("bij,cj->bci", h[lo:hi], cands)
        d = np.sum(np.abs(y[lo:hi, None, :] - hx) ** 2, axis=-1)
        best[lo:hi] = np.argmin(d, axis=-1)
        best_d[lo:hi] = d[np.arange(hi - lo), best[lo:hi]]
        cube = d.reshape((hi - lo,) + (const.order,) * q_t)
        for t in range(q_t):
            axes = tuple(1 + a for a in range(q_t) if a != t)
            dsym[lo:hi, t] = cube.min(axis=axes) if axes else cube
    return cand_idx[best], best_d, dsym


def detect_ml(inp: DetectorInput, guard: int = ML_GUARD) -> DetectionResult:
    """Exhaustive maximum-likelihood detection with max-log LLRs.

    Raises
    ------
    TooLarge
        If ``|X|**Qt`` exceeds ``guard``.
    """
    y, h, s2, shape = _flat(inp)
    idx, _, dsym = _exhaustive(y, h, inp.constellation, guard)
    llrs = _llrs_from_symbol_metrics(dsym, inp.constellation, s2)
    return _result(inp, _unflat(idx, shape), _unflat(llrs, shape))


def detect_pml(inp: DetectorInput, guard: int = ML_GUARD) -> DetectionResult:
    """Punctured ML: exhaustive search of ``||W^H y - R_dot x||^2``."""
    y, h, s2, shape = _flat(inp)
    dec = wrd(h)
    y_t = np.einsum("bij,bi->bj", np.conj(dec.w), y)
    idx, _, dsym = _exhaustive(y_t, dec.r_dot, inp.constellation, guard)
    llrs = _llrs_from_symbol_metrics(dsym, inp.constellation, s2)
    return _result(inp, _unflat(idx, shape), _unflat(llrs, shape))


# --------------------------------------------------------------- linear


def _per_stream(z, var, const, s2):
    """Slice per-stream estimates and compute their scalar LLRs."""
    dsym = np.abs(z[..., None] - const.points) ** 2
    idx = np.argmin(dsym, axis=-1)
    masks = const.masks
    big = np.where(masks[None, None], dsym[..., None, None, :], np.inf).min(axis=-1)
    llr = (big[..., 0] - big[..., 1]) / (np.asarray(s2)[:, None, None] * var[..., None])
    return idx, np.swapaxes(llr, -1, -2)


def detect_zf(inp: DetectorInput) -> DetectionResult:
    """Zero-forcing with per-stream slicing.

    The post-filter noise variance of stream ``i`` is
    ``sigma2 * [(H^H H)^-1]_ii`` evaluated on the actual channel.
    """
    y, h, s2, shape = _flat(inp)
    dec = qrd(h)
    eye = np.broadcast_to(np.eye(inp.q_t, dtype=complex), dec.r.shape)
    r_inv = np.linalg.solve(dec.r, eye)
    z = np.einsum("bij,bj->bi", r_inv, np.einsum("bji,bj->bi", np.conj(dec.q), y))
    var = np.sum(np.abs(r_inv) ** 2, axis=-1)
    idx, llrs = _per_stream(z, var, inp.constellation, s2)
    return _result(inp, _unflat(idx, shape), _unflat(llrs, shape))


def _back_substitute(y_t, r, const, root=None):
    """Successive slicing from the last layer upwards.

    ``root`` fixes the last layer to the given indices (shape (B, S)) and the
    remaining layers are computed for each of the ``S`` hypotheses.
    Returns indices (B, S, Qt) in decomposition order and the per-layer
    interference-cancelled estimates.
    """
    b, q_t = y_t.shape
    pts = const.points
    if root is None:
        root_idx = None
        s = 1
    else:
        root_idx = np.asarray(root)
        s = root_idx.shape[-1]
    idx = np.zeros((b, s, q_t), dtype=np.intp)
    x = np.zeros((b, s, q_t), dtype=complex)
    z_all = np.zeros((b, s, q_t), dtype=complex)
    start = q_t - 1
    if root_idx is not None:
        idx[:, :, start] = root_idx
        x[:, :, start] = pts[root_idx]
        z_all[:, :, start] = y_t[:, None, start] / r[:, None, start, start]
        start -= 1
    for q in range(start, -1, -1):
        interf = np.einsum("be,bse->bs", r[:, q, q + 1:], x[:, :, q + 1:])
        z = (y_t[:, None, q] - interf) / r[:, None, q, q]
        z_all[:, :, q] = z
        k = const.slice(z)
        idx[:, :, q] = k
        x[:, :, q] = pts[k]
    return idx, x, z_all


def detect_sic_zf(inp: DetectorInput, sorted: bool = False) -> DetectionResult:
    """QR-based successive interference cancellation (ZF-SIC).

    With ``sorted=True`` the sorted QRD sets the detection order.  Soft
    outputs are scalar LLRs of each interference-cancelled layer with noise
    variance ``sigma2 / r_qq^2``.
    """
    y, h, s2, shape = _flat(inp)
    dec = sorted_qrd(h) if sorted else qrd(h)
    y_t = np.einsum("bji,bj->bi", np.conj(dec.q), y)
    idx_p, _, z = _back_substitute(y_t, dec.r, inp.constellation)
    diag = np.abs(np.diagonal(dec.r, axis1=-2, axis2=-1))
    _, llr_p = _per_stream(z[:, 0], 1.0 / diag**2, inp.constellation, s2)
    idx = np.empty_like(idx_p[:, 0])
    np.put_along_axis(idx, dec.perm, idx_p[:, 0], axis=-1)
    llrs = np.empty_like(llr_p)
    perm_b = np.broadcast_to(dec.perm[:, None, :], llr_p.shape)
    np.put_along_axis(llrs, perm_b, llr_p, axis=-1)
    return _result(inp, _unflat(idx, shape), _unflat(llrs, shape))


# ------------------------------------------------------- lattice reduction


def _lr_zf_single(y, red, const: Constellation):
    """LLL-aided ZF on one system given its reduced basis; returns indices."""
    # complex channels are reduced through their real embedding
    q_t = red.basis.shape[1] // 2
    levels = const.levels
    a = const.spacing / 2.0
    y_r = np.concatenate([y.real, y.imag])
    h_r = red.basis
    # x_real = a (L-1) 1 - 2 a u  with integer level positions u in [0, L-1]
    y_shift = (a * (levels - 1) * h_r.sum(axis=1) - y_r) / (2.0 * a)
    z = np.linalg.lstsq(red.h_reduced, y_shift, rcond=None)[0]
    u = red.unimodular @ np.rint(z)
    u = np.clip(u, 0, levels - 1)
    x_r = a * (levels - 1) - 2.0 * a * u
    x = x_r[:q_t] + 1j * x_r[q_t:]
    return const.slice(x)


def detect_lr_zf(inp: DetectorInput, delta: float = 0.75) -> DetectionResult:
    """Lattice-reduction-aided zero forcing.

    The channel is LLL-reduced in its real embedding, ZF is applied on the
    reduced basis in the shifted-and-scaled integer lattice, the rounded
    solution is mapped back through the unimodular transform and clipped to
    the constellation.  Soft outputs are list LLRs over the hard decision and
    all of its single-symbol neighbours.
    """
    y, h, s2, shape = _flat(inp)
    const = inp.constellation
    n, q_t = y.shape[0], inp.q_t
    idx = np.empty((n, q_t), dtype=np.intp)
    # deterministic channels repeat across a batch; reduce each one once
    cache: Dict[bytes, object] = {}
    for b in range(n):
        key = h[b].tobytes()
        if key not in cache:
            cache[key] = lll_reduce(h[b], delta=delta)
        idx[b] = _lr_zf_single(y[b], cache[key], const)
    # neighbour list: hard decision with one symbol replaced by every point
    k = const.order
    cand = np.repeat(idx[:, None, :], q_t * k, axis=1)
    rows = np.arange(q_t * k)
    cand[:, rows, rows // k] = rows % k
    metrics = _metric(y[:, None, :], h[:, None], const.points[cand])
    dsym = _list_symbol_metrics(cand, metrics, k)
    llrs = _llrs_from_symbol_metrics(dsym, const, s2)
    return _result(inp, _unflat(idx, shape), _unflat(llrs, shape))


# ---------------------------------------------------------------- K-Best


def detect_kbest(inp: DetectorInput, k: int = 16) -> DetectionResult:
    """Breadth-first K-Best tree search on the unsorted QRD.

    LLRs come from the final survivor list; missing counter-hypotheses are
    clamped to ``+-LLR_MAX``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    y, h, s2, shape = _flat(inp)
    const = inp.constellation
    pts = const.points
    dec = qrd(h)
    r = dec.r
    y_t = np.einsum("bji,bj->bi", np.conj(dec.q), y)
    n, q_t = y_t.shape
    order = const.order
    surv = np.zeros((n, 1, 0), dtype=np.intp)
    metric = np.zeros((n, 1))
    for q in range(q_t - 1, -1, -1):
        xs = pts[surv]  # (n, S, depth) holding layers q+1..Qt-1
        interf = np.einsum("be,bse->bs", r[:, q, q + 1:], xs)
        z = y_t[:, None, q] - interf
        inc = np.abs(z[..., None] - r[:, None, q, q, None] * pts) ** 2
        cand_metric = (metric[..., None] + inc).reshape(n, -1)
        s = surv.shape[1]
        keep = min(k, s * order)
        sel = np.argsort(cand_metric, axis=-1, kind="stable")[:, :keep]
        parent = sel // order
        child = sel % order
        surv = np.concatenate(
            [child[..., None], np.take_along_axis(surv, parent[..., None], axis=1)],
            axis=-1)
        metric = np.take_along_axis(cand_metric, sel, axis=-1)
    # surv[..., 0] is layer 0 now; columns already in natural order
    best = surv[:, 0]
    dsym = _list_symbol_metrics(surv, metric, order)
    llrs = _llrs_from_symbol_metrics(dsym, const, s2)
    return _result(inp, _unflat(best, shape), _unflat(llrs, shape))


# ------------------------------------------------------ layered detectors


@dataclass
class _Layer:
    """Candidates of one decomposition (flat batch)."""

    root: np.ndarray  # (B,) original column index searched exhaustively
    cand_idx: np.ndarray  # (B, K, Qt) original column order
    metrics: np.ndarray  # (B, K) metric in this decomposition's space


def _batch_perm(perm, n):
    return np.broadcast_to(np.asarray(perm, dtype=np.intp), (n, np.shape(perm)[-1]))


def _unpermute(idx_p, perm):
    """Scatter ``(B, K, Qt)`` permuted-order indices back to column order."""
    out = np.empty_like(idx_p)
    np.put_along_axis(out, np.broadcast_to(perm[:, None, :], idx_p.shape), idx_p, axis=-1)
    return out


def _lord_layer(y, h, perm, const: Constellation) -> _Layer:
    perm = _batch_perm(perm, y.shape[0])
    dec = qrd(h, perm=perm)
    y_t = np.einsum("bji,bj->bi", np.conj(dec.q), y)
    n = y.shape[0]
    roots = np.broadcast_to(np.arange(const.order), (n, const.order))
    idx_p, x_p, _ = _back_substitute(y_t, dec.r, const, root=roots)
    resid = np.sum(np.abs(y) ** 2, axis=-1) - np.sum(np.abs(y_t) ** 2, axis=-1)
    rx = np.einsum("bij,bsj->bsi", dec.r, x_p)
    metrics = np.sum(np.abs(y_t[:, None, :] - rx) ** 2, axis=-1) + resid[:, None]
    return _Layer(root=perm[:, -1].copy(), cand_idx=_unpermute(idx_p, perm), metrics=metrics)


def _ssd_layer(y, h, perm, const: Constellation) -> _Layer:
    perm = _batch_perm(perm, y.shape[0])
    dec = wrd(h, perm=perm)
    rd = dec.r_dot
    y_t = np.einsum("bji,bj->bi", np.conj(dec.w), y)
    n, q_t = y_t.shape
    pts = const.points
    k = const.order
    idx_p = np.empty((n, k, q_t), dtype=np.intp)
    idx_p[:, :, -1] = np.arange(k)
    x_root = pts[None, :]
    last = q_t - 1
    # punctured rows decouple once the root symbol is fixed
    z = (y_t[:, None, :last] - rd[:, None, :last, last] * x_root[..., None]) / \
        np.diagonal(rd, axis1=-2, axis2=-1)[:, None, :last]
    idx_p[:, :, :last] = const.slice(z)
    x_p = pts[idx_p]
    rx = np.einsum("bij,bsj->bsi", rd, x_p)
    metrics = np.sum(np.abs(y_t[:, None, :] - rx) ** 2, axis=-1)
    return _Layer(root=perm[:, -1].copy(), cand_idx=_unpermute(idx_p, perm), metrics=metrics)


def _run_layers(fns, workers: int):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(lambda f: f(), fns))
    return [f() for f in fns]


def _layered(inp, perms, kinds, workers=0, order=None):
    """Run one decomposition per permutation; ``kinds[l]`` is 'qrd' or 'wrd'."""
    y, h, s2, shape = _flat(inp)
    const = inp.constellation
    q_t = inp.q_t
    perms = [np.asarray(p, dtype=np.intp) for p in perms]
    roots = np.sort(np.stack([np.broadcast_to(p[..., -1], y.shape[:1]) for p in perms],
                             axis=-1), axis=-1)
    if len(perms) != q_t or np.any(roots != np.arange(q_t)):
        raise ValueError("permutations must root every column exactly once")
    seq = list(range(len(perms))) if order is None else list(order)
    fns = []
    for l in seq:
        fn = _lord_layer if kinds[l] == "qrd" else _ssd_layer
        fns.append(lambda fn=fn, p=perms[l]: fn(y, h, p, const))
    done = _run_layers(fns, workers)
    layers: List[Optional[_Layer]] = [None] * len(perms)
    for l, lay in zip(seq, done):
        layers[l] = lay
    n = y.shape[0]
    idx = np.empty((n, q_t), dtype=np.intp)
    dsym = np.empty((n, q_t, const.order))
    layer_metrics = np.empty((n, q_t))
    rows = np.arange(n)
    for lay in layers:
        best = np.argmin(lay.metrics, axis=-1)
        idx[rows, lay.root] = best
        dsym[rows, lay.root] = lay.metrics
        layer_metrics[rows, lay.root] = lay.metrics[rows, best]
    llrs = _llrs_from_symbol_metrics(dsym, const, s2)
    return layers, idx, llrs, layer_metrics, (y, h, s2, shape)


def detect_lord(inp: DetectorInput, perms: Optional[Sequence] = None,
                workers: int = 0) -> DetectionResult:
    """Layered orthogonal lattice detector.

    One QRD per permutation (cyclic by default, each rooting a different
    column).  The root symbol is searched over the whole constellation, the
    remaining layers are sliced successively, and decomposition ``l`` gives
    the hard decision and LLRs of the symbol it places at the root.
    """
    q_t = inp.q_t
    perms = cyclic_permutations(q_t) if perms is None else perms
    _, idx, llrs, lm, (_, _, _, shape) = _layered(inp, perms, ["qrd"] * q_t, workers)
    return _result(inp, _unflat(idx, shape), _unflat(llrs, shape), _unflat(lm, shape))


def detect_vlord(inp: DetectorInput, perms: Optional[Sequence] = None,
                 workers: int = 0) -> DetectionResult:
    """LORD with global minimum-distance selection across decompositions.

    Every QRD preserves ``||y - Hx||^2`` so all ``Qt * |X|`` candidates share a
    metric; the hard output is the global best and the LLRs are taken over
    the union of the candidate lists.
    """
    q_t = inp.q_t
    perms = cyclic_permutations(q_t) if perms is None else perms
    layers, _, _, lm, (y, h, s2, shape) = _layered(inp, perms, ["qrd"] * q_t, workers)
    cand = np.concatenate([lay.cand_idx for lay in layers], axis=1)
    metrics = np.concatenate([lay.metrics for lay in layers], axis=1)
    best = np.argmin(metrics, axis=-1)
    idx = cand[np.arange(cand.shape[0]), best]
    dsym = _list_symbol_metrics(cand, metrics, inp.constellation.order)
    llrs = _llrs_from_symbol_metrics(dsym, inp.constellation, s2)
    return _result(inp, _unflat(idx, shape), _unflat(llrs, shape), _unflat(lm, shape))


def detect_ssd(inp: DetectorInput, perms: Optional[Sequence] = None,
               workers: int = 0, order: Optional[Sequence[int]] = None) -> DetectionResult:
    """Subspace detector over punctured (WRD) decompositions.

    Same structure as LORD, but after fixing the root symbol every other
    layer is sliced independently, and each decomposition's LLRs live in its
    own (non-unitary) metric space.  ``order`` and ``workers`` control the
    execution order of the decompositions; results do not depend on them.
    """
    q_t = inp.q_t
    perms = cyclic_permutations(q_t) if perms is None else perms
    _, idx, llrs, lm, (_, _, _, shape) = _layered(inp, perms, ["wrd"] * q_t, workers,
                                                  order=order)
    return _result(inp, _unflat(idx, shape), _unflat(llrs, shape), _unflat(lm, shape))


def sqld_permutations(h, placement: str = "shift") -> np.ndarray:
    """Per-layer permutations ``Pi_S P_l`` of the sorted-QR layered detector.

    Row ``j`` of the result is the sorted order with sorted position ``j``
    brought to the last (root) position, either by a cyclic shift of the
    tail (``"shift"``, the rest stays sorted) or by a transposition
    (``"swap"``).  Shape ``(..., Qt, Qt)``.
    """
    p_s = sqrd_order(h)
    q_t = p_s.shape[-1]
    perms = np.repeat(p_s[..., None, :], q_t, axis=-2)
    for j in range(q_t):
        if placement == "shift":
            perms[..., j, j:q_t - 1] = p_s[..., j + 1:]
        elif placement == "swap":
            perms[..., j, j] = p_s[..., q_t - 1]
        else:
            raise ValueError(f"unknown placement {placement!r}")
        perms[..., j, q_t - 1] = p_s[..., j]
    return perms


def detect_sqld(inp: DetectorInput, cfg: SqldConfig = SqldConfig(),
                workers: int = 0) -> DetectionResult:
    """Sorted-QR layered detector.

    Columns are sorted by the sorted QRD; decomposition ``j`` (0-based) roots
    the column at sorted position ``j``.  The last ``eta`` decompositions
    (``j >= Qt - eta``) use the punctured WRD and SSD-style detection, the
    first ``Qt - eta`` use QRD and LORD-style detection, so ``eta = 0`` is
    sorted LORD and ``eta = Qt`` is sorted SSD.
    """
    q_t = inp.q_t
    if not 0 <= cfg.eta <= q_t:
        raise ValueError(f"eta must lie in [0, {q_t}]")
    if cfg.sorting != "vblast":
        raise ValueError(f"unknown sorting criterion {cfg.sorting!r}")
    kinds = ["wrd" if j >= q_t - cfg.eta else "qrd" for j in range(q_t)]
    y, h, s2, shape = _flat(inp)
    perms_all = sqld_permutations(h, cfg.placement)  # (B, Qt, Qt), rows = layers
    flat_inp = DetectorInput(y=y, h=h, sigma2=s2, constellation=inp.constellation)
    perms = [perms_all[:, j] for j in range(q_t)]
    _, idx, llrs, lm, _ = _layered(flat_inp, perms, kinds, workers)
    return _result(inp, _unflat(idx, shape), _unflat(llrs, shape), _unflat(lm, shape))


# -------------------------------------------------------------- registry


DETECTORS: Dict[str, Callable[..., DetectionResult]] = {
    "ml": lambda inp, **kw: detect_ml(inp, **kw),
    "pml": lambda inp, **kw: detect_pml(inp, **kw),
    "zf": lambda inp, **kw: detect_zf(inp),
    "sic": lambda inp, **kw: detect_sic_zf(inp, sorted=False),
    "sic-sorted": lambda inp, **kw: detect_sic_zf(inp, sorted=True),
    "lr-zf": lambda inp, **kw: detect_lr_zf(inp, **kw),
    "kbest": lambda inp, **kw: detect_kbest(inp, **kw),
    "lord": lambda inp, **kw: detect_lord(inp, **kw),
    "vlord": lambda inp, **kw: detect_vlord(inp, **kw),
    "ssd": lambda inp, **kw: detect_ssd(inp, **kw),
    "sqld": lambda inp, eta=0, sorting="vblast", placement="shift", **kw: detect_sqld(
        inp, SqldConfig(eta=eta, sorting=sorting, placement=placement), **kw),
}


def run_detector(name: str, inp: DetectorInput, **params) -> DetectionResult:
    """Dispatch by configuration name (``"ml"``, ``"lord"``, ...)."""
    try:
        fn = DETECTORS[name]
    except KeyError:
        raise UnknownScheme(f"unknown detector {name!r}") from None
    return fn(inp, **params)
