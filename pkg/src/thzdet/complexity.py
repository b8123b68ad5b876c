"""FLOPs models for QRD/WRD preprocessing and the SIC, LORD and SSD detectors.

Complex operations are mapped to real ones as 1 complex multiplication =
4 RMUL + 2 RADD and 1 complex addition = 2 RADD.  All polynomial evaluation
uses exact rational arithmetic; counts that fail to be integers raise
:class:`NonInteger`.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DomainError, NonInteger, UnknownScheme

__all__ = [
    "FlopCount",
    "ReusePlan",
    "flops_qrd",
    "flops_wrd",
    "wrd_savings",
    "flops_detector",
    "flops_kbest",
    "reuse_plan",
    "lll_expected_iterations_bound",
    "count_mgs_flops",
    "SCHEMES",
]

SCHEMES = ("sic", "lord", "ssd")


@dataclass(frozen=True)
class FlopCount:
    radd: int
    rmul: int

    def __post_init__(self):
        if self.radd < 0 or self.rmul < 0:
            raise ValueError("FLOP counts must be non-negative")

    @property
    def total(self) -> int:
        return self.radd + self.rmul

    def __add__(self, other: "FlopCount") -> "FlopCount":
        return FlopCount(self.radd + other.radd, self.rmul + other.rmul)


def _int(v: Fraction, what: str) -> int:
    if v.denominator != 1:
        raise NonInteger(f"{what} evaluates to non-integer {v}")
    return int(v)


def _dims(q_r: int, q_t: int) -> None:
    if q_t < 1 or q_r < q_t:
        raise ValueError(f"need q_r >= q_t >= 1, got ({q_r}, {q_t})")


def _qrd_poly(q_r, q_t):
    r, t = Fraction(q_r), Fraction(q_t)
    return 4 * r * t**2 - t**2 - t, 4 * r * t**2 + 3 * t**2


def _wrd_poly(q_r, q_t):
    r, t = Fraction(q_r), Fraction(q_t)
    radd = Fraction(16, 3) * r * t**3 - 10 * r * t**2 + Fraction(8, 3) * r * t - 8 * r
    rmul = Fraction(16, 3) * r * t**3 - 7 * r * t**2 + Fraction(8, 3) * r * t - 20 * r
    return radd, rmul


def flops_qrd(q_r: int, q_t: int) -> FlopCount:
    """``RADD = 4 Qr Qt^2 - Qt^2 - Qt``, ``RMUL = 4 Qr Qt^2 + 3 Qt^2``."""
    _dims(q_r, q_t)
    a, m = _qrd_poly(q_r, q_t)
    return FlopCount(_int(a, "QRD RADD"), _int(m, "QRD RMUL"))


def flops_wrd(q_r: int, q_t: int) -> FlopCount:
    """WRD cost; the cubic polynomials must land on integers.

    Raises
    ------
    NonInteger
        For dimensions where the model is not an integer count, or where it
        turns negative (the model only applies from ``Qt = 3`` upwards).
    """
    _dims(q_r, q_t)
    a, m = _wrd_poly(q_r, q_t)
    a_i, m_i = _int(a, "WRD RADD"), _int(m, "WRD RMUL")
    if a_i < 0 or m_i < 0:
        raise NonInteger(f"WRD model is negative at ({q_r}, {q_t})")
    return FlopCount(a_i, m_i)


def wrd_savings(q_t: int) -> FlopCount:
    """Savings ``Qt^2 - 3 Qt + 2`` RADD and ``2 Qt^2 - 6 Qt + 4`` RMUL."""
    if q_t < 1:
        raise ValueError("q_t must be >= 1")
    return FlopCount(q_t * q_t - 3 * q_t + 2, 2 * q_t * q_t - 6 * q_t + 4)


@dataclass(frozen=True)
class ReusePlan:
    """Which subcarriers recompute their decomposition.

    ``recompute[m]`` is true for recomputed subcarriers; ``source[m]`` is the
    subcarrier whose decomposition subcarrier ``m`` uses.
    """

    m_subcarriers: int
    reduction: Fraction
    recompute: tuple
    source: tuple

    @property
    def delta_m(self) -> float:
        return float(1 / (1 - self.reduction))

    @property
    def n_recomputed(self) -> int:
        return int(sum(self.recompute))


def reuse_plan(m_subcarriers: int, p) -> ReusePlan:
    """Evenly spaced recompute schedule starting at subcarrier 0.

    ``round(M (1 - P))`` subcarriers (at least one) are recomputed at indices
    ``floor(k M / n_rec)``; every other subcarrier reuses the nearest
    preceding recomputed one.
    """
    if m_subcarriers < 1:
        raise ValueError("need at least one subcarrier")
    frac = Fraction(p).limit_denominator(10**6)
    if not 0 <= frac < 1:
        raise ValueError("P must lie in [0, 1)")
    n_rec = max(1, int(round(m_subcarriers * (1 - frac))))
    rec_idx = sorted({(k * m_subcarriers) // n_rec for k in range(n_rec)})
    recompute = [False] * m_subcarriers
    for i in rec_idx:
        recompute[i] = True
    source = []
    last = 0
    for m in range(m_subcarriers):
        if recompute[m]:
            last = m
        source.append(last)
    return ReusePlan(m_subcarriers, frac, tuple(recompute), tuple(source))


def _table_terms(scheme: str, q_r: int, q_t: int, card: int):
    """Decomposition and search parts of the per-subcarrier cost, per table row.

    Returns ``(decomp_radd, decomp_rmul, search_radd, search_rmul)`` where the
    decomposition parts are the terms multiplied by ``(1 - P)`` under reuse.
    """
    t, k = Fraction(q_t), Fraction(card)
    qa, qm = _qrd_poly(q_r, q_t)
    if scheme == "sic":
        return qa, qm, 6 * t**2, 8 * t**2 + t
    if scheme == "lord":
        return (t * qa, t * qm,
                4 * t**3 + 4 * t**2 + (2 * t + 4) * t * k,
                8 * t**3 + (4 * t + 5) * t * k)
    if scheme == "ssd":
        wa, wm = _wrd_poly(q_r, q_t)
        return (t * (qa + wa), t * (qm + wm),
                4 * t**3 - t**3 * k + 3 * t**2 * k + (2 * t + 4) * t * k - 2 * t * k,
                4 * t**3 - 2 * t**3 * k + 6 * t**2 * k + (4 * t + 5) * t * k - 4 * t * k)
    raise UnknownScheme(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def flops_detector(scheme: str, q_t: int, const_size: int, m_subcarriers: int = 1,
                   plan: Optional[ReusePlan] = None, q_r: Optional[int] = None) -> FlopCount:
    """Total FLOPs over ``M`` subcarriers for ``"sic"``, ``"lord"`` or ``"ssd"``.

    Without a plan every subcarrier pays the decomposition.  With a plan the
    decomposition terms are paid only on the recomputed subcarriers, i.e.
    ``M (1 - P)`` is replaced by the integer ``plan.n_recomputed`` (the two
    coincide whenever ``M (1 - P)`` is an integer); search terms are paid on
    every subcarrier.  ``q_r`` defaults to ``q_t``.
    """
    q_r = q_t if q_r is None else q_r
    _dims(q_r, q_t)
    if const_size < 1:
        raise ValueError("constellation size must be >= 1")
    da, dm, sa, sm = _table_terms(scheme, q_r, q_t, const_size)
    if plan is not None and plan.m_subcarriers != m_subcarriers:
        raise ValueError("plan was built for a different number of subcarriers")
    n_dec = m_subcarriers if plan is None else plan.n_recomputed
    radd = n_dec * da + m_subcarriers * sa
    rmul = n_dec * dm + m_subcarriers * sm
    return FlopCount(_int(radd, f"{scheme} RADD"), _int(rmul, f"{scheme} RMUL"))


def flops_kbest(q_t: int, k: int, const_size: int) -> int:
    """K-Best node count ``2^|X| + (Qt - 1) K 2^|X|``."""
    if q_t < 1 or k < 1 or const_size < 1:
        raise ValueError("arguments must be >= 1")
    return 2**const_size + (q_t - 1) * k * 2**const_size


def lll_expected_iterations_bound(q_r: int, q_t: int, t: float) -> float:
    """``4 Qr^2 (log2(Qr / (Qt - Qr + 1)) + 2.240 / ln t) + 2 Qr``."""
    if t <= 1:
        raise DomainError("t must exceed 1")
    den = q_t - q_r + 1
    if den <= 0:
        raise DomainError(f"Qt - Qr + 1 = {den} must be positive")
    return 4.0 * q_r**2 * (math.log2(q_r / den) + 2.240 / math.log(t)) + 2.0 * q_r


def count_mgs_flops(h) -> FlopCount:
    """Real operations spent by a complex modified Gram-Schmidt QR of ``h``.

    Runs the factorisation and tallies every complex multiply/add (and the
    square roots and divisions of the normalisation, counted as RMUL).  Used
    as an implementation-side sanity check of the closed-form QRD model.
    """
    a = np.array(h, dtype=complex)
    q_r, q_t = a.shape
    radd = rmul = 0
    for k in range(q_t):
        # ||a_k||^2: q_r |.|^2 (2 RMUL + 1 RADD each) and q_r - 1 additions
        nrm = np.sqrt(np.sum(np.abs(a[:, k]) ** 2))
        rmul += 2 * q_r + 1
        radd += q_r + (q_r - 1)
        a[:, k] /= nrm
        rmul += 2 * q_r
        for j in range(k + 1, q_t):
            r = np.vdot(a[:, k], a[:, j])
            rmul += 4 * q_r
            radd += 2 * q_r + 2 * (q_r - 1)
            a[:, j] -= r * a[:, k]
            rmul += 4 * q_r
            radd += 2 * q_r + 2 * q_r
    return FlopCount(radd, rmul)
