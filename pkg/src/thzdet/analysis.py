"""Pairwise-error-probability analysis for ML and punctured-ML detection.

Noise convention: ``sigma2`` is the total variance of a complex noise entry
(``E|n|^2``), so the per-real-dimension standard deviation is
``sqrt(sigma2 / 2)``.  With this convention the conditional pairwise error
probability of ML detection is exactly ``Q(||H d|| / (2 sigma))`` with
``sigma = sqrt(sigma2 / 2)``.

Channel samplers are callables ``sampler(rng, n) -> ndarray (n, Qr, Qt)``.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .channel import AlphaMuParams
from .constellation import Constellation
from .errors import QuadratureFailure, SolverFailure, TooLarge
from .linalg import qrd, wrd

Sampler = Callable[[np.random.Generator, int], np.ndarray]

__all__ = [
    "QApprox",
    "PepEstimate",
    "FrobeniusApprox",
    "q_func",
    "pep_ml_bound",
    "pep_pml_bound",
    "pep_simulate",
    "alpha_mu_moment",
    "squared_params",
    "frobenius_moments",
    "moment_match",
    "frobenius_pdf",
    "frobenius_cdf",
    "pep_lower_bound",
    "union_bound",
]

QApprox = ("exact", "exp-bound", "two-term")
# chunk of channel draws processed at once by the Monte Carlo estimators
_CHUNK = 4096


def _sigma(sigma2) -> float:
    return float(np.sqrt(sigma2 / 2.0))


def q_func(x, variant: str = "exact"):
    """Gaussian tail ``Q(x)`` or one of its approximations.

    ``"exp-bound"`` is ``exp(-x^2/2)`` and ``"two-term"`` is
    ``exp(-x^2/2)/12 + exp(-2x^2/3)/4``.
    """
    x = np.asarray(x, dtype=float)
    if variant == "exact":
        return 0.5 * special.erfc(x / np.sqrt(2.0))
    if variant == "exp-bound":
        return np.exp(-x**2 / 2)
    if variant == "two-term":
        return np.exp(-x**2 / 2) / 12 + np.exp(-2 * x**2 / 3) / 4
    raise ValueError(f"unknown Q-function variant {variant!r}")


@dataclass
class PepEstimate:
    """A probability estimate.

    ``clamped`` counts outputs pulled back into ``[0, 1]``.
    """

    value: float
    method: str
    trials_or_nodes: int
    stderr: float = 0.0
    clamped: int = 0


def _clamp(v: float, method: str, n: int, stderr: float = 0.0) -> PepEstimate:
    c = int(v < 0 or v > 1)
    return PepEstimate(float(min(max(v, 0.0), 1.0)), method, n, stderr, c)


def _mean_over_draws(sampler, rng, trials, fn):
    """Average ``fn(h)`` (one value per draw) over ``trials`` draws."""
    vals = []
    done = 0
    while done < trials:
        n = min(_CHUNK, trials - done)
        vals.append(fn(sampler(rng, n)))
        done += n
    v = np.concatenate(vals)
    se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
    return float(v.mean()), se


def pep_ml_bound(h_sampler: Sampler, d, sigma2: float, trials: int,
                 rng: np.random.Generator, variant: str = "two-term") -> PepEstimate:
    """Monte Carlo average of ``Q(||R d|| / (2 sigma))`` over channel draws.

    With ``variant="two-term"`` this is the approximate upper-bound
    expression; ``"exact"`` gives the exact PEP average.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = np.asarray(d, dtype=complex)
    s = _sigma(sigma2)

    def fn(h):
        r = qrd(h).r
        return q_func(np.linalg.norm(r @ d, axis=-1) / (2 * s), variant)

    v, se = _mean_over_draws(h_sampler, rng, trials, fn)
    return _clamp(v, "bound-upper" if variant != "exact" else "monte-carlo-conditional",
                  trials, se)


def pep_pml_bound(h_sampler: Sampler, d, sigma2: float, trials: int,
                  rng: np.random.Generator, use_true_w: bool = False,
                  variant: Optional[str] = None) -> PepEstimate:
    """Punctured-ML PEP expressions.

    ``use_true_w=False`` averages ``Q(||R_dot d|| / (2 sigma sqrt(Qr)))``
    (two-term approximation by default), the loose form that replaces ``W``
    by its Frobenius norm.  ``use_true_w=True`` averages the exact
    conditional PEP ``Q(||R_dot d||^2 / (2 sigma ||W R_dot d||))``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if variant is None:
        variant = "exact" if use_true_w else "two-term"
    d = np.asarray(d, dtype=complex)
    s = _sigma(sigma2)

    def fn(h):
        dec = wrd(h)
        rd = dec.r_dot @ d
        nrm = np.linalg.norm(rd, axis=-1)
        if use_true_w:
            wrd_d = np.linalg.norm(np.einsum("bij,bj->bi", dec.w, rd), axis=-1)
            arg = nrm**2 / (2 * s * wrd_d)
        else:
            arg = nrm / (2 * s * np.sqrt(h.shape[-2]))
        return q_func(arg, variant)

    v, se = _mean_over_draws(h_sampler, rng, trials, fn)
    return _clamp(v, "bound-upper", trials, se)


def pep_simulate(h_sampler: Sampler, x1, x2, sigma2: float, detector: str,
                 trials: int, rng: np.random.Generator) -> PepEstimate:
    """Frequency of the pairwise event "``x2`` beats transmitted ``x1``".

    ``detector`` is ``"ml"`` (metric ``||y - Hx||^2``) or ``"pml"``
    (metric ``||W^H (y - Hx)||^2``).
    """
    x1 = np.asarray(x1, dtype=complex)
    x2 = np.asarray(x2, dtype=complex)
    if np.array_equal(x1, x2):
        raise ValueError("x1 and x2 must differ")
    if detector not in ("ml", "pml"):
        raise ValueError(f"unknown detector {detector!r}")
    s = _sigma(sigma2)

    def fn(h):
        n_draw, q_r = h.shape[0], h.shape[-2]
        noise = s * (rng.standard_normal((n_draw, q_r)) + 1j * rng.standard_normal((n_draw, q_r)))
        y = h @ x1 + noise
        e1 = y - h @ x1
        e2 = y - h @ x2
        if detector == "pml":
            wh = np.conj(np.swapaxes(wrd(h).w, -1, -2))
            e1 = np.einsum("bij,bj->bi", wh, e1)
            e2 = np.einsum("bij,bj->bi", wh, e2)
        return (np.sum(np.abs(e2) ** 2, -1) <= np.sum(np.abs(e1) ** 2, -1)).astype(float)

    v, _ = _mean_over_draws(h_sampler, rng, trials, fn)
    se = float(np.sqrt(max(v * (1 - v), 1.0 / trials) / trials))
    return _clamp(v, "monte-carlo", trials, se)


# ------------------------------------------------------- alpha-mu algebra


def alpha_mu_moment(params: AlphaMuParams, k: float) -> float:
    """``(mean / beta)^k Gamma(mu + k/alpha) / Gamma(mu)``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return params.moment(k)


def squared_params(params: AlphaMuParams) -> AlphaMuParams:
    """Law of ``X^2``: alpha-mu with ``(alpha/2, mu, E[X^2])``."""
    return AlphaMuParams(params.alpha / 2.0, params.mu, alpha_mu_moment(params, 2))


def _log_moments_sq(p: AlphaMuParams, n_max: int) -> np.ndarray:
    """``log E[Y^k]`` for ``Y = X^2``, ``k = 0..n_max``."""
    k = np.arange(n_max + 1)
    return (2 * k * np.log(p.mean / p.beta)
            + special.gammaln(p.mu + 2 * k / p.alpha) - special.gammaln(p.mu))


def frobenius_moments(per_entry: Sequence[AlphaMuParams], n_max: int) -> List[float]:
    """``E[Z^n]``, ``n = 0..n_max``, for ``Z = sum_i |h_i|^2``.

    ``per_entry`` holds the envelope laws of the independent entries.  The
    nested multinomial sum is evaluated as repeated binomial convolution of
    partial sums, in the log domain.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if len(per_entry) < 1:
        raise ValueError("need at least one entry")
    n = np.arange(n_max + 1)
    acc = _log_moments_sq(per_entry[0], n_max)
    logc = special.gammaln(n[:, None] + 1) - special.gammaln(n[None, :] + 1) \
        - special.gammaln(np.clip(n[:, None] - n[None, :], 0, None) + 1)
    valid = n[None, :] <= n[:, None]
    for p in per_entry[1:]:
        ly = _log_moments_sq(p, n_max)
        terms = logc + acc[None, :] + ly[np.clip(n[:, None] - n[None, :], 0, None)]
        terms = np.where(valid, terms, -np.inf)
        acc = special.logsumexp(terms, axis=1)
    return [float(v) for v in np.exp(acc)]


@dataclass
class FrobeniusApprox:
    """Mixture approximation of the law of ``Z = ||H||_F^2``."""

    psi: int
    c: np.ndarray
    omega: np.ndarray
    alpha_z: float
    mu_z: float
    beta_z: float
    z_bar: float
    residual: float = 0.0


def _xi(n, mu_z, alpha_z):
    n = np.asarray(n, dtype=float)
    return np.exp(special.gammaln(mu_z + n / alpha_z) + (n - 1) * special.gammaln(mu_z)
                  - n * special.gammaln(mu_z + 1 / alpha_z))


def _tail_rhs(per_entry, alpha_z, mu_z, beta_z, z_bar) -> float:
    """Right-hand side of the small-``z`` (tail) constraint, from the power
    law of the density of ``Z`` at the origin."""
    a = alpha_z
    log = (len(per_entry) - 1) * np.log(a) + a * mu_z * np.log(z_bar) \
        + special.gammaln(mu_z) - a * mu_z * np.log(beta_z) - special.gammaln(a * mu_z)
    for p in per_entry:
        sq = squared_params(p)
        log += (a * sq.mu * np.log(sq.beta) + special.gammaln(a * sq.mu)
                - a * sq.mu * np.log(sq.mean) - special.gammaln(sq.mu))
    return float(np.exp(log))


def moment_match(per_entry: Sequence[AlphaMuParams], psi: int,
                 tol: float = 1e-8) -> FrobeniusApprox:
    """Fit ``{c_m, omega_m}`` of the ``psi``-term mixture.

    Equations: ``sum_m c_m omega_m^n = E[Z^n] / (z_bar^n xi_n)`` for
    ``n = 0..2 psi - 2`` and the small-``z`` constraint
    ``sum_m c_m omega_m^(-alpha_z mu_z) = T``.  Each mixture component is an
    alpha-mu law with mean ``omega_m z_bar`` whose ``n``-th moment is
    ``(omega_m z_bar)^n xi_n``, hence the division by ``xi_n``.  Solved by
    least squares in ``(c, log omega)`` from several starting points.

    Raises
    ------
    SolverFailure
        When no start reaches a relative residual below ``1e-6``.
    """
    if psi < 1:
        raise ValueError("psi must be >= 1")
    alphas = {p.alpha for p in per_entry}
    if len(alphas) != 1:
        raise ValueError("all entries must share the same alpha")
    alpha_z = alphas.pop() / 2.0
    mu_z = float(sum(p.mu for p in per_entry))
    beta_z = float(np.exp(special.gammaln(mu_z + 1 / alpha_z) - special.gammaln(mu_z)))
    n_eq = 2 * psi - 2
    moments = np.array(frobenius_moments(per_entry, max(n_eq, 1)))
    z_bar = moments[1]
    n = np.arange(n_eq + 1)
    rhs = moments[: n_eq + 1] / z_bar**n / _xi(n, mu_z, alpha_z)
    tail = _tail_rhs(per_entry, alpha_z, mu_z, beta_z, z_bar)
    a = alpha_z * mu_z

    def residual(theta):
        c = theta[:psi]
        lw = theta[psi:]
        mom = np.array([np.sum(c * np.exp(k * lw)) for k in n])
        res = (mom - rhs) / rhs
        t = (np.sum(c * np.exp(-a * lw)) - tail) / tail
        return np.append(res, t)

    best = None
    spread = np.linspace(-1, 1, psi) * 0.1 if psi > 1 else np.zeros(1)
    for base in (1.0, 0.5, 2.0):
        x0 = np.concatenate([np.full(psi, 1.0 / psi), np.log(base) + spread])
        sol = optimize.least_squares(residual, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                     max_nfev=20000, method="lm" if 2 * psi <= n_eq + 2 else "trf")
        r = float(np.max(np.abs(sol.fun)))
        if best is None or r < best[0]:
            best = (r, sol.x)
        if r < tol:
            break
    r, theta = best
    if r >= 1e-6:
        raise SolverFailure(f"moment matching residual {r:.3e}")
    return FrobeniusApprox(psi=psi, c=theta[:psi].copy(), omega=np.exp(theta[psi:]),
                           alpha_z=alpha_z, mu_z=mu_z, beta_z=beta_z, z_bar=float(z_bar),
                           residual=r)


def frobenius_pdf(approx: FrobeniusApprox, z):
    """Mixture density of ``Z``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be >= 0")
    a, mu, b = approx.alpha_z, approx.mu_z, approx.beta_z
    out = np.zeros_like(z)
    pos = z > 0
    zp = z[pos]
    for c, w in zip(approx.c, approx.omega):
        scale = w * approx.z_bar
        logf = (np.log(a) + a * mu * np.log(b) + (a * mu - 1) * np.log(zp)
                - a * mu * np.log(scale) - special.gammaln(mu) - (b * zp / scale) ** a)
        out[pos] += c * np.exp(logf)
    if a * mu < 1:
        out[~pos] = np.inf
    elif a * mu == 1:
        out[~pos] = sum(c * a * b / (w * approx.z_bar) / special.gamma(mu)
                        for c, w in zip(approx.c, approx.omega))
    return out


def frobenius_cdf(approx: FrobeniusApprox, z):
    z = np.clip(np.asarray(z, dtype=float), 0, None)
    a, mu, b = approx.alpha_z, approx.mu_z, approx.beta_z
    return sum(c * special.gammainc(mu, (b * z / (w * approx.z_bar)) ** a)
               for c, w in zip(approx.c, approx.omega))


def _upper_limit(approx: FrobeniusApprox, tail: float = 1e-13) -> float:
    a, mu, b = approx.alpha_z, approx.mu_z, approx.beta_z
    t = special.gammainccinv(mu, tail)
    return float(max(w * approx.z_bar / b * t ** (1 / a) for w in approx.omega))


def pep_lower_bound(approx: FrobeniusApprox, d_norm2: float, sigma2: float,
                    epsabs: float = 1e-10) -> PepEstimate:
    """``int Q(||d|| sqrt(z) / (2 sigma)) f_Z(z) dz`` by adaptive Gauss-Kronrod.

    Lower-bounds the ML PEP because ``||H d|| <= ||H||_F ||d||``.

    Raises
    ------
    QuadratureFailure
        If the estimated absolute error exceeds ``epsabs``.
    """
    if d_norm2 <= 0:
        raise ValueError("d_norm2 must be positive")
    s = _sigma(sigma2)
    k = np.sqrt(d_norm2) / (2 * s)
    z_hi = _upper_limit(approx)

    def integrand(z):
        return float(q_func(k * np.sqrt(z)) * frobenius_pdf(approx, np.array([z]))[0])

    # split at the bulk of the density so QUADPACK sees its scale
    centre = approx.z_bar * float(np.min(approx.omega))
    pts = sorted({min(centre * f, z_hi * 0.999) for f in (0.25, 0.5, 1.0, 2.0)})
    total, err = 0.0, 0.0
    edges = [0.0] + pts + [z_hi]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        v, e = integrate.quad(integrand, lo, hi, epsabs=epsabs / 8, epsrel=1e-10, limit=400)
        total += v
        err += e
    if err > epsabs:
        raise QuadratureFailure(f"quadrature error estimate {err:.3e} above {epsabs:.1e}")
    return _clamp(total, "bound-lower-quadrature", len(edges) - 1)


def _difference_table(const: Constellation, q_t: int, guard: int):
    """Unique difference vectors with summed bit-error weights over ordered pairs."""
    n_vec = const.order**q_t
    if n_vec * n_vec > guard:
        raise TooLarge(f"{n_vec}^2 ordered pairs exceed the guard {guard}")
    idx = const.candidate_indices(q_t)
    vecs = const.points[idx]
    bits = const.labels[idx].reshape(n_vec, -1)
    i, j = np.nonzero(~np.eye(n_vec, dtype=bool))
    diff = vecs[i] - vecs[j]
    ham = np.sum(bits[i] != bits[j], axis=1)
    key = np.round(np.concatenate([diff.real, diff.imag], axis=1), 9)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    weight = np.bincount(np.asarray(inv).reshape(-1), weights=ham)
    d = uniq[:, :q_t] + 1j * uniq[:, q_t:]
    return d, weight, len(i)


def union_bound(detector_bound: str, constellation: Constellation, q_t: int,
                h_sampler: Sampler, sigma2: float, trials: int,
                rng: np.random.Generator, guard: int = 2**20,
                per_bit: bool = True) -> float:
    """Union bound on the error rate from the two-term PEP expressions.

    Every ordered pair of distinct transmit vectors contributes its bit
    errors ``a(d)`` times the PEP expression, weighted by the prior
    ``|X|^-Qt``.  With ``per_bit=True`` the result is divided by
    ``Qt log2|X|`` so it bounds the bit error rate.
    """
    if detector_bound not in ("ml", "pml"):
        raise ValueError(f"unknown bound {detector_bound!r}")
    d, weight, _ = _difference_table(constellation, q_t, guard)
    s = _sigma(sigma2)
    acc = np.zeros(len(d))
    done = 0
    while done < trials:
        n = min(256, trials - done)
        h = h_sampler(rng, n)
        if detector_bound == "ml":
            r = qrd(h).r
            nrm2 = np.sum(np.abs(np.einsum("bij,kj->bki", r, d)) ** 2, axis=-1)
            arg = np.sqrt(nrm2) / (2 * s)
        else:
            rd = wrd(h).r_dot
            nrm2 = np.sum(np.abs(np.einsum("bij,kj->bki", rd, d)) ** 2, axis=-1)
            arg = np.sqrt(nrm2) / (2 * s * np.sqrt(h.shape[-2]))
        acc += q_func(arg, "two-term").sum(axis=0)
        done += n
    pep = acc / trials
    total = float(np.sum(weight * pep)) / constellation.order**q_t
    if per_bit:
        total /= q_t * constellation.nbits
    return total
