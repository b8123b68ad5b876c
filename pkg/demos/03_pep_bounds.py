"""Pairwise error probability on an 8x8 alpha-mu channel.

Compares the simulated PEP of ML detection with the Monte Carlo upper-bound
expression and the closed-form lower bound built from the moment-matched
law of ||H||_F^2.
"""

import numpy as np
from scipy import stats

from thzdet.analysis import frobenius_cdf, moment_match, pep_lower_bound, pep_ml_bound, pep_simulate
from thzdet.channel import AlphaMuParams, gen_fading_matrix
from thzdet.constellation import qam

q = 8
entry = AlphaMuParams(alpha=2.0, mu=2.0, mean=1.0)
const = qam(4)


def sampler(rng, n):
    return gen_fading_matrix(q, q, entry, rng=rng, size=n).h


x1 = np.full(q, const.points[0])
x2 = x1.copy()
x2[0] = const.points[1]
d = x1 - x2

fit = moment_match([entry] * (q * q), psi=2)
z = np.sum(np.abs(sampler(np.random.default_rng(2), 50_000)) ** 2, axis=(-2, -1))
print("moment-matched law vs empirical ||H||_F^2: KS =",
      f"{stats.kstest(z, lambda v: frobenius_cdf(fit, v)).statistic:.4f}")

rng = np.random.default_rng(3)
print(f"\n{'snr_db':>6} {'lower':>10} {'simulated':>10} {'upper':>10}")
for snr_db in (-3.0, 3.0, 9.0, 15.0):
    s2 = q / 10 ** (snr_db / 10)
    lo = pep_lower_bound(fit, float(np.vdot(d, d).real), s2).value
    sim = pep_simulate(sampler, x1, x2, s2, "ml", 50_000, rng).value
    up = pep_ml_bound(sampler, d, s2, 10_000, rng).value
    print(f"{snr_db:6.1f} {lo:10.3e} {sim:10.3e} {up:10.3e}")
