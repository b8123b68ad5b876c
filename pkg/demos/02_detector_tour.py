"""A short tour of the detector family on a 4x4 4-QAM Rayleigh link.

Every detector sees the same channels, symbols and noise, so the BER column
differences come from the detectors alone.  A few thousand vectors per SNR
keeps this under a minute.
"""

import numpy as np

from thzdet.constellation import qam
from thzdet.detectors import DetectorInput, run_detector

const = qam(4)
q = 4
n = 4000
names = ["zf", "sic", "sic-sorted", "lr-zf", "kbest", "lord", "vlord", "ssd", "sqld", "pml", "ml"]

rng = np.random.default_rng(1)
print(f"{'snr_db':>6} " + " ".join(f"{d:>10}" for d in names))
for snr_db in (6.0, 10.0, 14.0):
    h = (rng.standard_normal((n, q, q)) + 1j * rng.standard_normal((n, q, q))) / np.sqrt(2)
    idx = rng.integers(0, const.order, (n, q))
    sigma2 = q / 10 ** (snr_db / 10)
    noise = np.sqrt(sigma2 / 2) * (rng.standard_normal((n, q)) + 1j * rng.standard_normal((n, q)))
    y = np.einsum("bij,bj->bi", h, const.points[idx]) + noise
    inp = DetectorInput(y=y, h=h, sigma2=sigma2, constellation=const)
    truth = const.indices_to_bits(idx)
    row = []
    for name in names:
        res = run_detector(name, inp)
        row.append(np.mean(const.indices_to_bits(res.indices) != truth))
    print(f"{snr_db:6.1f} " + " ".join(f"{b:10.2e}" for b in row))

# soft outputs: positive LLR means bit 1
res = run_detector("lord", inp)
print("\nfirst LORD LLRs:", np.round(res.llrs[0], 2))
