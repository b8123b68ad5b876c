"""Decompositions behind the layered detectors.

Shows how QRD, sorted QRD and the punctured WRD shape the triangular factor
a detector walks through, and how LLL reduction straightens an
ill-conditioned basis.  Run: ``python3 demos/01_decompositions.py``.
"""

import numpy as np

from thzdet.linalg import (apply_permutation, lll_reduce, orthogonality_defect, qrd, real_embedding,
                           sorted_qrd, wrd)

np.set_printoptions(precision=2, suppress=True, linewidth=110)
rng = np.random.default_rng(0)
h = (rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))) / np.sqrt(2)

# plain QRD: unitary Q, upper-triangular R with a real positive diagonal
dec = qrd(h)
print("|R| from QRD")
print(np.abs(dec.r))

# sorted QRD moves the strongest column last, so it is detected first
s = sorted_qrd(h)
print("\nsorted-QRD order:", s.perm, " diag:", np.diag(s.r).real)

# WRD zeroes everything strictly between the diagonal and the last column;
# every layer above the root then only couples to the root symbol
pd = wrd(h)
print("\n|R_dot| from WRD (punctured pattern)")
print(np.abs(pd.r_dot))
resid = pd.w.conj().T @ apply_permutation(h, pd.perm) - pd.r_dot
print("||W^H H P - R_dot|| =", f"{np.linalg.norm(resid):.1e}")
print("W^H W is not the identity: off-diagonal max",
      f"{np.max(np.abs(pd.w.conj().T @ pd.w - np.eye(5))):.2f}")

# LLL works on the real embedding of a nearly collinear complex basis
u, _, vh = np.linalg.svd(h)
bad = u @ np.diag([1.0, 0.8, 0.5, 0.1, 0.01]) @ vh
red = lll_reduce(bad)
print("\northogonality defect before/after LLL:",
      f"{orthogonality_defect(real_embedding(bad)):.1f} -> {orthogonality_defect(red.h_reduced):.1f}")
print("unimodular determinant:", round(float(np.linalg.det(red.unimodular))))
