"""Independent symbolic transcription of the FLOPs cost table.

Written out from the printed rows without sharing code with the library.
"""

import sympy as sp

Qr, Qt, K, M, P = sp.symbols("Q_r Q_t K M P", positive=True)
QRD_A = 4 * Qr * Qt**2 - Qt**2 - Qt
QRD_M = 4 * Qr * Qt**2 + 3 * Qt**2
WRD_A = sp.Rational(16, 3) * Qr * Qt**3 - 10 * Qr * Qt**2 + sp.Rational(8, 3) * Qr * Qt - 8 * Qr
WRD_M = sp.Rational(16, 3) * Qr * Qt**3 - 7 * Qr * Qt**2 + sp.Rational(8, 3) * Qr * Qt - 20 * Qr

ROWS = {
    ("sic", "radd"): M * ((1 - P) * QRD_A + 6 * Qt**2),
    ("sic", "rmul"): M * ((1 - P) * QRD_M + 8 * Qt**2 + Qt),
    ("lord", "radd"): M * (Qt * (1 - P) * QRD_A + 4 * Qt**3 + 4 * Qt**2 + (2 * Qt + 4) * Qt * K),
    ("lord", "rmul"): M * (Qt * (1 - P) * QRD_M + 8 * Qt**3 + (4 * Qt + 5) * Qt * K),
    ("ssd", "radd"): M * (Qt * (1 - P) * (QRD_A + WRD_A) + 4 * Qt**3 - Qt**3 * K
                          + 3 * Qt**2 * K + (2 * Qt + 4) * Qt * K - 2 * Qt * K),
    ("ssd", "rmul"): M * (Qt * (1 - P) * (QRD_M + WRD_M) + 4 * Qt**3 - 2 * Qt**3 * K
                          + 6 * Qt**2 * K + (4 * Qt + 5) * Qt * K - 4 * Qt * K),
}


def oracle(scheme, q, card, m=1, p=0):
    subs = {Qr: q, Qt: q, K: card, M: m, P: sp.Rational(p)}
    vals = [sp.nsimplify(ROWS[(scheme, op)].subs(subs)) for op in ("radd", "rmul")]
    assert all(v.is_integer for v in vals), vals
    return tuple(int(v) for v in vals)
