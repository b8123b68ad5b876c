"""Square QAM constellations with per-axis Gray labelling.

Labelling
---------
A point of ``M``-QAM carries ``log2(M)`` bits, the first half selecting the
in-phase level and the second half the quadrature level (most significant bit
first).  On each axis the ``L = sqrt(M)`` amplitudes ``L-1, L-3, ..., 1-L``
receive the Gray codes ``0, 1, 3, 2, ...`` in that order, so bit value 0 sits
on the positive side of the most significant bit.  The point index equals the
integer value of its label.  For 4-QAM this gives::

    index  bits  symbol
    0      00    (+1+1j)/sqrt(2)
    1      01    (+1-1j)/sqrt(2)
    2      10    (-1+1j)/sqrt(2)
    3      11    (-1-1j)/sqrt(2)
"""

from functools import lru_cache

import numpy as np

__all__ = ["Constellation", "qam", "get_constellation"]


def _gray(n: int) -> int:
    return n ^ (n >> 1)


class Constellation:
    """Unit-energy square QAM constellation.

    Parameters
    ----------
    order : int
        Number of points (4, 16 or 64; any even power of two works).
    """

    def __init__(self, order: int):
        nbits = int(round(np.log2(order)))
        if 2**nbits != order or nbits % 2:
            raise ValueError(f"order must be an even power of two, got {order}")
        self.order = order
        self.nbits = nbits
        half = nbits // 2
        levels = 2**half
        amp_of_gray = {}
        for u in range(levels):
            amp_of_gray[_gray(u)] = levels - 1 - 2 * u
        scale = np.sqrt(2.0 * (levels**2 - 1) / 3.0)
        labels = np.zeros((order, nbits), dtype=np.int8)
        points = np.zeros(order, dtype=complex)
        for k in range(order):
            bits = [(k >> (nbits - 1 - i)) & 1 for i in range(nbits)]
            labels[k] = bits
            gi = k >> half
            gq = k & (levels - 1)
            points[k] = (amp_of_gray[gi] + 1j * amp_of_gray[gq]) / scale
        self.points = points
        self.labels = labels
        self.levels = levels
        # distance between adjacent levels on an axis
        self.spacing = 2.0 / scale
        self.points.setflags(write=False)
        self.labels.setflags(write=False)
        # masks[i, b, k]: point k has bit i equal to b
        self.masks = np.stack([labels.T == 0, labels.T == 1], axis=1)
        self.masks.setflags(write=False)

    def __repr__(self):
        return f"Constellation({self.order})"

    @property
    def name(self) -> str:
        return f"qam{self.order}"

    def modulate(self, bits) -> np.ndarray:
        """Map a bit sequence (last axis) to symbols."""
        bits = np.asarray(bits, dtype=np.int64)
        if bits.shape[-1] % self.nbits:
            raise ValueError(
                f"bit length {bits.shape[-1]} not divisible by {self.nbits}")
        return self.points[self.bits_to_indices(bits)]

    def bits_to_indices(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        groups = bits.reshape(bits.shape[:-1] + (-1, self.nbits))
        weights = 1 << np.arange(self.nbits - 1, -1, -1)
        return groups @ weights

    def indices_to_bits(self, idx) -> np.ndarray:
        """Bits of symbol indices; shape ``idx.shape + (nbits,)``."""
        return self.labels[np.asarray(idx)]

    def slice(self, z) -> np.ndarray:
        """Index of the nearest point; ties go to the lowest index."""
        z = np.asarray(z)
        d = np.abs(z[..., None] - self.points) ** 2
        return np.argmin(d, axis=-1)

    def demap_hard(self, z) -> np.ndarray:
        """Nearest-point bits, flattened along the last symbol axis."""
        bits = self.indices_to_bits(self.slice(z))
        return bits.reshape(bits.shape[:-2] + (-1,))

    def bit_partition_sets(self, i: int, b: int) -> np.ndarray:
        """Symbols whose ``i``-th label bit equals ``b``."""
        if not 0 <= i < self.nbits:
            raise IndexError(f"bit index {i} out of range for {self}")
        if b not in (0, 1):
            raise ValueError("bit value must be 0 or 1")
        return self.points[self.masks[i, b]]

    def candidate_indices(self, q_t: int) -> np.ndarray:
        """All ``order**q_t`` index vectors in lexicographic order."""
        return _candidates(self.order, q_t)


@lru_cache(maxsize=None)
def _candidates(order: int, q_t: int) -> np.ndarray:
    grids = np.indices((order,) * q_t).reshape(q_t, -1).T
    grids.setflags(write=False)
    return grids


@lru_cache(maxsize=None)
def qam(order: int) -> Constellation:
    return Constellation(order)


def get_constellation(name: str) -> Constellation:
    """Look up ``"qam4"``, ``"qam16"`` or ``"qam64"``."""
    names = {"qam4": 4, "qpsk": 4, "qam16": 16, "qam64": 64}
    try:
        return qam(names[name.lower()])
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}") from None
