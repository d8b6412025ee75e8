"""Symmetric 3x3 tensors and the isotropic correlation tensor.

The isotropic, unpolarized average of the metric correlation is

    delta_ijkl = d_ik d_jl + d_il d_jk - (2/3) d_ij d_kl

which acts on symmetric tensors as twice the Frobenius product of their
traceless parts.  Everything here works for real or complex components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

_IDX = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
_NAMES = ("xx", "yy", "zz", "xy", "xz", "yz")
TRACELESS_TOL = 1e-12


@dataclass(frozen=True)
class SymTensor3:
    """Symmetric 3x3 tensor stored by its six independent components."""

    xx: complex = 0.0
    yy: complex = 0.0
    zz: complex = 0.0
    xy: complex = 0.0
    xz: complex = 0.0
    yz: complex = 0.0

    @classmethod
    def identity(cls) -> SymTensor3:
        return cls(1.0, 1.0, 1.0)

    @classmethod
    def zero(cls) -> SymTensor3:
        return cls()

    @classmethod
    def diag(cls, a, b, c) -> SymTensor3:
        return cls(a, b, c)

    @classmethod
    def from_matrix(cls, m) -> SymTensor3:
        """Build from a 3x3 array, symmetrizing it."""
        m = np.asarray(m)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        s = 0.5 * (m + m.T)
        return cls(*(_scalar(s[i, j]) for i, j in _IDX))

    def components(self) -> tuple:
        return (self.xx, self.yy, self.zz, self.xy, self.xz, self.yz)

    def __iter__(self) -> Iterator:
        return iter(self.components())

    def matrix(self) -> np.ndarray:
        xx, yy, zz, xy, xz, yz = self.components()
        return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])

    def trace(self):
        return self.xx + self.yy + self.zz

    def max_abs(self) -> float:
        return max(abs(c) for c in self.components())

    def is_traceless(self, tol: float = TRACELESS_TOL) -> bool:
        return abs(self.trace()) <= tol * self.max_abs()

    def conj(self) -> SymTensor3:
        return SymTensor3(*(np.conj(c) for c in self.components()))

    def frobenius(self, other: SymTensor3):
        """Sum_ij a_ij b_ij (no complex conjugation)."""
        a, b = self.components(), other.components()
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])

    def __add__(self, other: SymTensor3) -> SymTensor3:
        return SymTensor3(*(x + y for x, y in zip(self, other)))

    def __sub__(self, other: SymTensor3) -> SymTensor3:
        return SymTensor3(*(x - y for x, y in zip(self, other)))

    def __mul__(self, k) -> SymTensor3:
        return SymTensor3(*(k * x for x in self))

    __rmul__ = __mul__

    def __neg__(self) -> SymTensor3:
        return self * -1.0


def _scalar(x):
    x = complex(x)
    return x.real if x.imag == 0.0 else x


def traceless_part(a: SymTensor3) -> SymTensor3:
    """Return ``a - tr(a)/3 * identity``."""
    t = a.trace() / 3.0
    return SymTensor3(a.xx - t, a.yy - t, a.zz - t, a.xy, a.xz, a.yz)


def contract_delta(a: SymTensor3, b: SymTensor3):
    """Full contraction ``sum_ijkl delta_ijkl a_ij b_kl``.

    Evaluated as ``2 * (traceless a : traceless b)``.  Pass ``b.conj()``
    to get the hermitian form used for response functions.
    """
    return 2.0 * traceless_part(a).frobenius(traceless_part(b))


def delta_tensor() -> np.ndarray:
    """The rank-4 array delta_ijkl, shape (3, 3, 3, 3)."""
    d = np.eye(3)
    return (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)
            - (2.0 / 3.0) * np.einsum("ij,kl->ijkl", d, d))


def contract_delta_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized :func:`contract_delta` over stacks of 3x3 matrices.

    ``a`` and ``b`` have shape ``(..., 3, 3)`` and are assumed symmetric.
    """
    ta = np.trace(a, axis1=-2, axis2=-1)
    tb = np.trace(b, axis1=-2, axis2=-1)
    return 2.0 * np.einsum("...ij,...ij->...", a, b) - (2.0 / 3.0) * ta * tb


@dataclass(frozen=True)
class PolarizationBasis:
    """Five orthonormal traceless symmetric tensors spanning the TT subspace."""

    elements: tuple[SymTensor3, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i: int) -> SymTensor3:
        return self.elements[i]

    def matrices(self) -> np.ndarray:
        """Stack of the basis as an array of shape (5, 3, 3)."""
        return np.array([e.matrix() for e in self.elements], dtype=float)


_S2 = 1.0 / math.sqrt(2.0)
_S6 = 1.0 / math.sqrt(6.0)

# Fixed ordering: two diagonal combinations, then xy, xz, yz.
#   e1 = diag(1, -1, 0)/sqrt2       e2 = diag(1, 1, -2)/sqrt6
#   e3 = (xy + yx)/sqrt2            e4 = (xz + zx)/sqrt2    e5 = (yz + zy)/sqrt2
_BASIS = PolarizationBasis((
    SymTensor3(_S2, -_S2, 0.0),
    SymTensor3(_S6, _S6, -2.0 * _S6),
    SymTensor3(xy=_S2),
    SymTensor3(xz=_S2),
    SymTensor3(yz=_S2),
))


def polarization_basis() -> PolarizationBasis:
    """Return the canonical five-element traceless basis (see ``_BASIS``)."""
    return _BASIS


def symmetric_projector() -> np.ndarray:
    """P_ijkl = (d_ik d_jl + d_il d_jk)/2 - d_ij d_kl/3."""
    return 0.5 * delta_tensor()


def stack(tensors: Sequence[SymTensor3]) -> np.ndarray:
    """Stack a sequence of tensors into an array of shape (n, 3, 3)."""
    return np.array([t.matrix() for t in tensors])


def component_names() -> tuple[str, ...]:
    return _NAMES


def component_index() -> tuple[tuple[int, int], ...]:
    return _IDX
