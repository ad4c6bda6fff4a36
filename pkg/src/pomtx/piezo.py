"""Rotated piezoelectric tensor of a zincblende film on a (001) substrate.

Voigt column order is 1..6 = xx, yy, zz, yz, xz, xy.  phi is the in-plane
angle between the x axis and the <110> direction; the single independent
constant of the cubic crystal is e14.  With a2 = sin(2 phi), b2 = cos(2 phi)
the 3x6 matrix is

    e'(phi) = e14/2 * [ 0    0   0   2 a2  -2 b2  0
                        0    0   0   2 b2   2 a2  0
                       -b2   b2  0   0      0     2 a2 ]

Shear columns 4-6 carry a factor of two relative to the underlying tensor
components (strain-Voigt bookkeeping); frobenius_norm() removes that factor
before summing, which makes the norm independent of phi.

Internal unit is SI (C/m^2).  The conventional tabulated unit for e14 is
C/cm^2 (1 C/cm^2 = 1e4 C/m^2); pass unit="C/cm^2" to convert on input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = ["PiezoTensor", "rotated_piezo_tensor", "out_of_plane_coupling", "E14_GAP_SI"]

# Zincblende GaP: e14 = -0.1 C/cm^2
E14_GAP_SI = -0.1 * 1.0e4

_UNIT_SCALE = {"C/m^2": 1.0, "C/cm^2": 1.0e4}


@dataclass(frozen=True)
class PiezoTensor:
    """3x6 piezoelectric matrix (C/m^2) at in-plane angle phi."""

    entries: np.ndarray
    phi: float
    e14: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.entries, dtype=float)
        if arr.shape != (3, 6):
            raise ParameterError(f"piezo matrix must be 3x6, got {arr.shape}")
        object.__setattr__(self, "entries", arr)

    def frobenius_norm(self) -> float:
        """Rotation-invariant tensor norm.

        Columns 4-6 store doubled shear components, and each shear pair
        (jk, kj) appears twice in the full rank-3 tensor, so their weight is
        2 * (1/2)^2 = 1/2.
        """
        normal = self.entries[:, :3]
        shear = self.entries[:, 3:]
        return float(np.sqrt(np.sum(normal**2) + 0.5 * np.sum(shear**2)))


def rotated_piezo_tensor(phi: float, e14: float, unit: str = "C/m^2") -> PiezoTensor:
    """Piezoelectric matrix for a film axis at angle phi from <110>."""
    if not (np.isfinite(phi) and np.isfinite(e14)):
        raise ParameterError("phi and e14 must be finite")
    try:
        e14_si = e14 * _UNIT_SCALE[unit]
    except KeyError:
        raise ParameterError(f"unknown unit {unit!r}; use 'C/m^2' or 'C/cm^2'") from None
    a2 = np.sin(2.0 * phi)
    b2 = np.cos(2.0 * phi)
    m = (e14_si / 2.0) * np.array(
        [
            [0.0, 0.0, 0.0, 2.0 * a2, -2.0 * b2, 0.0],
            [0.0, 0.0, 0.0, 2.0 * b2, 2.0 * a2, 0.0],
            [-b2, b2, 0.0, 0.0, 0.0, 2.0 * a2],
        ]
    )
    return PiezoTensor(entries=m, phi=float(phi), e14=float(e14_si))


def out_of_plane_coupling(phi: float, e14: float, unit: str = "C/m^2") -> dict:
    """e'_31 and e'_32: vertical-field to in-plane-strain coupling.

    Both are extremal at phi = 0 mod pi/2 and vanish at phi = pi/4; they are
    always equal and opposite.
    """
    t = rotated_piezo_tensor(phi, e14, unit=unit)
    return {"e31": float(t.entries[2, 0]), "e32": float(t.entries[2, 1])}
