"""Lumped-element model of the electrical interface.

Topology (source to ground):

    50-ohm source -- R_loss -- L_match --+-- C_match --- gnd
                                         |
                                         +-- C_res ----- gnd
                                         |
                                         +-- R_m L_m C_m gnd   (motional branch)

The piezo resonator is a Butterworth-van Dyke circuit: a static plate
capacitance C_res shunting a series R_m-L_m-C_m branch that represents the
mechanical mode.  The matching stage is a spiral inductor L_match with its
parasitic capacitance to ground C_match and a small series loss R_loss.
Power dissipated in R_m is power converted into mechanical motion, so the
electromechanical delivery efficiency is P(R_m) / P_available.

All impedance/scattering functions accept scalar or ndarray angular
frequency and broadcast.  Angular frequency (rad/s) is used throughout this
module; conversion from ordinary frequency happens at the file/CLI boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import k as K_BOLTZMANN

from .errors import ParameterError

__all__ = [
    "BvdParams",
    "MatchingParams",
    "KineticInductanceModel",
    "MotionalBranch",
    "bvd_motional_branch",
    "input_impedance",
    "electrical_s11",
    "matched_load",
    "electromechanical_efficiency",
    "kinetic_inductance_at",
    "resonance_vs_temperature",
    "keff_from_admittance",
]


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParameterError(msg)


def _finite_positive(value: float, name: str) -> None:
    _require(np.isfinite(value) and value > 0, f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class BvdParams:
    """Piezo resonator in the Butterworth-van Dyke picture.

    c_res      static capacitance between the electrodes (F)
    k_eff_sq   electromechanical coupling coefficient C_m/(C_m+C_res)
    omega_m    mechanical angular frequency (rad/s)
    gamma_m    mechanical angular linewidth (rad/s)
    """

    c_res: float
    k_eff_sq: float
    omega_m: float
    gamma_m: float

    def __post_init__(self) -> None:
        _finite_positive(self.c_res, "c_res")
        _finite_positive(self.omega_m, "omega_m")
        _finite_positive(self.gamma_m, "gamma_m")
        _require(
            np.isfinite(self.k_eff_sq) and 0.0 < self.k_eff_sq < 1.0,
            f"k_eff_sq must lie in (0, 1), got {self.k_eff_sq!r}",
        )


@dataclass(frozen=True)
class MatchingParams:
    """LC matching resonator: series inductor, shunt capacitance, series loss."""

    l_match: float
    c_match: float
    r_loss: float = 0.0
    z_source: float = 50.0

    def __post_init__(self) -> None:
        _finite_positive(self.l_match, "l_match")
        _finite_positive(self.c_match, "c_match")
        _finite_positive(self.z_source, "z_source")
        _require(np.isfinite(self.r_loss) and self.r_loss >= 0, "r_loss must be >= 0")

    @property
    def z_match(self) -> float:
        """Characteristic impedance sqrt(L/C) of the matching resonator."""
        return float(np.sqrt(self.l_match / self.c_match))


@dataclass(frozen=True)
class KineticInductanceModel:
    """Temperature-dependent inductance of a superconducting thin film.

    Total inductance is l_geometric plus a kinetic term that grows toward
    the critical temperature following the BCS surface-impedance form

        L_k(T) = L_k(0) / [ (Delta(T)/Delta(0)) * tanh(Delta(T) / 2 k_B T) ]

    with the standard gap interpolation Delta(T) = Delta(0) * 1.74 *
    sqrt(1 - T/T_c) near T_c, clipped at Delta(0) for low temperatures,
    and Delta(0) = 1.764 k_B T_c.
    """

    l_geometric: float
    l_kinetic_0: float
    t_c: float

    def __post_init__(self) -> None:
        _finite_positive(self.l_geometric, "l_geometric")
        _finite_positive(self.l_kinetic_0, "l_kinetic_0")
        _finite_positive(self.t_c, "t_c")


@dataclass(frozen=True)
class MotionalBranch:
    """Series R-L-C equivalent of one mechanical mode."""

    r_m: float
    l_m: float
    c_m: float


def bvd_motional_branch(p: BvdParams) -> MotionalBranch:
    """Derive the motional R_m, L_m, C_m from (C_res, k_eff^2, omega_m, gamma_m).

    C_m follows from k_eff^2 = C_m/(C_m + C_res); L_m from the series
    resonance omega_m = 1/sqrt(L_m C_m); and the motional resistance is

        R_m = (gamma_m / omega_m^2) * (1/k_eff^2 - 1) / C_res
    """
    c_m = p.c_res * p.k_eff_sq / (1.0 - p.k_eff_sq)
    l_m = 1.0 / (p.omega_m**2 * c_m)
    r_m = (p.gamma_m / p.omega_m**2) * (1.0 / p.k_eff_sq - 1.0) / p.c_res
    return MotionalBranch(r_m=r_m, l_m=l_m, c_m=c_m)


def _branch_impedances(m: MatchingParams, b: BvdParams | None, omega):
    """Impedance of the shunt section (C_match in parallel with the BVD)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ParameterError("omega must be > 0 (the network is a capacitive open at DC)")
    y_shunt = 1j * omega * m.c_match
    if b is not None:
        y_shunt = y_shunt + 1j * omega * b.c_res
        br = bvd_motional_branch(b)
        z_mot = br.r_m + 1j * omega * br.l_m + 1.0 / (1j * omega * br.c_m)
        y_shunt = y_shunt + 1.0 / z_mot
    return 1.0 / y_shunt


def input_impedance(m: MatchingParams, b: BvdParams | None, omega):
    """Impedance of the passive network seen from the source terminals.

    ``b=None`` drops the piezo entirely (a bare test resonator).  Re(Z) >= 0
    for every frequency since the network is passive.
    """
    z_par = _branch_impedances(m, b, omega)
    omega = np.asarray(omega, dtype=float)
    z = m.r_loss + 1j * omega * m.l_match + z_par
    return z if z.ndim else complex(z)


def electrical_s11(m: MatchingParams, b: BvdParams | None, omega):
    """Reflection coefficient (Z - Z_src)/(Z + Z_src) at the source reference."""
    z = np.asarray(input_impedance(m, b, omega))
    gamma = (z - m.z_source) / (z + m.z_source)
    return gamma if gamma.ndim else complex(gamma)


def matched_load(z_match: float, z_source: float) -> float:
    """Load resistance a resonant L-section transforms to z_source: Z_match^2/Z_0."""
    _finite_positive(z_match, "z_match")
    _finite_positive(z_source, "z_source")
    return z_match**2 / z_source


def electromechanical_efficiency(m: MatchingParams, b: BvdParams, omega):
    """Fraction of the source's available power dissipated in R_m.

    Available power for a source of peak amplitude V behind Z_src is
    V^2/(8 Z_src); the conjugate-matched lossless network reaches 1.
    """
    omega = np.asarray(omega, dtype=float)
    z_par = _branch_impedances(m, b, omega)
    z_in = m.r_loss + 1j * omega * m.l_match + z_par
    # unit-amplitude source
    i_in = 1.0 / (m.z_source + z_in)
    v_node = i_in * z_par
    br = bvd_motional_branch(b)
    z_mot = br.r_m + 1j * omega * br.l_m + 1.0 / (1j * omega * br.c_m)
    p_rm = 0.5 * np.abs(v_node / z_mot) ** 2 * br.r_m
    p_avail = 1.0 / (8.0 * m.z_source)
    eta = p_rm / p_avail
    return eta if eta.ndim else float(eta)


def _bcs_gap(t, t_c: float):
    """Delta(T): 1.764 k_B T_c with the 1.74 sqrt(1 - T/T_c) interpolation."""
    delta0 = 1.764 * K_BOLTZMANN * t_c
    t = np.asarray(t, dtype=float)
    interp = delta0 * 1.74 * np.sqrt(np.clip(1.0 - t / t_c, 0.0, None))
    return np.minimum(delta0, interp)


def kinetic_inductance_at(k: KineticInductanceModel, t):
    """Total film inductance l_geometric + L_k(T) at temperature t (K)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t >= k.t_c):
        raise ParameterError(
            f"temperature must satisfy 0 <= T < T_c = {k.t_c} K (film is normal above T_c)"
        )
    delta0 = 1.764 * K_BOLTZMANN * k.t_c
    delta = _bcs_gap(t, k.t_c)
    # tanh argument diverges harmlessly as T -> 0; clip T to avoid 0/0
    t_safe = np.maximum(t, 1e-9)
    denom = (delta / delta0) * np.tanh(delta / (2.0 * K_BOLTZMANN * t_safe))
    l_total = k.l_geometric + k.l_kinetic_0 / denom
    return l_total if l_total.ndim else float(l_total)


def resonance_vs_temperature(k: KineticInductanceModel, c_match: float, t_grid):
    """Matching-circuit resonance f(T) = 1/(2 pi sqrt(L_total(T) C)).

    Monotone nonincreasing in T because L_k grows toward T_c; strictly
    decreasing wherever the gap change is representable (below roughly
    0.5 K the kinetic term is exponentially flat and constant in float64).
    Returns a list of (temperature_K, frequency_Hz) pairs.
    """
    _finite_positive(c_match, "c_match")
    t_grid = np.asarray(t_grid, dtype=float)
    l_tot = np.asarray(kinetic_inductance_at(k, t_grid))
    f = 1.0 / (2.0 * np.pi * np.sqrt(l_tot * c_match))
    return list(zip(t_grid.tolist(), np.atleast_1d(f).tolist()))


def keff_from_admittance(f_s: float, f_p: float) -> float:
    """Coupling coefficient from series/parallel admittance resonances.

    k_eff^2 = (f_p^2 - f_s^2) / f_p^2, in [0, 1).
    """
    _finite_positive(f_s, "f_s")
    _finite_positive(f_p, "f_p")
    if f_s > f_p:
        raise ParameterError(f"series resonance f_s={f_s} must not exceed parallel f_p={f_p}")
    return (f_p**2 - f_s**2) / f_p**2
