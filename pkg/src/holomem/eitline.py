"""Lambda-system EIT line shape: transmission spectrum, transparency-window
width, and slow-light group delay.

The probe susceptibility uses the standard three-level form with complex
response  chi(delta) ~ (gamma_gs - i delta) / D(delta),
D = (Gamma/2 - i delta)(gamma_gs - i delta) + Omega^2/4.  The absorption
exponent is normalized so that with the control off (Omega = 0) the
on-resonance transmission is exp(-OD).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .constants import GAMMA_D1_RAD_PER_S

# Ground-state decoherence calibrated once (calibrate_gamma_gs) so the model
# reproduces the measured 2.2 MHz transparency window at OD 10 and
# Omega = 2*pi*7 MHz.  Value in rad/s.
DEFAULT_GAMMA_GS_RAD_PER_S = 3.51815088e6


class EitError(ValueError):
    """Invalid EIT parameters."""


@dataclass(frozen=True)
class EitParams:
    """Line-shape parameters: optical depth, control Rabi frequency, excited
    decay, and ground-state decoherence (all rates in rad/s)."""

    od: float
    rabi_rad_per_s: float
    gamma_e_rad_per_s: float = GAMMA_D1_RAD_PER_S
    gamma_gs_rad_per_s: float = DEFAULT_GAMMA_GS_RAD_PER_S

    def __post_init__(self):
        if not self.od > 0.0:
            raise EitError(f"optical depth must be positive, got {self.od}")
        if self.rabi_rad_per_s < 0.0:
            raise EitError(f"Rabi frequency must be >= 0, got {self.rabi_rad_per_s}")
        if not self.gamma_e_rad_per_s > 0.0:
            raise EitError(f"excited-state decay must be positive, got {self.gamma_e_rad_per_s}")
        if self.gamma_gs_rad_per_s < 0.0:
            raise EitError(f"ground-state decoherence must be >= 0, got {self.gamma_gs_rad_per_s}")


def experiment_eit_params() -> EitParams:
    """OD 10 and a 2*pi*7 MHz control Rabi frequency, as measured."""
    return EitParams(od=10.0, rabi_rad_per_s=2.0 * math.pi * 7e6)


def _response(p: EitParams, delta):
    """Complex normalized response; its real part is the absorption per OD."""
    delta = np.asarray(delta, dtype=float)
    num = p.gamma_gs_rad_per_s - 1j * delta
    den = (p.gamma_e_rad_per_s / 2.0 - 1j * delta) * num + p.rabi_rad_per_s ** 2 / 4.0
    return (p.gamma_e_rad_per_s / 2.0) * num / den


def transmission(p: EitParams, delta_rad_per_s):
    """Intensity transmission T(delta) in [0, 1]; delta is the two-photon
    detuning in rad/s.  Accepts scalars or arrays."""
    t = np.exp(-p.od * np.real(_response(p, delta_rad_per_s)))
    return float(t) if np.isscalar(delta_rad_per_s) else t


def phase(p: EitParams, delta_rad_per_s):
    """Phase of the transmitted field, radians."""
    ph = -0.5 * p.od * np.imag(_response(p, delta_rad_per_s))
    return float(ph) if np.isscalar(delta_rad_per_s) else ph


def group_delay(p: EitParams) -> float:
    """Slow-light delay d(phase)/d(delta) at delta = 0, by central
    differences with step Omega/1000.  Ideal limit: OD * Gamma / Omega^2."""
    if p.rabi_rad_per_s <= 0.0:
        raise EitError("group delay requires a nonzero control Rabi frequency")
    h = p.rabi_rad_per_s / 1000.0
    return (phase(p, h) - phase(p, -h)) / (2.0 * h)


def transparency_fwhm(p: EitParams) -> float:
    """FWHM (Hz) of the transparency peak above the absorption floor.

    The floor is the transmission minimum of the flanking absorption dips;
    the width is measured where T drops to floor + (T(0) - floor)/2.
    """
    if p.rabi_rad_per_s <= 0.0:
        raise EitError("no transparency window without a control field")
    t0 = transmission(p, 0.0)
    # Dips sit near delta = +/- Omega/2; scan well beyond them.
    span = 3.0 * (p.rabi_rad_per_s + p.gamma_e_rad_per_s)
    grid = np.linspace(0.0, span, 20001)
    tvals = transmission(p, grid)
    floor = float(tvals.min())
    half = floor + 0.5 * (t0 - floor)
    below = np.nonzero(tvals < half)[0]
    if below.size == 0:
        raise EitError("no half-maximum crossing found; widen the scan")
    i = below[0]
    delta_half = brentq(lambda d: transmission(p, d) - half, grid[i - 1], grid[i],
                        xtol=1e-3)
    return 2.0 * delta_half / (2.0 * math.pi)


def calibrate_gamma_gs(target_fwhm_hz: float = 2.2e6,
                       od: float = 10.0,
                       rabi_rad_per_s: float = 2.0 * math.pi * 7e6,
                       gamma_e_rad_per_s: float = GAMMA_D1_RAD_PER_S) -> float:
    """One-dimensional search for the ground-state decoherence that
    reproduces the measured transparency window.  Returns gamma_gs (rad/s)."""

    def mismatch(log_gamma: float) -> float:
        p = EitParams(od=od, rabi_rad_per_s=rabi_rad_per_s,
                      gamma_e_rad_per_s=gamma_e_rad_per_s,
                      gamma_gs_rad_per_s=math.exp(log_gamma))
        return abs(transparency_fwhm(p) - target_fwhm_hz)

    res = minimize_scalar(mismatch, bounds=(math.log(1.0), math.log(2.0 * math.pi * 1e6)),
                          method="bounded", options={"xatol": 1e-3})
    return float(math.exp(res.x))
