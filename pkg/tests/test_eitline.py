import math

import numpy as np
import pytest

from holomem import eitline
from holomem.constants import GAMMA_D1_RAD_PER_S

RABI = 2.0 * math.pi * 7e6


def params(**overrides) -> eitline.EitParams:
    base = dict(od=10.0, rabi_rad_per_s=RABI)
    base.update(overrides)
    return eitline.EitParams(**base)


class TestTransmission:
    def test_control_off_two_level_limit(self):
        p = params(rabi_rad_per_s=0.0)
        assert eitline.transmission(p, 0.0) == pytest.approx(math.exp(-10.0), rel=1e-9)

    def test_perfect_transparency_without_decoherence(self):
        p = params(gamma_gs_rad_per_s=0.0)
        assert eitline.transmission(p, 0.0) == 1.0

    def test_bounded(self):
        p = params()
        deltas = np.linspace(-5 * RABI, 5 * RABI, 501)
        t = eitline.transmission(p, deltas)
        assert np.all(t >= 0.0) and np.all(t <= 1.0)

    def test_symmetric_in_detuning(self):
        p = params()
        deltas = np.linspace(0.0, 3 * RABI, 200)
        np.testing.assert_allclose(eitline.transmission(p, deltas),
                                   eitline.transmission(p, -deltas), atol=1e-14)

    def test_maximal_on_resonance(self):
        # gamma_gs well below Omega^2/Gamma: the peak sits at delta = 0.
        p = params(gamma_gs_rad_per_s=1e3)
        deltas = np.linspace(-2 * RABI, 2 * RABI, 801)
        t = eitline.transmission(p, deltas)
        assert eitline.transmission(p, 0.0) >= t.max() - 1e-12


class TestGroupDelay:
    def test_positive(self):
        for gamma_gs in (0.0, 1e4, eitline.DEFAULT_GAMMA_GS_RAD_PER_S):
            assert eitline.group_delay(params(gamma_gs_rad_per_s=gamma_gs)) > 0.0

    def test_ideal_limit_value(self):
        p = params(gamma_gs_rad_per_s=0.0)
        ideal = p.od * p.gamma_e_rad_per_s / p.rabi_rad_per_s ** 2
        assert eitline.group_delay(p) == pytest.approx(ideal, rel=0.05)

    def test_rabi_scaling(self):
        p1 = params(gamma_gs_rad_per_s=0.0)
        p2 = params(gamma_gs_rad_per_s=0.0, rabi_rad_per_s=2 * RABI)
        assert eitline.group_delay(p1) / eitline.group_delay(p2) == pytest.approx(4.0, rel=0.05)

    def test_od_scaling(self):
        p1 = params(gamma_gs_rad_per_s=0.0)
        p2 = params(gamma_gs_rad_per_s=0.0, od=20.0)
        assert eitline.group_delay(p2) / eitline.group_delay(p1) == pytest.approx(2.0, rel=0.05)

    def test_requires_control_field(self):
        with pytest.raises(eitline.EitError):
            eitline.group_delay(params(rabi_rad_per_s=0.0))


class TestCalibration:
    def test_window_matches_measured_value(self):
        # Shipped calibration: 2.2 MHz within 25% (it lands much closer).
        fwhm = eitline.transparency_fwhm(params())
        assert fwhm == pytest.approx(2.2e6, rel=0.25)
        assert fwhm == pytest.approx(2.2e6, rel=0.01)

    def test_delay_matches_measured_value(self):
        assert eitline.group_delay(params()) == pytest.approx(160e-9, rel=0.25)

    def test_calibration_search_reproduces_default(self):
        gamma = eitline.calibrate_gamma_gs()
        assert gamma == pytest.approx(eitline.DEFAULT_GAMMA_GS_RAD_PER_S, rel=0.05)
        fwhm = eitline.transparency_fwhm(params(gamma_gs_rad_per_s=gamma))
        assert fwhm == pytest.approx(2.2e6, rel=5e-3)

    def test_fwhm_increases_with_rabi(self):
        widths = [eitline.transparency_fwhm(params(rabi_rad_per_s=r * RABI))
                  for r in (0.8, 1.0, 1.3, 1.7)]
        assert widths == sorted(widths)

    def test_experiment_params_helper(self):
        p = eitline.experiment_eit_params()
        assert p.od == 10.0
        assert p.rabi_rad_per_s == pytest.approx(RABI)
        assert p.gamma_e_rad_per_s == pytest.approx(GAMMA_D1_RAD_PER_S)


class TestValidation:
    def test_rejects_bad_params(self):
        with pytest.raises(eitline.EitError):
            params(od=0.0)
        with pytest.raises(eitline.EitError):
            params(rabi_rad_per_s=-1.0)
        with pytest.raises(eitline.EitError):
            params(gamma_gs_rad_per_s=-1.0)
        with pytest.raises(eitline.EitError):
            eitline.transparency_fwhm(params(rabi_rad_per_s=0.0))
