import math

import numpy as np
import pytest

from holomem import registers
from holomem.constants import BOLTZMANN_J_PER_K, RB87_MASS_KG


def geometry(**overrides) -> registers.MemoryGeometry:
    base = dict(
        wavelength_m=795e-9,
        control_waist_m=850e-6,
        signal_waist_m=450e-6,
        cloud_length_m=2e-3,
        cloud_sigma_m=(0.5e-3, 0.5e-3, 1e-3),
        atom_count=int(1e8),
        temperature_k=140e-6,
        signal_angles_rad=tuple(math.radians(d) for d in (-1.0, -0.6, 0.6, 1.0)),
    )
    base.update(overrides)
    return registers.MemoryGeometry(**base)


class TestSpinWaveVectors:
    def test_copropagating_gives_zero(self):
        g = geometry(signal_angles_rad=(0.0,))
        (mode,) = registers.spin_wave_vectors(g)
        assert mode.magnitude == 0.0

    def test_one_degree_magnitude(self):
        g = geometry(signal_angles_rad=(math.radians(-1.0),))
        (mode,) = registers.spin_wave_vectors(g)
        # Independent trig oracle: |q| = 2 (2 pi / lambda) sin(theta/2).
        expected = 2.0 * (2.0 * math.pi / 795e-9) * math.sin(math.radians(1.0) / 2.0)
        assert mode.magnitude == pytest.approx(expected, rel=1e-12)
        assert mode.magnitude == pytest.approx(1.379e5, rel=1e-3)

    def test_four_modes_distinct_and_symmetric(self):
        modes = registers.spin_wave_vectors(geometry())
        assert len(modes) == 4
        mags = [m.magnitude for m in modes]
        assert len({m.q_rad_per_m for m in modes}) == 4
        assert mags[0] == pytest.approx(mags[3], rel=1e-12)  # -1 vs +1 degree
        assert mags[1] == pytest.approx(mags[2], rel=1e-12)

    def test_modes_lie_in_beam_plane(self):
        for m in registers.spin_wave_vectors(geometry()):
            assert m.q_rad_per_m[1] == 0.0


class TestCrosstalk:
    def test_identical_modes_exact_unity(self):
        g = geometry()
        m = registers.spin_wave_vectors(g)[0]
        assert registers.crosstalk(m, m, g, seed=0) == 1.0 + 0.0j

    def test_adjacent_modes_orthogonal(self):
        g = geometry()
        m1, m2 = registers.spin_wave_vectors(g)[:2]
        # Analytic expectation is below 1e-100 for adjacent experimental modes.
        assert registers.expected_crosstalk(m1, m2, g) < 1e-100
        samples = [registers.crosstalk(m1, m2, g, seed=s) for s in range(50)]
        mean = np.mean(samples)
        assert abs(mean) < 3.0 / math.sqrt(50 * registers.MAX_SAMPLE_ATOMS)

    def test_unit_dq_sigma_matches_characteristic_function(self):
        sigma = 0.5e-3
        g = geometry(cloud_sigma_m=(sigma, sigma, sigma), atom_count=20000)
        m1 = registers.SpinWaveMode((0.0, 0.0, 0.0))
        m2 = registers.SpinWaveMode((1.0 / sigma, 0.0, 0.0))
        assert registers.expected_crosstalk(m1, m2, g) == pytest.approx(math.exp(-0.5), rel=1e-12)
        samples = np.array([registers.crosstalk(m1, m2, g, seed=s) for s in range(50)])
        mean = samples.mean()
        stderr = samples.std(ddof=1) / math.sqrt(50)
        assert abs(mean - math.exp(-0.5)) < 3.0 * stderr

    def test_magnitude_bounded_by_one(self):
        g = geometry(atom_count=5000)
        modes = registers.spin_wave_vectors(g)
        for s in range(5):
            assert abs(registers.crosstalk(modes[0], modes[1], g, seed=s)) <= 1.0

    def test_deterministic_for_fixed_seed(self):
        g = geometry(atom_count=5000)
        m1, m2 = registers.spin_wave_vectors(g)[:2]
        assert registers.crosstalk(m1, m2, g, 7) == registers.crosstalk(m1, m2, g, 7)

    def test_stderr_scaling(self):
        assert registers.crosstalk_stderr(geometry(atom_count=10000)) == pytest.approx(0.01)
        assert registers.crosstalk_stderr(geometry()) == pytest.approx(1.0 / math.sqrt(1e5))


class TestModeCapacity:
    def test_experimental_value(self):
        assert registers.mode_capacity(geometry()) == pytest.approx(240.6, abs=0.5)

    def test_waist_exchange_invariance(self):
        g1 = geometry()
        g2 = geometry(control_waist_m=450e-6, signal_waist_m=850e-6)
        assert registers.mode_capacity(g1) == pytest.approx(registers.mode_capacity(g2))

    def test_scalings(self):
        base = registers.mode_capacity(geometry())
        doubled = registers.mode_capacity(
            geometry(control_waist_m=1700e-6, signal_waist_m=900e-6))
        assert doubled == pytest.approx(4 * base, rel=1e-12)
        halved = registers.mode_capacity(geometry(wavelength_m=2 * 795e-9))
        assert halved == pytest.approx(base / 2, rel=1e-12)


class TestMotionalDephasing:
    def test_experimental_diagnostic(self):
        g = geometry(signal_angles_rad=(math.radians(0.6),))
        (mode,) = registers.spin_wave_vectors(g)
        t = registers.motional_dephasing_time(mode, g)
        # Independent arithmetic: q = 2k sin(0.3 deg), v = sqrt(kB T / m).
        q = 2.0 * (2.0 * math.pi / 795e-9) * math.sin(math.radians(0.3))
        v = math.sqrt(BOLTZMANN_J_PER_K * 140e-6 / RB87_MASS_KG)
        assert t == pytest.approx(1.0 / (q * v), rel=1e-12)
        assert t == pytest.approx(1.0e-4, rel=0.1)
        assert t > 30 * 2.8e-6  # far above the observed storage lifetime

    def test_sqrt_temperature_scaling(self):
        g1 = geometry(signal_angles_rad=(math.radians(0.6),))
        g4 = geometry(signal_angles_rad=(math.radians(0.6),), temperature_k=4 * 140e-6)
        (m,) = registers.spin_wave_vectors(g1)
        assert registers.motional_dephasing_time(m, g4) == pytest.approx(
            registers.motional_dephasing_time(m, g1) / 2, rel=1e-12)

    def test_zero_q_sentinel(self):
        m = registers.SpinWaveMode((0.0, 0.0, 0.0))
        assert registers.motional_dephasing_time(m, geometry()) == math.inf


class TestValidation:
    def test_rejects_bad_lengths(self):
        with pytest.raises(registers.GeometryError):
            geometry(wavelength_m=-1.0)
        with pytest.raises(registers.GeometryError):
            geometry(cloud_length_m=0.0)

    def test_rejects_duplicate_angles(self):
        with pytest.raises(registers.GeometryError):
            geometry(signal_angles_rad=(0.1, 0.1))

    def test_rejects_bad_counts_and_temperature(self):
        with pytest.raises(registers.GeometryError):
            geometry(atom_count=0)
        with pytest.raises(registers.GeometryError):
            geometry(temperature_k=0.0)
