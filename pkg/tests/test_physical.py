import numpy as np
import pytest
from scipy.stats import norm

from dtwin.dynamics import HarmonicLoad, frf_solve, modal_analysis
from dtwin.errors import ConfigError
from dtwin.physical import (
    MAGNITUDE_FLOOR,
    BarProperties,
    MeasurementNoise,
    assemble_bar,
    measure_frf,
    noisy_magnitude,
)


@pytest.fixture(scope="module")
def bar():
    return BarProperties()


@pytest.fixture(scope="module")
def tip_frf(bar):
    freqs = np.linspace(0, 8000, 2500)
    return frf_solve(assemble_bar(bar), bar.damping, HarmonicLoad(bar.element_count, 1e4), freqs)


def first_frequency(props):
    return modal_analysis(assemble_bar(props), props.damping).natural_frequencies[0]


class TestAssembly:
    def test_reported_frequencies(self, bar):
        f = modal_analysis(assemble_bar(bar), bar.damping).natural_frequencies[:3]
        np.testing.assert_allclose(f, [1293, 3881, 6476], rtol=5e-3)

    def test_continuum_fundamental(self, bar):
        exact = bar.wave_speed / (4 * bar.length)
        assert abs(first_frequency(bar) / exact - 1) < 2e-3

    def test_single_element(self):
        props = BarProperties(element_count=1)
        sys = assemble_bar(props)
        assert sys.mass.shape == (1, 1)
        assert sys.mass[0, 0] == pytest.approx(props.density * props.area * props.length / 3, rel=1e-15)
        assert sys.stiffness[0, 0] == pytest.approx(props.elastic_modulus * props.area / props.length,
                                                    rel=1e-15)

    def test_size_and_definiteness(self, bar):
        sys = assemble_bar(bar)
        assert sys.mass.shape == (40, 40)
        for mat in (sys.mass, sys.stiffness):
            np.testing.assert_array_equal(mat, mat.T)
            assert np.linalg.eigvalsh(mat).min() > 0

    def test_mesh_convergence(self):
        exact = BarProperties().wave_speed / 4
        errors = [abs(first_frequency(BarProperties(element_count=n)) - exact) for n in (5, 10, 20, 40, 80)]
        assert all(b < a for a, b in zip(errors, errors[1:]))

    @pytest.mark.parametrize("field", ["density", "elastic_modulus", "area", "length"])
    def test_nonpositive_field_rejected(self, field):
        with pytest.raises(ConfigError):
            BarProperties(**{field: 0.0})

    def test_element_count_rejected(self):
        with pytest.raises(ConfigError):
            BarProperties(element_count=0)


class TestNoise:
    def test_zero_sigma_identity(self, bar, tip_frf):
        out = noisy_magnitude(tip_frf, MeasurementNoise(sigma=0.0))
        np.testing.assert_array_equal(out, tip_frf.magnitude)

    def test_measure_matches_solver(self, bar):
        freqs = np.linspace(100, 7000, 50)
        load = HarmonicLoad(bar.element_count, 1e4)
        m = measure_frf(bar, load, freqs, MeasurementNoise(sigma=0.0))
        ref = frf_solve(assemble_bar(bar), bar.damping, load, freqs)
        np.testing.assert_array_equal(m.noisy_magnitude, ref.magnitude)
        np.testing.assert_array_equal(m.frequencies, freqs)

    def test_deterministic(self, tip_frf):
        noise = MeasurementNoise(sigma=5e-4, seed=42)
        np.testing.assert_array_equal(noisy_magnitude(tip_frf, noise), noisy_magnitude(tip_frf, noise))
        other = noisy_magnitude(tip_frf, MeasurementNoise(sigma=5e-4, seed=43))
        assert not np.array_equal(noisy_magnitude(tip_frf, noise), other)

    def test_floor(self, tip_frf):
        out = noisy_magnitude(tip_frf, MeasurementNoise(sigma=5e-4, seed=1))
        assert out.min() >= MAGNITUDE_FLOOR

    def test_mean_matches_floored_gaussian_law(self, tip_frf):
        # 2500 frequencies x 40 DOFs = 1e5 draws; the floor biases the mean,
        # so compare against the exact mean of max(c + Z, floor) - c
        sigma = 5e-4
        c = tip_frf.magnitude
        assert c.size == 100_000
        diff = noisy_magnitude(tip_frf, MeasurementNoise(sigma=sigma, seed=7)) - c
        a = (MAGNITUDE_FLOOR - c) / sigma
        expected = (MAGNITUDE_FLOOR - c) * norm.cdf(a) + sigma * norm.pdf(a)
        resid = diff - expected
        se = resid.std(ddof=1) / np.sqrt(resid.size)
        assert abs(resid.mean()) < 3 * se

    def test_unbiased_when_floor_inactive(self, tip_frf):
        sigma = 1e-8
        c = tip_frf.magnitude
        assert c.min() > 10 * sigma
        diff = noisy_magnitude(tip_frf, MeasurementNoise(sigma=sigma, seed=8)) - c
        se = sigma / np.sqrt(diff.size)
        assert abs(diff.mean()) < 3 * se
        assert diff.std(ddof=1) == pytest.approx(sigma, rel=0.01)

    def test_decorrelated_across_dofs(self, tip_frf):
        sigma = 1e-8
        diff = noisy_magnitude(tip_frf, MeasurementNoise(sigma=sigma, seed=9)) - tip_frf.magnitude
        corr = np.corrcoef(diff.T)
        off = corr[~np.eye(corr.shape[0], dtype=bool)]
        # 40 x 39 coefficients at n = 2500; 5 sigma bound on the largest
        assert np.abs(off).max() < 5 / np.sqrt(diff.shape[0])

    def test_negative_sigma_rejected(self):
        with pytest.raises(ConfigError):
            MeasurementNoise(sigma=-1.0)
