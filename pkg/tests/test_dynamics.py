import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from dtwin.dynamics import (
    FrfResult,
    HarmonicLoad,
    RayleighDamping,
    SystemMatrices,
    frf_modal_superposition,
    frf_solve,
    modal_analysis,
)
from dtwin.errors import ConfigError, InvalidMassMatrix, SingularSystem
from dtwin.lumped import LumpedParameters, build_lumped

from conftest import lumped_system

NO_DAMPING = RayleighDamping(0.0, 0.0)


def chain_frequencies(m, k, n=6):
    """Closed-form fixed-free uniform chain: w_j = 2 sqrt(k/m) sin((2j-1) pi / (2(2n+1)))."""
    j = np.arange(1, n + 1)
    return (1.0 / np.pi) * np.sqrt(k / m) * np.sin((2 * j - 1) * np.pi / (2 * (2 * n + 1)))


class TestModalAnalysis:
    def test_lumped_nominal_matches_reported_values(self, healthy_sys, nominal):
        modes = modal_analysis(healthy_sys, nominal.damping)
        np.testing.assert_allclose(modes.natural_frequencies[:3], [1358, 3999, 6398], rtol=5e-3)
        np.testing.assert_allclose(100 * modes.damping_ratios[:3], [6.0, 2.4, 1.9], atol=0.1)

    def test_single_oscillator(self):
        sys = SystemMatrices(np.array([[1.0]]), np.array([[(2 * np.pi) ** 2]]))
        modes = modal_analysis(sys, NO_DAMPING)
        assert modes.natural_frequencies[0] == pytest.approx(1.0, rel=1e-14)
        assert modes.damping_ratios[0] == 0.0

    @pytest.mark.parametrize("m,k", [(0.3925, 4.914e8), (1.0, 1.0), (2.5, 3e5)])
    def test_closed_form_chain(self, m, k):
        sys = build_lumped(LumpedParameters(m, k), np.full(6, k))
        modes = modal_analysis(sys, NO_DAMPING)
        np.testing.assert_allclose(modes.natural_frequencies, chain_frequencies(m, k), rtol=1e-9)

    def test_eigen_residuals(self, all_configurations, nominal):
        for sys in all_configurations:
            modes = modal_analysis(sys, nominal.damping)
            lam = modes.omegas ** 2
            for i in range(sys.dof_count):
                phi = modes.mode_shapes[:, i]
                kphi = sys.stiffness @ phi
                res = np.linalg.norm(kphi - lam[i] * sys.mass @ phi) / np.linalg.norm(kphi)
                assert res < 1e-10

    def test_modes_mass_normalised(self, healthy_sys, nominal):
        phi = modal_analysis(healthy_sys, nominal.damping).mode_shapes
        np.testing.assert_allclose(phi.T @ healthy_sys.mass @ phi, np.eye(6), atol=1e-12)

    def test_ratio_formula(self):
        damping = RayleighDamping(1e3, 3e-7)
        sys = SystemMatrices(np.array([[2.0]]), np.array([[8e6]]))
        w = np.sqrt(8e6 / 2.0)
        assert modal_analysis(sys, damping).damping_ratios[0] == pytest.approx(1e3 / (2 * w) + 3e-7 * w / 2)

    def test_invalid_mass(self):
        sys = SystemMatrices(np.diag([1.0, -1.0]), np.eye(2))
        with pytest.raises(InvalidMassMatrix, match="invalid mass matrix"):
            modal_analysis(sys, NO_DAMPING)

    def test_non_square_rejected(self):
        with pytest.raises(ConfigError):
            SystemMatrices(np.ones((2, 3)), np.ones((2, 3)))

    def test_negative_damping_rejected(self):
        with pytest.raises(ConfigError):
            RayleighDamping(-1.0, 0.0)


class TestFrfSolve:
    def test_static_series_compliance(self, healthy_sys, nominal, tip_load):
        frf = frf_solve(healthy_sys, nominal.damping, tip_load, [0.0])
        expected = tip_load.magnitude * np.cumsum(np.full(6, 1.0 / nominal.stiffness))
        np.testing.assert_allclose(frf.response[0].real, expected, rtol=1e-12)
        np.testing.assert_allclose(frf.response[0].imag, 0.0, atol=1e-20)
        assert abs(frf.response[0, 5]) == pytest.approx(1.2210e-4, rel=1e-4)

    def test_static_compliance_damaged(self, nominal, tip_load):
        from dtwin.lumped import DamageScenario, apply_damage

        springs = apply_damage(DamageScenario.at_spring(3, 0.2), nominal.stiffness)
        sys = build_lumped(nominal, springs)
        u = frf_solve(sys, nominal.damping, tip_load, [0.0]).response[0].real
        np.testing.assert_allclose(u, tip_load.magnitude * np.cumsum(1.0 / springs), rtol=1e-12)

    def test_undamped_resonance_is_singular(self):
        sys = SystemMatrices(np.array([[1.0]]), np.array([[(2 * np.pi) ** 2]]))
        with pytest.raises(SingularSystem, match="singular at frequency"):
            frf_solve(sys, NO_DAMPING, HarmonicLoad(1, 1.0), [1.0])

    def test_undamped_resonance_chain(self, healthy_sys):
        f1 = modal_analysis(healthy_sys, NO_DAMPING).natural_frequencies[0]
        with pytest.raises(SingularSystem):
            frf_solve(healthy_sys, NO_DAMPING, HarmonicLoad(6, 1e4), [f1])

    def test_peaks_at_natural_frequencies(self, healthy_sys, nominal, tip_load):
        freqs = np.linspace(0, 8000, 801)
        mag = frf_solve(healthy_sys, nominal.damping, tip_load, freqs).magnitude[:, 5]
        peaks = freqs[1:-1][(mag[1:-1] > mag[:-2]) & (mag[1:-1] > mag[2:])]
        modal = modal_analysis(healthy_sys, nominal.damping)
        modes = modal.natural_frequencies[:3]
        assert len(peaks) == 3
        step = freqs[1] - freqs[0]

        def neg_mag(f):
            return -frf_solve(healthy_sys, nominal.damping, tip_load, [f]).magnitude[0, 5]

        # exact damped peaks; damping and neighbouring modes shift them off f_n
        exact = np.array([
            minimize_scalar(neg_mag, bounds=(p - step, p + step), method="bounded",
                            options={"xatol": 1e-6}).x
            for p in peaks
        ])
        assert np.all(np.abs(peaks - exact) <= step)
        # damped peak lies within half the half-power bandwidth of the mode
        assert np.all(np.abs(exact - modes) <= modal.damping_ratios[:3] * modes)

    def test_negative_frequency_rejected(self, healthy_sys, nominal, tip_load):
        with pytest.raises(ConfigError):
            frf_solve(healthy_sys, nominal.damping, tip_load, [-1.0])

    def test_load_out_of_range(self, healthy_sys, nominal):
        with pytest.raises(ConfigError):
            frf_solve(healthy_sys, nominal.damping, HarmonicLoad(7, 1.0), [10.0])

    @pytest.mark.parametrize("dof,mag", [(0, 1.0), (1, 0.0), (1.5, 1.0)])
    def test_invalid_load(self, dof, mag):
        with pytest.raises(ConfigError):
            HarmonicLoad(dof, mag)

    def test_evaluation_order_irrelevant(self, healthy_sys, nominal, tip_load):
        freqs = np.linspace(0, 8000, 81)
        fwd = frf_solve(healthy_sys, nominal.damping, tip_load, freqs).response
        rev = frf_solve(healthy_sys, nominal.damping, tip_load, freqs[::-1]).response[::-1]
        np.testing.assert_array_equal(fwd, rev)

    def test_monotone_damping(self, healthy_sys, tip_load):
        f1 = modal_analysis(healthy_sys, NO_DAMPING).natural_frequencies[0]
        freqs = np.linspace(0.9 * f1, 1.1 * f1, 2001)
        peaks = []
        for a0 in (100.0, 500.0, 1000.0, 2000.0):
            frf = frf_solve(healthy_sys, RayleighDamping(a0, 3e-7), tip_load, freqs)
            peaks.append(frf.magnitude[:, 5].max())
        assert np.all(np.diff(peaks) < 0)


class TestModalSuperposition:
    def test_matches_direct_solve(self, all_configurations, nominal, tip_load):
        freqs = np.linspace(0, 8000, 801)
        for sys in all_configurations:
            direct = frf_solve(sys, nominal.damping, tip_load, freqs).response
            modal = frf_modal_superposition(sys, nominal.damping, tip_load, freqs).response
            rel = np.abs(modal - direct).max(axis=1) / np.abs(direct).max(axis=1)
            assert rel.max() < 1e-6

    def test_undamped_away_from_resonance(self, healthy_sys, tip_load):
        wn = modal_analysis(healthy_sys, NO_DAMPING).natural_frequencies
        freqs = np.arange(0.0, 8000.0, 7.0)
        freqs = freqs[np.min(np.abs(freqs[:, None] - wn[None, :]), axis=1) >= 1.0]
        direct = frf_solve(healthy_sys, NO_DAMPING, tip_load, freqs).response
        modal = frf_modal_superposition(healthy_sys, NO_DAMPING, tip_load, freqs).response
        rel = np.abs(modal - direct).max(axis=1) / np.abs(direct).max(axis=1)
        assert rel.max() < 1e-6

    def test_single_dof_analytic(self):
        m, k, a0, b0 = 2.0, 5e5, 3.0, 1e-4
        sys = SystemMatrices(np.array([[m]]), np.array([[k]]))
        damping = RayleighDamping(a0, b0)
        freqs = np.linspace(0, 200, 41)
        w = 2 * np.pi * freqs
        c = a0 * m + b0 * k
        expected = 7.0 / np.sqrt((k - w**2 * m) ** 2 + (w * c) ** 2)
        for fn in (frf_modal_superposition, frf_solve):
            got = fn(sys, damping, HarmonicLoad(1, 7.0), freqs).magnitude[:, 0]
            np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_reciprocity(self, all_configurations, nominal):
        freqs = np.linspace(0, 8000, 161)
        for sys in all_configurations:
            for a, b in [(1, 6), (2, 5), (3, 4), (1, 3)]:
                uab = frf_solve(sys, nominal.damping, HarmonicLoad(a, 1.0), freqs).response[:, b - 1]
                uba = frf_solve(sys, nominal.damping, HarmonicLoad(b, 1.0), freqs).response[:, a - 1]
                np.testing.assert_allclose(uab, uba, rtol=1e-10, atol=1e-12 * np.abs(uab).max())


@settings(max_examples=40, deadline=None)
@given(
    stiff=st.lists(st.floats(1e3, 1e9), min_size=6, max_size=6),
    mass=st.floats(0.01, 10.0),
    a0=st.floats(1.0, 2e3),
    b0=st.floats(1e-9, 1e-6),
    freq=st.floats(0.0, 1e4),
)
def test_oracle_equivalence_property(stiff, mass, a0, b0, freq):
    sys = build_lumped(LumpedParameters(mass, 1.0), np.array(stiff))
    damping = RayleighDamping(a0, b0)
    load = HarmonicLoad(6, 1.0)
    direct = frf_solve(sys, damping, load, [freq]).response[0]
    modal = frf_modal_superposition(sys, damping, load, [freq]).response[0]
    assert np.abs(modal - direct).max() <= 1e-6 * np.abs(direct).max()


def test_frf_result_magnitude():
    r = FrfResult(np.array([1.0]), np.array([[3 + 4j]]))
    assert r.magnitude[0, 0] == 5.0


def test_damaged_system_also_via_helper():
    from dtwin.lumped import DamageScenario

    sys = lumped_system(DamageScenario.at_spring(1, 0.2))
    assert sys.stiffness[0, 0] == pytest.approx(0.8 * 4.914e8 + 4.914e8)
