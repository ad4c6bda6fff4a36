import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pomtx.errors import ParameterError
from pomtx.piezo import E14_GAP_SI, out_of_plane_coupling, rotated_piezo_tensor

E14_CGS = -0.1  # C/cm^2


class TestRotatedTensor:
    def test_phi_zero_entries(self):
        t = rotated_piezo_tensor(0.0, E14_CGS, unit="C/cm^2")
        e14 = t.e14
        assert e14 == pytest.approx(-1000.0)  # SI conversion
        m = t.entries
        # row 3: out-of-plane field couples to X and Y strain
        assert m[2, 0] == pytest.approx(-e14 / 2, rel=1e-15)  # +0.05 C/cm^2
        assert m[2, 1] == pytest.approx(+e14 / 2, rel=1e-15)  # -0.05 C/cm^2
        assert m[2, 5] == 0.0
        # rows 1-2 shear entries
        assert m[0, 4] == pytest.approx(-e14, rel=1e-15)  # e'_15 = +0.1 C/cm^2
        assert m[1, 3] == pytest.approx(+e14, rel=1e-15)  # e'_24 = -0.1 C/cm^2
        assert m[0, 3] == 0.0 and m[1, 4] == 0.0

    def test_phi_quarter_pi(self):
        t = rotated_piezo_tensor(np.pi / 4, E14_CGS, unit="C/cm^2")
        m = t.entries
        assert m[2, 0] == pytest.approx(0.0, abs=1e-13)
        assert m[2, 1] == pytest.approx(0.0, abs=1e-13)
        assert m[2, 5] == pytest.approx(t.e14, rel=1e-15)

    def test_pi_periodicity(self):
        for phi in (0.0, 0.3, 1.1, 2.5):
            a = rotated_piezo_tensor(phi, E14_CGS, unit="C/cm^2").entries
            b = rotated_piezo_tensor(phi + np.pi, E14_CGS, unit="C/cm^2").entries
            np.testing.assert_allclose(a, b, atol=1e-15 * abs(E14_GAP_SI) * 10)

    @settings(deadline=None, max_examples=60, derandomize=True)
    @given(phi=st.floats(-2 * np.pi, 2 * np.pi))
    def test_structural_zeros(self, phi):
        m = rotated_piezo_tensor(phi, E14_CGS, unit="C/cm^2").entries
        zero_positions = [
            (0, 0), (0, 1), (0, 2), (0, 5),
            (1, 0), (1, 1), (1, 2), (1, 5),
            (2, 2), (2, 3), (2, 4),
        ]
        for i, j in zero_positions:
            assert m[i, j] == 0.0

    @settings(deadline=None, max_examples=60, derandomize=True)
    @given(phi=st.floats(-2 * np.pi, 2 * np.pi))
    def test_entry_bound_and_antisymmetric_row3(self, phi):
        t = rotated_piezo_tensor(phi, E14_CGS, unit="C/cm^2")
        assert np.max(np.abs(t.entries)) <= abs(t.e14) * (1 + 1e-12)
        assert t.entries[2, 0] == pytest.approx(-t.entries[2, 1], rel=1e-12, abs=1e-12)

    @settings(deadline=None, max_examples=60, derandomize=True)
    @given(phi=st.floats(-2 * np.pi, 2 * np.pi))
    def test_frobenius_norm_rotation_invariant(self, phi):
        ref = rotated_piezo_tensor(0.0, E14_CGS, unit="C/cm^2").frobenius_norm()
        val = rotated_piezo_tensor(phi, E14_CGS, unit="C/cm^2").frobenius_norm()
        assert val == pytest.approx(ref, rel=1e-12)

    def test_unit_tag(self):
        si = rotated_piezo_tensor(0.2, -1000.0, unit="C/m^2")
        cgs = rotated_piezo_tensor(0.2, -0.1, unit="C/cm^2")
        np.testing.assert_allclose(si.entries, cgs.entries, rtol=1e-15)
        with pytest.raises(ParameterError):
            rotated_piezo_tensor(0.0, -0.1, unit="C/mm^2")

    def test_nonfinite_rejected(self):
        with pytest.raises(ParameterError):
            rotated_piezo_tensor(float("nan"), -0.1)


class TestOutOfPlaneCoupling:
    def test_phi_zero_magnitudes_and_signs(self):
        out = out_of_plane_coupling(0.0, E14_CGS, unit="C/cm^2")
        assert out["e31"] == pytest.approx(abs(E14_GAP_SI) / 2, rel=1e-15)
        assert out["e32"] == pytest.approx(-abs(E14_GAP_SI) / 2, rel=1e-15)

    def test_phi_quarter_pi_vanishes(self):
        out = out_of_plane_coupling(np.pi / 4, E14_CGS, unit="C/cm^2")
        assert out["e31"] == pytest.approx(0.0, abs=1e-10)
        assert out["e32"] == pytest.approx(0.0, abs=1e-10)

    def test_phi_eighth_pi(self):
        # oracle: cos(pi/4) = 1/sqrt(2)
        out = out_of_plane_coupling(np.pi / 8, E14_CGS, unit="C/cm^2")
        assert abs(out["e31"]) == pytest.approx(abs(E14_GAP_SI) / (2 * np.sqrt(2)), rel=1e-12)

    def test_extremal_at_multiples_of_half_pi(self):
        phis = np.linspace(0, np.pi, 721)
        mags = np.array(
            [abs(out_of_plane_coupling(p, E14_CGS, unit="C/cm^2")["e31"]) for p in phis]
        )
        peak = abs(E14_GAP_SI) / 2
        for p in (0.0, np.pi / 2, np.pi):
            i = int(np.argmin(np.abs(phis - p)))
            assert mags[i] == pytest.approx(peak, rel=1e-6)
        assert mags.max() <= peak * (1 + 1e-12)
