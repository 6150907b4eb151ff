import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsync.params import (
    BraidedWaveguideParams,
    CascadedWaveguideParams,
    CouplingParams,
    DirectionalCouplings,
    PhysicalityError,
    couplings_from_braided,
    couplings_from_cascaded,
    directional_from_symmetric,
    jump_decomposition,
    symmetric_from_directional,
)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False)
nonneg = st.floats(min_value=0, max_value=5, allow_nan=False)


class TestDirectionalCouplings:
    def test_example_real(self):
        d = directional_from_symmetric(CouplingParams(V=2, V_plus=1, V_minus=0.5))
        assert d.V_AB == pytest.approx(1.5)
        assert d.V_BA == pytest.approx(0.5)

    def test_maximally_antagonistic(self):
        d = directional_from_symmetric(CouplingParams(V=2, V_plus=0, V_minus=1))
        assert d.V_AB == pytest.approx(1.0)
        assert d.V_BA == pytest.approx(-1.0)

    def test_imaginary_coupling(self):
        d = directional_from_symmetric(CouplingParams(V=2, V_plus=1, V_minus=1j))
        assert d.V_AB == pytest.approx(1 + 1j)
        assert d.V_BA == pytest.approx(1 + 1j)

    @settings(max_examples=100, deadline=None)
    @given(vp=finite, vm_re=finite, vm_im=finite)
    def test_round_trip(self, vp, vm_re, vm_im):
        p = CouplingParams(V=100.0, V_plus=vp, V_minus=complex(vm_re, vm_im), kappa=1.0)
        d = directional_from_symmetric(p)
        v_plus, v_minus = symmetric_from_directional(d)
        assert v_plus == pytest.approx(vp, abs=1e-12)
        assert v_minus == pytest.approx(complex(vm_re, vm_im), abs=1e-12)

    def test_unrepresentable_pair_rejected(self):
        with pytest.raises(ValueError):
            symmetric_from_directional(DirectionalCouplings(1j, 1j))


class TestCascaded:
    def test_symmetric_cancellation(self):
        w = CascadedWaveguideParams(g1=0.7, g2=0.7, p1=1, p2=-1)
        f = couplings_from_cascaded(w, N=10)
        assert f.V_plus == pytest.approx(0.0)
        assert f.V_minus == pytest.approx(2 * 0.7**2 * 10)
        assert f.V == pytest.approx(2 * 0.7**2 * 10)

    def test_unidirectional(self):
        w = CascadedWaveguideParams(g1=0.5, g2=0.0, p1=1, p2=1, eta1=0.9)
        f = couplings_from_cascaded(w, N=4)
        d = directional_from_symmetric(
            CouplingParams(V=f.V, V_plus=f.V_plus, V_minus=f.V_minus)
        )
        assert d.V_AB == pytest.approx(2 * 0.5**2 * 0.9 * 4)
        assert d.V_BA == pytest.approx(0.0)

    def test_reciprocal_unit(self):
        w = CascadedWaveguideParams(g1=1, g2=1, p1=1, p2=1)
        f = couplings_from_cascaded(w, N=1)
        assert (f.V, f.V_plus, f.V_minus) == (2.0, 2.0, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(
        g1=nonneg,
        g2=nonneg,
        p1=st.sampled_from([1, -1]),
        p2=st.sampled_from([1, -1]),
        eta1=st.floats(min_value=0, max_value=1),
        eta2=st.floats(min_value=0, max_value=1),
        n=st.integers(min_value=1, max_value=50),
    )
    def test_always_physical(self, g1, g2, p1, p2, eta1, eta2, n):
        w = CascadedWaveguideParams(g1=g1, g2=g2, p1=p1, p2=p2, eta1=eta1, eta2=eta2)
        f = couplings_from_cascaded(w, N=n)
        assert abs(f.V_plus) <= f.V + 1e-12
        # constructing params must not raise
        CouplingParams(V=f.V, V_plus=f.V_plus, V_minus=f.V_minus, N=n)

    def test_validation(self):
        with pytest.raises(ValueError):
            CascadedWaveguideParams(g1=-1, g2=0)
        with pytest.raises(ValueError):
            CascadedWaveguideParams(g1=1, g2=1, p1=2)
        with pytest.raises(ValueError):
            CascadedWaveguideParams(g1=1, g2=1, eta1=1.5)


class TestBraided:
    def test_real_positive_coupling(self):
        f = couplings_from_braided(BraidedWaveguideParams(g_plus=1, g_minus=0.6), N=3)
        assert f.V_minus.imag == pytest.approx(0.0)
        assert f.V_minus.real > 0

    def test_imaginary_coupling_breaks_symmetry(self):
        w = BraidedWaveguideParams(g_plus=1, g_minus=1, beta=math.pi / 2)
        f = couplings_from_braided(w, N=1)
        assert f.V_minus == pytest.approx(2j)

    def test_full_interspecies_loss(self):
        w = BraidedWaveguideParams(g_plus=0.8, g_minus=0.2, eta_plus=0.0)
        f = couplings_from_braided(w, N=5)
        assert f.V_plus == pytest.approx(0.0)
        assert f.V == pytest.approx(2 * 0.8**2 * 5)

    def test_coupling_can_exceed_intraspecies(self):
        w = BraidedWaveguideParams(g_plus=0.5, g_minus=2.0)
        f = couplings_from_braided(w, N=1)
        assert abs(f.V_minus) > f.V


class TestJumpDecomposition:
    @pytest.mark.parametrize(
        "v,vp,expected",
        [(2, 2, (2, 0)), (2, -2, (0, 2)), (2, 0, (1, 1))],
    )
    def test_examples(self, v, vp, expected):
        jd = jump_decomposition(CouplingParams(V=v, V_plus=vp))
        assert jd.V_up_up == pytest.approx(expected[0])
        assert jd.V_up_down == pytest.approx(expected[1])

    @settings(max_examples=100, deadline=None)
    @given(v=nonneg, frac=st.floats(min_value=-1, max_value=1))
    def test_nonnegative_iff_physical(self, v, frac):
        jd = jump_decomposition(CouplingParams(V=v, V_plus=frac * v))
        assert jd.V_up_up >= 0
        assert jd.V_up_down >= 0
        assert jd.V_up_up - jd.V_up_down == pytest.approx(frac * v, abs=1e-12)
        assert jd.V_up_up + jd.V_up_down == pytest.approx(v, abs=1e-12)


class TestCouplingParams:
    def test_physicality_is_hard_error(self):
        with pytest.raises(PhysicalityError):
            CouplingParams(V=1.0, V_plus=1.5)
        with pytest.raises(PhysicalityError):
            CouplingParams(V=-0.1)
        with pytest.raises(ValueError):
            CouplingParams(V=1.0, kappa=0.0)
        with pytest.raises(ValueError):
            CouplingParams(V=1.0, N=0)

    def test_boundary_allowed(self):
        CouplingParams(V=2.0, V_plus=2.0)
        CouplingParams(V=2.0, V_plus=-2.0)

    def test_serialization_round_trip(self):
        p = CouplingParams(V=2, V_plus=-0.5, V_minus=1.5 - 0.25j, kappa=2.0, delta=0.3, N=12)
        assert CouplingParams.from_dict(p.to_dict()) == p
        p_inf = CouplingParams(V=2)
        d = p_inf.to_dict()
        assert d["N"] is None
        assert CouplingParams.from_dict(d).is_thermodynamic

    def test_complex_storage(self):
        p = CouplingParams(V=2, V_minus=1.0)
        assert isinstance(p.V_minus, complex)
