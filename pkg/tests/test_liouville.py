import numpy as np
import pytest

from spinsync.operators import (
    SIGMA_M,
    SIGMA_P,
    collective_operator,
    dissipator,
    dissipator_pair,
    trace_vector,
)
from spinsync.params import CouplingParams, PhysicalityError
from spinsync.liouville import (
    build_interaction_dissipators_appA,
    build_interaction_dissipators_jump,
    build_liouvillian_cascaded,
    build_liouvillian_full,
    collective_ops,
    correlators_full,
    interaction_superop,
    pt_check,
    steady_state_full,
)


def random_physical_params(rng, complex_vminus=True, delta=True):
    v = rng.uniform(0.5, 3.0)
    vp = rng.uniform(-1.0, 1.0) * v
    vm = rng.uniform(-2.0, 2.0) + (1j * rng.uniform(-2.0, 2.0) if complex_vminus else 0.0)
    d = rng.uniform(-1.0, 1.0) if delta else 0.0
    return CouplingParams(V=v, V_plus=vp, V_minus=vm, delta=d)


def sup_norm(a):
    d = a.tocoo()
    return 0.0 if d.nnz == 0 else float(np.max(np.abs(d.data)))


class TestAssemblyIdentities:
    def test_dissipator_sum_identity(self):
        ops = collective_ops(2)
        o1, o2 = ops.Sm_A, ops.Sm_B
        for sign in (+1, -1):
            lhs = dissipator(o1 + sign * o2)
            rhs = (
                dissipator(o1)
                + dissipator(o2)
                + sign * (dissipator(o1, o2) + dissipator(o2, o1))
            )
            assert sup_norm(lhs - rhs) < 1e-12

    def test_cascaded_form_matches_direct(self):
        rng = np.random.default_rng(7)
        ops = collective_ops(2)
        for _ in range(5):
            p = random_physical_params(rng, complex_vminus=False)
            l1 = build_liouvillian_full(p, ops=ops)
            l2 = build_liouvillian_cascaded(p, ops=ops)
            assert sup_norm(l1 - l2) < 1e-12

    def test_cascaded_rejects_complex_coupling(self):
        with pytest.raises(ValueError):
            build_liouvillian_cascaded(CouplingParams(V=2, V_minus=1j), N=1)

    def test_interaction_decompositions(self):
        rng = np.random.default_rng(11)
        ops = collective_ops(2)
        for _ in range(5):
            p = random_physical_params(rng)
            direct = interaction_superop(p, ops)
            assert sup_norm(direct - build_interaction_dissipators_appA(p, ops)) < 1e-12
            assert sup_norm(direct - build_interaction_dissipators_jump(p, ops)) < 1e-12

    def test_trace_preservation(self):
        rng = np.random.default_rng(3)
        p = random_physical_params(rng)
        ops = collective_ops(2)
        L = build_liouvillian_full(p, ops=ops)
        tr = trace_vector(ops.dim)
        assert np.max(np.abs(tr @ L)) < 1e-12

    def test_physicality_rejected(self):
        p = CouplingParams(V=2.0, V_plus=2.0)
        object.__setattr__(p, "V_plus", 3.0)  # bypass constructor on purpose
        with pytest.raises(PhysicalityError):
            build_liouvillian_full(p, N=1)


class TestSteadyState:
    def test_single_spin_rate_equation(self):
        # decoupled pumped-damped spins: s_z = (kappa - V)/(kappa + V)
        p = CouplingParams(V=2.0, V_plus=0.0, V_minus=0.0, N=1)
        rho, res = steady_state_full(p, 1)
        c = correlators_full(rho, 1)
        assert res.residual < 1e-10
        assert c.s_z_A == pytest.approx(-1.0 / 3.0, abs=1e-10)
        assert c.s_z_B == pytest.approx(-1.0 / 3.0, abs=1e-10)
        assert abs(c.sp_A) < 1e-10
        assert abs(c.pp_AB) < 1e-10

    def test_hermitian_positive_normalized(self):
        rng = np.random.default_rng(5)
        for _ in range(3):
            p = random_physical_params(rng)
            rho, res = steady_state_full(p, 2)
            assert res.residual < 1e-10
            assert np.allclose(rho, rho.conj().T)
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
            assert np.linalg.eigvalsh(rho).min() > -1e-8

    def test_real_steady_state_under_pt(self):
        p = CouplingParams(V=2.0, V_plus=0.7, V_minus=1.3, delta=0.0, N=2)
        rho, _ = steady_state_full(p, 2)
        assert np.max(np.abs(rho.imag)) < 1e-8

    def test_u1_charged_moments_vanish(self):
        rng = np.random.default_rng(9)
        for _ in range(3):
            p = random_physical_params(rng)
            rho, _ = steady_state_full(p, 2)
            c = correlators_full(rho, 2)
            assert abs(c.sp_A) < 1e-9
            assert abs(c.sp_B) < 1e-9
            ops = collective_ops(2)
            # <sigma+ sigma^z> style moments carry charge +1 as well
            m = np.trace(ops.Sp_A @ ops.Sz_B @ rho)
            assert abs(m) < 1e-9


class TestCorrelators:
    def test_all_up_product_state(self):
        ops = collective_ops(2)
        up = np.zeros(16)
        up[-1] = 1.0  # |1111> in the (ground=0, excited=1) ordering
        rho = np.outer(up, up).astype(complex)
        c = correlators_full(rho, 2, ops)
        assert c.s_z_A == pytest.approx(1.0)
        assert c.pp_AA == pytest.approx(0.0, abs=1e-14)
        assert c.zz_AA == pytest.approx(1.0)

    def test_symmetric_dicke_pair_state(self):
        # |j=1, m=0> per species: pp_aa = <s+_1 s-_2> = 1/2
        triplet0 = np.zeros(4)
        triplet0[1] = triplet0[2] = 1 / np.sqrt(2)
        psi = np.kron(triplet0, triplet0)
        rho = np.outer(psi, psi).astype(complex)
        c = correlators_full(rho, 2)
        assert c.pp_AA == pytest.approx(0.5)
        assert c.pp_BB == pytest.approx(0.5)
        assert c.s_z_A == pytest.approx(0.0, abs=1e-14)

    def test_single_spin_pair_correlators_undefined(self):
        p = CouplingParams(V=1.0, N=1)
        rho, _ = steady_state_full(p, 1)
        c = correlators_full(rho, 1)
        assert np.isnan(c.pp_AA)


class TestPTCheck:
    def test_symmetric_case(self):
        assert pt_check(CouplingParams(V=2, V_plus=0.5, V_minus=1.0, delta=0.0), 2) < 1e-12

    def test_detuning_breaks(self):
        assert pt_check(CouplingParams(V=2, V_plus=0.5, V_minus=1.0, delta=0.5), 2) > 1e-6

    def test_imaginary_coupling_breaks(self):
        assert pt_check(CouplingParams(V=2, V_plus=0.5, V_minus=1j, delta=0.0), 2) > 1e-6

    def test_iff_over_draws(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            v = rng.uniform(0.5, 3)
            vp = rng.uniform(-1, 1) * v
            vm = rng.uniform(-2, 2)
            sym = pt_check(CouplingParams(V=v, V_plus=vp, V_minus=vm, delta=0.0), 1)
            assert sym < 1e-12
            broken = pt_check(
                CouplingParams(V=v, V_plus=vp, V_minus=vm + 0.3j, delta=0.0), 1
            )
            assert broken > 1e-8
