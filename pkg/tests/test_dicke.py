import numpy as np
import pytest

from spinsync.params import CouplingParams
from spinsync.dicke import (
    MemoryBudgetError,
    PIDensityMatrix,
    _pump_diag_rate,
    build_liouvillian_pi,
    correlators_pi,
    degeneracy,
    dicke_basis,
    steady_state_pi,
)
from spinsync.liouville import correlators_full, steady_state_full

CORRELATOR_FIELDS = (
    "s_z_A",
    "s_z_B",
    "pp_AA",
    "pp_BB",
    "pp_AB",
    "zz_AA",
    "zz_BB",
    "zz_AB",
    "quad",
    "sp_A",
    "sp_B",
)


def assert_correlators_close(ca, cb, tol):
    for f in CORRELATOR_FIELDS:
        a, b = getattr(ca, f), getattr(cb, f)
        if isinstance(a, float) and np.isnan(a):
            assert np.isnan(b) or abs(b) < tol
            continue
        assert abs(a - b) < tol, f"{f}: {a} vs {b}"


class TestBasis:
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_dimension_sum_rule(self, n):
        b = dicke_basis(n)
        total = sum(b.weights[tj] * (tj + 1) for tj in b.twoj_list)
        assert total == 2**n

    def test_degeneracies_n3(self):
        assert degeneracy(3, 3) == 1
        assert degeneracy(3, 1) == 2

    def test_pump_sum_rule(self):
        # summed over target sectors the pump rate is the number of
        # ground-state spins, N/2 - m
        for n in (2, 3, 6):
            b = dicke_basis(n)
            for tj in b.twoj_list:
                for k in range(tj + 1):
                    m2 = -tj + 2 * k
                    tot = 0.0
                    for tjt in (tj - 2, tj, tj + 2):
                        if tjt not in b.weights:
                            continue
                        if tjt == tj and (k + 1 > tj):
                            continue
                        if tjt == tj - 2 and k > tj - 2:
                            continue
                        tot += float(_pump_diag_rate(n, tj, tjt, np.array([k]))[0])
                    assert tot == pytest.approx(n / 2 - m2 / 2, abs=1e-12)

    def test_budget(self):
        with pytest.raises(MemoryBudgetError):
            dicke_basis(12, dim_budget=1000)


class TestStructure:
    def test_trace_preservation(self):
        p = CouplingParams(V=2.0, V_plus=0.8, V_minus=0.5 + 0.2j, delta=0.3, N=4)
        L, basis = build_liouvillian_pi(p, 4)
        tr = basis.trace_row()
        assert np.max(np.abs(tr @ L)) < 1e-12

    def test_charge_conservation(self):
        p = CouplingParams(V=2.0, V_plus=0.8, V_minus=0.5 + 0.2j, delta=0.3, N=3)
        L, basis = build_liouvillian_pi(p, 3)
        q = basis.charge_array()
        coo = L.tocoo()
        assert np.all(q[coo.row] == q[coo.col])


class TestOracleAgreement:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_random_draws_match_full_solver(self, n):
        rng = np.random.default_rng(42 + n)
        for _ in range(3):
            v = rng.uniform(0.5, 3.0)
            p = CouplingParams(
                V=v,
                V_plus=rng.uniform(-1, 1) * v,
                V_minus=rng.uniform(-2, 2) + 1j * rng.uniform(-2, 2),
                delta=rng.uniform(-1, 1),
                N=n,
            )
            rho, _ = steady_state_full(p, n)
            cf = correlators_full(rho, n)
            pidm, res = steady_state_pi(p, n)
            cp = correlators_pi(pidm)
            assert res.residual < 1e-10
            assert_correlators_close(cf, cp, 1e-8)


class TestSteadyStatePI:
    def test_weighted_trace_and_positivity(self):
        p = CouplingParams(V=2.0, V_plus=1.0, V_minus=0.5, N=6)
        pidm, res = steady_state_pi(p, 6)
        assert res.residual < 1e-10
        assert pidm.weighted_trace().real == pytest.approx(1.0, abs=1e-12)
        assert pidm.positivity_floor() > -1e-8

    def test_real_under_pt(self):
        p = CouplingParams(V=2.0, V_plus=0.5, V_minus=1.2, delta=0.0, N=6)
        pidm, _ = steady_state_pi(p, 6)
        assert pidm.max_imag() < 1e-8
        c = correlators_pi(pidm)
        assert abs(c.pp_AB.imag) < 1e-8
        assert abs(c.quad.imag) < 1e-8
        assert abs(c.sp_A) < 1e-9

    def test_charge_sector_restriction_matches_unrestricted(self):
        p = CouplingParams(V=1.5, V_plus=0.6, V_minus=0.9, delta=0.2, N=3)
        p1, _ = steady_state_pi(p, 3, use_charge_sector=True)
        p2, _ = steady_state_pi(p, 3, use_charge_sector=False)
        assert_correlators_close(correlators_pi(p1), correlators_pi(p2), 1e-9)

    def test_save_load_round_trip(self, tmp_path):
        p = CouplingParams(V=2.0, V_plus=1.0, N=3)
        pidm, _ = steady_state_pi(p, 3)
        pidm.save(tmp_path / "rho")
        back = PIDensityMatrix.load(tmp_path / "rho")
        assert back.basis.N == 3
        for a, b in zip(pidm.blocks, back.blocks):
            assert np.allclose(a, b)
