"""Closed second-order moment equations for finite ensembles.

Third-order cumulants are set to zero, which closes the hierarchy on the
moment set {s^z_a, <sigma+_a sigma-_a> (distinct spins), <sigma+_A
sigma-_B>, <sigma^z_a sigma^z_a> (distinct spins), <sigma^z_A
sigma^z_B>}; U(1) symmetry removes all charged moments such as
<sigma+_a> and <sigma^z sigma+>.  For real V_minus the right-hand sides
reduce term by term to the standard second-order expansion of the model;
for complex couplings the conjugation placement follows from the adjoint
master equation (V_BA enters the A equations conjugated, V_AB the B
equations unconjugated), which is cross-checked against the exact solver
in the tests.  In the limit N -> infinity the system reproduces the
mean-field equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .params import CouplingParams, directional_from_symmetric

__all__ = [
    "CumulantState2",
    "C2SteadyResult",
    "C2ConvergenceError",
    "c2_rhs",
    "c2_default_ic",
    "c2_integrate",
    "c2_steady",
    "correlators_vs_n",
]


class C2ConvergenceError(RuntimeError):
    """Steady-state integration exhausted its budget; carries the residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class CumulantState2:
    """Second-order moment set (distinct-spin pair correlators)."""

    s_z_A: float
    s_z_B: float
    pp_AA: float
    pp_BB: float
    pp_AB: complex
    zz_AA: float
    zz_BB: float
    zz_AB: float

    def to_vec(self) -> np.ndarray:
        return np.array(
            [
                self.s_z_A,
                self.s_z_B,
                self.pp_AA,
                self.pp_BB,
                self.pp_AB.real,
                self.pp_AB.imag,
                self.zz_AA,
                self.zz_BB,
                self.zz_AB,
            ]
        )

    @classmethod
    def from_vec(cls, y: np.ndarray) -> "CumulantState2":
        return cls(
            s_z_A=float(y[0]),
            s_z_B=float(y[1]),
            pp_AA=float(y[2]),
            pp_BB=float(y[3]),
            pp_AB=complex(y[4], y[5]),
            zz_AA=float(y[6]),
            zz_BB=float(y[7]),
            zz_AB=float(y[8]),
        )

    def range_violation(self) -> float:
        """How far any moment exceeds its physical range (0 when inside)."""
        v = 0.0
        for x in (self.s_z_A, self.s_z_B, self.zz_AA, self.zz_BB, self.zz_AB):
            v = max(v, abs(x) - 1.0)
        for x in (self.pp_AA, self.pp_BB):
            v = max(v, -x, x - 0.25)
        v = max(v, abs(self.pp_AB) - 0.25)
        return max(v, 0.0)


def _rhs(y: np.ndarray, p: CouplingParams, N: int) -> np.ndarray:
    kappa, delta, V = p.kappa, p.delta, p.V
    d = directional_from_symmetric(p)
    v_ab, v_ba = d.V_AB, d.V_BA

    sza, szb, ppaa, ppbb = y[0], y[1], y[2], y[3]
    c = complex(y[4], y[5])
    zzaa, zzbb, zzab = y[6], y[7], y[8]

    re_ba = (v_ba.conjugate() * c).real  # Re[conj(V_BA) <s+_A s-_B>]
    re_ab = (v_ab * c).real

    fn1 = (N - 1.0) / N
    fn2 = (N - 2.0) / N

    dsza = kappa * (1 - sza) - (V / N) * (1 + sza) - 2 * V * fn1 * ppaa - 2 * re_ba
    dszb = kappa * (1 - szb) - (V / N) * (1 + szb) - 2 * V * fn1 * ppbb - 2 * re_ab

    dppaa = (
        -(kappa + V / N) * ppaa
        + (V / (2 * N)) * (zzaa + sza)
        + V * fn2 * sza * ppaa
        + sza * re_ba
    )
    dppbb = (
        -(kappa + V / N) * ppbb
        + (V / (2 * N)) * (zzbb + szb)
        + V * fn2 * szb * ppbb
        + szb * re_ab
    )

    dc = (
        -(kappa + V / N - 1j * delta) * c
        + V * (fn1 / 2.0) * (sza + szb) * c
        + v_ba * (sza + zzab) / (4.0 * N)
        + v_ab.conjugate() * (szb + zzab) / (4.0 * N)
        + (fn1 / 2.0) * (v_ab.conjugate() * szb * ppaa + v_ba * sza * ppbb)
    )

    dzzaa = (
        2 * kappa * (sza - zzaa)
        - 2 * (V / N) * (sza + zzaa)
        - 4 * V * fn2 * sza * ppaa
        - 4 * sza * re_ba
        + 4 * (V / N) * ppaa
    )
    dzzbb = (
        2 * kappa * (szb - zzbb)
        - 2 * (V / N) * (szb + zzbb)
        - 4 * V * fn2 * szb * ppbb
        - 4 * szb * re_ab
        + 4 * (V / N) * ppbb
    )
    dzzab = (
        kappa * (sza + szb - 2 * zzab)
        - (V / N) * (sza + szb + 2 * zzab)
        - 2 * V * fn1 * (szb * ppaa + sza * ppbb)
        - 2 * fn1 * (szb * re_ba + sza * re_ab)
        + 4 * (p.V_plus / N) * c.real
    )

    return np.array(
        [dsza, dszb, dppaa, dppbb, dc.real, dc.imag, dzzaa, dzzbb, dzzab]
    )


def c2_rhs(state: CumulantState2, params: CouplingParams, N: int | None = None) -> CumulantState2:
    """Time derivative of the moment set (requires finite N >= 2)."""
    if N is None:
        N = params.N
    if N is None or N < 2:
        raise ValueError("cumulant equations need a finite N >= 2")
    return CumulantState2.from_vec(_rhs(state.to_vec(), params, N))


def c2_default_ic(seed: float = 1e-3) -> CumulantState2:
    """Inverted uncorrelated state with a small symmetry-breaking seed.

    All connected pair cumulants vanish: zz moments equal s_z*s_z = 1, pp
    moments equal 0 up to the pp_AB seed needed to leave the unstable
    symmetric manifold.
    """
    return CumulantState2(
        s_z_A=1.0,
        s_z_B=1.0,
        pp_AA=0.0,
        pp_BB=0.0,
        pp_AB=complex(seed, 0.0),
        zz_AA=1.0,
        zz_BB=1.0,
        zz_AB=1.0,
    )


def c2_integrate(
    ic: CumulantState2,
    params: CouplingParams,
    t_eval: np.ndarray,
    N: int | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> np.ndarray:
    """Moment trajectory on a user grid; rows follow CumulantState2.to_vec."""
    if N is None:
        N = params.N
    if N is None or N < 2:
        raise ValueError("cumulant equations need a finite N >= 2")
    sol = solve_ivp(
        lambda t, y: _rhs(y, params, N),
        (float(t_eval[0]), float(t_eval[-1])),
        ic.to_vec(),
        t_eval=t_eval,
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(f"cumulant integration failed: {sol.message}")
    return sol.y.T


@dataclass
class C2SteadyResult:
    state: CumulantState2
    converged: bool
    averaged: bool
    residual: float
    t_final: float
    period: float | None = None


def _detect_period(t: np.ndarray, x: np.ndarray) -> float | None:
    """Dominant oscillation period from the autocorrelation peak."""
    x = x - x.mean()
    if np.max(np.abs(x)) < 1e-12:
        return None
    ac = np.correlate(x, x, mode="full")[x.size - 1 :]
    ac /= ac[0]
    # first local maximum beyond the initial decay
    drop = np.flatnonzero(ac < 0.0)
    if drop.size == 0:
        return None
    start = drop[0]
    seg = ac[start:]
    k = int(np.argmax(seg))
    if seg[k] < 0.5:
        return None
    lag = start + k
    dt = t[1] - t[0]
    return float(lag * dt)


def c2_steady(
    params: CouplingParams,
    N: int | None = None,
    ic: CumulantState2 | None = None,
    residual_tol: float = 1e-10,
    t_budget: float = 1e7,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    osc_check_after: float = 2000.0,
) -> C2SteadyResult:
    """Long-time moments: fixed point, or one-period average when the
    moments keep oscillating (flagged as averaged).

    Steady state by time integration rather than root finding: the system
    has oscillatory attractors at finite N in the traveling-wave regime,
    where a Newton search is ill posed.
    """
    if N is None:
        N = params.N
    if N is None or N < 2:
        raise ValueError("cumulant equations need a finite N >= 2")
    y = (ic or c2_default_ic()).to_vec()
    t = 0.0
    chunk = 50.0
    residual = float(np.max(np.abs(_rhs(y, params, N))))
    while t < t_budget:
        sol = solve_ivp(
            lambda tt, yy: _rhs(yy, params, N),
            (0.0, chunk),
            y,
            method="DOP853",
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise RuntimeError(f"cumulant integration failed: {sol.message}")
        y = sol.y[:, -1]
        t += chunk
        residual = float(np.max(np.abs(_rhs(y, params, N))))
        if residual < residual_tol:
            return C2SteadyResult(
                state=CumulantState2.from_vec(y),
                converged=True,
                averaged=False,
                residual=residual,
                t_final=t,
            )
        if t >= osc_check_after:
            # look for a limit cycle of the moments
            dt = 0.02
            t_eval = np.arange(0.0, 400.0 + dt, dt)
            traj = c2_integrate(
                CumulantState2.from_vec(y), params, t_eval, N=N, rtol=rtol, atol=atol
            )
            period = _detect_period(t_eval, traj[:, 0])
            if period is not None:
                n_per = max(2, int(round(period / dt)))
                avg = traj[-n_per:].mean(axis=0)
                return C2SteadyResult(
                    state=CumulantState2.from_vec(avg),
                    converged=False,
                    averaged=True,
                    residual=residual,
                    t_final=t + t_eval[-1],
                    period=period,
                )
            osc_check_after *= 4.0
        chunk = min(chunk * 1.8, 4000.0)
    raise C2ConvergenceError(
        f"no steady state within t = {t_budget}; residual {residual:.3e}",
        residual,
    )


def correlators_vs_n(
    params: CouplingParams,
    n_values: list[int],
    ic: CumulantState2 | None = None,
    **steady_kwargs,
) -> list[dict]:
    """Moment sweep over ensemble sizes (one steady solve per N)."""
    rows = []
    for n in n_values:
        res = c2_steady(params.with_(N=int(n)), ic=ic, **steady_kwargs)
        s = res.state
        rows.append(
            {
                "N": int(n),
                "s_z_A": s.s_z_A,
                "pp_AA": s.pp_AA,
                "pp_AB_re": s.pp_AB.real,
                "pp_AB_im": s.pp_AB.imag,
                "zz_AB": s.zz_AB,
                "flag": "averaged" if res.averaged else "converged",
            }
        )
    return rows
