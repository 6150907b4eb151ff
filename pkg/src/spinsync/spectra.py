"""Two-time correlations via the quantum regression theorem, spectral
densities, exceptional-point detection, and waveguide output observables.

The correlation vector c(tau) = (<s+_A(t+tau) s-_b(t)>, <s+_B(t+tau)
s-_b(t)>) obeys dc/dtau = M c with

    M = 1/2 [[X_A, s^z_A V_AB], [s^z_B V_BA, X_B]],
    X_a = (s^z_a (N-1) - 1) V/N + i delta_a - kappa,   delta_A = -delta_B,

(X_a -> s^z_a V + i delta_a - kappa in the thermodynamic limit); the
populations entering M are evaluated at t + tau, so in regimes where the
moments keep oscillating M must be co-evolved with the second-order
cumulant system rather than frozen.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .cumulant import CumulantState2, _rhs as _c2_rhs
from .params import CouplingParams, directional_from_symmetric

__all__ = [
    "RegressionMatrix",
    "CorrelationVector",
    "Spectrum",
    "EPLocation",
    "DivergenceError",
    "NonDecayedTailError",
    "regression_matrix",
    "initial_correlations",
    "evolve_correlations",
    "evolve_correlations_coupled",
    "spectral_density",
    "spectral_density_fast",
    "exceptional_point_scan",
    "output_field_correlations",
]


class DivergenceError(RuntimeError):
    """Correlations grow beyond bound before tau_max."""


class NonDecayedTailError(RuntimeError):
    """Correlation tail has not decayed and windowing was disabled."""


@dataclass(frozen=True)
class RegressionMatrix:
    """Dynamical 2x2 matrix of the two-time correlations."""

    M: np.ndarray
    X_A: complex
    X_B: complex
    s_z_A: float
    s_z_B: float
    params: CouplingParams
    N: int | None

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.M)

    def discriminant(self) -> complex:
        """(X_A - X_B)^2 + 4 s^z_A s^z_B V_AB V_BA; zero at eigenvector
        collinearity."""
        d = directional_from_symmetric(self.params)
        return (self.X_A - self.X_B) ** 2 + 4.0 * self.s_z_A * self.s_z_B * d.V_AB * d.V_BA

    def eigenvector_condition(self) -> float:
        _, vecs = np.linalg.eig(self.M)
        return float(np.linalg.cond(vecs))

    def is_stable(self) -> bool:
        return bool(np.max(self.eigenvalues().real) < 0)


def regression_matrix(
    params: CouplingParams,
    s_z_A: float,
    s_z_B: float,
    N: int | None = None,
) -> RegressionMatrix:
    """Build M from the instantaneous populations.

    The factorization <s^z s+ s-> ~ s^z <s+ s-> of the third-order terms
    is built into this form.  ``N=None`` (or a thermodynamic params.N)
    selects the limiting X_a.
    """
    for s in (s_z_A, s_z_B):
        if not -1.0 - 1e-9 <= s <= 1.0 + 1e-9:
            raise ValueError(f"population out of range: {s}")
    if N is None:
        N = params.N
    kappa, delta, V = params.kappa, params.delta, params.V
    if N is None:
        x_a = s_z_A * V + 1j * delta - kappa
        x_b = s_z_B * V - 1j * delta - kappa
    else:
        x_a = (s_z_A * (N - 1) - 1.0) * V / N + 1j * delta - kappa
        x_b = (s_z_B * (N - 1) - 1.0) * V / N - 1j * delta - kappa
    d = directional_from_symmetric(params)
    m = 0.5 * np.array(
        [[x_a, s_z_A * d.V_AB], [s_z_B * d.V_BA, x_b]], dtype=complex
    )
    return RegressionMatrix(
        M=m, X_A=x_a, X_B=x_b, s_z_A=s_z_A, s_z_B=s_z_B, params=params, N=N
    )


@dataclass
class CorrelationVector:
    """Two-time correlations on a tau grid, for a fixed source operator."""

    tau: np.ndarray
    c: np.ndarray  # shape (n_tau, 2), columns (<s+_A ... s-_b>, <s+_B ... s-_b>)
    source: str  # "A" or "B"


def initial_correlations(state: CumulantState2, source: str = "A") -> np.ndarray:
    """Equal-time start vector c(0) from steady moments.

    For source A: (<s+_A s-_A>, <s+_B s-_A>) = (pp_AA, conj(pp_AB)); for
    source B: (pp_AB, pp_BB).  Handing these through unchanged keeps
    c(0) exactly consistent with the equal-time moments.
    """
    if source == "A":
        return np.array([state.pp_AA, np.conj(state.pp_AB)], dtype=complex)
    if source == "B":
        return np.array([state.pp_AB, state.pp_BB], dtype=complex)
    raise ValueError("source must be 'A' or 'B'")


def evolve_correlations(
    c0: np.ndarray,
    M: RegressionMatrix | np.ndarray,
    tau_max: float = 2000.0,
    dtau: float = 0.02,
    source: str = "A",
    bound: float = 1e8,
) -> CorrelationVector:
    """Propagate dc/dtau = M c for constant M.

    Uses the exact one-step propagator exp(M dtau), which stays valid at
    eigenvalue coalescence.  Raises :class:`DivergenceError` when the
    solution exceeds ``bound`` times its initial magnitude (unstable M
    with too large tau_max).
    """
    from scipy.linalg import expm

    m = M.M if isinstance(M, RegressionMatrix) else np.asarray(M, dtype=complex)
    n = int(round(tau_max / dtau))
    tau = np.arange(n + 1) * dtau
    e = expm(m * dtau)
    c = np.empty((n + 1, 2), dtype=complex)
    c[0] = c0
    scale = max(np.max(np.abs(c0)), 1e-300)
    for i in range(n):
        c[i + 1] = e @ c[i]
    if np.max(np.abs(c)) > bound * scale:
        raise DivergenceError(
            f"correlations grew by more than {bound:g}; reduce tau_max or "
            "check stability of M"
        )
    return CorrelationVector(tau=tau, c=c, source=source)


def evolve_correlations_coupled(
    params: CouplingParams,
    start: CumulantState2,
    N: int | None = None,
    source: str = "A",
    tau_max: float = 2000.0,
    dtau: float = 0.02,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    bound: float = 1e8,
) -> tuple[CorrelationVector, np.ndarray]:
    """Propagate c(tau) with time-dependent populations.

    The second-order moments are co-evolved from ``start`` (a point on
    the long-time attractor) and feed M(tau) continuously; this is the
    mandatory path in the modulated regime where frozen-M spectra are
    wrong.  Returns the correlations and the moment trajectory.
    """
    if N is None:
        N = params.N
    if N is None or N < 2:
        raise ValueError("coupled evolution needs a finite N >= 2")
    kappa, delta, V = params.kappa, params.delta, params.V
    d = directional_from_symmetric(params)

    def rhs(t, y):
        mom = y[:9]
        c = np.array([y[9] + 1j * y[10], y[11] + 1j * y[12]])
        dmom = _c2_rhs(mom, params, N)
        sza, szb = mom[0], mom[1]
        x_a = (sza * (N - 1) - 1.0) * V / N + 1j * delta - kappa
        x_b = (szb * (N - 1) - 1.0) * V / N - 1j * delta - kappa
        dc = 0.5 * np.array(
            [
                x_a * c[0] + sza * d.V_AB * c[1],
                szb * d.V_BA * c[0] + x_b * c[1],
            ]
        )
        return np.concatenate([dmom, [dc[0].real, dc[0].imag, dc[1].real, dc[1].imag]])

    c0 = initial_correlations(start, source)
    y0 = np.concatenate(
        [start.to_vec(), [c0[0].real, c0[0].imag, c0[1].real, c0[1].imag]]
    )
    n = int(round(tau_max / dtau))
    tau = np.arange(n + 1) * dtau
    sol = solve_ivp(
        rhs, (0.0, float(tau[-1])), y0, t_eval=tau, method="DOP853", rtol=rtol, atol=atol
    )
    if not sol.success:
        raise RuntimeError(f"coupled correlation evolution failed: {sol.message}")
    c = np.stack([sol.y[9] + 1j * sol.y[10], sol.y[11] + 1j * sol.y[12]], axis=1)
    scale = max(np.max(np.abs(c0)), 1e-300)
    if np.max(np.abs(c)) > bound * scale:
        raise DivergenceError("correlations grew beyond bound in coupled evolution")
    return CorrelationVector(tau=tau, c=c, source=source), sol.y[:9].T


@dataclass
class Spectrum:
    """One-sided Fourier transform P(omega) of the correlations."""

    omega: np.ndarray
    P: np.ndarray  # shape (n_omega, 2)
    source: str
    windowed: bool
    window_time: float | None
    metadata: dict


def spectral_density(
    c: CorrelationVector,
    omega: np.ndarray | None = None,
    window: str = "auto",
    tail_tol: float = 1e-3,
) -> Spectrum:
    """P(omega) = integral_0^inf c(tau) e^{i omega tau} dtau by quadrature.

    When the tail |c(tau_max)| has not decayed below ``tail_tol`` times
    the peak, an exponential window is applied and flagged (``window=
    'auto'``), or the computation is refused (``window='off'``).
    """
    tau = c.tau
    dtau = tau[1] - tau[0]
    if omega is None:
        res = 2.0 * np.pi / tau[-1]
        omega = np.arange(-4.0, 4.0 + res / 2, res)
    data = c.c
    peak = np.max(np.abs(data))
    tail = np.max(np.abs(data[-1])) if peak > 0 else 0.0
    windowed = False
    window_time = None
    if peak > 0 and tail > tail_tol * peak:
        if window == "off":
            raise NonDecayedTailError(
                f"tail |c(tau_max)|/max = {tail / peak:.2e} above {tail_tol}; "
                "increase tau_max or allow windowing"
            )
        windowed = True
        window_time = tau[-1] / 5.0
        data = data * np.exp(-tau / window_time)[:, None]
    # trapezoid weights, chunked over omega to bound memory
    wts = np.full(tau.size, dtau, dtype=float)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    P = np.empty((omega.size, 2), dtype=complex)
    chunk = max(1, int(5e6 // tau.size))
    for i in range(0, omega.size, chunk):
        om = omega[i : i + chunk]
        phase = np.exp(1j * np.outer(om, tau))
        P[i : i + chunk] = phase @ (data * wts[:, None])
    return Spectrum(
        omega=np.asarray(omega, dtype=float),
        P=P,
        source=c.source,
        windowed=windowed,
        window_time=window_time,
        metadata={"tau_max": float(tau[-1]), "dtau": float(dtau), "tail_ratio": float(tail / peak) if peak > 0 else 0.0},
    )


def spectral_density_fast(
    M: RegressionMatrix | np.ndarray,
    c0: np.ndarray,
    omega: np.ndarray,
    source: str = "A",
) -> Spectrum:
    """Constant-M closed form P(omega) = -(M + i omega I)^{-1} c(0)."""
    m = M.M if isinstance(M, RegressionMatrix) else np.asarray(M, dtype=complex)
    ev = np.linalg.eigvals(m)
    if np.max(ev.real) >= 0:
        warnings.warn(
            "regression matrix is not strictly stable; fast-path spectrum "
            "is a formal resolvent",
            RuntimeWarning,
        )
    omega = np.asarray(omega, dtype=float)
    P = np.empty((omega.size, 2), dtype=complex)
    a, b, cc, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    iw = 1j * omega
    det = (a + iw) * (d + iw) - b * cc
    P[:, 0] = -((d + iw) * c0[0] - b * c0[1]) / det
    P[:, 1] = -(-(cc) * c0[0] + (a + iw) * c0[1]) / det
    return Spectrum(
        omega=omega,
        P=P,
        source=source,
        windowed=False,
        window_time=None,
        metadata={"method": "resolvent"},
    )


@dataclass(frozen=True)
class EPLocation:
    """Parameter value where the eigenvalues and eigenvectors coalesce."""

    parameter: str
    value: float
    eigenvalue_1: complex
    eigenvalue_2: complex
    discriminant: complex
    eigenvector_condition: float
    kind: str  # "exceptional" or "diabolic"


def exceptional_point_scan(
    params: CouplingParams,
    parameter: str,
    values: np.ndarray,
    populations,
    N: int | None = None,
    disc_tol: float = 1e-8,
    cond_threshold: float = 1e3,
    max_bisect: int = 60,
) -> tuple[list[dict], list[EPLocation]]:
    """Locate eigenvalue coalescence of M along a one-parameter scan.

    ``populations`` maps a CouplingParams to (s_z_A, s_z_B); typically a
    cumulant2 steady solve at finite N or the mean-field steady values.
    The scan records both eigenvalues and the eigenvector condition
    number at every point, then root-finds sign changes of Re(disc)
    (where the discriminant can actually vanish) down to |disc| <
    ``disc_tol``.  A coalescence where the eigenvectors stay independent
    is flagged diabolic instead of exceptional.  No crossing in range
    simply yields an empty list.
    """
    from .meanfield import _set_param

    values = np.asarray(values, dtype=float)

    def build(v: float) -> RegressionMatrix:
        p = _set_param(params, parameter, v)
        sza, szb = populations(p)
        return regression_matrix(p, sza, szb, N=N)

    rows = []
    discs = []
    for v in values:
        rm = build(v)
        ev = np.sort_complex(rm.eigenvalues())
        disc = rm.discriminant()
        discs.append(disc)
        rows.append(
            {
                parameter: float(v),
                "lambda1_re": float(ev[0].real),
                "lambda1_im": float(ev[0].imag),
                "lambda2_re": float(ev[1].real),
                "lambda2_im": float(ev[1].imag),
                "disc_re": float(disc.real),
                "disc_im": float(disc.imag),
                "condition": rm.eigenvector_condition(),
            }
        )

    eps: list[EPLocation] = []
    scale = max(1.0, float(np.max(np.abs(discs))))
    for i in range(len(values) - 1):
        d0, d1 = discs[i], discs[i + 1]
        if d0.real == 0.0 and abs(d0.imag) < disc_tol * scale:
            lo = hi = values[i]
        elif d0.real * d1.real < 0:
            lo, hi = values[i], values[i + 1]
            flo = d0.real
            for _ in range(max_bisect):
                mid = 0.5 * (lo + hi)
                dm = build(mid).discriminant()
                if abs(dm) < disc_tol * scale or hi - lo < 1e-14 * max(1.0, abs(mid)):
                    lo = hi = mid
                    break
                if flo * dm.real < 0:
                    hi = mid
                else:
                    lo = mid
                    flo = dm.real
        else:
            continue
        v_ep = 0.5 * (lo + hi)
        rm = build(v_ep)
        disc = rm.discriminant()
        if abs(disc.imag) > 1e-4 * scale:
            continue  # Re crossing but Im stays finite: no true coalescence
        ev = rm.eigenvalues()
        cond = rm.eigenvector_condition()
        kind = "exceptional" if cond > cond_threshold else "diabolic"
        eps.append(
            EPLocation(
                parameter=parameter,
                value=float(v_ep),
                eigenvalue_1=complex(ev[0]),
                eigenvalue_2=complex(ev[1]),
                discriminant=complex(disc),
                eigenvector_condition=cond,
                kind=kind,
            )
        )
    return rows, eps


@dataclass(frozen=True)
class OutputFieldMoments:
    """Stationary photon observables of the two chiral output modes."""

    intensity_1: float
    intensity_2: float
    cross_12: complex


def output_field_correlations(corr, w, N: int | None = None) -> OutputFieldMoments:
    """Output-mode intensities from the spin correlators.

    The chiral modes leave as a_{1,out} = a_{1,in} + g1 (S-_A + p1 S-_B)
    and a_{2,out} = a_{2,in} + g2 (S-_B + p2 S-_A); with vacuum inputs
    the normally ordered moments reduce to collective spin moments,
    reconstructed from the distinct-spin correlators by inverting the
    same-site subtractions.
    """
    if N is None:
        N = corr.N
    ss_aa = N * (1.0 + corr.s_z_A) / 2.0
    ss_bb = N * (1.0 + corr.s_z_B) / 2.0
    if N >= 2:
        ss_aa += N * (N - 1) * corr.pp_AA
        ss_bb += N * (N - 1) * corr.pp_BB
    ss_ab = N**2 * complex(corr.pp_AB)
    ss_ba = np.conj(ss_ab)
    i1 = w.g1**2 * (ss_aa + ss_bb + 2.0 * w.p1 * ss_ab.real)
    i2 = w.g2**2 * (ss_bb + ss_aa + 2.0 * w.p2 * ss_ab.real)
    cross = w.g1 * w.g2 * (ss_ab + w.p2 * ss_aa + w.p1 * ss_bb + w.p1 * w.p2 * ss_ba)
    return OutputFieldMoments(
        intensity_1=float(i1), intensity_2=float(i2), cross_12=complex(cross)
    )
