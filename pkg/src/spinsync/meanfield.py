"""Thermodynamic-limit mean-field dynamics, attractor classification,
phase diagrams, hysteresis sweeps and the unsynchronized-state stability
analysis.

The equations of motion for the mean coherences and populations are

    d s+_A/dt = [(-kappa + i delta) s+_A + V s+_A s^z_A + V_BA s+_B s^z_A] / 2
    d s+_B/dt = [(-kappa - i delta) s+_B + V s+_B s^z_B + V_AB s+_A s^z_B] / 2
    d s^z_A/dt = kappa (1 - s^z_A) - 2 V |s+_A|^2 - 2 Re[V_BA s-_A s+_B]
    d s^z_B/dt = kappa (1 - s^z_B) - 2 V |s+_B|^2 - 2 Re[V_AB s+_A s-_B]

with V_AB = V_plus + V_minus and V_BA = V_plus - conj(V_minus); for real
V_minus this is the standard form.  The system is smooth and non-stiff at
the parameters of interest, so an adaptive explicit Dormand-Prince 5(4)
pair is used (compiled with numba when available; the equivalent scipy
path is kept as a fallback).

Grid points and sweep branches are independent: the per-point entry
functions at module level are pure and picklable so a process pool can
fan out without shared state.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .params import CouplingParams, directional_from_symmetric

try:
    from numba import njit

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


__all__ = [
    "MeanFieldState",
    "Trajectory",
    "AttractorReport",
    "ClassifyConfig",
    "StiffnessError",
    "LABELS",
    "mf_rhs",
    "integrate",
    "default_ic",
    "conjugate_swapped",
    "kuramoto_phase_velocity",
    "classify",
    "phase_diagram",
    "hysteresis_sweep",
    "unsync_linear_stability",
    "stability_boundary_scan",
]

INCOHERENT = "incoherent"
SYNCHRONIZED = "synchronized"
PI_SYNCHRONIZED = "pi_synchronized"
TRAVELING_WAVE = "traveling_wave"
MODULATED_TW = "modulated_traveling_wave"
DESYNCHRONIZED = "desynchronized"
UNCLASSIFIABLE = "unclassifiable"

LABELS = (
    INCOHERENT,
    SYNCHRONIZED,
    PI_SYNCHRONIZED,
    TRAVELING_WAVE,
    MODULATED_TW,
    DESYNCHRONIZED,
    UNCLASSIFIABLE,
)

_BLOCH_TOL = 1e-9


class StiffnessError(RuntimeError):
    """Adaptive step size underflowed."""


@dataclass(frozen=True)
class MeanFieldState:
    """Per-species mean coherences and populations."""

    s_plus_A: complex
    s_plus_B: complex
    s_z_A: float
    s_z_B: float

    def __post_init__(self):
        for sp, sz, name in (
            (self.s_plus_A, self.s_z_A, "A"),
            (self.s_plus_B, self.s_z_B, "B"),
        ):
            r = 4.0 * abs(sp) ** 2 + sz**2
            if r > 1.0 + _BLOCH_TOL:
                raise ValueError(
                    f"species {name}: 4|s+|^2 + s_z^2 = {r} exceeds the Bloch ball"
                )

    def to_vec(self) -> np.ndarray:
        return np.array(
            [
                self.s_plus_A.real,
                self.s_plus_A.imag,
                self.s_plus_B.real,
                self.s_plus_B.imag,
                self.s_z_A,
                self.s_z_B,
            ]
        )

    @classmethod
    def from_vec(cls, y) -> "MeanFieldState":
        obj = object.__new__(cls)
        object.__setattr__(obj, "s_plus_A", complex(y[0], y[1]))
        object.__setattr__(obj, "s_plus_B", complex(y[2], y[3]))
        object.__setattr__(obj, "s_z_A", float(y[4]))
        object.__setattr__(obj, "s_z_B", float(y[5]))
        return obj

    def rotated(self, theta: float) -> "MeanFieldState":
        """Global phase rotation s+ -> e^{i theta} s+."""
        ph = cmath.exp(1j * theta)
        return MeanFieldState.from_vec(
            np.array(
                [
                    (self.s_plus_A * ph).real,
                    (self.s_plus_A * ph).imag,
                    (self.s_plus_B * ph).real,
                    (self.s_plus_B * ph).imag,
                    self.s_z_A,
                    self.s_z_B,
                ]
            )
        )


def default_ic() -> MeanFieldState:
    """Generic scan initial condition; breaks the 0/pi phase symmetry."""
    return MeanFieldState(
        s_plus_A=0.25,
        s_plus_B=0.25 * cmath.exp(0.7j),
        s_z_A=0.5,
        s_z_B=0.5,
    )


def conjugate_swapped(state: MeanFieldState) -> MeanFieldState:
    """Parity-time partner: conjugate the coherences and swap the species."""
    return MeanFieldState.from_vec(
        np.array(
            [
                state.s_plus_B.real,
                -state.s_plus_B.imag,
                state.s_plus_A.real,
                -state.s_plus_A.imag,
                state.s_z_B,
                state.s_z_A,
            ]
        )
    )


def _param_tuple(params: CouplingParams):
    d = directional_from_symmetric(params)
    return (
        params.kappa,
        params.delta,
        params.V,
        d.V_AB.real,
        d.V_AB.imag,
        d.V_BA.real,
        d.V_BA.imag,
    )


def mf_rhs(state: MeanFieldState, params: CouplingParams) -> MeanFieldState:
    """Right-hand side of the mean-field equations (thermodynamic limit)."""
    if not params.is_thermodynamic:
        raise ValueError("mean-field equations hold in the thermodynamic limit (N=None)")
    y = state.to_vec()
    out = _rhs_py(y, *_param_tuple(params))
    return MeanFieldState.from_vec(out)


def _rhs_py(y, kappa, delta, V, vab_re, vab_im, vba_re, vba_im):
    spa = complex(y[0], y[1])
    spb = complex(y[2], y[3])
    sza = y[4]
    szb = y[5]
    vab = complex(vab_re, vab_im)
    vba = complex(vba_re, vba_im)
    dspa = 0.5 * ((-kappa + 1j * delta) * spa + V * spa * sza + vba * spb * sza)
    dspb = 0.5 * ((-kappa - 1j * delta) * spb + V * spb * szb + vab * spa * szb)
    dsza = kappa * (1.0 - sza) - 2.0 * V * (spa.real**2 + spa.imag**2) \
        - 2.0 * (vba * spa.conjugate() * spb).real
    dszb = kappa * (1.0 - szb) - 2.0 * V * (spb.real**2 + spb.imag**2) \
        - 2.0 * (vab * spa * spb.conjugate()).real
    return np.array([dspa.real, dspa.imag, dspb.real, dspb.imag, dsza, dszb])


# Dormand-Prince 5(4) pair with FSAL; fixed coefficients
_DP_C = (0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (0.2,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_DP_E = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


def _make_stepper(rhs):
    a21 = _DP_A[0][0]
    a31, a32 = _DP_A[1]
    a41, a42, a43 = _DP_A[2]
    a51, a52, a53, a54 = _DP_A[3]
    a61, a62, a63, a64, a65 = _DP_A[4]
    b1, b2, b3, b4, b5, b6 = _DP_A[5]
    e1, e2, e3, e4, e5, e6, e7 = _DP_E

    def step(y, k1, t, h, kappa, delta, V, vab_re, vab_im, vba_re, vba_im):
        k2 = rhs(y + h * a21 * k1, kappa, delta, V, vab_re, vab_im, vba_re, vba_im)
        k3 = rhs(y + h * (a31 * k1 + a32 * k2), kappa, delta, V, vab_re, vab_im, vba_re, vba_im)
        k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3), kappa, delta, V, vab_re, vab_im, vba_re, vba_im)
        k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), kappa, delta, V, vab_re, vab_im, vba_re, vba_im)
        k6 = rhs(
            y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5),
            kappa, delta, V, vab_re, vab_im, vba_re, vba_im,
        )
        y_new = y + h * (b1 * k1 + b2 * k2 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6)
        k7 = rhs(y_new, kappa, delta, V, vab_re, vab_im, vba_re, vba_im)
        err = h * (e1 * k1 + e2 * k2 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)
        return y_new, k7, err

    return step


if _HAVE_NUMBA:
    _rhs_fast = njit(cache=True)(_rhs_py)
    _dp_step = njit(cache=True)(_make_stepper(_rhs_fast))
else:  # pragma: no cover
    _rhs_fast = _rhs_py
    _dp_step = _make_stepper(_rhs_py)


def _make_sampler(rhs, dp_step):
    def sample(y0, t0, t1, dt, rtol, atol,
               kappa, delta, V, vab_re, vab_im, vba_re, vba_im):
        """Propagate from t0 to t1, recording at t0 + k*dt (k >= 1).

        Returns (samples, ok); ok = False flags step-size underflow.
        """
        n_out = int(round((t1 - t0) / dt))
        out = np.empty((n_out, 6))
        y = y0.copy()
        t = t0
        k1 = rhs(y, kappa, delta, V, vab_re, vab_im, vba_re, vba_im)
        h = 0.01
        h_min = 1e-12
        i_out = 0
        t_next = t0 + dt
        while i_out < n_out:
            if t + h > t_next:
                h_try = t_next - t
            else:
                h_try = h
            y_new, k7, err = dp_step(y, k1, t, h_try,
                                     kappa, delta, V, vab_re, vab_im, vba_re, vba_im)
            # RMS of the scaled error
            s = 0.0
            for j in range(6):
                sc = atol + rtol * max(abs(y[j]), abs(y_new[j]))
                s += (err[j] / sc) ** 2
            enorm = math.sqrt(s / 6.0)
            if enorm <= 1.0:
                t = t + h_try
                y = y_new
                k1 = k7
                if t >= t_next - 1e-14:
                    out[i_out] = y
                    i_out += 1
                    t_next = t0 + (i_out + 1) * dt
            if enorm == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * enorm ** (-0.2)
                if fac < 0.2:
                    fac = 0.2
                elif fac > 5.0:
                    fac = 5.0
            h = h_try * fac
            if h < h_min:
                return out, False
        return out, True

    return sample


if _HAVE_NUMBA:
    _sample_fast = njit(cache=True)(_make_sampler(_rhs_fast, _dp_step))
else:  # pragma: no cover
    _sample_fast = _make_sampler(_rhs_py, _dp_step)


def _sample_trajectory(y0, params, t0, t1, dt, rtol, atol):
    pt = _param_tuple(params)
    out, ok = _sample_fast(np.asarray(y0, dtype=float), t0, t1, dt, rtol, atol, *pt)
    if not ok:
        raise StiffnessError("step size underflow in mean-field integration")
    return out


@dataclass
class Trajectory:
    """Sampled mean-field evolution."""

    t: np.ndarray
    s_plus_A: np.ndarray
    s_plus_B: np.ndarray
    s_z_A: np.ndarray
    s_z_B: np.ndarray

    def state_at(self, i: int) -> MeanFieldState:
        return MeanFieldState.from_vec(
            np.array(
                [
                    self.s_plus_A[i].real,
                    self.s_plus_A[i].imag,
                    self.s_plus_B[i].real,
                    self.s_plus_B[i].imag,
                    self.s_z_A[i],
                    self.s_z_B[i],
                ]
            )
        )


def integrate(
    ic: MeanFieldState,
    params: CouplingParams,
    t_end: float,
    dt_sample: float = 0.05,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> Trajectory:
    """Adaptive integration with dense output on a uniform grid.

    Deterministic for given inputs; raises :class:`StiffnessError` on
    step-size underflow.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    n = int(round(t_end / dt_sample))
    samples = _sample_trajectory(ic.to_vec(), params, 0.0, n * dt_sample, dt_sample, rtol, atol)
    full = np.vstack([ic.to_vec(), samples])
    t = np.arange(n + 1) * dt_sample
    return Trajectory(
        t=t,
        s_plus_A=full[:, 0] + 1j * full[:, 1],
        s_plus_B=full[:, 2] + 1j * full[:, 3],
        s_z_A=full[:, 4],
        s_z_B=full[:, 5],
    )


def kuramoto_phase_velocity(states_A, states_B, params: CouplingParams):
    """Per-spin phase velocities of the effective coupled-oscillator form.

    ``states_A``/``states_B`` are sequences of (amplitude, phase, s_z)
    triples, one per spin.  Implements
    d phi_{a,i}/dt = delta_a/2 + s^z_{a,i}/(2N) * sum_{b,j} (s_{b,j}/s_{a,i})
    Im[V_ba e^{i(phi_bj - phi_ai)}], which reduces to the sine-coupled
    oscillator form for real couplings (V_AA = V_BB = V, delta_A =
    -delta_B = delta).  Zero amplitudes are rejected: the phase is
    undefined there.
    """
    sa = np.asarray(states_A, dtype=float)
    sb = np.asarray(states_B, dtype=float)
    if sa.shape != sb.shape or sa.ndim != 2 or sa.shape[1] != 3:
        raise ValueError("states must be (N, 3) arrays of (amplitude, phase, s_z)")
    if np.any(sa[:, 0] <= 0) or np.any(sb[:, 0] <= 0):
        raise ValueError("zero amplitude: phase velocity undefined")
    n = sa.shape[0]
    d = directional_from_symmetric(params)
    amps = {"A": sa[:, 0], "B": sb[:, 0]}
    phis = {"A": sa[:, 1], "B": sb[:, 1]}
    szs = {"A": sa[:, 2], "B": sb[:, 2]}
    coupling = {
        ("A", "A"): complex(params.V),
        ("B", "B"): complex(params.V),
        ("A", "B"): d.V_BA,  # influence of B on A
        ("B", "A"): d.V_AB,  # influence of A on B
    }
    deltas = {"A": params.delta, "B": -params.delta}
    out = {}
    for a in ("A", "B"):
        vel = np.full(n, deltas[a] / 2.0)
        for b in ("A", "B"):
            v_ba = coupling[(a, b)]
            dphi = phis[b][None, :] - phis[a][:, None]
            term = (amps[b][None, :] / amps[a][:, None]) * np.imag(
                v_ba * np.exp(1j * dphi)
            )
            vel += szs[a] / (2.0 * n) * term.sum(axis=1)
        out[a] = vel
    return out["A"], out["B"]


@dataclass(frozen=True)
class ClassifyConfig:
    """Windows and tolerances of the attractor classifier.

    The defaults sit well inside the separations between the phases at
    the parameter scales of interest; they are surfaced in every report
    and output sidecar.
    """

    transient: float = 500.0
    window: float = 500.0
    dt: float = 0.05
    eps_coherent: float = 1e-3
    eps_modulation: float = 1e-3
    theta_sync: float = 0.1
    freq_tol: float = 1e-3
    rtol: float = 1e-9
    atol: float = 1e-12
    monitor_bloch: bool = True

    def to_dict(self) -> dict:
        return {
            "transient": self.transient,
            "window": self.window,
            "dt": self.dt,
            "eps_coherent": self.eps_coherent,
            "eps_modulation": self.eps_modulation,
            "theta_sync": self.theta_sync,
            "freq_tol": self.freq_tol,
            "rtol": self.rtol,
            "atol": self.atol,
        }


@dataclass(frozen=True)
class AttractorReport:
    """Long-time characterization of a mean-field trajectory."""

    label: str
    frequency_A: float
    frequency_B: float
    phase_difference: float
    modulation_depth: float
    chirality: int
    amplitude_A: float
    amplitude_B: float
    phase_fit_residual: float
    modulation_period: float | None = None


def _wrap_angle(x: float) -> float:
    return (x + math.pi) % (2 * math.pi) - math.pi


def _autocorr_period(x: np.ndarray, dt: float) -> float | None:
    x = x - x.mean()
    if np.max(np.abs(x)) < 1e-14:
        return None
    ac = np.correlate(x, x, mode="full")[x.size - 1 :]
    ac /= ac[0]
    below = np.flatnonzero(ac < 0.0)
    if below.size == 0:
        return None
    seg = ac[below[0] :]
    k = int(np.argmax(seg))
    if seg[k] < 0.5:
        return None
    return float((below[0] + k) * dt)


def _analyze_window(samples: np.ndarray, cfg: ClassifyConfig) -> AttractorReport:
    spa = samples[:, 0] + 1j * samples[:, 1]
    spb = samples[:, 2] + 1j * samples[:, 3]
    amp_a = np.abs(spa)
    amp_b = np.abs(spb)
    mean_a = float(amp_a.mean())
    mean_b = float(amp_b.mean())
    if cfg.monitor_bloch:
        ball = 4.0 * np.maximum(amp_a, amp_b) ** 2 + np.maximum(
            samples[:, 4] ** 2, samples[:, 5] ** 2
        )
        if float(ball.max()) > 1.0 + 1e-6:
            warnings.warn(
                f"trajectory left the Bloch ball: max 4|s+|^2+s_z^2 = {ball.max():.6f}",
                RuntimeWarning,
            )

    if max(mean_a, mean_b) < cfg.eps_coherent:
        return AttractorReport(
            label=INCOHERENT,
            frequency_A=0.0,
            frequency_B=0.0,
            phase_difference=float("nan"),
            modulation_depth=float(np.ptp(amp_a)),
            chirality=0,
            amplitude_A=mean_a,
            amplitude_B=mean_b,
            phase_fit_residual=0.0,
        )

    t = np.arange(samples.shape[0]) * cfg.dt
    phi_a = np.unwrap(np.angle(spa))
    phi_b = np.unwrap(np.angle(spb))
    (wa, _), res_a = np.polyfit(t, phi_a, 1), phi_a - np.polyval(np.polyfit(t, phi_a, 1), t)
    (wb, _), res_b = np.polyfit(t, phi_b, 1), phi_b - np.polyval(np.polyfit(t, phi_b, 1), t)
    fit_res = float(max(np.sqrt(np.mean(res_a**2)), np.sqrt(np.mean(res_b**2))))
    dphi = float(np.angle(np.mean(np.exp(1j * (phi_a - phi_b)))))
    mod = float(np.ptp(amp_a))
    w_mean = 0.5 * (wa + wb)
    chirality = int(np.sign(w_mean)) if abs(w_mean) > cfg.freq_tol else 0

    if abs(wa - wb) > cfg.freq_tol:
        label = DESYNCHRONIZED
        period = None
    elif mod >= cfg.eps_modulation:
        period = _autocorr_period(amp_a, cfg.dt)
        label = MODULATED_TW if period is not None else UNCLASSIFIABLE
    elif abs(w_mean) > cfg.freq_tol:
        label = TRAVELING_WAVE
        period = None
    else:
        period = None
        if abs(dphi) < cfg.theta_sync:
            label = SYNCHRONIZED
        elif abs(abs(dphi) - math.pi) < cfg.theta_sync:
            label = PI_SYNCHRONIZED
        else:
            label = UNCLASSIFIABLE

    return AttractorReport(
        label=label,
        frequency_A=float(wa),
        frequency_B=float(wb),
        phase_difference=dphi,
        modulation_depth=mod,
        chirality=chirality,
        amplitude_A=mean_a,
        amplitude_B=mean_b,
        phase_fit_residual=fit_res,
        modulation_period=period,
    )


def classify(
    params: CouplingParams,
    ic: MeanFieldState | None = None,
    config: ClassifyConfig | None = None,
) -> AttractorReport:
    """Integrate, discard the transient, and label the attractor.

    Ties in the label logic follow the precedence incoherent >
    desynchronized > modulated > traveling wave > pi-sync > sync; a
    window matching no criterion is reported as unclassifiable, never
    silently binned.
    """
    cfg = config or ClassifyConfig()
    state = ic or default_ic()
    y = state.to_vec()
    if cfg.transient > 0:
        y = _sample_trajectory(
            y, params, 0.0, cfg.transient, cfg.transient, cfg.rtol, cfg.atol
        )[-1]
    samples = _sample_trajectory(
        y, params, 0.0, cfg.window, cfg.dt, cfg.rtol, cfg.atol
    )
    return _analyze_window(samples, cfg)


def classify_point(args) -> dict:
    """Pure per-point worker for scans: args = (params, ic, config, both_ics)."""
    params, ic, cfg, both = args
    ic = ic or default_ic()
    rep = classify(params, ic, cfg)
    row = {
        "label": rep.label,
        "frequency_A": rep.frequency_A,
        "frequency_B": rep.frequency_B,
        "phase_difference": rep.phase_difference,
        "modulation_depth": rep.modulation_depth,
        "chirality": rep.chirality,
    }
    if both:
        rep2 = classify(params, conjugate_swapped(ic), cfg)
        both_tw = rep.label in (TRAVELING_WAVE, MODULATED_TW) and rep2.label in (
            TRAVELING_WAVE,
            MODULATED_TW,
        )
        row["chirality_partner"] = rep2.chirality
        row["spontaneous"] = bool(both_tw and rep.chirality * rep2.chirality < 0)
    return row


def phase_diagram(
    params: CouplingParams,
    axis1: tuple[str, np.ndarray],
    axis2: tuple[str, np.ndarray],
    ic: MeanFieldState | None = None,
    config: ClassifyConfig | None = None,
    detect_spontaneous: bool = False,
    workers: int = 1,
) -> list[dict]:
    """Classify every point of a rectangular parameter grid.

    ``axis1``/``axis2`` are (field, values) with field one of
    ``V_minus``, ``V_plus``, ``delta``, ``V_minus_im``.  Rows come back
    in grid order (axis1 outer, axis2 inner) regardless of worker count.
    Per-point classification failures are reported as label ``error``.
    """
    cfg = config or ClassifyConfig()
    tasks = []
    coords = []
    for v1 in axis1[1]:
        for v2 in axis2[1]:
            try:
                p = params
                for name, val in ((axis1[0], v1), (axis2[0], v2)):
                    p = _set_param(p, name, val)
                tasks.append((p, ic, cfg, detect_spontaneous))
            except Exception as exc:
                tasks.append(("error", f"{type(exc).__name__}: {exc}"))
            coords.append((float(v1), float(v2)))

    if workers > 1:
        import concurrent.futures as cf

        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_classify_point_safe, tasks, chunksize=16))
    else:
        results = [_classify_point_safe(t) for t in tasks]

    rows = []
    for (v1, v2), res in zip(coords, results):
        row = {axis1[0]: v1, axis2[0]: v2}
        row.update(res)
        rows.append(row)
    return rows


def _classify_point_safe(args) -> dict:
    try:
        if args[0] == "error":
            raise ValueError(args[1])
        return classify_point(args)
    except Exception as exc:  # propagate per-point failures as a distinct label
        return {
            "label": "error",
            "frequency_A": float("nan"),
            "frequency_B": float("nan"),
            "phase_difference": float("nan"),
            "modulation_depth": float("nan"),
            "chirality": 0,
            "error": f"{type(exc).__name__}: {exc}",
        }


def _set_param(p: CouplingParams, name: str, value: float) -> CouplingParams:
    if name == "V_minus":
        return p.with_(V_minus=complex(value, complex(p.V_minus).imag))
    if name == "V_minus_im":
        return p.with_(V_minus=complex(complex(p.V_minus).real, value))
    if name in ("V_plus", "delta", "V"):
        return p.with_(**{name: float(value)})
    raise ValueError(f"unknown scan parameter {name!r}")


def hysteresis_sweep(
    params: CouplingParams,
    swept: str,
    values: np.ndarray,
    ic: MeanFieldState | None = None,
    dwell: float = 300.0,
    window: float = 200.0,
    config: ClassifyConfig | None = None,
) -> list[dict]:
    """Adiabatic up-then-down ramp of one parameter.

    ``swept`` is ``delta`` or ``V_minus_im``.  Each step starts from the
    previous step's final state (the first step settles for an extra
    transient), dwells, and is then analyzed over ``window``.  Returns one
    row per (direction, step).
    """
    if swept not in ("delta", "V_minus_im"):
        raise ValueError("swept parameter must be 'delta' or 'V_minus_im'")
    cfg = config or ClassifyConfig()
    cfg = replace(cfg, transient=0.0, window=window)
    values = np.asarray(values, dtype=float)
    rows = []
    y = (ic or default_ic()).to_vec()
    first = True
    for direction, vals in (("up", values), ("down", values[::-1])):
        for v in vals:
            p = _set_param(params, swept, v)
            settle = dwell + (cfg.window if first else 0.0)
            first = False
            y = _sample_trajectory(y, p, 0.0, settle, settle, cfg.rtol, cfg.atol)[-1]
            samples = _sample_trajectory(y, p, 0.0, window, cfg.dt, cfg.rtol, cfg.atol)
            y = samples[-1]
            rep = _analyze_window(samples, cfg)
            rows.append(
                {
                    "direction": direction,
                    swept: float(v),
                    "label": rep.label,
                    "frequency_A": rep.frequency_A,
                    "frequency_B": rep.frequency_B,
                    "phase_difference": rep.phase_difference,
                    "modulation_depth": rep.modulation_depth,
                    "chirality": rep.chirality,
                }
            )
    return rows


def unsync_linear_stability(params: CouplingParams):
    """Eigenvalues of the coherence linearization at s+ = 0, s^z = 1.

    Returns (eigenvalues, unstable) with unstable = any positive real
    part.  The Jacobian of (d s+_A/dt, d s+_B/dt) there is
    [[V - kappa + i delta, V_BA], [V_AB, V - kappa - i delta]] / 2.
    """
    d = directional_from_symmetric(params)
    m = 0.5 * np.array(
        [
            [params.V - params.kappa + 1j * params.delta, d.V_BA],
            [d.V_AB, params.V - params.kappa - 1j * params.delta],
        ]
    )
    ev = np.linalg.eigvals(m)
    return ev, bool(np.max(ev.real) > 0)


def boundary_point(args) -> dict:
    """Pure worker: locate the coherence threshold in V at one V_minus.

    args = (v_minus, params_base, v_lo, v_hi, seed, n_bisect, config).
    V_plus is tied to the scanned V (the recorded assumption for the
    analytic comparison curve min(1, (1+V_minus^2)/2)).
    """
    v_minus, base, v_lo, v_hi, seed, n_bisect, cfg = args
    sz = math.sqrt(max(0.0, 1.0 - 4.0 * seed**2))
    ic = MeanFieldState(
        s_plus_A=seed, s_plus_B=seed * cmath.exp(0.7j), s_z_A=sz, s_z_B=sz
    )

    def coherent(V: float) -> bool:
        p = base.with_(V=V, V_plus=V, V_minus=complex(v_minus))
        rep = classify(p, ic, cfg)
        return rep.label != INCOHERENT

    lo, hi = v_lo, v_hi
    if coherent(lo):
        return {"V_minus": v_minus, "V_boundary": lo, "bracketed": False}
    if not coherent(hi):
        return {"V_minus": v_minus, "V_boundary": hi, "bracketed": False}
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        if coherent(mid):
            hi = mid
        else:
            lo = mid
    return {"V_minus": v_minus, "V_boundary": 0.5 * (lo + hi), "bracketed": True}


def stability_boundary_scan(
    v_minus_values: np.ndarray,
    params: CouplingParams | None = None,
    v_range: tuple[float, float] = (0.05, 1.6),
    seed: float = 1e-4,
    n_bisect: int = 14,
    config: ClassifyConfig | None = None,
    workers: int = 1,
) -> list[dict]:
    """Numerical incoherent-to-coherent boundary over V_minus.

    Classifies from a small coherence seed and bisects in V with
    V_plus = V; compare against min(1, (1 + V_minus^2)/2).
    """
    base = params or CouplingParams(V=1.0, N=None)
    cfg = config or ClassifyConfig(transient=800.0, window=400.0)
    tasks = [
        (float(v), base, v_range[0], v_range[1], seed, n_bisect, cfg)
        for v in np.asarray(v_minus_values, dtype=float)
    ]
    if workers > 1:
        import concurrent.futures as cf

        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(boundary_point, tasks))
    else:
        rows = [boundary_point(t) for t in tasks]
    for row in rows:
        row["V_analytic"] = min(1.0, (1.0 + row["V_minus"] ** 2) / 2.0)
    return rows
