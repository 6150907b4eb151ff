"""Command-line front end.

Each subcommand reproduces one figure-style recipe and emits a CSV plus
a JSON sidecar with the resolved configuration.  Grid specifications use
the syntax ``lo:hi:count`` with both endpoints included, matching figure
axes directly.  Exit codes: 0 ok, 1 per-point failures, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .params import CouplingParams, PhysicalityError
from .io import write_csv, write_sidecar

EXIT_OK = 0
EXIT_POINT_FAILURES = 1
EXIT_CONFIG_ERROR = 2


class ConfigError(Exception):
    pass


def parse_grid(spec: str) -> np.ndarray:
    """Inclusive grid from 'lo:hi:count' (count=1 pins lo)."""
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {spec!r}, expected lo:hi:count") from exc
    if n < 1:
        raise ConfigError(f"grid count must be >= 1 in {spec!r}")
    if n == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def add_param_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with the flat parameter document")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--V", type=float, default=None)
    p.add_argument("--vplus", type=float, default=None)
    p.add_argument("--vminus", type=float, default=None, help="Re V_minus")
    p.add_argument("--vminus-im", type=float, default=None, help="Im V_minus")
    p.add_argument("--N", type=int, default=None)
    p.add_argument(
        "--cascaded",
        nargs=6,
        type=float,
        metavar=("G1", "G2", "P1", "P2", "ETA1", "ETA2"),
        help="derive V, V_plus, V_minus from a doubly cascaded waveguide",
    )
    p.add_argument(
        "--braided",
        nargs=5,
        type=float,
        metavar=("GPLUS", "GMINUS", "BETA", "SIGNPLUS", "ETAPLUS"),
        help="derive V, V_plus, V_minus from a braided waveguide",
    )


def add_common_args(p: argparse.ArgumentParser):
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--keep-going", action="store_true", help="record per-point failures and continue")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized initial conditions")
    p.add_argument("--ic", choices=["default", "random"], default="default")
    p.add_argument("--transient", type=float, default=None)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--rtol", type=float, default=None)


def build_params(args, need_n: bool = False) -> CouplingParams:
    doc = {}
    if args.config:
        with open(args.config) as f:
            doc = json.load(f)
    base = CouplingParams.from_dict(doc) if doc else None

    n = args.N if args.N is not None else (base.N if base else None)
    kappa = args.kappa if args.kappa is not None else (base.kappa if base else 1.0)
    delta = args.delta if args.delta is not None else (base.delta if base else 0.0)

    if args.cascaded or args.braided:
        if n is None:
            raise ConfigError("waveguide-derived couplings need --N")
        if args.cascaded:
            from .params import CascadedWaveguideParams, couplings_from_cascaded

            g1, g2, p1, p2, e1, e2 = args.cascaded
            frag = couplings_from_cascaded(
                CascadedWaveguideParams(g1=g1, g2=g2, p1=int(p1), p2=int(p2), eta1=e1, eta2=e2),
                n,
            )
        else:
            from .params import BraidedWaveguideParams, couplings_from_braided

            gp, gm, beta, sgn, eta = args.braided
            frag = couplings_from_braided(
                BraidedWaveguideParams(
                    g_plus=gp, g_minus=gm, beta=beta, sign_plus=int(sgn), eta_plus=eta
                ),
                n,
            )
        v, vplus, vminus = frag.V, frag.V_plus, frag.V_minus
    else:
        v = args.V if args.V is not None else (base.V if base else None)
        if v is None:
            raise ConfigError("V is required (flag --V or config file)")
        vplus = args.vplus if args.vplus is not None else (base.V_plus if base else 0.0)
        vm_re = args.vminus if args.vminus is not None else (base.V_minus.real if base else 0.0)
        vm_im = args.vminus_im if args.vminus_im is not None else (base.V_minus.imag if base else 0.0)
        vminus = complex(vm_re, vm_im)

    if need_n and n is None:
        raise ConfigError("this subcommand needs a finite --N")
    try:
        return CouplingParams(V=v, V_plus=vplus, V_minus=vminus, kappa=kappa, delta=delta, N=n)
    except (PhysicalityError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _classify_config(args):
    from .meanfield import ClassifyConfig

    kw = {}
    if args.transient is not None:
        kw["transient"] = args.transient
    if args.window is not None:
        kw["window"] = args.window
    if args.rtol is not None:
        kw["rtol"] = args.rtol
    return ClassifyConfig(**kw)


def _initial_state(args):
    from .meanfield import MeanFieldState, default_ic

    if args.ic == "default":
        return default_ic()
    rng = np.random.default_rng(args.seed)
    amp = 0.25 * rng.uniform(0.5, 1.0, size=2)
    ph = rng.uniform(0, 2 * math.pi, size=2)
    return MeanFieldState(
        s_plus_A=amp[0] * np.exp(1j * ph[0]),
        s_plus_B=amp[1] * np.exp(1j * ph[1]),
        s_z_A=0.5,
        s_z_B=0.5,
    )


def _finish(args, fieldnames, rows, config, **extra) -> int:
    write_csv(args.output, fieldnames, rows)
    write_sidecar(args.output, config, **extra)
    failures = sum(1 for r in rows if r.get("label") == "error")
    if failures and not args.keep_going:
        print(f"{failures} grid point(s) failed", file=sys.stderr)
        return EXIT_POINT_FAILURES
    return EXIT_OK


def cmd_trajectory(args) -> int:
    from .meanfield import integrate

    params = build_params(args)
    if not params.is_thermodynamic:
        params = params.with_(N=None)
    ic = _initial_state(args)
    traj = integrate(
        ic,
        params,
        t_end=args.t_end,
        dt_sample=args.dt,
        rtol=args.rtol or 1e-9,
    )
    phi_a = np.unwrap(np.angle(traj.s_plus_A))
    phi_b = np.unwrap(np.angle(traj.s_plus_B))
    rows = [
        {
            "t": float(traj.t[i]),
            "phi_A": float(phi_a[i]),
            "phi_B": float(phi_b[i]),
            "dphi": float(phi_a[i] - phi_b[i]),
            "abs_s_A": float(abs(traj.s_plus_A[i])),
            "abs_s_B": float(abs(traj.s_plus_B[i])),
            "s_z_A": float(traj.s_z_A[i]),
            "s_z_B": float(traj.s_z_B[i]),
        }
        for i in range(traj.t.size)
    ]
    cfg = {"params": params.to_dict(), "t_end": args.t_end, "dt": args.dt, "ic": args.ic, "seed": args.seed}
    return _finish(args, list(rows[0].keys()), rows, cfg)


def cmd_phase_diagram(args) -> int:
    from .meanfield import phase_diagram

    params = build_params(args).with_(N=None)
    cfg = _classify_config(args)
    axes = []
    if args.vminus_grid:
        axes.append(("V_minus", parse_grid(args.vminus_grid)))
    if args.vplus_grid:
        axes.append(("V_plus", parse_grid(args.vplus_grid)))
    if args.delta_grid:
        axes.append(("delta", parse_grid(args.delta_grid)))
    if len(axes) != 2:
        raise ConfigError("phase-diagram needs exactly two of --vminus/--vplus/--delta grids")
    rows = phase_diagram(
        params,
        axes[0],
        axes[1],
        ic=_initial_state(args),
        config=cfg,
        detect_spontaneous=args.both_ics,
        workers=args.workers,
    )
    fields = [axes[0][0], axes[1][0], "label", "frequency_A", "frequency_B",
              "phase_difference", "modulation_depth", "chirality"]
    if args.both_ics:
        fields += ["chirality_partner", "spontaneous"]
    sidecar = {
        "params": params.to_dict(),
        "axis1": {axes[0][0]: args.vminus_grid or args.delta_grid},
        "axis2": {axes[1][0]: args.vplus_grid or args.delta_grid},
        "tolerances": cfg.to_dict(),
        "ic": args.ic,
        "seed": args.seed,
        "both_ics": args.both_ics,
    }
    return _finish(args, fields, rows, sidecar)


def cmd_hysteresis(args) -> int:
    from .meanfield import hysteresis_sweep

    params = build_params(args).with_(N=None)
    cfg = _classify_config(args)
    values = parse_grid(args.range)
    rows = hysteresis_sweep(
        params,
        swept=args.sweep,
        values=values,
        ic=_initial_state(args),
        dwell=args.dwell,
        window=args.window or 200.0,
        config=cfg,
    )
    fields = ["direction", args.sweep, "label", "frequency_A", "frequency_B",
              "phase_difference", "modulation_depth", "chirality"]
    sidecar = {
        "params": params.to_dict(),
        "sweep": args.sweep,
        "range": args.range,
        "dwell": args.dwell,
        "tolerances": cfg.to_dict(),
        "ic": args.ic,
    }
    return _finish(args, fields, rows, sidecar)


def cmd_correlators_vs_n(args) -> int:
    from .cumulant import correlators_vs_n

    params = build_params(args)
    n_values = sorted({int(round(v)) for v in parse_grid(args.n_grid)})
    rows = correlators_vs_n(params, n_values)
    fields = ["N", "s_z_A", "pp_AA", "pp_AB_re", "pp_AB_im", "zz_AB", "flag"]
    sidecar = {"params": params.to_dict(), "N_grid": args.n_grid,
               "ic": "inverted uncorrelated + pp_AB seed 1e-3"}
    return _finish(args, fields, rows, sidecar)


def cmd_exact_grid(args) -> int:
    from .dicke import correlators_pi, steady_state_pi

    params = build_params(args, need_n=True)
    vm = parse_grid(args.vminus_grid)
    vp = parse_grid(args.vplus_grid)
    rows = []
    for v1 in vm:
        for v2 in vp:
            p = params.with_(V_minus=complex(v1, params.V_minus.imag), V_plus=float(v2))
            try:
                pidm, res = steady_state_pi(p, check_degenerate=not args.no_degeneracy_check)
                c = correlators_pi(pidm)
                rows.append(
                    {
                        "V_minus": float(v1),
                        "V_plus": float(v2),
                        "pp_AB_re": c.pp_AB.real,
                        "quad": c.quad.real,
                        "s_z_A": c.s_z_A,
                        "residual": res.residual,
                        "label": "ok",
                    }
                )
            except Exception as exc:
                if not args.keep_going:
                    raise
                rows.append(
                    {
                        "V_minus": float(v1),
                        "V_plus": float(v2),
                        "pp_AB_re": float("nan"),
                        "quad": float("nan"),
                        "s_z_A": float("nan"),
                        "residual": float("nan"),
                        "label": "error",
                        "error": f"{type(exc).__name__}: {exc}",
                    }
                )
    fields = ["V_minus", "V_plus", "pp_AB_re", "quad", "s_z_A", "residual", "label"]
    sidecar = {"params": params.to_dict(), "vminus_grid": args.vminus_grid,
               "vplus_grid": args.vplus_grid}
    return _finish(args, fields, rows, sidecar)


def cmd_spectrum(args) -> int:
    from .cumulant import c2_steady
    from .spectra import (
        evolve_correlations,
        evolve_correlations_coupled,
        initial_correlations,
        regression_matrix,
        spectral_density,
    )

    params = build_params(args, need_n=True)
    steady = c2_steady(params)
    omega = parse_grid(args.omega_grid) if args.omega_grid else None
    coevolve = args.coevolve == "on" or (args.coevolve == "auto" and steady.averaged)
    if coevolve:
        c, _ = evolve_correlations_coupled(
            params, steady.state, source=args.source, tau_max=args.tau_max, dtau=args.dtau
        )
    else:
        m = regression_matrix(params, steady.state.s_z_A, steady.state.s_z_B)
        c = evolve_correlations(
            initial_correlations(steady.state, args.source),
            m,
            tau_max=args.tau_max,
            dtau=args.dtau,
            source=args.source,
        )
    spec = spectral_density(c, omega=omega, window=args.window_mode)
    mag = np.abs(spec.P[:, 0])
    norm = mag.max() if mag.max() > 0 else 1.0
    rows = [
        {
            "omega": float(spec.omega[i]),
            "P_re": float(spec.P[i, 0].real),
            "P_im": float(spec.P[i, 0].imag),
            "P_abs_norm": float(mag[i] / norm),
        }
        for i in range(spec.omega.size)
    ]
    fields = ["omega", "P_re", "P_im", "P_abs_norm"]
    sidecar = {
        "params": params.to_dict(),
        "source": args.source,
        "tau_max": args.tau_max,
        "dtau": args.dtau,
        "coevolved": coevolve,
        "populations_flag": "averaged" if steady.averaged else "converged",
        "windowed": spec.windowed,
        "window_time": spec.window_time,
        "spectrum_meta": spec.metadata,
    }
    return _finish(args, fields, rows, sidecar)


def cmd_ep_scan(args) -> int:
    from .cumulant import c2_steady
    from .meanfield import ClassifyConfig, classify, default_ic
    from .spectra import exceptional_point_scan

    params = build_params(args)
    values = parse_grid(args.range)
    parameter = {"vminus": "V_minus", "delta": "delta"}[args.scan]

    if args.populations == "cumulant2":
        if params.N is None:
            raise ConfigError("--populations cumulant2 needs a finite --N")

        def pops(p):
            st = c2_steady(p).state
            return st.s_z_A, st.s_z_B

    else:

        def pops(p):
            cfg = ClassifyConfig()
            from .meanfield import _sample_trajectory, default_ic as dic

            y = _sample_trajectory(dic().to_vec(), p.with_(N=None), 0.0, cfg.transient, cfg.transient, cfg.rtol, cfg.atol)[-1]
            w = _sample_trajectory(y, p.with_(N=None), 0.0, cfg.window, cfg.dt, cfg.rtol, cfg.atol)
            return float(w[:, 4].mean()), float(w[:, 5].mean())

    rows, eps = exceptional_point_scan(params, parameter, values, pops, N=params.N)
    fields = [parameter, "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im",
              "disc_re", "disc_im", "condition"]
    sidecar = {
        "params": params.to_dict(),
        "scan": parameter,
        "range": args.range,
        "populations": args.populations,
        "exceptional_points": [
            {
                "value": ep.value,
                "lambda1": [ep.eigenvalue_1.real, ep.eigenvalue_1.imag],
                "lambda2": [ep.eigenvalue_2.real, ep.eigenvalue_2.imag],
                "condition": ep.eigenvector_condition,
                "kind": ep.kind,
            }
            for ep in eps
        ],
    }
    return _finish(args, fields, rows, sidecar)


def cmd_pt_check(args) -> int:
    from .liouville import pt_check

    params = build_params(args, need_n=True)
    residual = pt_check(params, params.N)
    print(f"pt residual: {residual:.3e}")
    if args.output:
        rows = [{"residual": residual}]
        write_csv(args.output, ["residual"], rows)
        write_sidecar(args.output, {"params": params.to_dict()})
    return EXIT_OK


def cmd_stability_boundary(args) -> int:
    from .meanfield import stability_boundary_scan

    params = build_params(args)
    values = parse_grid(args.range)
    rows = stability_boundary_scan(values, params=params.with_(N=None, V_plus=0.0, V=1.0),
                                   seed=args.boundary_seed, workers=args.workers)
    for r in rows:
        r["deviation"] = r["V_boundary"] - r["V_analytic"]
    fields = ["V_minus", "V_boundary", "V_analytic", "deviation", "bracketed"]
    sidecar = {
        "params": params.to_dict(),
        "range": args.range,
        "seed_amplitude": args.boundary_seed,
        "assumption": "V_plus tied to the scanned V (analytic curve min(1,(1+V_minus^2)/2))",
    }
    return _finish(args, fields, rows, sidecar)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spinsync",
        description="Nonreciprocal synchronization of driven spin ensembles",
    )
    ap.add_argument("--version", action="version", version=f"spinsync {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectory", help="mean-field time evolution")
    add_param_args(p)
    add_common_args(p)
    p.add_argument("--t-end", type=float, default=200.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("phase-diagram", help="mean-field attractor labels on a grid")
    add_param_args(p)
    add_common_args(p)
    p.add_argument("--vminus", dest="vminus_grid", help="grid lo:hi:count over Re V_minus")
    p.add_argument("--vplus", dest="vplus_grid", help="grid lo:hi:count over V_plus")
    p.add_argument("--delta-grid", dest="delta_grid", help="grid lo:hi:count over delta")
    p.add_argument("--both-ics", action="store_true",
                   help="also run the conjugate-swapped ic and flag spontaneous chirality")
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("hysteresis", help="adiabatic up/down parameter ramp")
    add_param_args(p)
    add_common_args(p)
    p.add_argument("--sweep", choices=["delta", "V_minus_im"], required=True)
    p.add_argument("--range", required=True, help="grid lo:hi:count")
    p.add_argument("--dwell", type=float, default=300.0)
    p.set_defaults(func=cmd_hysteresis)

    p = sub.add_parser("correlators-vs-n", help="cumulant steady moments over N")
    add_param_args(p)
    add_common_args(p)
    p.add_argument("--n-grid", required=True, help="grid lo:hi:count over N")
    p.set_defaults(func=cmd_correlators_vs_n)

    p = sub.add_parser("exact-grid", help="PI-solver correlators on a coupling grid")
    add_param_args(p)
    add_common_args(p)
    p.add_argument("--vminus", dest="vminus_grid", required=True)
    p.add_argument("--vplus", dest="vplus_grid", required=True)
    p.add_argument("--no-degeneracy-check", action="store_true")
    p.set_defaults(func=cmd_exact_grid)

    p = sub.add_parser("spectrum", help="two-time correlation spectrum")
    add_param_args(p)
    add_common_args(p)
    p.add_argument("--source", choices=["A", "B"], default="A")
    p.add_argument("--tau-max", type=float, default=2000.0)
    p.add_argument("--dtau", type=float, default=0.02)
    p.add_argument("--omega", dest="omega_grid", help="grid lo:hi:count (default: FFT-resolution grid)")
    p.add_argument("--coevolve", choices=["auto", "on", "off"], default="auto")
    p.add_argument("--window-mode", choices=["auto", "off"], default="auto")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("ep-scan", help="exceptional points of the regression matrix")
    add_param_args(p)
    add_common_args(p)
    p.add_argument("--scan", choices=["vminus", "delta"], required=True)
    p.add_argument("--range", required=True, help="grid lo:hi:count")
    p.add_argument("--populations", choices=["cumulant2", "meanfield"], default="cumulant2")
    p.set_defaults(func=cmd_ep_scan)

    p = sub.add_parser("pt-check", help="parity-time symmetry defect of the generator")
    add_param_args(p)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_pt_check, keep_going=False)

    p = sub.add_parser("stability-boundary", help="incoherent-to-coherent threshold scan")
    add_param_args(p)
    add_common_args(p)
    p.add_argument("--range", required=True, help="grid lo:hi:count over V_minus")
    p.add_argument("--boundary-seed", type=float, default=1e-4)
    p.set_defaults(func=cmd_stability_boundary)

    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage, matching the config-error code
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except PhysicalityError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_POINT_FAILURES


if __name__ == "__main__":
    sys.exit(main())
