"""Command-line experiment runner.

Subcommands: run (single-run presets), sweep (multi-run presets),
identities (the one-shot oracle table), inspect (checkpoint summary).
Exit codes: 0 clean, 2 singular termination or a failed run assertion,
1 configuration or IO errors.

Every flow-run directory receives the same five artifacts: the config echo,
run.csv (one row per monitor record), events.json, the final checkpoint,
and conventions.json stamping the sign conventions and code version.
Floating values in CSV output carry 17 significant digits so re-running a
config reproduces the bytes.  Sweeps execute their sub-runs sequentially in
this process; sub-run directories are named from the varied parameters.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from dhflow import __version__, oracle, presets
from dhflow.checkpoint import read_checkpoint, write_checkpoint
from dhflow.config import parse_config, effective_text
from dhflow.diagnostics import MonitorSuite, MonotonicityError, default_radii
from dhflow.energy import (
    curvature_R,
    curvature_Rc,
    el_residuals,
    energy_regularized,
    map_gradient,
    tension,
)
from dhflow.flow import FlowState, StepControl, rhs, run
from dhflow.grid import GridSpec, SpinStructure, l2_norm
from dhflow.targets import make_target

CSV_FIXED_COLUMNS = (
    "t", "E_eps", "dirichlet", "dirac_pairing", "spinor_gradient",
    "psi_l2", "psi_l4", "psi_sup", "kinetic_u", "kinetic_psi",
    "el_residual_u", "el_residual_psi",
)

CONVENTIONS = {
    "clifford": "gamma_a = i sigma_a, anti-Hermitian, gamma_a^2 = -1",
    "dirac": "D = gamma_a d_a with centered differences; eigenvalues +-|sin(xi h)/h|",
    "laplacian": "compact 5-point stencil (squared staggered difference)",
    "dirichlet_energy": "staggered edge differences, so the L2 gradient is the compact Laplacian",
    "spinor_gradient_energy": "node-projected staggered differences",
    "energy": "E_eps = 1/2 int |du|^2 + <psi, D psi> + eps |grad~ psi|^2",
    "flow_sign": "du/dt = +tension - curvature terms; E_eps non-increasing",
    "checkpoint_format": "DHFLOW01, little-endian 64-bit header, row-major binary64 fields",
}


def _fmt(x):
    return f"{float(x):.17g}"


def _say(quiet, message):
    if not quiet:
        print(message)


def build_grid(cfg):
    return GridSpec(cfg.nx, cfg.ny, cfg.lx, cfg.ly, SpinStructure(*cfg.spin))


def build_state(cfg):
    """Initial FlowState for the single-run view of a config."""
    spec = build_grid(cfg)
    if cfg.preset == "degree1_blowup":
        if cfg.kind != "sphere" or cfg.q != 3:
            raise ValueError("degree1_blowup needs target.kind = sphere, target.q = 3")
        target = make_target(cfg.kind, cfg.q)
        u = presets.degree_one_map(spec, r0=cfg.r0)
        psi = np.zeros((*spec.shape, 2, cfg.q), dtype=complex)
    elif cfg.preset in ("decoupled_sweep", "epsilon_sweep"):
        if cfg.kind != "flat":
            raise ValueError(f"{cfg.preset} needs target.kind = flat")
        target = make_target(cfg.kind, cfg.q)
        u, psi = presets.mode_data(
            spec, target, k=cfg.mode_k, branch=cfg.branch, amp=cfg.psi_amp
        )
    else:  # convergence
        target = make_target(cfg.kind, cfg.q)
        u = presets.smooth_map(spec, target, amp=cfg.amp)
        if cfg.noise > 0:
            u = target.project_point(
                u + presets.seeded_noise(spec, (cfg.q,), cfg.seed, cfg.noise)
            )
        psi = presets.smooth_spinor(spec, target, u, amp=cfg.psi_amp)
    return FlowState(spec=spec, target=target, t=0.0, eps=cfg.eps, u=u, psi=psi).validate()


def step_control(cfg):
    return StepControl(
        cfl_safety=cfg.cfl_safety, min_dt=cfg.min_dt, max_dt=cfg.max_dt,
        fixed_dt=cfg.fixed_dt,
    )


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_conventions(out_dir):
    stamp = dict(CONVENTIONS, code_version=__version__)
    _write_text(
        os.path.join(out_dir, "conventions.json"),
        json.dumps(stamp, indent=2, sort_keys=True) + "\n",
    )


def write_run_dir(out_dir, echo_text, result, monitor):
    os.makedirs(out_dir, exist_ok=True)
    _write_text(os.path.join(out_dir, "config.ini"), echo_text)

    radii = monitor.radii if monitor.radii is not None else ()
    header = list(CSV_FIXED_COLUMNS)
    header += [f"max_local_F_R{i + 1}" for i in range(len(radii))]
    header.append("dt")
    rows = [",".join(header)]
    for rec in monitor.records:
        e = rec.energy
        cells = [
            rec.t, e.e_eps, e.dirichlet, e.dirac_pairing, e.spinor_gradient,
            e.psi_l2, e.psi_l4, e.psi_sup, rec.kinetic_u, rec.kinetic_psi,
            rec.el_residual_u, rec.el_residual_psi, *rec.max_local_F, rec.dt_used,
        ]
        rows.append(",".join(_fmt(c) for c in cells))
    _write_text(os.path.join(out_dir, "run.csv"), "\n".join(rows) + "\n")

    _write_text(
        os.path.join(out_dir, "events.json"),
        json.dumps([ev.to_json_dict() for ev in result.events], indent=2) + "\n",
    )
    write_checkpoint(result.state, os.path.join(out_dir, "final.ckpt"))
    write_conventions(out_dir)


def execute_run(cfg, echo_text, quiet):
    state = build_state(cfg)
    monitor = MonitorSuite(delta1=cfg.delta1, radii=cfg.radii, cadence=cfg.cadence)
    result = run(state, cfg.t_end, step_control(cfg), monitor=monitor)
    write_run_dir(cfg.out_dir, echo_text, result, monitor)
    _say(
        quiet,
        f"{cfg.out_dir}: {result.status}, t = {result.state.t:.6g}, "
        f"{len(monitor.records)} records, {len(result.events)} events",
    )
    return result


def cmd_run(cfg, echo_text, quiet):
    if cfg.preset not in ("convergence", "degree1_blowup"):
        raise ValueError(
            f"preset {cfg.preset!r} is not a single run; use the sweep or "
            "identities subcommand"
        )
    result = execute_run(cfg, echo_text, quiet)
    return 0 if result.status == "clean" else 2


ALL_SPINS = ((0, 0), (0, 1), (1, 0), (1, 1))


def _fit_log_slope(records, column):
    ts = np.array([rec.t for rec in records])
    vals = np.array([getattr(rec.energy, column) for rec in records])
    if np.any(vals <= 0) or ts[-1] == ts[0]:
        return math.nan
    return float(np.polyfit(ts, 0.5 * np.log(vals), 1)[0])


def cmd_sweep(cfg, quiet):
    if cfg.preset == "decoupled_sweep":
        return sweep_decoupled(cfg, quiet)
    if cfg.preset == "epsilon_sweep":
        return sweep_epsilon(cfg, quiet)
    raise ValueError(f"preset {cfg.preset!r} is not a sweep; use the run subcommand")


def sweep_decoupled(cfg, quiet):
    """Flat-target mode runs at eps = factor * eps_star for all four spin
    structures; the summary row records the measured L2 growth/decay rate
    against the continuum prediction |xi| - eps |xi|^2."""
    if cfg.kind != "flat":
        raise ValueError("decoupled_sweep needs target.kind = flat")
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = ["spin,eps,eps_star,rate_measured,rate_predicted,flag"]
    worst = "clean"
    for spin in ALL_SPINS:
        spin_cfg = replace(cfg, spin=spin)
        spec = build_grid(spin_cfg)
        eps_star = oracle.epsilon_threshold(spec)
        k = cfg.mode_k if cfg.mode_k is not None else presets.slowest_mode(spec)
        xi_norm = float(np.hypot(*oracle.mode_frequency(spec, k)))
        for factor in cfg.eps_factors:
            eps = factor * eps_star
            sub = replace(
                spin_cfg, eps=eps, mode_k=k,
                out_dir=os.path.join(cfg.out_dir, f"spin{spin[0]}{spin[1]}_eps{eps:.6g}"),
            )
            result = execute_run(sub, effective_text(sub), quiet)
            if result.status != "clean":
                worst = result.status
            rate = _fit_log_slope(result.records, "psi_l2")
            predicted = -(eps * xi_norm**2 + cfg.branch * xi_norm)
            flag = "growth" if rate > 0 else "decay"
            rows.append(
                f"{spin[0]}{spin[1]},{_fmt(eps)},{_fmt(eps_star)},"
                f"{_fmt(rate)},{_fmt(predicted)},{flag}"
            )
    _write_text(os.path.join(cfg.out_dir, "sweep_summary.csv"), "\n".join(rows) + "\n")
    write_conventions(cfg.out_dir)
    return 0 if worst == "clean" else 2


def sweep_epsilon(cfg, quiet):
    """Fixed mode data, eps halved from eps_star; tabulates the budget bound
    (F + delta5)/delta1 and the final spinor L4 mass per eps.

    The budget bound must grow monotonically as eps shrinks; a violation
    aborts with a MonotonicityError after the table is written.
    """
    if cfg.kind != "flat":
        raise ValueError("epsilon_sweep needs target.kind = flat")
    if cfg.spin == (0, 0):
        raise ValueError("epsilon_sweep needs a nontrivial grid.spin")
    os.makedirs(cfg.out_dir, exist_ok=True)
    spec = build_grid(cfg)
    eps_star = oracle.epsilon_threshold(spec)
    eps_list = [eps_star * 0.5**j for j in range(cfg.eps_halvings + 1)]

    base = build_state(replace(cfg, eps=eps_list[0]))
    from dhflow.diagnostics import epsilon_budget_report

    budget = epsilon_budget_report(
        spec, base.target, base.u, base.psi, eps_list, cfg.delta1
    )

    worst = "clean"
    finals = []
    for eps in eps_list:
        sub = replace(cfg, eps=eps, out_dir=os.path.join(cfg.out_dir, f"eps_{eps:.6g}"))
        result = execute_run(sub, effective_text(sub), quiet)
        if result.status != "clean":
            worst = result.status
        finals.append(result.records[-1].energy.psi_l4)

    rows = ["eps,f_quantity,delta5,bound,psi_l4_final"]
    for row, l4 in zip(budget, finals):
        rows.append(
            f"{_fmt(row.eps)},{_fmt(row.f_quantity)},{_fmt(row.delta5)},"
            f"{_fmt(row.bound)},{_fmt(l4)}"
        )
    _write_text(os.path.join(cfg.out_dir, "budget.csv"), "\n".join(rows) + "\n")
    write_conventions(cfg.out_dir)

    bounds = [row.bound for row in budget]
    if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
        raise MonotonicityError(
            "budget bound failed to grow monotonically along the eps sweep; "
            f"see {os.path.join(cfg.out_dir, 'budget.csv')}"
        )
    return 0 if worst == "clean" else 2


def _identity_gaps(cfg, n):
    """One row set of the identities table at resolution n."""
    spec = GridSpec(n, n, cfg.lx, cfg.ly, SpinStructure(*cfg.spin))
    target = make_target("sphere", 3)
    u = presets.smooth_map(spec, target, amp=cfg.amp)
    psi = presets.smooth_spinor(spec, target, u, amp=cfg.psi_amp)
    state = FlowState(spec=spec, target=target, t=0.0, eps=cfg.eps, u=u, psi=psi)

    phi = oracle.bochner_residual_phi(spec, target, u)
    psi_b = oracle.bochner_residual_psi(spec, target, u, psi)

    du = map_gradient(spec, target, u)
    cg_rhs, _ = rhs(state)
    intrinsic = (
        tension(spec, target, u, du)
        - curvature_R(spec, target, u, psi, du)
        - cfg.eps * curvature_Rc(spec, target, u, psi, du)
    )
    cross_gap = l2_norm(spec, cg_rhs - intrinsic)

    geo = FlowState(
        spec=spec, target=target, t=0.0, eps=cfg.eps,
        u=presets.geodesic_map(spec), psi=np.zeros((*spec.shape, 2, 3), dtype=complex),
    )
    geo_rhs, _ = rhs(geo)
    return {
        "bochner_phi_gap": abs(phi.gap),
        "bochner_psi_gap": abs(psi_b.gap),
        "intrinsic_extrinsic_gap": cross_gap,
        "geodesic_rhs_norm": l2_norm(spec, geo_rhs),
    }, state


def cmd_identities(cfg, echo_text, quiet):
    """Refinement table of identity residuals plus the scalar oracles."""
    if cfg.preset != "identities":
        raise ValueError(f"preset {cfg.preset!r} is not the identities preset")
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_text(os.path.join(cfg.out_dir, "config.ini"), echo_text)

    coarse, state = _identity_gaps(cfg, cfg.nx)
    fine, _ = _identity_gaps(cfg, 2 * cfg.nx)
    rows = ["name,coarse,fine,order"]
    for name in coarse:
        order = math.log2(coarse[name] / fine[name]) if fine[name] > 0 else math.inf
        rows.append(f"{name},{_fmt(coarse[name])},{_fmt(fine[name])},{_fmt(order)}")

    grad = oracle.gradient_check(
        state,
        (
            presets.seeded_noise(state.spec, (3,), cfg.seed, 1.0),
            presets.seeded_noise(state.spec, (2, 3), cfg.seed + 1, 1.0)
            + 1j * presets.seeded_noise(state.spec, (2, 3), cfg.seed + 2, 1.0),
        ),
    )
    rows.append(f"gradient_fd_gap,{_fmt(grad.relative_gap)},,")

    samples = [
        presets.seeded_noise(state.spec, (), cfg.seed + 10 + i, 1.0) for i in range(12)
    ]
    sob = oracle.sobolev_ratio(state.spec, samples)
    rows.append(f"sobolev_global_max,{_fmt(sob.max_global)},,")
    rows.append(f"sobolev_local_max,{_fmt(sob.max_local)},,")

    u0 = 1.0 + presets.seeded_noise(state.spec, (), cfg.seed + 30, 0.5)
    u0 = u0 - float(np.min(u0)) + 0.1
    har = oracle.harnack_demo(state.spec, u0, 0.3, 2.0)
    rows.append(f"harnack_margin,{_fmt(har.bound / har.sup_at_t - 1.0)},,")

    _write_text(os.path.join(cfg.out_dir, "identities.csv"), "\n".join(rows) + "\n")
    write_conventions(cfg.out_dir)
    _say(quiet, f"{cfg.out_dir}: identities table written ({len(rows) - 1} rows)")
    return 0


def cmd_inspect(path):
    state = read_checkpoint(path)
    spec, target = state.spec, state.target
    energy = energy_regularized(spec, target, state.u, state.psi, state.eps)
    res_u, res_psi = el_residuals(spec, target, state.u, state.psi, state.eps)
    print(f"checkpoint     {path}")
    print(f"grid           {spec.nx} x {spec.ny}, lengths {spec.lx:.6g} x {spec.ly:.6g}")
    print(f"spin           ({spec.spin.delta1}, {spec.spin.delta2})")
    print(f"target         {target.kind}, q = {target.q}")
    print(f"eps, t         {state.eps:.6g}, {state.t:.6g}")
    print(f"E_eps          {energy.e_eps:.10g}")
    print(f"  dirichlet        {energy.dirichlet:.10g}")
    print(f"  dirac_pairing    {energy.dirac_pairing:.10g}")
    print(f"  spinor_gradient  {energy.spinor_gradient:.10g}")
    print(f"psi mass       {energy.psi_l2:.10g} (sup {energy.psi_sup:.10g})")
    print(f"el residuals   u {res_u:.6g}, psi {res_psi:.6g}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="dhflow",
        description="Regularized Dirac-harmonic map heat flow experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("run", "execute a single-run preset"),
        ("sweep", "execute a multi-run preset"),
        ("identities", "write the identity/oracle residual table"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("config", help="INI config path")
        p.add_argument("--out-dir", help="override output.out_dir")
        p.add_argument("--seed", type=int, help="override initial.seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    p = sub.add_parser("inspect", help="summarize a checkpoint")
    p.add_argument("checkpoint", help="checkpoint path")

    args = parser.parse_args(argv)
    try:
        if args.command == "inspect":
            return cmd_inspect(args.checkpoint)
        cfg = parse_config(args.config)
        with open(args.config, "r", encoding="utf-8") as fh:
            echo_text = fh.read()
        if args.out_dir is not None:
            cfg = replace(cfg, out_dir=args.out_dir)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.command == "run":
            return cmd_run(cfg, echo_text, args.quiet)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.quiet)
        return cmd_identities(cfg, echo_text, args.quiet)
    except (MonotonicityError,) as err:
        print(f"aborted: {err}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
