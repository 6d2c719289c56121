"""Command-line harness: achievability verdicts, the worked three-level demo,
rate scans over probe ladders, interleaved-evolution trajectories, and the
self-validation suite.

Scans write versioned CSV (deterministic for fixed config and seeds); single
reports are JSON plus a text summary on stdout.
"""

from __future__ import annotations

import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import fixtures
from .codes import (
    build_ancilla_assisted,
    build_random_ancilla_free,
    build_small_ancilla,
    check_qec_condition,
    materialize,
    multiset_size,
    round_counts,
)
from .errors import QecSenseError
from .hnls import solve_hl_coefficient, solve_sql_coefficient
from .logical import (
    DEFAULT_TERM_CAP,
    build_optimal_recovery,
    logical_rates,
    predicted_qfi,
)
from .noise import NoiseModel, apply_gauge, build_span, hnls_holds
from .simulate import (
    EvolutionSpec,
    embed_probe_operators,
    logical_qec_supermap,
    qfi_finite_difference,
)

SCAN_SCHEMA = "qecsense-scan v1"
TRAJ_SCHEMA = "qecsense-trajectory v1"


def _load_model(name_or_path: str) -> NoiseModel:
    if name_or_path in fixtures.BUNDLED_MODELS:
        return fixtures.BUNDLED_MODELS[name_or_path]()
    path = Path(name_or_path)
    if not path.exists():
        raise click.ClickException(
            f"no such model file or bundled name: {name_or_path} "
            f"(bundled: {', '.join(sorted(fixtures.BUNDLED_MODELS))})")
    return NoiseModel.from_json(path)


def _out_dir(override: str | None) -> Path:
    base = override or os.environ.get("QECSENSE_OUTDIR") or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _parse_int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


@click.group()
@click.option("--tol", type=float, default=1.0, show_default=True,
              help="Global scale factor on the CLI's verdict tolerances.")
@click.option("--out", type=str, default=None,
              help="Output directory (or set QECSENSE_OUTDIR).")
@click.pass_context
def main(ctx, tol, out):
    """Error-corrected sensing toolbox."""
    ctx.ensure_object(dict)
    ctx.obj["tol"] = tol
    ctx.obj["out"] = out


@main.command()
@click.argument("model")
@click.pass_context
def hnls(ctx, model):
    """Achievability verdict for MODEL (file path or bundled name)."""
    try:
        mdl = _load_model(model)
    except (QecSenseError, json.JSONDecodeError) as exc:
        click.echo(f"bad input: {exc}", err=True)
        sys.exit(1)
    span = build_span(mdl)
    holds, resid = hnls_holds(mdl, span)
    report = {"model": mdl.label or model, "span_dim": span.dim_S,
              "span_residual": resid, "verdict": "HL" if holds else "SQL"}
    try:
        if holds:
            sol = solve_hl_coefficient(mdl, span)
            report["solution"] = sol.to_dict()
            click.echo(f"verdict: HL  (span residual {resid:.3e}, dim {span.dim_S})")
            click.echo(f"span distance = {sol.value:.10f}  "
                       f"(dual gap {sol.gap:.1e}, {sol.iterations} iterations)")
            click.echo(f"extremal weights: {np.round(sol.lambdas, 6).tolist()} "
                       f"split at {sol.d0}")
        else:
            coeff = solve_sql_coefficient(mdl, span)
            report["sql"] = coeff.to_dict()
            click.echo(f"verdict: SQL  (span residual {resid:.3e})")
            click.echo(f"rate coefficient = {coeff.alpha:.10f}  "
                       f"(constraint residual {coeff.residual:.1e})")
    except QecSenseError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        sys.exit(2)
    path = _out_dir(ctx.obj["out"]) / "hnls_report.json"
    path.write_text(json.dumps(report, indent=1))
    click.echo(f"report written to {path}")


@main.command("qutrit-demo")
@click.option("--nu", type=int, default=10, show_default=True,
              help="Resource units (probes + ancillas).")
@click.option("--t", "t_probe", type=float, default=1.0, show_default=True)
@click.pass_context
def qutrit_demo(ctx, nu, t_probe):
    """Reproduce the worked three-level example end to end."""
    tol = 1e-6 * ctx.obj["tol"]
    mdl = fixtures.qutrit_model()
    sol = solve_hl_coefficient(mdl)
    g = apply_gauge(mdl, sol.rho0, sol.rho1)
    failures = 0

    def check(name, got, want, eps):
        nonlocal failures
        ok = abs(got - want) <= eps
        failures += (not ok)
        click.echo(f"  {'PASS' if ok else 'FAIL'}  {name}: {got:.10g} (want {want:.10g})")
        return ok

    click.echo("== span distance ==")
    check("distance", sol.value, 0.5, tol)

    click.echo("== codes ==")
    aa = build_ancilla_assisted(sol)
    dyn_aa = logical_rates(aa, g)
    check("(1,1) rate", dyn_aa.gamma_L, 0.0, 10 * tol)
    check("(1,1) signal", dyn_aa.signal, 1.0, 10 * tol)
    small = build_small_ancilla(sol, 4)
    dyn41 = logical_rates(small, g)
    check("(4,1) rate", dyn41.gamma_L, 0.0, 10 * tol)
    check("(4,1) signal", dyn41.signal, 4.0, 10 * tol)

    click.echo("== two-site condition ==")
    rep = check_qec_condition(materialize(small), mdl)
    ok = rep.satisfied and abs(abs(rep.q_ops[0][0, 0]) - 1 / np.sqrt(12)) < 1e-6
    failures += (not ok)
    click.echo(f"  {'PASS' if ok else 'FAIL'}  condition residual {rep.max_residual:.2e}, "
               f"Q0[0,0] = {rep.q_ops[0][0, 0]:.6f} (want +-{1/np.sqrt(12):.6f})")

    click.echo("== resource table ==")
    rows = []
    for n_units in (nu,):
        f11 = predicted_qfi(dyn_aa, n_units // 2, t_probe)
        f41 = predicted_qfi(dyn41, (4 * n_units // 5) // 4, t_probe)
        want11 = 0.25 * n_units**2 * t_probe**2
        want41 = 16 / 25 * n_units**2 * t_probe**2
        check(f"units={n_units} pair-encoding", f11, want11, 1e-4 * max(1, want11))
        check(f"units={n_units} four-probe", f41, want41, 1e-4 * max(1, want41))
        rows.append((n_units, f11, f41))
    click.echo(f"  {'units':>6} {'pair-encoding':>16} {'four-probe':>16}")
    for n_units, f11, f41 in rows:
        click.echo(f"  {n_units:>6} {f11:>16.6f} {f41:>16.6f}")
    if failures:
        click.echo(f"{failures} checks failed", err=True)
    sys.exit(min(failures, 120))


def _scan_worker(args):
    sol, gauged, family, m, seed, t_grid, n = args
    t0 = time.perf_counter()
    try:
        if family == "small":
            code = build_small_ancilla(sol, m)
        else:
            code = build_random_ancilla_free(sol, m, seed=seed)
        dyn = logical_rates(code, gauged)
        qfis = [predicted_qfi(dyn, n, t) for t in t_grid]
        wall = time.perf_counter() - t0
        return {"m": m, "seed": seed, "ok": True, "gamma_L": dyn.gamma_L,
                "signal": dyn.signal, "qfis": qfis, "wall": wall}
    except QecSenseError as exc:
        return {"m": m, "seed": seed, "ok": False, "error": str(exc),
                "wall": time.perf_counter() - t0}


@main.command("gamma-scan")
@click.argument("model")
@click.option("--code", "family", type=click.Choice(["small", "random"]),
              default="small", show_default=True)
@click.option("--m", "m_list", type=str, default="4,8,12", show_default=True,
              help="Probe-count ladder, e.g. 4,8,12 or 4..12.")
@click.option("--seeds", type=str, default="0", show_default=True,
              help="Seed list for the random family, e.g. 0..99.")
@click.option("--t-grid", type=str, default="0.5,1.0", show_default=True)
@click.option("--n", "n_logical", type=int, default=1, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_context
def gamma_scan(ctx, model, family, m_list, seeds, t_grid, n_logical, jobs):
    """Rate and signal scan over a probe ladder; CSV output."""
    mdl = _load_model(model)
    span = build_span(mdl)
    holds, _ = hnls_holds(mdl, span)
    if not holds:
        raise click.ClickException("model admits only linear scaling; scan needs "
                                   "a span-escaping Hamiltonian")
    sol = solve_hl_coefficient(mdl, span)
    gauged = apply_gauge(mdl, sol.rho0, sol.rho1)
    ms = _parse_int_list(m_list)
    seed_list = _parse_int_list(seeds) if family == "random" else [None]
    ts = [float(x) for x in t_grid.split(",") if x.strip()]

    # feasibility preview for the phase-bearing family
    feasible_ms = []
    for m in ms:
        if family == "random":
            c0 = round_counts(sol.lambdas[:sol.d0], m)
            c1 = round_counts(sol.lambdas[sol.d0:], m)
            est = (m * (m - 1) // 2) * (multiset_size(c0) + multiset_size(c1))
            if est > DEFAULT_TERM_CAP:
                click.echo(f"m={m}: ~{est:.2e} terms exceeds cap, skipped")
                continue
        feasible_ms.append(m)
    if family == "random":
        click.echo(f"feasible ladder: {feasible_ms}")

    tasks = [(sol, gauged, family, m, s, ts, n_logical)
             for m in feasible_ms for s in seed_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_scan_worker, tasks))
    else:
        records = [_scan_worker(t) for t in tasks]
    records.sort(key=lambda rec: (rec["m"], -1 if rec["seed"] is None else rec["seed"]))

    out = _out_dir(ctx.obj["out"]) / f"gamma_scan_{family}.csv"
    with open(out, "w") as fh:
        fh.write(f"# {SCAN_SCHEMA}\n")
        qcols = ",".join(f"qfi_t{_fmt(t)}" for t in ts)
        fh.write(f"m,seed,gamma_L,signal,signal_per_m,{qcols}\n")
        for rec in records:
            if not rec["ok"]:
                click.echo(f"m={rec['m']} seed={rec['seed']}: FAILED {rec['error']}")
                continue
            seed_txt = "" if rec["seed"] is None else str(rec["seed"])
            cols = [str(rec["m"]), seed_txt, _fmt(rec["gamma_L"]), _fmt(rec["signal"]),
                    _fmt(rec["signal"] / rec["m"])]
            cols += [_fmt(x) for x in rec["qfis"]]
            fh.write(",".join(cols) + "\n")
    good = [r for r in records if r["ok"]]
    wall = sum(r["wall"] for r in records)
    click.echo(f"{len(good)}/{len(records)} points written to {out} "
               f"({wall:.2f}s compute)")
    per_m = {}
    for m in feasible_ms:
        sub = [r["gamma_L"] for r in good if r["m"] == m]
        if sub:
            per_m[m] = max(sub)
            click.echo(f"  m={m}: rate min={min(sub):.6f} max={max(sub):.6f} "
                       f"signal/m={next(r['signal'] for r in good if r['m'] == m) / m:.6f}")
    # flag trend violations: growing rate or signal/m drifting from the target
    if len(per_m) >= 3:
        xs = np.array(sorted(per_m), float)
        ys = np.array([per_m[int(m)] for m in xs])
        sxx = float(np.sum((xs - xs.mean()) ** 2))
        slope = float(np.sum((xs - xs.mean()) * (ys - ys.mean())) / sxx)
        se = float(np.sqrt(np.sum((ys - (ys.mean() + slope * (xs - xs.mean()))) ** 2)
                           / max(len(xs) - 2, 1) / sxx))
        if slope - 2 * se > 0:
            click.echo(f"WARNING: rate grows with m (slope {slope:.3e} +- {se:.1e})")
        target = 2 * sol.value
        devs = {m: abs(next(r["signal"] for r in good if r["m"] == m) / m - target)
                for m in per_m}
        ms_sorted = sorted(devs)
        if devs[ms_sorted[-1]] > max(devs[ms_sorted[0]], 1e-9):
            click.echo("WARNING: signal per probe is not converging to twice "
                       f"the span distance ({target:.6f})")


@main.command()
@click.argument("model")
@click.option("--code", "family",
              type=click.Choice(["ancilla-assisted", "small", "random"]),
              default="small", show_default=True)
@click.option("--m", "m_probes", type=int, default=4, show_default=True)
@click.option("--n", "n_logical", type=int, default=1, show_default=True,
              help="Logical qubits (final Fisher information scales by n^2).")
@click.option("--t", "t_total", type=float, default=1.0, show_default=True)
@click.option("--dt", type=float, default=1e-3, show_default=True)
@click.option("--omega", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def simulate(ctx, model, family, m_probes, n_logical, t_total, dt, omega, seed):
    """Interleaved-evolution trajectory of one logical qubit; CSV output."""
    mdl = _load_model(model)
    sol = solve_hl_coefficient(mdl)
    gauged = apply_gauge(mdl, sol.rho0, sol.rho1)
    if family == "ancilla-assisted":
        dense = build_ancilla_assisted(sol)
        m_probes = 1
    elif family == "small":
        dense = materialize(build_small_ancilla(sol, m_probes))
    else:
        dense = materialize(build_random_ancilla_free(sol, m_probes, seed=seed))
    dyn = logical_rates(dense, gauged)
    rec = build_optimal_recovery(dense, gauged)
    Htot, Ls = embed_probe_operators(gauged.model, m_probes,
                                     ancilla_dim=dense.ancilla_dim)
    h = 1e-5
    maps = {}
    for key, om in (("mid", omega), ("plus", omega + h), ("minus", omega - h)):
        spec = EvolutionSpec(hamiltonian=Htot, lindblads=Ls, t=t_total, dt=dt,
                             omega=om, recovery=rec)
        maps[key] = logical_qec_supermap(spec)

    steps = int(round(t_total / dt))
    out = _out_dir(ctx.obj["out"]) / f"trajectory_{family}_m{m_probes}.csv"
    rho = {key: np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex) for key in maps}
    stride = max(1, steps // 200)
    with open(out, "w") as fh:
        fh.write(f"# {TRAJ_SCHEMA}\n")
        fh.write("t,p0,p1,abs_coherence,qfi\n")
        for step in range(steps + 1):
            if step % stride == 0 or step == steps:
                F = qfi_finite_difference(rho["minus"], rho["plus"], h).value
                F *= n_logical**2  # logical product state of n qubits
                fh.write(",".join([
                    _fmt(step * dt), _fmt(rho["mid"][0, 0].real),
                    _fmt(rho["mid"][1, 1].real), _fmt(abs(rho["mid"][0, 1])),
                    _fmt(F)]) + "\n")
            if step < steps:
                for key, T in maps.items():
                    rho[key] = (T @ rho[key].reshape(-1)).reshape(2, 2)
    click.echo(f"signal={dyn.signal:.6f} rate={dyn.gamma_L:.6f} "
               f"predicted F(t={t_total}) = {predicted_qfi(dyn, n_logical, t_total):.6f}")
    click.echo(f"trajectory written to {out}")


@main.command()
@click.option("--suite", type=click.Choice(["fast", "full"]), default="fast",
              show_default=True)
@click.pass_context
def validate(ctx, suite):
    """Run the oracle-equivalence checks; exit code counts failures."""
    from . import selfcheck
    results = selfcheck.run_suite(suite, tol_scale=ctx.obj["tol"])
    width = max(len(name) for name, *_ in results)
    failures = 0
    for name, ok, detail in results:
        failures += (not ok)
        click.echo(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    click.echo(f"{len(results) - failures}/{len(results)} checks passed")
    sys.exit(min(failures, 120))


if __name__ == "__main__":
    main()
