"""Oracle-equivalence checks behind the ``validate`` subcommand.

Every check compares a closed form or structured computation against an
independent brute-force evaluation at desk scale and returns a pass/fail line.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from . import fixtures
from .codes import (
    DenseCode,
    build_random_ancilla_free,
    build_small_ancilla,
    build_sql_codes,
    check_L0_perp_L1,
    check_qec_condition,
    color_ancilla,
    materialize,
    multiset_size,
    multiset_strings,
    swap_degree,
)
from .hnls import solve_hl_coefficient, solve_sql_coefficient
from .linalg import dagger, trace_norm
from .logical import build_optimal_recovery, logical_rates, recovery_rate
from .noise import apply_gauge
from .simulate import (
    EvolutionSpec,
    embed_probe_operators,
    evolve_lindblad,
    ghz_dephasing_qfi,
    ghz_state,
    lindblad_superoperator,
    logical_qec_supermap,
    qfi_finite_difference,
)


def _dense_cross_operator(code, gauged):
    """Explicit cross-codeword operator for the Gram-oracle comparison."""
    from .codes import site_operator
    dims = code.dims
    I = np.eye(code.dim)
    P0 = np.outer(code.ket0, code.ket0.conj())
    P1 = np.outer(code.ket1, code.ket1.conj())
    B = np.zeros((code.dim, code.dim), dtype=complex)
    for site in range(code.m):
        for L in gauged.lindblads:
            v = site_operator(code.ket0, L, site, dims)
            w = site_operator(code.ket1, L, site, dims)
            B += np.outer((I - P0) @ v, ((I - P1) @ w).conj())
    return B


def check_qutrit_distance(tol_scale=1.0):
    mdl = fixtures.qutrit_model()
    sol = solve_hl_coefficient(mdl)
    err = abs(sol.value - 0.5)
    r0 = np.diag([0.5, 0, 0.5])
    ok = err < 1e-6 * tol_scale and np.abs(sol.rho0 - r0).max() < 1e-6
    return ok, f"distance err {err:.1e}, extremal-state err {np.abs(sol.rho0 - r0).max():.1e}"


def check_qutrit_code(tol_scale=1.0):
    mdl = fixtures.qutrit_model()
    sol = solve_hl_coefficient(mdl)
    g = apply_gauge(mdl, sol.rho0, sol.rho1)
    small = build_small_ancilla(sol, 4)
    rep = check_qec_condition(materialize(small), mdl)
    dyn = logical_rates(small, g)
    ok = (rep.satisfied and rep.max_residual < 1e-8 * tol_scale
          and abs(dyn.gamma_L) < 1e-8 and abs(dyn.signal - 4) < 1e-7)
    return ok, (f"condition resid {rep.max_residual:.1e}, rate {dyn.gamma_L:.1e}, "
                f"signal {dyn.signal:.8f}")


def check_gram_oracle(tol_scale=1.0, n_cases=6):
    mdl = fixtures.qutrit_model()
    sol = solve_hl_coefficient(mdl)
    g = apply_gauge(mdl, sol.rho0, sol.rho1)
    worst = 0.0
    for seed in range(n_cases):
        code = build_random_ancilla_free(sol, 4, seed=seed)
        dyn_s = logical_rates(code, g)
        dense = materialize(code)
        dyn_d = logical_rates(dense, g)
        B = _dense_cross_operator(dense, g)
        worst = max(worst,
                    abs(dyn_s.trace_norm_B - trace_norm(B)),
                    abs(dyn_s.gamma_L - dyn_d.gamma_L))
    return worst < 1e-8 * tol_scale, f"max structured-vs-dense deviation {worst:.1e}"


def check_ghz_dephasing(tol_scale=1.0, n_max=3):
    worst = 0.0
    for N in range(1, n_max + 1):
        for gamma in (0.0, 0.1):
            mdl = fixtures.dephasing_qubit_model(1.0)
            probe = fixtures.NoiseModel(
                d=2, H=mdl.H,
                lindblads=(np.sqrt(gamma / 2) * fixtures.PAULI_Z,) if gamma else ())
            Htot, Ls = embed_probe_operators(probe, N)
            psi = ghz_state(N)
            rho0 = np.outer(psi, psi.conj())
            h, t = 1e-5, 1.0
            rp = evolve_lindblad(rho0, EvolutionSpec(Htot, Ls, t, 1 / 400, omega=+h))
            rm = evolve_lindblad(rho0, EvolutionSpec(Htot, Ls, t, 1 / 400, omega=-h))
            F = qfi_finite_difference(rm, rp, h).value
            exact = ghz_dephasing_qfi(N, gamma, t)
            worst = max(worst, abs(F - exact) / exact)
    return worst < 1e-5 * tol_scale, f"max relative deviation {worst:.1e}"


def check_integrator_oracle(tol_scale=1.0):
    mdl = fixtures.qutrit_model()
    rho0 = np.diag([0.5, 0.3, 0.2]).astype(complex)
    spec = EvolutionSpec(mdl.H, mdl.lindblads, t=0.3, dt=1e-3, omega=0.7)
    r_rk4 = evolve_lindblad(rho0, spec)
    S = lindblad_superoperator(mdl.H, mdl.lindblads, 0.7)
    r_exp = (expm(0.3 * S) @ rho0.reshape(-1)).reshape(3, 3)
    err = np.abs(r_rk4 - r_exp).max()
    return err < 1e-8 * tol_scale, f"integrator vs exponential {err:.1e}"


def check_ancilla_bounds(tol_scale=1.0):
    cases = [np.array(c) for c in ([2, 2], [3, 2], [1, 1, 1], [4, 2], [3, 3, 2])]
    for counts in cases:
        m = counts.sum()
        d = len(counts)
        if multiset_size(counts) > 10**4:
            continue
        colors, palette = color_ancilla(counts)
        if palette > min(swap_degree(counts) + 1, multiset_size(counts)):
            return False, f"palette {palette} above guarantee for counts {counts}"
        if palette > d**2 * m**2:
            return False, f"palette {palette} above d^2 m^2 for counts {counts}"
        strings = multiset_strings(counts)
        index = {s.tobytes(): i for i, s in enumerate(strings)}
        for i, w in enumerate(strings):
            for a in range(m):
                for b in range(a + 1, m):
                    if w[a] != w[b]:
                        w2 = w.copy()
                        w2[a], w2[b] = w[b], w[a]
                        if colors[index[w2.tobytes()]] == colors[i]:
                            return False, f"improper coloring for counts {counts}"
    return True, f"{len(cases)} count vectors, all colorings proper and bounded"


def check_sql_pathway(tol_scale=1.0):
    mdl = fixtures.dephasing_qubit_model(1.0)
    coeff = solve_sql_coefficient(mdl)
    if abs(coeff.alpha - 0.125) > 1e-4 * tol_scale:
        return False, f"rate coefficient {coeff.alpha:.6f} != 0.125"
    sp = fixtures.sql_single_probe(2)
    worst = 0.0
    for variant in ("small-ancilla", "qubit-ancilla-random"):
        code = build_sql_codes(sp, 4, variant, seed=1)
        dense = materialize(code)
        for k in (0, 1):
            for sa, sb in ((0, 1), (1, 3)):
                T_s = code.two_local_rdm(k, sa, sb)
                rho = np.outer(dense.ket0 if k == 0 else dense.ket1,
                               (dense.ket0 if k == 0 else dense.ket1).conj())
                from .linalg import partial_trace
                T_d = partial_trace(rho, dense.dims, [sa, sb])
                worst = max(worst, float(np.abs(T_s - T_d).max()))
    return worst < 1e-9, f"alpha ok; reduced-state deviation {worst:.1e}"


def check_corruption_detected(tol_scale=1.0):
    # two codewords sharing a probe string must fail the orthogonality check
    mdl = fixtures.qubit_zx_model()
    k0 = np.zeros(8, dtype=complex)
    k1 = np.zeros(8, dtype=complex)
    k0[0] = 1.0
    k1[7] = np.sqrt(1 - 0.04)
    k1[1] = 0.2          # leaks onto a single-flip neighbor of |000>
    code = DenseCode(m=3, probe_dim=2, ancilla_dim=1, ket0=k0, ket1=k1)
    ok, overlap = check_L0_perp_L1(code, mdl)
    return (not ok) and overlap > 0.1, f"corruption flagged with overlap {overlap:.3f}"


def check_interleave_convergence(tol_scale=1.0):
    mdl = fixtures.qutrit_model()
    sol = solve_hl_coefficient(mdl)
    g = apply_gauge(mdl, sol.rho0, sol.rho1)
    small = build_small_ancilla(sol, 5)
    dense = materialize(small)
    dyn = logical_rates(small, g)
    rec = build_optimal_recovery(dense, g)
    Htot, Ls = embed_probe_operators(g.model, 5, ancilla_dim=dense.ancilla_dim)
    t, omega = 0.5, 1.0
    errs = []
    for dt in (1e-3, 5e-4):
        spec = EvolutionSpec(Htot, Ls, t=t, dt=dt, omega=omega, recovery=rec)
        T = logical_qec_supermap(spec)
        vec = np.array([0.5, 0.5, 0.5, 0.5], dtype=complex)
        out = (np.linalg.matrix_power(T, spec.steps) @ vec).reshape(2, 2)
        pred = 0.5 * np.exp(-1j * (omega * dyn.signal + 2 * dyn.beta_L) * t
                            - dyn.gamma_L * t)
        errs.append(abs(out[0, 1] - pred) / abs(pred))
    order = np.log2(errs[0] / errs[1]) if errs[1] > 0 else float("inf")
    ok = errs[1] < 0.05 * tol_scale and 0.5 < order < 1.7
    return ok, f"errors {errs[0]:.4f} -> {errs[1]:.4f}, order ~{order:.2f}"


def check_generic_ladder(tol_scale=1.0):
    mdl = fixtures.generic_hl_model()
    sol = solve_hl_coefficient(mdl)
    g = apply_gauge(mdl, sol.rho0, sol.rho1)
    ms = [4, 8, 16, 24]
    gams, sigs = [], []
    for m in ms:
        dyn = logical_rates(build_small_ancilla(sol, m), g)
        gams.append(dyn.gamma_L)
        sigs.append(dyn.signal / m)
    gams = np.array(gams)
    bound_ok = np.all(gams <= 2 * gams[1] + 1e-12) and gams.min() > -1e-9
    band = max(abs(np.diag(dagger(sol.basis) @ mdl.H @ sol.basis)))
    band_ok = all(abs(s - 2 * sol.value) <= (len(sol.lambdas) * band + 1) / m
                  for s, m in zip(sigs, ms))
    ok = bound_ok and band_ok
    return ok, (f"rates {np.round(gams, 4).tolist()}, "
                f"signal/m {np.round(sigs, 4).tolist()} (target {2 * sol.value})")


def check_random_envelope(tol_scale=1.0, n_seeds=30):
    mdl = fixtures.generic_hl_model()
    sol = solve_hl_coefficient(mdl)
    g = apply_gauge(mdl, sol.rho0, sol.rho1)
    env = 2 * logical_rates(build_small_ancilla(sol, 8), g).gamma_L
    bad = 0
    total = 0
    for m in (8, 12):
        for seed in range(n_seeds):
            dyn = logical_rates(build_random_ancilla_free(sol, m, seed=seed), g)
            total += 1
            bad += (dyn.gamma_L > env)
    frac = 1 - bad / total
    return frac >= 0.95, f"{frac:.0%} of {total} seeded codes inside the envelope"


def check_phase_concentration(tol_scale=1.0, n_seeds=300):
    mdl = fixtures.generic_hl_model()
    sol = solve_hl_coefficient(mdl)
    m = 8
    acc = []
    for seed in range(n_seeds):
        code = build_random_ancilla_free(sol, m, seed=seed)
        D = code.delta_table(0, 0, 1)
        acc.append(np.abs(D[0, 1]) ** 2)
    mean_sq = float(np.mean(acc))
    bound = 1 / code.W_size(0)
    ok = mean_sq <= 1.5 * bound
    return ok, f"mean |swap coefficient|^2 = {mean_sq:.2e} vs 1/|W| = {bound:.2e}"


def check_recovery_optimal(tol_scale=1.0):
    mdl = fixtures.qutrit_model()
    sol = solve_hl_coefficient(mdl)
    g = apply_gauge(mdl, sol.rho0, sol.rho1)
    worst = 0.0
    for m in (4, 5):
        dense = materialize(build_small_ancilla(sol, m))
        dyn = logical_rates(dense, g)
        rec = build_optimal_recovery(dense, g)
        worst = max(worst, abs(recovery_rate(dense, g, rec) - dyn.gamma_L))
    return worst < 1e-8, f"achieved-vs-optimal rate deviation {worst:.1e}"


FAST_CHECKS = [
    ("qutrit-distance", check_qutrit_distance),
    ("qutrit-code", check_qutrit_code),
    ("gram-oracle", check_gram_oracle),
    ("ghz-dephasing", check_ghz_dephasing),
    ("integrator-oracle", check_integrator_oracle),
    ("ancilla-bounds", check_ancilla_bounds),
    ("sql-pathway", check_sql_pathway),
    ("corruption-detected", check_corruption_detected),
    ("recovery-optimal", check_recovery_optimal),
]

FULL_CHECKS = FAST_CHECKS + [
    ("interleave-convergence", check_interleave_convergence),
    ("generic-ladder", check_generic_ladder),
    ("random-envelope", check_random_envelope),
    ("phase-concentration", check_phase_concentration),
]


def run_suite(suite: str = "fast", tol_scale: float = 1.0):
    checks = FAST_CHECKS if suite == "fast" else FULL_CHECKS
    results = []
    for name, fn in checks:
        try:
            ok, detail = fn(tol_scale)
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results
