import numpy as np
import pytest

from qecsense.codes import (
    build_ancilla_assisted,
    build_random_ancilla_free,
    build_small_ancilla,
    build_sql_codes,
    materialize,
    site_operator,
)
from qecsense.errors import OrthogonalityViolated, WSetTooLarge
from qecsense.fixtures import sql_single_probe
from qecsense.hnls import solve_hl_coefficient
from qecsense.linalg import dagger, trace_norm
from qecsense.logical import (
    build_optimal_recovery,
    logical_rates,
    predicted_qfi,
    recovery_rate,
    trace_norm_lower_bound_check,
)
from qecsense.noise import NoiseModel, apply_gauge


def dense_cross_operator(code, gauged):
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


class TestRates:
    def test_ancilla_assisted_noiseless(self, qutrit_solution, qutrit_gauged):
        dyn = logical_rates(build_ancilla_assisted(qutrit_solution), qutrit_gauged)
        assert abs(dyn.gamma_L) < 1e-10
        assert dyn.signal == pytest.approx(2 * qutrit_solution.value, abs=1e-7)
        # the trace-norm term exactly cancels the moment sum
        assert dyn.trace_norm_B == pytest.approx(float(qutrit_gauged.mu.sum()), abs=1e-8)

    def test_41_code(self, qutrit_solution, qutrit_gauged):
        dyn = logical_rates(build_small_ancilla(qutrit_solution, 4), qutrit_gauged)
        assert abs(dyn.gamma_L) < 1e-8
        assert dyn.signal == pytest.approx(4.0, abs=1e-8)

    def test_m5_hand_value(self, qutrit_solution, qutrit_gauged):
        # counts (3,2): same-site moments (0.8, 1.0), no cross couplings, so
        # the rate is 4.5 - 5 sqrt(0.8)
        dyn = logical_rates(build_small_ancilla(qutrit_solution, 5), qutrit_gauged)
        assert dyn.gamma_L == pytest.approx(4.5 - 5 * np.sqrt(0.8), abs=1e-7)
        assert dyn.signal == pytest.approx(6.0, abs=1e-7)

    def test_gram_matches_dense_all_families(self, qutrit_solution, qutrit_gauged):
        for make in (lambda: build_small_ancilla(qutrit_solution, 5),
                     lambda: build_random_ancilla_free(qutrit_solution, 5, seed=8),
                     lambda: build_random_ancilla_free(qutrit_solution, 6, seed=3)):
            code = make()
            dyn_s = logical_rates(code, qutrit_gauged)
            dense = materialize(code)
            dyn_d = logical_rates(dense, qutrit_gauged)
            B = dense_cross_operator(dense, qutrit_gauged)
            assert dyn_s.trace_norm_B == pytest.approx(trace_norm(B), abs=1e-8)
            assert dyn_s.gamma_L == pytest.approx(dyn_d.gamma_L, abs=1e-8)
            assert dyn_s.signal == pytest.approx(dyn_d.signal, abs=1e-8)

    def test_gram_matches_dense_m6_small_ancilla(self, qutrit_solution, qutrit_gauged):
        # the dense path at m=6 runs on the 7290-dimensional space; compare
        # rates only (the dense-B oracle above covers the ancilla-free case)
        code = build_small_ancilla(qutrit_solution, 6)
        dyn_s = logical_rates(code, qutrit_gauged)
        dyn_d = logical_rates(materialize(code), qutrit_gauged)
        assert dyn_s.gamma_L == pytest.approx(dyn_d.gamma_L, abs=1e-8)
        assert dyn_s.signal == pytest.approx(dyn_d.signal, abs=1e-8)

    def test_generic_model_gram_oracle(self, generic_solution, generic_gauged):
        for seed in (0, 1):
            code = build_random_ancilla_free(generic_solution, 4, seed=seed)
            dyn_s = logical_rates(code, generic_gauged)
            dense = materialize(code)
            B = dense_cross_operator(dense, generic_gauged)
            assert dyn_s.trace_norm_B == pytest.approx(trace_norm(B), abs=1e-8)

    def test_orthogonality_enforced(self, zx_model):
        from qecsense.codes import DenseCode
        sol = solve_hl_coefficient(zx_model)
        g = apply_gauge(zx_model, sol.rho0, sol.rho1)
        k0 = np.zeros(8, dtype=complex)
        k1 = np.zeros(8, dtype=complex)
        k0[0] = 1.0
        k1[7] = np.sqrt(0.96)
        k1[1] = 0.2
        bad = DenseCode(m=3, probe_dim=2, ancilla_dim=1, ket0=k0, ket1=k1)
        with pytest.raises(OrthogonalityViolated):
            logical_rates(bad, g)

    def test_phase_family_term_cap(self, qutrit_solution, qutrit_gauged):
        code = build_random_ancilla_free(qutrit_solution, 6, seed=0)
        with pytest.raises(WSetTooLarge):
            logical_rates(code, qutrit_gauged, term_cap=10)

    def test_cauchy_schwarz_invariant(self, generic_solution, generic_gauged):
        for m in (4, 8):
            dyn = logical_rates(build_small_ancilla(generic_solution, m),
                                generic_gauged)
            bound = np.sqrt(np.trace(dyn.gram_X).real * np.trace(dyn.gram_Y).real)
            assert dyn.trace_norm_B <= bound + 1e-9
            assert dyn.gamma_L >= -1e-8
            for G in (dyn.gram_X, dyn.gram_Y):
                assert np.linalg.eigvalsh((G + dagger(G)) / 2).min() > -1e-9

    def test_gauge_invariance(self, generic_model, generic_solution):
        """Remixing and shifting the jumps leaves the physics unchanged."""
        sol = generic_solution
        g0 = apply_gauge(generic_model, sol.rho0, sol.rho1)
        base = logical_rates(build_small_ancilla(sol, 5), g0)
        th = 0.7
        U = np.array([[np.cos(th), np.sin(th)], [-np.sin(th), np.cos(th)]])
        L1, L2 = generic_model.lindblads
        remixed = NoiseModel(
            d=3, H=generic_model.H,
            lindblads=(U[0, 0] * L1 + U[0, 1] * L2 + 0.2 * np.eye(3),
                       U[1, 0] * L1 + U[1, 1] * L2 - 0.1j * np.eye(3)))
        g1 = apply_gauge(remixed, sol.rho0, sol.rho1)
        redo = logical_rates(build_small_ancilla(sol, 5), g1)
        assert redo.gamma_L == pytest.approx(base.gamma_L, abs=1e-8)
        assert redo.signal == pytest.approx(base.signal, abs=1e-8)

    def test_boundedness_ladder(self, generic_solution, generic_gauged):
        gammas = [logical_rates(build_small_ancilla(generic_solution, m),
                                generic_gauged).gamma_L
                  for m in (4, 8, 16, 32)]
        assert max(gammas) <= 2 * gammas[1] + 1e-12
        assert min(gammas) >= -1e-9

    def test_signal_convergence(self, generic_solution, generic_gauged):
        sol = generic_solution
        H = generic_gauged.H
        C0 = sum(abs(np.vdot(sol.basis[:, i], H @ sol.basis[:, i]))
                 for i in range(sol.basis.shape[1]))
        for m in (4, 8, 16, 32):
            dyn = logical_rates(build_small_ancilla(sol, m), generic_gauged)
            assert abs(dyn.signal / m - 2 * sol.value) <= C0 / m + 1e-9

    def test_sql_code_rates_finite(self, generic_gauged):
        # SQL codes run through the same machinery on a compatible model
        sp = sql_single_probe(3)
        from qecsense.fixtures import generic_hl_model
        mdl = generic_hl_model()
        sol = solve_hl_coefficient(mdl)
        g = apply_gauge(mdl, sol.rho0, sol.rho1)
        for variant, seed in (("small-ancilla", None), ("qubit-ancilla-random", 2)):
            code = build_sql_codes(sp, 4, variant, seed=seed)
            dyn_s = logical_rates(code, g)
            dyn_d = logical_rates(materialize(code), g)
            assert dyn_s.gamma_L == pytest.approx(dyn_d.gamma_L, abs=1e-8)
            assert dyn_s.signal == pytest.approx(dyn_d.signal, abs=1e-8)


class TestPredictedQfi:
    def test_heisenberg_form(self, qutrit_solution, qutrit_gauged):
        # rate zero: n logical qubits of m probes give (2 v m n)^2 t^2 / 4...
        dyn = logical_rates(build_small_ancilla(qutrit_solution, 4), qutrit_gauged)
        for n, t in ((2, 0.5), (3, 1.0)):
            N = n * 4
            assert predicted_qfi(dyn, n, t) == pytest.approx(
                4 * qutrit_solution.value**2 * N**2 * t**2, rel=1e-7)

    def test_resource_table(self, qutrit_solution, qutrit_gauged):
        dyn_aa = logical_rates(build_ancilla_assisted(qutrit_solution), qutrit_gauged)
        dyn_41 = logical_rates(build_small_ancilla(qutrit_solution, 4), qutrit_gauged)
        for NU in (10, 20):
            for t in (0.5, 1.0):
                assert predicted_qfi(dyn_aa, NU // 2, t) == pytest.approx(
                    0.25 * NU**2 * t**2, rel=1e-7)
                assert predicted_qfi(dyn_41, (4 * NU // 5) // 4, t) == pytest.approx(
                    16 / 25 * NU**2 * t**2, rel=1e-7)

    def test_zero_time(self, qutrit_solution, qutrit_gauged):
        dyn = logical_rates(build_ancilla_assisted(qutrit_solution), qutrit_gauged)
        assert predicted_qfi(dyn, 3, 0.0) == 0.0

    def test_decay_with_rate(self, generic_solution, generic_gauged):
        dyn = logical_rates(build_small_ancilla(generic_solution, 8), generic_gauged)
        assert dyn.gamma_L > 0
        f = predicted_qfi(dyn, 2, 1.0)
        assert f == pytest.approx(4 * dyn.signal**2 * np.exp(-4 * dyn.gamma_L),
                                  rel=1e-10)


class TestRecovery:
    def test_achieves_optimum(self, qutrit_solution, qutrit_gauged):
        for m, make in ((1, lambda: build_ancilla_assisted(qutrit_solution)),
                        (4, lambda: materialize(build_small_ancilla(qutrit_solution, 4))),
                        (5, lambda: materialize(build_small_ancilla(qutrit_solution, 5)))):
            dense = make()
            dyn = logical_rates(dense, qutrit_gauged)
            rec = build_optimal_recovery(dense, qutrit_gauged)
            assert recovery_rate(dense, qutrit_gauged, rec) == pytest.approx(
                dyn.gamma_L, abs=1e-8)

    def test_kraus_completeness(self, qutrit_solution, qutrit_gauged):
        dense = build_ancilla_assisted(qutrit_solution)
        rec = build_optimal_recovery(dense, qutrit_gauged)
        ops = rec.kraus()
        total = sum(dagger(K) @ K for K in ops)
        assert np.abs(total - np.eye(dense.dim)).max() < 1e-8

    def test_apply_matches_kraus(self, qutrit_solution, qutrit_gauged, rng):
        dense = build_ancilla_assisted(qutrit_solution)
        rec = build_optimal_recovery(dense, qutrit_gauged)
        ops = rec.kraus()
        sigma = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        sigma = sigma @ dagger(sigma)
        via_kraus = sum(K @ sigma @ dagger(K) for K in ops)
        # the paired-basis application agrees with the explicit Kraus sum
        assert np.abs(rec.apply(sigma) - via_kraus).max() < 1e-8

    def test_majority_vote_equivalence(self, zx_model):
        """On single-flip errors of the repetition code the optimal recovery
        acts like majority vote."""
        sol = solve_hl_coefficient(zx_model)
        g = apply_gauge(zx_model, sol.rho0, sol.rho1)
        dense = materialize(build_small_ancilla(sol, 3))
        rec = build_optimal_recovery(dense, g)
        X = np.array([[0, 1], [1, 0]], dtype=complex)
        for site in range(3):
            for k, ket in ((0, dense.ket0), (1, dense.ket1)):
                err = site_operator(ket, X, site, dense.dims)
                out = rec.apply(np.outer(err, err.conj()))
                want = np.outer(ket, ket.conj())
                assert np.abs(out - want).max() < 1e-8

    def test_trivial_noise(self, qutrit_model, qutrit_solution):
        noiseless = NoiseModel(d=3, H=qutrit_model.H, lindblads=())
        sol = solve_hl_coefficient(noiseless)
        g = apply_gauge(noiseless, sol.rho0, sol.rho1)
        dense = build_ancilla_assisted(sol)
        rec = build_optimal_recovery(dense, g)
        dyn = logical_rates(dense, g)
        assert dyn.gamma_L == pytest.approx(0.0, abs=1e-12)
        assert recovery_rate(dense, g, rec) == pytest.approx(0.0, abs=1e-12)


class TestTraceNormBound:
    def test_ancilla_assisted_exact(self, qutrit_solution, qutrit_gauged):
        code = build_ancilla_assisted(qutrit_solution)
        dyn = logical_rates(code, qutrit_gauged)
        bound, skipped = trace_norm_lower_bound_check(code, qutrit_gauged)
        assert not skipped
        assert bound == pytest.approx(float(qutrit_gauged.mu.sum()), abs=1e-7)
        assert bound <= dyn.trace_norm_B + 1e-8

    def test_trend_toward_moment_sum(self, generic_solution, generic_gauged):
        mu_sum = float(generic_gauged.mu.sum())
        ratios = []
        for m in (6, 10, 14, 18):
            code = build_small_ancilla(generic_solution, m)
            bound, _ = trace_norm_lower_bound_check(code, generic_gauged)
            dyn = logical_rates(code, generic_gauged)
            assert bound <= dyn.trace_norm_B + 1e-8
            ratios.append(bound / m)
        errs = [abs(r - mu_sum) for r in ratios]
        assert errs[-1] < errs[0]
        assert errs[-1] < 0.2 * mu_sum

    def test_random_code_sanity(self, generic_solution, generic_gauged):
        code = build_random_ancilla_free(generic_solution, 8, seed=0)
        bound, _ = trace_norm_lower_bound_check(code, generic_gauged)
        dyn = logical_rates(code, generic_gauged)
        assert bound <= dyn.trace_norm_B + 1e-8
