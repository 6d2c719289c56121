"""Convex solvers for the two figure-of-merit coefficients.

``solve_hl_coefficient`` minimizes the operator-norm distance between the
Hamiltonian and the jump span and certifies the value with a dual pair of
extremal states.  ``solve_sql_coefficient`` computes the rate coefficient that
caps the Fisher information when the Hamiltonian lies inside the span.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConstraintInfeasible, HnlsViolated, OptimizerStalled
from .linalg import DEFAULT_TOL, dagger, eig_hermitian, hs_inner, hs_norm, trace_norm
from .noise import LindbladSpan, NoiseModel, _herm_to_real, build_span, hnls_holds


@dataclass(frozen=True)
class HnlsSolution:
    """Argmin of the span distance plus its dual certificate."""

    S_star: np.ndarray
    value: float
    rho0: np.ndarray
    rho1: np.ndarray
    lambdas: np.ndarray      # positive weights, block 0 then block 1
    d0: int                  # number of block-0 weights
    basis: np.ndarray        # d x K columns diagonalizing rho0 (+) rho1
    gap: float
    iterations: int

    def to_dict(self) -> dict:
        from .noise import _complex_matrix_to_json
        return {
            "value": self.value,
            "gap": self.gap,
            "iterations": self.iterations,
            "d0": self.d0,
            "lambdas": [float(x) for x in self.lambdas],
            "S_star": _complex_matrix_to_json(self.S_star),
            "rho0": _complex_matrix_to_json(self.rho0),
            "rho1": _complex_matrix_to_json(self.rho1),
            "basis": _complex_matrix_to_json(self.basis),
        }


def _span_matrix(span: LindbladSpan, coeffs: np.ndarray) -> np.ndarray:
    S = np.zeros((span.d, span.d), dtype=complex)
    for c, B in zip(coeffs, span.basis):
        S = S + c * B
    return S


def _dual_bound(span: LindbladSpan, H: np.ndarray, delta: np.ndarray) -> float:
    """Valid lower bound on the span distance from any traceless Hermitian
    witness: project out the span, then normalize by the trace norm."""
    perp = delta - span.project(delta)
    t1 = trace_norm(perp)
    if t1 < 1e-14:
        return 0.0
    return abs(float(np.real(np.trace(perp @ H)))) / t1


def _extremal_blocks(A: np.ndarray, value: float, merge_tol: float):
    w, V = eig_hermitian(A)
    top = w >= w[-1] - merge_tol
    bot = w <= w[0] + merge_tol
    return V[:, top], V[:, bot]


def _herm_params(n: int) -> int:
    return n * n


def _herm_from_params(x: np.ndarray, n: int) -> np.ndarray:
    """Real parameter vector (length n^2) -> Hermitian n x n."""
    M = np.zeros((n, n), dtype=complex)
    M[np.diag_indices(n)] = x[:n]
    iu = np.triu_indices(n, k=1)
    k = iu[0].size
    M[iu] = x[n:n + k] + 1j * x[n + k:n + 2 * k]
    M[(iu[1], iu[0])] = M[iu].conj()
    return M


def _solve_dual_pair(span: LindbladSpan, Vp: np.ndarray, Vm: np.ndarray,
                     tol: float):
    """Least-squares extremal pair supported on the given eigenblocks,
    orthogonal to the span, followed by a positivity repair."""
    p, q = Vp.shape[1], Vm.shape[1]
    n_var = _herm_params(p) + _herm_params(q)

    def unpack(x):
        M0 = _herm_from_params(x[:_herm_params(p)], p)
        M1 = _herm_from_params(x[_herm_params(p):], q)
        return M0, M1

    rows, rhs = [], []
    for B in span.basis:
        Bp = dagger(Vp) @ B @ Vp
        Bm = dagger(Vm) @ B @ Vm
        row = np.zeros(n_var)
        for k in range(n_var):
            e = np.zeros(n_var)
            e[k] = 1.0
            M0, M1 = unpack(e)
            row[k] = float(np.real(np.trace(M0 @ Bp) - np.trace(M1 @ Bm)))
        rows.append(row)
        rhs.append(0.0)
    # unit-trace rows
    for which, n in ((0, p), (1, q)):
        row = np.zeros(n_var)
        off = 0 if which == 0 else _herm_params(p)
        row[off:off + n] = 1.0
        rows.append(row)
        rhs.append(1.0)

    A = np.array(rows)
    b = np.array(rhs)
    x, *_ = np.linalg.lstsq(A, b, rcond=None)

    def clip_psd(M):
        w, V = np.linalg.eigh(M)
        w = np.maximum(w, 0.0)
        M = (V * w) @ dagger(V)
        tr = float(np.real(np.trace(M)))
        return M / tr if tr > 1e-12 else np.eye(M.shape[0]) / M.shape[0]

    M0, M1 = unpack(x)
    # a few alternations between the affine solution and the PSD cone
    for _ in range(20):
        M0c, M1c = clip_psd(M0), clip_psd(M1)
        shift = max(hs_norm(M0c - M0), hs_norm(M1c - M1))
        M0, M1 = M0c, M1c
        if shift <= tol:
            break
        xc = np.concatenate([_herm_real_params(M0), _herm_real_params(M1)])
        corr, *_ = np.linalg.lstsq(A, b - A @ xc, rcond=None)
        M0, M1 = unpack(xc + corr)
    M0, M1 = clip_psd(M0), clip_psd(M1)
    rho0 = Vp @ M0 @ dagger(Vp)
    rho1 = Vm @ M1 @ dagger(Vm)
    return rho0, rho1


def _herm_real_params(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    iu = np.triu_indices(n, k=1)
    return np.concatenate([np.real(np.diag(M)), np.real(M[iu]), np.imag(M[iu])])


def _block_spectrum(rho: np.ndarray, tie_breakers: list[np.ndarray],
                    weight_tol: float = 1e-6, drop_tol: float = 1e-12):
    """Positive eigenvalues of a density matrix, descending, with eigenvectors.

    Within each (numerically) degenerate weight group the basis is fixed by
    successively diagonalizing the restrictions of the tie-breaker operators.
    """
    lam, U = np.linalg.eigh(rho)
    keep = lam > drop_tol
    order = np.argsort(lam[keep])[::-1]
    lam, U = lam[keep][order], U[:, keep][:, order]

    def refine(cols: np.ndarray, ops: list[np.ndarray]) -> np.ndarray:
        if cols.shape[1] <= 1 or not ops:
            return cols
        M = dagger(cols) @ ops[0] @ cols
        w, V = np.linalg.eigh((M + dagger(M)) / 2)
        w, V = w[::-1], V[:, ::-1]
        cols = cols @ V
        # recurse into still-degenerate subgroups
        out = []
        start = 0
        for i in range(1, w.size + 1):
            if i == w.size or abs(w[i] - w[start]) > weight_tol * max(1.0, abs(w[start])):
                out.append(refine(cols[:, start:i], ops[1:]))
                start = i
        return np.hstack(out)

    groups = []
    start = 0
    for i in range(1, lam.size + 1):
        if i == lam.size or abs(lam[i] - lam[start]) > weight_tol * max(1.0, lam[start]):
            groups.append(refine(U[:, start:i], tie_breakers))
            start = i
    U = np.hstack(groups) if groups else U
    # fix column phases: largest-magnitude entry real and positive
    for j in range(U.shape[1]):
        k = int(np.argmax(np.abs(U[:, j])))
        z = U[k, j]
        if abs(z) > 0:
            U[:, j] *= np.conj(z) / abs(z)
    return lam, U


def solve_hl_coefficient(model: NoiseModel, span: LindbladSpan | None = None,
                         tol: float = DEFAULT_TOL, max_iter: int = 10**5,
                         ) -> HnlsSolution:
    """Minimize the operator-norm distance of H to the jump span and extract
    the extremal state pair certifying it.

    Projected subgradient with Polyak steps (target refreshed from the best
    dual witness so far), then a derivative-free polish; raises
    OptimizerStalled if the certified primal-dual gap stays above 100*tol.
    """
    if span is None:
        span = build_span(model)
    holds, _ = hnls_holds(model, span)
    if not holds:
        raise HnlsViolated("Hamiltonian lies inside the jump span")

    H = model.H
    c = np.array([float(np.real(hs_inner(B, H))) for B in span.basis])

    def primal(cv):
        A = H - _span_matrix(span, cv)
        w, V = np.linalg.eigh((A + dagger(A)) / 2)
        return w, V

    def fval(cv):
        w, _ = primal(cv)
        return max(w[-1], -w[0])

    def subgrad(w, V):
        # steepest extremal eigenvalue of H - S(c)
        if w[-1] >= -w[0]:
            v, sgn = V[:, -1], 1.0
        else:
            v, sgn = V[:, 0], -1.0
        return np.array([-sgn * float(np.real(np.conj(v) @ (B @ v))) for B in span.basis])

    scale = max(1.0, hs_norm(H))
    stop_gap = 100 * tol * scale
    fine_gap = 0.2 * tol * scale
    merge = 10 * max(tol * scale, tol)

    def extract_pair(cv, f, gap_hint):
        """Extremal-block pair at an adaptive degeneracy-merge tolerance;
        returns the candidate with the best certified dual bound."""
        A = H - _span_matrix(span, cv)
        Ah = (A + dagger(A)) / 2
        best = None
        for mtol in sorted({merge, 10 * gap_hint + merge, 100 * gap_hint + merge,
                            1e-4 * max(1.0, f)}):
            Vp, Vm = _extremal_blocks(Ah, f, mtol)
            r0, r1 = _solve_dual_pair(span, Vp, Vm, tol)
            bound = _dual_bound(span, H, r0 - r1)
            if best is None or bound > best[0]:
                best = (bound, r0, r1)
        return best

    best_c = c.copy()
    w, V = primal(c)
    best_f = max(w[-1], -w[0])
    best_dual = extract_pair(best_c, best_f, best_f)[0]
    iters = 0

    def polyak_loop(c, best_f, best_c, best_dual, budget, cert_every):
        nonlocal iters
        for it in range(budget):
            iters += 1
            if best_f - best_dual <= fine_gap:
                break
            w, V = primal(c)
            f = max(w[-1], -w[0])
            if f < best_f:
                best_f, best_c = f, c.copy()
            # cheap dual witness from the current extremal eigenvectors
            vp, vm = V[:, -1], V[:, 0]
            delta = np.outer(vp, vp.conj()) - np.outer(vm, vm.conj())
            best_dual = max(best_dual, _dual_bound(span, H, delta))
            if (it + 1) % cert_every == 0:
                best_dual = max(best_dual,
                                extract_pair(best_c, best_f, best_f - best_dual)[0])
            g = subgrad(w, V)
            gn2 = float(g @ g)
            if gn2 < 1e-30:
                break
            step = (f - best_dual + 1e-4 * scale / (it + 1) ** 2) / gn2
            c = c - step * g
        return c, best_f, best_c, best_dual

    budget = min(max_iter, 5000)
    c, best_f, best_c, best_dual = polyak_loop(c, best_f, best_c, best_dual, budget, 25)

    # derivative-free polish plus a zoomed subgradient pass
    for _ in range(2):
        if best_f - best_dual <= fine_gap:
            break
        res = minimize(fval, best_c, method="Nelder-Mead",
                       options={"xatol": 1e-13, "fatol": 1e-14,
                                "maxiter": 20000, "maxfev": 20000})
        if res.fun <= best_f:
            best_f, best_c = float(res.fun), res.x
        best_dual = max(best_dual, extract_pair(best_c, best_f, best_f - best_dual)[0])
        c, best_f, best_c, best_dual = polyak_loop(
            best_c.copy(), best_f, best_c, best_dual, budget, 10)

    value = best_f
    S_star = _span_matrix(span, best_c)
    A = H - S_star
    gap_hint = max(value - best_dual, tol)
    bound, rho0, rho1 = extract_pair(best_c, value, gap_hint)
    best_dual = max(best_dual, bound)
    gap = value - best_dual
    if gap > stop_gap:
        raise OptimizerStalled(
            f"primal-dual gap {gap:.3e} above {stop_gap:.3e} after {iters} iterations")

    # spectral data: block-0 weights first, descending within each block;
    # degenerate weight groups are re-diagonalized against H and the span
    # generators so the basis is deterministic and matches the natural one
    tie_breakers = [H] + [B for B in span.basis]
    lam0, U0 = _block_spectrum(rho0, tie_breakers)
    lam1, U1 = _block_spectrum(rho1, tie_breakers)
    lambdas = np.concatenate([lam0 / lam0.sum(), lam1 / lam1.sum()])
    basis = np.hstack([U0, U1])

    return HnlsSolution(S_star=S_star, value=float(value), rho0=rho0, rho1=rho1,
                        lambdas=lambdas, d0=int(lam0.size), basis=basis,
                        gap=float(gap), iterations=iters)


# ---------------------------------------------------------------------------
#  SQL coefficient
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SqlCoefficient:
    """Minimized rate coefficient with its optimizers and constraint residual."""

    alpha: float
    h: np.ndarray            # complex r-vector
    hmat: np.ndarray         # Hermitian r x r
    residual: float

    def to_dict(self) -> dict:
        from .noise import _complex_matrix_to_json
        return {
            "alpha": self.alpha,
            "residual": self.residual,
            "h": [[float(z.real), float(z.imag)] for z in self.h],
            "hmat": _complex_matrix_to_json(self.hmat),
        }


def sql_objective(model: NoiseModel, h: np.ndarray, hmat: np.ndarray) -> float:
    """Operator norm of sum_i A_i^dag A_i with A_i = h_i 1 + sum_j hmat_ij L_j."""
    d = model.d
    T = np.zeros((d, d), dtype=complex)
    for i in range(model.r):
        A = h[i] * np.eye(d, dtype=complex)
        for j, L in enumerate(model.lindblads):
            A = A + hmat[i, j] * L
        T = T + dagger(A) @ A
    return float(np.linalg.eigvalsh((T + dagger(T)) / 2)[-1])


def sql_constraint_residual(model: NoiseModel, h: np.ndarray, hmat: np.ndarray) -> float:
    """How far H - sum_j (h_j* L_j + h_j L_j^dag) - sum_ij hmat_ij L_i^dag L_j
    is from a multiple of the identity (HS distance)."""
    d = model.d
    R = model.H.astype(complex).copy()
    for j, L in enumerate(model.lindblads):
        R = R - np.conj(h[j]) * L - h[j] * dagger(L)
    for i, Li in enumerate(model.lindblads):
        for j, Lj in enumerate(model.lindblads):
            R = R - hmat[i, j] * (dagger(Li) @ Lj)
    R = R - (np.trace(R) / d) * np.eye(d)
    return hs_norm(R)


def _sql_unpack(x: np.ndarray, r: int):
    h = x[:r] + 1j * x[r:2 * r]
    hmat = _herm_from_params(x[2 * r:2 * r + r * r], r)
    return h, hmat


def solve_sql_coefficient(model: NoiseModel, span: LindbladSpan | None = None,
                          tol: float = DEFAULT_TOL, n_starts: int = 5,
                          seed: int = 0) -> SqlCoefficient:
    """Minimize the rate coefficient over the affine constraint set.

    The constraint is solved exactly (particular solution + nullspace); the
    convex objective is then minimized over the nullspace coordinates by a
    multistart subgradient descent with a derivative-free polish.
    """
    if span is None:
        span = build_span(model)
    holds, _ = hnls_holds(model, span)
    if holds:
        raise HnlsViolated("Hamiltonian escapes the jump span; no SQL coefficient")

    r, d = model.r, model.d
    n_var = 2 * r + r * r + 1      # Re h, Im h, hmat params, identity multiple

    def constraint_matrix_column(k):
        e = np.zeros(n_var)
        e[k] = 1.0
        h, hmat = _sql_unpack(e, r)
        s = e[-1]
        R = np.zeros((d, d), dtype=complex)
        for j, L in enumerate(model.lindblads):
            R = R + np.conj(h[j]) * L + h[j] * dagger(L)
        for i, Li in enumerate(model.lindblads):
            for j, Lj in enumerate(model.lindblads):
                R = R + hmat[i, j] * (dagger(Li) @ Lj)
        R = R + s * np.eye(d)
        return _herm_to_real(R)

    A = np.column_stack([constraint_matrix_column(k) for k in range(n_var)])
    b = _herm_to_real(model.H)
    x0, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.linalg.norm(A @ x0 - b))
    if resid > 1e3 * tol * max(1.0, hs_norm(model.H)):
        raise ConstraintInfeasible(
            f"decomposition of H over the jump algebra failed (residual {resid:.3e})")

    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > max(s[0], 1.0) * 1e-12)) if s.size else 0
    N = Vt[rank:].T                      # nullspace basis, may be empty

    def objective_z(z):
        x = x0 + (N @ z if N.size else 0.0)
        h, hmat = _sql_unpack(x, r)
        return sql_objective(model, h, hmat)

    def subgrad_z(z):
        x = x0 + (N @ z if N.size else 0.0)
        h, hmat = _sql_unpack(x, r)
        ops = []
        for i in range(r):
            Ai = h[i] * np.eye(d, dtype=complex)
            for j, L in enumerate(model.lindblads):
                Ai = Ai + hmat[i, j] * L
            ops.append(Ai)
        T = sum(dagger(Ai) @ Ai for Ai in ops)
        w, V = np.linalg.eigh((T + dagger(T)) / 2)
        v = V[:, -1]
        g = np.zeros(N.shape[1])
        for k in range(N.shape[1]):
            hk, hmk = _sql_unpack(N[:, k], r)
            val = 0.0
            for i in range(r):
                dAi = hk[i] * np.eye(d, dtype=complex)
                for j, L in enumerate(model.lindblads):
                    dAi = dAi + hmk[i, j] * L
                val += 2.0 * float(np.real(np.conj(ops[i] @ v) @ (dAi @ v)))
            g[k] = val
        return g

    rng = np.random.default_rng(seed)
    best_z = np.zeros(N.shape[1]) if N.size else np.zeros(0)
    best_val = objective_z(best_z)
    if N.size:
        starts = [np.zeros(N.shape[1])] + [rng.normal(size=N.shape[1]) for _ in range(n_starts - 1)]
        for z in starts:
            val = objective_z(z)
            zb = z.copy()
            for it in range(400):
                g = subgrad_z(z)
                gn = float(g @ g)
                if gn < 1e-24:
                    break
                z = z - (0.5 / (it + 1)) * g / np.sqrt(gn)
                v = objective_z(z)
                if v < val:
                    val, zb = v, z.copy()
            res = minimize(objective_z, zb, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-13,
                                    "maxiter": 20000, "maxfev": 20000})
            if res.fun < best_val:
                best_val, best_z = float(res.fun), res.x

    x = x0 + (N @ best_z if N.size else 0.0)
    h, hmat = _sql_unpack(x, r)
    return SqlCoefficient(alpha=float(best_val), h=h, hmat=hmat,
                          residual=sql_constraint_residual(model, h, hmat))
