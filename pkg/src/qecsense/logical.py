"""Effective logical channel under fast error correction.

Given a code and a gauge-fixed model, the logical qubit undergoes a Z rotation
at the signal rate plus dephasing at a rate set by the best recovery channel.
The dephasing rate needs the trace norm of the cross-codeword error operator
B; its singular values are computed from the two rm x rm Gram matrices of the
projected error states, so structured codes never materialize the full space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import DenseCode, StructuredCode, check_L0_perp_L1, site_operator
from .errors import CholeskyFailure, DimensionTooLarge, OrthogonalityViolated, ShapeError, WSetTooLarge
from .linalg import DEFAULT_DIM_CAP, DEFAULT_TOL, dagger, trace_norm
from .noise import GaugedModel

DEFAULT_TERM_CAP = 10**7


@dataclass(frozen=True)
class LogicalDynamics:
    """Signal strength, optimal dephasing rate and the coefficient tables."""

    signal: float
    gamma_L: float
    beta_L: float
    b: np.ndarray                 # (2, r) site-averaged first moments
    a: np.ndarray                 # (2, r, r) same-site second moments minus mu
    eta: np.ndarray | None        # (2, r, r) cross-site second moments
    mu: np.ndarray
    gram_X: np.ndarray
    gram_Y: np.ndarray
    trace_norm_B: float
    m: int
    r: int

    def to_dict(self) -> dict:
        from .noise import _complex_matrix_to_json
        return {
            "signal": self.signal,
            "gamma_L": self.gamma_L,
            "beta_L": self.beta_L,
            "trace_norm_B": self.trace_norm_B,
            "m": self.m,
            "r": self.r,
            "mu": [float(x) for x in self.mu],
            "b": _complex_matrix_to_json(self.b),
            "a": [_complex_matrix_to_json(A) for A in self.a],
            "eta": None if self.eta is None else
                   [_complex_matrix_to_json(E) for E in self.eta],
            "gram_X": _complex_matrix_to_json(self.gram_X),
            "gram_Y": _complex_matrix_to_json(self.gram_Y),
        }


def _sqrt_factor(G: np.ndarray, tol: float) -> np.ndarray:
    """R with R^dag R = G.  Cholesky first; indefinite inputs within -tol are
    clipped via the eigenbasis, beyond that is an error."""
    Gh = (G + dagger(G)) / 2
    try:
        return dagger(np.linalg.cholesky(Gh))
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh(Gh)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    if w.min(initial=0.0) < -tol * scale:
        raise CholeskyFailure(f"Gram matrix indefinite: min eigenvalue {w.min():.3e}")
    w = np.maximum(w, 0.0)
    return (np.sqrt(w)[:, None]) * dagger(V)


def tracenorm_from_grams(gram_X: np.ndarray, gram_Y: np.ndarray,
                         tol: float = DEFAULT_TOL) -> float:
    """Trace norm of X Y^dag given only the Gram matrices of the columns."""
    RX = _sqrt_factor(gram_X, tol)
    RY = _sqrt_factor(gram_Y, tol)
    return trace_norm(RX @ dagger(RY))


def _structured_grams(code: StructuredCode, gauged: GaugedModel,
                      term_cap: int):
    """Raw second-moment Gram matrices over (site, jump) column indices,
    plus first/second moment tables."""
    m, r = code.m, gauged.r
    Ls = gauged.lindblads
    if code.has_phases:
        est = (m * (m - 1) // 2) * (code.W_size(0) + code.W_size(1))
        if est > term_cap:
            raise WSetTooLarge(
                f"phase-family evaluation needs ~{est:.2e} terms "
                f"(cap {term_cap}); reduce m or raise the cap")

    b = np.zeros((2, r), dtype=complex)
    n_same = np.zeros((2, r, r), dtype=complex)
    for k in (0, 1):
        rdm = code.one_local_rdm(k)
        for i, Li in enumerate(Ls):
            b[k, i] = np.trace(rdm @ Li)
            for j, Lj in enumerate(Ls):
                n_same[k, i, j] = np.trace(rdm @ dagger(Li) @ Lj)

    def raw_gram(k):
        G = np.zeros((m * r, m * r), dtype=complex)
        if code.is_site_symmetric:
            eta = np.array([[code.two_local_element(k, dagger(Ls[i]), Ls[j], 0, 1)
                             for j in range(r)] for i in range(r)])
            for la in range(m):
                for lb in range(m):
                    blk = n_same[k] if la == lb else eta
                    G[la * r:(la + 1) * r, lb * r:(lb + 1) * r] = blk
            eta_avg = eta
        else:
            acc = np.zeros((r, r), dtype=complex)
            for la in range(m):
                G[la * r:(la + 1) * r, la * r:(la + 1) * r] = n_same[k]
            for la in range(m):
                for lb in range(la + 1, m):
                    eta = np.array(
                        [[code.two_local_element(k, dagger(Ls[i]), Ls[j], la, lb)
                          for j in range(r)] for i in range(r)])
                    G[la * r:(la + 1) * r, lb * r:(lb + 1) * r] = eta
                    # <k| L_i^dag(lb) L_j(la) |k> swaps the site roles
                    eta_ba = np.array(
                        [[code.two_local_element(k, Ls[j], dagger(Ls[i]), la, lb)
                          for j in range(r)] for i in range(r)])
                    G[lb * r:(lb + 1) * r, la * r:(la + 1) * r] = eta_ba
                    acc += eta
            eta_avg = acc / (m * (m - 1) / 2) if m > 1 else None
        return G, eta_avg

    G0, eta0 = raw_gram(0)
    G1, eta1 = raw_gram(1)
    eta = None
    if eta0 is not None and eta1 is not None:
        eta = np.stack([eta0, eta1])
    return b, n_same, eta, G0, G1


def _dense_moments(code: DenseCode, gauged: GaugedModel):
    """Per-(site, jump) raw error vectors and first moments."""
    dims = code.dims
    m, r = code.m, gauged.r
    cols0 = np.empty((code.dim, m * r), dtype=complex)
    cols1 = np.empty((code.dim, m * r), dtype=complex)
    b0 = np.zeros(m * r, dtype=complex)
    b1 = np.zeros(m * r, dtype=complex)
    for site in range(m):
        for i, L in enumerate(gauged.lindblads):
            p = site * r + i
            cols0[:, p] = site_operator(code.ket0, L, site, dims)
            cols1[:, p] = site_operator(code.ket1, L, site, dims)
            b0[p] = np.vdot(code.ket0, cols0[:, p])
            b1[p] = np.vdot(code.ket1, cols1[:, p])
    return cols0, cols1, b0, b1


def logical_rates(code, gauged: GaugedModel, tol: float = DEFAULT_TOL,
                  term_cap: int = DEFAULT_TERM_CAP) -> LogicalDynamics:
    """Signal coefficient and minimal logical dephasing rate for a code on a
    gauge-fixed model.

    The rate is the same-site moment sum minus the trace norm of the
    cross-codeword operator; the latter comes from the column Gram matrices.
    Requires orthogonal error spaces.
    """
    ok, overlap = check_L0_perp_L1(code, gauged.model)
    if not ok:
        raise OrthogonalityViolated(
            f"codeword error spaces overlap by {overlap:.3e}")
    m, r = code.m, gauged.r
    H = gauged.H

    if isinstance(code, StructuredCode):
        b, n_same, eta, G0raw, G1raw = _structured_grams(code, gauged, term_cap)
        bvec0 = np.tile(b[0], m)
        bvec1 = np.tile(b[1], m)
        gram_X = G0raw - np.outer(bvec0.conj(), bvec0)
        gram_Y = G1raw - np.outer(bvec1.conj(), bvec1)
        term1 = -m * float(np.sum(np.real(b[0] * np.conj(b[1]))))
        term2 = 0.5 * m * float(np.sum(np.real(np.diagonal(n_same[0]))
                                       + np.real(np.diagonal(n_same[1]))))
        beta_L = -m * float(np.sum(np.imag(b[0] * np.conj(b[1]))))
        rdm0, rdm1 = code.one_local_rdm(0), code.one_local_rdm(1)
        signal = m * float(np.real(np.trace((rdm0 - rdm1) @ H)))
        b_table = b
        a = n_same - np.stack([np.diag(gauged.mu.astype(complex))] * 2)
        eta_table = eta
    elif isinstance(code, DenseCode):
        cols0, cols1, b0, b1 = _dense_moments(code, gauged)
        gram_X = dagger(cols0) @ cols0 - np.outer(b0.conj(), b0)
        gram_Y = dagger(cols1) @ cols1 - np.outer(b1.conj(), b1)
        term1 = -float(np.sum(np.real(b0 * np.conj(b1))))
        term2 = 0.5 * float(np.sum(np.linalg.norm(cols0, axis=0) ** 2)
                            + np.sum(np.linalg.norm(cols1, axis=0) ** 2))
        beta_L = -float(np.sum(np.imag(b0 * np.conj(b1))))
        dims = code.dims
        signal = 0.0
        for site in range(m):
            signal += float(np.real(np.vdot(code.ket0, site_operator(code.ket0, H, site, dims))
                                    - np.vdot(code.ket1, site_operator(code.ket1, H, site, dims))))
        # site-averaged tables
        b_table = np.stack([b0.reshape(m, r).mean(axis=0),
                            b1.reshape(m, r).mean(axis=0)])
        raw0 = dagger(cols0) @ cols0
        raw1 = dagger(cols1) @ cols1
        a = np.zeros((2, r, r), dtype=complex)
        eta_acc = np.zeros((2, r, r), dtype=complex)
        for site in range(m):
            sl = slice(site * r, (site + 1) * r)
            a[0] += raw0[sl, sl]
            a[1] += raw1[sl, sl]
        a = a / m - np.stack([np.diag(gauged.mu.astype(complex))] * 2)
        eta_table = None
        if m > 1:
            for la in range(m):
                for lb in range(m):
                    if la == lb:
                        continue
                    eta_acc[0] += raw0[la * r:(la + 1) * r, lb * r:(lb + 1) * r]
                    eta_acc[1] += raw1[la * r:(la + 1) * r, lb * r:(lb + 1) * r]
            eta_table = eta_acc / (m * (m - 1))
    else:
        raise ShapeError(f"unsupported code type {type(code).__name__}")

    tnB = tracenorm_from_grams(gram_X, gram_Y, tol)
    gamma_L = term1 + term2 - tnB

    return LogicalDynamics(signal=signal, gamma_L=float(gamma_L),
                           beta_L=float(beta_L), b=b_table, a=a, eta=eta_table,
                           mu=gauged.mu.copy(), gram_X=gram_X, gram_Y=gram_Y,
                           trace_norm_B=float(tnB), m=m, r=r)


def predicted_qfi(dyn: LogicalDynamics, n: int, t: float) -> float:
    """Fisher information of n logical qubits prepared in a logical GHZ state
    after probing time t."""
    if n < 1:
        raise ShapeError(f"need n >= 1 logical qubits, got {n}")
    if t < 0:
        raise ShapeError(f"need t >= 0, got {t}")
    return float(n**2 * dyn.signal**2 * t**2 * np.exp(-2.0 * n * dyn.gamma_L * t))


# ---------------------------------------------------------------------------
#  explicit optimal recovery (dense codes)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecoveryChannel:
    """Recovery of the paired-basis form: each Kraus operator maps one
    R-vector onto codeword 0 and the paired S-vector onto codeword 1.

    ``R_cols``/``S_cols`` hold the explicit vectors (codewords first); the
    rest of the space is implicitly assigned to the R side, so the channel is
    trace preserving on the full space.
    """

    ket0: np.ndarray
    ket1: np.ndarray
    R_cols: np.ndarray
    S_cols: np.ndarray

    @property
    def dim(self) -> int:
        return self.ket0.size

    def apply(self, sigma: np.ndarray) -> np.ndarray:
        """The recovery map itself (defined on the orthogonal complement of
        the code space; exact on any operator)."""
        S = self.S_cols
        R = self.R_cols
        a11 = complex(np.einsum("ip,ij,jp->", S.conj(), sigma, S))
        a00 = complex(np.trace(sigma)) - a11
        K = min(R.shape[1], S.shape[1])
        a01 = complex(np.einsum("ip,ij,jp->", R[:, :K].conj(), sigma, S[:, :K]))
        a10 = complex(np.einsum("ip,ij,jp->", S[:, :K].conj(), sigma, R[:, :K]))
        out = (a00 * np.outer(self.ket0, self.ket0.conj())
               + a11 * np.outer(self.ket1, self.ket1.conj())
               + a01 * np.outer(self.ket0, self.ket1.conj())
               + a10 * np.outer(self.ket1, self.ket0.conj()))
        return out

    def qec_map(self, rho: np.ndarray) -> np.ndarray:
        """Project onto the code space and recover the complement."""
        C = np.column_stack([self.ket0, self.ket1])
        block = dagger(C) @ rho @ C
        PrP = C @ block @ dagger(C)
        Pr = C @ (dagger(C) @ rho)
        rP = (rho @ C) @ dagger(C)
        sigma_perp = rho - Pr - rP + PrP
        return PrP + self.apply(sigma_perp)

    def kraus(self, cap: int = DEFAULT_DIM_CAP) -> list[np.ndarray]:
        """Explicit Kraus operators, completing the implicit R side."""
        D = self.dim
        if D > cap:
            raise DimensionTooLarge(f"dense Kraus list at dimension {D}")
        span = np.hstack([self.R_cols, self.S_cols])
        # orthonormal completion -> R side
        Q, _ = np.linalg.qr(np.hstack([span, np.eye(D, dtype=complex)]))
        extra = []
        for j in range(Q.shape[1]):
            v = Q[:, j]
            proj = span @ (dagger(span) @ v)
            v = v - proj
            for e in extra:
                v = v - e * np.vdot(e, v)
            nrm = np.linalg.norm(v)
            if nrm > 1e-10:
                extra.append(v / nrm)
        R_full = np.hstack([self.R_cols] + ([np.column_stack(extra)] if extra else []))
        S = self.S_cols
        ops = []
        for p in range(max(R_full.shape[1], S.shape[1])):
            K = np.zeros((D, D), dtype=complex)
            if p < R_full.shape[1]:
                K += np.outer(self.ket0, R_full[:, p].conj())
            if p < S.shape[1]:
                K += np.outer(self.ket1, S[:, p].conj())
            ops.append(K)
        return ops


def _orth_cols(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column space."""
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    keep = s > tol * max(1.0, s[0] if s.size else 1.0)
    return U[:, keep]


def build_optimal_recovery(code: DenseCode, gauged: GaugedModel,
                           tol: float = DEFAULT_TOL,
                           cap: int = DEFAULT_DIM_CAP) -> RecoveryChannel:
    """Recovery channel achieving the minimal dephasing rate: the R/S bases
    align the polar decomposition of the cross-codeword operator B."""
    if code.dim > cap:
        raise DimensionTooLarge(f"code dimension {code.dim} exceeds cap {cap}")
    ok, overlap = check_L0_perp_L1(code, gauged.model)
    if not ok:
        raise OrthogonalityViolated(f"error spaces overlap by {overlap:.3e}")
    cols0, cols1, b0, b1 = _dense_moments(code, gauged)
    X = cols0 - np.outer(code.ket0, b0)
    Y = cols1 - np.outer(code.ket1, b1)
    OX = _orth_cols(X)
    OY = _orth_cols(Y)
    CX = dagger(OX) @ X
    CY = dagger(OY) @ Y
    M = CX @ dagger(CY)
    u, s, vh = np.linalg.svd(M) if M.size else (np.zeros((OX.shape[1],) * 2),
                                                np.zeros(0), np.zeros((OY.shape[1],) * 2))
    U = OX @ u
    V = OY @ dagger(vh)
    R_cols = np.column_stack([code.ket0] + [U[:, j] for j in range(U.shape[1])])
    S_cols = np.column_stack([code.ket1] + [V[:, j] for j in range(V.shape[1])])
    return RecoveryChannel(ket0=code.ket0, ket1=code.ket1,
                           R_cols=R_cols, S_cols=S_cols)


def recovery_rate(code: DenseCode, gauged: GaugedModel,
                  recovery: RecoveryChannel) -> float:
    """Dephasing rate achieved by a given recovery channel (for checking the
    optimum)."""
    cols0, cols1, b0, b1 = _dense_moments(code, gauged)
    X = cols0 - np.outer(code.ket0, b0)
    Y = cols1 - np.outer(code.ket1, b1)
    x = complex(np.sum(b0 * np.conj(b1)))
    x += -0.5 * (np.sum(np.linalg.norm(cols0, axis=0) ** 2)
                 + np.sum(np.linalg.norm(cols1, axis=0) ** 2))
    K = min(recovery.R_cols.shape[1], recovery.S_cols.shape[1])
    RK = recovery.R_cols[:, :K]
    SK = recovery.S_cols[:, :K]
    # sum_p <R_p| B |S_p> with B = sum_c x_c y_c^dag
    x += complex(np.einsum("ip,ic,jc,jp->", RK.conj(), X, Y.conj(), SK))
    return -float(np.real(x))


# ---------------------------------------------------------------------------
#  trace-norm lower-bound witness
# ---------------------------------------------------------------------------

def trace_norm_lower_bound_check(code, gauged: GaugedModel,
                                 tol: float = DEFAULT_TOL,
                                 term_cap: int = DEFAULT_TERM_CAP
                                 ) -> tuple[float, list[int]]:
    """Lower bound on the trace norm of B from paired orthonormal witnesses
    built by column-ordered Gram-Schmidt on the projected error states.

    Returns (bound, skipped column indices); the bound never exceeds the true
    trace norm (up to roundoff).
    """
    if isinstance(code, StructuredCode):
        b, n_same, eta, G0raw, G1raw = _structured_grams(code, gauged, term_cap)
        m = code.m
        bvec0 = np.tile(b[0], m)
        bvec1 = np.tile(b[1], m)
        GX = G0raw - np.outer(bvec0.conj(), bvec0)
        GY = G1raw - np.outer(bvec1.conj(), bvec1)
    else:
        cols0, cols1, b0, b1 = _dense_moments(code, gauged)
        GX = dagger(cols0) @ cols0 - np.outer(b0.conj(), b0)
        GY = dagger(cols1) @ cols1 - np.outer(b1.conj(), b1)

    def gs_coeffs(G):
        n = G.shape[0]
        coeffs: list[np.ndarray | None] = []
        kept: list[np.ndarray] = []
        scale = max(1.0, float(np.abs(np.diagonal(G)).max(initial=0.0)))
        for p in range(n):
            e = np.zeros(n, dtype=complex)
            e[p] = 1.0
            for a in kept:
                e = e - a * (np.conj(a) @ (G @ e))
            nrm2 = float(np.real(np.conj(e) @ (G @ e)))
            if nrm2 <= tol * scale:
                coeffs.append(None)
                continue
            e = e / np.sqrt(nrm2)
            kept.append(e)
            coeffs.append(e)
        return coeffs

    ex = gs_coeffs(GX)
    fy = gs_coeffs(GY)
    skipped = [p for p in range(len(ex)) if ex[p] is None or fy[p] is None]
    total = 0.0 + 0.0j
    GXY = GX @ GY
    for p in range(len(ex)):
        if ex[p] is None or fy[p] is None:
            continue
        total += np.conj(ex[p]) @ (GXY @ fy[p])
    return float(abs(total)), skipped
