"""Brute-force dynamics oracles: fixed-step RK4 integration of the master
equation, error-correction-interleaved evolution, and Fisher information from
the spectral form of the symmetric logarithmic derivative.

Multi-probe generators are assembled as sparse operators so that the
interleaved evolution stays affordable at a few hundred to a couple thousand
dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import IllConditioned, PositivityLost, ShapeError
from .linalg import assert_hermitian, dagger
from .logical import RecoveryChannel
from .noise import NoiseModel

POSITIVITY_TOL = 1e-7
SLD_EIG_TOL = 1e-10
OMEGA_STEP = 1e-5


@dataclass(frozen=True)
class EvolutionSpec:
    """Full-space generator data for one integration run.

    ``hamiltonian`` is the signal part only; the integrator multiplies it by
    ``omega``.  Operators may be dense arrays or scipy sparse matrices.
    """

    hamiltonian: object
    lindblads: tuple
    t: float
    dt: float
    omega: float = 0.0
    recovery: RecoveryChannel | None = None

    def __post_init__(self):
        if self.dt <= 0 or self.t < 0:
            raise ShapeError("need dt > 0 and t >= 0")
        steps = round(self.t / self.dt)
        if abs(steps * self.dt - self.t) > 1e-9 * max(1.0, self.t):
            raise ShapeError(f"t={self.t} is not an integer multiple of dt={self.dt}")

    @property
    def steps(self) -> int:
        return int(round(self.t / self.dt))


def _to_op(A):
    if sp.issparse(A):
        return sp.csr_array(A)
    return np.asarray(A, dtype=complex)


def _prep_terms(spec: EvolutionSpec):
    """Fold the commutator and anticommutator parts into one drift operator
    A = -i omega H - (1/2) sum_i L_i^dag L_i, so the right-hand side is
    A rho + rho A^dag + sum_i L_i rho L_i^dag."""
    H = _to_op(spec.hamiltonian)
    pairs = []
    M_total = None
    for L in spec.lindblads:
        Lo = _to_op(L)
        Ld = Lo.conj().T if sp.issparse(Lo) else dagger(Lo)
        Ld = sp.csr_array(Ld) if sp.issparse(Lo) else Ld
        M = Ld @ Lo
        M_total = M if M_total is None else M_total + M
        pairs.append((Lo, Ld))
    A = -1j * spec.omega * H
    if M_total is not None:
        A = A - 0.5 * M_total
    Ad = A.conj().T
    if sp.issparse(A):
        A, Ad = sp.csr_array(A), sp.csr_array(Ad)
    return A, Ad, pairs


def _rhs(rho, A, Ad, pairs):
    out = A @ rho + rho @ Ad
    for Lo, Ld in pairs:
        out = out + (Lo @ rho) @ Ld
    return out


def _rk4_step(rho, dt, A, Ad, pairs):
    k1 = _rhs(rho, A, Ad, pairs)
    k2 = _rhs(rho + 0.5 * dt * k1, A, Ad, pairs)
    k3 = _rhs(rho + 0.5 * dt * k2, A, Ad, pairs)
    k4 = _rhs(rho + dt * k3, A, Ad, pairs)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_state(rho, tol_pos: float):
    drift = abs(complex(np.trace(rho)) - 1.0)
    lo = float(np.linalg.eigvalsh((rho + dagger(rho)) / 2).min())
    if lo < -tol_pos:
        raise PositivityLost(
            f"negative eigenvalue {lo:.3e}; decrease dt (trace drift {drift:.1e})")
    return drift


def evolve_lindblad(rho0, spec: EvolutionSpec, check: bool = True,
                    observer=None, observe_every: int = 1) -> np.ndarray:
    """RK4 integration of the master equation; returns the final state.

    ``observer(step, time, rho)`` is called every ``observe_every`` steps
    (and once at step 0).
    """
    rho = np.asarray(rho0, dtype=complex).copy()
    A, Ad, pairs = _prep_terms(spec)
    if observer is not None:
        observer(0, 0.0, rho)
    for step in range(spec.steps):
        rho = _rk4_step(rho, spec.dt, A, Ad, pairs)
        if observer is not None and (step + 1) % observe_every == 0:
            observer(step + 1, (step + 1) * spec.dt, rho)
    if check:
        _check_state(rho, POSITIVITY_TOL)
    return rho


def evolve_with_qec(rho0, spec: EvolutionSpec, check: bool = True,
                    method: str = "auto", observer=None,
                    observe_every: int = 1) -> np.ndarray:
    """Trotterized error-corrected evolution: RK4 sub-step, then project onto
    the code space and recover the complement, every dt.

    When the initial state is supported on the code space the per-step map
    closes on the four logical basis operators, so the loop is replaced by an
    exact 4x4 map power ("logical" method).  "full" forces the dense loop.
    """
    if spec.recovery is None:
        raise ShapeError("spec carries no recovery channel")
    rho = np.asarray(rho0, dtype=complex).copy()
    rec = spec.recovery

    code_supported = False
    if method in ("auto", "logical"):
        C = np.column_stack([rec.ket0, rec.ket1])
        block = dagger(C) @ rho @ C
        embedded = C @ block @ dagger(C)
        code_supported = float(np.abs(rho - embedded).max()) <= 1e-12
    if method == "logical" and not code_supported:
        raise ShapeError("initial state is not supported on the code space")

    if method in ("auto", "logical") and code_supported:
        T = logical_qec_supermap(spec)
        vec = block.reshape(-1)
        out = np.linalg.matrix_power(T, spec.steps) @ vec
        final = C @ out.reshape(2, 2) @ dagger(C)
        if check:
            _check_state(final, POSITIVITY_TOL)
        return final

    A, Ad, pairs = _prep_terms(spec)
    if observer is not None:
        observer(0, 0.0, rho)
    for step in range(spec.steps):
        rho = _rk4_step(rho, spec.dt, A, Ad, pairs)
        rho = rec.qec_map(rho)
        if observer is not None and (step + 1) % observe_every == 0:
            observer(step + 1, (step + 1) * spec.dt, rho)
    if check:
        _check_state(rho, POSITIVITY_TOL)
    return rho


def logical_qec_supermap(spec: EvolutionSpec) -> np.ndarray:
    """Exact one-step map on the logical operator basis |a><b| (4x4, row-major
    vectorization of the 2x2 logical block)."""
    rec = spec.recovery
    C = np.column_stack([rec.ket0, rec.ket1])
    A, Ad, pairs = _prep_terms(spec)
    T = np.zeros((4, 4), dtype=complex)
    for col, (a, b) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        E = np.outer(C[:, a], C[:, b].conj())
        out = rec.qec_map(_rk4_step(E, spec.dt, A, Ad, pairs))
        blk = dagger(C) @ out @ C
        T[:, col] = blk.reshape(-1)
    return T


# ---------------------------------------------------------------------------
#  multi-probe operator assembly
# ---------------------------------------------------------------------------

def embed_probe_operators(model: NoiseModel, m: int, ancilla_dim: int = 1,
                          sparse: bool | None = None):
    """Total signal Hamiltonian and per-(site, jump) operators on
    (C^d)^(x m) (x) C^ancilla, as sparse matrices by default for m >= 2.

    Returns (H_total, [L at each site for each jump]).
    """
    d = model.d
    if sparse is None:
        sparse = d**m * ancilla_dim > 64
    eye = sp.identity if sparse else (lambda n: np.eye(int(n), dtype=complex))
    kron = (lambda a, b: sp.kron(a, b, format="csr")) if sparse else np.kron

    def at_site(op, site):
        left = d**site
        right = d**(m - site - 1) * ancilla_dim
        out = kron(kron(eye(left), op), eye(right))
        return sp.csr_array(out) if sparse else np.asarray(out)

    H_total = None
    for site in range(m):
        term = at_site(model.H, site)
        H_total = term if H_total is None else H_total + term
    lindblads = []
    for site in range(m):
        for L in model.lindblads:
            lindblads.append(at_site(L, site))
    return H_total, tuple(lindblads)


def ghz_state(n: int, local_dim: int = 2) -> np.ndarray:
    """(|0...0> + |x...x>)/sqrt(2) with x the highest level."""
    dim = local_dim**n
    v = np.zeros(dim, dtype=complex)
    v[0] = 1 / np.sqrt(2)
    v[-1] = 1 / np.sqrt(2)
    return v


# ---------------------------------------------------------------------------
#  Fisher information
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QfiResult:
    value: float
    method: str
    omega_step: float | None = None
    discarded_mass: float = 0.0


def qfi(rho, drho, eig_tol: float = SLD_EIG_TOL,
        omega_step: float | None = None) -> QfiResult:
    """Fisher information from the spectral form of the symmetric logarithmic
    derivative: F = 2 sum_{jk} |<j|drho|k>|^2 / (p_j + p_k) over pairs with
    p_j + p_k above the cutoff."""
    rho = assert_hermitian(rho, 1e-7, "rho")
    drho = assert_hermitian(drho, 1e-7, "drho")
    if abs(complex(np.trace(drho))) > 1e-6 * max(1.0, float(np.abs(drho).max())):
        raise ShapeError("drho must be traceless")
    w, V = np.linalg.eigh((rho + dagger(rho)) / 2)
    D = dagger(V) @ drho @ V
    psum = w[:, None] + w[None, :]
    mask = psum > eig_tol
    val = 2.0 * float(np.sum((np.abs(D)[mask] ** 2) / psum[mask]))
    discarded = float(np.sum(np.abs(D)[~mask] ** 2))
    if discarded > 1e-6:
        raise IllConditioned(
            f"{discarded:.3e} of the derivative lives on the truncated sector")
    return QfiResult(value=val, method="sld-spectral", omega_step=omega_step,
                     discarded_mass=discarded)


def qfi_finite_difference(rho_minus, rho_plus, omega_step: float,
                          eig_tol: float = SLD_EIG_TOL) -> QfiResult:
    """SLD-spectral Fisher information with the derivative from a central
    difference of states at omega -+ omega_step."""
    drho = (np.asarray(rho_plus, dtype=complex)
            - np.asarray(rho_minus, dtype=complex)) / (2.0 * omega_step)
    rho = (np.asarray(rho_plus, dtype=complex)
           + np.asarray(rho_minus, dtype=complex)) / 2.0
    res = qfi(rho, drho, eig_tol, omega_step=omega_step)
    return res


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (squared-overlap convention)."""
    from scipy.linalg import sqrtm
    sq = sqrtm(np.asarray(rho, dtype=complex))
    inner = sqrtm(sq @ np.asarray(sigma, dtype=complex) @ sq)
    return float(np.real(np.trace(inner)) ** 2)


def qfi_from_fidelity(rho_a, rho_b, omega_step: float) -> QfiResult:
    """Finite-difference Fisher information 8(1 - sqrt(F))/h^2 from two states
    separated by omega_step."""
    F = fidelity(rho_a, rho_b)
    val = 8.0 * (1.0 - np.sqrt(min(F, 1.0))) / omega_step**2
    return QfiResult(value=float(val), method="finite-difference",
                     omega_step=omega_step)


def ghz_dephasing_qfi(N: int, gamma: float, t: float) -> float:
    """Closed-form Fisher information of an N-probe GHZ state under local
    dephasing at rate gamma after time t."""
    if N < 1 or gamma < 0 or t < 0:
        raise ShapeError("need N >= 1, gamma >= 0, t >= 0")
    return float(N**2 * t**2 * np.exp(-2.0 * N * gamma * t))


def lindblad_superoperator(H, lindblads, omega: float) -> np.ndarray:
    """Dense superoperator of the master equation for row-major vec(rho);
    the independent oracle for the RK4 integrator."""
    H = np.asarray(H, dtype=complex) if not sp.issparse(H) else H.toarray()
    D = H.shape[0]
    eye = np.eye(D, dtype=complex)
    S = -1j * omega * (np.kron(H, eye) - np.kron(eye, H.T))
    for L in lindblads:
        L = np.asarray(L, dtype=complex) if not sp.issparse(L) else L.toarray()
        M = dagger(L) @ L
        S += np.kron(L, L.conj()) - 0.5 * (np.kron(M, eye) + np.kron(eye, M.T))
    return S
