"""Dense complex-matrix primitives: tensor products, partial traces, norms,
Hermitian eigendecompositions.

Everything operates on plain ``numpy`` arrays of ``complex128``.  Subsystem
index order is row-major: probe 1, ..., probe m, ancilla last.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import DimensionTooLarge, NumericalFailure, ShapeError

DEFAULT_TOL = 1e-9
DEFAULT_DIM_CAP = 2**14


def as_matrix(M) -> np.ndarray:
    """Coerce to a 2-d complex array and reject non-finite entries."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ShapeError("matrix has non-finite entries")
    return A


def dagger(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return (M + dagger(M)) / 2


def herm_defect(M: np.ndarray) -> float:
    """Max-entry deviation from Hermiticity."""
    return float(np.max(np.abs(M - dagger(M)), initial=0.0))


def is_hermitian(M: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return herm_defect(M) <= tol


def assert_hermitian(M: np.ndarray, tol: float = DEFAULT_TOL, what: str = "matrix") -> np.ndarray:
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"{what} is not square: {A.shape}")
    d = herm_defect(A)
    if d > tol:
        raise ShapeError(f"{what} is not Hermitian within {tol:g} (defect {d:.3e})")
    return A


def check_density(rho: np.ndarray, tol: float = 1e-7, what: str = "state") -> np.ndarray:
    """Validate trace one and near-positivity; returns the input unchanged."""
    A = assert_hermitian(rho, max(tol, DEFAULT_TOL), what)
    tr = complex(np.trace(A))
    if abs(tr - 1.0) > max(tol, DEFAULT_TOL):
        raise ShapeError(f"{what} has trace {tr:.6g}, expected 1")
    lo = float(np.linalg.eigvalsh(hermitian_part(A)).min())
    if lo < -tol:
        raise ShapeError(f"{what} has negative eigenvalue {lo:.3e}")
    return A


def tensor(*ops, cap: int | None = DEFAULT_DIM_CAP) -> np.ndarray:
    """Kronecker product of one or more matrices, guarded by a dimension cap."""
    if not ops:
        raise ShapeError("tensor() needs at least one operand")
    mats = [as_matrix(A) for A in ops]
    rows = int(np.prod([A.shape[0] for A in mats]))
    cols = int(np.prod([A.shape[1] for A in mats]))
    if cap is not None and max(rows, cols) > cap:
        raise DimensionTooLarge(f"tensor dimension {rows}x{cols} exceeds cap {cap}")
    out = mats[0]
    for A in mats[1:]:
        out = np.kron(out, A)
    return out


def kron_at(op: np.ndarray, site: int, dims: Sequence[int], cap: int | None = None) -> np.ndarray:
    """Embed ``op`` on subsystem ``site`` (0-based) of a product space."""
    mats = [np.eye(d, dtype=complex) for d in dims]
    if not 0 <= site < len(dims):
        raise ShapeError(f"site {site} out of range for {len(dims)} subsystems")
    if op.shape != mats[site].shape:
        raise ShapeError(f"operator shape {op.shape} does not match dims[{site}]={dims[site]}")
    mats[site] = op
    return tensor(*mats, cap=cap)


def partial_trace(M, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out all subsystems except those in ``keep`` (0-based indices).

    Kept subsystems stay in their original relative order.  The input must be
    square with dimension equal to ``prod(dims)``.
    """
    A = as_matrix(M)
    dims = [int(d) for d in dims]
    n = len(dims)
    full = int(np.prod(dims))
    if A.shape != (full, full):
        raise ShapeError(f"matrix shape {A.shape} does not match dims product {full}")
    keep = sorted(set(int(k) for k in keep))
    if keep and (keep[0] < 0 or keep[-1] >= n):
        raise ShapeError(f"keep={keep} out of range for {n} subsystems")
    T = A.reshape(dims + dims)
    # trace out from the highest index so axis numbers stay valid
    traced = 0
    for ax in reversed(range(n)):
        if ax in keep:
            continue
        T = np.trace(T, axis1=ax, axis2=ax + (n - traced))
        traced += 1
    kept = int(np.prod([dims[k] for k in keep])) if keep else 1
    return T.reshape(kept, kept)


def operator_norm(M) -> float:
    """Largest singular value; max |eigenvalue| for Hermitian input."""
    A = as_matrix(M)
    if A.size == 0:
        return 0.0
    if A.shape[0] == A.shape[1] and is_hermitian(A, 1e-12 * max(1.0, float(np.abs(A).max()))):
        return float(np.max(np.abs(np.linalg.eigvalsh(hermitian_part(A)))))
    return float(np.linalg.norm(A, 2))


def trace_norm(M) -> float:
    """Sum of singular values."""
    A = as_matrix(M)
    if A.size == 0:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False).sum())


def hs_inner(A: np.ndarray, B: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(A^dag B)."""
    return complex(np.sum(A.conj() * B))


def hs_norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A))


def eig_hermitian(M, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.

    Raises NumericalFailure if LAPACK does not converge or the reconstruction
    residual is out of line with the input scale.
    """
    A = assert_hermitian(M, max(tol, DEFAULT_TOL) * max(1.0, operator_norm_fast(M)))
    H = hermitian_part(A)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise NumericalFailure(f"eigh did not converge: {exc}") from exc
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    resid = float(np.max(np.abs((V * w) @ dagger(V) - H)))
    if resid > 1e-9 * scale * max(1, H.shape[0]):
        raise NumericalFailure(f"eigendecomposition residual {resid:.3e} too large")
    return w, V


def operator_norm_fast(M) -> float:
    """Cheap upper-bound-ish scale estimate (max abs entry times dim)."""
    A = np.asarray(M, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.abs(A).max())


def ket(index: int, dim: int) -> np.ndarray:
    """Computational basis column vector |index> in C^dim."""
    if not 0 <= index < dim:
        raise ShapeError(f"basis index {index} out of range for dim {dim}")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """|a><b| for column vectors a, b."""
    return np.outer(a, b.conj())
