"""Noise-model ingestion and canonicalization.

A model is a probe Hamiltonian plus a list of Lindblad (jump) operators.  This
module builds the Hermitian operator span generated by the jumps, decides
whether the Hamiltonian escapes that span, and fixes the gauge freedom of the
jump operators (trace shifts and unitary remixing) relative to a pair of
extremal states.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GaugeFailure, ShapeError
from .linalg import (
    DEFAULT_TOL,
    as_matrix,
    assert_hermitian,
    check_density,
    dagger,
    hs_inner,
    hs_norm,
)

RANK_TOL = 1e-8


@dataclass(frozen=True)
class NoiseModel:
    """Probe dimension, Hamiltonian and jump operators (all d x d)."""

    d: int
    H: np.ndarray
    lindblads: tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self):
        d = int(self.d)
        if d < 2:
            raise ShapeError(f"probe dimension must be >= 2, got {d}")
        H = assert_hermitian(self.H, what="H")
        if H.shape != (d, d):
            raise ShapeError(f"H shape {H.shape} does not match d={d}")
        ls = tuple(as_matrix(L) for L in self.lindblads)
        for k, L in enumerate(ls):
            if L.shape != (d, d):
                raise ShapeError(f"lindblads[{k}] shape {L.shape} does not match d={d}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "lindblads", ls)

    @property
    def r(self) -> int:
        return len(self.lindblads)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "H": _complex_matrix_to_json(self.H),
            "lindblads": [_complex_matrix_to_json(L) for L in self.lindblads],
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NoiseModel":
        try:
            d = int(payload["d"])
            H = _complex_matrix_from_json(payload["H"])
            ls = [_complex_matrix_from_json(L) for L in payload.get("lindblads", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ShapeError(f"malformed noise-model payload: {exc}") from exc
        return cls(d=d, H=H, lindblads=tuple(ls), label=str(payload.get("label", "")))

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def from_json(cls, path) -> "NoiseModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _complex_matrix_to_json(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def _complex_matrix_from_json(rows: list) -> np.ndarray:
    return np.array([[complex(c[0], c[1]) for c in row] for row in rows], dtype=complex)


# -- Hermitian <-> real-vector embedding (isometric for the HS inner product) --

def _herm_to_real(M: np.ndarray) -> np.ndarray:
    d = M.shape[0]
    iu = np.triu_indices(d, k=1)
    return np.concatenate([
        np.real(np.diagonal(M)),
        np.sqrt(2.0) * np.real(M[iu]),
        np.sqrt(2.0) * np.imag(M[iu]),
    ])


def _real_to_herm(v: np.ndarray, d: int) -> np.ndarray:
    iu = np.triu_indices(d, k=1)
    n_off = iu[0].size
    M = np.zeros((d, d), dtype=complex)
    M[np.diag_indices(d)] = v[:d]
    upper = (v[d:d + n_off] + 1j * v[d + n_off:]) / np.sqrt(2.0)
    M[iu] = upper
    M[(iu[1], iu[0])] = upper.conj()
    return M


def span_generators(model: NoiseModel) -> list[np.ndarray]:
    """Hermitian generators: identity, L +/- L^dag parts, and parts of L_i^dag L_j."""
    gens = [np.eye(model.d, dtype=complex)]
    for L in model.lindblads:
        gens.append(L + dagger(L))
        gens.append(1j * (L - dagger(L)))
    for i, Li in enumerate(model.lindblads):
        for j, Lj in enumerate(model.lindblads):
            P = dagger(Li) @ Lj
            if j >= i:
                gens.append(P + dagger(P))
            if j > i:
                gens.append(1j * (P - dagger(P)))
    return gens


@dataclass(frozen=True)
class LindbladSpan:
    """HS-orthonormal Hermitian basis of the span generated by the jumps."""

    basis: tuple[np.ndarray, ...]
    dim_S: int
    d: int

    def project(self, M: np.ndarray) -> np.ndarray:
        """Orthogonal projection of a Hermitian matrix onto the span."""
        out = np.zeros((self.d, self.d), dtype=complex)
        for B in self.basis:
            out = out + np.real(hs_inner(B, M)) * B
        return out

    def residual(self, M: np.ndarray) -> float:
        return hs_norm(M - self.project(M))

    def contains(self, M: np.ndarray, tol: float = 10 * DEFAULT_TOL) -> bool:
        return self.residual(M) <= tol * max(1.0, hs_norm(M))


def build_span(model: NoiseModel, rank_tol: float = RANK_TOL) -> LindbladSpan:
    """Orthonormalize the span generators, deciding rank at ``rank_tol``
    relative to the largest Gram eigenvalue."""
    gens = span_generators(model)
    V = np.array([_herm_to_real(g) for g in gens])
    # right-singular vectors of the generator stack give the orthonormal basis
    _, s, Wt = np.linalg.svd(V, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        basis = ()
    else:
        keep = (s**2) > rank_tol * (s[0] ** 2)
        basis = tuple(_real_to_herm(w, model.d) for w in Wt[keep])
    return LindbladSpan(basis=basis, dim_S=len(basis), d=model.d)


def hnls_holds(model: NoiseModel, span: LindbladSpan,
               rank_tol: float = RANK_TOL) -> tuple[bool, float]:
    """Is the Hamiltonian outside the jump span?  Returns (verdict, HS residual)."""
    resid = span.residual(model.H)
    scale = max(1.0, hs_norm(model.H))
    return bool(resid > rank_tol * scale), float(resid)


@dataclass(frozen=True)
class GaugedModel:
    """Noise model whose jumps have zero trace against both extremal states
    and a diagonalized second-moment matrix."""

    model: NoiseModel
    rho0: np.ndarray
    rho1: np.ndarray
    mu: np.ndarray
    shifts: np.ndarray = field(repr=False)
    mixing: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.model.d

    @property
    def r(self) -> int:
        return self.model.r

    @property
    def lindblads(self) -> tuple[np.ndarray, ...]:
        return self.model.lindblads

    @property
    def H(self) -> np.ndarray:
        return self.model.H


def apply_gauge(model: NoiseModel, rho0, rho1, tol: float = DEFAULT_TOL) -> GaugedModel:
    """Shift and remix the jump operators so that both extremal states have
    zero first moments and a shared diagonal second-moment matrix."""
    rho0 = check_density(rho0, what="rho0")
    rho1 = check_density(rho1, what="rho1")
    if abs(complex(np.trace(rho0 @ rho1))) > 10 * tol:
        raise GaugeFailure("extremal states are not orthogonal")

    shifts = np.array([complex(np.trace(rho0 @ L)) for L in model.lindblads])
    shifted = [L - x * np.eye(model.d) for L, x in zip(model.lindblads, shifts)]

    r = len(shifted)
    if r:
        M = np.array([[complex(np.trace(rho0 @ dagger(Li) @ Lj)) for Lj in shifted]
                      for Li in shifted])
        M = (M + dagger(M)) / 2
        mu, V = np.linalg.eigh(M)
        order = np.argsort(mu)[::-1]
        mu, V = mu[order], V[:, order]
        mixing = V.T  # new_i = sum_j mixing[i, j] * old_j
        mixed = [sum(mixing[i, j] * shifted[j] for j in range(r)) for i in range(r)]
    else:
        mu = np.zeros(0)
        mixing = np.zeros((0, 0))
        mixed = []

    gauged = NoiseModel(d=model.d, H=model.H, lindblads=tuple(mixed),
                        label=model.label + (" [gauged]" if model.label else "[gauged]"))

    worst = 0.0
    for L in gauged.lindblads:
        worst = max(worst, abs(complex(np.trace(rho0 @ L))), abs(complex(np.trace(rho1 @ L))))
    for i, Li in enumerate(gauged.lindblads):
        for j, Lj in enumerate(gauged.lindblads):
            target = mu[i] if i == j else 0.0
            worst = max(worst,
                        abs(complex(np.trace(rho0 @ dagger(Li) @ Lj)) - target),
                        abs(complex(np.trace(rho1 @ dagger(Li) @ Lj)) - target))
    if worst > 10 * tol * max(1.0, float(np.max(mu, initial=0.0))):
        raise GaugeFailure(
            f"gauge invariants violated by {worst:.3e}; extremal states likely "
            "do not satisfy the span-orthogonality conditions")
    if mu.size and float(mu.min()) < -tol:
        raise GaugeFailure(f"negative second moment {float(mu.min()):.3e}")

    return GaugedModel(model=gauged, rho0=rho0, rho1=rho1,
                       mu=np.maximum(mu, 0.0), shifts=shifts, mixing=mixing)
