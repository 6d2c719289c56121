"""Construction of the four code families and their combinatorics.

Multi-probe codewords are superpositions of letter strings with prescribed
letter counts.  The small-ancilla family labels string classes with ancilla
levels obtained from a greedy coloring of the swap-adjacency graph; the
random family replaces the ancilla with i.i.d. phases.  Structured codes
evaluate one- and two-site matrix elements combinatorially, so logical rates
never require materializing the full Hilbert space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionTooLarge, NumericalFailure, ShapeError, WSetTooLarge
from .hnls import HnlsSolution
from .linalg import (
    DEFAULT_DIM_CAP,
    DEFAULT_TOL,
    dagger,
    partial_trace,
)
from .noise import NoiseModel, _complex_matrix_from_json, _complex_matrix_to_json

DEFAULT_ENUM_CAP = 10**5


# ---------------------------------------------------------------------------
#  counts and string combinatorics
# ---------------------------------------------------------------------------

def round_counts(lambdas, m: int) -> np.ndarray:
    """Integer letter counts summing to m with |m_i/m - lambda_i| <= 1/m.

    Largest-remainder rounding; equal remainders break toward lower index.
    """
    lam = np.asarray(lambdas, dtype=float)
    if m < 1:
        raise ShapeError(f"m must be >= 1, got {m}")
    if lam.ndim != 1 or lam.size == 0:
        raise ShapeError("lambdas must be a nonempty 1-d array")
    if np.any(lam < -DEFAULT_TOL) or abs(lam.sum() - 1.0) > 1e-6:
        raise ShapeError("lambdas must be nonnegative and sum to 1")
    target = lam * m
    base = np.floor(target + 1e-12).astype(int)
    short = m - int(base.sum())
    rem = target - base
    order = np.lexsort((np.arange(lam.size), -rem))
    base[order[:short]] += 1
    return base


def multiset_size(counts) -> int:
    """Number of distinct strings with the given letter counts."""
    counts = [int(c) for c in counts]
    n = sum(counts)
    out = math.factorial(n)
    for c in counts:
        out //= math.factorial(c)
    return out


def multiset_strings(counts, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
    """All strings with the given letter counts, lexicographic, as an
    (N x m) int8 array of letter indices."""
    counts = np.asarray(counts, dtype=int)
    m = int(counts.sum())
    N = multiset_size(counts)
    if N > cap:
        raise WSetTooLarge(f"{N} strings exceed the enumeration cap {cap}")
    out = np.empty((N, m), dtype=np.int8)
    work = counts.copy()

    def fill(block: np.ndarray, col: int):
        if col == m:
            return
        row = 0
        for letter in range(work.size):
            if work[letter] == 0:
                continue
            work[letter] -= 1
            sub = multiset_size(work)
            block[row:row + sub, col] = letter
            fill(block[row:row + sub], col + 1)
            work[letter] += 1
            row += sub

    fill(out, 0)
    return out


def swap_degree(counts) -> int:
    """Vertex degree of the swap-adjacency graph (regular)."""
    counts = [int(c) for c in counts]
    deg = 0
    for i in range(len(counts)):
        for j in range(i + 1, len(counts)):
            deg += counts[i] * counts[j]
    return deg


def color_ancilla(counts, cap: int = DEFAULT_ENUM_CAP) -> tuple[np.ndarray, int]:
    """Greedy proper coloring of the swap-adjacency graph on the string set.

    Vertices are visited in lexicographic order, taking the first available
    color; palette size is at most degree + 1.  Returns (colors aligned with
    ``multiset_strings`` order, palette size).
    """
    strings = multiset_strings(counts, cap)
    N, m = strings.shape
    index = {s.tobytes(): i for i, s in enumerate(strings)}
    colors = np.full(N, -1, dtype=int)
    for idx in range(N):
        w = strings[idx]
        used = set()
        for a in range(m):
            for b in range(a + 1, m):
                if w[a] == w[b]:
                    continue
                w2 = w.copy()
                w2[a], w2[b] = w[b], w[a]
                c = colors[index[w2.tobytes()]]
                if c >= 0:
                    used.add(c)
        c = 0
        while c in used:
            c += 1
        colors[idx] = c
    return colors, int(colors.max()) + 1


# ---------------------------------------------------------------------------
#  dense codes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DenseCode:
    """Two explicit orthonormal codewords on m probes (ancilla last)."""

    m: int
    probe_dim: int
    ancilla_dim: int
    ket0: np.ndarray
    ket1: np.ndarray
    label: str = ""

    def __post_init__(self):
        k0 = np.asarray(self.ket0, dtype=complex).ravel()
        k1 = np.asarray(self.ket1, dtype=complex).ravel()
        dim = self.probe_dim ** self.m * self.ancilla_dim
        if k0.size != dim or k1.size != dim:
            raise ShapeError(f"codeword length {k0.size} does not match {dim}")
        for name, v in (("ket0", k0), ("ket1", k1)):
            n = np.linalg.norm(v)
            if abs(n - 1.0) > 1e-7:
                raise ShapeError(f"{name} has norm {n:.9f}")
        ov = abs(np.vdot(k0, k1))
        if ov > 1e-7:
            raise ShapeError(f"codewords overlap by {ov:.3e}")
        object.__setattr__(self, "ket0", k0)
        object.__setattr__(self, "ket1", k1)

    @property
    def dims(self) -> tuple[int, ...]:
        base = (self.probe_dim,) * self.m
        return base + ((self.ancilla_dim,) if self.ancilla_dim > 1 else ())

    @property
    def dim(self) -> int:
        return self.ket0.size

    def to_dict(self) -> dict:
        return {
            "family": "dense",
            "m": self.m,
            "d": self.probe_dim,
            "ancilla_dim": self.ancilla_dim,
            "ket0": [[float(z.real), float(z.imag)] for z in self.ket0],
            "ket1": [[float(z.real), float(z.imag)] for z in self.ket1],
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DenseCode":
        k0 = np.array([complex(a, b) for a, b in payload["ket0"]])
        k1 = np.array([complex(a, b) for a, b in payload["ket1"]])
        return cls(m=int(payload["m"]), probe_dim=int(payload["d"]),
                   ancilla_dim=int(payload["ancilla_dim"]), ket0=k0, ket1=k1,
                   label=payload.get("label", ""))


# ---------------------------------------------------------------------------
#  structured codes
# ---------------------------------------------------------------------------

_PHASE_FAMILIES = ("random_free", "sql_random")
_COLOR_FAMILIES = ("small_ancilla", "sql_small")
_SQL_FAMILIES = ("sql_small", "sql_random")


@dataclass(frozen=True, eq=False)
class StructuredCode:
    """Codewords described by letter counts, bases, phases and colorings.

    ``counts[k]`` holds the letter multiplicities of codeword k, aligned with
    the columns of ``block_bases[k]`` (single-probe states).  Phase-bearing
    families carry a seed; coloring families carry per-block color tables or
    defer them until materialization.
    """

    family: str
    m: int
    d: int
    counts: tuple[np.ndarray, np.ndarray]
    block_bases: tuple[np.ndarray, np.ndarray]
    ancilla_dim: int = 1
    phase_seed: int | None = None
    colorings: tuple | None = None      # ((colors0, palette0), (colors1, palette1))
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.family not in _PHASE_FAMILIES + _COLOR_FAMILIES:
            raise ShapeError(f"unknown family {self.family!r}")
        c0, c1 = (np.asarray(c, dtype=int) for c in self.counts)
        if c0.sum() != self.m or c1.sum() != self.m:
            raise ShapeError("letter counts must sum to m in each block")
        B0, B1 = (np.asarray(B, dtype=complex) for B in self.block_bases)
        for Bk, ck in ((B0, c0), (B1, c1)):
            if Bk.shape != (self.d, ck.size):
                raise ShapeError("block basis shape does not match counts")
            G = dagger(Bk) @ Bk
            if np.abs(G - np.eye(ck.size)).max() > 1e-8:
                raise ShapeError("block basis columns are not orthonormal")
        object.__setattr__(self, "counts", (c0, c1))
        object.__setattr__(self, "block_bases", (B0, B1))

    # -- structural facts ---------------------------------------------------

    @property
    def has_phases(self) -> bool:
        return self.family in _PHASE_FAMILIES

    @property
    def has_tag_qubit(self) -> bool:
        return self.family in _SQL_FAMILIES

    @property
    def is_site_symmetric(self) -> bool:
        """Two-site elements independent of the site pair?"""
        return not self.has_phases

    def W_size(self, k: int) -> int:
        return multiset_size(self.counts[k])

    def strings(self, k: int, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
        key = ("strings", k)
        if key not in self._cache:
            self._cache[key] = multiset_strings(self.counts[k], cap)
        return self._cache[key]

    def phases(self, k: int, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
        """Per-string phases in lexicographic order (zeros if phase-free)."""
        key = ("phases", k)
        if key not in self._cache:
            if not self.has_phases:
                self._cache[("phases", 0)] = np.zeros(self.W_size(0))
                self._cache[("phases", 1)] = np.zeros(self.W_size(1))
            else:
                n0, n1 = self.W_size(0), self.W_size(1)
                if max(n0, n1) > cap:
                    raise WSetTooLarge(
                        f"phase table of {max(n0, n1)} strings exceeds cap {cap}")
                rng = np.random.default_rng(self.phase_seed)
                theta = rng.uniform(0.0, 2.0 * np.pi, n0 + n1)
                self._cache[("phases", 0)] = theta[:n0]
                self._cache[("phases", 1)] = theta[n0:]
        return self._cache[key]

    def coloring(self, k: int, cap: int = DEFAULT_ENUM_CAP) -> tuple[np.ndarray, int]:
        if self.family not in _COLOR_FAMILIES:
            raise ShapeError(f"{self.family} carries no coloring")
        if self.colorings is not None:
            return self.colorings[k]
        key = ("coloring", k)
        if key not in self._cache:
            self._cache[key] = color_ancilla(self.counts[k], cap)
        return self._cache[key]

    # -- reduced matrix elements ---------------------------------------------

    def one_local_rdm(self, k: int) -> np.ndarray:
        """Single-probe reduced state (d x d); exactly diagonal in the block
        basis with weights counts/m."""
        key = ("rdm1", k)
        if key not in self._cache:
            B = self.block_bases[k]
            w = self.counts[k] / self.m
            self._cache[key] = (B * w) @ dagger(B)
        return self._cache[key]

    def pair_weights(self, k: int) -> np.ndarray:
        """Diagonal two-site weights: counts statistics of letter pairs."""
        c = self.counts[k].astype(float)
        m = float(self.m)
        W = np.outer(c, c)
        np.fill_diagonal(W, c * (c - 1.0))
        return W / (m * (m - 1.0))

    def delta_table(self, k: int, site_a: int, site_b: int,
                    cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
        """Swap coefficients of the two-site reduced operator for a phase
        family: entry (i, j) multiplies |ij><ji|.  Zero for coloring families."""
        L = self.counts[k].size
        if not self.has_phases:
            return np.zeros((L, L), dtype=complex)
        a, b = (site_a, site_b) if site_a < site_b else (site_b, site_a)
        key = ("delta", k, a, b)
        if key not in self._cache:
            S = self.strings(k, cap)
            th = self.phases(k, cap)
            N = S.shape[0]
            rest = np.delete(S, [a, b], axis=1).astype(np.int64)
            weights = (L ** np.arange(rest.shape[1], dtype=np.int64)
                       if rest.shape[1] else np.zeros(0, dtype=np.int64))
            keys = rest @ weights if rest.shape[1] else np.zeros(N, dtype=np.int64)
            la, lb = S[:, a].astype(int), S[:, b].astype(int)
            order = np.argsort(keys, kind="stable")
            ks = keys[order]
            same = ks[1:] == ks[:-1]
            if same.size > 1 and np.any(same[1:] & same[:-1]):
                raise NumericalFailure("string bucket of size > 2; corrupt counts")
            i1, i2 = order[:-1][same], order[1:][same]
            ph = np.exp(1j * (th[i1] - th[i2])) / N
            D = np.zeros((L, L), dtype=complex)
            np.add.at(D, (la[i1], lb[i1]), ph)
            np.add.at(D, (la[i2], lb[i2]), np.conj(ph))
            self._cache[key] = D
        return self._cache[key]

    def two_local_rdm(self, k: int, site_a: int = 0, site_b: int = 1,
                      cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
        """Two-probe reduced state on (site_a, site_b) as a d^2 x d^2 matrix."""
        B = self.block_bases[k]
        L = self.counts[k].size
        W = self.pair_weights(k)
        D = self.delta_table(k, site_a, site_b, cap)
        M = np.zeros((L * L, L * L), dtype=complex)
        for i in range(L):
            for j in range(L):
                M[i * L + j, i * L + j] = W[i, j]
                if i != j:
                    M[i * L + j, j * L + i] += D[i, j]
        B2 = np.kron(B, B)
        return B2 @ M @ dagger(B2)

    def two_local_element(self, k: int, O1: np.ndarray, O2: np.ndarray,
                          site_a: int = 0, site_b: int = 1,
                          cap: int = DEFAULT_ENUM_CAP) -> complex:
        """<k_L| O1 at site_a, O2 at site_b |k_L> for distinct sites."""
        B = self.block_bases[k]
        E1 = dagger(B) @ O1 @ B
        E2 = dagger(B) @ O2 @ B
        W = self.pair_weights(k)
        val = complex(np.sum(W * np.outer(np.diag(E1), np.diag(E2))))
        if self.has_phases:
            D = self.delta_table(k, site_a, site_b, cap)
            val += complex(np.sum(D * (E1.T * E2)))
        return val

    def one_local_element(self, k: int, O: np.ndarray) -> complex:
        return complex(np.trace(self.one_local_rdm(k) @ O))

    # -- serialization --------------------------------------------------------

    def to_dict(self, include_tables: bool = False) -> dict:
        payload = {
            "family": self.family,
            "m": self.m,
            "d": self.d,
            "counts": [self.counts[0].tolist(), self.counts[1].tolist()],
            "block_bases": [_complex_matrix_to_json(B) for B in self.block_bases],
            "ancilla_dim": self.ancilla_dim,
            "phases": None if not self.has_phases else {"seed": self.phase_seed},
            "coloring": None,
            "label": self.label,
        }
        if include_tables and self.has_phases:
            payload["phases"]["table"] = [self.phases(0).tolist(), self.phases(1).tolist()]
        if include_tables and self.family in _COLOR_FAMILIES:
            payload["coloring"] = [
                {"colors": self.coloring(0)[0].tolist(), "palette": self.coloring(0)[1]},
                {"colors": self.coloring(1)[0].tolist(), "palette": self.coloring(1)[1]},
            ]
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "StructuredCode":
        colorings = None
        if payload.get("coloring"):
            colorings = tuple(
                (np.asarray(entry["colors"], dtype=int), int(entry["palette"]))
                for entry in payload["coloring"])
        phases = payload.get("phases") or {}
        return cls(
            family=payload["family"], m=int(payload["m"]), d=int(payload["d"]),
            counts=tuple(np.asarray(c, dtype=int) for c in payload["counts"]),
            block_bases=tuple(_complex_matrix_from_json(B) for B in payload["block_bases"]),
            ancilla_dim=int(payload["ancilla_dim"]),
            phase_seed=phases.get("seed"), colorings=colorings,
            label=payload.get("label", ""))


# ---------------------------------------------------------------------------
#  builders
# ---------------------------------------------------------------------------

def build_ancilla_assisted(sol: HnlsSolution) -> DenseCode:
    """One probe entangled with one same-dimension ancilla; codeword k carries
    the square roots of the block-k extremal weights."""
    d = sol.basis.shape[0]
    K = sol.basis.shape[1]
    ket0 = np.zeros(d * d, dtype=complex)
    ket1 = np.zeros(d * d, dtype=complex)
    for i in range(K):
        target = ket0 if i < sol.d0 else ket1
        target += np.sqrt(sol.lambdas[i]) * np.kron(sol.basis[:, i],
                                                    _unit(d, i))
    return DenseCode(m=1, probe_dim=d, ancilla_dim=d, ket0=ket0, ket1=ket1,
                     label="ancilla_assisted")


def _unit(dim: int, idx: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[idx] = 1.0
    return v


def _hl_blocks(sol: HnlsSolution, m: int):
    lam0 = sol.lambdas[:sol.d0]
    lam1 = sol.lambdas[sol.d0:]
    c0 = round_counts(lam0, m)
    c1 = round_counts(lam1, m)
    B0 = sol.basis[:, :sol.d0]
    B1 = sol.basis[:, sol.d0:]
    return c0, c1, B0, B1


def build_small_ancilla(sol: HnlsSolution, m: int,
                        enum_cap: int = DEFAULT_ENUM_CAP) -> StructuredCode:
    """Counts from the extremal weights, ancilla levels from the greedy
    coloring.  Coloring is deferred when the string sets exceed the cap; the
    reported ancilla dimension then falls back to the degree + 1 guarantee."""
    if m < 3:
        raise ShapeError(f"small-ancilla code needs m >= 3, got {m}")
    c0, c1, B0, B1 = _hl_blocks(sol, m)
    d = sol.basis.shape[0]
    colorings = None
    if max(multiset_size(c0), multiset_size(c1)) <= enum_cap:
        colorings = (color_ancilla(c0, enum_cap), color_ancilla(c1, enum_cap))
        anc = max(colorings[0][1], colorings[1][1])
    else:
        anc = max(swap_degree(c0), swap_degree(c1)) + 1
    return StructuredCode(family="small_ancilla", m=m, d=d, counts=(c0, c1),
                          block_bases=(B0, B1), ancilla_dim=anc,
                          colorings=colorings, label="small_ancilla")


def build_random_ancilla_free(sol: HnlsSolution, m: int, seed: int) -> StructuredCode:
    """Same string sets as the small-ancilla code with seeded i.i.d. phases
    instead of an ancilla."""
    if m < 3:
        raise ShapeError(f"random code needs m >= 3, got {m}")
    c0, c1, B0, B1 = _hl_blocks(sol, m)
    return StructuredCode(family="random_free", m=m, d=sol.basis.shape[0],
                          counts=(c0, c1), block_bases=(B0, B1), ancilla_dim=1,
                          phase_seed=int(seed), label=f"random_free(seed={seed})")


@dataclass(frozen=True)
class SqlSingleProbe:
    """User-supplied single-probe data for the SQL constructions: two weight
    vectors (strictly positive, unit sum) and two orthonormal bases."""

    lam0: np.ndarray
    lam1: np.ndarray
    basis0: np.ndarray
    basis1: np.ndarray

    def __post_init__(self):
        lam0 = np.asarray(self.lam0, dtype=float)
        lam1 = np.asarray(self.lam1, dtype=float)
        B0 = np.asarray(self.basis0, dtype=complex)
        B1 = np.asarray(self.basis1, dtype=complex)
        d = lam0.size
        if lam1.size != d or B0.shape != (d, d) or B1.shape != (d, d):
            raise ShapeError("inconsistent single-probe data dimensions")
        for lam in (lam0, lam1):
            if np.any(lam <= 0) or abs(lam.sum() - 1.0) > 1e-8:
                raise ShapeError("weights must be strictly positive with unit sum")
        for B in (B0, B1):
            if np.abs(dagger(B) @ B - np.eye(d)).max() > 1e-8:
                raise ShapeError("single-probe basis is not orthonormal")
        object.__setattr__(self, "lam0", lam0)
        object.__setattr__(self, "lam1", lam1)
        object.__setattr__(self, "basis0", B0)
        object.__setattr__(self, "basis1", B1)

    @property
    def d(self) -> int:
        return self.lam0.size


def build_sql_codes(single_probe: SqlSingleProbe, m: int, variant: str,
                    seed: int | None = None,
                    enum_cap: int = DEFAULT_ENUM_CAP) -> StructuredCode:
    """SQL code on m probes.  Both codewords use all d letters in their own
    basis; a tag qubit keeps them orthogonal.  ``variant`` selects the
    coloring ancilla ("small-ancilla") or seeded phases ("qubit-ancilla-random")."""
    if m < 3:
        raise ShapeError(f"SQL codes need m >= 3, got {m}")
    c0 = round_counts(single_probe.lam0, m)
    c1 = round_counts(single_probe.lam1, m)
    bases = (single_probe.basis0, single_probe.basis1)
    if variant == "small-ancilla":
        colorings = None
        if max(multiset_size(c0), multiset_size(c1)) <= enum_cap:
            colorings = (color_ancilla(c0, enum_cap), color_ancilla(c1, enum_cap))
            palette = max(colorings[0][1], colorings[1][1])
        else:
            palette = max(swap_degree(c0), swap_degree(c1)) + 1
        return StructuredCode(family="sql_small", m=m, d=single_probe.d,
                              counts=(c0, c1), block_bases=bases,
                              ancilla_dim=2 * palette, colorings=colorings,
                              label="sql_small")
    if variant == "qubit-ancilla-random":
        return StructuredCode(family="sql_random", m=m, d=single_probe.d,
                              counts=(c0, c1), block_bases=bases, ancilla_dim=2,
                              phase_seed=int(seed or 0),
                              label=f"sql_random(seed={seed})")
    raise ShapeError(f"unknown SQL variant {variant!r}")


# ---------------------------------------------------------------------------
#  materialization
# ---------------------------------------------------------------------------

def materialize(code: StructuredCode, cap: int = DEFAULT_DIM_CAP,
                enum_cap: int = DEFAULT_ENUM_CAP) -> DenseCode:
    """Explicit codeword vectors; subsystem order (probe 1..m, ancilla)."""
    d, m = code.d, code.m
    anc = code.ancilla_dim
    dim = d**m * anc
    if dim > cap:
        raise DimensionTooLarge(f"dense dimension {dim} exceeds cap {cap}")

    kets = []
    for k in (0, 1):
        strings = code.strings(k, enum_cap)
        theta = code.phases(k, enum_cap)
        N = strings.shape[0]
        B = code.block_bases[k]
        if code.family in _COLOR_FAMILIES:
            colors, _ = code.coloring(k, enum_cap)
        else:
            colors = np.zeros(N, dtype=int)
        ket = np.zeros(dim, dtype=complex)
        amp = 1.0 / np.sqrt(N)
        for n in range(N):
            v = B[:, strings[n, 0]]
            for site in range(1, m):
                v = np.kron(v, B[:, strings[n, site]])
            if code.family == "small_ancilla":
                anc_idx = int(colors[n])
            elif code.family == "sql_small":
                anc_idx = int(colors[n]) * 2 + k
            elif code.family == "sql_random":
                anc_idx = k
            else:
                anc_idx = 0
            full = np.kron(v, _unit(anc, anc_idx)) if anc > 1 else v
            ket += amp * np.exp(1j * theta[n]) * full
        kets.append(ket)
    return DenseCode(m=m, probe_dim=d, ancilla_dim=anc, ket0=kets[0],
                     ket1=kets[1], label=code.label)


# ---------------------------------------------------------------------------
#  code-level condition checks
# ---------------------------------------------------------------------------

def site_operator(vec: np.ndarray, op: np.ndarray, site: int,
                  dims: tuple[int, ...]) -> np.ndarray:
    """Apply a single-subsystem operator to a state vector."""
    T = vec.reshape(dims)
    T = np.tensordot(op, T, axes=([1], [site]))
    T = np.moveaxis(T, 0, site)
    return T.reshape(-1)


def _dense_site_rdm(code: DenseCode, k: int, site: int) -> np.ndarray:
    ket = code.ket0 if k == 0 else code.ket1
    rho = np.outer(ket, ket.conj())
    return partial_trace(rho, code.dims, [site])


def _dense_pair_op(code: DenseCode, k0: int, k1: int, sa: int, sb: int) -> np.ndarray:
    ka = code.ket0 if k0 == 0 else code.ket1
    kb = code.ket0 if k1 == 0 else code.ket1
    return partial_trace(np.outer(ka, kb.conj()), code.dims, [sa, sb])


@dataclass(frozen=True)
class QecConditionReport:
    """Outcome of the two-site reduced-state condition check."""

    satisfied: bool
    max_residual: float
    q_ops: tuple
    pair_residuals: dict
    details: str = ""


def _herm_product_basis(d: int):
    """Orthonormal Hermitian basis via the real embedding unit vectors."""
    from .noise import _real_to_herm
    basis = []
    for k in range(d * d):
        e = np.zeros(d * d)
        e[k] = 1.0
        basis.append(_real_to_herm(e, d))
    return basis


def _recover_q(R: np.ndarray, d: int, tol: float):
    """Try to write R = -Q (x) Q for Hermitian Q; returns (Q, explained_resid,
    swap_defect)."""
    basis = _herm_product_basis(d)
    R4 = R.reshape(d, d, d, d)
    n = d * d
    C = np.zeros((n, n))
    for a, Ga in enumerate(basis):
        for b, Gb in enumerate(basis):
            val = np.einsum("ac,be,abce->", Ga.conj(), Gb.conj(), R4)
            C[a, b] = float(np.real(val))
    swap_defect = float(np.abs(C - C.T).max())
    Cs = (C + C.T) / 2
    w, V = np.linalg.eigh(Cs)
    if w[0] >= -tol:
        return None, float(np.abs(R).max()), swap_defect
    q = np.sqrt(-w[0]) * V[:, 0]
    Q = sum(q[a] * basis[a] for a in range(n))
    # canonical sign: leading diagonal entry nonnegative
    diag = np.real(np.diag(Q))
    lead = np.argmax(np.abs(diag))
    if diag[lead] < 0:
        Q = -Q
    resid = float(np.abs(R + np.kron(Q, Q)).max())
    return Q, resid, swap_defect


def check_qec_condition(code, model: NoiseModel, tol: float = DEFAULT_TOL
                        ) -> QecConditionReport:
    """Verify the two-site reduced-state structure of the codewords: cross
    blocks vanish and each diagonal block equals the product of single-site
    reduced states up to an admissible -Q (x) Q correction.

    Q must be traceless and orthogonal to every jump operator; inadmissible
    or non-product corrections are reported as near-misses with residuals.
    """
    d = model.d
    accept = 10 * max(tol, DEFAULT_TOL)
    pair_residuals: dict = {}
    q_ops: list = [None, None]
    satisfied = True
    max_resid = 0.0

    if code.m < 2:
        # no probe pairs: the condition is vacuous
        zero = np.zeros((d, d), dtype=complex)
        return QecConditionReport(satisfied=True, max_residual=0.0,
                                  q_ops=(zero, zero), pair_residuals={},
                                  details="single probe: no pairs to check")

    if isinstance(code, StructuredCode):
        pairs = [(0, 1)] if code.is_site_symmetric else [
            (a, b) for a in range(code.m) for b in range(a + 1, code.m)]
        get_pair = lambda k, a, b: code.two_local_rdm(k, a, b)
        get_site = lambda k, s: code.one_local_rdm(k)
        cross_zero = True       # disjoint letter blocks or tag qubit
    else:
        pairs = [(a, b) for a in range(code.m) for b in range(a + 1, code.m)]
        get_pair = lambda k, a, b: _dense_pair_op(code, k, k, a, b)
        get_site = lambda k, s: _dense_site_rdm(code, k, s)
        cross_zero = False

    for (a, b) in pairs:
        if not cross_zero:
            T01 = _dense_pair_op(code, 0, 1, a, b)
            resid = float(np.abs(T01).max())
            pair_residuals[("cross", a, b)] = resid
            max_resid = max(max_resid, resid)
            if resid > accept:
                satisfied = False
        for k in (0, 1):
            R = get_pair(k, a, b) - np.kron(get_site(k, a), get_site(k, b))
            cand = [float(np.abs(R).max())]          # Q = 0 explanation
            Q, resid_q, swap_defect = _recover_q(R, d, accept)
            if Q is not None and swap_defect <= accept:
                admissible = abs(np.trace(Q)) <= accept and all(
                    abs(complex(np.trace(Q @ L))) <= accept for L in model.lindblads)
                if admissible:
                    cand.append(resid_q)
                    if resid_q <= accept and q_ops[k] is None:
                        q_ops[k] = Q
            best = min(cand)
            pair_residuals[(k, a, b)] = best
            max_resid = max(max_resid, best)
            if best > accept:
                satisfied = False
    if satisfied:
        for k in (0, 1):
            if q_ops[k] is None:
                q_ops[k] = np.zeros((d, d), dtype=complex)
    return QecConditionReport(satisfied=satisfied, max_residual=max_resid,
                              q_ops=(q_ops[0], q_ops[1]),
                              pair_residuals=pair_residuals)


def check_L0_perp_L1(code, model: NoiseModel, tol: float = 1e-8
                     ) -> tuple[bool, float]:
    """Max overlap between the two codeword error spaces
    span{|k_L>, L_i at site l |k_L>}."""
    if isinstance(code, StructuredCode):
        # disjoint letter blocks (one- and two-letter changes cannot map
        # between blocks for m >= 3) or an orthogonal tag qubit
        if code.has_tag_qubit or code.m >= 3:
            return True, 0.0
        code = materialize(code)
    dims = code.dims
    side0 = [code.ket0]
    side1 = [code.ket1]
    for site in range(code.m):
        for L in model.lindblads:
            side0.append(site_operator(code.ket0, L, site, dims))
            side1.append(site_operator(code.ket1, L, site, dims))
    worst = 0.0
    for u in side0:
        for v in side1:
            worst = max(worst, abs(np.vdot(u, v)))
    return worst <= tol, float(worst)
