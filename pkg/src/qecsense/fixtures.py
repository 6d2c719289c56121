"""Bundled noise models and single-probe data used by the CLI and the test
suite.

The generic d=3 model is built so that the extremal pair is mixed on a
two-level block with non-dyadic weights and the jump operators keep nonzero
first and second moments after gauge fixing; its span distance is 0.45 by
construction (the extremal pair certifies it exactly).
"""

from __future__ import annotations

import numpy as np

from .codes import SqlSingleProbe
from .noise import NoiseModel

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def qutrit_model() -> NoiseModel:
    """Three-level probe with a single lowering-type jump; the span distance
    is exactly 1/2 with extremal states (|0><0|+|2><2|)/2 and |1><1|."""
    H = np.array([[1, 0, 0],
                  [0, -1, -1],
                  [0, -1, -1]], dtype=complex)
    L = np.array([[0, 1, 1],
                  [0, 0, 1],
                  [0, 0, 0]], dtype=complex)
    return NoiseModel(d=3, H=H, lindblads=(L,), label="qutrit")


def qubit_zx_model() -> NoiseModel:
    """Pauli-Z signal with bit-flip noise; the repetition code is exact."""
    return NoiseModel(d=2, H=PAULI_Z.copy(), lindblads=(PAULI_X.copy(),),
                      label="qubit-zx")


def dephasing_qubit_model(gamma: float = 1.0) -> NoiseModel:
    """Pauli-Z signal with parallel dephasing: the Hamiltonian stays inside
    the span, so only the linear-scaling regime is reachable."""
    return NoiseModel(d=2, H=PAULI_Z / 2,
                      lindblads=(np.sqrt(gamma / 2) * PAULI_Z,),
                      label=f"dephasing-qubit(gamma={gamma})")


# frozen inputs of the generic model construction
_GEN_V0 = np.array([+2.571669 - 0.484357j, -1.007643 - 0.029601j,
                    -0.464508 - 0.978679j, -0.839836 - 0.957325j,
                    +0.784328 - 0.475623j, -1.148099 - 2.100440j])
_GEN_V2 = np.array([-1.445478 + 0.798438j, -0.413034 + 0.555866j,
                    +0.148231 - 0.078748j, -0.185760 - 0.887370j,
                    -1.773969 + 0.631216j, -0.463786 - 0.578929j])
_GEN_W1 = np.array([-0.643087 + 0.121099j, -0.441202 + 0.637586j,
                    +0.796590 - 0.263635j])
_GEN_W2 = np.array([+0.515982 + 1.367493j, -0.330827 + 0.421932j,
                    -0.086585 - 0.275644j])
GENERIC_LAMBDA = 0.37
GENERIC_VALUE = 0.45


def generic_hl_model(lam: float = GENERIC_LAMBDA,
                     value: float = GENERIC_VALUE) -> NoiseModel:
    """d=3, r=2 model with a mixed two-level extremal block.

    Construction: the extremal-pair orthogonality conditions reduce to a Gram
    equality between the weighted outer columns and the middle column of each
    jump operator, solved exactly by a 6x3 isometry whose middle column is
    pinned to (sqrt(lam), 0, 0, 0, 0, sqrt(1-lam)).  The Hamiltonian is the
    certified extremal direction plus an in-span mixture, so the span
    distance equals ``value`` exactly.
    """
    s, t = np.sqrt(lam), np.sqrt(1 - lam)
    v1 = np.zeros(6, dtype=complex)
    v1[0], v1[5] = s, t

    def orth(x, basis):
        x = np.asarray(x, dtype=complex).copy()
        for b in basis:
            x -= b * np.vdot(b, x)
        return x / np.linalg.norm(x)

    v0 = orth(_GEN_V0, [v1])
    v2 = orth(_GEN_V2, [v1, v0])
    V = np.column_stack([v0, v1, v2])

    lindblads = []
    for w in (_GEN_W1, _GEN_W2):
        u = V @ w
        L = np.zeros((3, 3), dtype=complex)
        L[:, 0] = u[0:3] / s
        L[:, 1] = w
        L[:, 2] = u[3:6] / t
        lindblads.append(L)
    L1, L2 = lindblads

    S_mix = (0.3 * (L1 + L1.conj().T) + 0.15j * (L2 - L2.conj().T)
             + 0.1 * (L1.conj().T @ L2 + L2.conj().T @ L1))
    H = (value * np.diag([1.0, -1.0, 1.0]) + 0.25 * np.eye(3)
         + (S_mix + S_mix.conj().T) / 2)
    return NoiseModel(d=3, H=H, lindblads=(L1, L2), label="generic-hl")


def sql_single_probe(d: int = 2) -> SqlSingleProbe:
    """Single-probe data for the SQL constructions: strictly positive weight
    vectors and two rotated bases."""
    if d == 2:
        lam0 = np.array([0.7, 0.3])
        lam1 = np.array([0.55, 0.45])
        th = 0.4
        basis0 = np.eye(2, dtype=complex)
        basis1 = np.array([[np.cos(th), -np.sin(th)],
                           [np.sin(th), np.cos(th)]], dtype=complex)
        return SqlSingleProbe(lam0=lam0, lam1=lam1, basis0=basis0, basis1=basis1)
    if d == 3:
        lam0 = np.array([0.5, 0.3, 0.2])
        lam1 = np.array([0.4, 0.35, 0.25])
        basis0 = np.eye(3, dtype=complex)
        g = np.array([[1, 0.3, 0], [0.3, 1, -0.2], [0, -0.2, 1]], dtype=complex)
        q, _ = np.linalg.qr(g)
        return SqlSingleProbe(lam0=lam0, lam1=lam1, basis0=basis0, basis1=q)
    raise ValueError(f"no bundled single-probe data for d={d}")


BUNDLED_MODELS = {
    "qutrit": qutrit_model,
    "qubit-zx": qubit_zx_model,
    "dephasing-qubit": dephasing_qubit_model,
    "generic-hl": generic_hl_model,
}
