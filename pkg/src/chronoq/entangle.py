"""Entanglement detection and measures.

Schmidt decomposition, PPT criterion, concurrence, fidelity / trace distance,
entanglement witnesses, and CHSH evaluation with deterministic settings
optimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    TOL_ALG,
    DensityOperator,
    QcoreError,
    StateVector,
    bell_state,
    ghz_state,
    is_hermitian,
    partial_trace,
)

SQRT2 = math.sqrt(2.0)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class EntangleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Schmidt decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray  # descending positive reals, sum of squares = 1
    left_basis: list
    right_basis: list

    @property
    def rank(self) -> int:
        return int(np.sum(self.coefficients > 1e-9))

    def reconstruct(self) -> StateVector:
        dim_a = self.left_basis[0].dim
        dim_b = self.right_basis[0].dim
        amp = np.zeros(dim_a * dim_b, dtype=np.complex128)
        for lam, a, b in zip(self.coefficients, self.left_basis, self.right_basis):
            amp += lam * np.kron(a.amplitudes, b.amplitudes)
        return StateVector(amp, normalize=True)


def schmidt(state: StateVector, dims: Sequence[int]) -> SchmidtDecomposition:
    """Schmidt decomposition of a bipartite pure state."""
    if len(dims) != 2 or dims[0] * dims[1] != state.dim:
        raise EntangleError("dims must be a bipartition of the state")
    coeff = state.amplitudes.reshape(dims[0], dims[1])
    u, s, vh = np.linalg.svd(coeff)
    order = np.argsort(-s)
    s = s[order]
    keep = s > 1e-12
    s = s[keep]
    left = [StateVector(u[:, i], normalize=True) for i in order[keep]]
    right = [StateVector(vh[i, :], normalize=True) for i in order[keep]]
    return SchmidtDecomposition(s, left, right)


# ---------------------------------------------------------------------------
# Werner states and the PPT criterion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WernerState:
    """F * |psi-><psi-| + (1-F)/3 * (sum of the other three Bell projectors)."""

    F: float

    def __post_init__(self):
        if not 0.0 <= self.F <= 1.0:
            raise EntangleError("F must lie in [0, 1]")

    @property
    def rho(self) -> DensityOperator:
        singlet = bell_state("psi-").to_density().matrix
        rest = sum(
            bell_state(lbl).to_density().matrix for lbl in ("phi+", "phi-", "psi+")
        )
        return DensityOperator(self.F * singlet + (1.0 - self.F) / 3.0 * rest)


def partial_transpose(rho: DensityOperator, dims: Sequence[int], side: int = 1) -> np.ndarray:
    """Partial transpose of a bipartite operator on subsystem ``side``."""
    if len(dims) != 2 or dims[0] * dims[1] != rho.dim:
        raise EntangleError("dims must be a bipartition of the operator")
    if side not in (0, 1):
        raise EntangleError("side must be 0 or 1")
    tensor = rho.matrix.reshape(dims[0], dims[1], dims[0], dims[1])
    axes = (2, 1, 0, 3) if side == 0 else (0, 3, 2, 1)
    return np.transpose(tensor, axes).reshape(rho.dim, rho.dim)


def ppt_min_eigenvalue(rho: DensityOperator, dims: Sequence[int], side: int = 1) -> float:
    """Minimum eigenvalue of the partial transpose; negative certifies entanglement."""
    pt = partial_transpose(rho, dims, side)
    return float(np.linalg.eigvalsh((pt + pt.conj().T) / 2.0).min())


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


def concurrence(state: StateVector, dims: Sequence[int]) -> float:
    """sqrt(2 (1 - tr rho_A^2)) for a bipartite pure state."""
    if len(dims) != 2 or dims[0] * dims[1] != state.dim:
        raise EntangleError("dims must be a bipartition of the state")
    from .qcore import purity

    rho_a = partial_trace(state.to_density(), list(dims), keep=[0])
    value = 2.0 * (1.0 - purity(rho_a))
    return float(math.sqrt(max(value, 0.0)))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    eigs, vecs = np.linalg.eigh((m + m.conj().T) / 2.0)
    eigs = np.clip(eigs, 0.0, None)
    return (vecs * np.sqrt(eigs)) @ vecs.conj().T


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; reduces to |<psi|phi>|^2 on pure states."""
    if rho.dim != sigma.dim:
        raise EntangleError("dimension mismatch")
    sr = _psd_sqrt(rho.matrix)
    inner = _psd_sqrt(sr @ sigma.matrix @ sr)
    val = float(np.real(np.trace(inner)))
    return float(min(max(val, 0.0), 1.0) ** 2)


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """D(rho, sigma) = (1/2) tr |rho - sigma|."""
    if rho.dim != sigma.dim:
        raise EntangleError("dimension mismatch")
    diff = rho.matrix - sigma.matrix
    eigs = np.linalg.eigvalsh((diff + diff.conj().T) / 2.0)
    return float(0.5 * np.sum(np.abs(eigs)))


def state_distance(rho: DensityOperator, sigma: DensityOperator) -> dict:
    return {"fidelity": fidelity(rho, sigma), "trace_distance": trace_distance(rho, sigma)}


# ---------------------------------------------------------------------------
# CHSH
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObservableSettings:
    """Four dichotomic (+-1) observables: A1, A2 for Alice, B1, B2 for Bob."""

    A1: np.ndarray
    A2: np.ndarray
    B1: np.ndarray
    B2: np.ndarray

    def __post_init__(self):
        for name in ("A1", "A2", "B1", "B2"):
            m = np.asarray(getattr(self, name), dtype=np.complex128)
            if m.shape != (2, 2) or not is_hermitian(m, 1e-8):
                raise EntangleError(f"{name} must be a 2x2 Hermitian matrix")
            if np.max(np.abs(m @ m - np.eye(2))) > 1e-8:
                raise EntangleError(f"{name} must square to the identity")
            object.__setattr__(self, name, m)


def canonical_chsh_settings() -> ObservableSettings:
    """The settings that reach 2*sqrt(2) on the singlet state."""
    return ObservableSettings(
        A1=PAULI_Z,
        A2=PAULI_X,
        B1=(-PAULI_Z - PAULI_X) / SQRT2,
        B2=(PAULI_Z - PAULI_X) / SQRT2,
    )


def correlator(rho: DensityOperator, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.trace(rho.matrix @ np.kron(a, b))))


def chsh_value(rho: DensityOperator, s: ObservableSettings) -> float:
    """<A1 B1> + <A2 B1> + <A2 B2> - <A1 B2>."""
    if rho.dim != 4:
        raise EntangleError("CHSH requires a 2-qubit state")
    return (
        correlator(rho, s.A1, s.B1)
        + correlator(rho, s.A2, s.B1)
        + correlator(rho, s.A2, s.B2)
        - correlator(rho, s.A1, s.B2)
    )


def correlation_matrix(rho: DensityOperator) -> np.ndarray:
    """T_ij = tr(rho sigma_i (x) sigma_j) over the Pauli triple (x, y, z)."""
    if rho.dim != 4:
        raise EntangleError("requires a 2-qubit state")
    return np.array(
        [[correlator(rho, si, sj) for sj in PAULIS] for si in PAULIS], dtype=float
    )


def _axis_observable(axis: np.ndarray) -> np.ndarray:
    return axis[0] * PAULI_X + axis[1] * PAULI_Y + axis[2] * PAULI_Z


def chsh_axis_optimize(t: np.ndarray, grid: int = 24, refine_steps: int = 40) -> dict:
    """Deterministic maximization of a1.T.b1 + a2.T.b1 + a2.T.b2 - a1.T.b2
    over unit axes, for a given 3x3 correlation matrix t.

    The search is restricted to the plane spanned by the top two right/left
    singular directions of the correlation matrix (where the optimum lives),
    then swept on a coarse angle grid and refined by coordinate descent.
    """
    t = np.asarray(t, dtype=float)
    u, s, vh = np.linalg.svd(t)
    # Alice axes live in span(u[:,0], u[:,1]); Bob axes in span(vh[0], vh[1]).
    ua, va = u[:, 0], u[:, 1]
    ub, vb = vh[0, :], vh[1, :]

    def value(angles: np.ndarray) -> float:
        a1, a2, b1, b2 = angles
        axes_a = [math.cos(a1) * ua + math.sin(a1) * va,
                  math.cos(a2) * ua + math.sin(a2) * va]
        axes_b = [math.cos(b1) * ub + math.sin(b1) * vb,
                  math.cos(b2) * ub + math.sin(b2) * vb]
        e = [[float(axes_a[i] @ t @ axes_b[j]) for j in range(2)] for i in range(2)]
        return e[0][0] + e[1][0] + e[1][1] - e[0][1]

    # Coarse grid, exploiting separability of the CHSH sum: with
    # g(alpha, beta) = a(alpha) . T . b(beta) the objective is
    # g(a1,b1) + g(a2,b1) + g(a2,b2) - g(a1,b2), so for each (b1,b2) the
    # optimal a1 and a2 decouple.
    thetas = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    m = np.array([[ua @ t @ ub, ua @ t @ vb], [va @ t @ ub, va @ t @ vb]])
    alice = np.stack([cos_t, sin_t], axis=1)  # (grid, 2)
    bob = np.stack([cos_t, sin_t], axis=1)
    g = alice @ m @ bob.T  # g[i, j] = g(theta_i, theta_j)
    best_val = -np.inf
    best_idx = (0, 0, 0, 0)
    for j1 in range(grid):
        for j2 in range(grid):
            i2 = int(np.argmax(g[:, j1] + g[:, j2]))
            i1 = int(np.argmax(g[:, j1] - g[:, j2]))
            v = g[i1, j1] - g[i1, j2] + g[i2, j1] + g[i2, j2]
            if v > best_val:
                best_val = v
                best_idx = (i1, i2, j1, j2)
    angles = np.array([thetas[k] for k in best_idx])

    # Deterministic coordinate refinement.
    step = 2.0 * math.pi / grid
    current = value(angles)
    for _ in range(refine_steps):
        improved = False
        for i in range(4):
            for delta in (step, -step):
                trial = angles.copy()
                trial[i] += delta
                v = value(trial)
                if v > current + 1e-15:
                    angles, current = trial, v
                    improved = True
        if not improved:
            step /= 2.0
            if step < 1e-12:
                break

    a1, a2, b1, b2 = angles
    axes = {
        "A1": math.cos(a1) * ua + math.sin(a1) * va,
        "A2": math.cos(a2) * ua + math.sin(a2) * va,
        "B1": math.cos(b1) * ub + math.sin(b1) * vb,
        "B2": math.cos(b2) * ub + math.sin(b2) * vb,
    }
    return {"value": current, "axes": axes}


def chsh_optimize(rho: DensityOperator, grid: int = 24, refine_steps: int = 40) -> dict:
    """Deterministic CHSH maximization over observable settings for a 2-qubit state."""
    result = chsh_axis_optimize(correlation_matrix(rho), grid, refine_steps)
    axes = result["axes"]
    settings = ObservableSettings(
        A1=_axis_observable(axes["A1"]),
        A2=_axis_observable(axes["A2"]),
        B1=_axis_observable(axes["B1"]),
        B2=_axis_observable(axes["B2"]),
    )
    return {"value": result["value"], "settings": settings}


def werner_chsh_crossing(tol: float = 1e-6) -> float:
    """F where the optimized Werner CHSH value crosses 2 (bisection)."""
    def gap(f: float) -> float:
        return chsh_optimize(WernerState(f).rho, grid=12)["value"] - 2.0

    lo, hi = 0.5, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if gap(mid) > 0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0


# ---------------------------------------------------------------------------
# Witnesses
# ---------------------------------------------------------------------------


def ghz_witness(n: int = 3) -> np.ndarray:
    """(3/4) I - |GHZ_n><GHZ_n|; negative expectation certifies the GHZ class."""
    g = ghz_state(n)
    dim = g.dim
    return 0.75 * np.eye(dim, dtype=np.complex128) - np.outer(
        g.amplitudes, g.amplitudes.conj()
    )


def witness_value(w: np.ndarray, rho: DensityOperator) -> float:
    w = np.asarray(w, dtype=np.complex128)
    if not is_hermitian(w, 1e-8):
        raise QcoreError("witness must be Hermitian")
    if w.shape[0] != rho.dim:
        raise EntangleError("dimension mismatch")
    return float(np.real(np.trace(w @ rho.matrix)))
