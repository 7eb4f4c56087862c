"""Dense complex linear algebra core: states, gates, measurement, density operators.

Conventions used throughout the package:

* Qubit ordering is big-endian: the leftmost ket factor is qubit 0, and a
  computational basis index decomposes as ``b = sum(bit_i * 2**(n-1-i))``.
* Tolerances: ``TOL_ALG`` for algebraic identities, ``TOL_NORM`` for
  normalization checks.
* States and operators are immutable values; every operation returns a new
  object.  The only mutable object is :class:`RandomSource`, which owns a
  seeded pseudo-random stream.
* Two state vectors are considered equal when they agree up to a global
  phase (see :meth:`StateVector.equals_up_to_phase`); exact amplitude
  comparison is available separately via :meth:`StateVector.allclose`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

TOL_ALG = 1e-9
TOL_NORM = 1e-9
MAX_QUBITS = 20

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class QcoreError(ValueError):
    """Raised on contract violations in the simulation core."""


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------


class RandomSource:
    """Seeded pseudo-random stream.

    Identical ``(seed, stream)`` pairs always produce identical draw
    sequences.  Parallel Monte Carlo should use one source per trial via
    :meth:`spawn`.
    """

    def __init__(self, seed: int = 42, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed & (2**64 - 1), self.stream]))
        )

    def spawn(self, stream: int) -> "RandomSource":
        """A fresh, independent source derived from the same master seed."""
        return RandomSource(self.seed, stream)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)

    def choice_index(self, probabilities: Sequence[float]) -> int:
        """Sample an index from a probability vector."""
        p = np.asarray(probabilities, dtype=float)
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if total <= 0:
            raise QcoreError("all probabilities are zero")
        return int(self._gen.choice(len(p), p=p / total))


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


def _as_complex_vector(amplitudes) -> np.ndarray:
    vec = np.ascontiguousarray(amplitudes, dtype=np.complex128).reshape(-1)
    if not np.all(np.isfinite(vec.view(np.float64))):
        raise QcoreError("amplitudes must be finite")
    return vec


class StateVector:
    """A normalized complex amplitude vector."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes, *, normalize: bool = False):
        vec = _as_complex_vector(amplitudes)
        if vec.shape[0] > (1 << MAX_QUBITS):
            raise QcoreError(f"register exceeds the {MAX_QUBITS}-qubit cap")
        norm = float(np.linalg.norm(vec))
        if normalize:
            if norm <= TOL_ALG:
                raise QcoreError("cannot normalize a (near-)zero vector")
            vec = vec / norm
        elif abs(norm - 1.0) > 1e-6:
            raise QcoreError(f"state vector not normalized (norm={norm!r})")
        elif abs(norm - 1.0) > TOL_NORM:
            # Small numerical drift: renormalize silently.
            vec = vec / norm
        vec.setflags(write=False)
        self.amplitudes = vec

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def num_qubits(self) -> int:
        n = self.dim.bit_length() - 1
        if 1 << n != self.dim:
            raise QcoreError("dimension is not a power of two")
        return n

    # -- constructors --

    @classmethod
    def basis(cls, dim: int, index: int) -> "StateVector":
        vec = np.zeros(dim, dtype=np.complex128)
        vec[index] = 1.0
        return cls(vec)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "StateVector":
        n = len(bits)
        index = 0
        for b in bits:
            index = (index << 1) | (int(b) & 1)
        return cls.basis(1 << n, index)

    # -- algebra --

    def tensor(self, other: "StateVector") -> "StateVector":
        return tensor_product(self, other)

    def to_density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def apply(self, op: np.ndarray, targets: Sequence[int] | None = None) -> "StateVector":
        """Apply a unitary to the whole register or to the given qubits."""
        mat = np.asarray(op, dtype=np.complex128)
        if targets is None:
            if mat.shape != (self.dim, self.dim):
                raise QcoreError("operator dimension mismatch")
            return StateVector(mat @ self.amplitudes, normalize=True)
        return StateVector(
            _apply_to_targets(self.amplitudes, self.num_qubits, mat, list(targets)),
            normalize=True,
        )

    def equals_up_to_phase(self, other: "StateVector", tol: float = 1e-8) -> bool:
        """Global-phase-insensitive equality predicate."""
        if self.dim != other.dim:
            return False
        overlap = abs(np.vdot(self.amplitudes, other.amplitudes))
        return bool(abs(overlap - 1.0) <= tol)

    def allclose(self, other: "StateVector", tol: float = TOL_ALG) -> bool:
        """Exact-amplitude comparison (phase-sensitive)."""
        return self.dim == other.dim and bool(
            np.max(np.abs(self.amplitudes - other.amplitudes)) <= tol
        )

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"StateVector(dim={self.dim})"


def _apply_to_targets(vec: np.ndarray, n: int, mat: np.ndarray, targets: list[int]) -> np.ndarray:
    k = len(targets)
    if mat.shape != (1 << k, 1 << k):
        raise QcoreError("operator shape does not match target count")
    if any(t < 0 or t >= n for t in targets) or len(set(targets)) != k:
        raise QcoreError("invalid target qubits")
    psi = vec.reshape([2] * n)
    rest = [i for i in range(n) if i not in targets]
    psi = np.transpose(psi, targets + rest)
    psi = psi.reshape(1 << k, -1)
    psi = mat @ psi
    psi = psi.reshape([2] * n)
    inverse = np.argsort(targets + rest)
    return np.transpose(psi, inverse).reshape(-1)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def adjoint(m: np.ndarray) -> np.ndarray:
    """Hermitian conjugate."""
    return np.asarray(m, dtype=np.complex128).conj().T


def is_unitary(m: np.ndarray, tol: float = TOL_ALG) -> bool:
    m = np.asarray(m, dtype=np.complex128)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def is_hermitian(m: np.ndarray, tol: float = TOL_ALG) -> bool:
    m = np.asarray(m, dtype=np.complex128)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_psd(m: np.ndarray, tol: float = TOL_ALG) -> bool:
    m = np.asarray(m, dtype=np.complex128)
    if not is_hermitian(m, max(tol, 1e-8)):
        return False
    eigs = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
    return bool(eigs.min() >= -tol)


I2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = _INV_SQRT2 * np.array([[1, 1], [1, -1]], dtype=np.complex128)
S_GATE = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
T_GATE = np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=np.complex128)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)

_ROTATION_AXES = {"Rx": PAULI_X, "Ry": PAULI_Y, "Rz": PAULI_Z}
_FIXED_GATES = {
    "I": I2,
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "H": HADAMARD,
    "S": S_GATE,
    "T": T_GATE,
    "CNOT": CNOT,
}


def rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """``cos(angle/2) I - i sin(angle/2) sigma`` for a Pauli axis."""
    return math.cos(angle / 2) * I2 - 1j * math.sin(angle / 2) * np.asarray(axis)


def standard_gate(name: str, angle: float | None = None) -> np.ndarray:
    """Return a standard gate matrix by name (I, X, Y, Z, H, S, T, CNOT, Rx, Ry, Rz)."""
    if name in _ROTATION_AXES:
        if angle is None:
            raise QcoreError(f"rotation gate {name!r} requires an angle")
        return rotation(_ROTATION_AXES[name], float(angle))
    if name not in _FIXED_GATES:
        raise QcoreError(f"unknown gate {name!r}")
    if angle is not None:
        raise QcoreError(f"gate {name!r} does not take an angle")
    return _FIXED_GATES[name].copy()


def tensor_product(
    a: Union[StateVector, np.ndarray], b: Union[StateVector, np.ndarray]
) -> Union[StateVector, np.ndarray]:
    """Kronecker product of two states or two operators (index 0 = leftmost factor)."""
    if isinstance(a, StateVector) != isinstance(b, StateVector):
        raise QcoreError("tensor_product operands must be the same kind")
    if isinstance(a, StateVector):
        dim = a.dim * b.dim
        if dim > (1 << MAX_QUBITS):
            raise QcoreError(f"register would exceed {MAX_QUBITS} qubits")
        return StateVector(np.kron(a.amplitudes, b.amplitudes))
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape[0] * b.shape[0] > (1 << MAX_QUBITS):
        raise QcoreError(f"operator would exceed {MAX_QUBITS} qubits")
    return np.kron(a, b)


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = None
    for m in mats:
        out = np.asarray(m, dtype=np.complex128) if out is None else np.kron(out, m)
    if out is None:
        raise QcoreError("empty tensor product")
    return out


# ---------------------------------------------------------------------------
# Standard states
# ---------------------------------------------------------------------------

_BELL_ALIASES = {
    "phi+": "phi+", "Φ+": "phi+", "phi_plus": "phi+", "00": "phi+",
    "phi-": "phi-", "Φ-": "phi-", "phi_minus": "phi-", "10": "phi-",
    "psi+": "psi+", "Ψ+": "psi+", "psi_plus": "psi+", "01": "psi+",
    "psi-": "psi-", "Ψ-": "psi-", "psi_minus": "psi-", "11": "psi-",
}

BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")


def bell_state(label: str) -> StateVector:
    """One of the four Bell states phi+/phi-/psi+/psi-."""
    key = _BELL_ALIASES.get(label)
    if key is None:
        raise QcoreError(f"unknown Bell label {label!r}")
    amp = np.zeros(4, dtype=np.complex128)
    if key == "phi+":
        amp[0] = amp[3] = _INV_SQRT2
    elif key == "phi-":
        amp[0], amp[3] = _INV_SQRT2, -_INV_SQRT2
    elif key == "psi+":
        amp[1] = amp[2] = _INV_SQRT2
    else:
        amp[1], amp[2] = _INV_SQRT2, -_INV_SQRT2
    return StateVector(amp)


def ghz_state(n: int) -> StateVector:
    """(|0...0> + |1...1>)/sqrt(2) on n qubits."""
    if n < 2:
        raise QcoreError("GHZ state needs at least 2 qubits")
    if n > MAX_QUBITS:
        raise QcoreError(f"register would exceed {MAX_QUBITS} qubits")
    amp = np.zeros(1 << n, dtype=np.complex128)
    amp[0] = amp[-1] = _INV_SQRT2
    return StateVector(amp)


def computational_basis(dim: int) -> list[StateVector]:
    return [StateVector.basis(dim, i) for i in range(dim)]


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementOutcome:
    index: int
    probability: float
    post_state: "StateVector"


def _check_orthonormal(basis: Sequence[StateVector], dim: int) -> np.ndarray:
    mat = np.stack([b.amplitudes for b in basis])  # rows are basis vectors
    if mat.shape != (dim, dim):
        raise QcoreError("basis must be complete")
    gram = mat.conj() @ mat.T
    if np.max(np.abs(gram - np.eye(dim))) > 1e-8:
        raise QcoreError("basis is not orthonormal")
    return mat


def born_distribution(state: StateVector, basis: Sequence[StateVector]) -> np.ndarray:
    """Born-rule probabilities ``p(m) = |<m|psi>|^2`` over an orthonormal basis."""
    mat = _check_orthonormal(basis, state.dim)
    amps = mat.conj() @ state.amplitudes
    probs = np.abs(amps) ** 2
    total = probs.sum()
    if abs(total - 1.0) > 1e-6:
        raise QcoreError("probabilities do not sum to 1")
    return probs / total


def measure(
    state: StateVector, basis: Sequence[StateVector], rng: RandomSource
) -> MeasurementOutcome:
    """Projective measurement in a full orthonormal basis."""
    probs = born_distribution(state, basis)
    idx = rng.choice_index(probs)
    return MeasurementOutcome(idx, float(probs[idx]), basis[idx])


def measure_qubit(
    state: StateVector,
    qubit: int,
    rng: RandomSource,
    basis_1q: np.ndarray | None = None,
    *,
    forced_outcome: int | None = None,
) -> tuple[int, float, StateVector]:
    """Measure one qubit of a register.

    ``basis_1q`` is a 2x2 matrix whose *rows* are the measurement bras;
    default is the computational (Z) basis.  Returns
    ``(outcome, probability, post_state)`` with the full register kept.
    Pass ``forced_outcome`` to post-select a branch instead of sampling.
    """
    n = state.num_qubits
    vec = state.amplitudes
    if basis_1q is not None:
        u = np.asarray(basis_1q, dtype=np.complex128)
        if not is_unitary(u, 1e-8):
            raise QcoreError("measurement basis is not orthonormal")
        vec = _apply_to_targets(vec, n, u.conj(), [qubit])
    psi = vec.reshape([2] * n)
    moved = np.moveaxis(psi, qubit, 0)
    p0 = float(np.sum(np.abs(moved[0]) ** 2))
    p1 = float(np.sum(np.abs(moved[1]) ** 2))
    total = p0 + p1
    if total <= TOL_ALG:
        raise QcoreError("degenerate measurement: all probabilities zero")
    if abs(total - 1.0) > 1e-6:
        raise QcoreError("state norm drifted beyond tolerance")
    p0, p1 = p0 / total, p1 / total
    if forced_outcome is None:
        outcome = 0 if rng.uniform() < p0 else 1
    else:
        outcome = int(forced_outcome)
    prob = p0 if outcome == 0 else p1
    if prob <= TOL_ALG:
        raise QcoreError("post-selected branch has zero probability")
    collapsed = np.zeros_like(moved)
    collapsed[outcome] = moved[outcome]
    post = np.moveaxis(collapsed, 0, qubit).reshape(-1)
    post = post / np.linalg.norm(post)
    if basis_1q is not None:
        # Rotate back to the computational frame.
        post = _apply_to_targets(post, n, np.asarray(basis_1q).T, [qubit])
    return outcome, prob, StateVector(post, normalize=True)


# ---------------------------------------------------------------------------
# Density operators
# ---------------------------------------------------------------------------


class DensityOperator:
    """Hermitian, unit-trace, positive-semidefinite matrix."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, *, validate: bool = True):
        mat = np.asarray(matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise QcoreError("density operator must be square")
        if validate:
            if not is_hermitian(mat, 1e-8):
                raise QcoreError("density operator must be Hermitian")
            tr = complex(np.trace(mat)).real
            if abs(tr - 1.0) > 1e-8:
                raise QcoreError(f"density operator must have unit trace (got {tr!r})")
            sym = (mat + mat.conj().T) / 2.0
            if np.linalg.eigvalsh(sym).min() < -1e-8:
                raise QcoreError("density operator must be positive semidefinite")
            mat = sym / tr
        mat.setflags(write=False)
        self.matrix = mat

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityOperator":
        return state.to_density()

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        return DensityOperator(np.kron(self.matrix, other.matrix))

    def evolve(self, u: np.ndarray) -> "DensityOperator":
        u = np.asarray(u, dtype=np.complex128)
        return DensityOperator(u @ self.matrix @ u.conj().T)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"DensityOperator(dim={self.dim})"


def partial_trace(
    rho: DensityOperator, dims: Sequence[int], keep: Sequence[int]
) -> DensityOperator:
    """Trace out all subsystems not listed in ``keep``."""
    dims = list(dims)
    if int(np.prod(dims)) != rho.dim:
        raise QcoreError("subsystem dimensions inconsistent with operator")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise QcoreError("keep indices out of range")
    n = len(dims)
    tensor = rho.matrix.reshape(dims + dims)
    traced = tensor
    # Trace the discarded subsystems from highest index down so axis
    # positions stay valid.
    removed = 0
    for idx in range(n - 1, -1, -1):
        if idx in keep:
            continue
        m = n - removed
        traced = np.trace(traced, axis1=idx, axis2=idx + m)
        removed += 1
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return DensityOperator(traced.reshape(kept_dim, kept_dim))


def purity(rho: DensityOperator) -> float:
    """tr(rho^2); 1 for pure states, 1/d for maximally mixed."""
    return float(np.real(np.trace(rho.matrix @ rho.matrix)))
