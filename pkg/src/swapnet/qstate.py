"""Dense statevector primitives: registers, unitaries, measurement.

Conventions used everywhere in this package:

* Qubit ``q`` is the least significant bit ``q`` of a basis index, so the
  amplitude of ``|b_{n-1} ... b_1 b_0>`` sits at index ``sum_q b_q * 2**q``.
* A multi-qubit operator given as a ``2**m x 2**m`` matrix acts on an ordered
  target list; ``targets[i]`` corresponds to bit ``i`` of the matrix index.
* States are kept normalized; every public operation that returns a state
  checks the norm to ``NORM_ATOL``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ImpossibleOutcomeError, SizeLimitError

MAX_QUBITS = 24
NORM_ATOL = 1e-10
UNITARY_ATOL = 1e-10
OUTCOME_PROB_FLOOR = 1e-12


def _frozen_complex(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of ``num_qubits`` qubits."""

    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.num_qubits < 0:
            raise ValueError("num_qubits must be non-negative")
        if self.num_qubits > MAX_QUBITS:
            raise SizeLimitError(
                f"{self.num_qubits} qubits exceeds the {MAX_QUBITS}-qubit ceiling"
            )
        amps = _frozen_complex(self.amplitudes)
        if amps.size != 2**self.num_qubits:
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got {amps.size}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {NORM_ATOL}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, num_qubits: int, index: int = 0) -> StateVector:
        """Computational basis state ``|index>``."""
        if not 0 <= index < 2**num_qubits:
            raise ValueError(f"basis index {index} out of range for {num_qubits} qubits")
        amps = np.zeros(2**num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> StateVector:
        """Build a state from an un-normalized amplitude vector."""
        arr = np.asarray(amplitudes, dtype=np.complex128).ravel()
        n = int(arr.size).bit_length() - 1
        if arr.size != 2**n:
            raise ValueError(f"amplitude count {arr.size} is not a power of two")
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(n, arr / norm)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class QubitPartition:
    """Bipartition of qubits ``0..n-1`` into an A side and a B side."""

    set_a: tuple[int, ...]
    set_b: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "set_a", tuple(int(q) for q in self.set_a))
        object.__setattr__(self, "set_b", tuple(int(q) for q in self.set_b))
        if not self.set_a or not self.set_b:
            raise ValueError("both sides of the partition must be non-empty")
        if list(self.set_a) != sorted(self.set_a) or list(self.set_b) != sorted(self.set_b):
            raise ValueError("partition sides must be sorted ascending")
        n = self.num_qubits
        if sorted(self.set_a + self.set_b) != list(range(n)):
            raise ValueError("partition sides must be disjoint and cover 0..n-1")

    @classmethod
    def leading(cls, num_qubits: int, n_a: int) -> QubitPartition:
        """The first ``n_a`` qubits on side A, the rest on side B."""
        if not 0 < n_a < num_qubits:
            raise ValueError("n_a must split the register into two non-empty sides")
        return cls(tuple(range(n_a)), tuple(range(n_a, num_qubits)))

    @property
    def n_a(self) -> int:
        return len(self.set_a)

    @property
    def n_b(self) -> int:
        return len(self.set_b)

    @property
    def num_qubits(self) -> int:
        return len(self.set_a) + len(self.set_b)


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """Unitary operator on a power-of-two dimension, validated on creation."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("unitary must be a square matrix")
        dim = mat.shape[0]
        n = int(dim).bit_length() - 1
        if dim != 2**n or dim < 1:
            raise ValueError(f"dimension {dim} is not a power of two")
        err = np.max(np.abs(mat.conj().T @ mat - np.eye(dim)))
        if err > UNITARY_ATOL:
            raise ValueError(f"matrix deviates from unitarity by {err:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def num_qubits(self) -> int:
        return int(self.matrix.shape[0]).bit_length() - 1

    def dagger(self) -> UnitaryMatrix:
        return UnitaryMatrix(self.matrix.conj().T)


@dataclass(frozen=True)
class MeasurementRecord:
    """Result of measuring an ordered list of qubits in the computational basis.

    ``outcome`` is the basis index over the measured qubits: bit ``i`` of
    ``outcome`` is the result read from ``qubits[i]``.
    """

    qubits: tuple[int, ...]
    outcome: int
    probability: float

    def bits(self) -> str:
        """Outcome as a bit string, most significant (last listed qubit) first."""
        return format(self.outcome, f"0{len(self.qubits)}b")


def format_bits(index: int, num_bits: int) -> str:
    """Render a basis index as a bit string with qubit 0 rightmost."""
    return format(index, f"0{num_bits}b")


def _as_matrix(u) -> np.ndarray:
    if isinstance(u, UnitaryMatrix):
        return u.matrix
    return np.asarray(u, dtype=np.complex128)


def _check_targets(num_qubits: int, targets) -> list[int]:
    targets = [int(q) for q in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets {targets} contain duplicates")
    for q in targets:
        if not 0 <= q < num_qubits:
            raise ValueError(f"target {q} out of range for {num_qubits} qubits")
    return targets


def _apply_matrix(amps: np.ndarray, num_qubits: int, mat: np.ndarray,
                  targets: list[int]) -> np.ndarray:
    """Apply a ``2**m x 2**m`` matrix to the listed qubits of a dense vector."""
    m = len(targets)
    if mat.shape != (2**m, 2**m):
        raise ValueError(
            f"matrix shape {mat.shape} does not act on {m} qubits"
        )
    if targets == list(range(targets[0], targets[0] + m)):
        # Contiguous ascending targets: one reshape, no axis shuffling.
        low = targets[0]
        high = num_qubits - low - m
        if low == 0:
            out = amps.reshape(2**high, 2**m) @ mat.T
        else:
            block = amps.reshape(2**high, 2**m, 2**low)
            out = np.matmul(mat, block)
        return out.reshape(-1)
    psi = amps.reshape([2] * num_qubits)
    # Axis for matrix bit m-1-i is n-1-targets[m-1-i].
    axes = [num_qubits - 1 - t for t in reversed(targets)]
    mt = mat.reshape([2] * (2 * m))
    out = np.tensordot(mt, psi, axes=(list(range(m, 2 * m)), axes))
    out = np.moveaxis(out, list(range(m)), axes)
    return np.ascontiguousarray(out).reshape(-1)


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    """Joint register with ``a`` on qubits ``0..n_a-1`` and ``b`` above them."""
    n = a.num_qubits + b.num_qubits
    if n > MAX_QUBITS:
        raise SizeLimitError(f"product register of {n} qubits exceeds {MAX_QUBITS}")
    return StateVector(n, np.kron(b.amplitudes, a.amplitudes))


def apply_unitary(state: StateVector, u, targets) -> StateVector:
    """Apply a unitary (``UnitaryMatrix`` or ndarray) to the listed qubits."""
    targets = _check_targets(state.num_qubits, targets)
    mat = _as_matrix(u)
    out = _apply_matrix(state.amplitudes, state.num_qubits, mat, targets)
    return StateVector(state.num_qubits, out)


def permute_qubits(state: StateVector, perm) -> StateVector:
    """Relabel qubits so that qubit ``q`` moves to position ``perm[q]``."""
    n = state.num_qubits
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ValueError(f"perm {perm} is not a permutation of 0..{n - 1}")
    inv = [0] * n
    for q, p in enumerate(perm):
        inv[p] = q
    psi = state.amplitudes.reshape([2] * n)
    axes = [n - 1 - inv[n - 1 - j] for j in range(n)]
    out = np.ascontiguousarray(psi.transpose(axes)).reshape(-1)
    return StateVector(n, out)


def marginal_probabilities(state: StateVector, qubits) -> np.ndarray:
    """Born probabilities of measuring the listed qubits, indexed like outcomes."""
    qubits = _check_targets(state.num_qubits, qubits)
    n, m = state.num_qubits, len(qubits)
    p = (np.abs(state.amplitudes) ** 2).reshape([2] * n)
    axes = [n - 1 - q for q in reversed(qubits)]
    p = np.moveaxis(p, axes, list(range(m)))
    return p.reshape(2**m, -1).sum(axis=1)


def measure_and_project(state: StateVector, qubits, outcome: int):
    """Project onto a computational outcome of the listed qubits.

    Returns ``(post_state, probability)`` where the post-measurement state
    lives on the remaining qubits, renumbered in their original order.
    """
    qubits = _check_targets(state.num_qubits, qubits)
    n, m = state.num_qubits, len(qubits)
    if not 0 <= outcome < 2**m:
        raise ValueError(f"outcome {outcome} out of range for {m} qubits")
    psi = state.amplitudes.reshape([2] * n)
    index: list = [slice(None)] * n
    for i, q in enumerate(qubits):
        index[n - 1 - q] = (outcome >> i) & 1
    sub = np.ascontiguousarray(psi[tuple(index)]).reshape(-1)
    prob = float(np.real(np.vdot(sub, sub)))
    if prob < OUTCOME_PROB_FLOOR:
        raise ImpossibleOutcomeError(
            f"outcome {outcome} on qubits {qubits} has probability {prob:.3e}"
        )
    return StateVector(n - m, sub / np.sqrt(prob)), prob


def sample_measurement(state: StateVector, qubits, rng=None):
    """Draw one Born-rule outcome for the listed qubits.

    ``rng`` may be a ``numpy.random.Generator``, a seed, or ``None``.
    Returns ``(MeasurementRecord, post_state)``.
    """
    rng = np.random.default_rng(rng)
    probs = marginal_probabilities(state, qubits)
    probs = probs / probs.sum()
    outcome = int(rng.choice(probs.size, p=probs))
    post, prob = measure_and_project(state, qubits, outcome)
    return MeasurementRecord(tuple(int(q) for q in qubits), outcome, prob), post


def inner_product(a: StateVector, b: StateVector) -> complex:
    """``<a|b>`` with the first argument conjugated."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("states live on different register sizes")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def states_close(a: StateVector, b: StateVector, atol: float = 1e-9,
                 up_to_global_phase: bool = True) -> bool:
    """Whether two states coincide, by default ignoring a global phase."""
    if a.num_qubits != b.num_qubits:
        return False
    if up_to_global_phase:
        return bool(abs(abs(inner_product(a, b)) - 1.0) <= atol)
    return bool(np.linalg.norm(a.amplitudes - b.amplitudes) <= atol)
