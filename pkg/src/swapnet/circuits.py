"""Gate-level circuits and target-state constructions.

Provides the reference targets used throughout (GHZ states, a tunable
two-qubit entangled pair, brickwork random circuits) plus helpers to build
states with a prescribed entanglement spectrum. Circuits are plain lists of
:class:`Gate`, so the noise layer can interleave channels between gates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qstate import StateVector, UnitaryMatrix, apply_unitary

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# Index bit 0 is the control (first target qubit), bit 1 the target.
CNOT = np.array(
    [[1, 0, 0, 0],
     [0, 0, 0, 1],
     [0, 0, 1, 0],
     [0, 1, 0, 0]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """A named unitary acting on an ordered tuple of qubits."""

    name: str
    qubits: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        checked = UnitaryMatrix(self.matrix)
        if checked.num_qubits != len(self.qubits):
            raise ValueError("matrix size does not match qubit count")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate qubits must be distinct")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "matrix", checked.matrix)

    def dagger(self) -> "Gate":
        return Gate(self.name + "_dag", self.qubits, self.matrix.conj().T)


def apply_circuit(state: StateVector, gates) -> StateVector:
    for gate in gates:
        state = apply_unitary(state, gate.matrix, list(gate.qubits))
    return state


def circuit_unitary(gates, num_qubits: int) -> UnitaryMatrix:
    """Dense matrix of a circuit, column by column. Intended for small n."""
    dim = 2**num_qubits
    cols = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        out = apply_circuit(StateVector.basis_state(num_qubits, j), gates)
        cols[:, j] = out.amplitudes
    return UnitaryMatrix(cols)


def ghz_circuit(num_qubits: int) -> list[Gate]:
    """Hadamard on qubit 0 followed by a CNOT chain down the register."""
    if num_qubits < 2:
        raise ValueError("GHZ preparation needs at least 2 qubits")
    gates = [Gate("h", (0,), HADAMARD)]
    for q in range(num_qubits - 1):
        gates.append(Gate("cx", (q, q + 1), CNOT))
    return gates


def ghz_state(num_qubits: int) -> StateVector:
    if num_qubits < 2:
        raise ValueError("GHZ state needs at least 2 qubits")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = amps[-1] = np.sqrt(0.5)
    return StateVector(num_qubits, amps)


def theta_state(theta: float) -> StateVector:
    """Two-qubit pair ``cos(t/2)|00> + sin(t/2)|11>`` for ``t`` in [0, pi]."""
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    amps = np.zeros(4, dtype=complex)
    amps[0] = np.cos(theta / 2)
    amps[3] = np.sin(theta / 2)
    return StateVector(2, amps)


def theta_circuit(theta: float) -> list[Gate]:
    """Gate preparation of :func:`theta_state`: a Y rotation and a CNOT."""
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    ry = np.array([[c, -s], [s, c]], dtype=complex)
    return [Gate("ry", (0,), ry), Gate("cx", (0, 1), CNOT)]


def two_site_gate(phi_x: float, phi_y: float, phi_z: float) -> np.ndarray:
    """``exp(i (phi_x XX + phi_y YY + phi_z ZZ))`` on two qubits.

    The three terms commute, so the exponential factors into a product of
    ``cos(phi) I + i sin(phi) P`` rotations.
    """
    out = np.eye(4, dtype=complex)
    for phi, pauli in ((phi_x, PAULI_X), (phi_y, PAULI_Y), (phi_z, PAULI_Z)):
        pp = np.kron(pauli, pauli)
        out = out @ (np.cos(phi) * np.eye(4) + 1j * np.sin(phi) * pp)
    return out


@dataclass(frozen=True)
class BrickworkSpec:
    """Seeded brickwork circuit layout on an open chain.

    Each cycle applies a layer of two-site gates on pairs ``(0,1), (2,3), ...``
    then a layer on pairs ``(1,2), (3,4), ...``. Angles are drawn uniformly
    from ``[-pi, pi)``, one ``(phi_x, phi_y, phi_z)`` triple per bond, in the
    order the layers apply them. ``angles`` has shape ``(cycles, n - 1, 3)``.
    """

    num_qubits: int
    cycles: int
    seed: int = 0
    angles: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.num_qubits < 2:
            raise ValueError("brickwork chain needs at least 2 qubits")
        if self.cycles < 0:
            raise ValueError("cycles must be non-negative")
        shape = (self.cycles, self.num_qubits - 1, 3)
        if self.angles is None:
            rng = np.random.default_rng(self.seed)
            drawn = rng.uniform(-np.pi, np.pi, size=shape)
        else:
            drawn = np.asarray(self.angles, dtype=float)
            if drawn.shape != shape:
                raise ValueError(f"angles must have shape {shape}")
        drawn = drawn.copy()
        drawn.flags.writeable = False
        object.__setattr__(self, "angles", drawn)

    def bond_order(self) -> list[tuple[int, int]]:
        """Bonds of one cycle, in application order."""
        n = self.num_qubits
        first = [(a, a + 1) for a in range(0, n - 1, 2)]
        second = [(a, a + 1) for a in range(1, n - 1, 2)]
        return first + second


def brickwork_circuit(spec: BrickworkSpec) -> list[Gate]:
    gates = []
    bonds = spec.bond_order()
    for t in range(spec.cycles):
        for k, (a, b) in enumerate(bonds):
            phi = spec.angles[t, k]
            gates.append(Gate(f"bw[{t},{a}]", (a, b),
                              two_site_gate(*phi)))
    return gates


def random_brickwork(spec: BrickworkSpec) -> StateVector:
    """State of the brickwork circuit applied to the all-zeros register."""
    return apply_circuit(StateVector.basis_state(spec.num_qubits),
                         brickwork_circuit(spec))


def haar_random_state(num_qubits: int, seed: int = 0) -> StateVector:
    """Uniformly random pure state (normalized complex Gaussian vector)."""
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(num_qubits, amps / np.linalg.norm(amps))


def _random_orthonormal_rows(count: int, dim: int, rng) -> np.ndarray:
    mat = rng.normal(size=(dim, count)) + 1j * rng.normal(size=(dim, count))
    q, r = np.linalg.qr(mat)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return q.T.copy()


def state_with_spectrum(coefficients, n_a: int, n_b: int,
                        seed: int = 0) -> StateVector:
    """Random state whose Schmidt spectrum across the leading cut is given.

    The A side occupies qubits ``0..n_a-1``. Schmidt vectors are seeded
    random orthonormal sets, so the state is reproducible but otherwise
    unstructured.
    """
    coeffs = np.asarray(coefficients, dtype=float)
    if coeffs.ndim != 1 or coeffs.size == 0:
        raise ValueError("coefficients must be a non-empty 1-d sequence")
    if np.any(coeffs < -1e-12):
        raise ValueError("coefficients must be non-negative")
    if abs(coeffs.sum() - 1.0) > 1e-9:
        raise ValueError("coefficients must sum to 1")
    rank = coeffs.size
    if rank > min(2**n_a, 2**n_b):
        raise ValueError("rank exceeds the smaller subsystem dimension")
    rng = np.random.default_rng(seed)
    vecs_a = _random_orthonormal_rows(rank, 2**n_a, rng)
    vecs_b = _random_orthonormal_rows(rank, 2**n_b, rng)
    amps = np.einsum("i,ia,ib->ba", np.sqrt(np.clip(coeffs, 0, None)),
                     vecs_a, vecs_b).reshape(-1)
    return StateVector(n_a + n_b, amps)
