"""Unitary construction: completions, Eve-side reordering, shift-phase families.

The feedforward protocol needs three constructions on top of a Schmidt
decomposition with rank ``d`` and vectors ``|a_j>``, ``|b_j>``:

* a deterministic unitary completion that pins chosen columns;
* the orthonormal family ``|psi_{m,l}> = sum_j w^{jl}/sqrt(d) |a_j>|b_{j+m}>``
  (``w = exp(2 pi i / d)``, index shifts mod ``d``), whose members a node's
  measurement can distinguish;
* the correction ``|a_j> -> w^{jl} |a_{j-m}>`` that maps a decoded outcome
  back to the ``(m, l) = (0, 0)`` member.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantError
from .qstate import QubitPartition, StateVector, UnitaryMatrix, permute_qubits
from .schmidt import SchmidtDecomposition

COMPLETION_TOL = 1e-8
FAMILY_ORTHO_ATOL = 1e-10


def _complete_columns(dim: int, specified: dict[int, np.ndarray]) -> np.ndarray:
    """Extend orthonormal columns to a full unitary, deterministically.

    Free columns are filled by orthonormalizing canonical basis vectors in
    index order (two Gram-Schmidt passes for numerical stability) and
    assigning the survivors to the free column indices in ascending order.
    """
    if not all(0 <= c < dim for c in specified):
        raise ValueError("specified column index out of range")
    cols = [np.asarray(specified[c], dtype=complex).ravel() for c in sorted(specified)]
    if any(c.size != dim for c in cols):
        raise ValueError("specified columns must have length equal to dim")
    stack = np.column_stack(cols)
    gram = stack.conj().T @ stack
    if np.max(np.abs(gram - np.eye(len(cols)))) > 1e-9:
        raise ValueError("specified columns are not orthonormal")

    basis = np.zeros((dim, dim), dtype=complex)
    basis[:, : len(cols)] = stack
    k = len(cols)
    for j in range(dim):
        if k == dim:
            break
        v = np.zeros(dim, dtype=complex)
        v[j] = 1.0
        for _ in range(2):
            v -= basis[:, :k] @ (basis[:, :k].conj().T @ v)
        norm = np.linalg.norm(v)
        if norm > COMPLETION_TOL:
            basis[:, k] = v / norm
            k += 1
    if k != dim:
        raise InvariantError("column completion failed to span the space")

    out = np.zeros((dim, dim), dtype=complex)
    for i, c in enumerate(sorted(specified)):
        out[:, c] = specified[c]
    free = [c for c in range(dim) if c not in specified]
    for i, c in enumerate(free):
        out[:, c] = basis[:, len(cols) + i]
    return out


def complete_unitary_from_column(column, column_index: int = 0) -> UnitaryMatrix:
    """Unitary whose ``column_index``-th column is the given unit vector."""
    vec = column.amplitudes if isinstance(column, StateVector) else None
    if vec is None:
        vec = np.asarray(column, dtype=complex).ravel()
    if abs(np.linalg.norm(vec) - 1.0) > 1e-9:
        raise ValueError("column must be a unit vector")
    return UnitaryMatrix(_complete_columns(vec.size, {int(column_index): vec}))


def eve_position_map(partition: QubitPartition) -> list[int]:
    """Position of each original qubit on a register wired B-side first.

    A midpoint node holds the B qubits of one copy (in their original order)
    on positions ``0..n_b-1`` and the A qubits of the next copy on positions
    ``n_b..n-1``.
    """
    pos = [0] * partition.num_qubits
    for i, q in enumerate(partition.set_b):
        pos[q] = i
    for i, q in enumerate(partition.set_a):
        pos[q] = partition.n_b + i
    return pos


def reorder_for_eve(u, partition: QubitPartition) -> UnitaryMatrix:
    """Re-express a target-register operator on the node's B-first register.

    Conjugates by the permutation sending original qubit ``q`` to
    ``eve_position_map(partition)[q]``: the result applied to the node's
    register acts exactly as ``u`` does on the original qubit roles.
    """
    mat = u.matrix if isinstance(u, UnitaryMatrix) else np.asarray(u, dtype=complex)
    n = partition.num_qubits
    if mat.shape != (2**n, 2**n):
        raise ValueError("operator size does not match the partition")
    pos = eve_position_map(partition)
    idx = np.arange(2**n)
    moved = np.zeros_like(idx)
    for q in range(n):
        moved |= ((idx >> q) & 1) << pos[q]
    out = np.zeros_like(mat)
    out[np.ix_(moved, moved)] = mat
    return UnitaryMatrix(out)


@dataclass(frozen=True, eq=False)
class TargetLikeFamily:
    """The ``d**2`` shift-phase states of a rank-``d`` decomposition.

    ``states[m, l]`` holds the amplitudes of ``|psi_{m,l}>`` on the original
    register layout; ``sigma[m, l]`` is the computational basis index a
    flattened generator maps onto that member. ``sigma[0, 0]`` is the
    preparation input, and the remaining indices are assigned in ascending
    lexicographic ``(m, l)`` order over the unused basis states.
    """

    base: SchmidtDecomposition
    states: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self):
        lookup = {
            int(self.sigma[m, l]): (m, l)
            for m in range(self.d_s)
            for l in range(self.d_s)
        }
        object.__setattr__(self, "_ml_by_sigma", lookup)

    @property
    def d_s(self) -> int:
        return self.base.rank

    @property
    def partition(self) -> QubitPartition:
        return self.base.partition

    @property
    def num_qubits(self) -> int:
        return self.base.partition.num_qubits

    def decode(self, outcome: int) -> tuple[int, int] | None:
        """Map a measured basis index to its ``(m, l)`` label, if any."""
        return self._ml_by_sigma.get(int(outcome))

    def state(self, m: int, l: int) -> StateVector:
        d = self.d_s
        return StateVector(self.num_qubits, self.states[m % d, l % d])


def build_target_like_family(dec: SchmidtDecomposition,
                             sigma0: int = 0) -> TargetLikeFamily:
    """Construct the shift-phase family and its basis-state assignment."""
    part = dec.partition
    d, n = dec.rank, part.num_qubits
    dim = 2**n
    if not 0 <= sigma0 < dim:
        raise ValueError(f"sigma0 {sigma0} out of range for {n} qubits")

    omega = np.exp(2j * np.pi / d)
    phases = omega ** (np.outer(np.arange(d), np.arange(d))) / np.sqrt(d)
    perm = [0] * n
    for i, q in enumerate(part.set_a):
        perm[i] = q
    for j, q in enumerate(part.set_b):
        perm[part.n_a + j] = q

    states = np.zeros((d, d, dim), dtype=complex)
    for m in range(d):
        shifted_b = np.roll(dec.vectors_b, -m, axis=0)
        # block[l, b, a] = sum_j phases[j, l] a_j[a] b_{j+m}[b]
        block = np.einsum("jl,ja,jb->lba", phases, dec.vectors_a, shifted_b)
        for l in range(d):
            member = StateVector(n, block[l].reshape(-1))
            states[m, l] = permute_qubits(member, perm).amplitudes

    flat = states.reshape(d * d, dim)
    gram = flat.conj() @ flat.T
    if np.max(np.abs(gram - np.eye(d * d))) > FAMILY_ORTHO_ATOL:
        raise InvariantError("family members are not orthonormal")

    sigma = np.zeros((d, d), dtype=int)
    free = (x for x in range(dim) if x != sigma0)
    for m in range(d):
        for l in range(d):
            sigma[m, l] = sigma0 if (m, l) == (0, 0) else next(free)
    return TargetLikeFamily(dec, states, sigma)


def build_flattened_unitary(family: TargetLikeFamily) -> UnitaryMatrix:
    """Unitary mapping each assigned basis state onto its family member."""
    d = family.d_s
    specified = {
        int(family.sigma[m, l]): family.states[m, l]
        for m in range(d)
        for l in range(d)
    }
    return UnitaryMatrix(_complete_columns(2**family.num_qubits, specified))


def correction_unitary(family: TargetLikeFamily, m: int, l: int) -> UnitaryMatrix:
    """A-side correction ``|a_j> -> w^{jl} |a_{j-m}>``, identity off the span."""
    d = family.d_s
    m, l = m % d, l % d
    vecs = family.base.vectors_a
    omega = np.exp(2j * np.pi / d)
    shifted = np.roll(vecs, m, axis=0)  # row j holds a_{(j-m) mod d}
    phases = omega ** (l * np.arange(d))
    mapped = np.einsum("j,jx,jy->xy", phases, shifted, vecs.conj())
    projector = vecs.T @ vecs.conj()
    dim = vecs.shape[1]
    return UnitaryMatrix(mapped + np.eye(dim) - projector)
