"""Schmidt decompositions and closed-form predictions for swapped states.

The swap analytics are all functionals of the target's Schmidt coefficients
``lam`` (probabilities, sorted descending):

* single swap, accepted branch: fidelity ``sum(lam^2)/sqrt(sum(lam^3))``,
  acceptance probability ``sum(lam^3)``, shared spectrum ``lam^3`` renormalized;
* after ``k`` chained swaps: spectrum ``lam^(2k+1)`` renormalized, fidelity
  ``sum(lam^(k+1))/sqrt(sum(lam^(2k+1)))``, and the acceptance probability at
  node ``q`` (given all earlier accepts) ``sum(lam^(2q+1))/sum(lam^(2q-1))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qstate import QubitPartition, StateVector, permute_qubits

DEFAULT_ZERO_TOL = 1e-12
COEFF_SUM_ATOL = 1e-9


def _check_coefficients(coeffs) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty coefficient list")
    if np.any(arr < -1e-12):
        raise ValueError("Schmidt coefficients must be non-negative")
    arr = np.clip(arr, 0.0, None)
    total = float(arr.sum())
    if abs(total - 1.0) > COEFF_SUM_ATOL:
        raise ValueError(f"coefficients sum to {total!r}, expected 1")
    return arr


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Schmidt form of a pure state across a qubit bipartition.

    ``coefficients`` holds the ``rank`` probabilities sorted descending.
    ``vectors_a[i]`` / ``vectors_b[i]`` are the paired orthonormal vectors on
    the A / B subregisters (amplitude layout: subregister qubits renumbered
    0.. in their original order). Each A vector is phased so its first
    non-zero amplitude is real positive.
    """

    coefficients: np.ndarray = field(repr=False)
    vectors_a: np.ndarray = field(repr=False)
    vectors_b: np.ndarray = field(repr=False)
    partition: QubitPartition = None

    @property
    def rank(self) -> int:
        return int(self.coefficients.size)


def _partition_perm(partition: QubitPartition) -> list[int]:
    """Permutation sending side A to the low qubits, side B above them."""
    perm = [0] * partition.num_qubits
    for i, q in enumerate(partition.set_a):
        perm[q] = i
    for j, q in enumerate(partition.set_b):
        perm[q] = partition.n_a + j
    return perm


def schmidt_decompose(state: StateVector, partition: QubitPartition,
                      zero_tol: float = DEFAULT_ZERO_TOL) -> SchmidtDecomposition:
    """SVD-based Schmidt decomposition across the given partition."""
    if partition.num_qubits != state.num_qubits:
        raise ValueError("partition does not match the register size")
    arranged = permute_qubits(state, _partition_perm(partition))
    mat = arranged.amplitudes.reshape(2**partition.n_b, 2**partition.n_a).T
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    lam = s**2
    rank = int(np.count_nonzero(lam > zero_tol))
    if rank == 0:
        raise ValueError("state has no Schmidt weight above the zero tolerance")
    lam = lam[:rank]
    vecs_a = np.ascontiguousarray(u[:, :rank].T)
    vecs_b = np.ascontiguousarray(vh[:rank, :])
    for i in range(rank):
        first = int(np.argmax(np.abs(vecs_a[i]) > 1e-12))
        phase = vecs_a[i, first] / abs(vecs_a[i, first])
        vecs_a[i] *= np.conj(phase)
        vecs_b[i] *= phase
    return SchmidtDecomposition(lam, vecs_a, vecs_b, partition)


def reconstruct_state(dec: SchmidtDecomposition,
                      partition: QubitPartition | None = None) -> StateVector:
    """Rebuild the state ``sum_i sqrt(lam_i) |a_i>|b_i>`` on the full register."""
    part = partition if partition is not None else dec.partition
    weights = np.sqrt(dec.coefficients)
    block = np.einsum("i,ia,ib->ba", weights, dec.vectors_a, dec.vectors_b)
    low_first = StateVector(part.num_qubits, block.reshape(-1))
    perm = [0] * part.num_qubits
    for i, q in enumerate(part.set_a):
        perm[i] = q
    for j, q in enumerate(part.set_b):
        perm[part.n_a + j] = q
    return permute_qubits(low_first, perm)


def renyi_entropy(coeffs, order: float) -> float:
    """Renyi entropy of a coefficient vector; ``order=1`` is the Shannon limit."""
    lam = _check_coefficients(coeffs)
    if order <= 0:
        raise ValueError("Renyi order must be positive")
    lam = lam[lam > 0]
    if order == 1:
        return float(-np.sum(lam * np.log(lam)))
    return float(np.log(np.sum(lam**order)) / (1.0 - order))


@dataclass(frozen=True)
class SpectrumAnalytics:
    """Entropy and spread summary of a Schmidt spectrum.

    ``variance`` and ``skewness`` are the mean squared and cubed deviations
    of the coefficients from the uniform value ``1/rank``.
    """

    rank: int
    renyi: dict[float, float]
    variance: float
    skewness: float


def spectrum_analytics(coeffs, orders=(1.0, 2.0, 3.0)) -> SpectrumAnalytics:
    lam = _check_coefficients(coeffs)
    lam = lam[lam > 0]
    d = int(lam.size)
    eps = lam - 1.0 / d
    return SpectrumAnalytics(
        rank=d,
        renyi={float(n): renyi_entropy(lam, n) for n in orders},
        variance=float(np.mean(eps**2)),
        skewness=float(np.mean(eps**3)),
    )


def predicted_fidelity_single(coeffs) -> float:
    """Fidelity of the accepted single-swap state to the target."""
    lam = _check_coefficients(coeffs)
    return float(np.sum(lam**2) / np.sqrt(np.sum(lam**3)))


def predicted_shared_coeffs(coeffs, nodes: int = 1) -> np.ndarray:
    """Schmidt spectrum of the state shared after ``nodes`` chained swaps."""
    lam = _check_coefficients(coeffs)
    if nodes < 1:
        raise ValueError("nodes must be at least 1")
    powered = lam ** (2 * nodes + 1)
    powered /= powered.sum()
    return np.sort(powered)[::-1]


def predicted_fidelity_network(coeffs, nodes: int) -> float:
    """Fidelity to the target after ``nodes`` chained swaps, all accepted."""
    lam = _check_coefficients(coeffs)
    if nodes < 1:
        raise ValueError("nodes must be at least 1")
    return float(np.sum(lam ** (nodes + 1)) / np.sqrt(np.sum(lam ** (2 * nodes + 1))))


def predicted_postselection_prob(coeffs, node_index: int = 1) -> float:
    """Acceptance probability at the ``node_index``-th swap, given earlier accepts."""
    lam = _check_coefficients(coeffs)
    if node_index < 1:
        raise ValueError("node_index must be at least 1")
    q = node_index
    return float(np.sum(lam ** (2 * q + 1)) / np.sum(lam ** (2 * q - 1)))


def perturbative_fidelity_from_moments(scaled_variance: float,
                                       scaled_skewness: float) -> float:
    """Near-uniform fidelity estimate from ``d^2*mean(eps^2)`` and ``d^3*mean(eps^3)``."""
    x, y = float(scaled_variance), float(scaled_skewness)
    return (1.0 + x) / np.sqrt(1.0 + 3.0 * x + y)


def perturbative_fidelity(coeffs) -> float:
    """Single-swap fidelity expanded around a uniform spectrum.

    Valid in the near-uniform regime (``d^2 * mean(eps^2) << 1`` where
    ``eps_i = lam_i - 1/d`` over the support).
    """
    lam = _check_coefficients(coeffs)
    lam = lam[lam > 0]
    d = lam.size
    eps = lam - 1.0 / d
    x = d * d * float(np.mean(eps**2))
    y = d**3 * float(np.mean(eps**3))
    return float(perturbative_fidelity_from_moments(x, y))
