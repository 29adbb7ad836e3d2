"""Noise channels, density-matrix protocol runs, and readout statistics.

Channels are Kraus operator sets. The noisy runner rebuilds the full swap
protocol as one gate-level circuit on ``(nodes + 1) * n`` qubits, attaches a
depolarizing channel to every single-qubit gate, a two-qubit composite
depolarizing channel to every two-qubit gate, and phase-amplitude damping to
every idle qubit while a gate runs. Readout confusion is applied classically
to outcome distributions, never to quantum states.

Fidelity conventions: ``DensityMatrix.fidelity_with`` and the runner's
``state_fidelity`` report ``sqrt(<psi| rho |psi>)``, matching the pure-state
amplitude overlap used by the protocol module. Distribution agreement uses
the Hellinger fidelity ``(sum_i sqrt(p_i q_i))**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .circuits import PAULI_X, PAULI_Y, PAULI_Z
from .errors import ConfigError, InvariantError, SizeLimitError
from .protocol import MODE_POSTSELECT, SwapConfig, run_protocol
from .qstate import MAX_QUBITS, StateVector, _apply_matrix, format_bits

CHANNEL_TP_ATOL = 1e-10
DENSITY_HERMITIAN_ATOL = 1e-10
DENSITY_TRACE_ATOL = 1e-9
DENSITY_EIGEN_FLOOR = -1e-9
EXACT_METHOD_MAX_QUBITS = 10
ETA_MAX = 4.0 / 3.0

PAD_REFERENCE_T1 = 150.0
PAD_REFERENCE_T2 = 120.0

# Grids swept by the noise-scan workflow; strengths are eta values, idle
# durations (us), or readout flip probabilities depending on the source.
DEFAULT_NOISE_GRIDS = {
    "eta_1q": (0.0, 0.004, 0.008, 0.012),
    "eta_ecr": (0.0, 0.01, 0.02, 0.04),
    "pad": (0.0, 0.03, 0.06, 0.12),
    "readout": (0.0, 0.01, 0.02, 0.04),
}


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Trace-preserving set of Kraus operators of a common dimension."""

    operators: tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.array(op, dtype=complex) for op in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        if any(op.shape != (dim, dim) for op in ops):
            raise ValueError("Kraus operators must share one square shape")
        total = sum(op.conj().T @ op for op in ops)
        err = np.max(np.abs(total - np.eye(dim)))
        if err > CHANNEL_TP_ATOL:
            raise ValueError(f"channel violates trace preservation by {err:.3e}")
        for op in ops:
            op.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    @property
    def num_qubits(self) -> int:
        return int(self.operators[0].shape[0]).bit_length() - 1

    def superoperator(self) -> np.ndarray:
        """Matrix acting on vectorized density blocks, ``sum_k K (x) K*``."""
        return sum(np.kron(op, op.conj()) for op in self.operators)


def identity_channel(num_qubits: int = 1) -> KrausChannel:
    return KrausChannel((np.eye(2**num_qubits, dtype=complex),), "identity")


def depolarizing_channel(eta: float) -> KrausChannel:
    """Equal-weight Pauli error channel with total strength ``eta``.

    Applies each of X, Y, Z with probability ``eta / 4``. At ``eta = 1`` any
    input collapses to the maximally mixed state; values up to 4/3 remain
    completely positive. Zero-weight operators are dropped.
    """
    if not 0.0 <= eta <= ETA_MAX + 1e-12:
        raise ValueError(f"eta must lie in [0, 4/3], got {eta}")
    ops = []
    p_keep = 1.0 - 3.0 * eta / 4.0
    if p_keep > 0.0:
        ops.append(np.sqrt(p_keep) * np.eye(2))
    if eta > 0.0:
        w = np.sqrt(eta / 4.0)
        ops.extend([w * PAULI_X, w * PAULI_Y, w * PAULI_Z])
    return KrausChannel(tuple(ops), f"depolarizing({eta})")


def pad_channel(t1: float = np.inf, t2: float = np.inf,
                duration: float = 0.0) -> KrausChannel:
    """Phase damping composed after amplitude damping for one idle period.

    ``gamma = 1 - exp(-duration/t1)`` damps the excited population;
    ``lam = 1 - exp(-duration/t_phi)`` with ``1/t_phi = 1/t2 - 1/(2 t1)``
    flips the phase. The composite operators are all four products of the
    two-operator factor channels, so the result stays trace-preserving.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("t1 and t2 must be positive")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    inv_tphi = 1.0 / t2 - 1.0 / (2.0 * t1)
    if inv_tphi < -1e-15:
        raise ValueError(f"t2 = {t2} exceeds 2 * t1 = {2 * t1}, which is unphysical")
    gamma = 1.0 - np.exp(-duration / t1) if np.isfinite(t1) else 0.0
    lam = 1.0 - np.exp(-duration * max(inv_tphi, 0.0))
    amp = [np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex),
           np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)]
    phase = [np.sqrt(1 - lam) * np.eye(2, dtype=complex),
             np.sqrt(lam) * PAULI_Z]
    ops = [p @ a for p in phase for a in amp]
    ops = [op for op in ops if np.any(op)]
    return KrausChannel(tuple(ops), f"pad(t1={t1}, t2={t2}, t={duration})")


def ecr_channel(eta: float) -> KrausChannel:
    """Two-qubit gate error: independent equal-strength Pauli noise on both
    qubits, i.e. all tensor products of two depolarizing factors."""
    factor = depolarizing_channel(eta)
    ops = tuple(np.kron(a, b) for a in factor.operators
                for b in factor.operators)
    return KrausChannel(ops, f"ecr({eta})")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated mixed state: Hermitian, unit trace, positive semidefinite."""

    num_qubits: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        dim = 2**self.num_qubits
        if mat.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > DENSITY_HERMITIAN_ATOL:
            raise ValueError("density matrix is not Hermitian")
        trace = complex(np.trace(mat))
        if abs(trace - 1.0) > DENSITY_TRACE_ATOL:
            raise ValueError(f"trace {trace} deviates from 1")
        if np.min(np.linalg.eigvalsh(mat)) < DENSITY_EIGEN_FLOOR:
            raise ValueError("density matrix has a significantly negative eigenvalue")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        amps = state.amplitudes
        return cls(state.num_qubits, np.outer(amps, amps.conj()))

    def probabilities(self) -> np.ndarray:
        return np.clip(np.real(np.diagonal(self.matrix)), 0.0, None)

    def fidelity_with(self, state: StateVector) -> float:
        """``sqrt(<psi| rho |psi>)``, the amplitude-overlap convention."""
        if state.num_qubits != self.num_qubits:
            raise ValueError("register sizes differ")
        weight = np.real(state.amplitudes.conj() @ self.matrix
                         @ state.amplitudes)
        return float(np.sqrt(max(weight, 0.0)))


def _apply_superop(flat: np.ndarray, num_qubits: int, superop: np.ndarray,
                   wires) -> np.ndarray:
    # The density matrix is flattened into a 2n-qubit vector: column bit of
    # qubit q sits at position q, row bit at position n + q.
    targets = list(wires) + [num_qubits + w for w in wires]
    return _apply_matrix(flat, 2 * num_qubits, superop, targets)


def apply_channel(rho: DensityMatrix, channel: KrausChannel,
                  targets) -> DensityMatrix:
    """Apply a Kraus channel to the listed qubits of a density matrix."""
    targets = [int(t) for t in targets]
    if channel.num_qubits != len(targets):
        raise ValueError("channel size does not match the target count")
    if any(not 0 <= t < rho.num_qubits for t in targets) \
            or len(set(targets)) != len(targets):
        raise ValueError(f"bad target list {targets}")
    flat = rho.matrix.reshape(-1)
    flat = _apply_superop(flat, rho.num_qubits, channel.superoperator(),
                          targets)
    dim = 2**rho.num_qubits
    return DensityMatrix(rho.num_qubits, flat.reshape(dim, dim))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Per-qubit readout misclassification probabilities.

    ``matrix[read, true]`` is column-stochastic: ``p01`` flips a true 0 to a
    read 1, ``p10`` flips a true 1 to a read 0.
    """

    p01: float = 0.0
    p10: float = 0.0

    def __post_init__(self):
        for name, p in (("p01", self.p01), ("p10", self.p10)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[1.0 - self.p01, self.p10],
                         [self.p01, 1.0 - self.p10]])


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Probabilities over computational outcomes of ``num_bits`` bits."""

    num_bits: int
    probabilities: np.ndarray = field(repr=False)

    def __post_init__(self):
        probs = np.array(self.probabilities, dtype=float).ravel()
        if probs.size != 2**self.num_bits:
            raise ValueError(f"expected {2**self.num_bits} entries")
        if np.min(probs) < -1e-12:
            raise ValueError("probabilities must be non-negative")
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def from_counts(cls, counts: dict, num_bits: int | None = None
                    ) -> "OutcomeDistribution":
        """Normalize a mapping of bitstring or integer outcomes to counts."""
        if not counts:
            raise ValueError("counts must not be empty")
        items = [(k if isinstance(k, int) else int(str(k), 2), float(v))
                 for k, v in counts.items()]
        if num_bits is None:
            widths = [len(str(k)) for k in counts if isinstance(k, str)]
            num_bits = max([1] + widths + [idx.bit_length()
                                           for idx, _ in items])
        probs = np.zeros(2**num_bits)
        for idx, v in items:
            if not 0 <= idx < probs.size:
                raise ValueError(f"outcome {idx} needs more than "
                                 f"{num_bits} bits")
            probs[idx] += v
        total = probs.sum()
        if total <= 0:
            raise ValueError("counts must be positive")
        return cls(num_bits, probs / total)

    @classmethod
    def from_state(cls, state: StateVector) -> "OutcomeDistribution":
        return cls(state.num_qubits, state.probabilities())

    def as_dict(self, threshold: float = 0.0) -> dict[str, float]:
        return {format_bits(i, self.num_bits): float(p)
                for i, p in enumerate(self.probabilities) if p > threshold}


def apply_readout(dist: OutcomeDistribution, confusion) -> OutcomeDistribution:
    """Push a distribution through per-bit confusion matrices.

    ``confusion`` is one :class:`ConfusionMatrix` for all bits or a sequence
    with one entry per bit (entry ``i`` applies to bit ``i``).
    """
    n = dist.num_bits
    if isinstance(confusion, ConfusionMatrix):
        per_bit = [confusion] * n
    else:
        per_bit = list(confusion)
        if len(per_bit) != n:
            raise ValueError(f"need {n} confusion matrices, got {len(per_bit)}")
    probs = dist.probabilities.reshape([2] * n)
    for bit, conf in enumerate(per_bit):
        axis = n - 1 - bit
        probs = np.moveaxis(
            np.tensordot(conf.matrix, probs, axes=([1], [axis])), 0, axis)
    total = probs.sum()
    return OutcomeDistribution(n, probs.reshape(-1) / total)


def _coerce_probs(dist) -> dict:
    # Keys normalize to integers so counts keyed by bitstrings compare
    # against OutcomeDistribution instances without surprises.
    if isinstance(dist, OutcomeDistribution):
        return {i: float(p) for i, p in enumerate(dist.probabilities)}
    if isinstance(dist, dict):
        acc: dict[int, float] = {}
        for k, v in dist.items():
            idx = k if isinstance(k, int) else int(str(k), 2)
            acc[idx] = acc.get(idx, 0.0) + float(v)
        total = sum(acc.values())
        if total <= 0:
            raise ValueError("distribution has no weight")
        return {k: v / total for k, v in acc.items()}
    arr = np.asarray(dist, dtype=float).ravel()
    total = arr.sum()
    if total <= 0:
        raise ValueError("distribution has no weight")
    return {i: float(v) / total for i, v in enumerate(arr)}


def hellinger_fidelity(p, q) -> float:
    """``(sum_i sqrt(p_i q_i))**2`` over the union of outcomes.

    Accepts :class:`OutcomeDistribution`, mappings (counts are normalized),
    or plain arrays.
    """
    pp, qq = _coerce_probs(p), _coerce_probs(q)
    overlap = sum(math.sqrt(pp[k] * qq[k]) for k in pp.keys() & qq.keys())
    return float(min(overlap**2, 1.0))


def required_shots(p: float, sigma_target: float) -> int:
    """Smallest shot count where a binomial estimate of ``p`` has standard
    deviation at most ``sigma_target``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly inside (0, 1), got {p}")
    if sigma_target <= 0.0:
        raise ValueError("sigma_target must be positive")
    return max(1, math.ceil(p * (1.0 - p) / sigma_target**2))


@dataclass(frozen=True)
class NoiseParams:
    """Strengths of the four modeled noise sources.

    Times are in the same unit as ``gate_time`` (microseconds in the default
    grids). Zero strengths disable the corresponding channel exactly.
    """

    eta_1q: float = 0.0
    eta_ecr: float = 0.0
    t1: float = np.inf
    t2: float = np.inf
    gate_time: float = 0.0
    p01: float = 0.0
    p10: float = 0.0

    def __post_init__(self):
        for name, eta in (("eta_1q", self.eta_1q), ("eta_ecr", self.eta_ecr)):
            if not 0.0 <= eta <= ETA_MAX + 1e-12:
                raise ValueError(f"{name} must lie in [0, 4/3], got {eta}")
        for name, prob in (("p01", self.p01), ("p10", self.p10)):
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {prob}")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("t1 and t2 must be positive")
        if 1.0 / self.t2 - 1.0 / (2.0 * self.t1) < -1e-15:
            raise ValueError("t2 may not exceed 2 * t1")
        if self.gate_time < 0:
            raise ValueError("gate_time must be non-negative")

    def single_qubit_channel(self) -> KrausChannel | None:
        return depolarizing_channel(self.eta_1q) if self.eta_1q > 0 else None

    def two_qubit_channel(self) -> KrausChannel | None:
        return ecr_channel(self.eta_ecr) if self.eta_ecr > 0 else None

    def idle_channel(self) -> KrausChannel | None:
        if self.gate_time == 0:
            return None
        ch = pad_channel(self.t1, self.t2, self.gate_time)
        return ch if len(ch.operators) > 1 else None

    def confusion(self) -> ConfusionMatrix | None:
        if self.p01 == 0 and self.p10 == 0:
            return None
        return ConfusionMatrix(self.p01, self.p10)


def noise_params_for(source: str, strength: float) -> NoiseParams:
    """Parameters with a single noise source at the given strength."""
    if source == "eta_1q":
        return NoiseParams(eta_1q=strength)
    if source == "eta_ecr":
        return NoiseParams(eta_ecr=strength)
    if source == "pad":
        return NoiseParams(t1=PAD_REFERENCE_T1, t2=PAD_REFERENCE_T2,
                           gate_time=strength)
    if source == "readout":
        return NoiseParams(p01=strength, p10=strength)
    raise ValueError(f"unknown noise source {source!r}, expected one of "
                     f"{sorted(DEFAULT_NOISE_GRIDS)}")


@dataclass(frozen=True)
class NoisyRunResult:
    """Noisy protocol run summary.

    ``hellinger`` compares the accepted-and-read-out distribution on the
    shared register against the noiseless run's Born distribution;
    ``state_fidelity`` is the amplitude overlap of the postselected mixed
    state with the target (readout does not affect it).
    """

    config: SwapConfig
    noise: NoiseParams
    method: str
    hellinger: float
    state_fidelity: float
    acceptance_probability: float
    distribution: OutcomeDistribution
    ideal_distribution: OutcomeDistribution
    density: DensityMatrix | None = None
    trajectories: int | None = None
    state_fidelity_stderr: float | None = None


@dataclass(frozen=True)
class _Layout:
    total_qubits: int
    layers: tuple[tuple[np.ndarray, tuple[int, ...]], ...]
    eve_wires: tuple[int, ...]
    ab_wires: tuple[int, ...]   # ascending; role order matches set_a + set_b
    kept_indices: np.ndarray    # full-register indices with all Eve bits 0
    role_map: np.ndarray        # kept-subspace index -> target-layout index


def _protocol_layout(config: SwapConfig) -> _Layout:
    if config.mode != MODE_POSTSELECT:
        raise ConfigError("noisy runs support the postselect mode only")
    if config.target_circuit is None:
        raise ConfigError("noisy runs need a gate-level target_circuit")
    n = config.target.num_qubits
    k = config.nodes
    total = (k + 1) * n
    if total > MAX_QUBITS:
        raise SizeLimitError(
            f"protocol register of {total} qubits exceeds {MAX_QUBITS}")

    if any(len(g.qubits) > 2 for g in config.target_circuit):
        raise ConfigError("the noise model covers 1- and 2-qubit gates only")
    layers = []
    for copy in range(k + 1):
        for g in config.target_circuit:
            layers.append((g.matrix, tuple(q + copy * n for q in g.qubits)))
    in_b = set(config.partition.set_b)
    for q in range(1, k + 1):
        def wire(role, q=q):
            return (q - 1) * n + role if role in in_b else q * n + role
        for g in reversed(config.target_circuit):
            layers.append((g.matrix.conj().T,
                           tuple(wire(r) for r in g.qubits)))

    ab = [a for a in config.partition.set_a] \
        + [k * n + b for b in config.partition.set_b]
    eve = tuple(sorted(set(range(total)) - set(ab)))
    eve_mask = sum(1 << w for w in eve)
    kept = np.flatnonzero((np.arange(2**total) & eve_mask) == 0)
    roles = list(config.partition.set_a) + list(config.partition.set_b)
    sub = np.arange(2**n)
    role_map = np.zeros(2**n, dtype=np.int64)
    for j, role in enumerate(roles):
        role_map |= ((sub >> j) & 1) << role
    return _Layout(total_qubits=total, layers=tuple(layers), eve_wires=eve,
                   ab_wires=tuple(ab), kept_indices=kept, role_map=role_map)


def _gate_noise(noise: NoiseParams, wires) -> KrausChannel | None:
    if len(wires) == 1:
        return noise.single_qubit_channel()
    return noise.two_qubit_channel()


def _postselected_distribution(full_probs: np.ndarray, layout: _Layout,
                               noise: NoiseParams, num_qubits: int
                               ) -> tuple[OutcomeDistribution, float]:
    dist = OutcomeDistribution(layout.total_qubits,
                               full_probs / full_probs.sum())
    conf = noise.confusion()
    if conf is not None:
        dist = apply_readout(dist, conf)
    kept = dist.probabilities[layout.kept_indices]
    accept = float(kept.sum())
    if accept <= 0:
        raise InvariantError("postselection removed all probability")
    ab = np.zeros(2**num_qubits)
    ab[layout.role_map] = kept
    return OutcomeDistribution(num_qubits, ab / accept), accept


def _run_exact(config: SwapConfig, noise: NoiseParams, layout: _Layout,
               ideal: OutcomeDistribution) -> NoisyRunResult:
    total = layout.total_qubits
    if total > EXACT_METHOD_MAX_QUBITS:
        raise SizeLimitError(
            f"exact method supports at most {EXACT_METHOD_MAX_QUBITS} total "
            f"qubits, this run needs {total}")
    n = config.target.num_qubits
    dim = 2**total
    flat = np.zeros(dim * dim, dtype=complex)
    flat[0] = 1.0
    idle_ch = noise.idle_channel()
    idle_super = idle_ch.superoperator() if idle_ch is not None else None
    for mat, wires in layout.layers:
        flat = _apply_superop(flat, total, np.kron(mat, mat.conj()), wires)
        gate_ch = _gate_noise(noise, wires)
        if gate_ch is not None:
            flat = _apply_superop(flat, total, gate_ch.superoperator(), wires)
        if idle_super is not None:
            for w in range(total):
                if w not in wires:
                    flat = _apply_superop(flat, total, idle_super, [w])
    rho = flat.reshape(dim, dim)

    dist, _ = _postselected_distribution(
        np.clip(np.real(np.diagonal(rho)), 0.0, None), layout, noise, n)
    sub = rho[np.ix_(layout.kept_indices, layout.kept_indices)]
    accept = float(np.real(np.trace(sub)))
    if accept <= 0:
        raise InvariantError("postselection removed all probability")
    reordered = np.zeros_like(sub)
    reordered[np.ix_(layout.role_map, layout.role_map)] = sub
    rho_ab = DensityMatrix(n, reordered / accept)
    return NoisyRunResult(
        config=config, noise=noise, method="exact",
        hellinger=hellinger_fidelity(dist, ideal),
        state_fidelity=rho_ab.fidelity_with(config.target),
        acceptance_probability=accept, distribution=dist,
        ideal_distribution=ideal, density=rho_ab)


def _sample_kraus(amps: np.ndarray, num_qubits: int, channel: KrausChannel,
                  wires, rng) -> np.ndarray:
    # Born sampling of one Kraus branch. Channels list their near-identity
    # operator first, so weak noise usually exits after one application.
    draw = rng.random()
    acc = 0.0
    fallback = None
    for op in channel.operators:
        candidate = _apply_matrix(amps, num_qubits, op, list(wires))
        weight = float(np.real(np.vdot(candidate, candidate)))
        if weight > 0.0:
            fallback = (candidate, weight)
        acc += weight
        if draw < acc and weight > 0.0:
            return candidate / np.sqrt(weight)
    if fallback is None:
        raise InvariantError("every Kraus branch annihilated the state")
    # Cumulative weights reach 1 only up to rounding; keep the last live
    # branch when the draw overshoots.
    candidate, weight = fallback
    return candidate / np.sqrt(weight)


def _run_trajectories(config: SwapConfig, noise: NoiseParams, layout: _Layout,
                      ideal: OutcomeDistribution,
                      trajectories: int) -> NoisyRunResult:
    total = layout.total_qubits
    n = config.target.num_qubits
    idle_ch = noise.idle_channel()
    # Reference vector: target on the shared wires, zeros on Eve's.
    ref = np.zeros(2**total, dtype=complex)
    ref[layout.kept_indices] = config.target.amplitudes[layout.role_map]

    seeds = np.random.SeedSequence(config.seed).spawn(trajectories)
    probs_sum = np.zeros(2**total)
    weights = np.zeros(trajectories)
    overlaps = np.zeros(trajectories)
    start = np.zeros(2**total, dtype=complex)
    start[0] = 1.0
    for t in range(trajectories):
        rng = np.random.default_rng(seeds[t])
        amps = start
        for mat, wires in layout.layers:
            amps = _apply_matrix(amps, total, mat, list(wires))
            gate_ch = _gate_noise(noise, wires)
            if gate_ch is not None:
                amps = _sample_kraus(amps, total, gate_ch, wires, rng)
            if idle_ch is not None:
                for w in range(total):
                    if w not in wires:
                        amps = _sample_kraus(amps, total, idle_ch, [w], rng)
        probs_sum += np.abs(amps) ** 2
        kept = amps[layout.kept_indices]
        weights[t] = np.real(np.vdot(kept, kept))
        overlaps[t] = np.abs(np.vdot(ref, amps)) ** 2

    dist, _ = _postselected_distribution(probs_sum / trajectories, layout,
                                         noise, n)
    accept = float(weights.mean())
    if weights.sum() <= 0:
        raise InvariantError("no trajectory reached the accepted branch")
    fid = float(np.sqrt(max(overlaps.sum(), 0.0) / weights.sum()))
    # Standard error of the ratio estimator from batch means.
    batches = min(10, trajectories)
    w_b = [w.sum() for w in np.array_split(weights, batches)]
    o_b = [o.sum() for o in np.array_split(overlaps, batches)]
    est = np.sqrt(np.array([o / w for o, w in zip(o_b, w_b) if w > 0]))
    stderr = float(est.std(ddof=1) / np.sqrt(est.size)) if est.size > 1 else 0.0
    return NoisyRunResult(
        config=config, noise=noise, method="trajectories",
        hellinger=hellinger_fidelity(dist, ideal), state_fidelity=fid,
        acceptance_probability=accept, distribution=dist,
        ideal_distribution=ideal, trajectories=trajectories,
        state_fidelity_stderr=stderr)


def noisy_protocol_run(config: SwapConfig, noise: NoiseParams,
                       method: str = "exact",
                       trajectories: int | None = None) -> NoisyRunResult:
    """Run the postselected swap protocol under the gate-attached noise model.

    ``method="exact"`` evolves the full density matrix (at most 10 total
    qubits); ``method="trajectories"`` averages Kraus-sampled pure-state
    trajectories, ``trajectories`` of them (default ``config.shots`` or
    2000). Both methods share the same circuit and noise schedule.
    """
    layout = _protocol_layout(config)
    pure = run_protocol(replace(config, shots=0))
    ideal = OutcomeDistribution.from_state(pure.shared_state)
    if method == "exact":
        return _run_exact(config, noise, layout, ideal)
    if method == "trajectories":
        count = trajectories if trajectories is not None else \
            (config.shots if config.shots > 0 else 2000)
        if count < 1:
            raise ValueError("trajectory count must be positive")
        return _run_trajectories(config, noise, layout, ideal, count)
    raise ValueError(f"unknown method {method!r}")
