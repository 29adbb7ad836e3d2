"""Entanglement swapping across a chain of measurement nodes.

A run distributes ``nodes + 1`` copies of an ``n``-qubit entangled state
along a chain. Node ``q`` holds the B-side qubits of copy ``q - 1`` and the
A-side qubits of copy ``q``; it applies the inverse of a generator unitary
across that register and measures in the computational basis. The ends of
the chain (Alice's A side of copy 0, the last copy's B side) are left with a
shared state whose quality the run reports.

Three modes:

* ``postselect``: every copy is the target, nodes apply the inverse of a
  unitary whose first column is the target, and a run succeeds only when
  every node reads the all-zeros outcome.
* ``feedforward_uniform``: for targets with a flat Schmidt spectrum, nodes
  apply the inverse of the flattened generator; every outcome decodes to a
  shift-phase label and a single end correction restores the target.
* ``feedforward_general``: arbitrary spectra; all copies except the last are
  flat-spectrum intermediates, the last node contributes the target copy.

Simulation is sequential, so memory peaks at ``2 n`` qubits regardless of
the number of nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import Gate, apply_circuit, ghz_circuit, ghz_state
from .errors import ConfigError, InvariantError, SizeLimitError
from .qstate import (
    MAX_QUBITS,
    QubitPartition,
    StateVector,
    apply_unitary,
    inner_product,
    marginal_probabilities,
    measure_and_project,
    permute_qubits,
    states_close,
    tensor_product,
)
from .schmidt import SchmidtDecomposition, schmidt_decompose
from .unitaries import (
    TargetLikeFamily,
    build_flattened_unitary,
    build_target_like_family,
    complete_unitary_from_column,
    correction_unitary,
)

MODE_POSTSELECT = "postselect"
MODE_FF_UNIFORM = "feedforward_uniform"
MODE_FF_GENERAL = "feedforward_general"
MODES = frozenset({MODE_POSTSELECT, MODE_FF_UNIFORM, MODE_FF_GENERAL})

SIGMA0 = 0
UNIFORM_SPECTRUM_ATOL = 1e-9
PRUNE_TOL = 1e-14
MAX_BRANCHES = 1_000_000


@dataclass(frozen=True)
class SwapConfig:
    """Inputs of a protocol run."""

    target: StateVector
    partition: QubitPartition
    nodes: int = 1
    mode: str = MODE_POSTSELECT
    seed: int = 0
    shots: int = 0
    target_circuit: tuple[Gate, ...] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(
                f"unknown mode {self.mode!r}, expected one of {sorted(MODES)}")
        if self.nodes < 1:
            raise ConfigError("nodes must be at least 1")
        if self.shots < 0:
            raise ConfigError("shots must be non-negative")
        n = self.target.num_qubits
        if self.partition.num_qubits != n:
            raise ConfigError("partition does not cover the target register")
        if 2 * n > MAX_QUBITS:
            raise SizeLimitError(
                f"a node register needs {2 * n} qubits, limit is {MAX_QUBITS}")
        if self.target_circuit is not None:
            circuit = tuple(self.target_circuit)
            prepared = apply_circuit(StateVector.basis_state(n), circuit)
            if not states_close(prepared, self.target, atol=1e-8):
                raise ConfigError("target_circuit does not prepare the target")
            object.__setattr__(self, "target_circuit", circuit)


@dataclass(frozen=True)
class NodeRecord:
    """One node's measurement: outcome index, its probability, and the
    decoded shift-phase label when the mode defines one."""

    node_index: int
    outcome: int
    probability: float
    m: int | None = None
    l: int | None = None
    accepted: bool = True


@dataclass(frozen=True)
class EmpiricalStats:
    """Aggregates over sampled protocol trajectories."""

    shots: int
    accepted_shots: int
    path_counts: dict[tuple[int, ...], int] = field(repr=False)
    per_node_outcome_counts: tuple[dict[int, int], ...] = field(repr=False)
    min_corrected_fidelity: float | None = None

    @property
    def acceptance_rate(self) -> float:
        return self.accepted_shots / self.shots if self.shots else 0.0


@dataclass(frozen=True)
class SwapResult:
    """Outcome of a protocol run.

    ``shared_state`` lives on the target register layout; for feedforward
    modes it is the corrected end-to-end state of one seeded trajectory.
    """

    config: SwapConfig
    shared_state: StateVector
    records: tuple[NodeRecord, ...]
    success_probability: float
    fidelity_to_target: float
    mean_repetitions: float
    empirical: EmpiricalStats | None = None


@dataclass(frozen=True)
class Branch:
    """One leaf of the exact outcome tree."""

    outcomes: tuple[int, ...]
    probability: float
    state: StateVector
    records: tuple[NodeRecord, ...]
    accepted: bool


@dataclass(frozen=True)
class _Context:
    dec: SchmidtDecomposition
    meas: np.ndarray
    copies: tuple[StateVector, ...]
    wires: tuple[int, ...]
    extract_perm: tuple[int, ...]
    family: TargetLikeFamily | None


def _node_wires(partition: QubitPartition) -> list[int]:
    # Role r of the measurement operator reads the previous copy's qubit for
    # B roles and the fresh copy's qubit (offset by n) for A roles.
    n = partition.num_qubits
    in_b = set(partition.set_b)
    return [q if q in in_b else n + q for q in range(n)]


def _prepare(config: SwapConfig) -> _Context:
    dec = schmidt_decompose(config.target, config.partition)
    k = config.nodes
    if config.mode == MODE_POSTSELECT:
        generator = complete_unitary_from_column(config.target, SIGMA0)
        copies = (config.target,) * (k + 1)
        family = None
        meas = generator.dagger().matrix
    else:
        family = build_target_like_family(dec, SIGMA0)
        if config.mode == MODE_FF_UNIFORM:
            flat_weight = 1.0 / dec.rank
            if np.max(np.abs(dec.coefficients - flat_weight)) \
                    > UNIFORM_SPECTRUM_ATOL:
                raise ConfigError(
                    "feedforward_uniform requires a flat Schmidt spectrum; "
                    "use feedforward_general instead")
            copies = (family.state(0, 0),) * (k + 1)
        else:
            copies = (family.state(0, 0),) * k + (config.target,)
        meas = build_flattened_unitary(family).dagger().matrix
    perm = tuple(config.partition.set_a) + tuple(config.partition.set_b)
    return _Context(dec=dec, meas=meas, copies=copies,
                    wires=tuple(_node_wires(config.partition)),
                    extract_perm=perm, family=family)


def _node_joint(ctx: _Context, shared: StateVector, q: int) -> StateVector:
    joint = tensor_product(shared, ctx.copies[q])
    return apply_unitary(joint, ctx.meas, list(ctx.wires))


def _project_node(ctx: _Context, joint: StateVector,
                  outcome: int) -> tuple[StateVector, float]:
    post, prob = measure_and_project(joint, list(ctx.wires), outcome)
    return permute_qubits(post, list(ctx.extract_perm)), prob


def _decode(family: TargetLikeFamily, outcome: int) -> tuple[int, int]:
    label = family.decode(outcome)
    if label is None:
        raise InvariantError(
            f"outcome {outcome} lies outside the shift-phase family")
    return label


def _apply_correction(ctx: _Context, config: SwapConfig, state: StateVector,
                      m_total: int, l_total: int) -> StateVector:
    corr = correction_unitary(ctx.family, m_total, l_total)
    return apply_unitary(state, corr, list(config.partition.set_a))


def compute_r_matrix(u, dec: SchmidtDecomposition, outcome: int = SIGMA0) -> np.ndarray:
    """Overlap matrix ``r[i, j] = <outcome| u (a_j on A roles, b_i on B roles)>``.

    ``u`` acts on the target register layout. Row ``i`` indexes the B-side
    Schmidt vector fed in from the previous copy, column ``j`` the A-side
    vector from the next copy.
    """
    mat = u.matrix if hasattr(u, "matrix") else np.asarray(u, dtype=complex)
    part = dec.partition
    perm = list(part.set_a) + list(part.set_b)
    d = dec.rank
    out = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            pair = tensor_product(StateVector(part.n_a, dec.vectors_a[j]),
                                  StateVector(part.n_b, dec.vectors_b[i]))
            arranged = permute_qubits(pair, perm)
            out[i, j] = (mat @ arranged.amplitudes)[outcome]
    return out


def _run_postselect(config: SwapConfig, ctx: _Context) -> SwapResult:
    shared = ctx.copies[0]
    records = []
    total = 1.0
    for q in range(1, config.nodes + 1):
        joint = _node_joint(ctx, shared, q)
        shared, prob = _project_node(ctx, joint, SIGMA0)
        records.append(NodeRecord(q, SIGMA0, prob))
        total *= prob
    fid = abs(inner_product(config.target, shared))
    stats = _sample_stats(config, ctx) if config.shots else None
    return SwapResult(config=config, shared_state=shared,
                      records=tuple(records), success_probability=total,
                      fidelity_to_target=fid, mean_repetitions=1.0 / total,
                      empirical=stats)


def _run_feedforward(config: SwapConfig, ctx: _Context) -> SwapResult:
    seq = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(seq[0])
    shared = ctx.copies[0]
    records = []
    m_total = l_total = 0
    for q in range(1, config.nodes + 1):
        joint = _node_joint(ctx, shared, q)
        probs = marginal_probabilities(joint, list(ctx.wires))
        outcome = int(rng.choice(probs.size, p=probs / probs.sum()))
        shared, prob = _project_node(ctx, joint, outcome)
        m, l = _decode(ctx.family, outcome)
        records.append(NodeRecord(q, outcome, prob, m=m, l=l))
        m_total += m
        l_total += l
    shared = _apply_correction(ctx, config, shared, m_total, l_total)
    fid = abs(inner_product(config.target, shared))
    stats = _sample_stats(config, ctx) if config.shots else None
    return SwapResult(config=config, shared_state=shared,
                      records=tuple(records), success_probability=1.0,
                      fidelity_to_target=fid, mean_repetitions=1.0,
                      empirical=stats)


def _sample_stats(config: SwapConfig, ctx: _Context) -> EmpiricalStats:
    """Sample trajectories shot by shot, caching states per outcome prefix."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1])
    k = config.nodes
    postselect = config.mode == MODE_POSTSELECT
    state_cache: dict[tuple[int, ...], StateVector] = {(): ctx.copies[0]}
    dist_cache: dict[tuple[int, ...], tuple[StateVector, np.ndarray]] = {}
    fidelity_cache: dict[tuple[int, ...], float] = {}
    path_counts: dict[tuple[int, ...], int] = {}
    per_node: tuple[dict[int, int], ...] = tuple({} for _ in range(k))
    accepted_shots = 0
    min_fid = None

    def node_dist(prefix):
        if prefix not in dist_cache:
            joint = _node_joint(ctx, state_cache[prefix], len(prefix) + 1)
            probs = marginal_probabilities(joint, list(ctx.wires))
            dist_cache[prefix] = (joint, probs / probs.sum())
        return dist_cache[prefix]

    def advance(prefix, outcome):
        key = prefix + (outcome,)
        if key not in state_cache:
            joint, _ = node_dist(prefix)
            state_cache[key], _ = _project_node(ctx, joint, outcome)
        return key

    def corrected_fidelity(path):
        if path not in fidelity_cache:
            labels = [_decode(ctx.family, sig) for sig in path]
            final = _apply_correction(
                ctx, config, state_cache[path],
                sum(m for m, _ in labels), sum(l for _, l in labels))
            fidelity_cache[path] = abs(inner_product(config.target, final))
        return fidelity_cache[path]

    for _ in range(config.shots):
        prefix: tuple[int, ...] = ()
        accepted = True
        for q in range(k):
            _, probs = node_dist(prefix)
            outcome = int(rng.choice(probs.size, p=probs))
            per_node[q][outcome] = per_node[q].get(outcome, 0) + 1
            if postselect and outcome != SIGMA0:
                prefix = prefix + (outcome,)
                accepted = False
                break
            prefix = advance(prefix, outcome)
        path_counts[prefix] = path_counts.get(prefix, 0) + 1
        if accepted:
            accepted_shots += 1
            if not postselect:
                fid = corrected_fidelity(prefix)
                min_fid = fid if min_fid is None else min(min_fid, fid)

    return EmpiricalStats(shots=config.shots, accepted_shots=accepted_shots,
                          path_counts=path_counts,
                          per_node_outcome_counts=per_node,
                          min_corrected_fidelity=min_fid)


def run_protocol(config: SwapConfig) -> SwapResult:
    ctx = _prepare(config)
    if config.mode == MODE_POSTSELECT:
        return _run_postselect(config, ctx)
    return _run_feedforward(config, ctx)


def run_single_node(target: StateVector, partition: QubitPartition,
                    **kwargs) -> SwapResult:
    """One-node postselected swap of two target copies."""
    return run_protocol(SwapConfig(target, partition, nodes=1, **kwargs))


def run_network(target: StateVector, partition: QubitPartition, nodes: int,
                **kwargs) -> SwapResult:
    """Chain of postselected swap nodes sharing one target state."""
    return run_protocol(SwapConfig(target, partition, nodes=nodes, **kwargs))


def run_feedforward(target: StateVector, partition: QubitPartition,
                    nodes: int = 1, uniform: bool | None = None,
                    **kwargs) -> SwapResult:
    """Postselection-free swap; picks the uniform variant when the spectrum
    is flat unless ``uniform`` overrides the choice."""
    if uniform is None:
        dec = schmidt_decompose(target, partition)
        uniform = bool(np.max(np.abs(dec.coefficients - 1.0 / dec.rank))
                       <= UNIFORM_SPECTRUM_ATOL)
    mode = MODE_FF_UNIFORM if uniform else MODE_FF_GENERAL
    return run_protocol(SwapConfig(target, partition, nodes=nodes, mode=mode,
                                   **kwargs))


def enumerate_branches(config: SwapConfig, prune_tol: float = PRUNE_TOL,
                       max_branches: int = MAX_BRANCHES) -> list[Branch]:
    """Exact outcome tree of a run.

    Every leaf carries its joint probability (product of the per-node
    conditional probabilities) and the end-to-end state on the target
    layout. Postselected runs stop at the first non-zero outcome, so failed
    paths are leaves; feedforward leaves are corrected before being stored.
    Subtrees below ``prune_tol`` joint probability are dropped.
    """
    ctx = _prepare(config)
    postselect = config.mode == MODE_POSTSELECT
    branches: list[Branch] = []

    def emit(outcomes, prob, state, records, accepted):
        if len(branches) >= max_branches:
            raise SizeLimitError(
                f"branch enumeration exceeded {max_branches} leaves")
        if accepted and not postselect:
            labels = [(r.m, r.l) for r in records]
            state = _apply_correction(ctx, config, state,
                                      sum(m for m, _ in labels),
                                      sum(l for _, l in labels))
        branches.append(Branch(outcomes=tuple(outcomes), probability=prob,
                               state=state, records=tuple(records),
                               accepted=accepted))

    def walk(shared, q, outcomes, records, prob):
        if q > config.nodes:
            emit(outcomes, prob, shared, records, True)
            return
        joint = _node_joint(ctx, shared, q)
        probs = marginal_probabilities(joint, list(ctx.wires))
        for sig in np.flatnonzero(probs > prune_tol):
            sig = int(sig)
            joint_prob = prob * probs[sig]
            if joint_prob <= prune_tol:
                continue
            post, cond = _project_node(ctx, joint, sig)
            if postselect:
                rec = NodeRecord(q, sig, cond, accepted=sig == SIGMA0)
                if sig == SIGMA0:
                    walk(post, q + 1, outcomes + [sig], records + [rec],
                         joint_prob)
                else:
                    emit(outcomes + [sig], joint_prob, post, records + [rec],
                         False)
            else:
                m, l = _decode(ctx.family, sig)
                rec = NodeRecord(q, sig, cond, m=m, l=l)
                walk(post, q + 1, outcomes + [sig], records + [rec],
                     joint_prob)

    walk(ctx.copies[0], 1, [], [], 1.0)
    return branches


def ghz_config(num_qubits: int, nodes: int = 1, mode: str = MODE_POSTSELECT,
               seed: int = 0, shots: int = 0) -> SwapConfig:
    """Swap configuration for a GHZ target split across the middle."""
    target = ghz_state(num_qubits)
    partition = QubitPartition.leading(num_qubits, max(1, num_qubits // 2))
    return SwapConfig(target=target, partition=partition, nodes=nodes,
                      mode=mode, seed=seed, shots=shots,
                      target_circuit=tuple(ghz_circuit(num_qubits)))
