"""Tests for the swap protocol: exact runs, enumeration, and sampling."""

import numpy as np
import pytest

from swapnet.circuits import ghz_circuit, state_with_spectrum, theta_state
from swapnet.errors import ConfigError, SizeLimitError
from swapnet.protocol import (
    MODE_FF_GENERAL,
    MODE_FF_UNIFORM,
    MODE_POSTSELECT,
    SwapConfig,
    compute_r_matrix,
    enumerate_branches,
    ghz_config,
    run_feedforward,
    run_network,
    run_protocol,
    run_single_node,
)
from swapnet.qstate import (
    QubitPartition,
    StateVector,
    inner_product,
    permute_qubits,
    states_close,
    tensor_product,
)
from swapnet.schmidt import (
    predicted_fidelity_network,
    predicted_fidelity_single,
    predicted_postselection_prob,
    predicted_shared_coeffs,
    renyi_entropy,
    schmidt_decompose,
)
from swapnet.unitaries import build_flattened_unitary, build_target_like_family, complete_unitary_from_column

from conftest import random_state

SPECTRUM = [0.4, 0.3, 0.2, 0.1]


def bell_state():
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = np.sqrt(0.5)
    return StateVector(2, amps)


class TestWorkedExample:
    """Frozen values for the reference spectrum {0.4, 0.3, 0.2, 0.1}."""

    @pytest.fixture
    def target(self):
        return state_with_spectrum(SPECTRUM, n_a=2, n_b=2, seed=5)

    def test_single_node_success_probability(self, target):
        result = run_single_node(target, QubitPartition.leading(4, 2))
        assert result.success_probability == pytest.approx(0.1, abs=1e-9)
        assert result.mean_repetitions == pytest.approx(10.0, abs=1e-7)

    def test_single_node_fidelity(self, target):
        result = run_single_node(target, QubitPartition.leading(4, 2))
        assert result.fidelity_to_target == pytest.approx(
            0.9486832980505138, abs=1e-12)

    def test_single_node_output_spectrum(self, target):
        result = run_single_node(target, QubitPartition.leading(4, 2))
        dec = schmidt_decompose(result.shared_state,
                                QubitPartition.leading(4, 2))
        assert np.allclose(dec.coefficients, [0.64, 0.27, 0.08, 0.01],
                           atol=1e-9)

    def test_two_nodes(self, target):
        result = run_network(target, QubitPartition.leading(4, 2), nodes=2)
        assert result.success_probability == pytest.approx(0.013, abs=1e-9)
        assert result.records[0].probability == pytest.approx(0.1, abs=1e-9)
        assert result.records[1].probability == pytest.approx(0.13, abs=1e-9)
        assert result.fidelity_to_target == pytest.approx(
            0.8770580193070292, abs=1e-12)
        dec = schmidt_decompose(result.shared_state,
                                QubitPartition.leading(4, 2))
        want = np.array([1024, 243, 32, 1]) / 1300
        assert np.allclose(dec.coefficients, want, atol=1e-9)


class TestNetworkPredictions:
    @pytest.mark.parametrize("nodes", [1, 2, 3])
    def test_closed_forms(self, nodes):
        coeffs = np.array([0.5, 0.3, 0.15, 0.05])
        target = state_with_spectrum(coeffs, n_a=2, n_b=2, seed=9)
        result = run_network(target, QubitPartition.leading(4, 2), nodes=nodes)
        assert result.success_probability == pytest.approx(
            np.sum(coeffs ** (2 * nodes + 1)), abs=1e-9)
        assert result.fidelity_to_target == pytest.approx(
            predicted_fidelity_network(coeffs, nodes), abs=1e-9)
        dec = schmidt_decompose(result.shared_state,
                                QubitPartition.leading(4, 2))
        assert np.allclose(dec.coefficients,
                           predicted_shared_coeffs(coeffs, nodes), atol=1e-9)

    @pytest.mark.parametrize("nodes", [1, 2, 3])
    def test_per_node_probabilities_telescope(self, nodes):
        coeffs = np.array([0.6, 0.25, 0.1, 0.05])
        target = state_with_spectrum(coeffs, n_a=2, n_b=2, seed=11)
        result = run_network(target, QubitPartition.leading(4, 2), nodes=nodes)
        for q, rec in enumerate(result.records, start=1):
            assert rec.probability == pytest.approx(
                predicted_postselection_prob(coeffs, q), abs=1e-9)

    @pytest.mark.parametrize("seed,set_a,set_b", [
        (21, (0, 1), (2, 3)),
        (22, (0, 2), (1, 3)),
        (23, (2,), (0, 1, 3)),
    ])
    def test_random_targets_any_partition(self, seed, set_a, set_b):
        part = QubitPartition(set_a=set_a, set_b=set_b)
        target = random_state(4, seed=seed)
        lam = schmidt_decompose(target, part).coefficients
        result = run_single_node(target, part)
        assert result.success_probability == pytest.approx(
            np.sum(lam**3), abs=1e-9)
        assert result.fidelity_to_target == pytest.approx(
            predicted_fidelity_single(lam), abs=1e-9)

    def test_entropy_route_matches_run(self):
        coeffs = np.array([0.45, 0.3, 0.2, 0.05])
        target = state_with_spectrum(coeffs, n_a=2, n_b=2, seed=13)
        result = run_network(target, QubitPartition.leading(4, 2), nodes=2)
        s3, s5 = renyi_entropy(coeffs, 3.0), renyi_entropy(coeffs, 5.0)
        assert result.fidelity_to_target == pytest.approx(
            np.exp(2 * (s5 - s3)), abs=1e-9)


class TestSchmidtInheritance:
    def test_output_keeps_schmidt_vectors(self):
        part = QubitPartition(set_a=(0, 2), set_b=(1, 3))
        target = random_state(4, seed=31)
        dec = schmidt_decompose(target, part)
        result = run_single_node(target, part)
        new = dec.coefficients**3 / np.sum(dec.coefficients**3)
        expected = np.einsum("i,ia,ib->ba", np.sqrt(new), dec.vectors_a,
                             dec.vectors_b).reshape(-1)
        arranged = permute_qubits(StateVector(4, expected),
                                  list(part.set_a) + list(part.set_b))
        assert states_close(result.shared_state, arranged, atol=1e-9,
                            up_to_global_phase=False)


class TestEnumeration:
    def test_bell_has_four_equal_branches(self):
        config = SwapConfig(bell_state(), QubitPartition.leading(2, 1))
        branches = enumerate_branches(config)
        assert len(branches) == 4
        assert all(b.probability == pytest.approx(0.25, abs=1e-12)
                   for b in branches)
        assert sum(b.accepted for b in branches) == 1

    def test_probabilities_sum_to_one(self):
        target = random_state(4, seed=41)
        config = SwapConfig(target, QubitPartition.leading(4, 2), nodes=2)
        branches = enumerate_branches(config)
        assert sum(b.probability for b in branches) == pytest.approx(
            1.0, abs=1e-9)

    def test_accepted_branch_matches_run(self):
        target = random_state(4, seed=42)
        config = SwapConfig(target, QubitPartition.leading(4, 2), nodes=2)
        accepted = [b for b in enumerate_branches(config) if b.accepted]
        assert len(accepted) == 1
        result = run_protocol(config)
        assert accepted[0].probability == pytest.approx(
            result.success_probability, abs=1e-9)
        assert states_close(accepted[0].state, result.shared_state,
                            up_to_global_phase=False)

    def test_failed_leaves_stop_at_first_rejection(self):
        target = random_state(4, seed=43)
        config = SwapConfig(target, QubitPartition.leading(4, 2), nodes=3)
        for b in enumerate_branches(config):
            if not b.accepted:
                assert b.outcomes[-1] != 0
                assert all(o == 0 for o in b.outcomes[:-1])

    @pytest.mark.parametrize("nodes", [1, 2])
    def test_feedforward_uniform_totality(self, nodes):
        config = ghz_config(4, nodes=nodes, mode=MODE_FF_UNIFORM)
        branches = enumerate_branches(config)
        assert len(branches) == 4**nodes
        assert sum(b.probability for b in branches) == pytest.approx(
            1.0, abs=1e-9)
        for b in branches:
            assert b.accepted
            assert b.probability == pytest.approx(0.25**nodes, abs=1e-9)
            fid = abs(inner_product(config.target, b.state))
            assert fid == pytest.approx(1.0, abs=1e-9)

    def test_feedforward_general_nonuniform_target(self):
        target = theta_state(np.pi / 3)
        config = SwapConfig(target, QubitPartition.leading(2, 1),
                            mode=MODE_FF_GENERAL)
        branches = enumerate_branches(config)
        assert len(branches) == 4
        for b in branches:
            assert b.probability == pytest.approx(0.25, abs=1e-9)
            fid = abs(inner_product(target, b.state))
            assert fid == pytest.approx(1.0, abs=1e-9)

    def test_feedforward_general_rank_four_two_nodes(self):
        target = state_with_spectrum(SPECTRUM, n_a=2, n_b=2, seed=44)
        config = SwapConfig(target, QubitPartition.leading(4, 2), nodes=2,
                            mode=MODE_FF_GENERAL)
        branches = enumerate_branches(config)
        assert len(branches) == 16**2
        for b in branches:
            assert b.probability == pytest.approx(1 / 256, abs=1e-9)
            fid = abs(inner_product(target, b.state))
            assert fid == pytest.approx(1.0, abs=1e-9)

    def test_branch_records_decode_outcomes(self):
        config = ghz_config(2, mode=MODE_FF_UNIFORM)
        family = build_target_like_family(
            schmidt_decompose(config.target, config.partition))
        for b in enumerate_branches(config):
            rec = b.records[0]
            assert (rec.m, rec.l) == family.decode(rec.outcome)

    def test_branch_cap(self):
        config = ghz_config(4, nodes=2, mode=MODE_FF_UNIFORM)
        with pytest.raises(SizeLimitError):
            enumerate_branches(config, max_branches=3)


class TestFeedforwardRuns:
    def test_uniform_mode_rejects_skewed_spectrum(self):
        with pytest.raises(ConfigError):
            run_protocol(SwapConfig(theta_state(np.pi / 3),
                                    QubitPartition.leading(2, 1),
                                    mode=MODE_FF_UNIFORM))

    def test_dispatch_picks_variant_by_spectrum(self):
        flat = run_feedforward(bell_state(), QubitPartition.leading(2, 1))
        skew = run_feedforward(theta_state(np.pi / 3),
                               QubitPartition.leading(2, 1))
        assert flat.config.mode == MODE_FF_UNIFORM
        assert skew.config.mode == MODE_FF_GENERAL

    @pytest.mark.parametrize("nodes", [1, 2, 3])
    def test_trajectory_always_succeeds(self, nodes):
        target = state_with_spectrum(SPECTRUM, n_a=2, n_b=2, seed=51)
        result = run_feedforward(target, QubitPartition.leading(4, 2),
                                 nodes=nodes, seed=7)
        assert result.success_probability == 1.0
        assert result.mean_repetitions == 1.0
        assert result.fidelity_to_target == pytest.approx(1.0, abs=1e-9)
        assert len(result.records) == nodes
        for rec in result.records:
            assert rec.m is not None and rec.l is not None
            assert rec.probability == pytest.approx(1 / 16, abs=1e-9)

    def test_seed_changes_sampled_path(self):
        config_a = ghz_config(4, nodes=2, mode=MODE_FF_UNIFORM, seed=1)
        config_b = ghz_config(4, nodes=2, mode=MODE_FF_UNIFORM, seed=2)
        outcomes = lambda cfg: [r.outcome for r in run_protocol(cfg).records]
        seen = {tuple(outcomes(config_a)), tuple(outcomes(config_b))}
        # Different seeds need not differ, but fidelity must hold for both.
        assert all(len(path) == 2 for path in seen)


class TestSampling:
    def test_bell_acceptance_rate(self):
        config = SwapConfig(bell_state(), QubitPartition.leading(2, 1),
                            shots=10_000, seed=3)
        stats = run_protocol(config).empirical
        sigma = np.sqrt(0.25 * 0.75 / 10_000)
        assert abs(stats.acceptance_rate - 0.25) < 3 * sigma

    def test_path_counts_match_enumeration(self):
        target = state_with_spectrum([0.7, 0.3], n_a=1, n_b=1, seed=61)
        config = SwapConfig(target, QubitPartition.leading(2, 1), nodes=2,
                            shots=20_000, seed=8)
        stats = run_protocol(config).empirical
        probs = {b.outcomes: b.probability
                 for b in enumerate_branches(config)}
        assert sum(stats.path_counts.values()) == config.shots
        for path, count in stats.path_counts.items():
            p = probs[path]
            sigma = np.sqrt(config.shots * p * (1 - p))
            assert abs(count - config.shots * p) <= 4 * sigma + 1

    def test_feedforward_outcome_uniformity(self):
        config = ghz_config(2, mode=MODE_FF_UNIFORM, shots=4000, seed=5)
        stats = run_protocol(config).empirical
        assert stats.accepted_shots == 4000
        counts = stats.per_node_outcome_counts[0]
        assert len(counts) == 4
        sigma = np.sqrt(4000 * 0.25 * 0.75)
        for count in counts.values():
            assert abs(count - 1000) < 4 * sigma
        assert stats.min_corrected_fidelity == pytest.approx(1.0, abs=1e-9)

    def test_sampling_deterministic_for_seed(self):
        config = SwapConfig(bell_state(), QubitPartition.leading(2, 1),
                            shots=500, seed=12)
        a = run_protocol(config).empirical
        b = run_protocol(config).empirical
        assert a.path_counts == b.path_counts
        assert a.per_node_outcome_counts == b.per_node_outcome_counts


class TestRMatrix:
    def test_diagonal_for_target_generator(self):
        part = QubitPartition.leading(4, 2)
        target = random_state(4, seed=71)
        dec = schmidt_decompose(target, part)
        u = complete_unitary_from_column(target).dagger()
        r = compute_r_matrix(u, dec)
        assert np.allclose(r, np.diag(np.sqrt(dec.coefficients)), atol=1e-10)

    def test_shift_phase_structure_for_flattened_generator(self):
        part = QubitPartition.leading(4, 2)
        target = state_with_spectrum(SPECTRUM, n_a=2, n_b=2, seed=72)
        dec = schmidt_decompose(target, part)
        family = build_target_like_family(dec)
        u = build_flattened_unitary(family).dagger()
        d = dec.rank
        omega = np.exp(2j * np.pi / d)
        for m in range(d):
            for l in range(d):
                r = compute_r_matrix(u, dec, int(family.sigma[m, l]))
                for i in range(d):
                    for j in range(d):
                        want = (omega ** (-j * l) / np.sqrt(d)
                                if i == (j + m) % d else 0.0)
                        assert r[i, j] == pytest.approx(want, abs=1e-10)


class TestEdgesAndValidation:
    def test_product_state_swaps_perfectly(self):
        target = StateVector.basis_state(2, 0)
        for mode in (MODE_POSTSELECT, MODE_FF_GENERAL):
            result = run_protocol(SwapConfig(
                target, QubitPartition.leading(2, 1), mode=mode))
            assert result.success_probability == pytest.approx(1.0, abs=1e-9)
            assert result.fidelity_to_target == pytest.approx(1.0, abs=1e-9)

    def test_ghz_postselect_quarter_probability(self):
        for n in (2, 3, 4):
            result = run_protocol(ghz_config(n))
            assert result.success_probability == pytest.approx(0.25, abs=1e-9)
            assert result.fidelity_to_target == pytest.approx(1.0, abs=1e-9)

    def test_ghz_config_carries_circuit(self):
        config = ghz_config(4)
        assert config.target_circuit is not None
        assert config.partition == QubitPartition.leading(4, 2)

    def test_rejects_unknown_mode(self):
        with pytest.raises(ConfigError):
            SwapConfig(bell_state(), QubitPartition.leading(2, 1),
                       mode="teleport")

    def test_rejects_bad_node_count_and_shots(self):
        with pytest.raises(ConfigError):
            SwapConfig(bell_state(), QubitPartition.leading(2, 1), nodes=0)
        with pytest.raises(ConfigError):
            SwapConfig(bell_state(), QubitPartition.leading(2, 1), shots=-1)

    def test_rejects_partition_mismatch(self):
        with pytest.raises(ConfigError):
            SwapConfig(bell_state(), QubitPartition.leading(3, 1))

    def test_rejects_oversized_register(self):
        big = StateVector.basis_state(13, 0)
        with pytest.raises(SizeLimitError):
            SwapConfig(big, QubitPartition.leading(13, 6))

    def test_rejects_wrong_target_circuit(self):
        with pytest.raises(ConfigError):
            SwapConfig(bell_state(), QubitPartition.leading(2, 1),
                       target_circuit=tuple(ghz_circuit(2))[:1])
