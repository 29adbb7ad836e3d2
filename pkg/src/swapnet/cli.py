"""Command line experiment runner.

Each subcommand builds one result table, writes it as CSV (default) or JSON,
and drops a ``<out>.meta.json`` sidecar recording the resolved configuration,
its hash, the column schema, and a summary block. Rerunning an identical
configuration rewrites the table byte for byte; only the sidecar timestamp
moves.

Config files are YAML mappings whose keys match the subcommand's defaults;
command line flags override file values, which override the defaults. Nested
sections (``target``, ``noise``, ``grids``) replace their default wholesale.
Sweep points run in a process pool when the ``SWAPNET_WORKERS`` environment
variable asks for more than one worker; every point seeds itself from the
master seed and its own index, so results never depend on the worker count.

Exit codes: 0 success, 2 configuration error, 3 register size overflow,
4 numerical invariant violation.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
import yaml

from . import __version__
from .circuits import (
    BrickworkSpec,
    brickwork_circuit,
    ghz_circuit,
    ghz_state,
    haar_random_state,
    random_brickwork,
    state_with_spectrum,
    theta_circuit,
    theta_state,
)
from .errors import ConfigError, InvariantError, SizeLimitError, SwapnetError
from .noise import (
    DEFAULT_NOISE_GRIDS,
    NoiseParams,
    noise_params_for,
    noisy_protocol_run,
)
from .protocol import (
    MODE_FF_GENERAL,
    MODE_FF_UNIFORM,
    SwapConfig,
    run_protocol,
)
from .qstate import MAX_QUBITS, QubitPartition, StateVector
from .schmidt import (
    predicted_fidelity_network,
    predicted_fidelity_single,
    predicted_postselection_prob,
    predicted_shared_coeffs,
    schmidt_decompose,
)
from .unitaries import build_target_like_family

WORKERS_ENV = "SWAPNET_WORKERS"
SCHEMA_VERSION = 1
UNIFORM_SPECTRUM_ATOL = 1e-9

_DEFAULTS: dict[str, dict] = {
    "swap": {
        "target": {"kind": "spectrum",
                   "coefficients": [0.4, 0.3, 0.2, 0.1]},
        "nodes": 1,
        "seed": 0,
        "shots": 0,
    },
    "network": {
        "target": {"kind": "spectrum",
                   "coefficients": [0.4, 0.3, 0.2, 0.1]},
        "nodes": 3,
        "seed": 0,
        "shots": 0,
    },
    "theta-sweep": {
        "points": 50,
        "theta_max": float(np.pi / 2),
        "noise": None,
        "seed": 0,
        "shots": 0,
    },
    "random-circuits": {
        "sizes": [4, 6, 8, 10, 12],
        "samples": 20,
        "cycles": None,
        "seed": 0,
    },
    "noise-scan": {
        "target": {"kind": "ghz", "n": 2},
        "sizes": [2, 3],
        "sources": list(DEFAULT_NOISE_GRIDS),
        "grids": None,
        "method": "exact",
        "trajectories": 2000,
        "seed": 0,
    },
    "feedforward-demo": {
        "target": {"kind": "ghz", "n": 3},
        "nodes": 1,
        "mode": None,
        "seed": 0,
        "shots": 4096,
    },
}

_SUBCOMMAND_HELP = {
    "swap": "run the postselected swap and compare against closed forms",
    "network": "chain several nodes, one table row per node",
    "theta-sweep": "sweep the two-qubit theta family through a single swap",
    "random-circuits": "Schmidt analytics of random brickwork states per size",
    "noise-scan": "noisy runs across the built-in noise source grids",
    "feedforward-demo": "sample feedforward outcomes and their corrections",
}


@dataclass
class ResultTable:
    """Named columns plus row dictionaries in native Python types."""

    columns: tuple[str, ...]
    rows: list[dict]
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if tuple(row.keys()) != tuple(self.columns):
                raise InvariantError("table row does not match the schema")


# ---------------------------------------------------------------- config ---


def _as_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be at least {minimum}, got {value}")
    return value


def _as_float(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _check_keys(section: dict, allowed, where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(unknown)}")


def _resolve_target(spec) -> tuple[StateVector, QubitPartition, tuple | None]:
    """Build (state, partition, preparation circuit) from a target section."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("target must be a mapping with a 'kind' key")
    kind = spec["kind"]
    circuit = None
    if kind == "ghz":
        _check_keys(spec, {"kind", "n", "partition"}, "target")
        n = _as_int(spec.get("n", 3), "target.n", minimum=2)
        state = ghz_state(n)
        circuit = tuple(ghz_circuit(n))
    elif kind == "theta":
        _check_keys(spec, {"kind", "theta", "partition"}, "target")
        if "theta" not in spec:
            raise ConfigError("theta target needs a 'theta' angle")
        theta = _as_float(spec["theta"], "target.theta")
        state = theta_state(theta)
        circuit = tuple(theta_circuit(theta))
    elif kind == "spectrum":
        _check_keys(spec, {"kind", "coefficients", "n_a", "n_b", "seed",
                           "partition"}, "target")
        coeffs = spec.get("coefficients")
        if not isinstance(coeffs, (list, tuple)) or not coeffs:
            raise ConfigError("spectrum target needs a coefficient list")
        min_side = max(1, (len(coeffs) - 1).bit_length())
        n_a = _as_int(spec.get("n_a", min_side), "target.n_a", minimum=1)
        n_b = _as_int(spec.get("n_b", min_side), "target.n_b", minimum=1)
        state = state_with_spectrum([float(c) for c in coeffs], n_a, n_b,
                                    seed=_as_int(spec.get("seed", 0),
                                                 "target.seed"))
    elif kind == "haar":
        _check_keys(spec, {"kind", "n", "seed", "partition"}, "target")
        n = _as_int(spec.get("n", 4), "target.n", minimum=2)
        state = haar_random_state(n, seed=_as_int(spec.get("seed", 0),
                                                  "target.seed"))
    elif kind == "brickwork":
        _check_keys(spec, {"kind", "n", "cycles", "seed", "partition"},
                    "target")
        n = _as_int(spec.get("n", 6), "target.n", minimum=2)
        cycles = _as_int(spec.get("cycles", 2 * n), "target.cycles",
                         minimum=0)
        bw = BrickworkSpec(n, cycles, seed=_as_int(spec.get("seed", 0),
                                                   "target.seed"))
        state = random_brickwork(bw)
        circuit = tuple(brickwork_circuit(bw))
    else:
        raise ConfigError(
            f"unknown target kind {kind!r}; expected ghz, theta, spectrum, "
            f"haar, or brickwork")

    n = state.num_qubits
    if "partition" in spec and spec["partition"] is not None:
        side_a = spec["partition"]
        if not isinstance(side_a, (list, tuple)) or not side_a:
            raise ConfigError("target.partition must list the A-side qubits")
        set_a = tuple(sorted(_as_int(q, "target.partition[]") for q in side_a))
        set_b = tuple(q for q in range(n) if q not in set_a)
        partition = QubitPartition(set_a, set_b)
    else:
        partition = QubitPartition.leading(n, max(1, n // 2))
    return state, partition, circuit


def _resolve_noise(spec) -> NoiseParams:
    if spec is None:
        return NoiseParams()
    if not isinstance(spec, dict):
        raise ConfigError("noise must be a mapping")
    if "source" in spec:
        _check_keys(spec, {"source", "strength"}, "noise")
        return noise_params_for(spec["source"],
                                _as_float(spec.get("strength", 0.0),
                                          "noise.strength"))
    allowed = {"eta_1q", "eta_ecr", "t1", "t2", "gate_time", "p01", "p10"}
    _check_keys(spec, allowed, "noise")
    return NoiseParams(**{k: _as_float(v, f"noise.{k}")
                          for k, v in spec.items()})


def _point_seed(master: int, index: int) -> int:
    seq = np.random.SeedSequence(master, spawn_key=(index,))
    return int(seq.generate_state(1)[0])


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    if count < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1")
    return count


def _map_points(fn, points: list) -> list:
    workers = min(_worker_count(), len(points))
    if workers <= 1:
        return [fn(p) for p in points]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, points))


# ----------------------------------------------------------- subcommands ---


def _swap_row(config: dict, nodes: int) -> dict:
    target, partition, circuit = _resolve_target(config["target"])
    swap_cfg = SwapConfig(target=target, partition=partition, nodes=nodes,
                          seed=_as_int(config["seed"], "seed"),
                          shots=_as_int(config["shots"], "shots", minimum=0),
                          target_circuit=circuit)
    result = run_protocol(swap_cfg)
    lam = schmidt_decompose(target, partition).coefficients
    shared = schmidt_decompose(result.shared_state, partition).coefficients
    empirical = result.empirical
    return {
        "num_qubits": target.num_qubits,
        "nodes": nodes,
        "fidelity_predicted": predicted_fidelity_network(lam, nodes),
        "fidelity_simulated": result.fidelity_to_target,
        "p0_predicted": float(np.sum(lam ** (2 * nodes + 1))),
        "p0_simulated": result.success_probability,
        "mean_repetitions": result.mean_repetitions,
        "shots": swap_cfg.shots,
        "acceptance_frequency": (empirical.accepted_shots / empirical.shots
                                 if empirical else None),
        "spectrum_target": [float(x) for x in lam],
        "spectrum_shared_predicted": [float(x) for x in
                                      predicted_shared_coeffs(lam, nodes)],
        "spectrum_shared_simulated": [float(x) for x in shared],
    }


def cmd_swap(config: dict) -> ResultTable:
    nodes = _as_int(config["nodes"], "nodes", minimum=1)
    row = _swap_row(config, nodes)
    return ResultTable(tuple(row), [row],
                       summary={"fidelity": row["fidelity_simulated"],
                                "p0": row["p0_simulated"]})


def cmd_network(config: dict) -> ResultTable:
    nodes = _as_int(config["nodes"], "nodes", minimum=1)
    target, partition, circuit = _resolve_target(config["target"])
    lam = schmidt_decompose(target, partition).coefficients
    rows = []
    for q in range(1, nodes + 1):
        swap_cfg = SwapConfig(target=target, partition=partition, nodes=q,
                              seed=_as_int(config["seed"], "seed"),
                              target_circuit=circuit)
        result = run_protocol(swap_cfg)
        shared = schmidt_decompose(result.shared_state,
                                   partition).coefficients
        rows.append({
            "node": q,
            "acceptance_predicted": predicted_postselection_prob(lam, q),
            "acceptance_simulated": result.records[-1].probability,
            "cumulative_p0_predicted": float(np.sum(lam ** (2 * q + 1))),
            "cumulative_p0_simulated": result.success_probability,
            "fidelity_predicted": predicted_fidelity_network(lam, q),
            "fidelity_simulated": result.fidelity_to_target,
            "spectrum_predicted": [float(x) for x in
                                   predicted_shared_coeffs(lam, q)],
            "spectrum_simulated": [float(x) for x in shared],
        })
    return ResultTable(tuple(rows[0]), rows,
                       summary={"nodes": nodes,
                                "final_fidelity":
                                    rows[-1]["fidelity_simulated"]})


def _theta_point(args: tuple) -> dict:
    theta, seed, shots, noise_spec = args
    target = theta_state(theta)
    partition = QubitPartition.leading(2, 1)
    swap_cfg = SwapConfig(target=target, partition=partition, seed=seed,
                          shots=shots,
                          target_circuit=tuple(theta_circuit(theta)))
    result = run_protocol(swap_cfg)
    lam = schmidt_decompose(target, partition).coefficients
    empirical = result.empirical
    row = {
        "theta": float(theta),
        "fidelity_ideal": predicted_fidelity_single(lam),
        "fidelity_simulated": result.fidelity_to_target,
        "p0_ideal": float(np.sum(lam ** 3)),
        "p0_simulated": result.success_probability,
        "shots": shots,
        "acceptance_frequency": (empirical.accepted_shots / empirical.shots
                                 if empirical else None),
        "fidelity_noisy": None,
        "hellinger_noisy": None,
    }
    if noise_spec is not None:
        noisy = noisy_protocol_run(swap_cfg, _resolve_noise(noise_spec))
        row["fidelity_noisy"] = noisy.state_fidelity
        row["hellinger_noisy"] = noisy.hellinger
    return row


def cmd_theta_sweep(config: dict) -> ResultTable:
    points = _as_int(config["points"], "points", minimum=2)
    theta_max = _as_float(config["theta_max"], "theta_max")
    if not 0.0 < theta_max <= np.pi:
        raise ConfigError(f"theta_max must lie in (0, pi], got {theta_max}")
    if config["noise"] is not None:
        _resolve_noise(config["noise"])   # validate before dispatch
    seed = _as_int(config["seed"], "seed")
    shots = _as_int(config["shots"], "shots", minimum=0)
    grid = np.linspace(0.0, theta_max, points)
    args = [(float(theta), _point_seed(seed, i), shots, config["noise"])
            for i, theta in enumerate(grid)]
    rows = _map_points(_theta_point, args)
    max_err = max(abs(r["fidelity_ideal"] - r["fidelity_simulated"])
                  for r in rows)
    return ResultTable(tuple(rows[0]), rows,
                       summary={"points": points,
                                "max_fidelity_error": max_err})


def _brickwork_point(args: tuple) -> dict:
    n, cycles, seed = args
    state = random_brickwork(BrickworkSpec(n, cycles, seed=seed))
    lam = schmidt_decompose(state, QubitPartition.leading(n, n // 2)
                            ).coefficients
    p0 = float(np.sum(lam ** 3))
    return {"fidelity": predicted_fidelity_single(lam), "p0": p0}


def cmd_random_circuits(config: dict) -> ResultTable:
    sizes = config["sizes"]
    if not isinstance(sizes, (list, tuple)) or not sizes:
        raise ConfigError("sizes must be a non-empty list")
    samples = _as_int(config["samples"], "samples", minimum=1)
    cycles_cfg = config["cycles"]
    for n in sizes:
        _as_int(n, "sizes[]", minimum=2)
        if n % 2:
            raise ConfigError(f"sizes must be even for a half cut, got {n}")
        if n > MAX_QUBITS:
            raise SizeLimitError(f"size {n} exceeds the {MAX_QUBITS}-qubit "
                                 f"register limit")
    master = _as_int(config["seed"], "seed")
    args = []
    for n in sizes:
        cycles = (2 * n if cycles_cfg is None
                  else _as_int(cycles_cfg, "cycles", minimum=1))
        for s in range(samples):
            seq = np.random.SeedSequence(master, spawn_key=(int(n), s))
            args.append((int(n), cycles, int(seq.generate_state(1)[0])))
    points = _map_points(_brickwork_point, args)
    rows = []
    for i, n in enumerate(sizes):
        chunk = points[i * samples:(i + 1) * samples]
        fid = np.array([p["fidelity"] for p in chunk])
        p0 = np.array([p["p0"] for p in chunk])
        rows.append({
            "n": int(n),
            "cycles": 2 * int(n) if cycles_cfg is None else int(cycles_cfg),
            "samples": samples,
            "fidelity_mean": float(fid.mean()),
            "fidelity_std": float(fid.std(ddof=1)) if samples > 1 else 0.0,
            "p0_mean": float(p0.mean()),
            "p0_std": float(p0.std(ddof=1)) if samples > 1 else 0.0,
            "repetitions_mean": float(np.mean(1.0 / p0)),
        })
    return ResultTable(tuple(rows[0]), rows, summary={"samples": samples})


def _noise_point(args: tuple) -> dict:
    target_spec, source, strength, method, trajectories, seed = args
    target, partition, circuit = _resolve_target(target_spec)
    swap_cfg = SwapConfig(target=target, partition=partition, seed=seed,
                          target_circuit=circuit)
    result = noisy_protocol_run(swap_cfg, noise_params_for(source, strength),
                                method=method, trajectories=trajectories)
    return {
        "source": source,
        "strength": float(strength),
        "num_qubits": target.num_qubits,
        "method": method,
        "hellinger": result.hellinger,
        "state_fidelity": result.state_fidelity,
        "state_fidelity_stderr": result.state_fidelity_stderr,
        "acceptance": result.acceptance_probability,
    }


def cmd_noise_scan(config: dict) -> ResultTable:
    target_spec = config["target"]
    state, _, circuit = _resolve_target(target_spec)
    if circuit is None:
        raise ConfigError("noise-scan needs a gate-based target "
                          "(ghz, theta, or brickwork)")
    method = config["method"]
    if method not in ("exact", "trajectories"):
        raise ConfigError(f"method must be exact or trajectories, "
                          f"got {method!r}")
    trajectories = _as_int(config["trajectories"], "trajectories", minimum=1)
    sources = config["sources"]
    if not isinstance(sources, (list, tuple)) or not sources:
        raise ConfigError("sources must be a non-empty list")
    for source in sources:
        if source not in DEFAULT_NOISE_GRIDS:
            raise ConfigError(f"unknown noise source {source!r}, expected "
                              f"one of {sorted(DEFAULT_NOISE_GRIDS)}")
    grids = config["grids"] or {}
    if not isinstance(grids, dict):
        raise ConfigError("grids must map sources to strength lists")
    _check_keys(grids, DEFAULT_NOISE_GRIDS, "grids")
    if target_spec.get("kind") == "ghz":
        specs = [dict(target_spec, n=_as_int(n, "sizes[]", minimum=2))
                 for n in config["sizes"]]
    else:
        specs = [target_spec]
    seed = _as_int(config["seed"], "seed")
    args = []
    for spec in specs:
        for source in sources:
            strengths = grids.get(source, DEFAULT_NOISE_GRIDS[source])
            for strength in strengths:
                args.append((spec, source,
                             _as_float(strength, f"grids.{source}[]"),
                             method, trajectories,
                             _point_seed(seed, len(args))))
    rows = _map_points(_noise_point, args)
    return ResultTable(tuple(rows[0]), rows,
                       summary={"method": method,
                                "sources": list(sources)})


def cmd_feedforward_demo(config: dict) -> ResultTable:
    target, partition, _ = _resolve_target(config["target"])
    shots = _as_int(config["shots"], "shots", minimum=1)
    nodes = _as_int(config["nodes"], "nodes", minimum=1)
    dec = schmidt_decompose(target, partition)
    mode = config["mode"]
    if mode is None:
        flat = np.max(np.abs(dec.coefficients - 1.0 / dec.rank)) \
            <= UNIFORM_SPECTRUM_ATOL
        mode = MODE_FF_UNIFORM if flat else MODE_FF_GENERAL
    elif mode in ("uniform", "general"):
        mode = {"uniform": MODE_FF_UNIFORM, "general": MODE_FF_GENERAL}[mode]
    elif mode not in (MODE_FF_UNIFORM, MODE_FF_GENERAL):
        raise ConfigError(f"mode must be uniform or general, got {mode!r}")
    swap_cfg = SwapConfig(target=target, partition=partition, nodes=nodes,
                          mode=mode, seed=_as_int(config["seed"], "seed"),
                          shots=shots)
    result = run_protocol(swap_cfg)
    family = build_target_like_family(dec)
    d = dec.rank
    class_counts: Counter = Counter()
    for path, count in result.empirical.path_counts.items():
        labels = [family.decode(outcome) for outcome in path]
        if any(label is None for label in labels):
            raise InvariantError("sampled outcome fell outside the family")
        m_total = sum(label[0] for label in labels) % d
        l_total = sum(label[1] for label in labels) % d
        class_counts[(m_total, l_total)] += count
    expected = 1.0 / d**2
    sigma = math.sqrt(expected * (1.0 - expected) / shots)
    rows = []
    for m in range(d):
        for l in range(d):
            count = class_counts.get((m, l), 0)
            freq = count / shots
            rows.append({
                "m": m,
                "l": l,
                "count": count,
                "frequency": freq,
                "expected_frequency": expected,
                "z_score": (freq - expected) / sigma,
            })
    return ResultTable(tuple(rows[0]), rows, summary={
        "mode": mode,
        "nodes": nodes,
        "shots": shots,
        "d": d,
        "min_corrected_fidelity": result.empirical.min_corrected_fidelity,
        "chi_square": float(sum((r["count"] - shots * expected) ** 2
                                / (shots * expected) for r in rows)),
    })


_COMMANDS = {
    "swap": cmd_swap,
    "network": cmd_network,
    "theta-sweep": cmd_theta_sweep,
    "random-circuits": cmd_random_circuits,
    "noise-scan": cmd_noise_scan,
    "feedforward-demo": cmd_feedforward_demo,
}


# ----------------------------------------------------------------- output --


def _json_value(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (np.ndarray, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, list):
        return [_json_value(v) for v in value]
    return value


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(repr(float(v)) for v in value)
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_table(table: ResultTable, path: str, fmt: str) -> None:
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([_csv_cell(row[c]) for c in table.columns])
    else:
        payload = {
            "columns": list(table.columns),
            "rows": [{c: _json_value(row[c]) for c in table.columns}
                     for row in table.rows],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def _write_sidecar(table: ResultTable, out_path: str, subcommand: str,
                   resolved: dict) -> str:
    experiment = {k: _json_value(v) for k, v in resolved.items()
                  if k not in ("out", "format", "plot")}
    canonical = json.dumps(experiment, sort_keys=True,
                           separators=(",", ":"))
    sidecar = {
        "subcommand": subcommand,
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": experiment,
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
        "columns": list(table.columns),
        "row_count": len(table.rows),
        "summary": {k: _json_value(v) for k, v in table.summary.items()},
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    path = out_path + ".meta.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    return path


# ------------------------------------------------------------------ main ---


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapnet",
        description="entanglement swapping experiments with table outputs")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in _SUBCOMMAND_HELP.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", default=None,
                         help="YAML config file overriding the defaults")
        sub.add_argument("--out", default=None,
                         help="output table path (default <subcommand>.<fmt>)")
        sub.add_argument("--seed", type=int, default=None)
        sub.add_argument("--shots", type=int, default=None)
        sub.add_argument("--format", choices=("csv", "json"), default=None)
        sub.add_argument("--plot", action="store_true",
                         help="render a PNG figure next to the table")
    return parser


def _resolve_config(args: argparse.Namespace) -> dict:
    name = args.subcommand
    resolved = copy.deepcopy(_DEFAULTS[name])
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a YAML mapping")
        _check_keys(loaded, resolved, "config")
        resolved.update(loaded)
    if args.seed is not None:
        resolved["seed"] = args.seed
    if args.shots is not None:
        if "shots" not in resolved:
            raise ConfigError(f"{name} does not take --shots")
        resolved["shots"] = args.shots
    resolved["format"] = args.format or "csv"
    resolved["out"] = args.out or f"{name}.{resolved['format']}"
    resolved["plot"] = bool(args.plot)
    return resolved


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        resolved = _resolve_config(args)
        table = _COMMANDS[args.subcommand](resolved)
        out_path = resolved["out"]
        _write_table(table, out_path, resolved["format"])
        sidecar = _write_sidecar(table, out_path, args.subcommand, resolved)
        written = [out_path, sidecar]
        if resolved["plot"]:
            from .plotting import FIGURE_WRITERS
            png = os.path.splitext(out_path)[0] + ".png"
            written.append(FIGURE_WRITERS[args.subcommand](table.rows, png))
        print(f"wrote {len(table.rows)} rows: {', '.join(written)}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SizeLimitError as exc:
        print(f"size limit: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    except SwapnetError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 4
    except (ValueError, OSError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
