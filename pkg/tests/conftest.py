"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from swapnet.qstate import StateVector


def random_state(num_qubits: int, seed: int) -> StateVector:
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector.from_amplitudes(amps)


def random_unitary(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    # Fix the phase convention so the factorization is Haar distributed.
    return q * (np.diag(r) / np.abs(np.diag(r)))
