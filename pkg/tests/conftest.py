"""Shared test helpers: an independent finite-difference gradient oracle."""

import numpy as np
import pytest

FD_STEP = 1e-5
# Coordinates whose gradient magnitude sits below this floor are judged by
# absolute error (the floor caps the denominator); everything else is a
# plain relative comparison.
REL_FLOOR = 1e-4


def numeric_gradient(f, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central finite differences of the scalar function f with respect to x.

    f takes no arguments and must read x by reference; x is perturbed in
    place one coordinate at a time and restored afterwards.
    """
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        kept = flat[i]
        flat[i] = kept + step
        up = f()
        flat[i] = kept - step
        down = f()
        flat[i] = kept
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def max_rel_error(analytic, numeric, floor: float = REL_FLOOR) -> float:
    a, n = np.asarray(analytic, dtype=float), np.asarray(numeric, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float((np.abs(a - n) / denom).max())


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
