"""Finite-difference gradient oracle.

Independent of the reverse-mode engine: it only re-evaluates a scalar
function of plain numpy arrays under central perturbations. Used by the test
suites to certify every differentiable op and the end-to-end model loss.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def numerical_gradient(
    f: Callable[..., float], arrays: Sequence[np.ndarray], index: int = 0, h: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient of ``f(*arrays)`` w.r.t. ``arrays[index]``.

    Arrays should be float64 for the classic h=1e-6 step to be meaningful.
    """
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    target = arrays[index]
    grad = np.zeros_like(target)
    flat = target.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(*arrays))
        flat[i] = orig - h
        fm = float(f(*arrays))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-4) -> float:
    """Worst elementwise relative error, floored so near-zero grads compare absolutely."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
