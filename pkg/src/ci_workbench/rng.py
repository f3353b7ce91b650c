"""Deterministic random substreams.

Two mechanisms:

* :func:`substream` hands out an independent ``numpy.random.Generator``
  for any tuple of integer keys (``(seed, trial)``, ``(seed, trial, 1)``).
* :func:`resample_indices` is a counter-based generator for bootstrap
  indices: row ``b`` depends only on ``(seed, b)``, so any slice of
  replicates can be produced on any worker and the full set is identical
  regardless of chunking.
"""
from __future__ import annotations

import os

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _as_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return seed & _MASK64


def substream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([_as_seed(seed), *map(int, keys)]))


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit seed for the substream ``(seed, *keys)``."""
    state = np.random.SeedSequence([_as_seed(seed), *map(int, keys)]).generate_state(1, np.uint64)
    return int(state[0])


def resample_indices(seed: int, n: int, start: int, stop: int) -> np.ndarray:
    """Indices in ``[0, n)`` for bootstrap replicates ``start..stop-1``.

    Returns an array of shape ``(stop - start, n)``.
    """
    with np.errstate(over="ignore"):
        key = _mix(np.uint64(_as_seed(seed)) + _GOLDEN)
        b = np.arange(start, stop, dtype=np.uint64)
        row_keys = _mix((b + np.uint64(1)) * _GOLDEN ^ key)
        j = np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN
        z = _mix(row_keys[:, None] + j[None, :])
    u = (z >> _S11).astype(np.float64) * (1.0 / 9007199254740992.0)
    return np.minimum((u * n).astype(np.int64), n - 1)


def seed_from_env(seed: int | None, env: str = "CIWB_SEED") -> int | None:
    if seed is not None:
        return int(seed)
    raw = os.environ.get(env)
    if raw is None or raw.strip() == "":
        return None
    return int(raw)
