"""Shared plumbing: error types, seed substreams, config digests, atomic writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import zlib
from typing import Any

import numpy as np


class ValidationError(ValueError):
    """Bad inputs or malformed configuration."""


class FeasibilityError(ValidationError):
    """Request is well-formed but exceeds a hard structural limit.

    Carries the estimated cost so callers can report why it was refused.
    """

    def __init__(self, message: str, cost: float) -> None:
        super().__init__(f"{message} (estimated cost {cost:.3g})")
        self.cost = float(cost)


class BudgetError(RuntimeError):
    """Work estimate exceeds the configured compute budget."""


def rng_for(master_seed: int, *path) -> np.random.Generator:
    """Independent substream for a (trial, repetition, ...) coordinate.

    Same master seed and path always give the same stream; distinct paths
    are statistically independent (SeedSequence spawn keys).  Path parts
    may be ints or short strings; strings enter through a fixed hash.
    """
    if not 0 <= master_seed < 2**64:
        raise ValidationError("master seed must fit in an unsigned 64-bit int")
    key = tuple(
        zlib.crc32(p.encode()) if isinstance(p, str) else int(p) for p in path
    )
    ss = np.random.SeedSequence(master_seed, spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def _canonical(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    return obj


def config_digest(obj: Any) -> str:
    """sha256 over the canonical JSON form (sorted keys, plain scalars)."""
    payload = json.dumps(_canonical(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the same directory and rename into place."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: str, obj: Any) -> None:
    atomic_write_text(path, json.dumps(_canonical(obj), indent=2, sort_keys=True) + "\n")
