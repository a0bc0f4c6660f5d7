"""Simulated dynamic profiling of operations.

Training-step performance is stable across steps, so profiling happens once
up front: each distinct op key is timed at selected widths and the medians
feed the performance models.  Measurement noise is an opt-in multiplicative
lognormal factor; the default is exact (sigma = 0), with every draw tied to
a deterministic per-(seed, key, width, repeat) stream so runs reproduce.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from statistics import median

from .cost import CostCurve, InterferenceContext, SOLO, exec_time
from .errors import ConfigError
from .graph import OpKey


@dataclass
class ProfileHistory:
    """Measured (width -> median ms) samples for one op key.

    ``total_ms`` accumulates every individual draw (repeats included); it is
    what profiling actually cost, used for overhead reporting.
    """

    key: OpKey
    samples: dict[int, float]
    repeats: int = 1
    noise_sigma: float = 0.0
    seed: int = 0
    total_ms: float = 0.0

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        for w, ms in self.samples.items():
            if w < 1:
                raise ValueError(f"sample width must be >= 1, got {w}")
            if ms <= 0:
                raise ValueError(f"measurement must be > 0, got {ms} at width {w}")

    def sorted_widths(self) -> list[int]:
        return sorted(self.samples)


def _stream_seed(seed: int, key: OpKey, width: int, repeat: int) -> int:
    tag = f"{seed}|{key.op_type}|{','.join(map(str, key.signature))}|{width}|{repeat}"
    digest = hashlib.blake2b(tag.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def observe(
    key: OpKey,
    curve: CostCurve,
    width: int,
    repeat: int,
    noise_sigma: float,
    seed: int,
    ctx: InterferenceContext = SOLO,
) -> float:
    """One simulated timing draw: exec_time scaled by lognormal noise."""
    true_ms = exec_time(curve, width, ctx)
    if noise_sigma == 0:
        return true_ms
    rng = random.Random(_stream_seed(seed, key, width, repeat))
    return true_ms * math.exp(rng.gauss(0.0, noise_sigma))


def measure(
    key: OpKey,
    curve: CostCurve,
    width: int,
    repeats: int,
    noise_sigma: float,
    seed: int,
) -> tuple[float, float]:
    """(median of `repeats` draws, total ms spent drawing them)."""
    draws = [observe(key, curve, width, r, noise_sigma, seed) for r in range(repeats)]
    return median(draws), sum(draws)


def profile_op(
    key: OpKey,
    curve: CostCurve,
    widths: list[int],
    repeats: int = 1,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> ProfileHistory:
    if not widths:
        raise ValueError("widths must be non-empty")
    if len(set(widths)) != len(widths) or any(w < 1 for w in widths):
        raise ValueError(f"widths must be distinct and >= 1, got {widths}")
    samples = {}
    total = 0.0
    for w in widths:
        med, spent = measure(key, curve, w, repeats, noise_sigma, seed)
        samples[w] = med
        total += spent
    return ProfileHistory(
        key=key,
        samples=samples,
        repeats=repeats,
        noise_sigma=noise_sigma,
        seed=seed,
        total_ms=total,
    )


def profiling_cost(histories, total_steps: int, baseline_step_ms: float) -> float:
    """Fraction of total work spent profiling, for overhead reporting."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    spent = sum(h.total_ms for h in histories)
    if spent == 0:
        return 0.0
    return spent / (spent + total_steps * baseline_step_ms)


# -- profile store file --------------------------------------------------------

def histories_to_json(histories) -> str:
    rows = []
    for h in sorted(histories, key=lambda h: (h.key.op_type, h.key.signature)):
        rows.append(
            {
                "type": h.key.op_type,
                "signature": list(h.key.signature),
                "samples": [[w, h.samples[w]] for w in h.sorted_widths()],
                "repeats": h.repeats,
                "noise_sigma": h.noise_sigma,
                "seed": h.seed,
                "total_ms": h.total_ms,
            }
        )
    return json.dumps(rows, indent=2) + "\n"


def histories_from_json(text: str) -> list[ProfileHistory]:
    try:
        rows = json.loads(text)
        return [
            ProfileHistory(
                key=OpKey(r["type"], tuple(r["signature"])),
                samples={int(w): float(ms) for w, ms in r["samples"]},
                repeats=r.get("repeats", 1),
                noise_sigma=r.get("noise_sigma", 0.0),
                seed=r.get("seed", 0),
                total_ms=r.get("total_ms", 0.0),
            )
            for r in rows
        ]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad profile store: {exc}") from None
