"""Independent numerical oracles for certifying the analytic code paths.

Central finite differences check barrier gradients and time partials;
seeded sphere sampling supports the containment checks. Everything here is
deliberately dumb: the value of an oracle is that it shares no code with
what it certifies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class FdConfig:
    """Central-difference step; barrier fields are quadratic, so one fixed
    step is exact up to roundoff."""

    step: float = 1e-6

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError(f"step must be > 0, got {self.step}")


def fd_gradient(
    field: Callable[[np.ndarray, float], float],
    c,
    t: float,
    cfg: FdConfig = FdConfig(),
) -> tuple[np.ndarray, float]:
    """Central differences of field(c, t) in each coordinate of c and in t."""
    c = np.asarray(c, dtype=float)
    h = cfg.step
    grad = np.zeros_like(c)
    for i in range(c.size):
        bump = np.zeros_like(c)
        bump[i] = h
        grad[i] = (field(c + bump, t) - field(c - bump, t)) / (2.0 * h)
    dt = (field(c, t + h) - field(c, t - h)) / (2.0 * h)
    return grad, float(dt)


def sphere_sample(c, r: float, count: int, seed: int) -> np.ndarray:
    """Seed-reproducible points on the sphere of radius r about c, (count, n)."""
    if r <= 0:
        raise ValueError(f"radius must be > 0, got {r}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    c = np.asarray(c, dtype=float)
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((count, c.size))
    norms = np.linalg.norm(directions, axis=1)
    while np.any(norms < 1e-12):  # degenerate draws are astronomically rare
        redraws = norms < 1e-12
        directions[redraws] = rng.standard_normal((int(redraws.sum()), c.size))
        norms = np.linalg.norm(directions, axis=1)
    return c + r * directions / norms[:, None]


def difference_quotient_bound(
    fn: Callable[[np.ndarray], np.ndarray], box_lo, box_hi, pairs: int, seed: int
) -> float:
    """Largest sampled |fn(x) - fn(y)| / |x - y| over random pairs in a box."""
    rng = np.random.default_rng(seed)
    lo = np.asarray(box_lo, dtype=float)
    hi = np.asarray(box_hi, dtype=float)
    worst = 0.0
    for _ in range(pairs):
        x = rng.uniform(lo, hi)
        y = rng.uniform(lo, hi)
        gap = float(np.linalg.norm(x - y))
        if gap < 1e-9:
            continue
        quotient = float(np.linalg.norm(np.asarray(fn(x)) - np.asarray(fn(y)))) / gap
        worst = max(worst, quotient)
    return worst
