"""Shared primitives: problem oracles, step-size schedules, run trajectories, RNG.

Everything downstream (the optimizers, the bound checkers, the benchmark
harness) builds on the types here. All vectors are float64 numpy arrays and
all randomness flows through the in-repo generator below, so that repeated
runs produce identical results on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Vector = np.ndarray

__all__ = [
    "Vector",
    "ConfigError",
    "Rng",
    "seeded_rng",
    "Schedule",
    "schedule_eval",
    "Problem",
    "StepRecord",
    "Trajectory",
    "weighted_average_update",
]


class ConfigError(ValueError):
    """Invalid configuration: bad schedule parameters, d0 <= 0, unknown keys."""


# --------------------------------------------------------------------------
# Deterministic RNG
#
# xoshiro256** with splitmix64 seeding, in pure integer arithmetic. Sequences
# depend only on (master_seed, stream_id), never on numpy version or platform.

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Rng:
    """Seeded random stream. Distinct stream_ids give unrelated sequences."""

    def __init__(self, master_seed: int, stream_id: int = 0):
        sm = master_seed & _MASK64
        sm, _ = _splitmix64(sm)
        sm = (sm ^ ((stream_id & _MASK64) * 0xDA942042E4DD58B5)) & _MASK64
        sm, s0 = _splitmix64(sm)
        sm, s1 = _splitmix64(sm)
        sm, s2 = _splitmix64(sm)
        sm, s3 = _splitmix64(sm)
        if s0 == 0 and s1 == 0 and s2 == 0 and s3 == 0:
            s0 = 1  # all-zero state is a fixed point of xoshiro
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        self._spare_normal: Optional[float] = None

    def u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def uniform(self) -> float:
        """One double in [0, 1) with 53 random bits."""
        return (self.u64() >> 11) * 2.0**-53

    def normal(self) -> float:
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return z
        u1 = self.uniform()
        if u1 == 0.0:
            u1 = 2.0**-53
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def integer(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError("integer() needs n > 0")
        threshold = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.u64()
            if v < threshold:
                return v % n

    def permutation(self, n: int) -> np.ndarray:
        order = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.integer(i + 1)
            order[i], order[j] = order[j], order[i]
        return order

    def normals(self, n: int) -> Vector:
        return np.array([self.normal() for _ in range(n)], dtype=np.float64)

    def uniforms(self, n: int) -> Vector:
        return np.array([self.uniform() for _ in range(n)], dtype=np.float64)


def seeded_rng(master_seed: int, stream_id: int = 0) -> Rng:
    return Rng(master_seed, stream_id)


# --------------------------------------------------------------------------
# Step-size schedules
#
# A schedule is a multiplier applied on top of the adaptive step size; the
# optimizers themselves never see wall-clock epochs, only the step index k
# out of n_total.


@dataclass(frozen=True)
class Schedule:
    kind: str = "flat"  # flat | stagewise | inverse_sqrt_warmup | cosine
    stage_fractions: tuple[float, ...] = (0.6, 0.8, 0.95)
    stage_factor: float = 0.1
    warmup_steps: int = 0

    def validate(self) -> None:
        if self.kind not in ("flat", "stagewise", "inverse_sqrt_warmup", "cosine"):
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "stagewise":
            fr = self.stage_fractions
            if any(not (0.0 < f <= 1.0) for f in fr):
                raise ConfigError("stage fractions must lie in (0, 1]")
            if any(b <= a for a, b in zip(fr, fr[1:])):
                raise ConfigError("stage fractions must be strictly increasing")
            if not (0.0 < self.stage_factor <= 1.0):
                raise ConfigError("stage factor must lie in (0, 1]")
        if self.kind == "inverse_sqrt_warmup" and self.warmup_steps <= 0:
            raise ConfigError("inverse_sqrt_warmup needs warmup_steps > 0")


def schedule_eval(schedule: Schedule, k: int, n_total: int) -> float:
    """Multiplier for step k of a run of n_total steps.

    Stays in (0, 1] for every step a run actually takes (k < n_total).
    The warmup formula is evaluated at max(k, 1) so step 0 gets the same
    multiplier as step 1 instead of a degenerate zero.
    """
    if k < 0:
        raise ConfigError("step index must be >= 0")
    if n_total <= 0:
        raise ConfigError("n_total must be positive")
    schedule.validate()
    if schedule.kind == "flat":
        return 1.0
    if schedule.kind == "stagewise":
        passed = sum(1 for f in schedule.stage_fractions if k >= f * n_total)
        return schedule.stage_factor**passed
    if schedule.kind == "inverse_sqrt_warmup":
        kk = max(k, 1)
        w = schedule.warmup_steps
        return min(kk / w, 1.0) * min(1.0, math.sqrt(w / kk))
    # cosine, clamped to the last in-run step so the multiplier stays positive
    kk = min(k, n_total - 1)
    return 0.5 * (1.0 + math.cos(math.pi * kk / n_total))


# --------------------------------------------------------------------------
# Problem oracles


@dataclass
class Problem:
    """First-order oracle for a convex objective.

    subgradient(x, rng) must return an element of the subdifferential at x
    for deterministic problems; stochastic problems (minibatch losses) set
    stochastic=True and return an estimate instead. lipschitz / lipschitz_inf
    bound the subgradient in the Euclidean / max norm when known.
    """

    dim: int
    value: Callable[[Vector], float]
    subgradient: Callable[[Vector, Optional[Rng]], Vector]
    known_minimizer: Optional[Vector] = None
    known_fstar: Optional[float] = None
    lipschitz: Optional[float] = None
    lipschitz_inf: Optional[float] = None
    cheap_value: bool = True
    stochastic: bool = False
    name: str = "problem"


# --------------------------------------------------------------------------
# Trajectories


@dataclass
class StepRecord:
    k: int
    d: float  # estimate in force when the step was taken
    dhat: float  # candidate produced by the step
    scale: float  # gamma or lambda actually applied
    f: float  # objective at the visited point, nan when not recorded
    gnorm2: float


class Trajectory:
    """Per-step log of a run plus the weighted-average accumulator.

    extras holds named per-step scalar series that the bound checkers need
    (inner products, norm accumulators); each optimizer documents the keys
    it writes. d is checked to be non-decreasing on append.
    """

    def __init__(self, kind: str, dim: int):
        self.kind = kind
        self.dim = dim
        self.records: list[StepRecord] = []
        self.extras: dict[str, list[float]] = {}
        self.meta: dict[str, object] = {}
        self.avg_num: Vector = np.zeros(dim, dtype=np.float64)
        self.avg_den: float = 0.0

    def append(self, rec: StepRecord, **extra: float) -> None:
        if self.records and rec.d < self.records[-1].d:
            raise ValueError("d decreased between steps; trajectory corrupt")
        self.records.append(rec)
        for key, val in extra.items():
            self.extras.setdefault(key, []).append(val)

    def update_average(self, x: Vector, w: float) -> None:
        weighted_average_update(self, x, w)

    def average(self) -> Vector:
        if self.avg_den <= 0.0:
            raise ValueError("no positive-weight points recorded")
        return self.avg_num / self.avg_den

    def d_series(self) -> list[float]:
        """d_0 .. d_{n+1} for a run of n+1 recorded steps."""
        if not self.records:
            raise ValueError("empty trajectory")
        ds = [rec.d for rec in self.records]
        last = self.records[-1]
        ds.append(max(last.d, last.dhat))
        return ds

    def extra(self, key: str) -> list[float]:
        if key not in self.extras:
            raise ValueError(f"trajectory of kind {self.kind!r} has no {key!r} series")
        return self.extras[key]


def weighted_average_update(traj: Trajectory, x: Vector, w: float) -> Trajectory:
    """Fold the point x with weight w >= 0 into traj's running average."""
    if w < 0.0:
        raise ValueError("average weight must be >= 0")
    if w > 0.0:
        traj.avg_num += w * x
        traj.avg_den += w
    return traj
