"""Learning-rate-free convex optimizers built on a distance lower bound.

Each method maintains d, a running lower bound on the distance from the
starting point to a minimizer, grown from observable quantities only:
per step a candidate dhat is computed, and d <- max(d, dhat). The step
size is then proportional to d over an accumulated gradient-norm scale,
so no learning rate is supplied by the caller.

Three variants live here:

  * DAState       weighted dual averaging, Euclidean norm. Two candidate
                  formulas are supported: option "I" derives dhat from the
                  dual-average norm minus a weighted gradient sum, option
                  "II" from accumulated hypergradient inner products. With
                  g_fixed set, the step-size denominator starts from G^2
                  instead of zero, which the asymptotic theory needs.
  * GDState       plain subgradient descent scaled by d / sqrt(G^2 + sum
                  of squared gradient norms), candidate from the same
                  algebra with flat weights.
  * AdaGradDAState coordinate-wise dual averaging against the max-norm
                  geometry; the per-coordinate denominators start at the
                  max-norm gradient bound.

A per-step schedule multiplier folds into the accumulation weight
(lam_k = sched_k * d_k); with a flat schedule the updates reduce to the
plain listings. Steppers mutate their state and append to a Trajectory;
run_convex drives a full run against a Problem oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ConfigError,
    Problem,
    Rng,
    Schedule,
    StepRecord,
    Trajectory,
    Vector,
    schedule_eval,
)

__all__ = [
    "DAState",
    "GDState",
    "AdaGradDAState",
    "da_init",
    "da_step",
    "gd_init",
    "gd_step",
    "adagrad_da_init",
    "adagrad_da_step",
    "select_return_index",
    "ConvexRunResult",
    "run_convex",
]

_NAN = float("nan")


def _check_gradient(gnorm2: float) -> None:
    if not math.isfinite(gnorm2):
        raise ValueError("non-finite gradient")


# --------------------------------------------------------------------------
# Dual averaging


@dataclass
class DAState:
    x0: Vector
    x: Vector
    s: Vector
    k: int
    d: float
    d_hat_last: float
    option: str  # "I" or "II"
    g_fixed: Optional[float]  # G for the G^2-seeded denominator, None otherwise
    gamma: Optional[float]  # step size entering the next accumulation
    sum_gsq: float  # sum of ||g_i||^2
    sum_weighted: float  # sum of gamma_i * lam_i^2 * ||g_i||^2
    hypergrad_sum: float  # sum of lam_i * gamma_i * <g_i, s_i>
    traj: Trajectory


def da_init(
    x0: Vector,
    d0: float,
    option: str = "I",
    g_fixed: Optional[float] = None,
) -> DAState:
    if d0 <= 0.0:
        raise ConfigError("d0 must be positive")
    if option not in ("I", "II"):
        raise ConfigError(f"unknown option {option!r}")
    if g_fixed is not None and g_fixed <= 0.0:
        raise ConfigError("gradient bound must be positive")
    x0 = np.asarray(x0, dtype=np.float64)
    traj = Trajectory("da", x0.shape[0])
    traj.meta["option"] = option
    traj.meta["g_mode"] = "fixed" if g_fixed is not None else "none"
    return DAState(
        x0=x0.copy(),
        x=x0.copy(),
        s=np.zeros_like(x0),
        k=0,
        d=d0,
        d_hat_last=0.0,
        option=option,
        g_fixed=g_fixed,
        gamma=None if g_fixed is None else 1.0 / g_fixed,
        sum_gsq=0.0,
        sum_weighted=0.0,
        hypergrad_sum=0.0,
        traj=traj,
    )


def da_step(state: DAState, g: Vector, f_val: float = _NAN, sched: float = 1.0) -> None:
    gnorm2 = float(g @ g)
    _check_gradient(gnorm2)
    if state.gamma is None:
        if gnorm2 == 0.0:
            raise ValueError("zero first gradient; the driver returns x0 directly")
        state.gamma = 1.0 / math.sqrt(gnorm2)
    gamma_old = state.gamma
    lam = sched * state.d

    # accumulators consume the pre-update gamma, d, and s
    ip_gs = float(g @ state.s)
    hyper_term = lam * gamma_old * ip_gs
    wg_term = gamma_old * lam * lam * gnorm2
    state.hypergrad_sum += hyper_term
    state.sum_weighted += wg_term

    state.s += lam * g
    state.sum_gsq += gnorm2
    if state.g_fixed is None:
        gamma_next = 1.0 / math.sqrt(state.sum_gsq)
    else:
        gamma_next = 1.0 / math.sqrt(state.g_fixed**2 + state.sum_gsq)

    snorm2 = float(state.s @ state.s)
    snorm = math.sqrt(snorm2)
    if snorm == 0.0:
        d_hat = 0.0
    elif state.option == "I":
        d_hat = (gamma_next * snorm2 - state.sum_weighted) / (2.0 * snorm)
    else:
        d_hat = state.hypergrad_sum / snorm

    state.traj.update_average(state.x, lam)
    state.traj.append(
        StepRecord(state.k, state.d, d_hat, gamma_next, f_val, gnorm2),
        gamma=gamma_old,
        gamma_next=gamma_next,
        wg_term=wg_term,
        hyper_term=hyper_term,
        snorm2_after=snorm2,
        lam=lam,
    )

    state.d = max(state.d, d_hat)
    state.d_hat_last = d_hat
    state.x = state.x0 - gamma_next * state.s
    state.gamma = gamma_next
    state.k += 1


# --------------------------------------------------------------------------
# Subgradient descent


@dataclass
class GDState:
    x: Vector
    s: Vector
    k: int
    d: float
    d_hat_last: float
    G: float
    sum_gsq: float
    sum_lambda_sq: float  # sum of lam_i^2 * ||g_i||^2
    traj: Trajectory


def gd_init(x0: Vector, d0: float, G: float) -> GDState:
    if d0 <= 0.0:
        raise ConfigError("d0 must be positive")
    if G <= 0.0:
        raise ConfigError("gradient bound must be positive")
    x0 = np.asarray(x0, dtype=np.float64)
    traj = Trajectory("gd", x0.shape[0])
    return GDState(
        x=x0.copy(),
        s=np.zeros_like(x0),
        k=0,
        d=d0,
        d_hat_last=0.0,
        G=G,
        sum_gsq=0.0,
        sum_lambda_sq=0.0,
        traj=traj,
    )


def gd_step(state: GDState, g: Vector, f_val: float = _NAN, sched: float = 1.0) -> None:
    gnorm2 = float(g @ g)
    _check_gradient(gnorm2)
    # the step size denominator includes the current gradient
    state.sum_gsq += gnorm2
    lam = sched * state.d / math.sqrt(state.G**2 + state.sum_gsq)

    ip_gs = float(g @ state.s)
    hyper_term = lam * ip_gs
    wg_term = lam * lam * gnorm2
    state.sum_lambda_sq += wg_term
    state.s += lam * g

    snorm2 = float(state.s @ state.s)
    snorm = math.sqrt(snorm2)
    if snorm == 0.0:
        d_hat = 0.0
    else:
        d_hat = (snorm2 - state.sum_lambda_sq) / (2.0 * snorm)

    state.traj.update_average(state.x, lam)
    state.traj.append(
        StepRecord(state.k, state.d, d_hat, lam, f_val, gnorm2),
        lam=lam,
        wg_term=wg_term,
        hyper_term=hyper_term,
        snorm2_after=snorm2,
    )

    state.d = max(state.d, d_hat)
    state.d_hat_last = d_hat
    state.x = state.x - lam * g
    state.k += 1


# --------------------------------------------------------------------------
# Coordinate-wise dual averaging (max-norm geometry)


@dataclass
class AdaGradDAState:
    x0: Vector
    x: Vector
    s: Vector
    a: Vector  # per-coordinate denominators, start at g_inf
    k: int
    d: float
    d_hat_last: float
    sum_weighted: float  # sum of lam_i^2 * ||g_i||^2 in the old A_i^-1 norm
    traj: Trajectory


def adagrad_da_init(x0: Vector, d0: float, g_inf: float) -> AdaGradDAState:
    if d0 <= 0.0:
        raise ConfigError("d0 must be positive")
    if g_inf <= 0.0:
        raise ConfigError("max-norm gradient bound must be positive")
    x0 = np.asarray(x0, dtype=np.float64)
    traj = Trajectory("adagrad_da", x0.shape[0])
    return AdaGradDAState(
        x0=x0.copy(),
        x=x0.copy(),
        s=np.zeros_like(x0),
        a=np.full_like(x0, g_inf),
        k=0,
        d=d0,
        d_hat_last=0.0,
        sum_weighted=0.0,
        traj=traj,
    )


def adagrad_da_step(
    state: AdaGradDAState, g: Vector, f_val: float = _NAN, sched: float = 1.0
) -> None:
    gnorm2 = float(g @ g)
    _check_gradient(gnorm2)
    lam = sched * state.d

    # weighted gradient-norm term uses the denominators before this gradient
    wg_term = lam * lam * float((g * g / state.a).sum())
    state.sum_weighted += wg_term

    state.s += lam * g
    np.sqrt(state.a * state.a + g * g, out=state.a)

    s_l1 = float(np.abs(state.s).sum())
    s_wnorm2 = float((state.s * state.s / state.a).sum())
    if s_l1 == 0.0:
        d_hat = 0.0
    else:
        d_hat = (s_wnorm2 - state.sum_weighted) / (2.0 * s_l1)

    state.traj.update_average(state.x, lam)
    state.traj.append(
        StepRecord(state.k, state.d, d_hat, 1.0 / float(state.a.max()), f_val, gnorm2),
        lam=lam,
        wg_term=wg_term,
        s_l1_after=s_l1,
        s_wnorm2_after=s_wnorm2,
        a_l1_after=float(state.a.sum()),
    )

    state.d = max(state.d, d_hat)
    state.d_hat_last = d_hat
    state.x = state.x0 - state.s / state.a
    state.k += 1


# --------------------------------------------------------------------------
# Return-point selection and the run driver


def select_return_index(d_seq: list[float]) -> int:
    """Index t minimizing d_{k+1} / sum_{i<=k} d_i, ties going to the largest k.

    d_seq is the full estimate sequence d_0 .. d_{n+1}; the average of the
    first t+1 visited points carries the strongest guarantee.
    """
    if len(d_seq) < 2:
        raise ValueError("need at least d_0 and d_1")
    prev = 0.0
    for d in d_seq:
        if d <= 0.0:
            raise ValueError("d values must be positive")
        if d < prev:
            raise ValueError("d sequence must be non-decreasing")
        prev = d
    best_t = 0
    best_ratio = math.inf
    running = 0.0
    for k in range(len(d_seq) - 1):
        running += d_seq[k]
        ratio = d_seq[k + 1] / running
        if ratio <= best_ratio:
            best_ratio = ratio
            best_t = k
    return best_t


@dataclass
class ConvexRunResult:
    traj: Trajectory
    x_avg: Vector  # weight-averaged point over the whole run
    x_final: Vector
    d_final: float
    t_index: Optional[int] = None  # selected prefix, dual-averaging runs only
    x_avg_t: Optional[Vector] = None  # average over the selected prefix
    exited_at_start: bool = False  # zero first gradient


def run_convex(
    problem: Problem,
    x0: Vector,
    algorithm: str,
    d0: float,
    n: int,
    option: str = "I",
    g_mode: str = "none",
    g_value: Optional[float] = None,
    g_inf: Optional[float] = None,
    schedule: Schedule = Schedule(),
    rng: Optional[Rng] = None,
    record_f_every: int = 1,
) -> ConvexRunResult:
    """Run one of the convex methods for n steps against a problem oracle.

    algorithm is "da", "gd", or "adagrad_da". A zero first gradient means x0
    is already optimal and the run returns immediately. Methods that need a
    gradient-norm bound (gd always, da with g_mode="fixed", adagrad_da in
    the max norm) fall back to the first gradient's norm when the bound is
    not supplied; such runs are marked heuristic_g in the trajectory meta.
    For dual-averaging runs the result carries the selected-prefix average
    x_avg_t as well; the prefix-selection guarantee is proved for the
    G-seeded denominator (g_mode="fixed"), and the index is reported for
    the plain mode too.
    """
    if n <= 0:
        raise ConfigError("n must be positive")
    if record_f_every <= 0:
        raise ConfigError("record_f_every must be positive")
    if g_mode not in ("none", "fixed"):
        raise ConfigError(f"unknown g_mode {g_mode!r}")
    x0 = np.asarray(x0, dtype=np.float64)
    schedule.validate()

    g0 = np.asarray(problem.subgradient(x0, rng), dtype=np.float64)
    g0_norm2 = float(g0 @ g0)
    if g0_norm2 == 0.0:
        traj = Trajectory(algorithm, x0.shape[0])
        return ConvexRunResult(
            traj=traj,
            x_avg=x0.copy(),
            x_final=x0.copy(),
            d_final=d0,
            exited_at_start=True,
        )

    heuristic_g = False
    if algorithm == "da":
        g_fixed = None
        if g_mode == "fixed":
            g_fixed = g_value
            if g_fixed is None:
                g_fixed = math.sqrt(g0_norm2)
                heuristic_g = True
        state = da_init(x0, d0, option=option, g_fixed=g_fixed)
        step = da_step
    elif algorithm == "gd":
        G = g_value
        if G is None:
            G = math.sqrt(g0_norm2)
            heuristic_g = True
        state = gd_init(x0, d0, G=G)
        step = gd_step
    elif algorithm == "adagrad_da":
        if g_inf is None:
            g_inf = float(np.abs(g0).max())
            heuristic_g = True
        state = adagrad_da_init(x0, d0, g_inf=g_inf)
        step = adagrad_da_step
    else:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    state.traj.meta["heuristic_g"] = heuristic_g

    track = algorithm == "da"
    xs: list[Vector] = []
    lams: list[float] = []

    g = g0
    for k in range(n):
        if k > 0:
            g = np.asarray(problem.subgradient(state.x, rng), dtype=np.float64)
        f_val = problem.value(state.x) if k % record_f_every == 0 else _NAN
        if track:
            xs.append(state.x.copy())
        step(state, g, f_val=f_val, sched=schedule_eval(schedule, k, n))
        if track:
            lams.append(state.traj.extras["lam"][-1])

    traj = state.traj
    result = ConvexRunResult(
        traj=traj,
        x_avg=traj.average(),
        x_final=state.x.copy(),
        d_final=state.d,
    )
    if track:
        t = select_return_index(traj.d_series())
        num = np.zeros_like(x0)
        den = 0.0
        for k in range(t + 1):
            num += lams[k] * xs[k]
            den += lams[k]
        result.t_index = t
        result.x_avg_t = num / den
    return result
