"""Benchmark harness: baselines, experiment configs, runners, CSV output.

Runs are keyed by (config hash, seed) and are byte-identical across
invocations: per-step CSVs record a fixed schema, per-seed summaries feed
a mean / two-standard-error aggregate, and all randomness flows through
the seeded in-repo generator. The wall-clock column is written as 0.0
unless timing is explicitly enabled, so default outputs stay
reproducible.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis
from .analysis import BoundReport
from .convex import ConvexRunResult, run_convex, select_return_index
from .core import (
    ConfigError,
    Problem,
    Rng,
    Schedule,
    Vector,
    schedule_eval,
    seeded_rng,
)
from .ml import adam_da_init, adam_da_step, sgd_da_init, sgd_da_step
from .problems import (
    LogisticProblem,
    abs_value_problem,
    parse_libsvm,
    random_piecewise_max,
    synth_dataset,
)

__all__ = [
    "AdaGradNormState",
    "adagrad_norm_init",
    "adagrad_norm_step",
    "polyak_step",
    "fixed_step_run",
    "ExperimentConfig",
    "parse_config_text",
    "load_config",
    "apply_overrides",
    "config_hash",
    "CSV_HEADER",
    "RunOutput",
    "run_single",
    "run_experiment",
    "grid_search",
    "d0_sweep",
    "verify_suite",
    "DIVERGENCE_NORM",
]

CSV_HEADER = ["step", "d", "dhat", "gamma_or_lambda", "f", "gnorm2", "elapsed"]

DIVERGENCE_NORM = 1e12

DADAPT_ALGORITHMS = ("da_I", "da_II", "gd", "adagrad_da", "sgd_da", "adam_da")
BASELINE_ALGORITHMS = ("adagrad", "adagrad_norm", "polyak", "fixed")
GRID_BASELINES = ("adagrad", "adagrad_norm", "fixed")

_NAN = float("nan")


# --------------------------------------------------------------------------
# Baselines


@dataclass
class AdaGradNormState:
    """Scalar-step-size baseline that knows the distance to the solution."""

    x0: Vector
    x: Vector
    radius: float
    sum_gsq: float


def adagrad_norm_init(x0: Vector, radius: float) -> AdaGradNormState:
    if radius <= 0.0:
        raise ConfigError("ball radius must be positive")
    x0 = np.asarray(x0, dtype=np.float64)
    return AdaGradNormState(x0=x0.copy(), x=x0.copy(), radius=radius, sum_gsq=0.0)


def adagrad_norm_step(state: AdaGradNormState, g: Vector) -> Vector:
    """x <- project(x - radius/sqrt(sum ||g||^2) * g) onto the x0-ball.

    Skipped while every gradient seen so far is zero (the step size is
    undefined until the accumulator is positive). Returns the new point.
    """
    gnorm2 = float(g @ g)
    state.sum_gsq += gnorm2
    if state.sum_gsq == 0.0:
        return state.x
    gamma = state.radius / math.sqrt(state.sum_gsq)
    x = state.x - gamma * g
    delta = x - state.x0
    dist = math.sqrt(float(delta @ delta))
    if dist > state.radius:
        x = state.x0 + delta * (state.radius / dist)
    state.x = x
    return state.x


def polyak_step(x: Vector, g: Vector, fx: float, fstar: float) -> Vector:
    """x - (fx - fstar)/||g||^2 * g; a no-op exactly at the optimal value."""
    if fx < fstar:
        raise ValueError("fx below the optimal value")
    excess = fx - fstar
    if excess == 0.0:
        return np.asarray(x, dtype=np.float64).copy()
    gg = float(g @ g)
    if gg == 0.0:
        raise ValueError("zero subgradient at a suboptimal point")
    return x - (excess / gg) * g


def fixed_step_run(
    problem: Problem,
    x0: Vector,
    D: float,
    G: float,
    n: int,
    rng: Optional[Rng] = None,
) -> Vector:
    """n subgradient steps at the oracle rate D/(G sqrt(n)); uniform average."""
    if n <= 0:
        raise ConfigError("n must be positive")
    if D <= 0.0 or G <= 0.0:
        raise ConfigError("D and G must be positive")
    gamma = D / (G * math.sqrt(n))
    x = np.asarray(x0, dtype=np.float64).copy()
    total = x.copy()
    for _ in range(n):
        g = np.asarray(problem.subgradient(x, rng), dtype=np.float64)
        x = x - gamma * g
        total += x
    return total / (n + 1)


# --------------------------------------------------------------------------
# Experiment configuration
#
# Flat key = value text files; CLI overrides win. The config hash plus the
# seed is the identity of a run.


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "abs"  # abs | piecewise | synth_logistic | libsvm
    algorithm: str = "da_I"
    d0: float = 1e-6
    x0: float = 1.0  # starting scalar for abs
    n_steps: int = 0  # 0 means derive from epochs for dataset problems
    epochs: int = 0
    g_mode: str = "none"  # none | fixed, dual-averaging runs only
    lr: float = 1.0  # baseline multiplier
    beta: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay: float = 0.0
    schedule: str = "flat"
    stage_fractions: tuple[float, ...] = (0.6, 0.8, 0.95)
    stage_factor: float = 0.1
    warmup_steps: int = 0
    seeds: tuple[int, ...] = (0,)
    problem_seed: int = 0
    piecewise_dim: int = 8
    piecewise_pieces: int = 8
    x0_distance: float = 1.0  # distance from the constructed minimizer
    synth_n: int = 1000
    synth_dim: int = 20
    synth_margin: float = 0.0
    synth_flip: float = 0.0
    batch_size: int = 16
    full_batch: bool = False
    libsvm_path: str = ""
    record_f_every: int = 1
    out_dir: str = "runs"
    timing: bool = False


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "tuple[int, ...]":
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
        if kind == "tuple[float, ...]":
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for config key {key!r}") from None


def parse_config_text(text: str) -> ExperimentConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip()
        values[key] = _parse_value(key, val)
    return ExperimentConfig(**values)


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    return parse_config_text(p.read_text())


def apply_overrides(config: ExperimentConfig, overrides: dict[str, str]) -> ExperimentConfig:
    changes = {key: _parse_value(key, val) for key, val in overrides.items()}
    return replace(config, **changes)


def config_hash(config: ExperimentConfig) -> str:
    payload = "\n".join(
        f"{f.name}={getattr(config, f.name)!r}"
        for f in dataclasses.fields(ExperimentConfig)
        if f.name not in ("out_dir", "timing")  # identity excludes output plumbing
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _schedule_from_config(config: ExperimentConfig) -> Schedule:
    sched = Schedule(
        kind=config.schedule,
        stage_fractions=tuple(config.stage_fractions),
        stage_factor=config.stage_factor,
        warmup_steps=config.warmup_steps,
    )
    sched.validate()
    return sched


# --------------------------------------------------------------------------
# Problem construction


@dataclass
class ProblemBundle:
    problem: Problem
    x0: Vector
    n_steps: int
    D: Optional[float] = None
    G: Optional[float] = None
    G_inf: Optional[float] = None
    x_star: Optional[Vector] = None
    fstar: Optional[float] = None
    logistic: Optional[LogisticProblem] = None


def build_problem(config: ExperimentConfig, seed: int) -> ProblemBundle:
    if config.problem == "abs":
        prob = abs_value_problem()
        x0 = np.array([config.x0], dtype=np.float64)
        n = config.n_steps
        if n <= 0:
            raise ConfigError("abs problem needs n_steps > 0")
        return ProblemBundle(
            problem=prob,
            x0=x0,
            n_steps=n,
            D=abs(config.x0),
            G=1.0,
            G_inf=1.0,
            x_star=prob.known_minimizer,
            fstar=0.0,
        )
    if config.problem == "piecewise":
        rng = Rng(config.problem_seed, stream_id=1)
        prob = random_piecewise_max(
            rng, dim=config.piecewise_dim, pieces=config.piecewise_pieces
        )
        direction = rng.normals(config.piecewise_dim)
        direction /= math.sqrt(float(direction @ direction))
        x0 = prob.known_minimizer + config.x0_distance * direction
        n = config.n_steps
        if n <= 0:
            raise ConfigError("piecewise problem needs n_steps > 0")
        return ProblemBundle(
            problem=prob,
            x0=x0,
            n_steps=n,
            D=config.x0_distance,
            G=prob.lipschitz,
            G_inf=prob.lipschitz_inf,
            x_star=prob.known_minimizer,
            fstar=prob.known_fstar,
        )
    if config.problem in ("synth_logistic", "libsvm"):
        if config.problem == "synth_logistic":
            dataset = synth_dataset(
                config.problem_seed,
                config.synth_n,
                config.synth_dim,
                margin=config.synth_margin,
                flip=config.synth_flip,
            )
        else:
            path = Path(config.libsvm_path)
            if not path.is_file():
                raise ConfigError(f"dataset file {path} not found")
            dataset = parse_libsvm(path.read_text())
            if len(dataset) == 0:
                raise ConfigError(f"dataset file {path} holds no examples")
        batch = len(dataset) if config.full_batch else config.batch_size
        # batch order is keyed by the seed alone so runs that differ only in
        # optimizer settings see identical data sequences
        logistic = LogisticProblem(dataset, batch_size=batch, rng=Rng(seed, stream_id=2))
        n = config.n_steps
        if n <= 0:
            if config.epochs <= 0:
                raise ConfigError("dataset problems need n_steps or epochs")
            n = config.epochs * logistic.batches_per_epoch()
        return ProblemBundle(
            problem=logistic.problem(stochastic=not config.full_batch),
            x0=np.zeros(logistic.dim, dtype=np.float64),
            n_steps=n,
            logistic=logistic,
        )
    raise ConfigError(f"unknown problem {config.problem!r}")


# --------------------------------------------------------------------------
# Single runs


@dataclass
class RunOutput:
    config_hash: str
    seed: int
    rows: list[tuple]  # CSV_HEADER schema
    summary: dict


def _rows_from_trajectory(traj, elapsed: float) -> list[tuple]:
    return [
        (rec.k, rec.d, rec.dhat, rec.scale, rec.f, rec.gnorm2, elapsed)
        for rec in traj.records
    ]


def _finite(x: Vector) -> bool:
    return bool(np.isfinite(x).all()) and float(np.abs(x).max(initial=0.0)) <= DIVERGENCE_NORM


def _final_f(bundle: ProblemBundle, x: Vector) -> float:
    return float(bundle.problem.value(x))


def run_single(config: ExperimentConfig, seed: int) -> RunOutput:
    """Execute one (config, seed) run and return rows plus a summary."""
    bundle = build_problem(config, seed)
    sched = _schedule_from_config(config)
    chash = config_hash(config)
    rng = seeded_rng(seed, int(chash[:8], 16))
    algo = config.algorithm
    t_start = time.perf_counter() if config.timing else 0.0

    summary = {
        "algorithm": algo,
        "seed": seed,
        "d0": config.d0,
        "lr": config.lr,
        "steps": 0,
        "final_f": _NAN,
        "avg_f": _NAN,
        "f_at_t": _NAN,
        "t_index": -1,
        "final_d": _NAN,
        "heuristic_G": False,
        "out_of_theory": False,
        "diverged": False,
        "exited_at_start": False,
    }
    if bundle.D is not None and config.d0 > bundle.D and algo in DADAPT_ALGORITHMS:
        summary["out_of_theory"] = True

    rows: list[tuple] = []
    try:
        if algo in ("da_I", "da_II", "gd", "adagrad_da"):
            kind = {"da_I": "da", "da_II": "da", "gd": "gd", "adagrad_da": "adagrad_da"}[algo]
            result = run_convex(
                bundle.problem,
                bundle.x0,
                algorithm=kind,
                d0=config.d0,
                n=bundle.n_steps,
                option="II" if algo == "da_II" else "I",
                g_mode=config.g_mode,
                g_value=bundle.G,
                g_inf=bundle.G_inf,
                schedule=sched,
                rng=rng,
                record_f_every=config.record_f_every,
            )
            elapsed = time.perf_counter() - t_start if config.timing else 0.0
            rows = _rows_from_trajectory(result.traj, elapsed)
            summary["steps"] = len(result.traj.records)
            summary["exited_at_start"] = result.exited_at_start
            summary["final_d"] = result.d_final
            summary["heuristic_G"] = bool(result.traj.meta.get("heuristic_g", False))
            summary["final_f"] = _final_f(bundle, result.x_final)
            if not result.exited_at_start:
                summary["avg_f"] = _final_f(bundle, result.x_avg)
                if result.t_index is not None:
                    summary["t_index"] = result.t_index
                    summary["f_at_t"] = _final_f(bundle, result.x_avg_t)
            if not _finite(result.x_final):
                summary["diverged"] = True
        elif algo in ("sgd_da", "adam_da"):
            rows, summary_update = _run_ml(config, bundle, sched, rng)
            summary.update(summary_update)
        elif algo in BASELINE_ALGORITHMS:
            rows, summary_update = _run_baseline(config, bundle, sched, rng)
            summary.update(summary_update)
        else:
            raise ConfigError(f"unknown algorithm {algo!r}")
    except ValueError as err:
        if "non-finite" in str(err):
            summary["diverged"] = True
        else:
            raise
    if config.timing and rows:
        elapsed = time.perf_counter() - t_start
        rows = [row[:6] + (elapsed,) for row in rows]
    return RunOutput(config_hash=chash, seed=seed, rows=rows, summary=summary)


def _run_ml(config, bundle: ProblemBundle, sched: Schedule, rng: Rng):
    problem = bundle.problem
    n = bundle.n_steps
    if config.algorithm == "sgd_da":
        state = sgd_da_init(bundle.x0, d0=config.d0, beta=config.beta, G=bundle.G)
        step = sgd_da_step
    else:
        state = adam_da_init(
            bundle.x0,
            d0=config.d0,
            beta1=config.beta1,
            beta2=config.beta2,
            eps=config.eps,
            decay=config.decay,
        )
        step = adam_da_step
    diverged = False
    for k in range(n):
        f_val = problem.value(state.x) if k % config.record_f_every == 0 else _NAN
        g = np.asarray(problem.subgradient(state.x, rng), dtype=np.float64)
        step(state, g, gamma_k=schedule_eval(sched, k, n), f_val=f_val)
        if not _finite(state.x):
            diverged = True
            break
    rows = _rows_from_trajectory(state.traj, 0.0)
    summary = {
        "steps": state.k,
        "final_f": _final_f(bundle, state.x) if not diverged else _NAN,
        "final_d": state.d,
        "diverged": diverged,
        "heuristic_G": config.algorithm == "sgd_da" and bundle.G is None,
    }
    return rows, summary


def _run_baseline(config, bundle: ProblemBundle, sched: Schedule, rng: Rng):
    problem = bundle.problem
    n = bundle.n_steps
    algo = config.algorithm
    rows: list[tuple] = []
    diverged = False

    if algo == "fixed":
        if bundle.D is None or bundle.G is None:
            raise ConfigError("fixed-step baseline needs known D and G")
        gamma = config.lr * bundle.D / (bundle.G * math.sqrt(n))
        x = bundle.x0.copy()
        total = x.copy()
        for k in range(n):
            f_val = problem.value(x) if k % config.record_f_every == 0 else _NAN
            g = np.asarray(problem.subgradient(x, rng), dtype=np.float64)
            x = x - gamma * g
            total += x
            rows.append((k, _NAN, _NAN, gamma, f_val, float(g @ g), 0.0))
            if not _finite(x):
                diverged = True
                break
        x_out = total / (len(rows) + 1)
        return rows, {
            "steps": len(rows),
            "final_f": _final_f(bundle, x_out) if not diverged else _NAN,
            "avg_f": _final_f(bundle, x_out) if not diverged else _NAN,
            "diverged": diverged,
        }

    if algo == "adagrad_norm":
        radius = config.lr * (bundle.D if bundle.D is not None else 1.0)
        state = adagrad_norm_init(bundle.x0, radius)
        for k in range(n):
            f_val = problem.value(state.x) if k % config.record_f_every == 0 else _NAN
            g = np.asarray(problem.subgradient(state.x, rng), dtype=np.float64)
            adagrad_norm_step(state, g)
            gamma = (
                state.radius / math.sqrt(state.sum_gsq) if state.sum_gsq > 0.0 else _NAN
            )
            rows.append((k, _NAN, _NAN, gamma, f_val, float(g @ g), 0.0))
        return rows, {
            "steps": len(rows),
            "final_f": _final_f(bundle, state.x),
            "diverged": False,  # iterates stay inside the ball
        }

    if algo == "polyak":
        if bundle.fstar is None:
            raise ConfigError("polyak baseline needs the optimal value")
        x = bundle.x0.copy()
        for k in range(n):
            f_val = problem.value(x)
            g = np.asarray(problem.subgradient(x, rng), dtype=np.float64)
            gg = float(g @ g)
            gamma = (f_val - bundle.fstar) / gg if gg > 0.0 else 0.0
            x = polyak_step(x, g, f_val, bundle.fstar)
            rows.append(
                (k, _NAN, _NAN, gamma, f_val if k % config.record_f_every == 0 else _NAN, gg, 0.0)
            )
            if not _finite(x):
                diverged = True
                break
        return rows, {
            "steps": len(rows),
            "final_f": _final_f(bundle, x) if not diverged else _NAN,
            "diverged": diverged,
        }

    if algo == "adagrad":
        # plain coordinate-wise accumulation, lr times schedule on top
        x = bundle.x0.copy()
        acc = np.zeros_like(x)
        for k in range(n):
            f_val = problem.value(x) if k % config.record_f_every == 0 else _NAN
            g = np.asarray(problem.subgradient(x, rng), dtype=np.float64)
            acc = np.sqrt(acc * acc + g * g)
            step = np.divide(g, acc, out=np.zeros_like(g), where=acc > 0.0)
            mult = config.lr * schedule_eval(sched, k, n)
            x = x - mult * step
            rows.append((k, _NAN, _NAN, mult, f_val, float(g @ g), 0.0))
            if not _finite(x):
                diverged = True
                break
        return rows, {
            "steps": len(rows),
            "final_f": _final_f(bundle, x) if not diverged else _NAN,
            "diverged": diverged,
        }

    raise ConfigError(f"unknown baseline {algo!r}")


# --------------------------------------------------------------------------
# Experiments, grids, sweeps


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    return buf.getvalue()


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


SUMMARY_HEADER = [
    "algorithm",
    "seed",
    "d0",
    "lr",
    "steps",
    "final_f",
    "avg_f",
    "f_at_t",
    "t_index",
    "final_d",
    "heuristic_G",
    "out_of_theory",
    "diverged",
    "exited_at_start",
]


def mean_2se(values: Sequence[float]) -> tuple[float, float]:
    vals = [float(v) for v in values]
    m = sum(vals) / len(vals)
    if len(vals) < 2:
        return m, 0.0
    var = sum((v - m) ** 2 for v in vals) / (len(vals) - 1)
    return m, 2.0 * math.sqrt(var / len(vals))


def _worker_count() -> int:
    raw = os.environ.get("DADAPT_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"DADAPT_WORKERS={raw!r} is not an integer") from None


def _run_seeds(config: ExperimentConfig) -> list[RunOutput]:
    seeds = list(config.seeds)
    if not seeds:
        raise ConfigError("config lists no seeds")
    workers = _worker_count()
    if workers == 1 or len(seeds) == 1:
        return [run_single(config, seed) for seed in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_single, [config] * len(seeds), seeds))


@dataclass
class ExperimentResult:
    config_hash: str
    out_dir: Path
    outputs: list[RunOutput]
    aggregate: dict[str, tuple[float, float]]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every seed, write per-seed CSVs, a summary, and an aggregate."""
    outputs = _run_seeds(config)
    chash = outputs[0].config_hash
    out_dir = Path(config.out_dir) / chash
    for out in outputs:
        _write_atomic(out_dir / f"steps_seed{out.seed}.csv", _csv_text(CSV_HEADER, out.rows))
    summary_rows = [[out.summary.get(k, "") for k in SUMMARY_HEADER] for out in outputs]
    _write_atomic(out_dir / "summary.csv", _csv_text(SUMMARY_HEADER, summary_rows))

    aggregate: dict[str, tuple[float, float]] = {}
    agg_rows = []
    for metric in ("final_f", "avg_f", "f_at_t", "final_d"):
        vals = [out.summary[metric] for out in outputs]
        if all(isinstance(v, float) and math.isnan(v) for v in vals):
            continue
        m, se2 = mean_2se(vals)
        aggregate[metric] = (m, se2)
        agg_rows.append([metric, m, se2, len(vals)])
    _write_atomic(
        out_dir / "aggregate.csv", _csv_text(["metric", "mean", "two_se", "count"], agg_rows)
    )
    return ExperimentResult(
        config_hash=chash, out_dir=out_dir, outputs=outputs, aggregate=aggregate
    )


@dataclass
class GridResult:
    rows: list[tuple[float, float, float, bool]]  # lr, mean final_f, 2se, diverged
    best_lr: float
    best_f: float
    out_path: Optional[Path] = None
    compare_algorithm: Optional[str] = None
    compare_f: float = _NAN


def grid_search(
    config: ExperimentConfig,
    lrs: Sequence[float],
    compare_algorithm: Optional[str] = None,
) -> GridResult:
    """Sweep a baseline's step-size multiplier; adaptive runs never appear
    as grid points, but one can be run alongside for comparison."""
    if config.algorithm not in GRID_BASELINES:
        raise ConfigError(
            f"grid search covers baselines {GRID_BASELINES}; "
            f"{config.algorithm!r} adapts its own scale"
        )
    if not lrs:
        raise ConfigError("empty lr grid")
    rows = []
    best_lr, best_f = None, math.inf
    for lr in sorted(float(lr) for lr in lrs):  # ties resolve to the smaller lr
        result = run_experiment(replace(config, lr=lr))
        diverged = any(out.summary["diverged"] for out in result.outputs)
        m, se2 = result.aggregate.get("final_f", (_NAN, _NAN))
        rows.append((lr, m, se2, diverged))
        if not diverged and not math.isnan(m) and m < best_f:
            best_lr, best_f = lr, m
    if best_lr is None:
        raise ValueError("every grid point diverged")
    out_path = Path(config.out_dir) / f"grid_{config_hash(config)}.csv"
    _write_atomic(
        out_path,
        _csv_text(["lr", "mean_final_f", "two_se", "diverged"], rows),
    )
    compare_f = _NAN
    if compare_algorithm is not None:
        if compare_algorithm not in DADAPT_ALGORITHMS:
            raise ConfigError(
                f"comparison run must be one of {DADAPT_ALGORITHMS}"
            )
        compare = run_experiment(replace(config, algorithm=compare_algorithm))
        compare_f = compare.aggregate.get("final_f", (_NAN, _NAN))[0]
        _write_atomic(
            out_path.with_name(out_path.stem + "_compare.csv"),
            _csv_text(
                ["algorithm", "mean_final_f"],
                [["best_grid", best_f], [compare_algorithm, compare_f]],
            ),
        )
    return GridResult(
        rows=rows,
        best_lr=best_lr,
        best_f=best_f,
        out_path=out_path,
        compare_algorithm=compare_algorithm,
        compare_f=compare_f,
    )


@dataclass
class SweepResult:
    rows: list[tuple[float, float, float, bool]]  # d0, mean final_f, 2se, out_of_theory
    relative_spread: float
    out_path: Optional[Path] = None


def d0_sweep(config: ExperimentConfig, d0s: Sequence[float]) -> SweepResult:
    """Run the same adaptive config across initial estimates d0."""
    if config.algorithm not in DADAPT_ALGORITHMS:
        raise ConfigError("d0 sweep applies to the adaptive algorithms only")
    if not d0s:
        raise ConfigError("empty d0 list")
    rows = []
    finals = []
    for d0 in d0s:
        if d0 <= 0.0:
            raise ConfigError("d0 must be positive")
        result = run_experiment(replace(config, d0=float(d0)))
        m, se2 = result.aggregate.get("final_f", (_NAN, _NAN))
        out_of_theory = any(out.summary["out_of_theory"] for out in result.outputs)
        rows.append((float(d0), m, se2, out_of_theory))
        finals.append(m)
    lo, hi = min(finals), max(finals)
    scale = max(abs(lo), abs(hi))
    spread = (hi - lo) / scale if scale > 0.0 else 0.0
    out_path = Path(config.out_dir) / f"sweep_d0_{config_hash(config)}.csv"
    _write_atomic(
        out_path,
        _csv_text(["d0", "mean_final_f", "two_se", "out_of_theory"], rows),
    )
    return SweepResult(rows=rows, relative_spread=spread, out_path=out_path)


# --------------------------------------------------------------------------
# Verification batteries for the CLI


def _verify_run_set(n_problems: int, n_steps: int, seed0: int = 0):
    """Small representative runs of every convex variant on random problems."""
    runs = []
    for i in range(n_problems):
        rng = Rng(seed0 + i, stream_id=1)
        prob = random_piecewise_max(rng, dim=6, pieces=6)
        direction = rng.normals(6)
        direction /= math.sqrt(float(direction @ direction))
        x0 = prob.known_minimizer + direction
        for algo, option in (("da", "I"), ("da", "II"), ("gd", "I"), ("adagrad_da", "I")):
            result = run_convex(
                prob,
                x0,
                algorithm=algo,
                d0=1e-3,
                n=n_steps,
                option=option,
                g_value=prob.lipschitz,
                g_inf=prob.lipschitz_inf,
            )
            runs.append((prob, result, f"{algo}_{option}_problem{i}"))
    return runs


def verify_suite(suite: str = "all", quick: bool = True) -> list[BoundReport]:
    """Battery behind `verify`: lemma identities and/or rate bounds."""
    if suite not in ("lemmas", "bounds", "all"):
        raise ConfigError(f"unknown suite {suite!r}")
    reports: list[BoundReport] = []
    n_problems = 5 if quick else 20
    n_steps = 200 if quick else 1000

    if suite in ("lemmas", "all"):
        runs = _verify_run_set(n_problems, n_steps)
        for prob, result, tag in runs:
            traj = result.traj
            if traj.kind in ("da", "gd"):
                rep = analysis.check_telescoping(traj)
                reports.append(replace(rep, context=f"{rep.context} [{tag}]"))
            if traj.kind == "da":
                rep = analysis.check_option_dominance(traj)
                reports.append(replace(rep, context=f"{rep.context} [{tag}]"))
        rng = Rng(7, stream_id=2)
        for i in range(n_problems):
            G = 1.0 + rng.uniform()
            gnorms = [G * rng.uniform() for _ in range(n_steps)]
            reports.append(analysis.check_streeter_mcmahan(gnorms, G, variant="sqrt"))
            reports.append(analysis.check_streeter_mcmahan(gnorms, G, variant="log"))
            ds = [1e-4]
            for _ in range(n_steps):
                ds.append(ds[-1] * (1.0 + rng.uniform() * 0.05))
            reports.append(analysis.check_mindk(ds))
        for c in (0.5, 0.9, 0.999):
            gs = [rng.normal() for _ in range(100)]
            reports.append(analysis.check_ema_equivalence(c, gs))

    if suite in ("bounds", "all"):
        runs = _verify_run_set(n_problems, n_steps, seed0=100)
        for prob, result, tag in runs:
            rep = analysis.check_d_lower_bound(result.traj, 1.0)
            reports.append(replace(rep, context=f"{rep.context} [{tag}]"))
            rep = analysis.check_snorm_bound(result.traj)
            reports.append(replace(rep, context=f"{rep.context} [{tag}]"))
        abs_prob = abs_value_problem()
        x0 = np.array([1.0])
        n_rate = 2000 if quick else 10000
        result = run_convex(
            abs_prob, x0, algorithm="da", d0=0.1, n=n_rate, g_mode="fixed", g_value=1.0
        )
        reports.append(analysis.check_rate_theorem2(result, abs_prob, D=1.0, G=1.0))
        result_plain = run_convex(abs_prob, x0, algorithm="da", d0=0.1, n=n_rate)
        reports.append(analysis.check_rate_asymptotic(result_plain, abs_prob, D=1.0, G=1.0))
        n_asym = 20000 if quick else 100000
        result_long = run_convex(
            abs_prob, x0, algorithm="da", d0=0.1, n=n_asym, g_mode="fixed", g_value=1.0
        )
        reports.append(
            analysis.check_dasym(result_long, abs_prob.known_minimizer, D=1.0)
        )
    return reports
