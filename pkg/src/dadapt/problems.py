"""Benchmark objectives and dataset handling.

Deterministic convex test problems (absolute value, piecewise-linear max
with a constructed minimizer) plus binary logistic regression over sparse
index:value datasets, with a text parser/serializer for the standard
`label idx:val ...` format, a synthetic linearly-structured generator,
and epoch-shuffled minibatching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Problem, Rng, Vector

__all__ = [
    "ParseError",
    "Example",
    "Dataset",
    "parse_libsvm",
    "serialize_libsvm",
    "synth_dataset",
    "abs_value_problem",
    "piecewise_max_problem",
    "random_piecewise_max",
    "LogisticProblem",
    "logistic_value_grad",
]


class ParseError(ValueError):
    """Malformed dataset text; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --------------------------------------------------------------------------
# Deterministic convex problems


def abs_value_problem() -> Problem:
    """f(x) = |x| in one dimension; the subgradient at 0 is taken as 0."""

    def value(x: Vector) -> float:
        return abs(float(x[0]))

    def subgradient(x: Vector, rng: Optional[Rng] = None) -> Vector:
        v = float(x[0])
        return np.array([math.copysign(1.0, v) if v != 0.0 else 0.0])

    return Problem(
        dim=1,
        value=value,
        subgradient=subgradient,
        known_minimizer=np.zeros(1),
        known_fstar=0.0,
        lipschitz=1.0,
        lipschitz_inf=1.0,
        name="abs",
    )


def piecewise_max_problem(
    slopes: Vector,
    offsets: Vector,
    known_minimizer: Optional[Vector] = None,
    known_fstar: Optional[float] = None,
) -> Problem:
    """f(x) = max_i (<slopes_i, x> + offsets_i); ties take the lowest index."""
    slopes = np.asarray(slopes, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    if slopes.ndim != 2 or offsets.shape != (slopes.shape[0],):
        raise ValueError("need an m x dim slope matrix and m offsets")

    def value(x: Vector) -> float:
        return float((slopes @ x + offsets).max())

    def subgradient(x: Vector, rng: Optional[Rng] = None) -> Vector:
        scores = slopes @ x + offsets
        return slopes[int(np.argmax(scores))].copy()

    norms = np.sqrt((slopes * slopes).sum(axis=1))
    return Problem(
        dim=slopes.shape[1],
        value=value,
        subgradient=subgradient,
        known_minimizer=known_minimizer,
        known_fstar=known_fstar,
        lipschitz=float(norms.max()),
        lipschitz_inf=float(np.abs(slopes).max()),
        name="piecewise_max",
    )


def random_piecewise_max(
    rng: Rng, dim: int = 8, pieces: int = 8, fstar: float = 0.0
) -> Problem:
    """Random piecewise-linear problem with a known minimizer.

    All pieces are active at x_star and the slopes sum to zero, so zero is
    in the convex hull of the active slopes and f >= fstar everywhere with
    equality at x_star.
    """
    if pieces < 2 or dim < 1:
        raise ValueError("need at least 2 pieces and dim >= 1")
    x_star = rng.normals(dim)
    slopes = np.stack([rng.normals(dim) for _ in range(pieces - 1)])
    slopes = np.vstack([slopes, -slopes.sum(axis=0)])
    offsets = fstar - slopes @ x_star
    return piecewise_max_problem(
        slopes, offsets, known_minimizer=x_star, known_fstar=fstar
    )


# --------------------------------------------------------------------------
# Sparse datasets


@dataclass(frozen=True)
class Example:
    indices: np.ndarray  # 1-based, strictly ascending
    values: np.ndarray
    label: int  # +1 or -1


@dataclass
class Dataset:
    examples: list[Example]
    dim: int

    def __len__(self) -> int:
        return len(self.examples)


def _parse_label(token: str, line: int) -> int:
    try:
        v = float(token)
    except ValueError:
        raise ParseError(f"label {token!r} is not numeric", line) from None
    if v == 1.0:
        return 1
    if v == -1.0 or v == 0.0:
        return -1
    raise ParseError(f"label {token!r} is not binary; multiclass data is rejected", line)


def parse_libsvm(text: str) -> Dataset:
    """Parse `label idx:val ...` lines into a Dataset.

    Labels 1/+1 map to +1 and 0/-1 map to -1; anything else is rejected.
    Indices are 1-based and must be strictly ascending within a line.
    `#` starts a comment; blank lines are skipped. The dimension is the
    largest index seen.
    """
    examples: list[Example] = []
    dim = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label = _parse_label(tokens[0], lineno)
        indices: list[int] = []
        values: list[float] = []
        prev = 0
        for tok in tokens[1:]:
            head, sep, tail = tok.partition(":")
            if not sep or not head or not tail:
                raise ParseError(f"malformed feature {tok!r}", lineno)
            try:
                idx = int(head)
                val = float(tail)
            except ValueError:
                raise ParseError(f"malformed feature {tok!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"index {idx} is not 1-based", lineno)
            if idx <= prev:
                raise ParseError(
                    f"index {idx} not strictly ascending after {prev}", lineno
                )
            if not math.isfinite(val):
                raise ParseError(f"non-finite value in {tok!r}", lineno)
            indices.append(idx)
            values.append(val)
            prev = idx
        if indices:
            dim = max(dim, indices[-1])
        examples.append(
            Example(
                indices=np.array(indices, dtype=np.int64),
                values=np.array(values, dtype=np.float64),
                label=label,
            )
        )
    return Dataset(examples=examples, dim=dim)


def serialize_libsvm(dataset: Dataset) -> str:
    """Inverse of parse_libsvm; float values keep full round-trip precision."""
    lines = []
    for ex in dataset.examples:
        parts = ["+1" if ex.label > 0 else "-1"]
        parts.extend(f"{int(i)}:{float(v)!r}" for i, v in zip(ex.indices, ex.values))
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def synth_dataset(
    seed: int, n_examples: int, dim: int, margin: float = 0.0, flip: float = 0.0
) -> Dataset:
    """Linearly structured binary data with controllable separation.

    Features are standard normals labeled by a random unit direction;
    each point is then pushed margin further from the boundary along that
    direction, and each label flipped with probability flip.
    """
    if n_examples < 1 or dim < 1:
        raise ValueError("need n_examples >= 1 and dim >= 1")
    if not (0.0 <= flip < 1.0):
        raise ValueError("flip must lie in [0, 1)")
    rng = Rng(seed, stream_id=0)
    w = rng.normals(dim)
    w /= math.sqrt(float(w @ w))
    indices = np.arange(1, dim + 1, dtype=np.int64)
    examples = []
    for _ in range(n_examples):
        x = rng.normals(dim)
        label = 1 if float(w @ x) >= 0.0 else -1
        x = x + margin * label * w
        if flip > 0.0 and rng.uniform() < flip:
            label = -label
        examples.append(Example(indices=indices.copy(), values=x, label=label))
    return Dataset(examples=examples, dim=dim)


# --------------------------------------------------------------------------
# Logistic regression


def logistic_value_grad(
    X: np.ndarray, y: np.ndarray, w: Vector
) -> tuple[float, Vector]:
    """Mean logistic loss and gradient over the rows of X.

    Stable for any margin: loss is logaddexp(0, -t) with t = y * Xw, and
    the gradient coefficient sigma(-t) is computed through the same form.
    """
    t = y * (X @ w)
    loss = float(np.logaddexp(0.0, -t).mean())
    coeff = -y * np.exp(-np.logaddexp(0.0, t))  # -y * sigma(-t)
    grad = X.T @ coeff / X.shape[0]
    return loss, grad


class LogisticProblem:
    """Binary logistic regression with an always-1 bias feature.

    The weight vector has dataset.dim + 1 entries; the trailing entry
    multiplies the bias feature, which lives at index dim + 1 in the
    sparse format. Minibatches are drawn by epoch: a fresh seeded
    permutation per pass, consecutive slices, short final batch kept.
    """

    def __init__(self, dataset: Dataset, batch_size: int = 16, rng: Optional[Rng] = None):
        if len(dataset) == 0:
            raise ValueError("empty dataset")
        n = len(dataset)
        self.dataset = dataset
        self.batch_size = min(max(batch_size, 1), n)
        self.rng = rng if rng is not None else Rng(0, 0)
        self.dim = dataset.dim + 1  # bias included
        X = np.zeros((n, self.dim), dtype=np.float64)
        y = np.zeros(n, dtype=np.float64)
        for i, ex in enumerate(dataset.examples):
            X[i, ex.indices - 1] = ex.values
            X[i, self.dim - 1] = 1.0
            y[i] = float(ex.label)
        self.X = X
        self.y = y
        self._order: Optional[np.ndarray] = None
        self._pos = 0

    def next_batch(self) -> np.ndarray:
        n = len(self.dataset)
        if self._order is None or self._pos >= n:
            self._order = self.rng.permutation(n)
            self._pos = 0
        batch = self._order[self._pos : self._pos + self.batch_size]
        self._pos += self.batch_size
        return batch

    def batches_per_epoch(self) -> int:
        n = len(self.dataset)
        return (n + self.batch_size - 1) // self.batch_size

    def value_grad(self, w: Vector, batch: np.ndarray) -> tuple[float, Vector]:
        return logistic_value_grad(self.X[batch], self.y[batch], w)

    def full_value(self, w: Vector) -> float:
        loss, _ = logistic_value_grad(self.X, self.y, w)
        return loss

    def full_grad(self, w: Vector) -> Vector:
        _, grad = logistic_value_grad(self.X, self.y, w)
        return grad

    def problem(self, stochastic: bool = True) -> Problem:
        """Oracle view: full-loss values, batch (or full) gradients."""
        if stochastic:

            def subgradient(x: Vector, rng: Optional[Rng] = None) -> Vector:
                _, grad = self.value_grad(x, self.next_batch())
                return grad

        else:

            def subgradient(x: Vector, rng: Optional[Rng] = None) -> Vector:
                return self.full_grad(x)

        return Problem(
            dim=self.dim,
            value=self.full_value,
            subgradient=subgradient,
            stochastic=stochastic,
            name="logistic",
        )
