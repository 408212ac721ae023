"""Problem constructions, dataset parsing, logistic oracle correctness."""

import math

import numpy as np
import pytest

from dadapt.core import Rng
from dadapt.problems import (
    Dataset,
    Example,
    LogisticProblem,
    ParseError,
    abs_value_problem,
    logistic_value_grad,
    parse_libsvm,
    piecewise_max_problem,
    random_piecewise_max,
    serialize_libsvm,
    synth_dataset,
)


class TestParser:
    def test_basic_line(self):
        ds = parse_libsvm("1 1:0.5 3:-2\n")
        assert ds.dim == 3
        assert len(ds) == 1
        ex = ds.examples[0]
        assert ex.label == 1
        assert list(ex.indices) == [1, 3]
        assert list(ex.values) == [0.5, -2.0]

    def test_empty_text(self):
        ds = parse_libsvm("")
        assert len(ds) == 0
        assert ds.dim == 0

    def test_two_examples(self):
        ds = parse_libsvm("+1 2:1\n-1 1:1\n")
        assert len(ds) == 2
        assert ds.dim == 2
        assert ds.examples[0].label == 1
        assert ds.examples[1].label == -1

    def test_zero_label_maps_to_negative(self):
        ds = parse_libsvm("0 1:1\n")
        assert ds.examples[0].label == -1

    def test_crlf_and_comments(self):
        ds = parse_libsvm("# header\r\n+1 1:2.5 # trailing\r\n\r\n-1 2:1\r\n")
        assert len(ds) == 2
        assert ds.dim == 2
        assert ds.examples[0].values[0] == 2.5

    def test_error_carries_line_number(self):
        with pytest.raises(ParseError) as exc:
            parse_libsvm("+1 1:1\n-1 junk\n")
        assert exc.value.line == 2
        assert "line 2" in str(exc.value)

    def test_multiclass_rejected(self):
        with pytest.raises(ParseError):
            parse_libsvm("3 1:1\n")

    def test_nonascending_indices_rejected(self):
        with pytest.raises(ParseError):
            parse_libsvm("+1 2:1 2:2\n")
        with pytest.raises(ParseError):
            parse_libsvm("+1 3:1 1:2\n")

    def test_zero_index_rejected(self):
        with pytest.raises(ParseError):
            parse_libsvm("+1 0:1\n")

    def test_nonfinite_value_rejected(self):
        with pytest.raises(ParseError):
            parse_libsvm("+1 1:nan\n")

    def test_round_trip(self):
        ds = synth_dataset(seed=5, n_examples=20, dim=7, margin=0.25, flip=0.1)
        text = serialize_libsvm(ds)
        ds2 = parse_libsvm(text)
        assert ds2.dim == ds.dim
        assert len(ds2) == len(ds)
        for a, b in zip(ds.examples, ds2.examples):
            assert a.label == b.label
            assert np.array_equal(a.indices, b.indices)
            assert np.array_equal(a.values, b.values)  # repr round-trips exactly

    def test_serialize_empty(self):
        assert serialize_libsvm(Dataset(examples=[], dim=0)) == ""


class TestSynthDataset:
    def test_deterministic(self):
        a = synth_dataset(seed=1, n_examples=30, dim=5)
        b = synth_dataset(seed=1, n_examples=30, dim=5)
        for ea, eb in zip(a.examples, b.examples):
            assert ea.label == eb.label
            assert np.array_equal(ea.values, eb.values)

    def test_seed_changes_data(self):
        a = synth_dataset(seed=1, n_examples=30, dim=5)
        b = synth_dataset(seed=2, n_examples=30, dim=5)
        assert not np.array_equal(a.examples[0].values, b.examples[0].values)

    def test_validation(self):
        with pytest.raises(ValueError):
            synth_dataset(seed=0, n_examples=0, dim=5)
        with pytest.raises(ValueError):
            synth_dataset(seed=0, n_examples=5, dim=0)
        with pytest.raises(ValueError):
            synth_dataset(seed=0, n_examples=5, dim=5, flip=1.0)

    def test_huge_margin_is_nearly_separable(self):
        # with a wide margin and no flips a linear model drives the loss
        # far below the w=0 value of log 2
        ds = synth_dataset(seed=3, n_examples=100, dim=4, margin=10.0)
        lp = LogisticProblem(ds, batch_size=100)
        w = np.zeros(lp.dim)
        for _ in range(200):
            g = lp.full_grad(w)
            w -= 5.0 * g
        assert lp.full_value(w) < 0.05


class TestLogisticOracle:
    def test_zero_weights_give_log2(self):
        ds = synth_dataset(seed=7, n_examples=50, dim=6)
        lp = LogisticProblem(ds, batch_size=50)
        w = np.zeros(lp.dim)
        assert lp.full_value(w) == pytest.approx(math.log(2.0), rel=1e-15)

    def test_zero_weights_gradient(self):
        # at w=0 the per-example gradient is -y*x/2; the batch gradient is
        # the mean of those
        ds = parse_libsvm("+1 1:2\n-1 2:4\n")
        lp = LogisticProblem(ds, batch_size=2)
        g = lp.full_grad(np.zeros(lp.dim))
        # features gain a bias column of ones at the end
        expected = -(
            1.0 * np.array([2.0, 0.0, 1.0]) + (-1.0) * np.array([0.0, 4.0, 1.0])
        ) / (2.0 * 2.0)
        np.testing.assert_allclose(g, expected, rtol=0, atol=1e-16)

    def test_extreme_margin_stability(self):
        X = np.array([[1.0], [1.0]])
        y = np.array([1.0, -1.0])
        for w0 in (50.0, -50.0):
            loss, grad = logistic_value_grad(X, y, np.array([w0]))
            assert math.isfinite(loss)
            assert np.all(np.isfinite(grad))
        # the saturated side contributes ~0, the violated side ~|t|
        loss, _ = logistic_value_grad(X, y, np.array([50.0]))
        assert loss == pytest.approx(25.0, rel=1e-10)

    def test_batch_mean_consistency(self):
        # mean over a batch equals the average of single-example losses
        ds = synth_dataset(seed=11, n_examples=16, dim=3)
        lp = LogisticProblem(ds, batch_size=16)
        w = Rng(0, 5).normals(lp.dim)
        batch = np.arange(16)
        loss, grad = lp.value_grad(w, batch)
        singles = [lp.value_grad(w, np.array([i])) for i in range(16)]
        assert loss == pytest.approx(
            sum(s[0] for s in singles) / 16.0, rel=1e-15
        )
        np.testing.assert_allclose(
            grad, sum(s[1] for s in singles) / 16.0, rtol=1e-15
        )

    def test_full_grad_matches_brute_force(self):
        ds = synth_dataset(seed=7, n_examples=100, dim=10)
        lp = LogisticProblem(ds, batch_size=16)
        w = Rng(7, 6).normals(lp.dim)
        # per-example summation straight from the loss definition
        acc = np.zeros(lp.dim)
        for i in range(100):
            t = lp.y[i] * float(lp.X[i] @ w)
            sigma_neg = 1.0 / (1.0 + math.exp(t))
            acc += -lp.y[i] * sigma_neg * lp.X[i]
        np.testing.assert_allclose(lp.full_grad(w), acc / 100.0, rtol=1e-12)

    def test_bias_column(self):
        ds = parse_libsvm("+1 1:3\n")
        lp = LogisticProblem(ds, batch_size=1)
        assert lp.dim == 2
        assert lp.X[0, -1] == 1.0

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            LogisticProblem(Dataset(examples=[], dim=0))


class TestBatching:
    def test_epoch_covers_every_example(self):
        ds = synth_dataset(seed=9, n_examples=37, dim=2)
        lp = LogisticProblem(ds, batch_size=16, rng=Rng(1, 2))
        seen = np.concatenate([lp.next_batch() for _ in range(lp.batches_per_epoch())])
        assert sorted(seen.tolist()) == list(range(37))
        assert lp.batches_per_epoch() == 3  # 16 + 16 + 5

    def test_short_final_batch_kept(self):
        ds = synth_dataset(seed=9, n_examples=37, dim=2)
        lp = LogisticProblem(ds, batch_size=16, rng=Rng(1, 2))
        sizes = [len(lp.next_batch()) for _ in range(3)]
        assert sizes == [16, 16, 5]

    def test_fresh_permutation_each_epoch(self):
        ds = synth_dataset(seed=9, n_examples=8, dim=2)
        lp = LogisticProblem(ds, batch_size=8, rng=Rng(1, 2))
        first = lp.next_batch().copy()
        second = lp.next_batch().copy()
        assert sorted(first.tolist()) == sorted(second.tolist())
        assert not np.array_equal(first, second)  # reshuffled

    def test_batch_order_reproducible(self):
        ds = synth_dataset(seed=9, n_examples=37, dim=2)
        a = LogisticProblem(ds, batch_size=16, rng=Rng(4, 2))
        b = LogisticProblem(ds, batch_size=16, rng=Rng(4, 2))
        for _ in range(7):
            assert np.array_equal(a.next_batch(), b.next_batch())


class TestSubgradientValidity:
    """f(y) >= f(x) + <g, y - x> for every returned g."""

    def _check(self, problem, rng, pairs=1000, scale=2.0):
        worst = 0.0
        for _ in range(pairs):
            x = rng.normals(problem.dim) * scale
            y = rng.normals(problem.dim) * scale
            g = problem.subgradient(x)
            gap = problem.value(y) - problem.value(x) - float(g @ (y - x))
            worst = min(worst, gap)
        assert worst >= -1e-9, f"subgradient inequality violated by {worst}"

    def test_abs(self):
        self._check(abs_value_problem(), Rng(0, 7))

    def test_random_piecewise(self):
        rng = Rng(1, 7)
        prob = random_piecewise_max(rng, dim=6, pieces=9)
        self._check(prob, rng)

    def test_full_batch_logistic(self):
        ds = synth_dataset(seed=13, n_examples=40, dim=4)
        prob = LogisticProblem(ds, batch_size=40).problem(stochastic=False)
        self._check(prob, Rng(2, 7), pairs=300)


class TestPiecewiseConstruction:
    def test_minimizer_is_argmin(self):
        for seed in range(20):
            rng = Rng(seed, 8)
            prob = random_piecewise_max(rng, dim=5, pieces=7)
            fstar = prob.value(prob.known_minimizer)
            assert fstar == pytest.approx(prob.known_fstar, abs=1e-9)
            for _ in range(50):
                x = prob.known_minimizer + rng.normals(5)
                assert prob.value(x) >= fstar - 1e-9

    def test_all_pieces_active_at_minimizer(self):
        rng = Rng(3, 8)
        prob = random_piecewise_max(rng, dim=4, pieces=6)
        # reconstruct the scores via small probes: at x_star every piece
        # attains the max, which forces the slopes to sum against offsets
        # exactly; value(x_star) == fstar already checks the max, so probe
        # each direction to confirm multiple pieces trade activations
        x = prob.known_minimizer
        seen = set()
        for _ in range(200):
            d = rng.normals(4)
            g = prob.subgradient(x + 1e-6 * d)
            seen.add(tuple(np.round(g, 6)))
        assert len(seen) > 1

    def test_lipschitz_constants_exact(self):
        slopes = np.array([[3.0, 4.0], [-3.0, -4.0]])
        offsets = np.zeros(2)
        prob = piecewise_max_problem(slopes, offsets)
        assert prob.lipschitz == 5.0
        assert prob.lipschitz_inf == 4.0

    def test_validation(self):
        with pytest.raises(ValueError):
            piecewise_max_problem(np.zeros(3), np.zeros(3))
        with pytest.raises(ValueError):
            random_piecewise_max(Rng(0, 8), dim=0)
        with pytest.raises(ValueError):
            random_piecewise_max(Rng(0, 8), pieces=1)


class TestAbsProblem:
    def test_contract(self):
        prob = abs_value_problem()
        assert prob.dim == 1
        assert prob.value(np.array([-2.5])) == 2.5
        assert prob.subgradient(np.array([-2.5]))[0] == -1.0
        assert prob.subgradient(np.array([0.0]))[0] == 0.0
        assert prob.known_fstar == 0.0
        assert prob.lipschitz == 1.0
