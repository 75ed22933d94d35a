import numpy as np
import pytest

from conftest import make_instance
from salientpref import (
    ComparisonDataset,
    FeatureMatrix,
    FitConfig,
    NumericalFailureError,
    PreconditionError,
    Provenance,
    SelectionSpec,
    fit,
    max_abs_margin,
    nll,
    realize,
    sample_comparisons,
    within_margin_band,
)


def fm_from_columns(*cols):
    return FeatureMatrix(np.column_stack([np.asarray(c, float) for c in cols]))


class TestFit:
    def test_balanced_pair_stays_at_zero(self):
        fm = fm_from_columns([1.0, -2.0], [0.0, 0.0])
        sel = realize(SelectionSpec.full(), fm)
        data = ComparisonDataset.from_records(
            [(0, 1, 1), (0, 1, 0)] * 4, 2, Provenance.synthetic(0)
        )
        res = fit(fm, sel, data)
        assert res.converged
        np.testing.assert_array_equal(res.w_hat, np.zeros(2))
        assert res.final_grad_norm <= 1e-8

    def test_huge_ridge_crushes_weights(self, rng):
        fm, sel = make_instance(rng, 3, 6, spec=SelectionSpec.full())
        data = sample_comparisons(fm, rng.normal(size=3), sel, 200, seed=2)
        res = fit(fm, sel, data, FitConfig(mu=1e8))
        assert res.converged
        assert np.linalg.norm(res.w_hat) <= 1e-4

    def test_deterministic(self, rng):
        fm, sel = make_instance(rng, 4, 8, spec=SelectionSpec.top_t(2))
        data = sample_comparisons(fm, rng.normal(size=4), sel, 300, seed=5)
        a = fit(fm, sel, data)
        b = fit(fm, sel, data)
        np.testing.assert_array_equal(a.w_hat, b.w_hat)
        assert a.iterations == b.iterations

    def test_objective_monotone(self, rng):
        fm, sel = make_instance(rng, 5, 10, spec=SelectionSpec.full())
        data = sample_comparisons(fm, rng.normal(size=5) * 2, sel, 400, seed=6)
        trace: list = []
        fit(fm, sel, data, trace=trace)
        trace = np.array(trace)
        # nonincreasing up to the line search's machine-precision slack
        assert np.all(np.diff(trace) <= 1e-12 * (1.0 + np.abs(trace[:-1])))

    def test_beats_reference_vectors(self, rng):
        for _ in range(5):
            d = int(rng.integers(1, 6))
            fm, sel = make_instance(rng, d, int(rng.integers(3, 9)))
            w_star = rng.normal(size=d)
            data = sample_comparisons(fm, w_star, sel, 500, seed=11)
            res = fit(fm, sel, data)
            best = nll(fm, res.w_hat, sel, data)
            assert best <= nll(fm, w_star, sel, data) + 1e-9
            assert best <= nll(fm, np.zeros(d), sel, data) + 1e-9

    def test_given_init_same_optimum(self, rng):
        fm, sel = make_instance(rng, 3, 7, spec=SelectionSpec.full())
        data = sample_comparisons(fm, rng.normal(size=3), sel, 400, seed=3)
        a = fit(fm, sel, data)
        b = fit(fm, sel, data, FitConfig(init=rng.normal(size=3)))
        assert a.converged and b.converged
        np.testing.assert_allclose(a.w_hat, b.w_hat, atol=1e-7)

    def test_nonconvergence_reported_not_raised(self, rng):
        fm, sel = make_instance(rng, 3, 7, spec=SelectionSpec.full())
        data = sample_comparisons(fm, rng.normal(size=3) * 3, sel, 400, seed=4)
        res = fit(fm, sel, data, FitConfig(max_iters=1))
        assert not res.converged
        assert res.iterations == 1

    def test_nan_init_raises(self, rng):
        fm, sel = make_instance(rng, 2, 4, spec=SelectionSpec.full())
        data = sample_comparisons(fm, np.zeros(2), sel, 20, seed=1)
        with pytest.raises(NumericalFailureError):
            fit(fm, sel, data, FitConfig(init=np.array([1e308, 1e308])))

    def test_empty_dataset_rejected(self, rng):
        fm, sel = make_instance(rng, 2, 4, spec=SelectionSpec.full())
        empty = ComparisonDataset.from_records([], 4, Provenance.synthetic(0))
        with pytest.raises(PreconditionError):
            fit(fm, sel, empty)

    def test_bad_config_rejected(self):
        with pytest.raises(PreconditionError):
            FitConfig(mu=-1.0)
        with pytest.raises(PreconditionError):
            FitConfig(tol_grad=0.0)
        with pytest.raises(PreconditionError):
            FitConfig(max_iters=0)

    def test_synthetic_recovery(self, rng):
        # d=5, n=40, full selection, m=50k: the estimate lands within 0.1 of
        # the truth in at least 18 of 20 seeded trials
        hits = 0
        master = np.random.default_rng(77)
        for trial in range(20):
            gen = np.random.default_rng(master.integers(1 << 63))
            fm = FeatureMatrix(gen.normal(0.0, 1.0 / np.sqrt(5), size=(5, 40)))
            w_star = gen.normal(0.0, 1.0 / np.sqrt(5), size=5)
            sel = realize(SelectionSpec.full(), fm)
            data = sample_comparisons(fm, w_star, sel, 50_000, seed=trial)
            res = fit(fm, sel, data)
            assert res.converged
            if np.linalg.norm(res.w_hat - w_star) <= 0.1:
                hits += 1
        assert hits >= 18

    def test_gradient_descent_path_for_wide_problems(self, rng):
        # d > 64 bypasses Newton; descent still makes clear progress
        d, n = 70, 80
        fm = FeatureMatrix(rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, n)))
        sel = realize(SelectionSpec.full(), fm)
        w_star = rng.normal(0.0, 1.0 / np.sqrt(d), size=d)
        data = sample_comparisons(fm, w_star, sel, 2000, seed=9)
        trace: list = []
        res = fit(fm, sel, data, FitConfig(tol_grad=1e-3, max_iters=4000), trace=trace)
        assert trace[-1] < trace[0]
        assert res.converged
        assert res.final_grad_norm <= 1e-3


class TestMarginBand:
    def test_zero_weights_always_inside(self, rng):
        fm, sel = make_instance(rng, 3, 5)
        assert within_margin_band(fm, sel, np.zeros(3), 0.0)

    def test_own_margin_is_inside(self, rng):
        fm, sel = make_instance(rng, 4, 6)
        w = rng.normal(size=4)
        b = max_abs_margin(fm, sel, w)
        assert within_margin_band(fm, sel, w, b)

    def test_tight_band_excludes(self):
        fm = fm_from_columns([0.0], [1.0])
        sel = realize(SelectionSpec.full(), fm)
        assert not within_margin_band(fm, sel, np.array([2.0]), 1.0)

    def test_negative_band_rejected(self, rng):
        fm, sel = make_instance(rng, 2, 4)
        with pytest.raises(PreconditionError):
            within_margin_band(fm, sel, np.zeros(2), -1.0)
