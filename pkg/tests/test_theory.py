import math

import numpy as np
import pytest

import oracles
from salientpref import (
    FeatureMatrix,
    NotSingleCoordinateError,
    PreconditionError,
    SelectionSpec,
    center_columns,
    empirical_guarantee_check,
    full_selection_report,
    identifiability_check,
    ranking_recovery_report,
    realize,
    sample_complexity_report,
    single_coordinate_report,
)
from salientpref._kernels import sym_eigvals


def fm_from_columns(*cols):
    return FeatureMatrix(np.column_stack([np.asarray(c, float) for c in cols]))


def hexagon_instance():
    ang = np.arange(6) * np.pi / 3
    fm = FeatureMatrix(np.vstack([np.cos(ang), np.sin(ang)]))
    return fm, realize(SelectionSpec.full(), fm)


class TestJacobiEigensolver:
    def test_matches_quadratic_formula_2x2(self, rng):
        for _ in range(200):
            A = rng.normal(size=(2, 2))
            A = A + A.T
            want = oracles.char_poly_eigvals_2x2(A)
            np.testing.assert_allclose(sym_eigvals(A), want, atol=1e-10)

    def test_matches_char_poly_3x3(self, rng):
        for _ in range(200):
            A = rng.normal(size=(3, 3))
            A = A + A.T
            want = oracles.char_poly_eigvals_3x3(A)
            np.testing.assert_allclose(sym_eigvals(A), want, atol=1e-10)

    def test_matches_lapack(self, rng):
        for d in (1, 2, 4, 8, 16):
            A = rng.normal(size=(d, d))
            A = A @ A.T
            np.testing.assert_allclose(
                sym_eigvals(A), np.linalg.eigvalsh(A), atol=1e-10 * max(1, np.abs(A).max())
            )

    def test_small_eigenvalue_of_psd(self, rng):
        # near-singular PSD matrices: the small eigenvalue must not go negative big
        v = rng.normal(size=4)
        A = np.outer(v, v)  # rank one
        eigs = sym_eigvals(A)
        assert abs(eigs[0]) <= 1e-12 * eigs[-1]


class TestIdentifiability:
    def test_standard_basis_loses_a_direction(self):
        for d in (2, 3, 5):
            fm = FeatureMatrix(np.eye(d))
            sel = realize(SelectionSpec.full(), fm)
            res = identifiability_check(fm, sel)
            assert not res.identifiable
            assert res.rank == d - 1

    def test_spanning_triangle(self):
        fm = fm_from_columns([0.0, 0.0], [1.0, 0.0], [0.0, 1.0])
        sel = realize(SelectionSpec.full(), fm)
        assert identifiability_check(fm, sel).identifiable

    def test_starved_coordinate(self):
        # second coordinate constant: top-1 never selects it, so its weight
        # is invisible and the rank drops
        fm = fm_from_columns([0.0, 5.0], [1.0, 5.0], [3.0, 5.0])
        sel = realize(SelectionSpec.top_t(1), fm)
        res = identifiability_check(fm, sel)
        assert not res.identifiable
        assert res.rank <= 1

    def test_matches_lambda_sign(self, rng):
        # the rank test and the lambda-positivity test are the same predicate
        for _ in range(10):
            d = int(rng.integers(2, 5))
            n = int(rng.integers(d + 1, 9))
            fm = FeatureMatrix(rng.normal(size=(d, n)))
            for spec in (SelectionSpec.full(), SelectionSpec.top_t(1)):
                sel = realize(spec, fm)
                rep = sample_complexity_report(fm, sel)
                assert rep.identifiable == identifiability_check(fm, sel).identifiable


class TestSampleComplexityReport:
    def test_two_items_closed_form(self):
        a, b = 1.5, -0.5
        fm = fm_from_columns([a], [b])
        sel = realize(SelectionSpec.full(), fm)
        rep = sample_complexity_report(fm, sel)
        assert rep.lambda_ == pytest.approx((a - b) ** 2, rel=1e-12)
        assert rep.zeta == pytest.approx(0.0, abs=1e-12)
        assert rep.eta == pytest.approx(0.0, abs=1e-12)
        assert rep.beta == pytest.approx(abs(a - b), rel=1e-15)

    def test_identity_features_degenerate(self):
        fm = FeatureMatrix(np.eye(3))
        sel = realize(SelectionSpec.full(), fm)
        rep = sample_complexity_report(fm, sel)
        assert rep.lambda_ <= 1e-10
        assert not rep.identifiable
        assert math.isinf(rep.m2)

    def test_matches_bruteforce(self, rng):
        for _ in range(8):
            d = int(rng.integers(1, 5))
            n = int(rng.integers(d + 1, 10))
            fm = FeatureMatrix(rng.normal(size=(d, n)))
            for spec in (SelectionSpec.full(), SelectionSpec.top_t(1)):
                sel = realize(spec, fm)
                rep = sample_complexity_report(fm, sel)
                lam, eta, zeta, beta = oracles.certificate_quantities(sel.diff_table())
                assert rep.lambda_ == pytest.approx(lam, abs=1e-10)
                assert rep.eta == pytest.approx(eta, rel=1e-8, abs=1e-10)
                assert rep.zeta == pytest.approx(zeta, rel=1e-8, abs=1e-10)
                assert rep.beta == beta

    def test_matches_bruteforce_centered_medium(self, rng):
        fm = center_columns(FeatureMatrix(rng.normal(size=(4, 25))))
        sel = realize(SelectionSpec.full(), fm)
        rep = sample_complexity_report(fm, sel)
        lam, _, _, _ = oracles.certificate_quantities(sel.diff_table())
        assert abs(rep.lambda_ - lam) <= 1e-10

    def test_expectation_two_routes(self, rng):
        fm = FeatureMatrix(rng.normal(size=(4, 25)))
        sel = realize(SelectionSpec.full(), fm)
        X = sel.diff_table()
        incremental = X.T @ X / X.shape[0]
        explicit = oracles.expected_outer(X)
        np.testing.assert_allclose(incremental, explicit, atol=1e-12)

    def test_threshold_formulas(self):
        fm, sel = hexagon_instance()
        delta = 0.1
        rep = sample_complexity_report(fm, sel, delta=delta)
        d = 2
        log4 = math.log(4 * d / delta)
        log2 = math.log(2 * d / delta)
        m1 = (3 * rep.beta**2 * log4 * d + 4 * math.sqrt(d) * rep.beta * log4) / 6
        m2 = 8 * log2 * (6 * rep.eta + rep.lambda_ * rep.zeta) / (3 * rep.lambda_**2)
        assert rep.m1 == pytest.approx(m1, rel=1e-12)
        assert rep.m2 == pytest.approx(m2, rel=1e-12)

    def test_b_star_needs_weights(self):
        fm, sel = hexagon_instance()
        rep = sample_complexity_report(fm, sel)
        assert rep.b_star is None
        with pytest.raises(PreconditionError):
            rep.error_bound(100)

    def test_error_bound_quarter_sample_halves_exactly(self):
        fm, sel = hexagon_instance()
        rep = sample_complexity_report(fm, sel, w_star=np.array([0.4, 0.1]))
        for m in (7, 100, 12345):
            assert rep.error_bound(4 * m) == rep.error_bound(m) / 2.0

    def test_error_bound_decreasing(self):
        fm, sel = hexagon_instance()
        rep = sample_complexity_report(fm, sel, w_star=np.array([0.4, 0.1]))
        ms = np.array([10, 100, 1000, 10000])
        vals = [rep.error_bound(m) for m in ms]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_bad_delta(self):
        fm, sel = hexagon_instance()
        for delta in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(PreconditionError):
                sample_complexity_report(fm, sel, delta=delta)


class TestFullSelectionReport:
    def test_closed_form_matches_direct(self, rng):
        for _ in range(5):
            fm = center_columns(FeatureMatrix(rng.normal(size=(4, 20))))
            sel = realize(SelectionSpec.full(), fm)
            direct = sample_complexity_report(fm, sel)
            closed = full_selection_report(fm)
            assert abs(closed.lambda_closed - direct.lambda_) <= 1e-8 * max(
                1.0, direct.lambda_
            )
            assert direct.zeta <= closed.zeta_upper + 1e-8
            assert direct.eta <= closed.eta_upper + 1e-8

    def test_nu_floors_at_one(self):
        fm = fm_from_columns([0.0], [0.1], [0.2])
        rep = full_selection_report(fm)
        assert rep.nu == 1.0

    def test_requires_more_items_than_features(self, rng):
        fm = FeatureMatrix(rng.normal(size=(3, 3)))
        with pytest.raises(PreconditionError):
            full_selection_report(fm)

    def test_centering_is_internal(self, rng):
        raw = FeatureMatrix(rng.normal(size=(3, 12)) + 7.0)
        shifted = full_selection_report(raw)
        centered = full_selection_report(center_columns(raw))
        assert shifted.lambda_closed == pytest.approx(centered.lambda_closed, rel=1e-9)
        assert shifted.beta == pytest.approx(centered.beta, rel=1e-9)

    def test_error_bound_with_weights(self, rng):
        fm = center_columns(FeatureMatrix(rng.normal(size=(3, 12))))
        w = rng.normal(size=3) * 0.2
        rep = full_selection_report(fm, delta=0.1, w_star=w)
        assert rep.b_star is not None
        assert rep.error_bound(4 * 900) == rep.error_bound(900) / 2.0


class TestSingleCoordinateReport:
    def test_one_dimension_exact(self, rng):
        fm = FeatureMatrix(rng.normal(size=(1, 6)))
        sel = realize(SelectionSpec.top_t(1), fm)
        rep = single_coordinate_report(fm, sel)
        assert rep.partition_sizes == (15,)
        assert rep.lambda_lower == pytest.approx(rep.epsilon**2, rel=1e-12)

    def test_partition_example(self):
        fm = fm_from_columns([0.0, 0.0], [1.0, 0.0], [1.0, 5.0])
        sel = realize(SelectionSpec.top_t(1), fm)
        rep = single_coordinate_report(fm, sel)
        assert rep.partition_sizes == (1, 2)

    def test_lower_bound_below_direct_lambda(self, rng):
        for _ in range(8):
            fm = FeatureMatrix(rng.normal(size=(5, 20)))
            sel = realize(SelectionSpec.top_t(1), fm)
            direct = sample_complexity_report(fm, sel)
            rep = single_coordinate_report(fm, sel)
            assert direct.lambda_ >= rep.lambda_lower - 1e-10
            assert direct.zeta <= rep.zeta_upper + 1e-8
            assert direct.eta <= rep.eta_upper + 1e-8

    def test_rejects_wide_subsets(self, rng):
        fm = FeatureMatrix(rng.normal(size=(3, 5)))
        sel = realize(SelectionSpec.full(), fm)
        with pytest.raises(NotSingleCoordinateError):
            single_coordinate_report(fm, sel)

    def test_starved_coordinate_degenerates(self):
        fm = fm_from_columns([0.0, 5.0], [1.0, 5.0], [3.0, 5.0])
        sel = realize(SelectionSpec.top_t(1), fm)
        rep = single_coordinate_report(fm, sel)
        assert rep.partition_sizes == (3, 0)
        assert rep.lambda_lower == 0.0
        assert math.isinf(rep.m3)


class TestRankingRecoveryReport:
    def test_zero_weights_vacuous(self, rng):
        fm = FeatureMatrix(rng.normal(size=(2, 5)))
        sel = realize(SelectionSpec.full(), fm)
        rep = ranking_recovery_report(fm, sel, np.zeros(2), k=1)
        assert all(a == 0.0 for a in rep.alpha)
        assert math.isinf(rep.m_terms[2])

    def test_smallest_gap_at_k_one(self, rng):
        fm = FeatureMatrix(rng.normal(size=(2, 5)))
        sel = realize(SelectionSpec.full(), fm)
        w = rng.normal(size=2)
        rep = ranking_recovery_report(fm, sel, w, k=1)
        gaps = np.abs(
            (fm.matrix.T @ w)[:, None] - (fm.matrix.T @ w)[None, :]
        )[np.triu_indices(5, k=1)]
        assert rep.alpha_k == pytest.approx(gaps.min(), rel=1e-12)
        assert np.isfinite(rep.m_terms[2])

    def test_line_of_items(self):
        fm = fm_from_columns([0.0], [1.0], [3.0])
        sel = realize(SelectionSpec.full(), fm)
        rep = ranking_recovery_report(fm, sel, np.array([1.0]), k=2)
        assert rep.alpha_k == 2.0

    def test_k_out_of_range(self, rng):
        fm = FeatureMatrix(rng.normal(size=(2, 4)))
        sel = realize(SelectionSpec.full(), fm)
        with pytest.raises(PreconditionError):
            ranking_recovery_report(fm, sel, np.zeros(2), k=7)

    def test_c5_scales_third_term(self, rng):
        fm = FeatureMatrix(rng.normal(size=(2, 5)))
        sel = realize(SelectionSpec.full(), fm)
        w = rng.normal(size=2)
        t1 = ranking_recovery_report(fm, sel, w, k=1, c5=1.0).m_terms[2]
        t2 = ranking_recovery_report(fm, sel, w, k=1, c5=3.0).m_terms[2]
        assert t2 == pytest.approx(3.0 * t1, rel=1e-12)


class TestEmpiricalGuaranteeCheck:
    def test_below_threshold_skipped(self):
        fm, sel = hexagon_instance()
        chk = empirical_guarantee_check(
            fm, np.array([0.3, -0.2]), sel, m=10, delta=0.2, trials=3, seed=0
        )
        assert not chk.applicable
        assert chk.pass_rate is None
        assert "not applicable" in chk.to_dict()["status"]

    def test_valid_regime_all_pass(self):
        fm, sel = hexagon_instance()
        w_star = np.array([0.3, -0.2])
        rep = sample_complexity_report(fm, sel, w_star=w_star, delta=0.2)
        m = int(np.ceil(max(rep.m1, rep.m2)))
        chk = empirical_guarantee_check(
            fm, w_star, sel, m=m, delta=0.2, trials=5, seed=1
        )
        assert chk.applicable
        assert chk.pass_rate == 1.0

    def test_zero_truth_trivially_inside(self):
        fm, sel = hexagon_instance()
        rep = sample_complexity_report(fm, sel, w_star=np.zeros(2), delta=0.2)
        m = int(np.ceil(max(rep.m1, rep.m2)))
        chk = empirical_guarantee_check(
            fm, np.zeros(2), sel, m=m, delta=0.2, trials=3, seed=2
        )
        assert chk.pass_rate == 1.0

    def test_refuses_nonidentifiable(self):
        fm = FeatureMatrix(np.eye(3))
        sel = realize(SelectionSpec.full(), fm)
        with pytest.raises(PreconditionError):
            empirical_guarantee_check(
                fm, np.zeros(3), sel, m=1000, delta=0.2, trials=2, seed=0
            )
