import numpy as np
import pytest

from grainsort import ConvergenceError, DegenerateTrainingError, DimensionMismatchError
from grainsort import svm
from oracles import qp_decision_values, qp_dual_oracle


def _blobs(seed=0, n_per=30, centres=((0, 0), (5, 0), (0, 5)), sigma=0.5):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c, sigma, (n_per, 2)) for c in centres])
    y = np.repeat(np.arange(len(centres)), n_per)
    return X, y


def _kkt_violation(model, X, y, kernel):
    """Independent KKT residual: rebuild the full dual vector from the model."""
    n = y.size
    alpha = np.zeros(n)
    alpha[model.sv_indices] = np.abs(model.dual_coef)
    gram = svm.kernel_matrix(kernel, X)
    f_vals = gram @ (alpha * y)
    errors = f_vals - y
    eps = 1e-9
    up = ((y > 0) & (alpha < kernel.c - eps)) | ((y < 0) & (alpha > eps))
    low = ((y < 0) & (alpha < kernel.c - eps)) | ((y > 0) & (alpha > eps))
    if not up.any() or not low.any():
        return 0.0
    return float(errors[low].max() - errors[up].min())


class TestStandardize:
    def test_two_row_hand_case(self):
        scaler = svm.standardize_fit(np.array([[0.0], [2.0]]))
        assert scaler.mean[0] == 1.0
        assert scaler.std[0] == 1.0  # population std

    def test_constant_column_floored(self):
        X = np.array([[3.0, 1.0], [3.0, 2.0], [3.0, 3.0]])
        scaler = svm.standardize_fit(X)
        assert scaler.std[0] == 1e-12
        transformed = scaler.transform(X)
        assert np.all(transformed[:, 0] == 0.0)

    def test_transformed_training_matrix_centred(self):
        rng = np.random.default_rng(0)
        X = rng.normal(5.0, 3.0, (40, 6))
        transformed = svm.standardize_fit(X).transform(X)
        assert np.max(np.abs(transformed.mean(axis=0))) < 1e-9

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            svm.standardize_fit(np.ones((1, 3)))


class TestBinaryTraining:
    def test_symmetric_pair(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        model = svm.train_binary(X, y, svm.KernelSpec(kind="linear", c=1.0), debug=True)
        assert svm.decision(model, np.array([0.0])) == pytest.approx(0.0, abs=1e-9)
        assert np.sign(svm.decision(model, np.array([0.5]))) == 1.0

    def test_xor_with_rbf(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([-1.0, 1.0, 1.0, -1.0])
        model = svm.train_binary(
            X, y, svm.KernelSpec(kind="rbf", c=100.0, gamma=1.0), debug=True
        )
        scores = svm.decision(model, X)
        assert np.all(np.sign(scores) == y)

    def test_matches_qp_oracle_on_random_problems(self):
        rng = np.random.default_rng(42)
        for trial in range(15):
            n = int(rng.integers(4, 21))
            X = rng.standard_normal((n, 3))
            y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            if np.unique(y).size < 2:
                y[0] = -y[0]
            kind = "rbf" if trial % 2 == 0 else "linear"
            gamma = 0.7 if kind == "rbf" else None
            kernel = svm.KernelSpec(kind=kind, c=5.0, gamma=gamma)
            model = svm.train_binary(X, y, kernel, tol=1e-4, max_passes=400, debug=True)
            gram = svm.kernel_matrix(kernel, X)
            alpha_ref, best = qp_dual_oracle(gram, y, 5.0, iters=30000)
            assert abs(model.diagnostics.dual_objective - best) <= 1e-3, trial
            scores = svm.decision(model, X)
            ref_scores = qp_decision_values(alpha_ref, gram, y, 5.0)
            confident = (np.abs(scores) > 1e-3) & (np.abs(ref_scores) > 1e-3)
            assert np.all(np.sign(scores[confident]) == np.sign(ref_scores[confident])), trial

    def test_kkt_residual_and_dual_feasibility(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            n = int(rng.integers(10, 40))
            X = rng.standard_normal((n, 4))
            y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            if np.unique(y).size < 2:
                y[0] = -y[0]
            kernel = svm.KernelSpec(kind="rbf", c=3.0, gamma=0.5)
            model = svm.train_binary(X, y, kernel, tol=1e-3, max_passes=400)
            assert model.diagnostics.final_violation <= 1e-3
            assert _kkt_violation(model, X, y, kernel) <= 1e-3 + 1e-9
            alphas = np.abs(model.dual_coef)
            assert np.all(alphas >= 0) and np.all(alphas <= 3.0 + 1e-12)
            assert abs(model.dual_coef.sum()) <= 1e-6

    def test_dual_objective_monotone_in_debug_mode(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((30, 3))
        y = np.where(rng.random(30) < 0.5, -1.0, 1.0)
        y[0] = -y[1]
        model = svm.train_binary(
            X, y, svm.KernelSpec(kind="rbf", c=2.0, gamma=0.3), debug=True
        )
        trace = model.diagnostics.objective_trace
        assert len(trace) == model.diagnostics.n_updates
        assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))

    def test_single_class_rejected(self):
        X = np.ones((4, 2))
        with pytest.raises(DegenerateTrainingError):
            svm.train_binary(X, np.ones(4), svm.KernelSpec(kind="linear", c=1.0))

    def test_convergence_error_carries_best_iterate(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((60, 2))
        y = np.where(rng.random(60) < 0.5, -1.0, 1.0)  # unlearnable labels
        y[0] = -y[1]
        with pytest.raises(ConvergenceError) as excinfo:
            svm.train_binary(
                X, y, svm.KernelSpec(kind="rbf", c=100.0, gamma=5.0), max_passes=1
            )
        partial = excinfo.value.model
        assert partial is not None
        scores = svm.decision(partial, X)
        assert np.all(np.isfinite(scores))


class TestDecision:
    def test_dimension_mismatch(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        model = svm.train_binary(X, y, svm.KernelSpec(kind="linear", c=1.0))
        with pytest.raises(DimensionMismatchError):
            svm.decision(model, np.zeros(3))

    def test_smoothness_under_perturbation(self):
        X, y = _blobs(3, n_per=20, centres=((0, 0), (3, 3)))
        y = np.where(y == 0, -1.0, 1.0)
        kernel = svm.KernelSpec(kind="rbf", c=10.0, gamma=0.5)
        model = svm.train_binary(X, y, kernel, max_passes=200)
        # rbf gradient bound: sum|coef| * sqrt(2 gamma / e)
        lipschitz = np.sum(np.abs(model.dual_coef)) * np.sqrt(2 * 0.5 / np.e)
        x0 = np.array([1.5, 1.5])
        base = svm.decision(model, x0)
        rng = np.random.default_rng(4)
        for _ in range(20):
            delta = rng.standard_normal(2) * 1e-4
            moved = svm.decision(model, x0 + delta)
            assert abs(moved - base) <= lipschitz * np.linalg.norm(delta) + 1e-12

    def test_correct_signs_on_separable_training_set(self):
        X, y = _blobs(5, n_per=25, centres=((0, 0), (4, 4)))
        y = np.where(y == 0, -1.0, 1.0)
        model = svm.train_binary(X, y, svm.KernelSpec(kind="rbf", c=10.0, gamma=0.5))
        assert np.all(np.sign(svm.decision(model, X)) == y)


class TestMulticlass:
    def test_three_blob_sanity(self):
        X, y = _blobs(0)
        model = svm.train_multiclass(X, y, svm.KernelSpec(kind="rbf", c=10.0))
        assert np.array_equal(svm.predict(model, X), y)
        assert len(model.pairwise) == 3

    def test_blob_centres_classified(self):
        X, y = _blobs(1)
        model = svm.train_multiclass(X, y, svm.KernelSpec(kind="rbf", c=10.0))
        assert svm.predict(model, np.array([0.0, 0.0])) == 0
        assert svm.predict(model, np.array([5.0, 0.0])) == 1
        assert svm.predict(model, np.array([0.0, 5.0])) == 2

    def test_row_permutation_invariant_predictions(self):
        X, y = _blobs(2)
        model_a = svm.train_multiclass(X, y, svm.KernelSpec(kind="rbf", c=10.0))
        rng = np.random.default_rng(0)
        perm = rng.permutation(len(y))
        model_b = svm.train_multiclass(X[perm], y[perm], svm.KernelSpec(kind="rbf", c=10.0))
        assert np.array_equal(svm.predict(model_a, X), svm.predict(model_b, X))

    def test_missing_class_rejected(self):
        X, y = _blobs(3)
        mask = y != 2
        with pytest.raises(DegenerateTrainingError):
            svm.train_multiclass(X[mask], y[mask], svm.KernelSpec(kind="rbf", c=10.0))

    def test_vote_tally_matches_reference_count(self):
        X, y = _blobs(4)
        model = svm.train_multiclass(X, y, svm.KernelSpec(kind="rbf", c=10.0))
        rows = model.scaler.transform(X)
        predictions = svm.predict(model, X)
        for r in range(0, len(y), 7):
            votes = np.zeros(3, dtype=int)
            for (a, b), machine in model.pairwise.items():
                score = svm.decision(machine, rows[r])
                votes[a if score >= 0 else b] += 1
            assert votes.sum() == 3
            if votes.max() > 1:  # unambiguous majority
                assert predictions[r] == np.argmax(votes)

    def test_pure_function_on_duplicates(self):
        X, y = _blobs(5)
        model = svm.train_multiclass(X, y, svm.KernelSpec(kind="rbf", c=10.0))
        point = X[3]
        assert svm.predict(model, point) == svm.predict(model, point.copy())

    def test_unit_rescaling_with_refit_scaler_is_neutral(self):
        X, y = _blobs(6)
        scale = np.array([100.0, 0.01])
        model_a = svm.train_multiclass(X, y, svm.KernelSpec(kind="rbf", c=10.0))
        model_b = svm.train_multiclass(X * scale, y, svm.KernelSpec(kind="rbf", c=10.0))
        grid = X[::5]
        assert np.array_equal(
            svm.predict(model_a, grid), svm.predict(model_b, grid * scale)
        )


class TestPersistence:
    def test_round_trip_predictions_bit_identical(self, tmp_path):
        X, y = _blobs(7)
        model = svm.train_multiclass(X, y, svm.KernelSpec(kind="rbf", c=10.0))
        probe = np.vstack([X[::3], X[::3] + 0.25])
        before = svm.predict(model, probe)
        path = tmp_path / "model.json"
        svm.save_model(path, model, extra={"method_tag": "FOS"})
        restored, doc = svm.load_model(path)
        after = svm.predict(restored, probe)
        assert np.array_equal(before, after)
        assert doc["method_tag"] == "FOS"
        scores_before = svm.decision(model.pairwise[(0, 1)], model.scaler.transform(probe))
        scores_after = svm.decision(restored.pairwise[(0, 1)], restored.scaler.transform(probe))
        assert np.array_equal(scores_before, scores_after)
