import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conceptscope.errors import InputError, NumericalError, ShapeError
from conceptscope.model import (ConceptParams, Dataset, LabelParams,
                                PinnedConcept, PriorSpec, concept_forward,
                                dataset_from_csv, dataset_from_dict,
                                dataset_to_dict, flat_length, flatten_params,
                                grad_log_posterior, label_forward,
                                log_posterior, log_posterior_flat,
                                log_posterior_terms, materialize_sample,
                                sample_accuracy, unflatten_params)

# frozen from tests/oracles/logpost_reference.py (50-digit arithmetic)
LOGISTIC_1 = 0.7310585786300049
LOGISTIC_15 = 0.9999996940977731
REFERENCE_LOGPOST = -11.14045195049295679762591


class TestConceptForward:
    def test_zero_params_give_half(self):
        params = ConceptParams(np.zeros((3, 2)), np.zeros(3))
        out = concept_forward(params, np.random.default_rng(0).normal(size=(5, 2)))
        assert np.all(out == 0.5)

    def test_orthogonal_feature_ignored(self):
        params = ConceptParams(np.array([[1.0, 0.0]]), np.array([0.0]))
        out = concept_forward(params, np.array([[0.0, 5.0]]))
        assert out[0, 0] == 0.5

    def test_logistic_of_one(self):
        params = ConceptParams(np.array([[2.0]]), np.array([-1.0]))
        out = concept_forward(params, np.array([[1.0]]))
        assert out[0, 0] == pytest.approx(LOGISTIC_1, abs=1e-15)

    def test_dimension_mismatch(self):
        params = ConceptParams(np.ones((1, 3)), np.zeros(1))
        with pytest.raises(ShapeError):
            concept_forward(params, np.ones((4, 2)))

    def test_nonfinite_input(self):
        params = ConceptParams(np.ones((1, 2)), np.zeros(1))
        with pytest.raises(InputError):
            concept_forward(params, np.array([[1.0, np.nan]]))

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_outputs_strictly_inside_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        params = ConceptParams(rng.uniform(-5, 5, size=(2, 3)), rng.uniform(-5, 5, 2))
        out = concept_forward(params, rng.uniform(-3, 3, size=(6, 3)))
        assert np.all(out > 0.0) and np.all(out < 1.0)


class TestLabelForward:
    def test_zero_params_give_half(self):
        params = LabelParams(np.zeros(3), 0.0)
        out = label_forward(params, np.random.default_rng(0).uniform(size=(4, 3)))
        assert np.all(out == 0.5)

    def test_saturating_logit(self):
        params = LabelParams(np.array([10.0, 10.0, 10.0]), -15.0)
        hi = label_forward(params, np.ones((1, 3)))
        lo = label_forward(params, np.zeros((1, 3)))
        assert hi[0] == pytest.approx(LOGISTIC_15, abs=1e-15)
        assert lo[0] == pytest.approx(1.0 - LOGISTIC_15, abs=1e-15)

    def test_k_mismatch(self):
        params = LabelParams(np.ones(3), 0.0)
        with pytest.raises(ShapeError):
            label_forward(params, np.ones((4, 2)))


class TestLogPosterior:
    def test_zero_params_balanced_dataset(self, prior):
        X = np.random.default_rng(1).normal(size=(10, 2))
        data = Dataset(features=X, labels=np.array([0, 1] * 5))
        theta = ConceptParams(np.zeros((2, 2)), np.zeros(2))
        phi = LabelParams(np.zeros(2), 0.0)
        terms = log_posterior_terms(theta, phi, data, prior)
        assert terms["loglik"] == pytest.approx(10 * np.log(0.5), rel=1e-15)
        # prior at zero is just the normalization constants
        n_theta, n_phi = 6, 3
        assert terms["logprior_theta"] == pytest.approx(
            -0.5 * n_theta * np.log(2 * np.pi), rel=1e-15)
        assert terms["logprior_phi"] == pytest.approx(
            -0.5 * n_phi * np.log(2 * np.pi), rel=1e-15)

    def test_prior_std_changes_only_prior_term(self, tiny_data, tiny_params):
        theta, phi = tiny_params
        a = log_posterior_terms(theta, phi, tiny_data, PriorSpec(1.0, 1.0))
        b = log_posterior_terms(theta, phi, tiny_data, PriorSpec(2.0, 1.0))
        assert a["loglik"] == b["loglik"]
        assert a["logprior_phi"] == b["logprior_phi"]
        assert a["logprior_theta"] != b["logprior_theta"]

    def test_single_point_reference_value(self):
        data = Dataset(features=np.array([[0.5, -1.2]]), labels=np.array([1]))
        theta = ConceptParams(np.array([[0.3, -0.7], [1.1, 0.4]]),
                              np.array([0.1, -0.2]))
        phi = LabelParams(np.array([0.8, -0.5]), 0.25)
        value = log_posterior(theta, phi, data, PriorSpec(1.3, 0.9))
        assert value == pytest.approx(REFERENCE_LOGPOST, abs=1e-12)

    def test_stable_at_extreme_logits(self, prior):
        data = Dataset(features=np.array([[1.0]]), labels=np.array([1]))
        theta = ConceptParams(np.array([[10000.0]]), np.array([0.0]))
        phi = LabelParams(np.array([10000.0]), -5000.0)
        value = log_posterior(theta, phi, data, prior)
        assert np.isfinite(value)

    def test_nonfinite_parameter_reports_index(self, tiny_data, prior):
        flat = np.zeros(flat_length(2, 2))
        flat[3] = np.inf
        with pytest.raises(NumericalError) as err:
            log_posterior_flat(flat, tiny_data, 2, prior)
        assert err.value.index == 3


class TestGradient:
    def _fd(self, flat, data, K, prior, h=1e-5):
        grad = np.empty_like(flat)
        for i in range(flat.size):
            up, dn = flat.copy(), flat.copy()
            up[i] += h
            dn[i] -= h
            grad[i] = (log_posterior_flat(up, data, K, prior)[0]
                       - log_posterior_flat(dn, data, K, prior)[0]) / (2 * h)
        return grad

    def test_matches_finite_differences_100_instances(self, prior):
        rng = np.random.default_rng(42)
        for _ in range(100):
            X = rng.normal(size=(8, 2))
            y = rng.integers(0, 2, 8)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            data = Dataset(features=X, labels=y)
            flat = rng.normal(size=flat_length(2, 2))
            _, grad = log_posterior_flat(flat, data, 2, prior)
            fd = self._fd(flat, data, 2, prior)
            rel = np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-8)
            assert rel.max() < 1e-4

    def test_zero_gradient_at_optimum(self, tiny_data, prior):
        from scipy.optimize import minimize

        def neg(flat):
            lp, g = log_posterior_flat(flat, tiny_data, 2, prior)
            return -lp, -g

        res = minimize(neg, np.zeros(flat_length(2, 2)), jac=True, method="L-BFGS-B",
                       options={"gtol": 1e-9})
        _, grad = log_posterior_flat(res.x, tiny_data, 2, prior)
        assert np.linalg.norm(grad) < 1e-6

    def test_prior_part_of_gradient(self, tiny_data):
        # gradient minus the likelihood-only finite difference leaves -x/std^2
        prior = PriorSpec(1.7, 0.6)
        rng = np.random.default_rng(5)
        flat = rng.normal(size=flat_length(2, 2))
        theta, phi = unflatten_params(flat, 2, 2)
        _, grad = log_posterior_flat(flat, tiny_data, 2, prior)

        def loglik(v):
            t, p = unflatten_params(v, 2, 2)
            return log_posterior_terms(t, p, tiny_data, prior)["loglik"]

        h = 1e-6
        fd_lik = np.array([
            (loglik(flat + h * e) - loglik(flat - h * e)) / (2 * h)
            for e in np.eye(flat.size)])
        expected_prior = np.concatenate([
            -flatten_params(theta, phi)[:6] / prior.std_theta ** 2,
            -flatten_params(theta, phi)[6:] / prior.std_phi ** 2])
        assert np.allclose(grad - fd_lik, expected_prior, atol=1e-5)

    def test_structured_api_matches_flat(self, tiny_data, tiny_params, prior):
        theta, phi = tiny_params
        g1 = grad_log_posterior(theta, phi, tiny_data, prior)
        _, g2 = log_posterior_flat(flatten_params(theta, phi), tiny_data, 2, prior)
        assert np.array_equal(g1, g2)


class TestFlattenRoundTrip:
    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(1, 4))
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, seed, D, K):
        rng = np.random.default_rng(seed)
        theta = ConceptParams(rng.normal(size=(K, D)), rng.normal(size=K))
        phi = LabelParams(rng.normal(size=K), float(rng.normal()))
        t2, p2 = unflatten_params(flatten_params(theta, phi), D, K)
        assert np.array_equal(t2.weights, theta.weights)
        assert np.array_equal(t2.biases, theta.biases)
        assert np.array_equal(p2.weights, phi.weights)
        assert p2.bias == phi.bias

    def test_length_formula(self):
        assert flat_length(2, 3) == 2 * 3 + 3 + 3 + 1 == 13
        assert flat_length(2, 3, pinned=True) == 13 - 3

    def test_wrong_length_rejected(self):
        with pytest.raises(ShapeError):
            unflatten_params(np.zeros(12), 2, 3)


class TestAccuracy:
    def test_perfect_predictor(self, tiny_data):
        theta = ConceptParams(np.zeros((1, 2)), np.zeros(1))
        phi = LabelParams(np.array([0.0]), 0.0)
        sample = materialize_sample(theta, phi, tiny_data, 0, 0)
        acts = np.where(tiny_data.labels[:, None] == 1, 0.9, 0.1)
        perfect = type(sample)(concept_params=theta,
                               label_params=LabelParams(np.array([10.0]), -5.0),
                               activations=acts, accuracy=0.0, chain_id=0,
                               draw_index=0)
        assert sample_accuracy(perfect, tiny_data) == 1.0

    def test_half_probability_predicts_zero(self):
        data = Dataset(features=np.ones((4, 1)), labels=np.ones(4))
        theta = ConceptParams(np.zeros((1, 1)), np.zeros(1))
        phi = LabelParams(np.zeros(1), 0.0)
        sample = materialize_sample(theta, phi, data, 0, 0)
        assert sample.accuracy == 0.0
        assert sample_accuracy(sample, data) == 0.0

    def test_three_of_four_correct(self):
        data = Dataset(features=np.ones((4, 1)), labels=np.array([1, 1, 0, 0]))
        theta = ConceptParams(np.zeros((1, 1)), np.zeros(1))
        phi = LabelParams(np.zeros(1), 0.0)
        base = materialize_sample(theta, phi, data, 0, 0)
        acts = np.array([[0.9], [0.9], [0.9], [0.1]])
        sample = type(base)(concept_params=theta,
                            label_params=LabelParams(np.array([4.0]), -2.0),
                            activations=acts, accuracy=0.0, chain_id=0, draw_index=0)
        assert sample_accuracy(sample, data) == 0.75


class TestDatasetIO:
    def test_validation(self):
        with pytest.raises(InputError):
            Dataset(features=np.ones((2, 2)), labels=np.array([0, 2]))
        with pytest.raises(ShapeError):
            Dataset(features=np.ones((2, 2)), labels=np.array([0, 1, 1]))
        with pytest.raises(InputError):
            Dataset(features=np.array([[np.inf, 1.0]]), labels=np.array([1]))

    def test_json_round_trip(self, tiny_data):
        doc = dataset_to_dict(tiny_data)
        back = dataset_from_dict(doc)
        assert np.array_equal(back.features, tiny_data.features)
        assert np.array_equal(back.labels, tiny_data.labels)
        assert back.feature_names == tiny_data.feature_names
        assert doc["schema_version"] == 1

    def test_json_round_trip_with_catalog(self, hexagon):
        data, catalog = hexagon
        back = dataset_from_dict(dataset_to_dict(data))
        assert back.ground_truth is not None
        assert back.ground_truth.valid_combinations == catalog.valid_combinations
        assert back.content_hash() == data.content_hash()

    def test_csv_import(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,label\n0.5,1.0,1\n-0.25,2.0,0\n")
        data = dataset_from_csv(p)
        assert data.feature_names == ("a", "b")
        assert np.array_equal(data.labels, [1, 0])
        assert data.features[1, 0] == -0.25

    def test_pinned_concept_validation(self):
        with pytest.raises(InputError):
            PinnedConcept(column_index=0, values=np.array([0.5, 1.5]))
        with pytest.raises(ShapeError):
            PinnedConcept(column_index=-1, values=np.array([0.5]))
