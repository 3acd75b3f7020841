import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kentmix.errors import DomainError, FormatError
from kentmix.model import (
    KentParams,
    MixtureModel,
    approx_log_likelihood,
    as_points,
    log_density_approx,
    log_density_exact,
    model_from_json,
    model_to_json,
    responsibilities,
)
from kentmix.special import log_kent_normalizer_exact

from conftest import random_frame, random_model, random_points
from oracles import approx_loglik_mp, sphere_grid

EYE = np.eye(3)


class TestTypes:
    def test_points_single_vector(self):
        assert as_points([0.0, 0.0, 1.0]).shape == (1, 3)

    @pytest.mark.parametrize("bad", [[1.0, 0.0], [[2.0, 0.0, 0.0]], [[np.nan, 0.0, 1.0]]])
    def test_points_rejected(self, bad):
        with pytest.raises(DomainError):
            as_points(bad)

    def test_frame_must_be_orthonormal(self):
        with pytest.raises(DomainError):
            KentParams(0.0, 1.0, 2.0 * EYE)

    def test_reflection_allowed(self):
        p = KentParams(0.0, 1.0, np.diag([1.0, 1.0, -1.0]))
        assert np.linalg.det(p.frame) == pytest.approx(-1.0)

    @pytest.mark.parametrize("beta,kappa", [(1.0, 2.0), (-0.5, 2.0), (0.0, 0.0), (0.0, math.inf)])
    def test_shape_constraint(self, beta, kappa):
        with pytest.raises(DomainError):
            KentParams(beta, kappa, EYE)

    def test_params_immutable(self):
        p = KentParams(0.0, 1.0, EYE)
        with pytest.raises(ValueError):
            p.frame[0, 0] = 2.0

    def test_weights_must_sum_to_one(self):
        comps = [KentParams(0.0, 1.0, EYE)] * 2
        with pytest.raises(DomainError):
            MixtureModel([0.5, 0.6], comps)
        with pytest.raises(DomainError):
            MixtureModel([1.5, -0.5], comps)
        with pytest.raises(DomainError):
            MixtureModel([1.0], comps)

    def test_permuted(self, rng):
        model = random_model(rng, 3)
        back = model.permuted([2, 0, 1]).permuted([1, 2, 0])
        assert back == model


class TestDensities:
    def test_exact_vmf_at_mean(self):
        p = KentParams(0.0, 2.0, EYE)
        expected = 2.0 - math.log(4 * math.pi * math.sinh(2.0) / 2.0)
        assert log_density_exact(EYE[:, 0], p) == pytest.approx(expected, rel=1e-12)
        assert log_density_exact(EYE[:, 0], p) == pytest.approx(-1.126244, abs=1e-6)

    def test_exact_orthogonal_point(self):
        p = KentParams(0.0, 7.0, EYE)
        assert log_density_exact(EYE[:, 1], p) == pytest.approx(-log_kent_normalizer_exact(0.0, 7.0), rel=1e-14)

    def test_approx_vmf_at_mean(self):
        p = KentParams(0.0, 10.0, EYE)
        assert log_density_approx(EYE[:, 0], p) == pytest.approx(math.log(10 / (2 * math.pi)), rel=1e-14)

    def test_approx_on_major_axis(self):
        p = KentParams(1.0, 10.0, EYE)
        expected = -10.0 + 1.0 + 0.5 * math.log(96.0) - math.log(2 * math.pi)
        assert log_density_approx(EYE[:, 1], p) == pytest.approx(expected, rel=1e-14)

    def test_approx_large_kappa_finite(self):
        p = KentParams(300.0, 5000.0, EYE)
        assert math.isfinite(log_density_approx(-EYE[:, 0], p))
        assert math.isfinite(log_density_exact(-EYE[:, 0], p))

    def test_vector_output(self, rng):
        p = KentParams(1.0, 5.0, random_frame(rng))
        pts = random_points(rng, 7)
        out = log_density_approx(pts, p)
        assert out.shape == (7,)
        assert out[3] == log_density_approx(pts[3], p)

    @pytest.mark.parametrize("beta,kappa", [(0.0, 1.0), (1.0, 5.0), (4.0, 10.0), (10.0, 30.0)])
    def test_exact_density_integrates_to_one(self, beta, kappa, rng):
        pts, w = sphere_grid()
        p = KentParams(beta, kappa, random_frame(rng))
        total = float(np.sum(w * np.exp(log_density_exact(pts, p))))
        assert total == pytest.approx(1.0, abs=1e-5)

    def test_negating_minor_axes_is_exact(self, rng):
        F = random_frame(rng)
        G = F * np.array([1.0, -1.0, -1.0])
        pts = random_points(rng, 50)
        a = log_density_approx(pts, KentParams(2.0, 9.0, F))
        b = log_density_approx(pts, KentParams(2.0, 9.0, G))
        assert np.array_equal(a, b)


class TestLikelihood:
    def test_single_component(self, rng):
        p = KentParams(1.5, 8.0, random_frame(rng))
        pts = random_points(rng, 30)
        model = MixtureModel([1.0], [p])
        assert approx_log_likelihood(pts, model) == pytest.approx(math.fsum(log_density_approx(pts, p)), rel=1e-13)

    def test_duplicated_data_doubles_exactly(self, rng):
        model = random_model(rng, 3)
        pts = random_points(rng, 101)
        single = approx_log_likelihood(pts, model)
        assert approx_log_likelihood(np.vstack([pts, pts]), model) == 2.0 * single

    def test_extended_precision_oracle(self):
        pts = np.array([[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [-0.48, 0.64, 0.6]])
        F2 = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        model = MixtureModel([0.3, 0.7], [KentParams(2.0, 12.0, EYE), KentParams(0.5, 3.0, F2)])
        expected = approx_loglik_mp(pts, model.weights, model.betas, model.kappas, model.frames)
        assert approx_log_likelihood(pts, model) == pytest.approx(expected, rel=1e-14)

    def test_extended_precision_far_tail(self):
        # Points far from every mean exercise the log-sum-exp path.
        pts = -np.eye(3)
        model = MixtureModel([0.5, 0.5], [KentParams(100.0, 600.0, EYE), KentParams(0.0, 650.0, EYE[:, [1, 2, 0]])])
        expected = approx_loglik_mp(pts, model.weights, model.betas, model.kappas, model.frames)
        assert approx_log_likelihood(pts, model) == pytest.approx(expected, rel=1e-13)

    def test_permutation_invariant(self, rng):
        model = random_model(rng, 4)
        pts = random_points(rng, 200)
        a = approx_log_likelihood(pts, model)
        b = approx_log_likelihood(pts, model.permuted([3, 1, 0, 2]))
        assert a == pytest.approx(b, rel=1e-14)

    def test_empty_data(self, rng):
        with pytest.raises(DomainError):
            approx_log_likelihood(np.empty((0, 3)), random_model(rng, 2))


class TestResponsibilities:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), g=st.integers(1, 6))
    def test_rows_sum_to_one(self, seed, g):
        rng = np.random.default_rng(seed)
        model = random_model(rng, g, kappa_range=(1.0, 700.0))
        resp = responsibilities(random_points(rng, 40), model)
        assert np.all(np.abs(resp.sum(axis=1) - 1.0) <= 1e-12)

    def test_identical_components(self, rng):
        p = KentParams(1.0, 5.0, random_frame(rng))
        resp = responsibilities(random_points(rng, 10), MixtureModel([0.25] * 4, [p] * 4))
        assert np.allclose(resp, 0.25, atol=1e-15)

    def test_degenerate_weight(self, rng):
        model = random_model(rng, 3)
        model = MixtureModel([1.0, 0.0, 0.0], model.components)
        resp = responsibilities(random_points(rng, 10), model)
        assert np.array_equal(resp[:, 0], np.ones(10))

    def test_equal_densities_give_weights(self):
        p1 = KentParams(0.0, 5.0, EYE)
        p2 = KentParams(0.0, 5.0, EYE[:, [1, 2, 0]])
        x = np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0)
        resp = responsibilities(x, MixtureModel([0.3, 0.7], [p1, p2]))
        assert resp[0] == pytest.approx([0.3, 0.7], abs=1e-14)


class TestJson:
    def test_round_trip(self, rng):
        model = random_model(rng, 3)
        text = model_to_json(model)
        assert model_from_json(text) == model
        assert model_to_json(model_from_json(text)) == text

    def test_schema(self, rng):
        obj = json.loads(model_to_json(random_model(rng, 2)))
        assert list(obj) == ["g", "weights", "components"]
        assert list(obj["components"][0]) == ["beta", "kappa", "frame"]
        assert np.array(obj["components"][0]["frame"]).shape == (3, 3)

    @pytest.mark.parametrize(
        "text",
        [
            "not json",
            '{"g": 1}',
            '{"g": 2, "weights": [1.0], "components": []}',
            '{"g": 1, "weights": [1.0], "components": [{"beta": 3, "kappa": 5, "frame": [[1,0,0],[0,1,0],[0,0,1]]}]}',
            '{"g": 1, "weights": [0.9], "components": [{"beta": 0, "kappa": 5, "frame": [[1,0,0],[0,1,0],[0,0,1]]}]}',
            '{"g": 1, "weights": [1.0], "components": [{"beta": 0, "kappa": 5, "frame": [[1,0,0],[1,0,0],[0,0,1]]}]}',
            '{"g": true, "weights": [1.0], "components": []}',
        ],
    )
    def test_rejects_invalid(self, text):
        with pytest.raises(FormatError):
            model_from_json(text)
