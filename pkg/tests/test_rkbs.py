"""Discrete reproducing kernel spaces: kernels, sampling, reconstruction."""

import numpy as np
import pytest

from sipframes import (
    DiscreteRkbs,
    LinearOperator,
    SamplingPattern,
    SipSpace,
    dual_norm,
    dualize,
    eval_functional,
    kernel_G,
    kernel_k,
    reconstruct_from_samples,
    sampled_frame_certify,
    sampling_family,
    sampling_operator,
)


def _identity_space(p=1.5, n=3):
    sp = SipSpace(n, p)
    return DiscreteRkbs(tuple(range(n)), np.eye(n), sp)


def _random_space(rng, m, n, p):
    sp = SipSpace(n, p)
    V = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    return DiscreteRkbs(tuple(range(m)), V, sp)


class TestKernelStructure:
    def test_identity_features_give_delta_kernel(self):
        rk = _identity_space()
        for s in rk.points:
            for t in rk.points:
                expected = 1.0 if s == t else 0.0
                assert kernel_k(rk, s, t) == pytest.approx(expected, abs=1e-12)

    def test_kernel_dual_relation(self):
        # dualize(G(t, .)) must reproduce the evaluation functional exactly
        rng = np.random.default_rng(0)
        rk = _random_space(rng, 5, 3, 3.0)
        for t in rk.points:
            d = dualize(rk.coeff_space, kernel_G(rk, t))
            np.testing.assert_allclose(d.action, rk.features[t], rtol=1e-10)

    def test_evaluation_routes_agree(self):
        # f(t) by the feature map equals [f, G(t, .)]
        rng = np.random.default_rng(1)
        rk = _random_space(rng, 4, 3, 1.5)
        from sipframes import sip

        f = rk.coeff_space.vector(rng.standard_normal(3) + 1j * rng.standard_normal(3))
        for t in rk.points:
            direct = rk.evaluate(f, t)
            via_sip = sip(rk.coeff_space, f, kernel_G(rk, t))
            assert direct == pytest.approx(via_sip, rel=1e-10, abs=1e-12)

    def test_rejects_rank_deficient_features(self):
        sp = SipSpace(3, 2.0)
        V = np.ones((4, 3))
        with pytest.raises(ValueError):
            DiscreteRkbs((0, 1, 2, 3), V, sp)

    def test_rejects_duplicate_points(self):
        sp = SipSpace(2, 2.0)
        with pytest.raises(ValueError):
            DiscreteRkbs(("a", "a"), np.eye(2), sp)


class TestSampling:
    def test_identity_samples_are_action_coefficients(self):
        rk = _identity_space()
        fstar = rk.coeff_space.dual_vector([1.0, 2j, -3.0])
        out = sampling_operator(rk, SamplingPattern.full(rk), fstar)
        np.testing.assert_allclose(out.values, [1.0, 2j, -3.0], rtol=1e-12)

    def test_samples_are_functional_values(self):
        rng = np.random.default_rng(2)
        rk = _random_space(rng, 6, 4, 2.0)
        fstar = rk.coeff_space.dual_vector(
            rng.standard_normal(4) + 1j * rng.standard_normal(4)
        )
        Z = SamplingPattern((1, 3, 4, 5))
        out = sampling_operator(rk, Z, fstar)
        for j, i in enumerate(Z.indices):
            assert out.values[j] == pytest.approx(
                eval_functional(rk, fstar, rk.points[i]), rel=1e-12
            )

    def test_empty_pattern_rejected(self):
        with pytest.raises(ValueError):
            SamplingPattern(())


class TestReconstruction:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_full_sampling_reconstructs(self, p):
        rng = np.random.default_rng(3)
        rk = _random_space(rng, 6, 4, p)
        sp = rk.coeff_space
        Z = SamplingPattern.full(rk)
        K = LinearOperator.identity(sp)
        cert = sampled_frame_certify(rk, Z, K, seed=0, restarts=8)
        assert cert.verdict == "K-frame"
        fstar = sp.dual_vector(rng.standard_normal(4) + 1j * rng.standard_normal(4))
        recon = reconstruct_from_samples(rk, Z, K, sampling_operator(rk, Z, fstar))
        resid = dual_norm(sp, recon.action - fstar.action)
        assert resid <= 1e-7 * dual_norm(sp, fstar.action)

    def test_projector_k_subsampling(self):
        # sample only some points; with K* the projector onto the span of the
        # retained analysis rows, K* f* is still exactly recoverable
        rng = np.random.default_rng(4)
        rk = _random_space(rng, 8, 4, 1.5)
        sp = rk.coeff_space
        Z = SamplingPattern((0, 2, 5))
        G = sampling_family(rk, Z).analysis_matrix
        proj = np.linalg.pinv(G) @ G
        K = LinearOperator.from_adjoint_entries(proj, sp)
        cert = sampled_frame_certify(rk, Z, K, seed=0, restarts=8)
        assert cert.verdict == "K-frame"
        fstar = sp.dual_vector(rng.standard_normal(4) + 1j * rng.standard_normal(4))
        recon = reconstruct_from_samples(rk, Z, K, sampling_operator(rk, Z, fstar))
        target = K.apply_adjoint(fstar)
        resid = dual_norm(sp, recon.action - target.action)
        assert resid <= 1e-7 * max(dual_norm(sp, target.action), 1e-30)

    def test_rank_critical_drop_refutes(self):
        # square invertible features: the full pattern certifies, any deletion
        # leaves a nonzero null direction and flips the verdict
        rng = np.random.default_rng(5)
        n = 3
        rk = _random_space(rng, n, n, 2.0)
        sp = rk.coeff_space
        K = LinearOperator.identity(sp)
        full = sampled_frame_certify(rk, SamplingPattern.full(rk), K, seed=0, restarts=8)
        assert full.verdict == "K-frame"
        for drop in range(n):
            kept = tuple(i for i in range(n) if i != drop)
            cert = sampled_frame_certify(rk, SamplingPattern(kept), K, seed=0, restarts=4)
            assert cert.verdict == "refuted"
            assert cert.A_est == 0.0

    def test_corrupted_samples_fail_to_reconstruct(self):
        # negative control: perturbing one sample must show up in the residual
        rng = np.random.default_rng(6)
        rk = _random_space(rng, 5, 3, 2.0)
        sp = rk.coeff_space
        Z = SamplingPattern.full(rk)
        K = LinearOperator.identity(sp)
        fstar = sp.dual_vector(rng.standard_normal(3) + 1j * rng.standard_normal(3))
        vals = sampling_operator(rk, Z, fstar).values.copy()
        vals[2] += 0.1
        recon = reconstruct_from_samples(rk, Z, K, vals)
        resid = dual_norm(sp, recon.action - fstar.action)
        assert resid > 1e-4
