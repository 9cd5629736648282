"""Interconnection-algebra tests: composition theorems, stability checks,
passivation effort."""

import numpy as np
import pytest

from passmat.interconnect import (
    default_feedback_shifts,
    feedback_cert,
    feedback_proof_blocks,
    l2_gain_bound,
    l2_stability_check,
    lyapunov_stability_check,
    parallel_cert,
    passivation_check,
    passivation_effort,
)
from passmat.lti import compose_feedback, compose_parallel
from passmat.passivity import (
    CertKind,
    PassivityCertificate,
    Provenance,
    static_ifpm,
    verify_certificate,
)

from conftest import random_isp, random_osp, random_spd, random_sym

XI_TRACE = np.array([[0.0373, 0.0618], [0.0618, -0.0920]])
XI_MINEIG = np.array([[-0.06127, 0.0176], [0.0176, -0.1029]])
GAIN_COUPLED = np.array([[0.987, 0.643], [0.643, 1.013]])


def make_cert(phi=None, xi=None, m=2):
    phi = np.zeros((m, m)) if phi is None else np.asarray(phi, float)
    xi = np.zeros((m, m)) if xi is None else np.asarray(xi, float)
    return PassivityCertificate(
        phi=phi, xi=xi, kind=CertKind.IFOFP, provenance=Provenance.DECLARED
    )


class TestParallel:
    def test_harmonic_mean_identity(self):
        out = parallel_cert(make_cert(xi=np.eye(2)), make_cert(xi=np.eye(2)))
        np.testing.assert_allclose(out.xi, 0.5 * np.eye(2))

    def test_phi_adds(self):
        out = parallel_cert(
            make_cert(phi=np.diag([1.0, 0.0])), make_cert(phi=np.diag([0.0, 1.0]))
        )
        np.testing.assert_allclose(out.phi, np.eye(2))
        np.testing.assert_allclose(out.xi, np.zeros((2, 2)))

    def test_rejects_indefinite_xi(self):
        with pytest.raises(ValueError):
            parallel_cert(
                make_cert(xi=np.diag([1.0, -0.5])), make_cert(xi=np.eye(2))
            )

    def test_random_osp_pair_verifies(self):
        rng = np.random.RandomState(0)
        for _ in range(5):
            sys1, c1 = random_osp(rng, m=2)
            sys2, c2 = random_osp(rng, m=2)
            composed = parallel_cert(c1, c2)
            par = compose_parallel(sys1, sys2)
            report = verify_certificate(par, composed)
            assert report.qsr_margin >= -1e-5


class TestFeedback:
    def test_zero_shift_keeps_xi(self):
        c1 = make_cert(phi=np.eye(2), xi=0.3 * np.eye(2))
        c2 = make_cert(phi=np.eye(2), xi=0.2 * np.eye(2))
        zero = np.zeros((2, 2))
        out = feedback_cert(c1, c2, m1=zero, m2=zero)
        np.testing.assert_allclose(out.phi, np.zeros((4, 4)), atol=1e-14)
        np.testing.assert_allclose(out.xi[:2, :2], 0.3 * np.eye(2))
        np.testing.assert_allclose(out.xi[2:, 2:], 0.2 * np.eye(2))

    def test_scalar_correction(self):
        c1 = make_cert(phi=2.0 * np.eye(2))
        c2 = make_cert(phi=2.0 * np.eye(2))
        out = feedback_cert(c1, c2, m1=np.eye(2), m2=np.eye(2))
        # N_i = 0 - 2 (2 - 1)^-1 1 = -2
        np.testing.assert_allclose(out.xi, -2.0 * np.eye(4), atol=1e-14)

    def test_strictness_required(self):
        c1 = make_cert(phi=np.eye(2))
        with pytest.raises(ValueError):
            feedback_cert(c1, c1, m1=np.eye(2), m2=np.zeros((2, 2)))

    def test_default_shifts(self):
        c1 = make_cert(phi=np.eye(2))
        c0 = make_cert()
        m1, m2 = default_feedback_shifts(c1, c0)
        assert np.linalg.eigvalsh(c1.phi - m1)[0] > 0
        assert np.linalg.eigvalsh(c0.phi - m2)[0] > 0

    def test_proof_blocks_psd(self):
        rng = np.random.RandomState(1)
        for _ in range(20):
            m = rng.randint(1, 4)
            c1 = make_cert(phi=random_sym(rng, m), xi=random_sym(rng, m), m=m)
            c2 = make_cert(phi=random_sym(rng, m), xi=random_sym(rng, m), m=m)
            m1, m2 = default_feedback_shifts(c1, c2)
            out = feedback_cert(c1, c2, m1=m1, m2=m2)
            n1 = out.xi[:m, :m]
            n2 = out.xi[m:, m:]
            e_blk, f_blk = feedback_proof_blocks(c1, c2, m1, m2, n1, n2)
            assert np.linalg.eigvalsh(e_blk)[0] >= -1e-9
            assert np.linalg.eigvalsh(f_blk)[0] >= -1e-9

    def test_random_isp_pair_verifies(self):
        rng = np.random.RandomState(2)
        for _ in range(5):
            sys1 = random_isp(rng, m=2)
            sys2 = random_isp(rng, m=2)
            c1 = static_like_cert(sys1)
            c2 = static_like_cert(sys2)
            composed = feedback_cert(c1, c2)
            loop = compose_feedback(sys1, sys2)
            report = verify_certificate(loop, composed)
            assert report.qsr_margin >= -1e-5


def static_like_cert(sys):
    """ISP certificate from the LMI (imported lazily to keep the helper
    next to its single use)."""
    from passmat.passivity import compute_ifpm

    return compute_ifpm(sys, "mineig")


class TestPassivation:
    def test_exact_cancellation(self):
        c1 = make_cert(xi=-0.1 * np.eye(2))
        c2 = make_cert(phi=0.1 * np.eye(2))
        verdict = passivation_check(c1, c2)
        assert verdict.satisfied
        np.testing.assert_allclose(verdict.margin, 0.0, atol=1e-12)
        np.testing.assert_allclose(verdict.composed.phi, np.zeros((2, 2)))
        np.testing.assert_allclose(verdict.composed.xi, np.zeros((2, 2)), atol=1e-12)

    def test_threshold_at_scalar_index(self):
        # isotropic compensation of the min-eig reference matrix crosses
        # exactly at theta = -lambda_min(Xi)
        c1 = make_cert(xi=XI_MINEIG)
        lam = np.linalg.eigvalsh(XI_MINEIG)[0]
        theta = -lam
        verdict = passivation_check(c1, make_cert(phi=theta * np.eye(2)))
        assert abs(verdict.margin) < 1e-12
        assert verdict.satisfied

    def test_matrix_beats_scalar_threshold(self):
        # bisection oracle on lambda_min(theta*K + Xi_trace) against the
        # scalar requirement theta * lambda_min(K) >= 0.1167
        c1 = make_cert(xi=XI_TRACE)
        lam_k = np.linalg.eigvalsh(GAIN_COUPLED)[0]
        lam_xi = np.linalg.eigvalsh(XI_TRACE)[0]
        theta_scalar = -lam_xi / lam_k

        lo, hi = 0.0, 2.0
        for _ in range(60):
            mid = (lo + hi) / 2.0
            ok = passivation_check(
                c1, make_cert(phi=mid * GAIN_COUPLED)
            ).satisfied
            if ok:
                hi = mid
            else:
                lo = mid
        assert hi < theta_scalar

    def test_composed_certificate_orientation(self):
        # with Phi1 + Xi2 > 0 the closed loop's OFPM is Phi2 + Xi1 and its
        # IFPM is Xi2 (Phi1 + Xi2)^-1 Phi1; scalar sanity: unity-gain ISP
        # plant under strong static feedback has tiny IFPM, large OFPM
        c1 = make_cert(phi=np.eye(1), xi=np.zeros((1, 1)), m=1)
        c2 = make_cert(
            phi=5.0 * np.eye(1), xi=0.2 * np.eye(1), m=1
        )
        verdict = passivation_check(c1, c2)
        assert verdict.satisfied
        np.testing.assert_allclose(verdict.composed.xi, [[5.0]])
        np.testing.assert_allclose(
            verdict.composed.phi, [[0.2 * 1.0 / 1.2]], atol=1e-12
        )


class TestL2:
    def test_gain_bound_values(self):
        assert l2_gain_bound(make_cert(xi=np.eye(2))) == pytest.approx(1.0)
        assert l2_gain_bound(make_cert(xi=np.diag([2.0, 0.5]))) == pytest.approx(2.0)
        composed = parallel_cert(make_cert(xi=np.eye(2)), make_cert(xi=np.eye(2)))
        assert l2_gain_bound(composed) == pytest.approx(2.0)

    def test_gain_bound_needs_definite(self):
        with pytest.raises(ValueError):
            l2_gain_bound(make_cert(xi=np.diag([1.0, 0.0])))

    def test_identity_phi_gain_constant(self):
        c1 = make_cert(phi=np.eye(2))
        c2 = make_cert(phi=np.eye(2))
        verdict = l2_stability_check(c1, c2)
        assert verdict.satisfied
        # a = 1, b = ||[[I, 2I], [-2I, I]]||_2 = sqrt(5), c = 1
        np.testing.assert_allclose(verdict.gain_estimate, np.sqrt(7.0), rtol=1e-12)

    def test_unsatisfied(self):
        verdict = l2_stability_check(make_cert(phi=-np.eye(2)), make_cert())
        assert not verdict.satisfied
        assert verdict.gain_estimate is None


class TestLyapunov:
    def test_boundary_case(self):
        c1 = make_cert(xi=-0.2 * np.eye(2))
        c2 = make_cert(phi=0.2 * np.eye(2))
        verdict = lyapunov_stability_check(c1, c2, zso1=True, zso2=True)
        assert verdict.satisfied
        np.testing.assert_allclose(verdict.margin, 0.0, atol=1e-12)

    def test_zso_required(self):
        c1 = make_cert(phi=np.eye(2), xi=np.eye(2))
        verdict = lyapunov_stability_check(c1, c1, zso1=True, zso2=False)
        assert not verdict.satisfied
        assert verdict.binding_condition == "zero_state_observability"


class TestEffort:
    def test_isotropic_gap_vanishes(self):
        _, _, gap = passivation_effort(-np.eye(3))
        np.testing.assert_allclose(gap, np.zeros((3, 3)), atol=1e-14)

    def test_directional_gap(self):
        mat, scal, gap = passivation_effort(np.diag([0.0, -1.0]))
        np.testing.assert_allclose(mat, np.diag([0.0, 1.0]))
        np.testing.assert_allclose(scal, np.eye(2))
        np.testing.assert_allclose(gap, np.diag([1.0, 0.0]))

    def test_reference_matrix_gap(self):
        _, _, gap = passivation_effort(XI_MINEIG)
        assert np.linalg.eigvalsh(gap)[0] >= -1e-12
        assert np.trace(gap) > 0.0

    def test_rejects_definite_excess(self):
        with pytest.raises(ValueError):
            passivation_effort(np.eye(2))

    def test_random_nsd_batch(self):
        rng = np.random.RandomState(3)
        for _ in range(20):
            m = rng.randint(1, 5)
            xi = -random_spd(rng, m, shift=0.0)
            _, _, gap = passivation_effort(xi)
            assert np.linalg.eigvalsh(gap)[0] >= -1e-10
            iso = np.allclose(xi, xi[0, 0] * np.eye(m), atol=1e-12)
            assert iso == np.allclose(gap, 0.0, atol=1e-10)
