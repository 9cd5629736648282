"""Symmetric-matrix kernel tests."""

import numpy as np
import pytest

from passmat.symmat import (
    DimensionError,
    HermitianMatrix,
    Inertia,
    SingularPivotError,
    SymmetricMatrix,
    SymmetryError,
    eig_sym,
    hermitian_part,
    inertia,
    is_lower_bound,
    loewner_leq,
    schur_complement,
)

from conftest import random_spd, random_sym

# printed benchmark index matrices (trace-selected / min-eig-selected)
XI_TRACE = np.array([[0.0373, 0.0618], [0.0618, -0.0920]])
XI_MINEIG = np.array([[-0.06127, 0.0176], [0.0176, -0.1029]])


def bench_response(plant, w):
    """Independent frequency-response oracle: direct dense solve."""
    n = plant.a.shape[0]
    return plant.c @ np.linalg.solve(1j * w * np.eye(n) - plant.a, plant.b) + plant.d


class TestHermitianPart:
    def test_real_symmetrization(self):
        out = hermitian_part([[1.0, 2.0], [0.0, 1.0]])
        np.testing.assert_allclose(out.entries, [[1.0, 1.0], [1.0, 1.0]])
        assert isinstance(out, SymmetricMatrix)

    def test_skew_hermitian_vanishes(self):
        out = hermitian_part(1j * np.eye(2))
        np.testing.assert_allclose(out.entries, np.zeros((2, 2)), atol=1e-15)
        assert isinstance(out, HermitianMatrix)

    def test_bench_plant_dc_sample(self, bench_plant):
        g0 = bench_response(bench_plant, 0.0)
        out = hermitian_part(g0)
        np.testing.assert_allclose(out.entries, (g0 + g0.conj().T) / 2.0)
        # DC response of this plant is real, so the Hermitian part is too
        assert np.abs(out.entries.imag).max() < 1e-12

    def test_idempotent_and_linear(self):
        rng = np.random.RandomState(0)
        for _ in range(10):
            a = rng.randn(3, 3) + 1j * rng.randn(3, 3)
            b = rng.randn(3, 3) + 1j * rng.randn(3, 3)
            ha = hermitian_part(a).entries
            np.testing.assert_allclose(hermitian_part(ha).entries, ha, atol=1e-14)
            np.testing.assert_allclose(
                hermitian_part(2.0 * a + b).entries,
                2.0 * ha + hermitian_part(b).entries,
                atol=1e-13,
            )

    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionError):
            hermitian_part(np.ones((2, 3)))


class TestValueTypes:
    def test_rejects_asymmetric(self):
        with pytest.raises(SymmetryError):
            SymmetricMatrix([[1.0, 2.0], [0.0, 1.0]])

    def test_rejects_non_hermitian(self):
        with pytest.raises(SymmetryError):
            HermitianMatrix([[1.0, 1j], [1j, 1.0]])

    def test_accepts_roundoff_asymmetry(self):
        base = random_spd(np.random.RandomState(1), 4)
        noisy = base + 1e-13 * np.triu(np.ones((4, 4)), 1)
        SymmetricMatrix(noisy)  # within tolerance

    def test_entries_immutable(self):
        mat = SymmetricMatrix(np.eye(2))
        with pytest.raises(ValueError):
            mat.entries[0, 0] = 5.0


class TestEig:
    def test_diagonal_sorted(self):
        dec = eig_sym(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(dec.values, [1.0, 2.0, 3.0])

    def test_exchange_matrix(self):
        dec = eig_sym(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(dec.values, [-1.0, 1.0])
        v = dec.vectors[:, 0]
        np.testing.assert_allclose(np.abs(v), np.ones(2) / np.sqrt(2))

    def test_mineig_selected_matrix(self):
        dec = eig_sym(XI_MINEIG)
        assert abs(dec.values[0] - (-0.1095)) < 1e-3

    def test_reconstruction_random(self):
        rng = np.random.RandomState(2)
        for _ in range(5):
            s = random_sym(rng, 6)
            dec = eig_sym(s)
            np.testing.assert_allclose(
                dec.vectors @ np.diag(dec.values) @ dec.vectors.T, s, atol=1e-12
            )

    def test_hermitian_input(self):
        mat = np.array([[2.0, 1j], [-1j, 2.0]])
        dec = eig_sym(mat)
        np.testing.assert_allclose(dec.values, [1.0, 3.0])


class TestInertia:
    def test_mixed_signs(self):
        assert inertia(np.diag([2.0, -3.0, 0.0]), tol=1e-9) == Inertia(1, 1, 1)

    def test_identity(self):
        assert inertia(np.eye(3)) == Inertia(3, 0, 0)

    def test_trace_selected_matrix(self):
        # characteristic-polynomial oracle for the 2x2 printed matrix
        tr = np.trace(XI_TRACE)
        det = np.linalg.det(XI_TRACE)
        disc = np.sqrt(tr * tr - 4.0 * det)
        roots = sorted([(tr - disc) / 2.0, (tr + disc) / 2.0])
        assert roots[0] < 0 < roots[1]
        assert inertia(XI_TRACE) == Inertia(1, 1, 0)

    def test_counts_sum_and_negation(self):
        rng = np.random.RandomState(3)
        for _ in range(20):
            s = random_sym(rng, rng.randint(1, 7))
            ine = inertia(s)
            assert ine.positive + ine.negative + ine.zero == s.shape[0]
            neg = inertia(-s)
            assert (neg.positive, neg.negative) == (ine.negative, ine.positive)

    def test_rejects_negative_tol(self):
        with pytest.raises(ValueError):
            inertia(np.eye(2), tol=-1.0)


class TestLoewner:
    def test_simple_order(self):
        assert loewner_leq(np.eye(2), 2.0 * np.eye(2))

    def test_incomparable_pair(self):
        a = np.diag([1.0, -1.0])
        b = np.zeros((2, 2))
        assert not loewner_leq(a, b)
        assert not loewner_leq(b, a)

    def test_mineig_below_ofp_sample(self, bench_plant):
        g = bench_response(bench_plant, 1.0)
        gi = np.linalg.inv(g)
        k_sample = (gi + gi.conj().T) / 2.0
        # reference matrix entries are rounded to ~4 digits, so the
        # comparison needs a matching absolute tolerance
        assert loewner_leq(XI_MINEIG, k_sample, tol_abs=1e-4)

    def test_reflexive_transitive(self):
        rng = np.random.RandomState(4)
        for _ in range(10):
            b = random_sym(rng, 4)
            a = b - random_spd(rng, 4, shift=0.0)
            c = b + random_spd(rng, 4, shift=0.0)
            assert loewner_leq(b, b)
            assert loewner_leq(a, b) and loewner_leq(b, c)
            assert loewner_leq(a, c)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            loewner_leq(np.eye(2), np.eye(3))


class TestSchur:
    def test_identity(self):
        out = schur_complement(np.eye(2), split=1)
        np.testing.assert_allclose(out.entries, [[1.0]])

    def test_harmonic_mean_identity_vanishes(self):
        # [[Xi1 - N, -N], [-N, Xi2 - N]] with N the harmonic mean of
        # Xi1 = Xi2 = I has Schur complement exactly zero
        big = np.block(
            [
                [0.5 * np.eye(2), -0.5 * np.eye(2)],
                [-0.5 * np.eye(2), 0.5 * np.eye(2)],
            ]
        )
        out = schur_complement(big, split=2)
        np.testing.assert_allclose(out.entries, np.zeros((2, 2)), atol=1e-14)

    def test_passivation_block_identity(self):
        # [[Phi1 + Xi2, -Xi2], [-Xi2, Xi2 - Xi2 (Phi1 + Xi2)^-1 Phi1]] has
        # zero Schur complement for random positive definite Phi1, Xi2
        rng = np.random.RandomState(5)
        for _ in range(20):
            m = rng.randint(1, 4)
            phi1 = random_spd(rng, m)
            xi2 = random_spd(rng, m)
            mix = np.linalg.solve(phi1 + xi2, phi1)
            corner = xi2 - xi2 @ mix
            big = np.block([[phi1 + xi2, -xi2], [-xi2, (corner + corner.T) / 2.0]])
            out = schur_complement((big + big.T) / 2.0, split=m)
            assert np.abs(out.entries).max() < 1e-10

    def test_psd_equivalence(self):
        rng = np.random.RandomState(6)
        for _ in range(30):
            k = rng.randint(1, 4)
            total = k + rng.randint(1, 4)
            mat = random_sym(rng, total)
            mat[:k, :k] = random_spd(rng, k, shift=0.5)
            comp = schur_complement(mat, split=k)
            psd_via_schur = np.linalg.eigvalsh(comp.entries)[0] >= -1e-10
            psd_direct = np.linalg.eigvalsh(mat)[0] >= -1e-10
            assert psd_via_schur == psd_direct

    def test_singular_pivot(self):
        mat = np.zeros((2, 2))
        with pytest.raises(SingularPivotError):
            schur_complement(mat, split=1)

    def test_lower_pivot(self):
        mat = np.array([[2.0, 1.0], [1.0, 4.0]])
        out = schur_complement(mat, split=1, pivot="lower")
        np.testing.assert_allclose(out.entries, [[2.0 - 1.0 / 4.0]])


class TestLowerBound:
    def test_deep_shift_is_bound(self):
        rng = np.random.RandomState(7)
        samples = [random_sym(rng, 3) for _ in range(5)]
        scale = max(np.abs(s).max() for s in samples)
        ok, margin = is_lower_bound(-10.0 * scale * np.eye(3), samples)
        assert ok and margin > 0

    def test_shifted_sample_is_not(self):
        rng = np.random.RandomState(8)
        samples = [random_sym(rng, 3) for _ in range(5)]
        ok, margin = is_lower_bound(samples[2] + 1e-3 * np.eye(3), samples)
        assert not ok and margin <= -1e-3 + 1e-9

    def test_trace_matrix_bounds_ofp_family(self, bench_plant):
        omegas = np.concatenate(([0.0], np.logspace(-3, 4, 200)))
        samples = []
        for w in omegas:
            gi = np.linalg.inv(bench_response(bench_plant, w))
            samples.append((gi + gi.conj().T) / 2.0)
        ok, margin = is_lower_bound(XI_TRACE, samples, tol=1e-6)
        assert ok and margin >= -1e-6

    def test_empty_samples(self):
        with pytest.raises(ValueError):
            is_lower_bound(np.eye(2), [])
