"""SDP solver tests against closed-form and brute-force oracles."""

import numpy as np
import pytest

from passmat.sdpcore import SdpBlock, SdpProblem, SdpStatus, solve

from conftest import random_sym

SYM2_BASIS = [
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
]


def max_trace_below_two(h1, h2):
    """Brute-force oracle for
    max tr(Phi) s.t. Phi <= H1, Phi <= H2 over symmetric 2x2 Phi.

    Parametrize Phi by (p11, p22, p12).  For fixed diagonal, the
    feasible p12 values form one interval per constraint (PSD test of a
    2x2 matrix), so feasibility reduces to the intervals intersecting:
    |h1_12 - h2_12| <= r1 + r2 with r_i = sqrt((h_i11 - p11)(h_i22 - p22)).
    The left side is monotone in p22, so the max feasible p22 for fixed
    p11 comes from bisection, and the concave 1-D profile
    p11 + p22max(p11) is maximized by a refined grid sweep.
    """
    cap1 = min(h1[0, 0], h2[0, 0])
    cap2 = min(h1[1, 1], h2[1, 1])
    gap = abs(h1[0, 1] - h2[0, 1])

    def radius_sum(p11, p22):
        total = 0.0
        for h in (h1, h2):
            a = h[0, 0] - p11
            c = h[1, 1] - p22
            if a < 0.0 or c < 0.0:
                return -np.inf
            total += np.sqrt(a * c)
        return total

    def p22_max(p11):
        if p11 > cap1:
            return -np.inf
        if radius_sum(p11, cap2) >= gap:
            return cap2
        lo, hi = cap2 - 12.0, cap2
        if radius_sum(p11, lo) < gap:
            return -np.inf
        for _ in range(80):
            mid = (lo + hi) / 2.0
            if radius_sum(p11, mid) >= gap:
                lo = mid
            else:
                hi = mid
        return lo

    lo, hi = cap1 - 12.0, cap1
    best = -np.inf
    for _ in range(12):
        grid = np.linspace(lo, hi, 121)
        vals = np.array([p11 + p22_max(p11) for p11 in grid])
        j = int(np.argmax(vals))
        best = max(best, vals[j])
        step = grid[1] - grid[0]
        lo = max(grid[j] - 2.0 * step, cap1 - 12.0)
        hi = min(grid[j] + 2.0 * step, cap1)
        if step < 1e-10:
            break
    return best


def test_scalar_bound():
    prob = SdpProblem(c=[1.0], blocks=[SdpBlock(f0=[[1.0]], mats=[[[-1.0]]])])
    sol = solve(prob)
    assert sol.status is SdpStatus.OPTIMAL
    np.testing.assert_allclose(sol.x, [1.0], atol=1e-7)


def test_min_eigenvalue_epigraph():
    s = np.diag([3.0, 1.0, 2.0])
    prob = SdpProblem(c=[1.0], blocks=[SdpBlock(f0=s, mats=[-np.eye(3)])])
    sol = solve(prob)
    assert sol.status is SdpStatus.OPTIMAL
    np.testing.assert_allclose(sol.objective_value, 1.0, atol=1e-7)


def test_two_bound_trace_vs_grid_oracle():
    rng = np.random.RandomState(0)
    for _ in range(5):
        h1, h2 = random_sym(rng, 2), random_sym(rng, 2)
        blocks = [
            SdpBlock(f0=h, mats=[-b for b in SYM2_BASIS]) for h in (h1, h2)
        ]
        prob = SdpProblem(c=[1.0, 1.0, 0.0], blocks=blocks)
        sol = solve(prob)
        assert sol.status is SdpStatus.OPTIMAL
        oracle = max_trace_below_two(h1, h2)
        np.testing.assert_allclose(sol.objective_value, oracle, atol=2e-6)


def test_optimal_solutions_feasible():
    rng = np.random.RandomState(1)
    for _ in range(20):
        d = rng.randint(2, 5)
        s = random_sym(rng, d)
        prob = SdpProblem(c=[1.0], blocks=[SdpBlock(f0=s, mats=[-np.eye(d)])])
        sol = solve(prob)
        assert sol.status is SdpStatus.OPTIMAL
        assert sol.max_constraint_violation <= 1e-8
        assert sol.duality_gap_estimate <= 1e-8
        np.testing.assert_allclose(
            sol.objective_value, np.linalg.eigvalsh(s)[0], atol=1e-7
        )


def test_objective_scaling_invariance():
    s = np.diag([3.0, 1.0, 2.0])
    base = solve(
        SdpProblem(c=[1.0], blocks=[SdpBlock(f0=s, mats=[-np.eye(3)])])
    )
    scaled = solve(
        SdpProblem(c=[10.0], blocks=[SdpBlock(f0=s, mats=[-np.eye(3)])])
    )
    np.testing.assert_allclose(scaled.x, base.x, atol=1e-7)
    np.testing.assert_allclose(
        scaled.objective_value, 10.0 * base.objective_value, rtol=1e-6
    )


def test_infeasible_detection():
    prob = SdpProblem(
        c=[1.0],
        blocks=[
            SdpBlock(f0=[[-2.0]], mats=[[[1.0]]]),  # x >= 2
            SdpBlock(f0=[[1.0]], mats=[[[-1.0]]]),  # x <= 1
        ],
    )
    sol = solve(prob)
    assert sol.status is SdpStatus.INFEASIBLE


def test_box_bounds():
    prob = SdpProblem(
        c=[1.0],
        blocks=[SdpBlock(f0=5.0 * np.eye(1), mats=[[[-1.0]]])],
        lo=np.array([-1.0]),
        hi=np.array([2.0]),
    )
    sol = solve(prob)
    assert sol.status is SdpStatus.OPTIMAL
    np.testing.assert_allclose(sol.x, [2.0], atol=1e-7)


def test_validation_errors():
    with pytest.raises(Exception):
        SdpProblem(c=[1.0], blocks=[])
    with pytest.raises(Exception):
        SdpBlock(f0=np.eye(2), mats=[np.eye(3)])
