"""Small dense semidefinite-program solver.

Solves problems of the form

    maximize    c^T x
    subject to  F0_b + sum_i x_i Fi_b  is positive semidefinite,  b = 1..B
                lo <= x <= hi          (optional box bounds)

with a primal-dual path-following interior-point method: Nesterov-Todd
scaling on every semidefinite block and a Mehrotra-style
predictor-corrector step.  Everything is dense; the instances this
package produces have at most a few dozen variables and blocks no larger
than about 12x12, so robustness is preferred over asymptotic cleverness.

Strict inequalities required by callers (W < 0, P > 0) are expected to be
encoded upstream as semidefinite constraints shifted by a small epsilon.
Infeasibility is reported from an approximate Farkas certificate
(Z >= 0 with A^T(Z) ~ 0 and <F0, Z> < 0) and is a heuristic, not a
rigorous proof.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .symmat import DimensionError

__all__ = [
    "SdpStatus",
    "SdpBlock",
    "SdpProblem",
    "SdpSolution",
    "SdpError",
    "solve",
]

_STEP_FRAC = 0.98  # fraction-to-boundary
_FARKAS_TOL = 1e-9


class SdpError(RuntimeError):
    """Unrecoverable numerical failure inside the solver."""


class SdpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max_iter"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True, eq=False)
class SdpBlock:
    """Affine semidefinite constraint ``F0 + sum_i x_i mats[i] >= 0``."""

    f0: np.ndarray
    mats: tuple

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=float)
        d = f0.shape[0]
        mats = tuple(np.asarray(m, dtype=float) for m in self.mats)
        if f0.shape != (d, d):
            raise DimensionError("F0 must be square")
        for m in mats:
            if m.shape != (d, d):
                raise DimensionError("all Fi must share F0's dimension")
        object.__setattr__(self, "f0", (f0 + f0.T) / 2.0)
        object.__setattr__(
            self, "mats", tuple((m + m.T) / 2.0 for m in mats)
        )

    @property
    def dim(self):
        return self.f0.shape[0]


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """Linear objective over affine semidefinite constraints."""

    c: np.ndarray
    blocks: tuple
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        blocks = tuple(self.blocks)
        if not blocks:
            raise DimensionError("problem needs at least one block")
        for blk in blocks:
            if len(blk.mats) != c.size:
                raise DimensionError(
                    f"block has {len(blk.mats)} coefficient matrices, "
                    f"expected {c.size}"
                )
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "blocks", blocks)

    @property
    def num_vars(self):
        return self.c.size


@dataclass
class SdpSolution:
    x: np.ndarray
    status: SdpStatus
    objective_value: float
    max_constraint_violation: float
    duality_gap_estimate: float
    iterations: int = 0
    message: str = ""
    dual_blocks: list = field(default_factory=list)


def _expand_bounds(problem):
    """Convert box bounds into extra 1x1 blocks."""
    blocks = list(problem.blocks)
    k = problem.num_vars
    for bound, sign in ((problem.lo, 1.0), (problem.hi, -1.0)):
        if bound is None:
            continue
        bound = np.asarray(bound, dtype=float).ravel()
        for i in range(k):
            if not np.isfinite(bound[i]):
                continue
            mats = [np.zeros((1, 1)) for _ in range(k)]
            mats[i] = np.array([[sign]])
            blocks.append(SdpBlock(f0=np.array([[-sign * bound[i]]]), mats=mats))
    return blocks


def _nt_scaling(s_mat, z_mat):
    """Nesterov-Todd scaling point for one block.

    Returns (r, r_inv, lam) with r^-1 S r^-T = r^T Z r = diag(lam).
    """
    ls = _chol_psd(s_mat, "primal")
    lz = _chol_psd(z_mat, "dual")
    u, sv, vt = np.linalg.svd(lz.T @ ls)
    if np.min(sv) <= 0:
        raise np.linalg.LinAlgError("NT scaling broke down")
    r = ls @ vt.T @ np.diag(sv ** -0.5)
    r_inv = np.diag(sv ** 0.5) @ vt @ np.linalg.inv(ls)
    return r, r_inv, sv


def _max_step(chol, delta):
    """Largest alpha in (0, 1] with X + alpha*Delta staying PSD, scaled by
    the fraction-to-boundary factor."""
    w = np.linalg.solve(chol, delta)
    w = np.linalg.solve(chol, w.T).T
    lam_min = np.linalg.eigvalsh((w + w.T) / 2.0)[0]
    if lam_min >= -1e-14:
        return 1.0
    return min(1.0, -_STEP_FRAC / lam_min)


def _farkas_certificate(blocks, f0s, adjoint, z_mats, loose=False):
    """Heuristic primal-infeasibility test on the current dual iterate:
    Z >= 0 with A^T(Z) ~ 0 and <F0, Z> < 0 is a Farkas ray."""
    z_norm = sum(np.linalg.norm(z, "fro") for z in z_mats)
    if z_norm <= 0:
        return False
    tol = 1e-6 if loose else _FARKAS_TOL
    if not loose and z_norm < 1e4:
        return False
    ray_resid = np.linalg.norm(
        sum(adjoint(b, z_mats[b]) for b in range(len(blocks)))
    )
    ray_obj = sum(np.tensordot(f0s[b], z_mats[b]) for b in range(len(blocks)))
    return ray_resid / z_norm < tol and ray_obj / z_norm < -tol


def _chol_psd(mat, name):
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        jitter = 1e-14 * max(1.0, np.trace(mat))
        for _ in range(3):
            try:
                return np.linalg.cholesky(mat + jitter * np.eye(mat.shape[0]))
            except np.linalg.LinAlgError:
                jitter *= 100
        raise SdpError(f"{name} iterate lost positive definiteness")


def solve(problem, feas_tol=1e-8, gap_tol=1e-8, max_iter=200):
    """Solve an :class:`SdpProblem`.

    Returns an :class:`SdpSolution`; ``status == OPTIMAL`` guarantees the
    reported constraint violation is below ``feas_tol`` and the (relative)
    duality-gap estimate below ``gap_tol``.
    """
    blocks = _expand_bounds(problem)
    c = problem.c
    k = c.size
    dims = [blk.dim for blk in blocks]
    total_dim = sum(dims)

    f0s = [blk.f0 for blk in blocks]
    stacks = [np.stack(blk.mats) if blk.mats else None for blk in blocks]

    scale_p = 1.0 + max(np.linalg.norm(f0, "fro") for f0 in f0s)
    scale_d = 1.0 + np.linalg.norm(c)

    x = np.zeros(k)
    init = max(1.0, *(1.1 * abs(np.linalg.eigvalsh(f0)).max() for f0 in f0s))
    s_mats = [init * np.eye(d) for d in dims]
    z_mats = [init * np.eye(d) for d in dims]

    def operator(blk_idx, vec):
        return np.einsum("i,ijk->jk", vec, stacks[blk_idx])

    def adjoint(blk_idx, mat):
        return np.einsum("ijk,jk->i", stacks[blk_idx], mat)

    def residuals():
        r_primal = [
            f0s[b] + operator(b, x) - s_mats[b] for b in range(len(blocks))
        ]
        r_dual = c + sum(adjoint(b, z_mats[b]) for b in range(len(blocks)))
        gap = sum(
            np.tensordot(s_mats[b], z_mats[b]) for b in range(len(blocks))
        )
        return r_primal, r_dual, gap

    def converged(r_primal, r_dual, gap):
        rp_norm = max(np.linalg.norm(r, "fro") for r in r_primal)
        rd_norm = np.linalg.norm(r_dual)
        rel_gap = gap / (1.0 + abs(float(c @ x)))
        # The dual residual hits a conditioning floor (~sqrt(eps) of the
        # data scale) once complementarity is tight; the Optimal contract
        # is on constraint violation and gap, so allow that floor.
        dual_tol = max(feas_tol, 1e-6)
        return (
            rp_norm <= feas_tol * scale_p
            and rd_norm <= dual_tol * scale_d
            and rel_gap <= gap_tol
        )

    status = SdpStatus.MAX_ITER
    message = ""
    it = 0
    for it in range(1, max_iter + 1):
        r_primal, r_dual, gap = residuals()
        mu = gap / total_dim
        if converged(r_primal, r_dual, gap):
            status = SdpStatus.OPTIMAL
            break

        # Farkas-style infeasibility heuristic: a nearly dual-feasible ray
        # with negative objective certifies primal infeasibility.
        if _farkas_certificate(blocks, f0s, adjoint, z_mats):
            status = SdpStatus.INFEASIBLE
            message = "approximate Farkas certificate found (heuristic)"
            break

        try:
            scal = [
                _nt_scaling(s_mats[b], z_mats[b]) for b in range(len(blocks))
            ]
            s_chols = [_chol_psd(s_mats[b], "primal") for b in range(len(blocks))]
            z_chols = [_chol_psd(z_mats[b], "dual") for b in range(len(blocks))]

            # Schur complement matrix M[i, j] = sum_b <Fi, W^-1 Fj W^-1>.
            m_mat = np.zeros((k, k))
            scaled_stacks = []
            for b in range(len(blocks)):
                _, r_inv, _ = scal[b]
                sc = np.einsum("pq,iqr,sr->ips", r_inv, stacks[b], r_inv)
                scaled_stacks.append(sc)
                flat = sc.reshape(k, -1)
                m_mat += flat @ flat.T
            m_mat += 1e-13 * np.trace(m_mat) / max(k, 1) * np.eye(k)
            m_chol = np.linalg.cholesky(m_mat)

            def solve_newton(d_scaled):
                rhs = r_dual.copy()
                for b in range(len(blocks)):
                    r, r_inv, _ = scal[b]
                    rhs += adjoint(b, r_inv.T @ d_scaled[b] @ r_inv)
                    w_inv_rp = r_inv.T @ (r_inv @ r_primal[b] @ r_inv.T) @ r_inv
                    rhs -= adjoint(b, w_inv_rp)
                dx = np.linalg.solve(
                    m_chol.T, np.linalg.solve(m_chol, rhs)
                )
                # one pass of iterative refinement; M gets ill-conditioned
                # as the barrier parameter vanishes
                resid = rhs - m_mat @ dx
                dx += np.linalg.solve(m_chol.T, np.linalg.solve(m_chol, resid))
                ds = [operator(b, dx) + r_primal[b] for b in range(len(blocks))]
                dz = []
                for b in range(len(blocks)):
                    r, r_inv, _ = scal[b]
                    w_inv_ds = r_inv.T @ (r_inv @ ds[b] @ r_inv.T) @ r_inv
                    dz.append(r_inv.T @ d_scaled[b] @ r_inv - w_inv_ds)
                return dx, ds, dz

            # Predictor (affine) step aims straight at complementarity 0.
            d_aff = [-np.diag(scal[b][2]) for b in range(len(blocks))]
            dx_a, ds_a, dz_a = solve_newton(d_aff)
            alpha_p = min(
                _max_step(s_chols[b], ds_a[b]) for b in range(len(blocks))
            )
            alpha_d = min(
                _max_step(z_chols[b], dz_a[b]) for b in range(len(blocks))
            )
            gap_aff = sum(
                np.tensordot(
                    s_mats[b] + alpha_p * ds_a[b],
                    z_mats[b] + alpha_d * dz_a[b],
                )
                for b in range(len(blocks))
            )
            sigma = min(1.0, max(1e-8, (max(gap_aff, 0.0) / gap) ** 3))

            # Corrector with Mehrotra second-order term in scaled space.
            d_cor = []
            for b in range(len(blocks)):
                r, r_inv, lam = scal[b]
                ds_t = r_inv @ ds_a[b] @ r_inv.T
                dz_t = r.T @ dz_a[b] @ r
                cross = (ds_t @ dz_t + dz_t @ ds_t) / 2.0
                target = sigma * mu * np.eye(len(lam)) - np.diag(lam ** 2) - cross
                denom = lam[:, None] + lam[None, :]
                d_cor.append(2.0 * target / denom)
            dx, ds, dz = solve_newton(d_cor)
            alpha_p = min(
                _max_step(s_chols[b], ds[b]) for b in range(len(blocks))
            )
            alpha_d = min(
                _max_step(z_chols[b], dz[b]) for b in range(len(blocks))
            )
        except (np.linalg.LinAlgError, SdpError, FloatingPointError) as exc:
            # The step computation stalled at the central-path boundary;
            # accept the iterate if it already meets the tolerances.
            if converged(*residuals()):
                status = SdpStatus.OPTIMAL
            elif _farkas_certificate(blocks, f0s, adjoint, z_mats, loose=True):
                status = SdpStatus.INFEASIBLE
                message = "interior lost; approximate Farkas certificate found"
            else:
                status = SdpStatus.NUMERICAL_FAILURE
                message = str(exc)
            break

        x = x + alpha_p * dx
        for b in range(len(blocks)):
            s_mats[b] = s_mats[b] + alpha_p * ds[b]
            z_mats[b] = z_mats[b] + alpha_d * dz[b]
        if not np.all(np.isfinite(x)):
            status = SdpStatus.NUMERICAL_FAILURE
            message = "iterates diverged"
            break

    violation = 0.0
    for blk in problem.blocks:
        lam_min = np.linalg.eigvalsh(
            blk.f0 + np.einsum("i,ijk->jk", x, np.stack(blk.mats))
        )[0]
        violation = max(violation, max(0.0, -float(lam_min)))
    gap = sum(np.tensordot(s_mats[b], z_mats[b]) for b in range(len(blocks)))
    obj = float(problem.c @ x)
    return SdpSolution(
        x=x,
        status=status,
        objective_value=obj,
        max_constraint_violation=violation,
        duality_gap_estimate=gap / (1.0 + abs(obj)),
        iterations=it,
        message=message,
        dual_blocks=z_mats,
    )
