"""LTI state-space systems and their frequency-domain passivity samples.

A :class:`StateSpace` holds real (A, B, C, D) with m inputs and m outputs
(n = 0 encodes a static map y = D u).  On top of it this module provides
frequency responses, the frequency-dependent input-feedforward and
output-feedback passivity samples H(w) and K(w), structural checks
(Hurwitz / minimum phase / observable), block-diagram composition, impulse
responses, and the scalar passivity index obtained from a refined
frequency sweep.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .symmat import (
    COND_MAX,
    DimensionError,
    hermitian_part,
)

__all__ = [
    "STAB_TOL",
    "NearSingularError",
    "AlgebraicLoopError",
    "StateSpace",
    "FrequencyGrid",
    "default_grid",
    "freq_response",
    "freq_response_many",
    "ifpm_sample",
    "ofpm_sample",
    "weighted_ifpm_sample",
    "is_hurwitz",
    "is_minimum_phase",
    "is_observable",
    "impulse_response",
    "compose_parallel",
    "compose_feedback",
    "close_loop_static",
    "simulate_zoh",
    "scalar_index_freq",
    "golden_section_min",
]

# Strictness margin for Hurwitz / minimum-phase verdicts.
STAB_TOL = 1e-9


class NearSingularError(np.linalg.LinAlgError):
    """Resolvent or response matrix too close to singular."""


class AlgebraicLoopError(np.linalg.LinAlgError):
    """Feedback interconnection has a singular direct-feedthrough loop."""


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Continuous-time LTI system ``xdot = A x + B u``, ``y = C x + D u``.

    Square systems only (m inputs, m outputs).  n = 0 is allowed and
    encodes the static map ``y = D u``.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        d = np.atleast_2d(np.asarray(self.d, dtype=float))
        if a.size == 0:
            a = a.reshape(0, 0)
        n = a.shape[0]
        m = d.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"A must be square, got {a.shape}")
        if d.shape != (m, m):
            raise DimensionError(f"D must be square, got {d.shape}")
        if m < 1:
            raise DimensionError("system must have at least one input/output")
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if b.size != n * m or c.size != n * m:
            raise DimensionError(
                f"inconsistent dimensions: A {a.shape}, B {b.shape}, "
                f"C {c.shape}, D {d.shape}"
            )
        b = b.reshape(n, m)
        c = c.reshape(m, n)
        for arr in (a, b, c, d):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def m(self):
        return self.d.shape[0]

    @classmethod
    def static_gain(cls, d):
        """Static map y = D u (n = 0)."""
        d = np.atleast_2d(np.asarray(d, dtype=float))
        m = d.shape[0]
        return cls(
            a=np.zeros((0, 0)), b=np.zeros((0, m)), c=np.zeros((m, 0)), d=d
        )

    @classmethod
    def from_json(cls, text):
        """Parse the system JSON schema ``{"A": .., "B": .., "C": .., "D": ..}``.

        All four keys are mandatory (n = 0 allowed with empty A, B, C).
        """
        data = json.loads(text)
        missing = [k for k in ("A", "B", "C", "D") if k not in data]
        if missing:
            raise KeyError(f"system JSON missing keys: {missing}")
        d = np.atleast_2d(np.asarray(data["D"], dtype=float))
        m = d.shape[0]
        a = np.asarray(data["A"], dtype=float)
        n = a.shape[0] if a.size else 0
        a = a.reshape(n, n)
        b = np.asarray(data["B"], dtype=float).reshape(n, m)
        c = np.asarray(data["C"], dtype=float).reshape(m, n)
        return cls(a=a, b=b, c=c, d=d)

    def to_json(self):
        return json.dumps(
            {
                "A": self.a.tolist(),
                "B": self.b.tolist(),
                "C": self.c.tolist(),
                "D": self.d.tolist(),
            },
            indent=2,
        )


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Ascending frequency grid in rad/s containing 0, with an infinity
    marker (np.inf) as the last entry."""

    omegas: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("grid must be a 1-D array with >= 2 entries")
        if not np.isinf(w[-1]):
            raise ValueError("grid must end with the infinity marker")
        if np.any(np.diff(w[:-1]) <= 0) or w[0] != 0.0:
            raise ValueError("grid must start at 0 and be strictly increasing")
        w.setflags(write=False)
        object.__setattr__(self, "omegas", w)

    @property
    def finite(self):
        return self.omegas[:-1]


def default_grid(num=400, lo=1e-3, hi=1e4):
    """Default sweep grid: ``num`` log-spaced points on [lo, hi] plus 0 and
    the infinity marker.  All systems treated here have their dynamics well
    inside this band; the golden-section refinement removes grid bias."""
    ws = np.logspace(np.log10(lo), np.log10(hi), num)
    return FrequencyGrid(np.concatenate(([0.0], ws, [np.inf])))


def _resolvent_solve(sys, w):
    n = sys.n
    mat = 1j * w * np.eye(n) - sys.a
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise NearSingularError(
            f"resolvent of A nearly singular at omega={w:g} (cond {cond:.2e})"
        )
    return np.linalg.solve(mat, sys.b)


def freq_response(sys, w):
    """Transfer function ``G(jw) = C (jw I - A)^-1 B + D``.

    ``w = np.inf`` returns D.  Raises :class:`NearSingularError` if jw is
    (numerically) an eigenvalue of A.
    """
    if sys.n == 0 or np.isinf(w):
        return sys.d.astype(complex)
    return sys.c @ _resolvent_solve(sys, w) + sys.d


def freq_response_many(sys, omegas):
    """Vectorized ``freq_response`` over an array of finite frequencies.

    Returns an array of shape (len(omegas), m, m).
    """
    ws = np.asarray(omegas, dtype=float)
    if sys.n == 0:
        return np.broadcast_to(
            sys.d.astype(complex), (ws.size, sys.m, sys.m)
        ).copy()
    eye = np.eye(sys.n)
    mats = 1j * ws[:, None, None] * eye - sys.a
    sol = np.linalg.solve(mats, np.broadcast_to(sys.b, (ws.size, sys.n, sys.m)))
    return sys.c @ sol + sys.d


def ifpm_sample(sys, w):
    """Frequency-dependent input-feedforward passivity sample
    ``H(w) = (G(jw) + G^H(jw)) / 2``."""
    return hermitian_part(freq_response(sys, w))


def ofpm_sample(sys, w):
    """Frequency-dependent output-feedback passivity sample
    ``K(w) = (G^-1(jw) + [G^H(jw)]^-1) / 2``.

    Requires G(jw) to be invertible (condition number below COND_MAX).
    """
    g = freq_response(sys, w)
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise NearSingularError(
            f"G(jw) singular at omega={w:g} (cond {cond:.2e}); "
            "use the LMI route for the OFP index"
        )
    gi = np.linalg.inv(g)
    return hermitian_part(gi)


def weighted_ifpm_sample(sys, weight, w):
    """Weighted sample ``H_R(w) = (R^H G(jw) + G^H(jw) R) / 2``.

    With R = I this reduces to :func:`ifpm_sample`.  The scalar margin
    convention that halves ``lambda_min(R^H G + G^H R)`` is recovered as
    ``lambda_min(H_R)`` because the 1/2 factor is already included here.
    """
    r = np.asarray(weight, dtype=complex)
    g = freq_response(sys, w)
    if r.shape != g.shape:
        raise DimensionError(f"weight shape {r.shape} != response {g.shape}")
    return hermitian_part(r.conj().T @ g)


def is_hurwitz(sys):
    """True iff all eigenvalues of A have real part < -STAB_TOL (static
    systems are trivially Hurwitz)."""
    if sys.n == 0:
        return True
    return bool(np.max(np.linalg.eigvals(sys.a).real) < -STAB_TOL)


def invariant_zeros(sys):
    """Finite invariant zeros: finite generalized eigenvalues of the
    Rosenbrock pencil ``[[A - s I, B], [C, D]]``."""
    n, m = sys.n, sys.m
    if n == 0:
        return np.array([], dtype=complex)
    pencil = np.block([[sys.a, sys.b], [sys.c, sys.d]])
    weight = np.zeros((n + m, n + m))
    weight[:n, :n] = np.eye(n)
    alphas, betas = scipy.linalg.eig(pencil, weight, right=False, homogeneous_eigvals=True)
    alphas = np.asarray(alphas).ravel()
    betas = np.asarray(betas).ravel()
    finite = np.abs(betas) > 1e-12 * np.max(np.abs(alphas) + 1.0)
    return alphas[finite] / betas[finite]


def is_minimum_phase(sys):
    """True iff every finite invariant zero has real part < -STAB_TOL."""
    zeros = invariant_zeros(sys)
    if zeros.size == 0:
        return True
    return bool(np.max(zeros.real) < -STAB_TOL)


def is_observable(sys):
    """Observability rank test on (A, C)."""
    n = sys.n
    if n == 0:
        return True
    blocks = [sys.c]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ sys.a)
    return int(np.linalg.matrix_rank(np.vstack(blocks))) == n


def impulse_response(sys, t):
    """Impulse response at time t >= 0.

    Returns ``(smooth, delta_weight)`` where ``smooth = C exp(A t) B`` and
    ``delta_weight = D``.  The Dirac weight is reported separately and is
    never folded into pointwise samples.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if sys.n == 0:
        return np.zeros((sys.m, sys.m)), sys.d.copy()
    return sys.c @ scipy.linalg.expm(sys.a * t) @ sys.b, sys.d.copy()


def compose_parallel(sys1, sys2):
    """Parallel connection: shared input, summed outputs."""
    if sys1.m != sys2.m:
        raise DimensionError("parallel connection needs equal port widths")
    n1, n2 = sys1.n, sys2.n
    a = np.block(
        [
            [sys1.a, np.zeros((n1, n2))],
            [np.zeros((n2, n1)), sys2.a],
        ]
    )
    b = np.vstack([sys1.b, sys2.b])
    c = np.hstack([sys1.c, sys2.c])
    return StateSpace(a=a, b=b, c=c, d=sys1.d + sys2.d)


def compose_feedback(sys1, sys2):
    """Negative feedback interconnection with ``e1 = u1 - y2``,
    ``e2 = u2 + y1``; stacked input (u1, u2) and output (y1, y2).

    Raises :class:`AlgebraicLoopError` when the direct-feedthrough loop
    matrix ``[[I, D1], [-D2, I]]`` is singular.
    """
    if sys1.m != sys2.m:
        raise DimensionError("feedback connection needs equal port widths")
    m = sys1.m
    n1, n2 = sys1.n, sys2.n
    eye = np.eye(m)
    loop = np.block([[eye, sys1.d], [-sys2.d, eye]])
    cond = np.linalg.cond(loop)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise AlgebraicLoopError(
            f"feedthrough loop nearly singular (cond {cond:.2e})"
        )
    # y = loop^-1 (Cblk x + Dblk u), with
    # Cblk = diag(C1, C2) stacked and Dblk = diag(D1, D2) acting on (u1, u2).
    cblk = np.block(
        [
            [sys1.c, np.zeros((m, n2))],
            [np.zeros((m, n1)), sys2.c],
        ]
    )
    dblk = np.block(
        [
            [sys1.d, np.zeros((m, m))],
            [np.zeros((m, m)), sys2.d],
        ]
    )
    cy = np.linalg.solve(loop, cblk)
    dy = np.linalg.solve(loop, dblk)
    # e = (u1 - y2, u2 + y1):
    sel = np.block([[np.zeros((m, m)), -eye], [eye, np.zeros((m, m))]])
    ce = sel @ cy
    de = np.eye(2 * m) + sel @ dy
    bblk = np.block(
        [
            [sys1.b, np.zeros((n1, m))],
            [np.zeros((n2, m)), sys2.b],
        ]
    )
    a = np.block(
        [
            [sys1.a, np.zeros((n1, n2))],
            [np.zeros((n2, n1)), sys2.a],
        ]
    ) + bblk @ ce
    b = bblk @ de
    return StateSpace(a=a, b=b, c=cy, d=dy)


def close_loop_static(sys, gain, theta=1.0):
    """Close the loop around ``sys`` with the static map ``y2 = theta K e2``
    (u2 = 0), i.e. the closed transfer function ``(I + G theta K)^-1 G``."""
    k = theta * np.asarray(gain, dtype=float)
    if k.shape != (sys.m, sys.m):
        raise DimensionError(f"gain must be {sys.m}x{sys.m}")
    loop = np.eye(sys.m) + sys.d @ k
    cond = np.linalg.cond(loop)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise AlgebraicLoopError(
            f"static loop nearly singular (cond {cond:.2e})"
        )
    cy = np.linalg.solve(loop, sys.c)
    dy = np.linalg.solve(loop, sys.d)
    return StateSpace(
        a=sys.a - sys.b @ k @ cy,
        b=sys.b - sys.b @ k @ dy,
        c=cy,
        d=dy,
    )


def simulate_zoh(sys, inputs, dt, x0=None):
    """Simulate the system under zero-order-hold inputs.

    ``inputs`` has shape (steps, m); the discrete update is exact
    (matrix exponential of the augmented system).  Returns
    ``(states, outputs)`` with shapes (steps + 1, n) and (steps, m);
    outputs are sampled at the left endpoint of each hold interval.
    """
    u = np.asarray(inputs, dtype=float)
    steps = u.shape[0]
    n, m = sys.n, sys.m
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    states = np.zeros((steps + 1, n))
    outputs = np.zeros((steps, m))
    if n == 0:
        outputs = u @ sys.d.T
        return states, outputs
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = sys.a * dt
    aug[:n, n:] = sys.b * dt
    big = scipy.linalg.expm(aug)
    ad, bd = big[:n, :n], big[:n, n:]
    states[0] = x
    for k in range(steps):
        outputs[k] = sys.c @ x + sys.d @ u[k]
        x = ad @ x + bd @ u[k]
        states[k + 1] = x
    return states, outputs


def golden_section_min(fun, lo, hi, rel_tol=1e-6, max_iter=200):
    """Golden-section minimization of a unimodal scalar function."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if (b - a) <= rel_tol * max(abs(a), abs(b), 1.0):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    xs = (a + b) / 2.0
    return xs, fun(xs)


def _index_samples(sys, kind):
    if kind == "ifpm":
        return lambda w: np.asarray(ifpm_sample(sys, w))
    if kind == "ofpm":
        return lambda w: np.asarray(ofpm_sample(sys, w))
    raise ValueError("kind must be 'ifpm' or 'ofpm'")


def scalar_index_freq(sys, grid=None, kind="ifpm"):
    """Scalar passivity index from a refined frequency sweep.

    Sweeps ``lambda_min(H(w))`` (or ``lambda_min(K(w))`` for
    ``kind="ofpm"``) over the grid, always including the w -> inf sample,
    then refines around the coarse minimizer by golden section to 1e-6
    relative in w.  Returns ``(value, w_star, v_star)`` where ``v_star``
    is the minimizing unit eigenvector.
    """
    if not is_hurwitz(sys):
        raise ValueError("scalar index sweep requires a Hurwitz system")
    grid = grid or default_grid()
    sample = _index_samples(sys, kind)

    def lam_min(w):
        return float(np.linalg.eigvalsh(sample(w))[0])

    finite = grid.finite
    if kind == "ifpm":
        vals = np.linalg.eigvalsh(
            _herm(freq_response_many(sys, finite))
        )[:, 0]
    else:
        gs = freq_response_many(sys, finite)
        conds = np.linalg.cond(gs)
        if np.any(conds > COND_MAX):
            raise NearSingularError(
                "G(jw) singular on the sweep grid; use the LMI route"
            )
        vals = np.linalg.eigvalsh(_herm(np.linalg.inv(gs)))[:, 0]
    i = int(np.argmin(vals))
    best_w, best_val = float(finite[i]), float(vals[i])
    lo = finite[i - 1] if i > 0 else finite[i]
    hi = finite[i + 1] if i + 1 < finite.size else finite[i]
    if hi > lo:
        w_ref, v_ref = golden_section_min(lam_min, lo, hi)
        if v_ref < best_val:
            best_w, best_val = float(w_ref), float(v_ref)
    # w -> inf sample
    try:
        tail = sample(np.inf)
        lam_inf = float(np.linalg.eigvalsh(tail)[0])
        if lam_inf < best_val:
            best_w, best_val = np.inf, lam_inf
    except NearSingularError:
        pass  # strictly proper system: no finite K(inf); LMI route covers it
    mat = sample(best_w)
    values, vectors = np.linalg.eigh(np.asarray(mat))
    return best_val, best_w, vectors[:, 0]


def _herm(stack):
    return (stack + stack.conj().transpose(0, 2, 1)) / 2.0
