"""Certificate algebra for interconnected passive systems.

Given per-subsystem certificates (Phi_i, Xi_i), these routines derive
certificates and stability verdicts for parallel and negative-feedback
interconnections, feedback passivation with a static or dynamic
compensator, finite-gain L2 stability with an explicit gain constant, and
Lyapunov stability, plus the passivation-effort comparison between
matrix-valued and scalar compensation.

Comparisons use the shared tolerance policy: strict conditions require a
margin above +tol, semidefinite conditions a margin above -tol.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .passivity import CertKind, PassivityCertificate, Provenance
from .symmat import DimensionError

__all__ = [
    "InterconnectionVerdict",
    "parallel_cert",
    "feedback_cert",
    "default_feedback_shifts",
    "feedback_proof_blocks",
    "passivation_check",
    "l2_gain_bound",
    "l2_stability_check",
    "lyapunov_stability_check",
    "passivation_effort",
]

_TOL = 1e-9


@dataclass
class InterconnectionVerdict:
    """Outcome of an interconnection/stability test.

    ``margin`` is the minimum eigenvalue of the binding condition matrix;
    ``satisfied`` is equivalent to ``margin >= -tol`` (strict conditions
    use ``margin > +tol``).  ``composed`` carries the certificate of the
    interconnected system when the theorem provides one.
    """

    satisfied: bool
    margin: float
    binding_condition: str
    composed: PassivityCertificate | None = None
    gain_estimate: float | None = None

    def to_json(self):
        return json.dumps(
            {
                "satisfied": bool(self.satisfied),
                "margin": float(self.margin),
                "binding_condition": self.binding_condition,
                "gain_estimate": self.gain_estimate,
                "composed": None
                if self.composed is None
                else json.loads(self.composed.to_json()),
            },
            indent=2,
        )


def _lam_min(mat):
    return float(np.linalg.eigvalsh((mat + mat.T) / 2.0)[0])


def _check_dims(c1, c2):
    if c1.m != c2.m:
        raise DimensionError(
            f"certificate dimensions differ: {c1.m} vs {c2.m}"
        )


def parallel_cert(c1, c2):
    """Certificate of the parallel connection (shared input, summed
    output): Phi = Phi1 + Phi2 and, when both Xi_i are positive definite,
    Xi = (Xi1^-1 + Xi2^-1)^-1 (the matrix harmonic mean).  If either
    Xi_i is the zero matrix only the IFP part survives (Xi = 0).
    Indefinite nonzero Xi_i have no valid harmonic-mean composition and
    raise ValueError.
    """
    _check_dims(c1, c2)
    phi = c1.phi + c2.phi
    zero1 = np.abs(c1.xi).max() == 0.0
    zero2 = np.abs(c2.xi).max() == 0.0
    if zero1 or zero2:
        xi = np.zeros_like(phi)
    else:
        if _lam_min(c1.xi) <= _TOL or _lam_min(c2.xi) <= _TOL:
            raise ValueError(
                "parallel OFP composition needs positive definite Xi "
                "matrices (or exactly zero ones)"
            )
        xi = np.linalg.inv(np.linalg.inv(c1.xi) + np.linalg.inv(c2.xi))
        xi = (xi + xi.T) / 2.0
    return PassivityCertificate(
        phi=phi, xi=xi, kind=CertKind.IFOFP, provenance=Provenance.COMPOSED
    )


def default_feedback_shifts(c1, c2, rel=1e-3):
    """Default (M1, M2) for :func:`feedback_cert`: M_i = Phi_i - delta*I
    with delta = rel * ||Phi_i||_2 (floored at rel for zero Phi)."""
    shifts = []
    for cert in (c1, c2):
        norm = np.linalg.norm(cert.phi, 2)
        delta = rel * (norm if norm > 0.0 else 1.0)
        shifts.append(cert.phi - delta * np.eye(cert.m))
    return shifts[0], shifts[1]


def feedback_cert(c1, c2, m1=None, m2=None):
    """Certificate of the negative feedback interconnection over the
    stacked ports u = (u1, u2), y = (y1, y2).

    The composed system is IF-OFP with Phi = diag(M1, M2) and
    Xi = diag(N1, N2) where the N_i take their extremal values

        N1 = Xi1 - Phi2 (Phi2 - M2)^-1 M2
        N2 = Xi2 - Phi1 (Phi1 - M1)^-1 M1

    for caller-chosen M_i strictly below Phi_i (defaults from
    :func:`default_feedback_shifts`).  The returned member is the
    N_i-extremal one; smaller N_i are also valid.
    """
    _check_dims(c1, c2)
    m = c1.m
    if m1 is None or m2 is None:
        d1, d2 = default_feedback_shifts(c1, c2)
        m1 = d1 if m1 is None else m1
        m2 = d2 if m2 is None else m2
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    for label, phi, m_mat in (("M1", c1.phi, m1), ("M2", c2.phi, m2)):
        gap = _lam_min(phi - m_mat)
        if gap <= _TOL:
            raise ValueError(
                f"{label} must satisfy {label} < Phi strictly "
                f"(margin {gap:.2e})"
            )
    # Phi (Phi - M)^-1 M == M + M (Phi - M)^-1 M, which is symmetric; the
    # latter form keeps it exactly so under floating point.
    def correction(phi, m_mat):
        x = np.linalg.solve(phi - m_mat, m_mat)
        out = m_mat + m_mat @ x
        return (out + out.T) / 2.0

    n1 = c1.xi - correction(c2.phi, m2)
    n2 = c2.xi - correction(c1.phi, m1)
    zero = np.zeros((m, m))
    phi = np.block([[m1, zero], [zero, m2]])
    xi = np.block([[n1, zero], [zero, n2]])
    return PassivityCertificate(
        phi=phi, xi=xi, kind=CertKind.IFOFP, provenance=Provenance.COMPOSED
    )


def feedback_proof_blocks(c1, c2, m1, m2, n1, n2):
    """The two block matrices whose positive semidefiniteness proves the
    feedback composition: with the constraint family satisfied strictly,

        E = [[Phi1 - M1, -Phi1], [-Phi1, Xi2 + Phi1 - N2]]
        F = [[Phi2 - M2,  Phi2], [ Phi2, Xi1 + Phi2 - N1]]

    are positive semidefinite.
    """
    e_blk = np.block(
        [
            [c1.phi - m1, -c1.phi],
            [-c1.phi, c2.xi + c1.phi - n2],
        ]
    )
    f_blk = np.block(
        [
            [c2.phi - m2, c2.phi],
            [c2.phi, c1.xi + c2.phi - n1],
        ]
    )
    return e_blk, f_blk


def passivation_check(c1, c2, tol=_TOL):
    """Feedback passivation of subsystem 1 by subsystem 2 (u2 = 0).

    The closed loop from u1 to y1 is passive when Phi2 + Xi1 >= 0,
    Xi2 >= 0 and Phi1 >= 0; the verdict margin is
    lambda_min(Phi2 + Xi1).  When additionally Phi1 + Xi2 > 0 the closed
    loop carries the composed certificate with OFPM Xi = Phi2 + Xi1 and
    IFPM Phi = Xi2 (Phi1 + Xi2)^-1 Phi1 (the dissipation inequality pairs
    Phi2 + Xi1 with the output and the other term with the input).
    """
    _check_dims(c1, c2)
    margin = _lam_min(c2.phi + c1.xi)
    cond2 = _lam_min(c2.xi)
    cond1 = _lam_min(c1.phi)
    satisfied = margin >= -tol and cond2 >= -tol and cond1 >= -tol
    binding = "phi2+xi1"
    if cond2 < margin or cond1 < margin:
        binding = "xi2" if cond2 <= cond1 else "phi1"
    composed = None
    if satisfied:
        xi_cl = c2.phi + c1.xi
        mix = _lam_min(c1.phi + c2.xi)
        if mix > tol:
            # Xi2 (Phi1 + Xi2)^-1 Phi1 == Xi2 - Xi2 (Phi1 + Xi2)^-1 Xi2,
            # the symmetric form
            x = np.linalg.solve(c1.phi + c2.xi, c2.xi)
            phi_cl = c2.xi - c2.xi @ x
            phi_cl = (phi_cl + phi_cl.T) / 2.0
        else:
            phi_cl = np.zeros_like(xi_cl)
        composed = PassivityCertificate(
            phi=phi_cl,
            xi=xi_cl,
            kind=CertKind.IFOFP,
            provenance=Provenance.COMPOSED,
        )
    return InterconnectionVerdict(
        satisfied=bool(satisfied),
        margin=margin,
        binding_condition=binding,
        composed=composed,
    )


def l2_gain_bound(cert):
    """L2-gain bound 1 / lambda_min(Xi) of an output strictly passive
    system (requires Xi positive definite)."""
    lam = _lam_min(cert.xi)
    if lam <= _TOL:
        raise ValueError("L2 gain bound needs Xi positive definite")
    return 1.0 / lam


def l2_stability_check(c1, c2, tol=_TOL):
    """Finite-gain L2 stability of the feedback interconnection.

    Satisfied iff Phi1 + Xi2 > 0 and Phi2 + Xi1 > 0 (strict).  The gain
    estimate is sqrt((b^2 + 2 a c) / a) with a = lambda_min(L),
    b = ||N||_2, c = ||M||_2 for the block matrices

        L = diag(Xi1 + Phi2, Xi2 + Phi1)
        N = [[I, 2 Phi1], [-2 Phi2, I]]
        M = diag(Phi1, -Phi2)
    """
    _check_dims(c1, c2)
    m = c1.m
    eye = np.eye(m)
    lam1 = _lam_min(c1.phi + c2.xi)
    lam2 = _lam_min(c2.phi + c1.xi)
    margin = min(lam1, lam2)
    satisfied = lam1 > tol and lam2 > tol
    zero = np.zeros((m, m))
    l_blk = np.block([[c1.xi + c2.phi, zero], [zero, c2.xi + c1.phi]])
    n_blk = np.block([[eye, 2.0 * c1.phi], [-2.0 * c2.phi, eye]])
    m_blk = np.block([[c1.phi, zero], [zero, -c2.phi]])
    gain = None
    if satisfied:
        a = _lam_min(l_blk)
        b = np.linalg.norm(n_blk, 2)
        c = np.linalg.norm(m_blk, 2)
        gain = float(np.sqrt((b * b + 2.0 * a * c) / a))
    return InterconnectionVerdict(
        satisfied=bool(satisfied),
        margin=margin,
        binding_condition="phi1+xi2" if lam1 <= lam2 else "phi2+xi1",
        gain_estimate=gain,
    )


def lyapunov_stability_check(c1, c2, zso1, zso2, tol=_TOL):
    """Asymptotic stability of the zero-input feedback loop.

    Satisfied iff Phi1 + Xi2 >= 0, Phi2 + Xi1 >= 0 and both subsystems
    are zero-state observable (flags supplied by the caller; static maps
    count as observable by convention).
    """
    _check_dims(c1, c2)
    lam1 = _lam_min(c1.phi + c2.xi)
    lam2 = _lam_min(c2.phi + c1.xi)
    margin = min(lam1, lam2)
    satisfied = margin >= -tol and bool(zso1) and bool(zso2)
    binding = "phi1+xi2" if lam1 <= lam2 else "phi2+xi1"
    if not (zso1 and zso2):
        binding = "zero_state_observability"
    return InterconnectionVerdict(
        satisfied=bool(satisfied), margin=margin, binding_condition=binding
    )


def passivation_effort(xi1, tol=_TOL):
    """Compare matrix-valued and scalar passivation effort for a system
    with OFPM shortage ``xi1``.

    The minimal matrix compensation is ``phi_matrix = -xi1``; the scalar
    route enforces ``phi_scalar = -lambda_min(xi1) * I``.  Returns
    (phi_matrix, phi_scalar, effort_gap) with
    ``effort_gap = phi_scalar - phi_matrix`` always positive
    semidefinite, and zero exactly when xi1 is a multiple of the
    identity.  Raises ValueError when xi1 is strictly positive definite
    (no shortage to compensate).
    """
    xi = np.asarray(xi1, dtype=float)
    xi = (xi + xi.T) / 2.0
    lam = _lam_min(xi)
    if lam > tol:
        raise ValueError(
            "xi1 is positive definite; there is no passivity shortage "
            "to compensate"
        )
    phi_matrix = -xi
    phi_scalar = -lam * np.eye(xi.shape[0])
    return phi_matrix, phi_scalar, phi_scalar - phi_matrix
