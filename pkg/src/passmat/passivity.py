"""Matrix-valued passivity indices of LTI systems.

Builds the passivity LMI in the state-space data, solves it under the two
selection principles (trace maximization and minimum-eigenvalue
maximization), derives scalar indices, and verifies certificates against
frequency-domain samples.

The LMI, with storage V(x) = x^T (P/2) x, reads

    W = [[ P A + A^T P + 2 C^T Xi C,   P B - C^T + 2 C^T Xi D        ],
         [ B^T P - C + 2 D^T Xi C,    -(D + D^T) + 2 Phi + 2 D^T Xi D]]  < 0

with P > 0.  Any solution provides a lower bound Phi of the family
{H(w)} (and Xi of {K(w)}) in the Loewner order; the selection principles
pick representative maximal-ish members of that lower-bound set.
Strictness is encoded as W <= -eps*I, P >= eps*I with
eps = 1e-7 * (data scale), so reported indices are conservative by
O(eps).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from . import lti, sdpcore
from .lti import StateSpace, default_grid, freq_response_many, golden_section_min
from .symmat import DimensionError, hermitian_part

__all__ = [
    "CertKind",
    "Provenance",
    "PassivityCertificate",
    "InfeasibleIndexError",
    "SolverFailure",
    "assemble_lmi",
    "compute_ifpm",
    "compute_ofpm",
    "compute_ifofp",
    "scalar_indices",
    "VerificationReport",
    "verify_certificate",
    "kyp_feasibility_margin",
    "static_ifpm",
    "sector_check_static",
]

_EPS_FACTOR = 1e-7
_TRACE_TIEBREAK = 1e-4  # lexicographic approximation for the min-eig objective


class InfeasibleIndexError(RuntimeError):
    """No finite passivity matrix exists at the requested strictness."""


class SolverFailure(RuntimeError):
    """The interior-point solver failed to converge."""


class CertKind(enum.Enum):
    IFP = "ifp"
    OFP = "ofp"
    IFOFP = "ifofp"


class Provenance(enum.Enum):
    LMI_TRACE_MAX = "lmi_trace_max"
    LMI_MIN_EIG_MAX = "lmi_min_eig_max"
    FREQUENCY_SWEEP = "frequency_sweep"
    DECLARED = "declared"
    COMPOSED = "composed"


@dataclass(frozen=True, eq=False)
class PassivityCertificate:
    """A pair (Phi, Xi) asserting the dissipation inequality

        Vdot <= u^T y - u^T Phi u - y^T Xi y

    for the system it was computed from.  ``storage`` (optional) is the
    quadratic storage matrix with V(x) = x^T storage x.
    """

    phi: np.ndarray
    xi: np.ndarray
    kind: CertKind
    provenance: Provenance
    storage: np.ndarray | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        xi = np.asarray(self.xi, dtype=float)
        if phi.shape != xi.shape or phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise DimensionError("phi and xi must be square of equal size")
        phi = (phi + phi.T) / 2.0
        xi = (xi + xi.T) / 2.0
        if self.kind is CertKind.IFP and np.abs(xi).max() > 0:
            raise ValueError("IFP certificate must have xi = 0")
        if self.kind is CertKind.OFP and np.abs(phi).max() > 0:
            raise ValueError("OFP certificate must have phi = 0")
        storage = self.storage
        if storage is not None:
            storage = np.asarray(storage, dtype=float)
            storage = (storage + storage.T) / 2.0
            if np.linalg.eigvalsh(storage)[0] < -1e-8 * max(
                1.0, np.linalg.norm(storage)
            ):
                raise ValueError("storage matrix must be positive semidefinite")
            storage.setflags(write=False)
        phi.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "storage", storage)

    @property
    def m(self):
        return self.phi.shape[0]

    def to_json(self):
        return json.dumps(
            {
                "phi": self.phi.tolist(),
                "xi": self.xi.tolist(),
                "kind": self.kind.value,
                "provenance": self.provenance.value,
                "storage": None if self.storage is None else self.storage.tolist(),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(
            phi=np.asarray(data["phi"], dtype=float),
            xi=np.asarray(data["xi"], dtype=float),
            kind=CertKind(data["kind"]),
            provenance=Provenance(data["provenance"]),
            storage=None
            if data.get("storage") is None
            else np.asarray(data["storage"], dtype=float),
        )


def _sym_basis(dim):
    """Basis of the symmetric matrices: diagonal units then unit-pair
    off-diagonal elements, matching the variable packing used below."""
    basis = []
    for i in range(dim):
        e = np.zeros((dim, dim))
        e[i, i] = 1.0
        basis.append(e)
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim))
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
    return basis


def _sym_unpack(dim, values):
    mat = np.zeros((dim, dim))
    idx = 0
    for i in range(dim):
        mat[i, i] = values[idx]
        idx += 1
    for i in range(dim):
        for j in range(i + 1, dim):
            mat[i, j] = mat[j, i] = values[idx]
            idx += 1
    return mat


def _w_blocks(sys, p_mat, phi_mat, xi_mat):
    """Evaluate Eq.-style W for given (P, Phi, Xi)."""
    a, b, c, d = sys.a, sys.b, sys.c, sys.d
    w11 = p_mat @ a + a.T @ p_mat + 2.0 * c.T @ xi_mat @ c
    w12 = p_mat @ b - c.T + 2.0 * c.T @ xi_mat @ d
    w22 = -(d + d.T) + 2.0 * phi_mat + 2.0 * d.T @ xi_mat @ d
    return np.block([[w11, w12], [w12.T, w22]])


def lmi_epsilon(sys):
    """Strictness shift: 1e-7 times the data scale of the LMI blocks."""
    scale = max(
        np.linalg.norm(mat, "fro")
        for mat in (sys.a, sys.b, sys.c, sys.d, np.eye(sys.m))
    )
    return _EPS_FACTOR * scale


def assemble_lmi(sys, mode=CertKind.IFP, objective="trace", weights=None,
                 fixed_phi=None, fixed_xi=None, epigraph=None):
    """Assemble the passivity LMI as an :class:`sdpcore.SdpProblem`.

    Decision variables are the free entries of P (always), of Phi and/or
    Xi according to ``mode`` (setting Xi = 0 gives the IFP case, Phi = 0
    the OFP case), and an epigraph variable t when
    ``objective="mineig"``.  Constraints: ``P >= eps*I``, ``-W >= eps*I``,
    and for the min-eigenvalue objective ``Phi - t I >= 0`` (resp. Xi).

    ``objective="trace"`` maximizes tr(Phi) + tr(Xi) over the free index
    matrices (optionally weighted); ``objective="mineig"`` maximizes t
    plus a small trace tie-break (weight 1e-4) approximating the
    lexicographic secondary objective.  ``fixed_phi`` / ``fixed_xi`` pin
    an index matrix to a constant (used for feasibility cross-checks);
    ``epigraph`` adds variable t with ``-W - t*I >= 0`` instead of the
    eps shift, turning the problem into a maximal-slack feasibility
    measure.

    Returns ``(problem, unpack)`` where ``unpack(x)`` maps a solution
    vector to a dict with keys "p", "phi", "xi" (and "t" if present).
    """
    if not lti.is_hurwitz(sys):
        raise InfeasibleIndexError("system is not Hurwitz")
    if sys.n < 1:
        raise DimensionError("LMI route needs at least one state")
    mode = CertKind(mode)
    n, m = sys.n, sys.m
    eps = lmi_epsilon(sys)

    free_phi = fixed_phi is None and mode in (CertKind.IFP, CertKind.IFOFP)
    free_xi = fixed_xi is None and mode in (CertKind.OFP, CertKind.IFOFP)
    phi0 = np.zeros((m, m)) if fixed_phi is None else np.asarray(fixed_phi, float)
    xi0 = np.zeros((m, m)) if fixed_xi is None else np.asarray(fixed_xi, float)

    p_basis = _sym_basis(n)
    m_basis = _sym_basis(m)
    num_p = len(p_basis)
    num_phi = len(m_basis) if free_phi else 0
    num_xi = len(m_basis) if free_xi else 0
    use_t = objective == "mineig" or epigraph is not None
    k = num_p + num_phi + num_xi + (1 if use_t else 0)

    zeros_m = np.zeros((m, m))
    zeros_n = np.zeros((n, n))

    # Block 1: -W - eps*I >= 0 (or -W - t*I >= 0 in epigraph mode).
    shift = 0.0 if epigraph is not None else eps
    f0_w = -_w_blocks(sys, zeros_n, phi0, xi0) - shift * np.eye(n + m)
    w_const = _w_blocks(sys, zeros_n, zeros_m, zeros_m)
    mats_w = []
    for e in p_basis:
        # subtract the constant part of W so only the linear term remains
        mats_w.append(-(_w_blocks(sys, e, zeros_m, zeros_m) - w_const))
    if free_phi:
        for e in m_basis:
            w = np.zeros((n + m, n + m))
            w[n:, n:] = 2.0 * e
            mats_w.append(-w)
    if free_xi:
        for e in m_basis:
            w11 = 2.0 * sys.c.T @ e @ sys.c
            w12 = 2.0 * sys.c.T @ e @ sys.d
            w22 = 2.0 * sys.d.T @ e @ sys.d
            mats_w.append(-np.block([[w11, w12], [w12.T, w22]]))
    if use_t:
        mats_w.append(
            -np.eye(n + m) if epigraph is not None else np.zeros((n + m, n + m))
        )

    # Block 2: P - eps*I >= 0.
    f0_p = -eps * np.eye(n)
    mats_p = [e for e in p_basis]
    mats_p += [np.zeros((n, n))] * (num_phi + num_xi + (1 if use_t else 0))

    blocks = [
        sdpcore.SdpBlock(f0=f0_w, mats=mats_w),
        sdpcore.SdpBlock(f0=f0_p, mats=mats_p),
    ]

    # Block 3 (min-eig objective): index matrix - t*I >= 0 for every free
    # index matrix (both of them in the joint IF-OFP case).
    if objective == "mineig" and epigraph is None:
        for target in ("phi", "xi"):
            if target == "phi" and not free_phi:
                continue
            if target == "xi" and not free_xi:
                continue
            mats_e = [np.zeros((m, m))] * num_p
            if free_phi:
                mats_e += (
                    [e for e in m_basis]
                    if target == "phi"
                    else [zeros_m] * num_phi
                )
            if free_xi:
                mats_e += (
                    [e for e in m_basis]
                    if target == "xi"
                    else [zeros_m] * num_xi
                )
            mats_e.append(-np.eye(m))
            blocks.append(sdpcore.SdpBlock(f0=np.zeros((m, m)), mats=mats_e))

    c = np.zeros(k)
    w_phi, w_xi = (1.0, 1.0) if weights is None else weights
    trace_weight = 1.0 if objective == "trace" else _TRACE_TIEBREAK
    if free_phi:
        c[num_p : num_p + m] = trace_weight * w_phi
    if free_xi:
        c[num_p + num_phi : num_p + num_phi + m] = trace_weight * w_xi
    if use_t:
        c[-1] = 1.0

    def unpack(x):
        out = {"p": _sym_unpack(n, x[:num_p])}
        pos = num_p
        out["phi"] = (
            _sym_unpack(m, x[pos : pos + num_phi]) if free_phi else phi0.copy()
        )
        pos += num_phi
        out["xi"] = (
            _sym_unpack(m, x[pos : pos + num_xi]) if free_xi else xi0.copy()
        )
        if use_t:
            out["t"] = float(x[-1])
        return out

    return sdpcore.SdpProblem(c=c, blocks=blocks), unpack


def _solve_index(sys, mode, objective, weights=None):
    problem, unpack = assemble_lmi(sys, mode, objective, weights)
    sol = sdpcore.solve(problem)
    if sol.status is sdpcore.SdpStatus.INFEASIBLE:
        raise InfeasibleIndexError(
            "no finite passivity matrix at the requested strictness"
        )
    if sol.status is not sdpcore.SdpStatus.OPTIMAL:
        raise SolverFailure(
            f"SDP solver returned {sol.status.value}: {sol.message}"
        )
    parts = unpack(sol.x)
    provenance = (
        Provenance.LMI_TRACE_MAX
        if objective == "trace"
        else Provenance.LMI_MIN_EIG_MAX
    )
    # LMI storage P corresponds to V = x^T (P/2) x.
    return PassivityCertificate(
        phi=parts["phi"],
        xi=parts["xi"],
        kind=mode,
        provenance=provenance,
        storage=parts["p"] / 2.0,
    )


def compute_ifpm(sys, principle="trace"):
    """Input-feedforward passivity matrix under the given selection
    principle ("trace" or "mineig")."""
    return _solve_index(sys, CertKind.IFP, principle)


def compute_ofpm(sys, principle="trace"):
    """Output-feedback passivity matrix under the given selection
    principle ("trace" or "mineig")."""
    return _solve_index(sys, CertKind.OFP, principle)


def compute_ifofp(sys, weights=None, principle="mineig"):
    """Joint IF-OFP certificate.

    The default principle maximizes the common minimum eigenvalue of Phi
    and Xi (plus the trace tie-break), which is always bounded.  The
    unweighted trace objective can be unbounded for strongly non-passive
    plants (Phi and Xi trade off against each other); supply ``weights``
    when using ``principle="trace"``.
    """
    return _solve_index(sys, CertKind.IFOFP, principle, weights)


def scalar_indices(cert):
    """Scalar reduction ``(lambda_min(Phi), lambda_min(Xi))``."""
    return (
        float(np.linalg.eigvalsh(cert.phi)[0]),
        float(np.linalg.eigvalsh(cert.xi)[0]),
    )


@dataclass
class VerificationReport:
    ifp_margin: float
    ofp_margin: float
    worst_omega: float
    worst_direction: np.ndarray
    qsr_margin: float
    ofp_route: str = "frequency"

    def margin_for(self, kind):
        if kind is CertKind.IFP:
            return self.ifp_margin
        if kind is CertKind.OFP:
            return self.ofp_margin
        return self.qsr_margin


def _sweep_min(sys, grid, score):
    """Minimize ``score(w, G(jw))`` over the refined grid; returns
    (value, w, direction_eigvec)."""
    finite = grid.finite
    gs = freq_response_many(sys, finite)
    vals = np.array([score(g)[0] for g in gs])
    i = int(np.argmin(vals))
    best_w = float(finite[i])

    def fun(w):
        g = lti.freq_response(sys, w)
        return score(g)[0]

    lo = finite[i - 1] if i > 0 else finite[i]
    hi = finite[i + 1] if i + 1 < finite.size else finite[i]
    best_val = float(vals[i])
    if hi > lo:
        w_ref, v_ref = golden_section_min(fun, lo, hi)
        if v_ref < best_val:
            best_w, best_val = float(w_ref), float(v_ref)
    g_inf = lti.freq_response(sys, np.inf)
    try:
        v_inf = score(g_inf)[0]
        if v_inf < best_val:
            best_w, best_val = np.inf, float(v_inf)
    except np.linalg.LinAlgError:
        pass
    _, direction = score(lti.freq_response(sys, best_w))
    return best_val, best_w, direction


def verify_certificate(sys, cert, grid=None):
    """Check a certificate against frequency-domain samples.

    ``ifp_margin``: min over the refined grid of
    ``lambda_min(H(w) - Phi)``; ``ofp_margin``: same with
    ``K(w) - Xi`` (falls back to the LMI-residual route, flagged in
    ``ofp_route``, when D is singular); ``qsr_margin``: joint margin
    ``lambda_min(H(w) - Phi - G^H Xi G)``, the frequency-domain test of
    the full (Phi, Xi) dissipation inequality.  Margins may be negative;
    the worst frequency/direction refer to the margin matching the
    certificate kind.
    """
    grid = grid or default_grid()
    phi, xi = cert.phi, cert.xi

    def score_ifp(g):
        h = np.asarray(hermitian_part(g)) - phi
        vals, vecs = np.linalg.eigh(h)
        return float(vals[0]), vecs[:, 0]

    def score_qsr(g):
        h = (
            np.asarray(hermitian_part(g))
            - phi
            - g.conj().T @ xi.astype(complex) @ g
        )
        vals, vecs = np.linalg.eigh((h + h.conj().T) / 2.0)
        return float(vals[0]), vecs[:, 0]

    ifp_margin, w_ifp, dir_ifp = _sweep_min(sys, grid, score_ifp)
    qsr_margin, w_qsr, dir_qsr = _sweep_min(sys, grid, score_qsr)

    ofp_route = "frequency"
    d_cond = np.linalg.cond(sys.d) if sys.m else np.inf
    if np.isfinite(d_cond) and d_cond <= 1e10:

        def score_ofp(g):
            gi = np.linalg.inv(g)
            h = np.asarray(hermitian_part(gi)) - xi
            vals, vecs = np.linalg.eigh(h)
            return float(vals[0]), vecs[:, 0]

        ofp_margin, w_ofp, dir_ofp = _sweep_min(sys, grid, score_ofp)
    else:
        ofp_route = "lmi"
        ofp_margin = kyp_feasibility_margin(sys, phi=None, xi=xi)
        w_ofp, dir_ofp = np.nan, np.full(sys.m, np.nan)

    if cert.kind is CertKind.IFP:
        worst_w, worst_dir = w_ifp, dir_ifp
    elif cert.kind is CertKind.OFP:
        worst_w, worst_dir = w_ofp, dir_ofp
    else:
        worst_w, worst_dir = w_qsr, dir_qsr
    return VerificationReport(
        ifp_margin=ifp_margin,
        ofp_margin=ofp_margin,
        worst_omega=worst_w,
        worst_direction=worst_dir,
        qsr_margin=qsr_margin,
        ofp_route=ofp_route,
    )


def kyp_feasibility_margin(sys, phi=None, xi=None):
    """Maximal slack t with ``-W - t*I >= 0, P >= eps*I`` for fixed index
    matrices.  Positive t means the LMI with those matrices is strictly
    feasible; the sign of t is the feasibility verdict and its magnitude
    is in the units of the W blocks."""
    m = sys.m
    problem, unpack = assemble_lmi(
        sys,
        mode=CertKind.IFOFP,
        objective="feasibility",
        fixed_phi=np.zeros((m, m)) if phi is None else phi,
        fixed_xi=np.zeros((m, m)) if xi is None else xi,
        epigraph=True,
    )
    sol = sdpcore.solve(problem)
    if sol.status not in (
        sdpcore.SdpStatus.OPTIMAL,
        sdpcore.SdpStatus.MAX_ITER,
    ):
        raise SolverFailure(
            f"feasibility solve returned {sol.status.value}: {sol.message}"
        )
    return unpack(sol.x)["t"]


def static_ifpm(gain):
    """Certificate of a static linear map y = K u: since
    u^T K u = u^T sym(K) u, the map is IFP with Phi = sym(K)."""
    k = np.asarray(gain, dtype=float)
    phi = (k + k.T) / 2.0
    return PassivityCertificate(
        phi=phi,
        xi=np.zeros_like(phi),
        kind=CertKind.IFP,
        provenance=Provenance.DECLARED,
    )


def sector_check_static(gain, bound, tol=1e-9):
    """True iff the static map y = K u lies in the sector [bound, inf],
    i.e. ``sym(K) - bound`` is positive semidefinite."""
    k = np.asarray(gain, dtype=float)
    sym_k = (k + k.T) / 2.0
    diff = sym_k - np.asarray(bound, dtype=float)
    return bool(np.linalg.eigvalsh((diff + diff.T) / 2.0)[0] >= -tol)
