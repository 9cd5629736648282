"""Single-machine infinite-bus case study.

Third-order (flux-decay) synchronous generator against an ideal voltage
source:

    delta_dot          = w0 * omega
    Tj   * omega_dot   = Pm - Pe - D * omega
    Td0p * Eqp_dot     = Ef - Eqp - (xd - xdp) * Id

with the algebraic relations Eqp = Uq + xdp * Id and 0 = Ud - xq * Iq.
The generator terminal is tied directly to the infinite bus (zero
external reactance), giving Ud = U sin(delta), Uq = U cos(delta); the
benchmark's line parameters are not part of the model here, which can
shift region boundaries but preserves the qualitative structure.

Port convention.  Inputs are u = (Pm, Ef) and the passive outputs are
the *rates* of the generalized coordinates,

    y = ( w0 * omega,  Eqp_dot / (xd - xdp) ),

i.e. the second output is the rate of Eqp/(xd - xdp).  With the
classical flux-decay energy function as storage, the dissipation
identity

    Hdot = (u - u0)^T y - y^T Xi_gen y,
    Xi_gen = diag(D / w0, Td0p * (xd - xdp))

holds exactly in deviations around the operating point, which is what
makes Xi_gen a valid output-feedback passivity matrix and keeps the
certified gain regions inside the small-signal stable set.  (With the
coordinate itself, Eqp/(xd - xdp), as second output, no storage function
satisfies the inequality and the certified region would overlap the
unstable one.)

Static output feedback acts on output deviations, u = u0 - K*y, so the
open-loop equilibrium is preserved for every gain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .passivity import CertKind, PassivityCertificate, Provenance

__all__ = [
    "SmibParams",
    "SmibState",
    "Trajectory",
    "algebraic_vars",
    "dynamics",
    "output",
    "hamiltonian",
    "generator_ofpm",
    "equilibrium",
    "closed_loop_field",
    "linearize_closed_loop",
    "fd_jacobian",
    "small_signal_stable",
    "simulate",
    "region_sweep",
    "paper_params",
]


@dataclass(frozen=True)
class SmibParams:
    """Generator and network parameters (per unit except time constants)."""

    w0: float = 2.0 * math.pi * 50.0
    tj: float = 15.0
    damping: float = 8.0
    td0p: float = 5.0
    xd: float = 0.5
    xq: float = 0.5
    xdp: float = 0.35
    u_bus: float = 1.0
    pm0: float = 0.8
    ef0: float = 1.2

    def __post_init__(self):
        if not (self.xd > self.xdp > 0.0):
            raise ValueError("need xd > xdp > 0")
        if min(self.xq, self.tj, self.td0p, self.w0, self.u_bus) <= 0.0:
            raise ValueError("xq, tj, td0p, w0, u_bus must be positive")

    @property
    def kappa(self):
        """Flux-decay coupling constant xd - xdp."""
        return self.xd - self.xdp

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(**data)

    def to_json(self):
        return json.dumps(
            {
                "w0": self.w0,
                "tj": self.tj,
                "damping": self.damping,
                "td0p": self.td0p,
                "xd": self.xd,
                "xq": self.xq,
                "xdp": self.xdp,
                "u_bus": self.u_bus,
                "pm0": self.pm0,
                "ef0": self.ef0,
            },
            indent=2,
        )


def paper_params():
    """The benchmark parameter set used throughout the case study."""
    return SmibParams()


@dataclass(frozen=True)
class SmibState:
    delta: float
    omega: float
    eqp: float

    def as_array(self):
        return np.array([self.delta, self.omega, self.eqp])

    @classmethod
    def from_array(cls, arr):
        return cls(delta=float(arr[0]), omega=float(arr[1]), eqp=float(arr[2]))


@dataclass
class Trajectory:
    """Simulated closed-loop time series."""

    times: np.ndarray
    states: np.ndarray        # (steps, 3) rows (delta, omega, eqp)
    outputs: np.ndarray       # (steps, 2) port outputs (deviations)
    inputs: np.ndarray        # (steps, 2) applied (Pm, Ef)
    hamiltonian: np.ndarray   # (steps,)
    diverged: bool = False

    def electrical_power(self, params):
        pe = np.empty(len(self.times))
        for i, row in enumerate(self.states):
            pe[i] = algebraic_vars(SmibState.from_array(row), params)["Pe"]
        return pe


def algebraic_vars(state, params):
    """Terminal voltages, currents, and electrical power at a state."""
    ud = params.u_bus * math.sin(state.delta)
    uq = params.u_bus * math.cos(state.delta)
    i_d = (state.eqp - uq) / params.xdp
    i_q = ud / params.xq
    pe = ud * i_d + uq * i_q
    return {"Ud": ud, "Uq": uq, "Id": i_d, "Iq": i_q, "Pe": pe}


def electrical_power(delta, eqp, params):
    """Closed form of Pe; equals Ud*Id + Uq*Iq identically."""
    p = params
    return (
        eqp * p.u_bus * math.sin(delta) / p.xdp
        + p.u_bus ** 2 * (p.xdp - p.xq) * math.sin(2 * delta) / (2 * p.xdp * p.xq)
    )


def dynamics(state, params, u):
    """Open-loop vector field at ``state`` under inputs ``u = (Pm, Ef)``."""
    pm, ef = u
    alg = algebraic_vars(state, params)
    ddelta = params.w0 * state.omega
    domega = (pm - alg["Pe"] - params.damping * state.omega) / params.tj
    deqp = (ef - state.eqp - params.kappa * alg["Id"]) / params.td0p
    return np.array([ddelta, domega, deqp])


def output(state, params, u):
    """Port outputs ``(w0*omega, Eqp_dot/(xd - xdp))``; needs the applied
    input because the flux rate has feedthrough from Ef."""
    deriv = dynamics(state, params, u)
    return np.array([params.w0 * state.omega, deriv[2] / params.kappa])


def equilibrium(params):
    """Operating point for the configured (Pm0, Ef0).

    The flux equation is linear in Eqp at fixed delta, which reduces the
    equilibrium to a scalar root-find for delta in (0, pi/2); a Newton
    polish brings the residual below 1e-12.
    """
    p = params

    def eq_eqp(delta):
        ratio = p.kappa / p.xdp
        return (p.ef0 + ratio * p.u_bus * math.cos(delta)) / (1.0 + ratio)

    def mismatch(delta):
        return electrical_power(delta, eq_eqp(delta), p) - p.pm0

    lo, hi = 1e-9, math.pi / 2.0 - 1e-9
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if f_lo * f_hi > 0.0:
        raise ValueError(
            "no equilibrium with delta in (0, pi/2) for these parameters"
        )
    for _ in range(200):
        mid = (lo + hi) / 2.0
        f_mid = mismatch(mid)
        if f_lo * f_mid <= 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
        if hi - lo < 1e-15:
            break
    delta = (lo + hi) / 2.0
    for _ in range(5):  # Newton polish
        h = 1e-7
        slope = (mismatch(delta + h) - mismatch(delta - h)) / (2.0 * h)
        if slope == 0.0:
            break
        delta -= mismatch(delta) / slope
    state = SmibState(delta=delta, omega=0.0, eqp=eq_eqp(delta))
    if np.linalg.norm(dynamics(state, params, (p.pm0, p.ef0))) > 1e-10:
        raise ValueError("equilibrium solve did not converge")
    return state


def hamiltonian(state, params, x_star=None):
    """Flux-decay energy function, zero at the operating point.

        H = 1/2 Tj w0 omega^2 - Pm0 (delta - delta0)
            + potential(delta, Eqp) - potential(delta0, Eqp0)

    with the potential chosen so that the dissipation identity
    ``Hdot = (u - u0)^T y - y^T Xi_gen y`` holds exactly for the port
    outputs of :func:`output`.
    """
    p = params
    if x_star is None:
        x_star = equilibrium(p)

    def potential(delta, eqp):
        return (
            -p.pm0 * delta
            - eqp * p.u_bus * math.cos(delta) / p.xdp
            - p.u_bus ** 2 * (p.xdp - p.xq) * math.cos(2 * delta) / (4 * p.xdp * p.xq)
            + p.xd * eqp ** 2 / (2.0 * p.kappa * p.xdp)
            - p.ef0 * eqp / p.kappa
        )

    kinetic = 0.5 * p.tj * p.w0 * state.omega ** 2
    return kinetic + potential(state.delta, state.eqp) - potential(
        x_star.delta, x_star.eqp
    )


def generator_ofpm(params):
    """Generator output-feedback passivity certificate
    ``Xi = diag(D/w0, Td0p*(xd - xdp))`` (exact for the port outputs)."""
    xi = np.diag([params.damping / params.w0, params.td0p * params.kappa])
    return PassivityCertificate(
        phi=np.zeros((2, 2)),
        xi=xi,
        kind=CertKind.OFP,
        provenance=Provenance.DECLARED,
    )


def closed_loop_field(params, gain, x_star=None):
    """Vector field and bookkeeping for ``u = u0 - K (y - y0)``.

    The flux-rate output feeds through Ef, so the loop is solved in
    closed form; it is well posed iff ``Td0p + K22/kappa > 0`` (the
    certificate boundary ``K22 = -Td0p*kappa`` is exactly the
    singularity).  Returns a function mapping a state array to
    ``(xdot, y_deviation, u_applied)``.
    """
    p = params
    k = np.asarray(gain, dtype=float)
    if x_star is None:
        x_star = equilibrium(p)
    loop = p.td0p + k[1, 1] / p.kappa
    if loop <= 1e-9:
        raise ValueError(
            "algebraic loop singular: need K22 > -Td0p*(xd - xdp)"
        )

    def field(arr):
        state = SmibState.from_array(arr)
        alg = algebraic_vars(state, p)
        y1 = p.w0 * state.omega
        raw = p.ef0 - k[1, 0] * y1 - state.eqp - p.kappa * alg["Id"]
        deqp = raw / loop
        y2 = deqp / p.kappa
        ef = p.ef0 - k[1, 0] * y1 - k[1, 1] * y2
        pm = p.pm0 - k[0, 0] * y1 - k[0, 1] * y2
        ddelta = p.w0 * state.omega
        domega = (pm - alg["Pe"] - p.damping * state.omega) / p.tj
        return (
            np.array([ddelta, domega, deqp]),
            np.array([y1, y2]),
            np.array([pm, ef]),
        )

    return field


def linearize_closed_loop(params, gain, x_star=None, at_state=None):
    """Analytic Jacobian of the closed-loop vector field.

    Evaluated at the equilibrium by default, or at ``at_state``.  The
    algebraic feedthrough loop is differentiated exactly;
    :func:`fd_jacobian` provides the finite-difference cross-check.
    """
    p = params
    k = np.asarray(gain, dtype=float)
    if at_state is None:
        at_state = x_star if x_star is not None else equilibrium(p)
    loop = p.td0p + k[1, 1] / p.kappa
    if loop <= 1e-9:
        raise ValueError(
            "algebraic loop singular: need K22 > -Td0p*(xd - xdp)"
        )
    s = at_state
    sin_d, cos_d = math.sin(s.delta), math.cos(s.delta)
    dpe = np.array(
        [
            s.eqp * p.u_bus * cos_d / p.xdp
            + p.u_bus ** 2 * (p.xdp - p.xq) * math.cos(2 * s.delta)
            / (p.xdp * p.xq),
            0.0,
            p.u_bus * sin_d / p.xdp,
        ]
    )
    did = np.array([p.u_bus * sin_d / p.xdp, 0.0, 1.0 / p.xdp])
    dy1 = np.array([0.0, p.w0, 0.0])
    # raw = Ef0 - K21*y1 - Eqp - kappa*Id;  Eqp_dot = raw / loop
    draw = -k[1, 0] * dy1 - np.array([0.0, 0.0, 1.0]) - p.kappa * did
    ddeqp = draw / loop
    dy2 = ddeqp / p.kappa
    dpm = -k[0, 0] * dy1 - k[0, 1] * dy2
    jac = np.zeros((3, 3))
    jac[0] = dy1
    jac[1] = (dpm - dpe - p.damping * np.array([0.0, 1.0, 0.0])) / p.tj
    jac[2] = ddeqp
    return jac


def fd_jacobian(params, gain, at_state, step=1e-6):
    """Central finite-difference Jacobian of the closed-loop field
    (cross-check for :func:`linearize_closed_loop`)."""
    field = closed_loop_field(params, gain, equilibrium(params))
    base = at_state.as_array()
    jac = np.zeros((3, 3))
    for j in range(3):
        delta = np.zeros(3)
        delta[j] = step * max(1.0, abs(base[j]))
        jac[:, j] = (field(base + delta)[0] - field(base - delta)[0]) / (
            2.0 * delta[j]
        )
    return jac


def small_signal_stable(params, gain, x_star=None):
    """True iff the closed-loop Jacobian at the equilibrium is Hurwitz
    (and the feedthrough loop is well posed)."""
    try:
        jac = linearize_closed_loop(params, gain, x_star=x_star)
    except ValueError:
        return False
    return bool(np.max(np.linalg.eigvals(jac).real) < -1e-9)


def simulate(params, gain, x0, dt=2e-4, t_end=10.0, x_star=None):
    """Fixed-step RK4 simulation of the closed loop from ``x0``.

    Records states, port outputs (deviations), applied inputs, and the
    energy function.  A state norm above 1e3 stops the run and marks the
    trajectory as diverged.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = params
    if x_star is None:
        x_star = equilibrium(p)
    field = closed_loop_field(p, gain, x_star)
    steps = int(round(t_end / dt))
    times = np.empty(steps + 1)
    states = np.empty((steps + 1, 3))
    outputs = np.empty((steps + 1, 2))
    inputs = np.empty((steps + 1, 2))
    energies = np.empty(steps + 1)
    x = np.asarray(x0, dtype=float).copy()
    diverged = False
    count = steps + 1
    for i in range(steps + 1):
        times[i] = i * dt
        states[i] = x
        deriv, y, u = field(x)
        outputs[i] = y
        inputs[i] = u
        energies[i] = hamiltonian(SmibState.from_array(x), p, x_star)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e3:
            diverged = True
            count = i + 1
            break
        if i == steps:
            break
        k1 = deriv
        k2 = field(x + 0.5 * dt * k1)[0]
        k3 = field(x + 0.5 * dt * k2)[0]
        k4 = field(x + dt * k3)[0]
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Trajectory(
        times=times[:count],
        states=states[:count],
        outputs=outputs[:count],
        inputs=inputs[:count],
        hamiltonian=energies[:count],
        diverged=diverged,
    )


def region_sweep(params, k11_values=None, k22_values=None, offdiag=0.1,
                 threads=1):
    """Classify static feedback gains ``K = [[K11, offdiag], [offdiag, K22]]``
    over a grid.

    Returns a dict of boolean arrays (shape len(k11) x len(k22)):

    - ``scalar_cert``: scalar condition lambda_min(K) + lambda_min(Xi_gen) >= 0
    - ``matrix_cert``: matrix condition K + Xi_gen >= 0
    - ``eig_stable``: closed-loop Jacobian Hurwitz

    Cells are independent; ``threads > 1`` fans rows out over a thread
    pool (the eigenvalue solves release the GIL).
    """
    p = params
    if k11_values is None:
        k11_values = np.linspace(-0.4, 0.4, 81)
    if k22_values is None:
        k22_values = np.linspace(-1.2, 0.6, 81)
    k11_values = np.asarray(k11_values, dtype=float)
    k22_values = np.asarray(k22_values, dtype=float)
    xi = generator_ofpm(p).xi
    xi_lam = float(np.linalg.eigvalsh(xi)[0])
    x_star = equilibrium(p)
    shape = (k11_values.size, k22_values.size)
    scalar_cert = np.zeros(shape, dtype=bool)
    matrix_cert = np.zeros(shape, dtype=bool)
    eig_stable = np.zeros(shape, dtype=bool)

    def fill_row(i):
        k11 = k11_values[i]
        for j, k22 in enumerate(k22_values):
            k = np.array([[k11, offdiag], [offdiag, k22]])
            k_lam = float(np.linalg.eigvalsh(k)[0])
            scalar_cert[i, j] = k_lam + xi_lam >= 0.0
            matrix_cert[i, j] = float(np.linalg.eigvalsh(k + xi)[0]) >= 0.0
            eig_stable[i, j] = small_signal_stable(p, k, x_star)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill_row, range(k11_values.size)))
    else:
        for i in range(k11_values.size):
            fill_row(i)
    return {
        "k11": k11_values,
        "k22": k22_values,
        "scalar_cert": scalar_cert,
        "matrix_cert": matrix_cert,
        "eig_stable": eig_stable,
    }
