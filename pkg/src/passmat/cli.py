"""Command-line frontend.

Subcommands ingest system/parameter JSON files, run the analyses, and
emit JSON or CSV with plot-ready data.  Every emitted file starts with a
fixed-format reproducibility header (inputs hash, tolerances, version);
identical inputs and flags produce byte-identical bodies.

Exit codes: 0 ok, 2 input error, 3 infeasible or precondition violation,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys as _sys

import numpy as np

from . import __version__, interconnect, lti, smib
from .dissipop import fourier_limit_check
from .passivity import (
    CertKind,
    InfeasibleIndexError,
    PassivityCertificate,
    SolverFailure,
    compute_ifofp,
    compute_ifpm,
    compute_ofpm,
    scalar_indices,
    verify_certificate,
)

__all__ = [
    "main",
    "passivation_thresholds",
    "closed_loop_passivity_margin",
]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

_FMT = "%.12g"


def _num(x):
    return _FMT % float(x)


def _hash_inputs(paths, extra=""):
    sha = hashlib.sha256()
    for path in paths:
        with open(path, "rb") as fh:
            sha.update(fh.read())
    sha.update(extra.encode())
    return sha.hexdigest()[:16]


def _header(paths, extra=""):
    return (
        f"# passmat {__version__} inputs_sha256={_hash_inputs(paths, extra)} "
        f"tolerances=feas=1e-08,gap=1e-08"
    )


def _write_text(path, text):
    if path in (None, "-"):
        _sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_system(path):
    with open(path) as fh:
        return lti.StateSpace.from_json(fh.read())


def _load_matrix(path):
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data["K"]
    return np.asarray(data, dtype=float)


def closed_loop_passivity_margin(sys, gain, theta, grid=None):
    """Worst frequency-domain passivity margin of the closed loop
    ``(I + G theta K)^-1 G``; -inf when the closed loop is unstable."""
    try:
        closed = lti.close_loop_static(sys, gain, theta)
    except lti.AlgebraicLoopError:
        return -np.inf
    if not lti.is_hurwitz(closed):
        return -np.inf
    grid = grid or lti.default_grid()
    value, _, _ = lti.scalar_index_freq(closed, grid, kind="ifpm")
    return value


def _bisect_threshold(fun, lo, hi, tol=1e-8):
    """Smallest root of ``fun >= 0`` in [lo, hi] assuming a single
    crossing; fun(lo) < 0 <= fun(hi)."""
    f_lo = fun(lo)
    if f_lo >= 0.0:
        return lo
    if fun(hi) < 0.0:
        return np.nan
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if hi - lo <= tol * max(1.0, abs(hi)):
            break
        if fun(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def passivation_thresholds(sys, gain, theta_max=1.0, grid=None):
    """Critical feedback strengths for passivation of ``sys`` by the
    static map ``y2 = theta K e2``.

    Returns a dict with the true boundary (closed-loop frequency sweep)
    and the certified thresholds from the passivation condition
    ``lambda_min(theta K + Xi1) >= 0`` for the scalar index and both
    matrix-valued indices.
    """
    grid = grid or lti.default_grid()
    k = np.asarray(gain, dtype=float)
    sym_k = (k + k.T) / 2.0
    xi_tr = compute_ofpm(sys, "trace").xi
    xi_le = compute_ofpm(sys, "mineig").xi
    xi_scalar, _, _ = lti.scalar_index_freq(sys, grid, kind="ofpm")
    lam_k = float(np.linalg.eigvalsh(sym_k)[0])

    theta_scalar = -xi_scalar / lam_k if lam_k > 0 else np.nan

    def cert_margin(xi):
        return lambda th: float(np.linalg.eigvalsh(th * sym_k + xi)[0])

    theta_trace = _bisect_threshold(cert_margin(xi_tr), 0.0, theta_max)
    theta_mineig = _bisect_threshold(cert_margin(xi_le), 0.0, theta_max)
    theta_true = _bisect_threshold(
        lambda th: closed_loop_passivity_margin(sys, k, th, grid),
        0.0,
        theta_max,
    )
    return {
        "theta_true": float(theta_true),
        "theta_scalar": float(theta_scalar),
        "theta_trace": float(theta_trace),
        "theta_mineig": float(theta_mineig),
        "xi_trace": xi_tr,
        "xi_mineig": xi_le,
        "xi_scalar": float(xi_scalar),
    }


def _cmd_analyze(args):
    sys_model = _load_system(args.system)
    if not lti.is_hurwitz(sys_model):
        print("error: system not Hurwitz", file=_sys.stderr)
        return EXIT_INFEASIBLE
    mode = args.mode
    principle = {"trace": "trace", "mineig": "mineig"}[args.principle]
    if mode == "ifp":
        cert = compute_ifpm(sys_model, principle)
    elif mode == "ofp":
        cert = compute_ofpm(sys_model, principle)
    else:
        cert = compute_ifofp(sys_model, principle=principle)
    report = verify_certificate(sys_model, cert)
    phi_idx, xi_idx = scalar_indices(cert)
    lines = [
        _header([args.system], extra=f"{mode}:{principle}"),
        f"mode={mode} principle={principle}",
        f"scalar_phi={_num(phi_idx)} scalar_xi={_num(xi_idx)}",
        f"ifp_margin={_num(report.ifp_margin)} "
        f"ofp_margin={_num(report.ofp_margin)} "
        f"qsr_margin={_num(report.qsr_margin)} "
        f"ofp_route={report.ofp_route}",
    ]
    print("\n".join(lines))
    _write_text(args.out, cert.to_json() + "\n")
    return EXIT_OK


def _cmd_passivation_sweep(args):
    sys_model = _load_system(args.system)
    gain = _load_matrix(args.gain)
    if not lti.is_hurwitz(sys_model):
        print("error: system not Hurwitz", file=_sys.stderr)
        return EXIT_INFEASIBLE
    grid = lti.default_grid()
    thresholds = passivation_thresholds(sys_model, gain, args.theta_max, grid)
    sym_k = (gain + gain.T) / 2.0
    xi_scalar = thresholds["xi_scalar"]
    lam_k = float(np.linalg.eigvalsh(sym_k)[0])
    thetas = np.linspace(0.0, args.theta_max, args.steps)
    rows = ["theta,true_passive,scalar_cert,trace_cert,mineig_cert"]
    for th in thetas:
        true_p = int(
            closed_loop_passivity_margin(sys_model, gain, th, grid) >= 0.0
        )
        sc = int(th * lam_k + xi_scalar >= 0.0)
        tr = int(
            np.linalg.eigvalsh(th * sym_k + thresholds["xi_trace"])[0] >= 0.0
        )
        le = int(
            np.linalg.eigvalsh(th * sym_k + thresholds["xi_mineig"])[0] >= 0.0
        )
        rows.append(f"{_num(th)},{true_p},{sc},{tr},{le}")
    rows.append(
        "# thresholds: true=%s scalar=%s trace=%s mineig=%s"
        % tuple(
            _num(thresholds[k])
            for k in ("theta_true", "theta_scalar", "theta_trace", "theta_mineig")
        )
    )
    text = "\n".join(
        [_header([args.system, args.gain], extra=f"{args.theta_max}:{args.steps}")]
        + rows
    )
    _write_text(args.out, text + "\n")
    return EXIT_OK


def _cmd_smib_region(args):
    params = (
        smib.paper_params()
        if args.params is None
        else smib.SmibParams.from_json(open(args.params).read())
    )
    lo1, hi1, lo2, hi2 = args.window
    k11 = np.linspace(lo1, hi1, args.grid)
    k22 = np.linspace(lo2, hi2, args.grid)
    grid = smib.region_sweep(
        params, k11, k22, offdiag=args.offdiag, threads=_thread_count()
    )
    rows = ["K11,K22,scalar_cert,matrix_cert,eig_stable"]
    for i, a in enumerate(k11):
        for j, b in enumerate(k22):
            rows.append(
                f"{_num(a)},{_num(b)},{int(grid['scalar_cert'][i, j])},"
                f"{int(grid['matrix_cert'][i, j])},{int(grid['eig_stable'][i, j])}"
            )
    paths = [] if args.params is None else [args.params]
    header = _header(paths, extra=f"{args.window}:{args.grid}:{args.offdiag}")
    _write_text(args.out, "\n".join([header] + rows) + "\n")
    return EXIT_OK


def _cmd_smib_sim(args):
    params = (
        smib.paper_params()
        if args.params is None
        else smib.SmibParams.from_json(open(args.params).read())
    )
    gain = _load_matrix(args.gain)
    x_star = smib.equilibrium(params)
    direction = np.ones(3) / np.sqrt(3.0)
    x0 = x_star.as_array() + args.r * direction
    traj = smib.simulate(params, gain, x0, dt=args.dt, t_end=args.t_end)
    pe = traj.electrical_power(params)
    rows = ["t,delta,omega,Eqp,Pe,H"]
    for i in range(len(traj.times)):
        rows.append(
            ",".join(
                _num(v)
                for v in (
                    traj.times[i],
                    traj.states[i, 0],
                    traj.states[i, 1],
                    traj.states[i, 2],
                    pe[i],
                    traj.hamiltonian[i],
                )
            )
        )
    rows.append(f"# diverged={int(traj.diverged)}")
    paths = [args.gain] if args.params is None else [args.params, args.gain]
    header = _header(paths, extra=f"{args.r}:{args.dt}:{args.t_end}")
    _write_text(args.out, "\n".join([header] + rows) + "\n")
    return EXIT_OK


def _cmd_spectral(args):
    sys_model = _load_system(args.system)
    if not lti.is_hurwitz(sys_model):
        print("error: system not Hurwitz", file=_sys.stderr)
        return EXIT_INFEASIBLE
    report = fourier_limit_check(sys_model, args.horizon, args.points, args.count)
    rows = ["index,lambda,matched_omega,matched_branch,deviation,alignment"]
    for r in report.rows:
        rows.append(
            f"{r.index},{_num(r.eigenvalue)},{_num(r.matched_omega)},"
            f"{r.matched_branch},{_num(r.relative_deviation)},{_num(r.alignment)}"
        )
    rows.append(f"# max_relative_deviation={_num(report.max_relative_deviation)}")
    header = _header(
        [args.system], extra=f"{args.horizon}:{args.points}:{args.count}"
    )
    _write_text(args.out, "\n".join([header] + rows) + "\n")
    return EXIT_OK


def _cmd_interconnect(args):
    with open(args.cert1) as fh:
        c1 = PassivityCertificate.from_json(fh.read())
    with open(args.cert2) as fh:
        c2 = PassivityCertificate.from_json(fh.read())
    topology = args.topology
    if topology == "parallel":
        composed = interconnect.parallel_cert(c1, c2)
        verdict = interconnect.InterconnectionVerdict(
            satisfied=True,
            margin=float(np.linalg.eigvalsh(composed.xi)[0]),
            binding_condition="parallel_composition",
            composed=composed,
        )
    elif topology == "feedback":
        composed = interconnect.feedback_cert(c1, c2)
        verdict = interconnect.InterconnectionVerdict(
            satisfied=True,
            margin=float(np.linalg.eigvalsh(composed.phi)[0]),
            binding_condition="feedback_composition",
            composed=composed,
        )
    elif topology == "passivation":
        verdict = interconnect.passivation_check(c1, c2)
    elif topology == "l2":
        verdict = interconnect.l2_stability_check(c1, c2)
    else:
        verdict = interconnect.lyapunov_stability_check(
            c1, c2, zso1=not args.not_zso1, zso2=not args.not_zso2
        )
    _write_text(args.out, verdict.to_json() + "\n")
    return EXIT_OK


def _thread_count():
    raw = os.environ.get("PASSMAT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="passmat",
        description="Matrix-valued passivity index toolbox",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="compute a passivity certificate")
    p.add_argument("system", help="system JSON path")
    p.add_argument("--mode", choices=["ifp", "ofp", "ifofp"], default="ofp")
    p.add_argument("--principle", choices=["trace", "mineig"], default="mineig")
    p.add_argument("--out", default="-", help="certificate JSON output path")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser(
        "passivation-sweep", help="feedback-strength sweep with certified thresholds"
    )
    p.add_argument("system")
    p.add_argument("gain", help="JSON file with the static gain matrix")
    p.add_argument("--theta-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_passivation_sweep)

    p = sub.add_parser("smib-region", help="SMIB gain-region classification")
    p.add_argument("--params", default=None, help="SMIB parameter JSON")
    p.add_argument(
        "--window",
        type=float,
        nargs=4,
        default=[-0.4, 0.4, -1.2, 0.6],
        metavar=("K11LO", "K11HI", "K22LO", "K22HI"),
    )
    p.add_argument("--grid", type=int, default=81)
    p.add_argument("--offdiag", type=float, default=0.1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_smib_region)

    p = sub.add_parser("smib-sim", help="SMIB closed-loop time simulation")
    p.add_argument("gain", help="JSON file with the static gain matrix")
    p.add_argument("--params", default=None)
    p.add_argument("--r", type=float, default=0.03, help="perturbation radius")
    p.add_argument("--dt", type=float, default=2e-4)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_smib_sim)

    p = sub.add_parser("spectral", help="dissipativity-operator spectrum")
    p.add_argument("system")
    p.add_argument("--horizon", "-T", type=float, default=40.0)
    p.add_argument("--points", "-N", type=int, default=512)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_spectral)

    p = sub.add_parser("interconnect", help="certificate interconnection checks")
    p.add_argument("cert1")
    p.add_argument("cert2")
    p.add_argument(
        "--topology",
        choices=["parallel", "feedback", "passivation", "l2", "lyapunov"],
        required=True,
    )
    p.add_argument("--not-zso1", action="store_true")
    p.add_argument("--not-zso2", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_interconnect)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (FileNotFoundError, KeyError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INPUT
    except InfeasibleIndexError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverFailure, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
