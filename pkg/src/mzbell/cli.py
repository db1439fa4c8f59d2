"""Command-line front end: regenerates figure data as CSV, evaluates the
entropic bound, reports the CHSH analysis, and runs the validation suites.

All CSV output carries ``#``-prefixed header comments with the tool
version, the full parameter set, and the seed; floats are printed with 17
significant digits.  Identical invocations are byte-identical except for
the single timestamp header line.  JSON reports embed the same metadata
under a ``meta`` key.
"""

from __future__ import annotations

import argparse
import json
import math
import subprocess
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, channel, chsh, uncertainty, validate
from .fock import DensityOperator, FockSpace, partial_trace
from .optics import displacement_matrix


def _version_string() -> str:
    try:
        proc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=2.0,
            cwd=Path(__file__).resolve().parent,
        )
        if proc.returncode == 0 and proc.stdout.strip():
            return f"{__version__}+g{proc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _header_lines(command: str, params: dict, seed) -> list[str]:
    lines = [
        f"# mzbell {_version_string()}",
        f"# timestamp: {datetime.now(timezone.utc).isoformat()}",
        f"# command: {command}",
    ]
    for key in sorted(params):
        lines.append(f"# param {key} = {params[key]}")
    lines.append(f"# seed = {seed if seed is not None else 'none'}")
    return lines


def _write_csv(path: str, command: str, params: dict, seed, columns, rows) -> None:
    out = Path(path)
    try:
        with out.open("w", encoding="utf-8", newline="\n") as fh:
            for line in _header_lines(command, params, seed):
                fh.write(line + "\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise SystemExit(f"cannot write {path}: {exc}")


def _emit_json(path, command: str, params: dict, seed, payload: dict) -> None:
    doc = {
        "meta": {
            "tool": "mzbell",
            "version": _version_string(),
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "command": command,
            "params": {k: str(v) for k, v in sorted(params.items())},
            "seed": seed,
        },
        "results": payload,
    }
    text = json.dumps(doc, indent=2, sort_keys=True, default=str)
    if path is None:
        print(text)
    else:
        try:
            Path(path).write_text(text + "\n", encoding="utf-8")
        except OSError as exc:
            raise SystemExit(f"cannot write {path}: {exc}")


def cmd_figure_disp(args) -> int:
    beta = complex(args.beta)
    if args.dim < 2.0 * abs(beta) ** 2:
        raise SystemExit(f"dim {args.dim} < 2 |beta|^2 = {2 * abs(beta) ** 2:.1f}")
    space = FockSpace(args.dim)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mat = displacement_matrix(beta, space, method=args.method).matrix
    rows = [(n, k, abs(mat[k, n])) for n in range(args.dim) for k in range(args.dim)]
    params = {"beta": beta, "dim": args.dim, "method": args.method}
    _write_csv(args.out, "figure disp", params, None, ["n", "k", "abs_value"], rows)
    return 0


def _mi_config(args) -> channel.ChannelConfig:
    if args.t == 0:
        raise SystemExit("t must be nonzero")
    if args.strict_unitarity and abs(args.t) >= 1.0:
        raise SystemExit(f"strict unitarity needs |t| < 1, got {abs(args.t)}")
    return channel.ChannelConfig.from_moduli(
        r_prime=args.rprime, t=args.t, alpha_scale=args.alpha_scale,
        space=FockSpace(args.dim), strict_unitarity=args.strict_unitarity,
        i_max=None,
    )


def cmd_figure_mi(args) -> int:
    indices = sorted({int(s) for s in args.indices.split(",")})
    cfg = _mi_config(args)
    cfg = channel.ChannelConfig(t=cfg.t, r_prime=cfg.r_prime, alpha=cfg.alpha,
                                space=cfg.space, i_max=max(indices))
    out = Path(args.out)
    params = {
        "rprime_requested": args.rprime, "rprime_effective": abs(cfg.r_prime),
        "t": args.t, "alpha_scale": args.alpha_scale, "dim": args.dim,
        "strict_unitarity": args.strict_unitarity, "indices": indices,
    }
    for i in indices:
        mat = channel.povm_element(i, cfg).matrix
        rows = [(n, npr, abs(mat[npr, n])) for n in range(args.dim) for npr in range(args.dim)]
        path = out.with_name(f"{out.stem}_i{i:02d}{out.suffix or '.csv'}")
        _write_csv(str(path), f"figure mi (i={i})", {**params, "i": i}, None,
                   ["n", "nprime", "abs_value"], rows)
    return 0


def cmd_figure_gram(args) -> int:
    if args.imax < 1:
        raise SystemExit("imax must be >= 1")
    cfg = _mi_config(args)
    cfg = channel.ChannelConfig(t=cfg.t, r_prime=cfg.r_prime, alpha=cfg.alpha,
                                space=cfg.space, i_max=args.imax)
    povm = channel.build_povm(cfg, i_max=args.imax)
    gram = channel.gram_matrix(povm)
    floor = float(args.floor)
    with np.errstate(divide="ignore"):
        logs = np.where(gram > 0.0, np.log10(np.maximum(gram, 10.0**floor)), floor)
    logs = np.maximum(logs, floor)
    rows = [(i, j, logs[i, j]) for i in range(args.imax + 1) for j in range(args.imax + 1)]
    params = {
        "rprime_requested": args.rprime, "rprime_effective": abs(cfg.r_prime),
        "t": args.t, "alpha_scale": args.alpha_scale, "dim": args.dim,
        "imax": args.imax, "floor": floor, "strict_unitarity": args.strict_unitarity,
    }
    _write_csv(args.out, "figure gram", params, None,
               ["i", "j", "log10_abs_overlap"], rows)
    return 0


def cmd_chsh_scan(args) -> int:
    values, lam = chsh.lambda_max_grid(args.grid_n)
    rows = []
    for i, e1 in enumerate(values):
        for j, e2 in enumerate(values):
            rows.append((e1, e2, lam[i, j], chsh.lambda_paper_form(e1, e2),
                         chsh.lambda_corrected(e1, e2)))
    _write_csv(args.out, "chsh scan", {"grid_n": args.grid_n}, None,
               ["E1", "E2", "lambda_eig", "lambda_paper_form", "lambda_corrected_form"], rows)
    return 0


def cmd_chsh_optimal(args) -> int:
    opt = chsh.optimal_settings(args.grid_n)
    payload = {
        "e1": opt.e1,
        "e2": opt.e2,
        "separation_sq": opt.separation_sq,
        "lambda_eigensolver": opt.lam,
        "lambda_corrected_form": chsh.lambda_corrected(opt.e1, opt.e2),
        "lambda_paper_form": chsh.lambda_paper_form(opt.e1, opt.e2),
        "tsirelson": chsh.TSIRELSON,
        "paper_form_consistent": bool(
            abs(chsh.lambda_paper_form(opt.e1, opt.e2) - opt.lam) < 1e-6
        ),
        "note": "fourth-root closed form gives 2 sqrt(3) ~= 3.4641 at the optimum, "
                "inconsistent with the eigensolver value 2 sqrt(2) ~= 2.8284",
    }
    _emit_json(args.out, "chsh optimal", {"grid_n": args.grid_n}, None, payload)
    return 0


def cmd_chsh_state(args) -> int:
    psi = chsh.maximal_state()
    s = chsh.chsh_operator(0.5, 0.5)
    rho = DensityOperator(FockSpace(9), np.outer(psi, psi.conj()))
    spectra = {}
    for keep, name in ((0, "laboratory_a"), (1, "laboratory_b")):
        eig = np.linalg.eigvalsh(partial_trace(rho, keep, (3, 3)).matrix)
        spectra[name] = [float(v) for v in eig]
    payload = {
        "components_real": [float(np.real(v)) for v in psi],
        "components_imag": [float(np.imag(v)) for v in psi],
        "eigenvalue_residual": float(np.linalg.norm(s @ psi - chsh.TSIRELSON * psi)),
        "reduction_spectra": spectra,
        "lambda": chsh.TSIRELSON,
    }
    _emit_json(args.out, "chsh state", {}, None, payload)
    return 0


def cmd_mu_bound(args) -> int:
    beta1, beta2 = complex(args.beta1), complex(args.beta2)
    dsq = abs(beta1 - beta2) ** 2
    payload = {
        "separation_sq": dsq,
        "bound_bits": uncertainty.mu_bound(beta1, beta2),
        "clamped": bool(dsq < 1.0 / (2.0 * math.pi)),
        "scanned_overlap_c": None,
        "analytic_overlap_c": uncertainty.edge_overlap_formula(dsq) if dsq > 0 else 1.0,
    }
    if dsq > 0:
        window = max(40, int(math.ceil(4.0 * dsq)) + 20)
        c, loc = uncertainty.overlap_bound_c(beta1, beta2, window, window)
        payload["scanned_overlap_c"] = c
        payload["scanned_argmax"] = list(loc)
    _emit_json(args.out, "mu bound", {"beta1": beta1, "beta2": beta2}, None, payload)
    return 0


def cmd_mu_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    separations = [float(s) for s in args.separations.split(",")]
    space = FockSpace(uncertainty._embedding_dim(args.dim, math.sqrt(max(separations))))
    per_sep = {}
    min_slack = math.inf
    for dsq in separations:
        beta2 = math.sqrt(dsq)
        slacks = []
        for _ in range(args.states):
            psi = uncertainty.haar_random_state(args.dim, rng)
            rep = uncertainty.verify_mu(psi, 0.0, beta2, space)
            slacks.append(rep.slack)
        per_sep[f"{dsq:.6f}"] = {
            "bound_bits": uncertainty.mu_bound(0.0, beta2),
            "min_slack": min(slacks),
            "mean_slack": float(np.mean(slacks)),
        }
        min_slack = min(min_slack, min(slacks))
    payload = {"per_separation": per_sep, "min_slack": min_slack,
               "all_nonnegative": bool(min_slack >= -1e-9)}
    params = {"states": args.states, "dim": args.dim, "separations": separations}
    _emit_json(args.out, "mu verify", params, args.seed, payload)
    return 0 if min_slack >= -1e-9 else 1


def cmd_validate(args) -> int:
    names = list(validate.SUITES) if args.suite == "all" else [args.suite]
    report = validate.run_suites(names, args.seed)
    failed = validate.failed_checks(report)
    payload = {"checks": report, "failed": failed, "ok": not failed}
    _emit_json(args.out, f"validate {args.suite}", {"suite": args.suite}, args.seed, payload)
    if failed:
        print("FAILED invariants: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzbell",
        description="Displacement-channel, POVM, uncertainty, and CHSH numerics "
                    "on truncated Fock spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fig = sub.add_parser("figure", help="regenerate figure data as CSV")
    fig_sub = fig.add_subparsers(dest="figure_kind", required=True)

    disp = fig_sub.add_parser("disp", help="|<k|D(beta)|n>| magnitude grid")
    disp.add_argument("--beta", type=complex, default=complex(3.8))
    disp.add_argument("--dim", type=int, default=60)
    disp.add_argument("--method", choices=["direct", "factorized", "laguerre"],
                      default="laguerre")
    disp.add_argument("--out", required=True)
    disp.set_defaults(func=cmd_figure_disp)

    def add_channel_flags(p):
        p.add_argument("--rprime", type=float, default=0.999987)
        p.add_argument("--t", type=float, default=5e-7)
        p.add_argument("--alpha-scale", dest="alpha_scale", type=float, default=0.1)
        p.add_argument("--dim", type=int, default=50)
        p.add_argument("--strict-unitarity", dest="strict_unitarity",
                       action="store_true")
        p.add_argument("--out", required=True)

    mi = fig_sub.add_parser("mi", help="counting-effect magnitudes, one CSV per index")
    mi.add_argument("--indices", default="0,10,20,30,40",
                    help="comma-separated photon counts")
    add_channel_flags(mi)
    mi.set_defaults(func=cmd_figure_mi)

    gram = fig_sub.add_parser("gram", help="log10 effect-overlap matrix")
    gram.add_argument("--imax", type=int, default=40)
    gram.add_argument("--floor", type=float, default=-30.0,
                      help="log10 floor replacing vanishing overlaps")
    add_channel_flags(gram)
    gram.set_defaults(func=cmd_figure_gram)

    ch = sub.add_parser("chsh", help="CHSH witness analysis")
    ch_sub = ch.add_subparsers(dest="chsh_kind", required=True)
    scan = ch_sub.add_parser("scan", help="lambda_max over the overlap grid")
    scan.add_argument("--grid-n", dest="grid_n", type=int, default=99)
    scan.add_argument("--out", required=True)
    scan.set_defaults(func=cmd_chsh_scan)
    optimal = ch_sub.add_parser("optimal", help="optimal settings report")
    optimal.add_argument("--grid-n", dest="grid_n", type=int, default=99)
    optimal.add_argument("--out", default=None)
    optimal.set_defaults(func=cmd_chsh_optimal)
    state = ch_sub.add_parser("state", help="maximally violating state report")
    state.add_argument("--out", default=None)
    state.set_defaults(func=cmd_chsh_state)

    mu = sub.add_parser("mu", help="entropic uncertainty bound")
    mu_sub = mu.add_subparsers(dest="mu_kind", required=True)
    bound = mu_sub.add_parser("bound", help="bound for one displacement pair")
    bound.add_argument("--beta1", type=complex, default=complex(0.0))
    bound.add_argument("--beta2", type=complex, default=complex(math.sqrt(math.log(2.0))))
    bound.add_argument("--out", default=None)
    bound.set_defaults(func=cmd_mu_bound)
    verify = mu_sub.add_parser("verify", help="randomized slack survey")
    verify.add_argument("--seed", type=int, default=7)
    verify.add_argument("--states", type=int, default=200)
    verify.add_argument("--dim", type=int, default=24)
    verify.add_argument("--separations", default="0.5,0.693147,2,4")
    verify.add_argument("--out", default=None)
    verify.set_defaults(func=cmd_mu_verify)

    val = sub.add_parser("validate", help="run invariant suites")
    val.add_argument("--suite", choices=["all", *validate.SUITES], default="all")
    val.add_argument("--seed", type=int, default=1)
    val.add_argument("--out", default=None)
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    for attr in ("dim",):
        if hasattr(args, attr) and getattr(args, attr) is not None and getattr(args, attr) < 2:
            raise SystemExit(f"{attr} must be >= 2")
    try:
        return args.func(args)
    except ValueError as exc:
        raise SystemExit(str(exc))


if __name__ == "__main__":
    sys.exit(main())
