"""Command-line front end.

Each subcommand reads one JSON job file, writes a JSON report (to stdout or
``--out DIR``) and, with ``--out``, CSV plot data next to it.  ``--batch``
runs a JSON list of jobs, each carrying its own ``"action"``.

Exit status: 0 when a verdict was computed, 2 when the evidence was
inconclusive or a verification did not pass, 1 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from whlab import __version__
from whlab.errors import PathEllipticityFailure, SchemaError, TransversalityFailure, WHLabError
from whlab.fredholm import AnalyzeOptions, _jsonable, analyze, homotopy_verify, perturbation_experiment
from whlab.grids import HalfLine, Line
from whlab.operator import (
    adjoint,
    cauchy_singular_line,
    fourier_convolution,
    restriction,
    semi_commutator,
    semi_commutator_identity,
    wiener_hopf,
    zero_extension,
)
from whlab.spaces import function_from_dict, space_from_dict
from whlab.symbol import _cplx, conjugate, simplify_product, symbol_from_dict, xi_of_theta

ACTIONS = ("analyze", "norm", "verify-identities", "homotopy", "perturb")
EXIT_OK, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2


class JobError(Exception):
    pass


def load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise JobError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise JobError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# job handling


def _options(job: dict, args) -> dict:
    opts = job.get("options", {})
    if not isinstance(opts, dict):
        raise SchemaError("options must be an object", "options")
    opts = dict(opts)
    if args.grid_n is not None:
        opts["grid_n"] = args.grid_n
    if args.half_line_length is not None:
        opts["half_line_length"] = args.half_line_length
    if args.tol is not None:
        opts["tol"] = args.tol
    return opts


def _grid(opts: dict) -> HalfLine:
    try:
        return HalfLine(float(opts.get("half_line_length", 40.0)), int(opts.get("grid_n", 1024)))
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), "options") from None


def _curve_rows(symbols: list, n: int = 2001):
    theta = np.linspace(-np.pi, np.pi, n)
    xi = xi_of_theta(theta)
    vals = [s(xi) for s in symbols]
    for j in range(n):
        row = [theta[j], xi[j]]
        for v in vals:
            row += [v[j].real, v[j].imag]
        yield row


def run_analyze(job: dict, opts: dict):
    a = symbol_from_dict(job.get("symbol"), "symbol")
    grid = _grid(opts)
    try:
        options = AnalyzeOptions(
            numerics=bool(opts.get("numerics", True)),
            n=grid.n,
            length=grid.length,
            zero_tol=float(opts.get("tol", 1e-3)),
        )
    except ValueError as exc:
        raise SchemaError(str(exc), "options") from None
    report = analyze(a, options)
    status = EXIT_INCONCLUSIVE if report.verdict == "Inconclusive" else EXIT_OK
    plots = {"curve": (["theta", "xi", "re", "im"], list(_curve_rows([a])))}
    svd = report.estimators.get("svd")
    if svd is not None and svd.spectra:
        k, c = svd.spectra["kernel"], svd.spectra["cokernel"]
        plots["singular_values"] = (["k", "sigma_W_a", "sigma_W_conj_a"],
                                    [[j, k[j], c[j]] for j in range(k.size)])
    return report.to_dict(), status, plots


def run_norm(job: dict, opts: dict):
    space = space_from_dict(job.get("space"), "space")
    f = function_from_dict(job.get("function"), "function")
    value = space.norm(f)
    report = {"space": _jsonable(asdict(space)), "domain": f.domain.describe(), "norm": value}
    return report, EXIT_OK, {}


def run_verify(job: dict, opts: dict):
    a = symbol_from_dict(job.get("symbol"), "symbol")
    b = symbol_from_dict(job["symbol_b"], "symbol_b") if "symbol_b" in job else conjugate(a)
    grid = _grid(opts)
    tol = float(opts.get("tol", 1e-10))
    line = Line(grid.length, 2 * grid.n)
    checks = {}

    s = cauchy_singular_line(line).entries
    checks["cauchy_involution"] = float(np.max(np.abs(s @ s - np.eye(line.n))))
    w0 = fourier_convolution(a, line).entries @ fourier_convolution(b, line).entries
    checks["convolution_multiplicative"] = float(np.max(np.abs(
        w0 - fourier_convolution(simplify_product([a, b]), line).entries)))
    checks["adjoint_is_conjugate_symbol"] = float(np.max(np.abs(
        adjoint(wiener_hopf(a, grid)).entries - wiener_hopf(conjugate(a), grid).entries)))
    rl = restriction(line, grid).entries @ zero_extension(grid, line).entries
    checks["restriction_after_extension"] = float(np.max(np.abs(rl - np.eye(grid.n))))
    exact = {k: {"value": v, "tol": tol, "passed": v < tol} for k, v in checks.items()}

    ident = semi_commutator_identity(a, b, grid)
    profile = semi_commutator(a, b, grid).profile()
    approx = {
        "semi_commutator_identity": {"value": ident.relative_gap, "tol": 0.05,
                                     "passed": ident.relative_gap < 0.05},
    }
    report = {
        "grid": grid.describe(),
        "checks": {**exact, **approx},
        "semi_commutator_norm": ident.lhs_norm,
        "semi_commutator_rank": profile.numerical_rank(),
        "passed": all(c["passed"] for c in {**exact, **approx}.values()),
    }
    plots = {"semi_commutator_singular_values": (["k", "sigma"], [[j, v] for j, v in enumerate(profile.sigma)])}
    return report, EXIT_OK if report["passed"] else EXIT_INCONCLUSIVE, plots


def run_homotopy(job: dict, opts: dict):
    b = symbol_from_dict(job.get("symbol"), "symbol")
    steps = job.get("steps", 20)
    if not isinstance(steps, int) or steps < 1:
        raise SchemaError("steps must be a positive integer", "steps")
    try:
        rep = homotopy_verify(b, steps, tol=float(opts.get("tol", 1e-10)))
    except PathEllipticityFailure as exc:
        return {"passed": False, "error": str(exc), "t": exc.t, "margin": exc.margin}, EXIT_INCONCLUSIVE, {}
    tr = rep.trace
    rows = [[t, m, sd, bd, pv, vb, idx] for t, m, sd, bd, pv, vb, idx in zip(
        tr.t_samples, tr.margins, tr.sup_distance, tr.bv_distance, tr.power_variation,
        tr.variation_bound, rep.indices)]
    plots = {"trace": (["t", "margin", "sup_distance", "bv_distance", "power_variation",
                        "variation_bound", "index"], rows)}
    return rep.to_dict(), EXIT_OK if rep.passed else EXIT_INCONCLUSIVE, plots


def run_perturb(job: dict, opts: dict):
    a = symbol_from_dict(job.get("symbol"), "symbol")
    eps = job.get("eps", 0.1)
    if not isinstance(eps, (int, float)) or eps <= 0:
        raise SchemaError("eps must be a positive number", "eps")
    v = _cplx(job["v"], "v") if "v" in job else None
    xi0 = float(job["xi0"]) if "xi0" in job else None
    try:
        rep = perturbation_experiment(a, v, float(eps), xi0, grid=_grid(opts))
    except TransversalityFailure as exc:
        return {"error": str(exc)}, EXIT_INCONCLUSIVE, {}
    plus = simplify_product([a]) + rep.eps * rep.v
    minus = simplify_product([a]) - rep.eps * rep.v
    plots = {"curves": (["theta", "xi", "re_plus", "im_plus", "re_minus", "im_minus"],
                        list(_curve_rows([plus, minus])))}
    return rep.to_dict(), EXIT_OK, plots


RUNNERS = {
    "analyze": run_analyze,
    "norm": run_norm,
    "verify-identities": run_verify,
    "homotopy": run_homotopy,
    "perturb": run_perturb,
}


def run_job(job, action: str, args, stem: str, out=None, err=None) -> int:
    """Run one job and write its artifacts; returns the exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        if not isinstance(job, dict):
            raise SchemaError("job must be an object")
        declared = job.get("action", action)
        if declared != action:
            raise SchemaError(f"job declares action {declared!r} but {action!r} was requested", "action")
        opts = _options(job, args)
        report, status, plots = RUNNERS[action](job, opts)
    except (SchemaError, JobError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    except WHLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INPUT
    document = {
        "action": action,
        "job": job,
        "options": opts,
        "version": __version__,
        "report": report,
    }
    text = dump_report(_jsonable(document))
    if args.out is None:
        out.write(text)
    else:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{stem}.json").write_text(text)
        for name, (header, rows) in plots.items():
            write_csv(outdir / f"{stem}_{name}.csv", header, rows)
    return status


def _add_flags(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--grid-n", type=int, default=default, help="half-line cells (default 1024)")
    parser.add_argument("--half-line-length", type=float, default=default,
                        help="truncation length L (default 40)")
    parser.add_argument("--tol", type=float, default=default,
                        help="analyze: relative singular-value threshold; verify/homotopy: pass tolerance")
    parser.add_argument("--out", default=default, help="directory for the report and CSV plot data")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="whlab", description="Fredholm checks for Wiener-Hopf operators.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--batch", metavar="FILE", help="JSON list of jobs, each with an 'action' field")
    _add_flags(p, None)
    sub = p.add_subparsers(dest="action")
    for name in ACTIONS:
        sp = sub.add_parser(name, help=f"run a {name} job")
        sp.add_argument("job", help="JSON job file")
        # flags after the subcommand override those before it
        _add_flags(sp, argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.batch is not None:
        if args.action is not None:
            parser.error("--batch cannot be combined with a subcommand")
        try:
            jobs = load_json(args.batch)
        except JobError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        if not isinstance(jobs, list):
            print("error: batch file must hold a list of jobs", file=sys.stderr)
            return EXIT_INPUT
        statuses = []
        for i, job in enumerate(jobs):
            action = job.get("action") if isinstance(job, dict) else None
            if action not in ACTIONS:
                print(f"error: jobs[{i}].action: expected one of {', '.join(ACTIONS)}", file=sys.stderr)
                statuses.append(EXIT_INPUT)
                continue
            statuses.append(run_job(job, action, args, f"job{i:03d}"))
        if EXIT_INPUT in statuses:
            return EXIT_INPUT
        return EXIT_INCONCLUSIVE if EXIT_INCONCLUSIVE in statuses else EXIT_OK
    if args.action is None:
        parser.print_help(sys.stderr)
        return EXIT_INPUT
    try:
        job = load_json(args.job)
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run_job(job, args.action, args, Path(args.job).stem)


if __name__ == "__main__":
    sys.exit(main())
