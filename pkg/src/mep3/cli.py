"""Command-line interface: ``mep3 gen``, ``mep3 solve`` and ``mep3 compare``.

Exit codes: 0 success, 2 usage error, 3 solver failure, 4 comparison failure.
"""
import json
import math
import sys
from pathlib import Path

import click

EXIT_SOLVER = 3
EXIT_COMPARE = 4


def _fail(kind, message, code):
    click.echo(json.dumps({"error": kind, "message": message}), err=True)
    sys.exit(code)


@click.group()
def main():
    """Solvers for three-parameter eigenvalue problems."""


# -- gen --------------------------------------------------------------------

@main.group()
def gen():
    """Generate a problem file."""


def _write(bvp, out, oracle=None):
    from .io import save_problem
    save_problem(out, bvp, oracle)
    sizes = "x".join(str(n) for n in bvp.problem.sizes)
    click.echo(f"wrote {out} ({bvp.app}, sizes {sizes})", err=True)


def _generate(fn, *args):
    from .discretize import DiscretizationError
    try:
        return fn(*args)
    except DiscretizationError as exc:
        raise click.UsageError(str(exc))


@gen.command("ellipsoidal")
@click.option("--x0", type=float, default=1.0, show_default=True)
@click.option("--y0", type=float, default=1.5, show_default=True)
@click.option("--z0", type=float, default=2.0, show_default=True)
@click.option("--rho", type=click.IntRange(0, 1), default=0, show_default=True)
@click.option("--sigma", type=click.IntRange(0, 1), default=0, show_default=True)
@click.option("--tau", type=click.IntRange(0, 1), default=0, show_default=True)
@click.option("--n", type=click.IntRange(4), default=60, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen_ellipsoidal_cmd(x0, y0, z0, rho, sigma, tau, n, out):
    """Ellipsoidal wave equations."""
    from .discretize import gen_ellipsoidal
    _write(_generate(gen_ellipsoidal, x0, y0, z0, rho, sigma, tau, n), out)


@gen.command("baer")
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--beta", type=float, default=5.0, show_default=True)
@click.option("--c", "c", type=float, default=1.0, show_default=True)
@click.option("--b", "b", type=float, default=3.0, show_default=True)
@click.option("--rho", type=click.IntRange(0, 1), default=0, show_default=True)
@click.option("--sigma", type=click.IntRange(0, 1), default=0, show_default=True)
@click.option("--n", type=click.IntRange(4), default=60, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen_baer_cmd(gamma, beta, c, b, rho, sigma, n, out):
    """Baer wave equations."""
    from .discretize import gen_baer
    _write(_generate(gen_baer, gamma, beta, c, b, rho, sigma, n), out)


@gen.command("fourpoint")
@click.option("--n", type=click.IntRange(4), default=50, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen_fourpoint_cmd(n, out):
    """Four-point boundary value problem."""
    from .discretize import gen_four_point
    _write(_generate(gen_four_point, n), out)


@gen.command("random")
@click.option("--n", type=click.IntRange(1), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--oracle-out", type=click.Path(dir_okay=False), default=None,
              help="Oracle spectrum CSV [default: OUT with suffix .oracle.csv].")
def gen_random_cmd(n, seed, out, oracle_out):
    """Random problem with a known spectrum."""
    from .discretize import BvpProblem, gen_random_diag
    from .report import values_to_csv
    prob, oracle = _generate(gen_random_diag, n, seed)
    bvp = BvpProblem(prob, (), (), "random", {"n": n, "seed": seed}, {})
    _write(bvp, out, oracle.values)
    oracle_out = oracle_out or str(Path(out).with_suffix(".oracle.csv"))
    Path(oracle_out).write_text(values_to_csv(oracle.values))
    click.echo(f"wrote {oracle_out} ({len(oracle.values)} eigenvalues)", err=True)


# -- solve ------------------------------------------------------------------

@main.command()
@click.argument("problem_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["direct", "jd", "si"]), default="jd",
              show_default=True)
@click.option("--target", type=(click.Choice(["point"]), float, float, float), default=None,
              metavar="point LAM MU ETA", help="Point target.")
@click.option("--eta-target", type=float, default=None, help="Eta-plane target.")
@click.option("--want", type=click.IntRange(0), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=click.IntRange(1), default=1, show_default=True)
@click.option("--ell", type=click.IntRange(1), default=None)
@click.option("--max-dim", type=click.IntRange(1), default=None)
@click.option("--delta", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--xi1", type=float, default=None)
@click.option("--xi2", type=float, default=None)
@click.option("--zeta", type=float, default=None)
@click.option("--arnoldi-r", type=click.IntRange(0), default=None)
@click.option("--max-product-dim", type=click.IntRange(1), default=None)
@click.option("--ritz-count", type=click.IntRange(1), default=None, help="SI: m.")
@click.option("--trqi-pre", type=click.IntRange(0), default=None, help="SI: s.")
@click.option("--trqi-post", type=click.IntRange(0), default=None, help="TRQI steps t.")
@click.option("--max-updates", type=click.IntRange(0), default=None)
@click.option("--max-iters", type=click.IntRange(0), default=None)
@click.option("--correction", type=click.Choice(["exact", "gmres"]), default=None)
@click.option("--gmres-steps", type=click.IntRange(1), default=None)
@click.option("--no-precond", is_flag=True, help="JD: GMRES without preconditioner.")
@click.option("--lambda-shift", type=float, default=None,
              help="Substitute lam -> lam + s before solving.")
@click.option("--no-invert-a", is_flag=True, help="Do not premultiply by A_j^{-1}.")
@click.option("--allow-singular", is_flag=True, help="Direct: tolerate singular Delta_0.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV output [default: stdout].")
@click.option("--svg", type=click.Path(dir_okay=False), default=None)
def solve(problem_file, method, target, eta_target, want, seed, threads, ell, max_dim, delta,
          eps, xi1, xi2, zeta, arnoldi_r, max_product_dim, ritz_count, trqi_pre, trqi_post,
          max_updates, max_iters, correction, gmres_steps, no_precond, lambda_shift,
          no_invert_a, allow_singular, out, svg):
    """Solve a problem file and write the eigenvalue table."""
    from threadpoolctl import threadpool_limits

    from .core import EtaPlane, MepError, Point
    from .io import FormatError, load_problem
    from .pipeline import SolveOptions, run
    from .report import rows_to_csv, rows_to_svg

    if target is not None and eta_target is not None:
        raise click.UsageError("give either --target or --eta-target, not both")
    tgt = Point(*target[1:]) if target else EtaPlane(eta_target or 0.0)
    if method == "si" and isinstance(tgt, Point):
        raise click.UsageError("--method si needs --eta-target")
    common = {"ell": ell, "delta": delta, "eps": eps, "xi1": xi1, "xi2": xi2,
              "max_updates": max_updates, "max_iters": max_iters}
    if method == "jd":
        over = {"max_dim": max_dim, "trqi_steps": trqi_post, "correction": correction,
                "gmres_steps": gmres_steps, "use_precond": False if no_precond else None,
                **{k: v for k, v in common.items() if k != "max_iters"}}
    elif method == "si":
        over = {"r": arnoldi_r, "zeta": zeta, "max_product_dim": max_product_dim,
                "m": ritz_count, "pre_trqi_steps": trqi_pre, "post_trqi_steps": trqi_post,
                **{k: v for k, v in common.items() if k != "max_updates"}}
    else:
        over = {}
    opts = SolveOptions(lambda_shift=lambda_shift, invert_a=not no_invert_a,
                        allow_singular=allow_singular,
                        overrides={k: v for k, v in over.items() if v is not None})
    try:
        bvp, _ = load_problem(problem_file)
    except FormatError as exc:
        _fail("FormatError", str(exc), 2)
    try:
        with threadpool_limits(limits=threads):
            report = run(bvp, method, tgt, want, seed, opts)
    except (MepError, ValueError, ArithmeticError) as exc:
        _fail(type(exc).__name__, str(exc), EXIT_SOLVER)
    text = rows_to_csv(report.rows)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)
    if svg:
        eta0 = tgt.eta if isinstance(tgt, EtaPlane) else 0.0
        Path(svg).write_text(rows_to_svg(report.rows, eta0))
    st = report.stats
    steps = st.get("updates", st.get("iterations"))
    msg = f"{method}: {len(report.rows)}/{report.wanted} eigenvalues"
    if steps is not None:
        kind = "subspace updates" if method == "jd" else "iterations"
        msg += f", {steps} {kind}"
    click.echo(msg + f", {st.get('wall_time', 0.0):.2f} s", err=True)


# -- compare ----------------------------------------------------------------

@main.command()
@click.argument("result_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("oracle_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-6, show_default=True)
def compare(result_csv, oracle_csv, tol):
    """Match result rows to oracle rows; exit 4 if any row misses by more than TOL."""
    from .report import SchemaError, match_nearest, read_values
    try:
        res = read_values(result_csv)
        orc = read_values(oracle_csv)
    except SchemaError as exc:
        _fail("SchemaError", str(exc), 2)
    matches = match_nearest(res, orc)
    bad = [m for m in matches if m[1] is None or m[2] > tol]
    worst = max((m[2] for m in matches), default=0.0)
    finite = lambda d: d if math.isfinite(d) else None  # noqa: E731
    report = {"result_rows": len(res), "oracle_rows": len(orc),
              "matched": len(matches) - len(bad), "unmatched_result": len(bad),
              "unmatched_oracle": len(orc) - sum(m[1] is not None for m in matches),
              "max_mismatch": finite(worst), "tol": tol,
              "offending": [{"row": i, "oracle_row": j, "distance": finite(d)} for i, j, d in bad]}
    click.echo(json.dumps(report, indent=2))
    if bad:
        sys.exit(EXIT_COMPARE)


if __name__ == "__main__":  # pragma: no cover
    main()
