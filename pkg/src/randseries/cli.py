"""Command-line interface.

Usage::

    randseries analyze --matrix fgn0 --weights geometric --N 200
    randseries verify levy --matrix fgn0 --N 12 --exact
    randseries verify stopping --matrix diag-ones --N 10 --exact --r-grid 0.5:3:6
    randseries factor --cov fgn:H=0.3 --N 50 --matrix-out fgn.trimat
    randseries simulate sup --matrix fgn0 --N 200 --dist gaussian --replicas 100000

Every report starts with comment lines (command, generation time, resolved
configuration) followed by ``# section: <name>`` blocks of CSV or aligned
columns.  Everything after the ``# generated`` line depends only on the
configuration.  Exit status: 0 when every check passed, 2 when some Monte
Carlo verdict is inconclusive, 1 on a violation or an error.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import sys
from datetime import datetime, timezone

import click
import numpy as np

from .adaptive import doob_check, martingale_bound
from .coeffs import TAIL_POLICIES, absolute_sum, column_sums, diagonal_profile, levy_bound, tail_report
from .covfactor import PIVOT_TOL, FactorizationError, cholesky_lower, verify_factorization
from .formats import (FormatError, format_trimat, load_covariance, load_matrix, load_rule,
                      load_weights, parse_grid, parse_int_range)
from .innovations import (DISTRIBUTIONS, EMBEDDINGS, REPLICA_BLOCK, InnovationSpec,
                          enumeration_cap, sample_innovations)
from .simulate import (DEFAULT_REPLICAS, McEstimate, build_path, exact_expected_sup,
                       exact_tail_sup, sup_samples, tail_sup_estimate, verify_levy, verify_tail)
from .stoptime import (fourth_moment_ratio, l2_cauchy_exact, l2_cauchy_profile,
                       verify_stopping_inequality)

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2

# Options that change how a run is executed or where it goes, never its result.
_NOT_ECHOED = ("threads", "out")


def format_value(value):
    """Report cell text: floats at 17 significant digits, complex as ``re,im``.

    >>> format_value(0.1), format_value(True), format_value(None), format_value(2)
    ('0.10000000000000001', 'true', '', '2')
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        if value.imag == 0:
            return format_value(value.real)
        return f"{value.real:.17g},{value.imag:.17g}"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


class Report:
    """Sections of rows plus free-form notes, rendered as CSV or aligned text."""

    def __init__(self, command, config):
        self.command = command
        self.config = config
        self.blocks = []
        self.statuses = []

    def note(self, text):
        self.blocks.append(("note", text))

    def section(self, name, columns, rows):
        self.blocks.append(("section", (name, list(columns), [list(r) for r in rows])))

    def record(self, status, label):
        self.statuses.append((status, label))

    def body(self, fmt="csv"):
        out = io.StringIO()
        out.write(f"# config: {json.dumps(self.config, sort_keys=True, default=str)}\n")
        for kind, payload in self.blocks:
            if kind == "note":
                out.write(f"# note: {payload}\n")
                continue
            name, columns, rows = payload
            out.write(f"# section: {name}\n")
            cells = [[format_value(v) for v in row] for row in rows]
            if fmt == "csv":
                writer = csv.writer(out, lineterminator="\n")
                writer.writerow(columns)
                writer.writerows(cells)
            else:
                widths = [max([len(c)] + [len(r[i]) for r in cells])
                          for i, c in enumerate(columns)]
                for row in [columns] + cells:
                    out.write("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip() + "\n")
        return out.getvalue()

    def render(self, fmt="csv", timestamp=None):
        stamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
        return f"# randseries {self.command}\n# generated {stamp}\n" + self.body(fmt)

    @property
    def exit_code(self):
        states = {s for s, _ in self.statuses}
        if "fail" in states:
            return EXIT_FAIL
        if "inconclusive" in states:
            return EXIT_INCONCLUSIVE
        return EXIT_OK


def _emit(report, params):
    text = report.render(params.get("format") or "csv")
    out = params.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    failures = [label for status, label in report.statuses if status == "fail"]
    if failures:
        click.echo(f"violations: {', '.join(failures)}", err=True)
    sys.exit(report.exit_code)


def _start(command, params):
    config = {k: v for k, v in params.items() if k not in _NOT_ECHOED}
    if params.get("exact"):
        config["enum_cap"] = enumeration_cap()
    return Report(command, config)


def guarded(func):
    """Turn library errors into a one-line message and exit status 1."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except FactorizationError as exc:
            click.echo(f"error: covariance is not positive definite at pivot {exc.pivot} "
                       f"(value {exc.value:.6g}, threshold {exc.threshold:.6g})", err=True)
        except FormatError as exc:
            click.echo(f"error: parse error at {exc}", err=True)
        except (ValueError, IndexError, TypeError) as exc:
            click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAIL)
    return wrapper


def _spec(params):
    return InnovationSpec(params["dist"], params["dim"], params["embedding"])


def output_options(func):
    func = click.option("--format", "format", type=click.Choice(["csv", "table"]),
                        default="csv", show_default=True, help="Report layout.")(func)
    func = click.option("--out", type=click.Path(dir_okay=False),
                        help="Write the report here instead of stdout.")(func)
    return func


threads_option = click.option("--threads", type=click.IntRange(min=1), default=1,
                              show_default=True, help="Worker threads; never changes the output.")


def run_options(func):
    func = threads_option(func)
    func = click.option("--seed", type=int, default=0, show_default=True)(func)
    func = click.option("--replicas", type=click.IntRange(min=2), default=DEFAULT_REPLICAS,
                        show_default=True)(func)
    func = click.option("--exact", is_flag=True,
                        help="Enumerate all Rademacher outcomes instead of sampling.")(func)
    return func


def innovation_options(func):
    func = click.option("--embedding", type=click.Choice(EMBEDDINGS), default="scalar",
                        show_default=True)(func)
    func = click.option("--dim", type=click.IntRange(min=1), default=1, show_default=True)(func)
    func = click.option("--dist", type=click.Choice(DISTRIBUTIONS), default="rademacher",
                        show_default=True)(func)
    return func


def matrix_option(required=True):
    return click.option("--matrix", required=required,
                        help="trimat file or rule: fgn0, fgn:H=<h>, power:alpha=<a>, "
                             "diag:<law>, collinear:<law>, zero, ones, identity, "
                             "random:seed=<s>.")


weights_option = click.option("--weights", default=None,
                              help="vecs file, 'unit', a law (geometric, inv, inv2, ones) "
                                   "giving ||u_n||^2, or trig:<lawA>,<lawB>.")


@click.group()
@click.version_option(package_name="artifact")
def cli():
    """Convergence criteria and maximal inequalities for dependent random series."""


@cli.command()
@matrix_option()
@weights_option
@click.option("--N", "N", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--K", "K", type=click.IntRange(min=1), default=None,
              help="Inner cutoff of each diagonal [default: N].")
@click.option("--tail-policy", type=click.Choice(TAIL_POLICIES), default="geometric",
              show_default=True)
@click.option("--rtol", type=float, default=1e-8, show_default=True)
@threads_option
@output_options
@guarded
def analyze(**params):
    """Diagonal criterion, tail quantities and diagnostics of a coefficient matrix."""
    N = params["N"]
    K = params["K"] or N
    params["K"] = K
    M = load_matrix(params["matrix"], N)
    W = load_weights(params["weights"])
    report = _start("analyze", params)
    prof = diagonal_profile(M, N, K, W, params["tail_policy"], params["rtol"])
    abs_value, abs_flag = absolute_sum(M, N, "none" if params["tail_policy"] == "none"
                                       else "geometric", params["rtol"])
    report.section("summary", ["quantity", "value"], [
        ["matrix", M.name or params["matrix"]],
        ["criterion", prof.value],
        ["converged", prof.converged],
        ["verdict", prof.describe()],
        ["unsettled_diagonal", prof.unsettled_diagonal],
        ["levy_bound", levy_bound(M, N, W)],
        ["absolute_sum", abs_value],
        ["absolute_sum_settled", abs_flag],
    ])
    report.section("diagonals", ["n", "norm", "partial_criterion", "inner_cutoff"],
                   zip(range(1, N + 1), prof.norms, prof.partial_criterion,
                       prof.inner_cutoffs))
    grid = sorted({n for n in (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, N) if n <= N})
    rows = []
    for n in grid:
        t = tail_report(M, n, K, W)
        rows.append([n, t.A_N, t.B_N, t.bound_rhs])
    report.section("tail", ["N", "A_N", "B_N", "bound"], rows)
    report.section("column_sums", ["k", "column_sum"],
                   zip(range(1, N + 1), column_sums(M, N)))
    _emit(report, params)


@cli.group()
def verify():
    """Check a maximal inequality exactly or by Monte Carlo."""


def _check_row(check):
    return [check.method, check.lhs, check.lhs_se, check.rhs, check.margin, check.status]


_CHECK_COLUMNS = ["method", "lhs", "lhs_se", "rhs", "margin", "status"]


@verify.command("levy")
@matrix_option()
@weights_option
@click.option("--N", "N", type=click.IntRange(min=1), required=True)
@innovation_options
@run_options
@output_options
@guarded
def verify_levy_cmd(**params):
    """E max ||S_n|| against the diagonal bound at horizon N."""
    M = load_matrix(params["matrix"], params["N"])
    W = load_weights(params["weights"])
    report = _start("verify levy", params)
    check = verify_levy(M, _spec(params), params["N"], params["exact"], params["replicas"],
                        params["seed"], weights=W, threads=params["threads"])
    report.section("levy", _CHECK_COLUMNS, [_check_row(check)])
    report.record(check.status, "levy")
    _emit(report, params)


@verify.command("martingale")
@click.option("--rule", default="constant", show_default=True,
              help="constant (uses --matrix), sign:<law>, clamp:<law>, zero, table:<path>.")
@matrix_option(required=False)
@click.option("--N", "N", type=click.IntRange(min=1), required=True)
@innovation_options
@run_options
@output_options
@guarded
def verify_martingale_cmd(**params):
    """E max ||S_n|| for predictable coefficients against twice the expected-square bound."""
    M = load_matrix(params["matrix"], params["N"]) if params["matrix"] else None
    rule = load_rule(params["rule"], M)
    report = _start("verify martingale", params)
    rep = martingale_bound(rule, _spec(params), params["N"], params["replicas"],
                           params["seed"], params["exact"], params["threads"])
    c = rep.check
    report.section("martingale", ["method", "rhs_method", "lhs", "lhs_se", "rhs", "rhs_se",
                                  "margin", "status"],
                   [[c.method, rep.rhs_method, c.lhs, c.lhs_se, rep.rhs, rep.rhs_se, c.margin,
                     c.status]])
    report.record(c.status, "martingale")
    _emit(report, params)


@verify.command("stopping")
@matrix_option()
@click.option("--N", "N", type=click.IntRange(min=1), required=True)
@click.option("--r-grid", default="0.5:3:6", show_default=True, help="Levels lo:hi:count.")
@innovation_options
@run_options
@output_options
@guarded
def verify_stopping_cmd(**params):
    """P(max ||S_n|| > r) against P(||S_N|| > r) + P(||T_N|| > r) per level."""
    M = load_matrix(params["matrix"], params["N"])
    report = _start("verify stopping", params)
    checks = verify_stopping_inequality(M, _spec(params), params["N"],
                                        parse_grid(params["r_grid"]), params["exact"],
                                        params["replicas"], params["seed"], params["threads"])
    rows = []
    for c in checks:
        counts = list(c.counts) if c.counts else [None] * 4
        rows.append([c.level, c.method, c.p_sup, c.p_final, c.p_flipped, c.margin, c.se_sup,
                     c.se_rhs] + counts + [c.status])
        report.record(c.status, f"stopping r={c.level:g}")
    report.section("stopping", ["level", "method", "p_sup", "p_final", "p_flipped", "margin",
                                "se_sup", "se_rhs", "count_sup", "count_final",
                                "count_flipped", "outcomes", "status"], rows)
    _emit(report, params)


@verify.command("doob")
@matrix_option(required=False)
@click.option("--rule", default=None,
              help="Predictable rule; when given it replaces --matrix.")
@click.option("--N", "N", type=click.IntRange(min=1), required=True)
@click.option("--component", type=click.IntRange(min=1), default=None,
              help="Single component [default: all 1..N].")
@innovation_options
@run_options
@output_options
@guarded
def verify_doob_cmd(**params):
    """Doob's L² maximal inequality on each component of the prefix decomposition."""
    N = params["N"]
    M = load_matrix(params["matrix"], N) if params["matrix"] else None
    if params["rule"]:
        source = load_rule(params["rule"], M)
    elif M is not None:
        source = M
    else:
        raise ValueError("verify doob needs --matrix or --rule")
    report = _start("verify doob", params)
    comps = [params["component"]] if params["component"] else range(1, N + 1)
    rows = []
    for n in comps:
        r = doob_check(n, source, _spec(params), N, params["exact"], params["replicas"],
                       params["seed"], params["threads"])
        rows.append([n, r.method, r.sup_second_moment, r.terminal_second_moment, r.ratio,
                     r.check.margin, r.status])
        report.record(r.status, f"doob component {n}")
    report.section("doob", ["component", "method", "sup_second_moment",
                            "terminal_second_moment", "ratio", "margin", "status"], rows)
    _emit(report, params)


@verify.command("tail")
@matrix_option()
@weights_option
@click.option("--N", "N", type=click.IntRange(min=0), required=True, help="Tail offset.")
@click.option("--m", "m", type=click.IntRange(min=1), required=True,
              help="Number of tail terms observed.")
@click.option("--K", "K", type=click.IntRange(min=1), default=None,
              help="Cutoff of the tail quantities [default: N+m].")
@innovation_options
@run_options
@output_options
@guarded
def verify_tail_cmd(**params):
    """E max_{l<=m} ||S_{N+l} - S_N|| against 2 (A_N + B_N)."""
    N, m = params["N"], params["m"]
    K = params["K"] or N + m
    params["K"] = K
    M = load_matrix(params["matrix"], N + m)
    W = load_weights(params["weights"])
    report = _start("verify tail", params)
    check = verify_tail(M, _spec(params), N, m, K, params["exact"], params["replicas"],
                        params["seed"], params["threads"], W)
    report.note("finite horizon m: evidence, not certificate")
    report.section("tail", _CHECK_COLUMNS, [_check_row(check)])
    report.record(check.status, "tail")
    _emit(report, params)


@cli.command()
@click.option("--cov", required=True, help="covmat file, identity or fgn:H=<h>.")
@click.option("--N", "N", type=click.IntRange(min=1), default=None,
              help="Size for identity and fgn:H=<h>.")
@click.option("--pivot-tol", type=float, default=PIVOT_TOL, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True,
              help="Largest accepted |L L^T - R| entry.")
@click.option("--matrix-out", type=click.Path(dir_okay=False), default=None,
              help="Write the factor as trimat; otherwise its entries go in the report.")
@threads_option
@output_options
@guarded
def factor(**params):
    """Factor a covariance into a lower-triangular coefficient matrix."""
    spec = load_covariance(params["cov"], params["N"])
    M = cholesky_lower(spec, params["pivot_tol"])
    check = verify_factorization(M, spec, params["tol"])
    report = _start("factor", params)
    status = "pass" if check.passed else "fail"
    row, col = check.location
    report.section("factorization", ["N", "max_deviation", "row", "col", "tol", "status"],
                   [[spec.size, check.max_deviation, row, col, check.tol, status]])
    report.record(status, "factorization")
    if params["matrix_out"]:
        with open(params["matrix_out"], "w", encoding="utf-8") as fh:
            fh.write(format_trimat(M.table))
    else:
        n, k = np.tril_indices(spec.size)
        report.section("coefficients", ["n", "k", "value"],
                       zip(n + 1, k + 1, M.table[n, k]))
    _emit(report, params)


@cli.group()
def simulate():
    """Sample paths and Monte Carlo estimates."""


@simulate.command("paths")
@matrix_option()
@weights_option
@click.option("--N", "N", type=click.IntRange(min=1), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--streams", default="0", show_default=True,
              help="Stream ids lo:hi (inclusive) or a comma list; one path per stream.")
@innovation_options
@threads_option
@output_options
@guarded
def simulate_paths(**params):
    """Terms, prefix sums and running suprema of individual paths."""
    N = params["N"]
    M = load_matrix(params["matrix"], N)
    W = load_weights(params["weights"])
    spec = _spec(params)
    report = _start("simulate paths", params)
    rows = []
    width = None
    for stream in parse_int_range(params["streams"]):
        Z = sample_innovations(spec, N, params["seed"], stream)
        path = build_path(M, Z, N, weights=W)
        width = path.terms.shape[1]
        for n in range(N):
            rows.append([stream, n + 1, *path.terms[n], *path.prefix[n], path.norms[n],
                         path.running_sup[n]])
    cols = (["stream", "n"] + [f"x_{i}" for i in range(1, width + 1)]
            + [f"s_{i}" for i in range(1, width + 1)] + ["norm", "running_sup"])
    report.section("paths", cols, rows)
    _emit(report, params)


@simulate.command("sup")
@matrix_option()
@weights_option
@click.option("--N", "N", type=click.IntRange(min=1), required=True)
@click.option("--per-replica", is_flag=True, help="Also list every replica's supremum.")
@innovation_options
@run_options
@output_options
@guarded
def simulate_sup(**params):
    """Estimate E max_{n<=N} ||S_n||."""
    N = params["N"]
    M = load_matrix(params["matrix"], N)
    W = load_weights(params["weights"])
    spec = _spec(params)
    report = _start("simulate sup", params)
    bound = levy_bound(M, N, W)
    if params["exact"]:
        mean = exact_expected_sup(M, N, weights=W, spec=spec)
        report.section("summary", ["method", "mean", "std_error", "replicas", "levy_bound"],
                       [["exact", mean, 0.0, 2**N, bound]])
    else:
        samples = sup_samples(M, spec, N, params["replicas"], params["seed"], weights=W,
                              threads=params["threads"])
        est = McEstimate.from_samples(samples, params["seed"])
        report.section("summary", ["method", "mean", "std_error", "replicas", "levy_bound"],
                       [["mc", est.mean, est.std_error, est.replicas, bound]])
        if params["per_replica"]:
            idx = np.arange(samples.size)
            report.section("replicas", ["replica", "stream", "sup"],
                           zip(idx, idx // REPLICA_BLOCK, samples))
    _emit(report, params)


@simulate.command("tail")
@matrix_option()
@weights_option
@click.option("--N", "N", type=click.IntRange(min=0), required=True, help="Tail offset.")
@click.option("--m", "m", type=click.IntRange(min=1), required=True)
@innovation_options
@run_options
@output_options
@guarded
def simulate_tail(**params):
    """Estimate E max_{l<=m} ||X_{N+1} + ... + X_{N+l}||."""
    N, m = params["N"], params["m"]
    M = load_matrix(params["matrix"], N + m)
    W = load_weights(params["weights"])
    spec = _spec(params)
    report = _start("simulate tail", params)
    if params["exact"]:
        mean, se, method = exact_tail_sup(M, N, m, spec, W), 0.0, "exact"
    else:
        est = tail_sup_estimate(M, spec, N, m, params["replicas"], params["seed"],
                                params["threads"], W)
        mean, se, method = est.mean, est.std_error, "mc"
    t = tail_report(M, N, N + m, W) if N >= 1 else None
    report.note("finite horizon m: evidence, not certificate")
    report.section("tail", ["N", "m", "method", "mean", "std_error", "A_N", "B_N", "bound"],
                   [[N, m, method, mean, se, t and t.A_N, t and t.B_N, t and t.bound_rhs]])
    _emit(report, params)


@simulate.command("cauchy")
@matrix_option()
@click.option("--m-grid", default="0:10", show_default=True,
              help="Offsets m as lo:hi (inclusive) or a comma list.")
@click.option("--J", "J", type=click.IntRange(min=1), default=20, show_default=True)
@innovation_options
@run_options
@output_options
@guarded
def simulate_cauchy(**params):
    """sup_{j<=J} E||S_{m+j} - S_m||^2 over a grid of offsets m.

    With --exact the second moments come from orthogonality of the innovations.
    """
    ms = parse_int_range(params["m_grid"])
    M = load_matrix(params["matrix"], max(ms) + params["J"])
    report = _start("simulate cauchy", params)
    rows = []
    if params["exact"]:
        for m in ms:
            vals = l2_cauchy_exact(M, m, params["J"])
            best = int(np.argmax(vals))
            rows.append([m, "exact", float(vals[best]), best + 1, 0.0])
    else:
        for r in l2_cauchy_profile(M, _spec(params), ms, params["J"], params["replicas"],
                                   params["seed"], params["threads"]):
            rows.append([r.m, "mc", r.sup_second_moment, r.argmax_j, r.std_error])
    report.note("finite horizon J: evidence, not certificate")
    report.section("cauchy", ["m", "method", "sup_second_moment", "argmax_j", "std_error"], rows)
    _emit(report, params)


@simulate.command("moment")
@matrix_option()
@click.option("--segment", "segments", multiple=True, default=("0:2",), show_default=True,
              help="Segment m:j (sum of X_{m+1}..X_{m+j}); repeatable.")
@innovation_options
@run_options
@output_options
@guarded
def simulate_moment(**params):
    """Fourth-to-squared-second moment ratio of segment sums."""
    segs = []
    for text in params["segments"]:
        m, _, j = text.partition(":")
        segs.append((int(m), int(j)))
    M = load_matrix(params["matrix"], max(m + j for m, j in segs))
    report = _start("simulate moment", params)
    rows = []
    for m, j in segs:
        r = fourth_moment_ratio(M, _spec(params), m, j, params["exact"], params["replicas"],
                                params["seed"], params["threads"])
        rows.append([m, j, r.method, r.fourth, r.second, r.ratio, r.std_error])
    finite = [row[5] for row in rows if not math.isnan(row[5])]
    report.section("moments", ["m", "j", "method", "fourth", "second", "ratio", "std_error"],
                   rows)
    report.section("summary", ["quantity", "value"],
                   [["K_required", max(finite) if finite else math.nan]])
    _emit(report, params)


def main(argv=None):
    cli.main(args=argv, prog_name="randseries")


if __name__ == "__main__":
    main()
