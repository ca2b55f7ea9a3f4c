"""Command-line interface.

Exit status is 0 on success, 2 for invalid input and 3 when a numerical
step fails.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click
import numpy as np

from .bayes_factor import estimate_bf
from .experiments import generate, graph_from_precision, named_precision, replicate
from .graph import ColoredGraph, GraphValidationError
from .linalg import CompletionInfeasible, Dataset, NotPositiveDefinite
from .metrics import format_matrix, inclusion_probabilities, recovery_report
from .search import RankDeficient, SearchConfig, select_model
from .wishart import (
    CGWishartParams,
    DimensionTooLarge,
    NotIntegrable,
    Unsupported,
    exact_log_norm_const,
    numeric_log_norm_const,
)

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_NUMERICAL = (NotIntegrable, DimensionTooLarge, CompletionInfeasible, RankDeficient,
              np.linalg.LinAlgError, FloatingPointError, ArithmeticError)

log = logging.getLogger("cggm")


class _Fail(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _run(fn, *args, **kwargs):
    """Call ``fn`` and map library errors onto exit codes."""
    try:
        return fn(*args, **kwargs)
    except _NUMERICAL as exc:
        raise _Fail(f"numerical failure: {exc}", EXIT_NUMERICAL) from exc
    except (ValueError, KeyError, OSError) as exc:
        raise _Fail(f"invalid input: {exc}", EXIT_VALIDATION) from exc


def _read_matrix(spec: str, p: int | None = None) -> np.ndarray:
    if spec == "identity":
        if p is None:
            raise ValueError("'identity' needs the dimension from the graph")
        return np.eye(p)
    path = Path(spec)
    if not path.exists():
        return named_precision(spec)
    M = np.atleast_2d(Dataset.from_csv(path).X)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{spec} is {M.shape[0]}x{M.shape[1]}, not square")
    if p is not None and M.shape[0] != p:
        raise ValueError(f"{spec} is {M.shape[0]}x{M.shape[0]}, graph has p={p}")
    return M


def _read_graph(path: str) -> ColoredGraph:
    return ColoredGraph.read(path)


def _seed(ctx: click.Context, local: int | None) -> int:
    return local if local is not None else ctx.obj["seed"]


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True,
              help="Base seed; replicate r uses seed + r.")
@click.option("--threads", type=click.IntRange(1), default=1, show_default=True)
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
@click.pass_context
def cli(ctx, seed, threads, verbose):
    """Bayesian model selection for colored Gaussian graphical models."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"seed": seed, "threads": threads}


@cli.command()
@click.option("--kmat", "kspec", required=True,
              help="Precision matrix: CSV path or a name such as sel:1, star:8 or star:8:1.2.")
@click.option("-n", "--n", "n", type=click.IntRange(0), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None)
@click.option("--no-header", is_flag=True)
@click.pass_context
def gen(ctx, kspec, n, out, seed, no_header):
    """Sample N(0, K^-1) data into a CSV file."""
    K = _run(_read_matrix, kspec)
    data = _run(generate, K, n, _seed(ctx, seed))
    _run(data.to_csv, out, header=not no_header)
    click.echo(f"wrote {data.n}x{data.p} to {out}")


@cli.command("norm-const")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--delta", type=float, default=3.0, show_default=True)
@click.option("--dmat", default="identity", show_default=True, help="CSV path or 'identity'.")
@click.option("--numeric", is_flag=True, help="Force numerical integration.")
def norm_const(graph_path, delta, dmat, numeric):
    """Print log I_G(delta, D)."""
    g = _run(_read_graph, graph_path)
    params = _run(CGWishartParams, delta, _run(_read_matrix, dmat, g.p))
    if numeric:
        value = _run(numeric_log_norm_const, g, params)
    else:
        try:
            value = exact_log_norm_const(g, params)
        except Unsupported:
            log.info("no closed form for this graph, integrating numerically")
            value = _run(numeric_log_norm_const, g, params)
    click.echo(f"{value:.3f}")


def _search_options(fn):
    for opt in reversed([
        click.option("--delta", type=float, default=3.0, show_default=True),
        click.option("--dmat", default="identity", show_default=True),
        click.option("--sigma", type=float, default=0.5, show_default=True),
        click.option("--iters", type=click.IntRange(1), default=5000, show_default=True),
        click.option("--burnin", type=click.IntRange(0), default=1000, show_default=True),
        click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None),
    ]):
        fn = opt(fn)
    return fn


@cli.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--g1", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--g2", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["rj", "drj"]), default="drj", show_default=True)
@click.option("--iters", type=click.IntRange(1), default=10_000, show_default=True)
@click.option("--burnin", type=click.IntRange(0), default=1000, show_default=True)
@click.option("--sigma", type=float, default=0.5, show_default=True)
@click.option("--delta", type=float, default=3.0, show_default=True)
@click.option("--dmat", default="identity", show_default=True)
@click.option("--replicates", type=click.IntRange(1), default=5, show_default=True)
@click.option("--sweeps", type=click.IntRange(1), default=1, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None)
@click.pass_context
def bf(ctx, data_path, g1, g2, method, iters, burnin, sigma, delta, dmat, replicates, sweeps, seed):
    """Estimate the Bayes factor p(g2|X) / p(g1|X)."""
    data = _run(Dataset.from_csv, data_path)
    G1, G2 = _run(_read_graph, g1), _run(_read_graph, g2)
    if G1.p != data.p or G2.p != data.p:
        raise _Fail(f"graphs and data disagree on p ({G1.p}, {G2.p}, {data.p})", EXIT_VALIDATION)
    params = _run(CGWishartParams, delta, _run(_read_matrix, dmat, data.p))
    est = _run(estimate_bf, G1, G2, data.S, data.n, params, method, iters, burnin, sweeps, sigma,
               replicates, _seed(ctx, seed), ctx.obj["threads"])
    click.echo(f"value {est.value:.3f}")
    click.echo(f"se {est.std_error:.3f}")
    click.echo(f"counts {est.counts[0]} {est.counts[1]}")
    if est.degenerate:
        click.echo("warning: one graph was never visited", err=True)


def _config(ctx, alpha, delta, dmat, sigma, iters, burnin, seed, p) -> SearchConfig:
    D = _run(_read_matrix, dmat, p)
    return _run(SearchConfig, alpha=alpha, delta=delta, D=D, sigma=sigma, iters=iters,
                burnin=burnin, seed=_seed(ctx, seed), threads=ctx.obj["threads"])


@cli.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", type=float, default=0.05, show_default=True)
@_search_options
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def select(ctx, data_path, alpha, delta, dmat, sigma, iters, burnin, seed, out):
    """Run the greedy search and write the selected graph."""
    data = _run(Dataset.from_csv, data_path)
    cfg = _config(ctx, alpha, delta, dmat, sigma, iters, burnin, seed, data.p)
    g, trace = _run(select_model, data, cfg)
    # the trace goes to stderr so stdout carries only the graph document
    if len(trace):
        click.echo(trace.format(), err=True)
    if out:
        _run(g.write, out)
    click.echo(g.dumps())


def _graphs_in(directory: str) -> list[ColoredGraph]:
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise ValueError(f"no graph documents in {directory}")
    return [ColoredGraph.read(p) for p in paths]


@cli.command()
@click.option("--true", "true_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--est", "est_paths", multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--runs-dir", type=click.Path(exists=True, file_okay=False), default=None)
def metrics(true_path, est_paths, runs_dir):
    """Score estimated graphs against the true graph."""
    g_true = _run(_read_graph, true_path)
    ests = [_run(_read_graph, p) for p in est_paths]
    if runs_dir:
        ests += _run(_graphs_in, runs_dir)
    if not ests:
        raise _Fail("give --est or --runs-dir", EXIT_VALIDATION)
    reports = [_run(recovery_report, g_true, g) for g in ests]
    labels = list(est_paths) + [f"{runs_dir}/run {k}" for k in range(len(ests) - len(est_paths))]
    for label, rep in zip(labels, reports):
        click.echo(f"# {label}")
        click.echo(rep.format())
    if len(ests) > 1:
        click.echo(f"percentage {np.mean([g == g_true for g in ests]):.3f}")
        click.echo("IP:")
        click.echo(format_matrix(_run(inclusion_probabilities, ests)))


@cli.command("replicate")
@click.option("--kmat", "kspec", required=True, help="Precision matrix: CSV path or a named generator.")
@click.option("-n", "--n", "n", type=click.IntRange(1), default=100, show_default=True)
@click.option("--reps", type=click.IntRange(1), default=50, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@_search_options
@click.option("--true", "true_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="True graph; derived from the zeros and ties of K when omitted.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Write each selected graph as run_NNNN.json here.")
@click.pass_context
def replicate_cmd(ctx, kspec, n, reps, alpha, delta, dmat, sigma, iters, burnin, seed, true_path, out_dir):
    """Simulate datasets from K, run the search on each and summarize."""
    K = _run(_read_matrix, kspec)
    g_true = _run(_read_graph, true_path) if true_path else graph_from_precision(K)
    cfg = _config(ctx, alpha, delta, dmat, sigma, iters, burnin, seed, K.shape[0])
    summary = _run(replicate, K, n, reps, cfg, cfg.seed, ctx.obj["threads"], g_true)
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for r in summary.ok_runs:
            r.graph.write(d / f"run_{r.index:04d}.json")
    click.echo(summary.format())
    if not summary.ok_runs:
        raise _Fail("every run failed", EXIT_NUMERICAL)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="cggm", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except (GraphValidationError, NotPositiveDefinite) as exc:
        click.echo(f"invalid input: {exc}", err=True)
        return EXIT_VALIDATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
