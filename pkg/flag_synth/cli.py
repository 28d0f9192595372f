from __future__ import annotations

import logging
import math
from typing import Any, Callable, Dict, List, Optional

import typer
from dotenv import load_dotenv
from rich import print
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape

from . import __version__
from .assign import assign_labels, realized_rows, realized_stats
from .config import BetaModeChoice, InputFormat, RunConfig, SupportChoice, resolve_config
from .distribution import estimate_powerlaw_alpha, loglog_fieldnames, loglog_points, summary
from .errors import FlagSynthError, InputError, ParameterError
from .fit import FitOptions, fit_params, observed_group_distribution
from .flagcore import (
    alpha_sweep,
    beta_max,
    build_model,
    expected_b_vector,
    expected_counts,
    frange,
    is_legal,
    legality_table,
    support_beta_max,
)
from .ingest import (
    ColumnMap,
    build_profiles,
    open_input,
    parse_attribute_csv,
    parse_generic_interactions,
    parse_movielens_movies,
    parse_movielens_ratings,
    parse_movielens_users,
)
from .models import AttributeTable, FlagParams, InteractionDataset, LegalityMode, Pivot, ProfileSizeDistribution
from .report import render_attribute_table, render_csv, render_json, write_outputs

load_dotenv()
app = typer.Typer(add_completion=False, no_args_is_help=True, help="Frequency-linked synthetic attribute generation.")
err_console = Console(stderr=True)
logger = logging.getLogger("flag_synth")

EXIT_ILLEGAL = ParameterError.exit_code

# Options shared by several commands. Defaults are None so that a --config
# file can fill them in; RunConfig holds the real defaults.
INPUT = typer.Option(None, "--input", "-i", help="Interaction file (`-` for stdin)")
FORMAT = typer.Option(None, "--format", help="Interaction file format")
PIVOT = typer.Option(None, "--pivot", help="Count profiles per user or per item")
MAX_SIZE = typer.Option(None, "--max-size", help="Remove entities with more interactions than this")
DEDUP = typer.Option(None, "--dedup/--no-dedup", help="Collapse duplicate (entity, counterpart) pairs")
DELIMITER = typer.Option(None, "--delimiter", help="CSV delimiter (`tab` for TSV)")
ENTITY_COL = typer.Option(None, "--entity-col", help="CSV entity column (name, or 0-based index)")
COUNTERPART_COL = typer.Option(None, "--counterpart-col", help="CSV counterpart column (name, or 0-based index)")
HEADER = typer.Option(None, "--header/--no-header", help="CSV has a header row")
ALPHA = typer.Option(None, "--alpha", help="Skew parameter (>= 0)")
BETA = typer.Option(None, "--beta", help="Expected fraction of group B, in (0, 1]")
SEED = typer.Option(None, "--seed", help="Integer seed or `random` (env FLAG_SYNTH_SEED)")
LEGALITY = typer.Option(None, "--legality", help="Reject illegal beta (strict) or cap p at 1 (clamp)")
OUT = typer.Option(None, "--out", "-o", help="Output directory")
WORKERS = typer.Option(None, "--workers", help="Worker threads; results do not depend on it")
CONFIG = typer.Option(None, "--config", help="key=value file with option defaults; flags win")
ALPHA_MIN = typer.Option(None, "--alpha-min")
ALPHA_MAX = typer.Option(None, "--alpha-max")
ALPHA_STEP = typer.Option(None, "--alpha-step")
ATTRIBUTES = typer.Option(None, "--attributes", help="Attribute table (protected flag per entity)")
ATTRIBUTE_FORMAT = typer.Option(None, "--attribute-format", help="ml1m-users, ml1m-movies or csv")
GENRE = typer.Option(None, "--genre", help="Genre flagged by --attribute-format ml1m-movies")
ALLOW_PARTIAL = typer.Option(None, "--allow-partial/--no-allow-partial", help="Exclude entities missing from the attribute table")


def _version_callback(value: bool) -> None:
    if value:
        print(__version__)
        raise typer.Exit()


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    version: bool = typer.Option(
        False, "--version", callback=_version_callback, is_eager=True, help="Print the version and exit"
    ),
):
    """Generate synthetic binary A/B attributes linked to profile size."""

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def _run(flags: Dict[str, Any], config: Optional[str], body: Callable[[RunConfig], None]) -> None:
    """Resolve options and run `body`, mapping library errors to exit codes."""

    try:
        cfg = resolve_config(flags, config)
        logger.debug("resolved options: %s", cfg)
        body(cfg)
    except FlagSynthError as exc:
        err_console.print(f"[red]error:[/red] {escape(str(exc))}")
        raise typer.Exit(code=exc.exit_code)
    except OSError as exc:
        err_console.print(f"[red]error:[/red] {escape(str(exc))}")
        raise typer.Exit(code=InputError.exit_code)


def _load_dataset(cfg: RunConfig) -> InteractionDataset:
    if cfg.input is None:
        raise InputError("--input is required")
    with open_input(cfg.input) as fh:
        if cfg.format is InputFormat.ML1M_RATINGS:
            return parse_movielens_ratings(fh, dedup=cfg.dedup)
        if cfg.format is InputFormat.CSV:
            colmap = ColumnMap(
                delimiter=cfg.delimiter,
                entity_col=cfg.column(cfg.entity_col),
                counterpart_col=cfg.column(cfg.counterpart_col),
                header=cfg.header,
            )
            return parse_generic_interactions(fh, colmap, dedup=cfg.dedup)
    raise ParameterError(
        f"--format {cfg.format.value} describes an attribute table; pass it via --attributes/--attribute-format"
    )


def _load_distribution(cfg: RunConfig) -> ProfileSizeDistribution:
    return build_profiles(_load_dataset(cfg), pivot=cfg.pivot, max_size=cfg.max_size)


def _load_attributes(cfg: RunConfig) -> AttributeTable:
    if cfg.attributes is None:
        raise InputError("--attributes is required")
    with open_input(cfg.attributes) as fh:
        if cfg.attribute_format is InputFormat.ML1M_USERS:
            return parse_movielens_users(fh)
        if cfg.attribute_format is InputFormat.ML1M_MOVIES:
            return parse_movielens_movies(fh, cfg.genre)
        if cfg.attribute_format is InputFormat.CSV:
            return parse_attribute_csv(fh)
    raise ParameterError(f"--attribute-format {cfg.attribute_format.value} is not an attribute format")


def _params(cfg: RunConfig) -> FlagParams:
    if cfg.alpha is None or cfg.beta is None:
        raise ParameterError("--alpha and --beta are required")
    return FlagParams(alpha=cfg.alpha, beta=cfg.beta)


def _print_outputs(written: Dict[str, str]) -> None:
    print("\nOutputs:")
    for path in written.values():
        print(f"  - {path}")


@app.command()
def stats(
    input: Optional[str] = INPUT,
    format: Optional[InputFormat] = FORMAT,
    pivot: Optional[Pivot] = PIVOT,
    max_size: Optional[int] = MAX_SIZE,
    dedup: Optional[bool] = DEDUP,
    delimiter: Optional[str] = DELIMITER,
    entity_col: Optional[str] = ENTITY_COL,
    counterpart_col: Optional[str] = COUNTERPART_COL,
    header: Optional[bool] = HEADER,
    attributes: Optional[str] = ATTRIBUTES,
    attribute_format: Optional[InputFormat] = ATTRIBUTE_FORMAT,
    genre: Optional[str] = GENRE,
    allow_partial: Optional[bool] = ALLOW_PARTIAL,
    out: Optional[str] = OUT,
    config: Optional[str] = CONFIG,
):
    """Summarize the profile-size distribution and write it as CSV."""

    flags = dict(
        input=input, format=format, pivot=pivot, max_size=max_size, dedup=dedup, delimiter=delimiter,
        entity_col=entity_col, counterpart_col=counterpart_col, header=header, attributes=attributes,
        attribute_format=attribute_format, genre=genre, allow_partial=allow_partial, out=out,
    )

    def body(cfg: RunConfig) -> None:
        dist = _load_distribution(cfg)
        summ = summary(dist)
        files = {
            "distribution.csv": render_csv(
                [{"size": s, "count": c} for s, c in sorted(dist.counts.items()) if c > 0],
                ["size", "count"],
            ),
            "loglog.csv": render_csv(loglog_points(dist), loglog_fieldnames()),
        }
        report: Dict[str, Any] = {"pivot": dist.pivot.value, "k": dist.k, **summ.to_dict()}

        if cfg.attributes is not None:
            table = _load_attributes(cfg)
            observed = observed_group_distribution(dist, table, allow_partial=cfg.allow_partial)
            bound = observed.dist
            flagged = {e for e in bound.sizes if table.entries[e]}
            groups = {}
            for name, members in (("group_a", set(bound.sizes) - flagged), ("group_b", flagged)):
                groups[name] = summary(bound.restrict(members)).to_dict() if members else None
            report["attribute"] = observed.attribute_name
            report["groups"] = groups
            unflagged = {s: bound.counts.get(s, 0) - observed.counts.get(s, 0) for s in bound.counts}
            files["group_loglog.csv"] = render_csv(
                loglog_points(bound.counts, bound.k, {"group_a": unflagged, "group_b": observed.counts}),
                loglog_fieldnames(["group_a", "group_b"]),
            )

        files["stats.json"] = render_json(report)
        written = write_outputs(cfg.out, files)

        print(f"\n[bold]Profile sizes ({dist.pivot.value} pivot)[/bold]")
        print(f"Entities: [bold]{summ.total_entities}[/bold]  Interactions: [bold]{summ.total_interactions}[/bold]")
        print(f"k (max size): {summ.max}  mean: {summ.mean:.4f}  median: {summ.median}")
        for name, g in report.get("groups", {}).items():
            if g:
                print(f"  - {name}: {g['total_entities']} entities, mean size {g['mean']:.2f}")
        _print_outputs(written)

    _run(flags, config, body)


@app.command()
def estimate(
    input: Optional[str] = INPUT,
    format: Optional[InputFormat] = FORMAT,
    pivot: Optional[Pivot] = PIVOT,
    max_size: Optional[int] = MAX_SIZE,
    dedup: Optional[bool] = DEDUP,
    delimiter: Optional[str] = DELIMITER,
    entity_col: Optional[str] = ENTITY_COL,
    counterpart_col: Optional[str] = COUNTERPART_COL,
    header: Optional[bool] = HEADER,
    xmin: Optional[int] = typer.Option(None, "--xmin", help="Fixed lower cutoff"),
    scan_xmin: Optional[bool] = typer.Option(None, "--scan-xmin/--no-scan-xmin", help="Pick xmin by KS distance"),
    support: Optional[SupportChoice] = typer.Option(None, "--support", help="truncated at k, or infinite (zeta)"),
    out: Optional[str] = OUT,
    config: Optional[str] = CONFIG,
):
    """Estimate the power-law exponent of the profile-size distribution (JSON)."""

    flags = dict(
        input=input, format=format, pivot=pivot, max_size=max_size, dedup=dedup, delimiter=delimiter,
        entity_col=entity_col, counterpart_col=counterpart_col, header=header, xmin=xmin,
        scan_xmin=scan_xmin, support=support, out=out,
    )

    def body(cfg: RunConfig) -> None:
        dist = _load_distribution(cfg)
        fit = estimate_powerlaw_alpha(
            dist, xmin=cfg.xmin, scan_xmin=cfg.scan_xmin, support=cfg.support.to_support()
        )
        text = render_json(fit.to_dict())
        write_outputs(cfg.out, {"powerlaw_fit.json": text})
        typer.echo(text, nl=False)

    _run(flags, config, body)


@app.command()
def check(
    input: Optional[str] = INPUT,
    format: Optional[InputFormat] = FORMAT,
    pivot: Optional[Pivot] = PIVOT,
    max_size: Optional[int] = MAX_SIZE,
    dedup: Optional[bool] = DEDUP,
    delimiter: Optional[str] = DELIMITER,
    entity_col: Optional[str] = ENTITY_COL,
    counterpart_col: Optional[str] = COUNTERPART_COL,
    header: Optional[bool] = HEADER,
    alpha: Optional[float] = ALPHA,
    beta: Optional[float] = BETA,
    alpha_min: Optional[float] = ALPHA_MIN,
    alpha_max: Optional[float] = ALPHA_MAX,
    alpha_step: Optional[float] = ALPHA_STEP,
    out: Optional[str] = OUT,
    config: Optional[str] = CONFIG,
):
    """Report beta_max over an alpha sweep and judge a requested (alpha, beta)."""

    flags = dict(
        input=input, format=format, pivot=pivot, max_size=max_size, dedup=dedup, delimiter=delimiter,
        entity_col=entity_col, counterpart_col=counterpart_col, header=header, alpha=alpha, beta=beta,
        alpha_min=alpha_min, alpha_max=alpha_max, alpha_step=alpha_step, out=out,
    )
    verdict: List[bool] = []

    def body(cfg: RunConfig) -> None:
        alphas = frange(
            0.0 if cfg.alpha_min is None else cfg.alpha_min,
            3.0 if cfg.alpha_max is None else cfg.alpha_max,
            0.1 if cfg.alpha_step is None else cfg.alpha_step,
        )
        dist = _load_distribution(cfg)
        files = {"legality.csv": render_csv(legality_table(dist, alphas), ["alpha", "beta_max"])}
        if cfg.beta is not None:
            files["alpha_sweep.csv"] = render_csv(
                alpha_sweep(dist, cfg.beta, alphas),
                ["alpha", "beta_max", "legal", "mean_size_a", "mean_size_b"],
            )
        written = write_outputs(cfg.out, files)

        print("\n[bold]Legal beta range[/bold]")
        for row in legality_table(dist, alphas):
            print(f"  alpha={row['alpha']:g}  beta_max={row['beta_max']:.6f}")
        if cfg.alpha is not None:
            bmax = beta_max(dist, cfg.alpha)
            print(f"\nAt alpha={cfg.alpha:g}: beta_max = [bold]{bmax:.6f}[/bold]")
            loose = support_beta_max(dist, cfg.alpha)
            if dist.min_size > 1 and loose is not None:
                print(
                    f"  (smallest observed size is {dist.min_size}; "
                    f"p stays <= 1 on the observed sizes up to beta={loose:.6f})"
                )
            if cfg.beta is not None:
                legal = is_legal(dist, FlagParams(alpha=cfg.alpha, beta=cfg.beta))
                verdict.append(legal)
                tag = "[green]LEGAL[/green]" if legal else "[red]ILLEGAL[/red]"
                print(f"beta={cfg.beta:g}: {tag}")
        _print_outputs(written)

    _run(flags, config, body)
    if verdict and not verdict[0]:
        raise typer.Exit(code=EXIT_ILLEGAL)


@app.command()
def generate(
    input: Optional[str] = INPUT,
    format: Optional[InputFormat] = FORMAT,
    pivot: Optional[Pivot] = PIVOT,
    max_size: Optional[int] = MAX_SIZE,
    dedup: Optional[bool] = DEDUP,
    delimiter: Optional[str] = DELIMITER,
    entity_col: Optional[str] = ENTITY_COL,
    counterpart_col: Optional[str] = COUNTERPART_COL,
    header: Optional[bool] = HEADER,
    alpha: Optional[float] = ALPHA,
    beta: Optional[float] = BETA,
    seed: Optional[str] = SEED,
    legality: Optional[LegalityMode] = LEGALITY,
    workers: Optional[int] = WORKERS,
    out: Optional[str] = OUT,
    config: Optional[str] = CONFIG,
):
    """Assign A/B labels by one Bernoulli trial per entity."""

    flags = dict(
        input=input, format=format, pivot=pivot, max_size=max_size, dedup=dedup, delimiter=delimiter,
        entity_col=entity_col, counterpart_col=counterpart_col, header=header, alpha=alpha, beta=beta,
        seed=seed, legality=legality, workers=workers, out=out,
    )

    def body(cfg: RunConfig) -> None:
        params = _params(cfg)
        dist = _load_distribution(cfg)
        model = build_model(dist, params, cfg.legality)
        assignment = assign_labels(model, dist, cfg.resolved_seed(), workers=cfg.workers)
        realized = realized_stats(assignment, dist)

        per_size = realized_rows(realized, dist.k)
        files = {
            "labels.csv": render_csv(assignment.to_rows(), ["entity_id", "label"]),
            "labels.json": render_json(assignment.sidecar()),
            "attributes.csv": render_attribute_table(assignment.to_attribute_table()),
            "realized.csv": render_csv(per_size, ["size", "count", "count_a", "count_b"]),
            "realized_loglog.csv": render_csv(
                loglog_points(
                    dist.counts,
                    dist.k,
                    {
                        "group_a": {r["size"]: r["count_a"] for r in per_size},
                        "group_b": {r["size"]: r["count_b"] for r in per_size},
                    },
                ),
                loglog_fieldnames(["group_a", "group_b"]),
            ),
            "model.json": render_json(model.to_dict()),
        }
        written = write_outputs(cfg.out, files)

        print("\n[bold]Attribute generation complete[/bold]")
        print(f"Seed: {assignment.seed}  alpha={params.alpha:g}  beta={params.beta:g}  ({model.legality_mode.value})")
        print(f"Group A: [bold]{realized.count_a}[/bold]  Group B: [bold]{realized.count_b}[/bold]")
        print(f"Expected B: {params.beta * dist.total:.2f}")
        _print_outputs(written)

    _run(flags, config, body)


@app.command()
def fit(
    input: Optional[str] = INPUT,
    format: Optional[InputFormat] = FORMAT,
    pivot: Optional[Pivot] = PIVOT,
    max_size: Optional[int] = MAX_SIZE,
    dedup: Optional[bool] = DEDUP,
    delimiter: Optional[str] = DELIMITER,
    entity_col: Optional[str] = ENTITY_COL,
    counterpart_col: Optional[str] = COUNTERPART_COL,
    header: Optional[bool] = HEADER,
    attributes: Optional[str] = ATTRIBUTES,
    attribute_format: Optional[InputFormat] = ATTRIBUTE_FORMAT,
    genre: Optional[str] = GENRE,
    allow_partial: Optional[bool] = ALLOW_PARTIAL,
    beta_mode: Optional[BetaModeChoice] = typer.Option(None, "--beta-mode", help="fixed to the observed fraction, or searched"),
    alpha_min: Optional[float] = ALPHA_MIN,
    alpha_max: Optional[float] = ALPHA_MAX,
    alpha_step: Optional[float] = ALPHA_STEP,
    beta_min: Optional[float] = typer.Option(None, "--beta-min"),
    beta_max_: Optional[float] = typer.Option(None, "--beta-max"),
    beta_step: Optional[float] = typer.Option(None, "--beta-step"),
    bins_per_decade: Optional[int] = typer.Option(None, "--bins-per-decade"),
    surface: Optional[bool] = typer.Option(None, "--surface/--no-surface", help="Also write loss_surface.csv"),
    workers: Optional[int] = WORKERS,
    out: Optional[str] = OUT,
    config: Optional[str] = CONFIG,
):
    """Grid-search alpha and beta against a real binary attribute."""

    flags = dict(
        input=input, format=format, pivot=pivot, max_size=max_size, dedup=dedup, delimiter=delimiter,
        entity_col=entity_col, counterpart_col=counterpart_col, header=header, attributes=attributes,
        attribute_format=attribute_format, genre=genre, allow_partial=allow_partial, beta_mode=beta_mode,
        alpha_min=alpha_min, alpha_max=alpha_max, alpha_step=alpha_step, beta_min=beta_min,
        beta_max=beta_max_, beta_step=beta_step, bins_per_decade=bins_per_decade, surface=surface,
        workers=workers, out=out,
    )

    def body(cfg: RunConfig) -> None:
        dist = _load_distribution(cfg)
        table = _load_attributes(cfg)
        observed = observed_group_distribution(dist, table, allow_partial=cfg.allow_partial)
        options = FitOptions(
            beta_mode=cfg.beta_mode.to_beta_mode(),
            alpha_min=0.0 if cfg.alpha_min is None else cfg.alpha_min,
            alpha_max=3.0 if cfg.alpha_max is None else cfg.alpha_max,
            alpha_step=0.01 if cfg.alpha_step is None else cfg.alpha_step,
            beta_min=cfg.beta_min,
            beta_max=cfg.beta_max,
            beta_step=cfg.beta_step,
            bins_per_decade=cfg.bins_per_decade,
            keep_surface=cfg.surface,
            workers=cfg.workers,
        )
        result = fit_params(observed.dist, observed, options)
        model = build_model(observed.dist, FlagParams(alpha=result.alpha, beta=result.beta))
        expected_b = expected_b_vector(model)

        files = {
            "fit.json": render_json(
                {**result.to_dict(), "observed_fraction": observed.fraction, "attribute": observed.attribute_name}
            ),
            "attributes.csv": render_attribute_table(table),
            "fit_loglog.csv": render_csv(
                loglog_points(
                    observed.dist.counts,
                    observed.dist.k,
                    {
                        "observed_b": observed.counts,
                        "expected_b": {j + 1: float(v) for j, v in enumerate(expected_b)},
                    },
                ),
                loglog_fieldnames(["observed_b", "expected_b"]),
            ),
        }
        if result.surface is not None:
            files["loss_surface.csv"] = render_csv(
                [{"alpha": a, "beta": b, "objective": o} for a, b, o in result.surface],
                ["alpha", "beta", "objective"],
            )
        written = write_outputs(cfg.out, files)

        print("\n[bold]Fit complete[/bold]")
        print(f"Attribute: {escape(observed.attribute_name)}  observed fraction: {observed.fraction:.4f}")
        print(f"alpha = [bold]{result.alpha:g}[/bold]  beta = [bold]{result.beta:.4g}[/bold]  objective = {result.objective:.6g}")
        _print_outputs(written)

    _run(flags, config, body)


@app.command()
def expected(
    input: Optional[str] = INPUT,
    format: Optional[InputFormat] = FORMAT,
    pivot: Optional[Pivot] = PIVOT,
    max_size: Optional[int] = MAX_SIZE,
    dedup: Optional[bool] = DEDUP,
    delimiter: Optional[str] = DELIMITER,
    entity_col: Optional[str] = ENTITY_COL,
    counterpart_col: Optional[str] = COUNTERPART_COL,
    header: Optional[bool] = HEADER,
    alpha: Optional[float] = ALPHA,
    beta: Optional[float] = BETA,
    legality: Optional[LegalityMode] = LEGALITY,
    out: Optional[str] = OUT,
    config: Optional[str] = CONFIG,
):
    """Write expected per-size A/B counts for plotting."""

    flags = dict(
        input=input, format=format, pivot=pivot, max_size=max_size, dedup=dedup, delimiter=delimiter,
        entity_col=entity_col, counterpart_col=counterpart_col, header=header, alpha=alpha, beta=beta,
        legality=legality, out=out,
    )

    def body(cfg: RunConfig) -> None:
        params = _params(cfg)
        dist = _load_distribution(cfg)
        model = build_model(dist, params, cfg.legality)
        counts = expected_counts(model)

        log_rows = loglog_points(
            dist.counts,
            dist.k,
            {
                "log_expected_a": {e.size: e.expected_a for e in counts},
                "log_expected_b": {e.size: e.expected_b for e in counts},
            },
        )
        rows = [
            {
                "size": c.size,
                "expected_a": c.expected_a,
                "expected_b": c.expected_b,
                "total": c.total,
                "log_size": ll["log_size"],
                "log_expected_a": ll["log_expected_a"],
                "log_expected_b": ll["log_expected_b"],
            }
            for c, ll in zip(counts, log_rows)
        ]
        sum_b = math.fsum(c.expected_b for c in counts)
        files = {
            "expected.csv": render_csv(
                rows,
                ["size", "expected_a", "expected_b", "total", "log_size", "log_expected_a", "log_expected_b"],
                footer=[f"sum_expected_b={sum_b!r} beta_times_U={params.beta * dist.total!r}"],
            ),
            "model.json": render_json(model.to_dict()),
        }
        written = write_outputs(cfg.out, files)

        print("\n[bold]Expected counts[/bold]")
        print(f"Sum of expected B: [bold]{sum_b:.6f}[/bold]  (beta*|U| = {params.beta * dist.total:.6f})")
        _print_outputs(written)

    _run(flags, config, body)


if __name__ == "__main__":
    app()
