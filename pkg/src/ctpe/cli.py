"""Command-line interface: a thin client over the HTTP service.

Every command accepts ``--server URL`` to target a running service; without
it the service is mounted in-process, so results are identical either way.
Options can also be set through environment variables prefixed with ``CTPE_``
(for example ``CTPE_RUN_BUDGET=100``).
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .client import ServiceClient, ServiceError
from .harness import load_log, serialize_line, setting_id, shard_name


def _parse_floats(value: str | None) -> tuple[float, ...] | None:
    if value is None:
        return None
    return tuple(float(part) for part in value.split(",") if part.strip())


def _parse_ints(value: str | None) -> tuple[int, ...]:
    if value is None:
        return ()
    return tuple(int(part) for part in value.split(",") if part.strip())


@click.group()
def cli() -> None:
    """Constrained optimizer service, benchmark runner and summarizer."""


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("ctpe.service:app", host=host, port=port)


def _resolve_thresholds(
    client: ServiceClient,
    problem: str,
    threshold: tuple[float, ...] | None,
    gamma_true: tuple[float, ...] | None,
    n_grid: int,
    threshold_seed: int,
) -> tuple[float, ...]:
    if threshold is not None and gamma_true is not None:
        raise click.UsageError("--threshold and --gamma-true are mutually exclusive")
    if threshold is not None:
        return threshold
    if gamma_true is not None:
        return tuple(
            client.calibrate_thresholds(problem, gamma_true, n_grid=n_grid, seed=threshold_seed)
        )
    info = client.problem_info(problem)
    return tuple(info["default_thresholds"])


@cli.command()
@click.option("--problem", required=True, help="Benchmark problem name.")
@click.option("--gamma-true", default=None, help="Feasible-fraction target(s), comma separated.")
@click.option("--threshold", default=None, help="Explicit constraint threshold(s), comma separated.")
@click.option("--methods", default="ctpe,random", show_default=True, help="Comma-separated methods.")
@click.option("--budget", default=200, show_default=True, type=int)
@click.option("--seeds", default=50, show_default=True, type=int, help="Number of seeds.")
@click.option("--seed-base", default=0, show_default=True, type=int, help="First seed value.")
@click.option("--n-partial", default=200, show_default=True, type=int,
              help="Partial observations per run (used when --cheap is set).")
@click.option("--cheap", default=None, help="Comma-separated cheap constraint indices.")
@click.option("--n-init", default=10, show_default=True, type=int)
@click.option("--n-samples", default=24, show_default=True, type=int)
@click.option("--threshold-grid", default=10**6, show_default=True, type=int)
@click.option("--threshold-seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--server", default=None, help="Service URL; in-process when omitted.")
def run(
    problem: str,
    gamma_true: str | None,
    threshold: str | None,
    methods: str,
    budget: int,
    seeds: int,
    seed_base: int,
    n_partial: int,
    cheap: str | None,
    n_init: int,
    n_samples: int,
    threshold_grid: int,
    threshold_seed: int,
    out: str,
    server: str | None,
) -> None:
    """Run a seeded experiment matrix and write log shards plus a manifest."""
    method_list = tuple(m.strip() for m in methods.split(",") if m.strip())
    if not method_list:
        raise click.UsageError("--methods must name at least one method")
    if seeds < 1:
        raise click.UsageError("--seeds must be positive")
    gammas = _parse_floats(gamma_true)
    explicit = _parse_floats(threshold)
    cheap_indices = _parse_ints(cheap)
    seed_list = tuple(range(seed_base, seed_base + seeds))
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    with ServiceClient(server) as client:
        try:
            thresholds = _resolve_thresholds(
                client, problem, explicit, gammas, threshold_grid, threshold_seed
            )
            oracle = client.oracle(problem, thresholds)["oracle"]
            shards = []
            for method in method_list:
                for seed in seed_list:
                    cell = client.run_cell(
                        problem,
                        thresholds,
                        method,
                        seed,
                        budget=budget,
                        n_init=n_init,
                        n_samples=n_samples,
                        n_partial=n_partial,
                        cheap=cheap_indices,
                        gamma_true=gammas,
                    )
                    name = shard_name(cell["header"]["method"], seed)
                    lines = [serialize_line(cell["header"])]
                    lines += [serialize_line(record) for record in cell["records"]]
                    (out_dir / name).write_text("\n".join(lines) + "\n")
                    shards.append(name)
        except ServiceError as exc:
            raise click.ClickException(str(exc)) from exc
    manifest = {
        "schema": "ctpe-manifest/1",
        "problem": problem,
        "setting": setting_id(problem, thresholds, gammas),
        "thresholds": list(thresholds),
        "gamma_true": None if gammas is None else list(gammas),
        "oracle": oracle,
        "methods": list(method_list),
        "budget": budget,
        "seeds": list(seed_list),
        "n_partial": n_partial,
        "cheap": list(cheap_indices),
        "n_init": n_init,
        "n_samples": n_samples,
        "shards": sorted(shards),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    click.echo(
        f"wrote {len(shards)} shards ({len(method_list)} methods x {len(seed_list)} seeds, "
        f"budget {budget}) to {out_dir}"
    )


@cli.command()
@click.argument("logs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--checkpoints", default=None, help="Comma-separated checkpoint overrides.")
@click.option("--server", default=None, help="Service URL; in-process when omitted.")
def summarize(logs: tuple[str, ...], out: str, checkpoints: str | None, server: str | None) -> None:
    """Summarize log shards into comparison tables and a summary document.

    LOGS are shard files or directories containing ``*.jsonl`` shards.
    """
    paths: list[Path] = []
    for entry in logs:
        path = Path(entry)
        if path.is_dir():
            paths.extend(sorted(path.glob("*.jsonl")))
        else:
            paths.append(path)
    if not paths:
        raise click.UsageError("no log shards found")
    documents = [load_log(path) for path in paths]
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with ServiceClient(server) as client:
        try:
            response = client.summarize(documents, checkpoints=_parse_ints(checkpoints) or None)
        except ServiceError as exc:
            raise click.ClickException(str(exc)) from exc
    (out_dir / "summary.json").write_text(
        json.dumps(response["summary"], sort_keys=True, indent=2) + "\n"
    )
    for name, text in sorted(response["tables"].items()):
        (out_dir / name).write_text(text)
    click.echo(f"wrote summary.json and {len(response['tables'])} tables to {out_dir}")
    for row in response["summary"]["wins_loses_ties"]:
        click.echo(
            f"checkpoint {row['checkpoint']:>4}  {row['method']} vs {row['versus']}: "
            f"{row['wins']}/{row['loses']}/{row['ties']}"
        )


@cli.command()
@click.option("--problem", required=True, help="Benchmark problem name.")
@click.option("--threshold", default=None, help="Explicit constraint threshold(s), comma separated.")
@click.option("--gamma-true", default=None, help="Feasible-fraction target(s), comma separated.")
@click.option("--recompute", is_flag=True, help="Also recompute by grid search.")
@click.option("--grid-points", default=10**6, show_default=True, type=int)
@click.option("--threshold-grid", default=10**6, show_default=True, type=int)
@click.option("--threshold-seed", default=0, show_default=True, type=int)
@click.option("--server", default=None, help="Service URL; in-process when omitted.")
def oracle(
    problem: str,
    threshold: str | None,
    gamma_true: str | None,
    recompute: bool,
    grid_points: int,
    threshold_grid: int,
    threshold_seed: int,
    server: str | None,
) -> None:
    """Print a problem's best feasible objective value for given thresholds."""
    with ServiceClient(server) as client:
        try:
            thresholds = _resolve_thresholds(
                client,
                problem,
                _parse_floats(threshold),
                _parse_floats(gamma_true),
                threshold_grid,
                threshold_seed,
            )
            response = client.oracle(
                problem, thresholds, recompute=recompute, grid_points=grid_points
            )
        except ServiceError as exc:
            raise click.ClickException(str(exc)) from exc
    thresholds_text = ",".join(repr(t) for t in response["thresholds"])
    click.echo(f"problem={response['problem']} thresholds=[{thresholds_text}]")
    click.echo(f"oracle={response['oracle']!r}")
    if response.get("grid_oracle") is not None:
        click.echo(f"grid_oracle={response['grid_oracle']!r}")


def main() -> None:
    cli(auto_envvar_prefix="CTPE")


if __name__ == "__main__":
    main()
