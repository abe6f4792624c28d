"""Experiment harness: seeded runs over toy problems, line-delimited logs,
and summary statistics across methods.

Each (method, seed) cell is one optimization trajectory written as a log
shard: a header line followed by one record per evaluation.  Everything is
deterministic given the experiment configuration, so reruns are
byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .benchmarks import ToyProblem, get_problem, threshold_for_quantile
from .optimizer import MODES, ControlParams, Optimizer
from .split import ConstraintSpec
from .stats import (
    RunRecord,
    absolute_percentage_loss,
    average_rank,
    wilcoxon_signed_rank,
    wins_loses_ties,
)

LOG_SCHEMA = "ctpe-log/1"
SUMMARY_SCHEMA = "ctpe-summary/1"
MANIFEST_SCHEMA = "ctpe-manifest/1"
CHECKPOINTS = (50, 100, 150, 200)

# Stream tag separating the partial-observation draws from the optimizer's own.
PARTIAL_SEED_STREAM = 104729

KA_SUFFIX = "+ka"
KA_MODES = ("ctpe", "naive")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment matrix: a problem, constraint levels, methods and seeds."""

    problem: str
    methods: tuple[str, ...]
    thresholds: tuple[float, ...] | None = None
    gamma_true: tuple[float, ...] | None = None
    budget: int = 200
    seeds: tuple[int, ...] = tuple(range(50))
    n_partial: int = 200
    cheap: tuple[int, ...] = ()
    n_init: int = 10
    n_samples: int = 24
    threshold_grid: int = 10**6
    threshold_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.methods:
            raise ValueError("at least one method is required")
        for method in self.methods:
            if method not in MODES:
                raise ValueError(f"unknown method {method!r}; expected one of {MODES}")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate methods")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("duplicate seeds")
        if self.budget < self.n_init:
            raise ValueError("budget must be at least n_init")
        if self.thresholds is not None and self.gamma_true is not None:
            raise ValueError("give explicit thresholds or gamma_true, not both")
        if self.thresholds is not None:
            object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if self.gamma_true is not None:
            object.__setattr__(self, "gamma_true", tuple(float(g) for g in self.gamma_true))
        object.__setattr__(self, "cheap", tuple(int(i) for i in self.cheap))
        if self.n_partial < 0:
            raise ValueError("n_partial must be >= 0")


def resolve_thresholds(problem: ToyProblem, config: ExperimentConfig) -> tuple[float, ...]:
    """Explicit thresholds, else quantile-calibrated, else the problem defaults."""
    n = len(problem.constraints)
    if config.thresholds is not None:
        if len(config.thresholds) != n:
            raise ValueError(f"expected {n} thresholds, got {len(config.thresholds)}")
        return config.thresholds
    if config.gamma_true is not None:
        if len(config.gamma_true) != n:
            raise ValueError(f"expected {n} gamma_true entries, got {len(config.gamma_true)}")
        return tuple(
            threshold_for_quantile(
                problem, i, g, n_grid=config.threshold_grid, seed=config.threshold_seed
            )
            for i, g in enumerate(config.gamma_true)
        )
    return problem.default_thresholds


def setting_id(
    problem: str,
    thresholds: Sequence[float],
    gamma_true: Sequence[float] | None = None,
) -> str:
    if gamma_true is not None:
        return f"{problem}|g=" + ",".join(format(g, ".6g") for g in gamma_true)
    return f"{problem}|thr=" + ",".join(repr(float(t)) for t in thresholds)


def method_label(method: str, n_partial: int, cheap: Sequence[int]) -> str:
    if n_partial > 0 and cheap and method in KA_MODES:
        return method + KA_SUFFIX
    return method


def serialize_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def parse_log_text(text: str) -> tuple[dict, list[dict]]:
    """Parse one shard: a header line followed by iteration records."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty log document")
    header = json.loads(lines[0])
    if header.get("kind") != "header" or header.get("schema") != LOG_SCHEMA:
        raise ValueError(f"missing or unsupported log header: {lines[0][:100]}")
    records = [json.loads(line) for line in lines[1:]]
    for record in records:
        if record.get("kind") != "record":
            raise ValueError("non-record line after the header")
    return header, records


def load_log(path: str | Path) -> tuple[dict, list[dict]]:
    return parse_log_text(Path(path).read_text())


def run_cell(
    problem: ToyProblem,
    thresholds: Sequence[float],
    method: str,
    seed: int,
    budget: int,
    n_init: int = 10,
    n_samples: int = 24,
    n_partial: int = 0,
    cheap: Sequence[int] = (),
    gamma_true: Sequence[float] | None = None,
) -> tuple[dict, list[dict]]:
    """Run one (method, seed) trajectory and return (header, records)."""
    if method not in MODES:
        raise ValueError(f"unknown method {method!r}; expected one of {MODES}")
    thresholds = tuple(float(t) for t in thresholds)
    if len(thresholds) != len(problem.constraints):
        raise ValueError("one threshold per constraint is required")
    cheap = tuple(sorted(int(i) for i in cheap))
    for i in cheap:
        if not 0 <= i < len(problem.constraints):
            raise ValueError(f"cheap constraint index {i} out of range")
    specs = tuple(
        ConstraintSpec(threshold=t, cheap=(i in cheap)) for i, t in enumerate(thresholds)
    )
    use_ka = n_partial > 0 and bool(cheap) and method in KA_MODES
    optimizer = Optimizer(
        problem.space,
        specs,
        mode=method,
        params=ControlParams(n_init=n_init, n_samples=n_samples, n_partial=n_partial),
        seed=seed,
    )
    if use_ka:
        partial_rng = np.random.default_rng([seed, PARTIAL_SEED_STREAM])
        for _ in range(n_partial):
            config = problem.space.sample_uniform(partial_rng)
            point = np.asarray(config, dtype=float)
            values = [
                float(problem.constraints[i](point)) if i in cheap else None
                for i in range(len(problem.constraints))
            ]
            optimizer.tell_partial(config, values)

    label = method_label(method, n_partial if use_ka else 0, cheap)
    header = {
        "kind": "header",
        "schema": LOG_SCHEMA,
        "problem": problem.name,
        "setting": setting_id(problem.name, thresholds, gamma_true),
        "method": label,
        "mode": method,
        "seed": int(seed),
        "thresholds": list(thresholds),
        "gamma_true": None if gamma_true is None else [float(g) for g in gamma_true],
        "budget": int(budget),
        "n_init": int(n_init),
        "n_samples": int(n_samples),
        "n_partial": int(n_partial) if use_ka else 0,
        "cheap": list(cheap),
    }
    records = []
    for iteration in range(1, budget + 1):
        config = optimizer.ask()
        objective, values = problem.evaluate(config)
        optimizer.tell(config, objective, values)
        feasible = all(v <= t for v, t in zip(values, thresholds))
        best = optimizer.best_feasible()
        records.append(
            {
                "kind": "record",
                "method": label,
                "seed": int(seed),
                "iteration": iteration,
                "config": list(optimizer.space.coerce(config)),
                "objective": objective,
                "constraints": list(values),
                "feasible": feasible,
                "best_feasible": None if best is None else best[1],
            }
        )
    return header, records


def shard_name(label: str, seed: int) -> str:
    return f"{label}__seed{seed:04d}.jsonl"


def run(config: ExperimentConfig, out_dir: str | Path) -> dict:
    """Run the full experiment matrix, writing one shard per (method, seed)
    plus a manifest; returns the manifest."""
    problem = get_problem(config.problem)
    thresholds = resolve_thresholds(problem, config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shards = []
    for method in config.methods:
        for seed in config.seeds:
            header, records = run_cell(
                problem,
                thresholds,
                method,
                seed,
                budget=config.budget,
                n_init=config.n_init,
                n_samples=config.n_samples,
                n_partial=config.n_partial,
                cheap=config.cheap,
                gamma_true=config.gamma_true,
            )
            name = shard_name(header["method"], seed)
            lines = [serialize_line(header)] + [serialize_line(r) for r in records]
            (out / name).write_text("\n".join(lines) + "\n")
            shards.append(name)
    oracle = problem.oracle(thresholds) if problem.oracle is not None else None
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "problem": config.problem,
        "setting": setting_id(config.problem, thresholds, config.gamma_true),
        "thresholds": list(thresholds),
        "gamma_true": None if config.gamma_true is None else list(config.gamma_true),
        "oracle": oracle,
        "methods": list(config.methods),
        "budget": config.budget,
        "seeds": list(config.seeds),
        "n_partial": config.n_partial,
        "cheap": list(config.cheap),
        "n_init": config.n_init,
        "n_samples": config.n_samples,
        "shards": sorted(shards),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest


# -- summarization -------------------------------------------------------------


def run_record_from_log(header: dict, records: list[dict], oracle: float | None) -> RunRecord:
    trace = tuple(r["best_feasible"] for r in records)
    final_loss = None
    if oracle is not None and trace and trace[-1] is not None:
        final_loss = absolute_percentage_loss(trace[-1], oracle)
    return RunRecord(
        method=header["method"],
        setting=header["setting"],
        seed=header["seed"],
        trace=trace,
        final_loss=final_loss,
    )


def _oracle_for_header(header: dict) -> float | None:
    try:
        problem = get_problem(header["problem"])
    except ValueError:
        return None
    if problem.oracle is None:
        return None
    return problem.oracle(tuple(header["thresholds"]))


def _checkpoint_value(trace: tuple[float | None, ...], checkpoint: int) -> float:
    value = trace[checkpoint - 1]
    return math.inf if value is None else value


def _loss_or_none(value: float, oracle: float | None) -> float | None:
    if oracle is None or math.isinf(value):
        return None
    return absolute_percentage_loss(value, oracle)


@dataclass
class _Setting:
    budget: int
    oracle: float | None
    traces: dict[str, dict[int, tuple[float | None, ...]]] = field(default_factory=dict)


def summarize(
    documents: Sequence[tuple[dict, list[dict]]],
    checkpoints: Sequence[int] = CHECKPOINTS,
) -> tuple[dict, dict[str, str]]:
    """Aggregate log documents into summary statistics and rendered tables.

    Requires at least two methods on aligned settings and seeds.  Returns the
    machine-readable summary plus ``{filename: csv text}`` tables.  Wilcoxon
    p-values pair per-setting medians when several settings are present,
    per-seed values otherwise; "greater" favours the row method, so a small
    p-value means the row method beats the column method.
    """
    if not documents:
        raise ValueError("no log documents given")
    settings: dict[str, _Setting] = {}
    for header, records in documents:
        if header.get("schema") != LOG_SCHEMA:
            raise ValueError(f"unsupported log schema: {header.get('schema')!r}")
        sid = header["setting"]
        entry = settings.setdefault(
            sid, _Setting(budget=header["budget"], oracle=_oracle_for_header(header))
        )
        if entry.budget != header["budget"]:
            raise ValueError(f"misaligned budgets within setting {sid!r}")
        if len(records) != header["budget"]:
            raise ValueError(
                f"setting {sid!r} seed {header['seed']}: "
                f"{len(records)} records for budget {header['budget']}"
            )
        record = run_record_from_log(header, records, entry.oracle)
        by_seed = entry.traces.setdefault(record.method, {})
        if record.seed in by_seed:
            raise ValueError(
                f"duplicate trajectory for {sid!r} / {record.method} / seed {record.seed}"
            )
        by_seed[record.seed] = record.trace

    setting_ids = sorted(settings)
    methods = sorted({m for s in settings.values() for m in s.traces})
    if len(methods) < 2:
        raise ValueError("summaries compare methods; at least two are required")
    budgets = {entry.budget for entry in settings.values()}
    if len(budgets) != 1:
        raise ValueError("misaligned settings: budgets differ across settings")
    budget = budgets.pop()
    seed_sets = {
        tuple(sorted(by_seed)) for entry in settings.values() for by_seed in entry.traces.values()
    }
    if len(seed_sets) != 1:
        raise ValueError("misaligned settings: seed sets differ across methods or settings")
    seeds = list(seed_sets.pop())
    for sid in setting_ids:
        if sorted(settings[sid].traces) != methods:
            raise ValueError(f"misaligned settings: methods differ in setting {sid!r}")

    effective = [c for c in checkpoints if c <= budget] or [budget]

    def values_at(sid: str, method: str, checkpoint: int) -> list[float]:
        traces = settings[sid].traces[method]
        return [_checkpoint_value(traces[seed], checkpoint) for seed in seeds]

    medians = {
        sid: {
            method: {c: float(np.median(values_at(sid, method, c))) for c in effective}
            for method in methods
        }
        for sid in setting_ids
    }

    wlt_rows = []
    wilcoxon_rows = []
    pairing = "settings" if len(setting_ids) > 1 else "seeds"
    for method in methods:
        for versus in methods:
            if method == versus:
                continue
            for c in effective:
                a = [medians[sid][method][c] for sid in setting_ids]
                b = [medians[sid][versus][c] for sid in setting_ids]
                wins, loses, ties = wins_loses_ties(a, b)
                wlt_rows.append(
                    {
                        "checkpoint": c,
                        "method": method,
                        "versus": versus,
                        "wins": wins,
                        "loses": loses,
                        "ties": ties,
                    }
                )
                if pairing == "settings":
                    left, right = np.asarray(b), np.asarray(a)
                else:
                    sid = setting_ids[0]
                    left = np.asarray(values_at(sid, versus, c))
                    right = np.asarray(values_at(sid, method, c))
                with np.errstate(invalid="ignore"):
                    diffs = left - right
                diffs = np.where(np.isnan(diffs), 0.0, diffs)  # inf - inf pairs tie
                try:
                    p_value = wilcoxon_signed_rank(diffs, alternative="greater")
                except ValueError:
                    p_value = None
                wilcoxon_rows.append(
                    {
                        "checkpoint": c,
                        "method": method,
                        "versus": versus,
                        "pairing": pairing,
                        "p_value": p_value,
                    }
                )

    rank_rows = []
    for c in effective:
        totals = {method: 0.0 for method in methods}
        for sid in setting_ids:
            ranks = average_rank([medians[sid][method][c] for method in methods])
            for method, rank in zip(methods, ranks):
                totals[method] += rank
        for method in methods:
            rank_rows.append(
                {"checkpoint": c, "method": method, "average_rank": totals[method] / len(setting_ids)}
            )

    def finite_or_none(value: float) -> float | None:
        return None if math.isinf(value) else value

    summary = {
        "schema": SUMMARY_SCHEMA,
        "settings": setting_ids,
        "methods": methods,
        "checkpoints": list(effective),
        "budget": budget,
        "seeds": seeds,
        "oracle": {sid: settings[sid].oracle for sid in setting_ids},
        "medians": {
            sid: {
                method: {str(c): finite_or_none(medians[sid][method][c]) for c in effective}
                for method in methods
            }
            for sid in setting_ids
        },
        "median_loss": {
            sid: {
                method: {
                    str(c): _loss_or_none(medians[sid][method][c], settings[sid].oracle)
                    for c in effective
                }
                for method in methods
            }
            for sid in setting_ids
        },
        "wins_loses_ties": wlt_rows,
        "average_rank": rank_rows,
        "wilcoxon": wilcoxon_rows,
    }
    tables = _render_tables(summary, settings, medians, effective, budget, seeds)
    return summary, tables


def _cell(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        if math.isinf(value):
            return "n/a"
        return repr(value)
    return str(value)


def _csv(rows: list[list], header: list[str]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _render_tables(summary, settings, medians, checkpoints, budget, seeds) -> dict[str, str]:
    median_rows = []
    for sid in summary["settings"]:
        oracle = settings[sid].oracle
        for method in summary["methods"]:
            for c in checkpoints:
                value = medians[sid][method][c]
                median_rows.append(
                    [sid, method, c, value, _loss_or_none(value, oracle)]
                )
    wlt_rows = [
        [r["checkpoint"], r["method"], r["versus"], r["wins"], r["loses"], r["ties"]]
        for r in summary["wins_loses_ties"]
    ]
    rank_rows = [
        [r["checkpoint"], r["method"], r["average_rank"]] for r in summary["average_rank"]
    ]
    wilcoxon_rows = [
        [r["checkpoint"], r["method"], r["versus"], r["pairing"], r["p_value"]]
        for r in summary["wilcoxon"]
    ]
    trace_rows = []
    for sid in summary["settings"]:
        entry = settings[sid]
        for method in summary["methods"]:
            traces = entry.traces[method]
            for iteration in range(1, budget + 1):
                values = [_checkpoint_value(traces[seed], iteration) for seed in seeds]
                med = float(np.median(values))
                trace_rows.append(
                    [sid, method, iteration, med, _loss_or_none(med, entry.oracle)]
                )
    return {
        "medians.csv": _csv(
            median_rows,
            ["setting", "method", "checkpoint", "median_best_feasible", "median_abs_pct_loss"],
        ),
        "wins_loses_ties.csv": _csv(
            wlt_rows, ["checkpoint", "method", "versus", "wins", "loses", "ties"]
        ),
        "average_rank.csv": _csv(rank_rows, ["checkpoint", "method", "average_rank"]),
        "wilcoxon.csv": _csv(
            wilcoxon_rows, ["checkpoint", "method", "versus", "pairing", "p_value"]
        ),
        "traces.csv": _csv(
            trace_rows,
            ["setting", "method", "iteration", "median_best_feasible", "median_abs_pct_loss"],
        ),
    }
