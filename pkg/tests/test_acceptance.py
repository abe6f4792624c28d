"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import math
import time

import numpy as np
import pytest
from click.testing import CliRunner

from ctpe.acquisition import relative_density_ratio, select_candidate
from ctpe.benchmarks import get_problem
from ctpe.cli import cli
from ctpe.harness import run_cell
from ctpe.kde import Kde
from ctpe.optimizer import Optimizer
from ctpe.space import ParamDomain, SearchSpace
from ctpe.split import (
    ConstraintSpec,
    Observation,
    split_constraint,
    split_objective_feasible,
    split_objective_vanilla,
)
from ctpe.stats import wilcoxon_signed_rank

from test_stats import brute_force_wilcoxon

PLANE = SearchSpace((ParamDomain.numerical(-5.0, 5.0), ParamDomain.numerical(-5.0, 5.0)))


def report(criterion, text):
    print(f"\nACCEPTANCE {criterion} PASS: {text}")


def test_criterion_1_loose_constraint_matches_unconstrained_selection():
    """With a threshold so loose everything is feasible, the constrained and
    unconstrained modes pick the same candidate from the shared objective pool
    at every iteration."""
    started = time.monotonic()
    problem = get_problem("quad_overlap")
    threshold = 1e9
    iterations, n_seeds = 100, 10
    checked = 0
    for seed in range(n_seeds):
        constrained = Optimizer(
            PLANE, (ConstraintSpec(threshold=threshold),), mode="ctpe", seed=seed
        )
        unconstrained = Optimizer(
            PLANE, (ConstraintSpec(threshold=threshold),), mode="vanilla_tpe", seed=seed
        )
        for _ in range(iterations):
            if len(constrained.observations) < constrained.params.n_init:
                config = unconstrained.ask()
                assert constrained.ask() == config
            else:
                proposal_c = constrained.propose()
                proposal_v = unconstrained.propose()
                pool_c = [c for c in proposal_c.candidates if c.source_component == 0]
                pool_v = list(proposal_v.candidates)
                assert [c.config for c in pool_c] == [c.config for c in pool_v]
                pick_c = select_candidate(pool_c)
                pick_v = select_candidate(pool_v)
                assert pick_c.sample_index == pick_v.sample_index
                assert pick_c.config == pick_v.config
                checked += 1
                config = pick_v.config
            objective, values = problem.evaluate(config)
            constrained.tell(config, objective, values)
            unconstrained.tell(config, objective, values)
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    report(1, f"{checked} shared-pool selections identical over "
              f"{n_seeds} seeds x {iterations} iterations ({elapsed:.1f}s)")


def _rrel_product(gammas, ratios):
    value = 1.0
    for gamma, r in zip(gammas, ratios):
        value *= relative_density_ratio(r, gamma)
    return value


def _rrel_partial(gammas, ratios, k):
    r_rel_k = relative_density_ratio(ratios[k], gammas[k])
    return (1.0 - gammas[k]) / ratios[k] ** 2 * r_rel_k * _rrel_product(gammas, ratios)


def test_criterion_2_sensitivity_ordering_and_derivative_check():
    """The acquisition is more sensitive to components with tighter empirical
    quantiles; analytic partials match finite differences."""
    rng = np.random.default_rng(0)
    accepted = 0
    while accepted < 10_000:
        g_i = float(rng.uniform(0.0, 1.0))
        g_j = float(rng.uniform(g_i, 1.0))
        if rng.uniform() < 0.02:
            g_j = 1.0
        r_i, r_j = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), 2))
        lhs = r_i + (g_i / (1.0 - g_i)) * r_i**2 if g_i < 1.0 else math.inf
        rhs = r_j + (g_j / (1.0 - g_j)) * r_j**2 if g_j < 1.0 else math.inf
        if lhs > rhs:
            continue
        accepted += 1
        partial_i = _rrel_partial([g_i, g_j], [r_i, r_j], 0)
        partial_j = _rrel_partial([g_i, g_j], [r_i, r_j], 1)
        assert partial_i >= partial_j - 1e-9
        assert partial_j >= -1e-9
        if g_j == 1.0:
            assert partial_j == 0.0
        else:
            assert partial_j > 0.0

    checked_fd = 0
    for _ in range(2_000):
        gammas = rng.uniform(0.0, 0.99, 3)
        ratios = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), 3))
        k = int(rng.integers(3))
        step = 1e-6 * max(1.0, ratios[k])
        up, down = ratios.copy(), ratios.copy()
        up[k] += step
        down[k] -= step
        fd = (_rrel_product(gammas, up) - _rrel_product(gammas, down)) / (2.0 * step)
        analytic = _rrel_partial(gammas, ratios, k)
        assert fd == pytest.approx(analytic, rel=1e-4)
        checked_fd += 1
    report(2, f"{accepted} admissible tuples ordered, {checked_fd} derivative checks")


def test_criterion_3_relative_ratio_identities():
    rng = np.random.default_rng(1)
    for gamma in rng.uniform(0.0, 1.0, 1000):
        assert relative_density_ratio(1.0, float(gamma)) == pytest.approx(1.0, abs=1e-12)
    for r in np.exp(rng.uniform(-20, 20, 1000)):
        assert relative_density_ratio(float(r), 1.0) == 1.0
    for gamma in (0.05, 0.3, 0.6, 0.95):
        assert relative_density_ratio(1e9, gamma) == pytest.approx(1.0 / gamma, rel=1e-6)
        assert relative_density_ratio(1e9, gamma) < 1.0 / gamma
    for _ in range(2000):
        gamma = float(rng.uniform(0.0, 0.999))
        log_r = float(rng.uniform(-15, 15))
        step = float(rng.uniform(1e-3, 3.0))
        assert relative_density_ratio(math.exp(log_r + step), gamma) > relative_density_ratio(
            math.exp(log_r), gamma
        )
    report(3, "unit/vanished identities, supremum bound at r=1e9, strict monotonicity")


def test_criterion_4_kde_normalization():
    rng = np.random.default_rng(2)
    for trial in range(100):
        lower = float(rng.uniform(-10, 5))
        width = float(rng.uniform(0.5, 20))
        space = SearchSpace((ParamDomain.numerical(lower, lower + width),))
        n = int(rng.integers(0, 12))
        points = [(float(rng.uniform(lower, lower + width)),) for _ in range(n)]
        kde = Kde.fit(space, points)
        grid = np.linspace(lower, lower + width, 10_000)
        density = np.exp(kde.log_pdf_many([(x,) for x in grid]))
        mass = float(np.trapezoid(density, grid))
        assert mass == pytest.approx(1.0, abs=1e-3), f"trial {trial}"
    for trial in range(50):
        cardinality = int(rng.integers(2, 7))
        space = SearchSpace((ParamDomain.categorical(cardinality),))
        n = int(rng.integers(0, 10))
        points = [(int(rng.integers(cardinality)),) for _ in range(n)]
        kde = Kde.fit(space, points)
        total = sum(kde.pdf((k,)) for k in range(cardinality))
        assert total == pytest.approx(1.0, abs=1e-12)
    report(4, "100 numerical fits integrate to 1 +/- 1e-3; categorical sums exact")


def test_criterion_5_split_correctness():
    def obs(objective, constraint):
        return Observation((0.0,), objective, (constraint,), (None,))

    spec = ConstraintSpec(threshold=0.0)
    pattern = [False] * 4 + [True, True, False, True, True]
    data = [obs(float(i), -1.0 if ok else 1.0) for i, ok in enumerate(pattern)]
    feasible_split = split_objective_feasible(data, [spec])
    assert len(feasible_split.good_indices) == 5
    assert feasible_split.gamma_hat == pytest.approx(5.0 / 9.0)

    vanilla_split = split_objective_vanilla(data)
    assert len(vanilla_split.good_indices) == 1

    values = [4.0, 2.5, 7.0, 9.1]
    data = [obs(float(i), v) for i, v in enumerate(values)]
    constraint_split = split_constraint(data, 0, 1.0)  # nothing satisfies
    assert constraint_split.good_indices == (1,)
    assert constraint_split.gamma_hat == pytest.approx(1.0 / 4.0)
    report(5, "feasible-aware 5/9 split, vanilla 1/9 split, min-value fallback")


def test_criterion_6_small_overlap_toy_outperforms_random():
    started = time.monotonic()
    problem = get_problem("quad_overlap")
    oracle = problem.oracle((3.0,))
    assert oracle == pytest.approx(2.3123, abs=1e-4)
    budget, seeds = 50, range(20)

    def final_best(method, seed):
        _, records = run_cell(problem, (3.0,), method, seed, budget=budget)
        return records[-1]["best_feasible"]

    ctpe_finals = [final_best("ctpe", seed) for seed in seeds]
    random_finals = [final_best("random", seed) for seed in seeds]

    found = sum(value is not None for value in ctpe_finals)
    assert found >= 0.95 * len(ctpe_finals)

    as_value = lambda v: math.inf if v is None else v
    ctpe_median = float(np.median([as_value(v) for v in ctpe_finals]))
    random_median = float(np.median([as_value(v) for v in random_finals]))
    assert ctpe_median < random_median

    diffs = []
    for mine, other in zip(ctpe_finals, random_finals):
        a, b = as_value(mine), as_value(other)
        diffs.append(0.0 if a == b else b - a)
    p_value = wilcoxon_signed_rank(diffs, alternative="greater")
    assert p_value < 0.05

    elapsed = time.monotonic() - started
    assert elapsed < 120.0
    report(
        6,
        f"feasible in {found}/20 seeds; medians {ctpe_median:.3f} < {random_median:.3f} "
        f"(oracle {oracle:.4f}, percentage-loss floor "
        f"{(ctpe_median - oracle) / oracle:.3f}); one-sided p={p_value:.2e} ({elapsed:.1f}s)",
    )


def test_criterion_7_hard_constraint_degenerate_case():
    specs = (ConstraintSpec(kind="hard"),)
    optimizer = Optimizer(PLANE, specs, seed=5)
    for _ in range(12):
        config = optimizer.ask()
        assert PLANE.validate(config) == []
        optimizer.tell(config, hard_ok=[False])
    proposal = optimizer.propose()
    hard = proposal.components[1]
    assert hard.gamma_hat == 0.0 and hard.good_count == 0
    uniform_density = 1.0 / (10.0 * 10.0)
    rng = np.random.default_rng(0)
    for _ in range(100):
        probe = PLANE.sample_uniform(rng)
        assert abs(hard.kde_good.pdf(probe) - uniform_density) < 1e-12
    next_config = optimizer.ask()
    assert PLANE.validate(next_config) == []
    report(7, "all-failing hard constraint: good density is the uniform prior, ask still valid")


def test_criterion_8_knowledge_augmentation_wiring():
    specs = (ConstraintSpec(threshold=3.0, cheap=True),)
    optimizer = Optimizer(PLANE, specs, seed=3)
    rng = np.random.default_rng(9)
    for _ in range(200):
        config = PLANE.sample_uniform(rng)
        optimizer.tell_partial(config, [(config[0] - 2.3) ** 2 + (config[1] - 2.3) ** 2])
    for _ in range(12):
        config = optimizer.ask()
        f = config[0] ** 2 + config[1] ** 2
        c = (config[0] - 2.3) ** 2 + (config[1] - 2.3) ** 2
        optimizer.tell(config, f, [c])
    proposal = optimizer.propose()
    assert proposal.components[0].eligible_count == 12
    assert proposal.components[1].eligible_count == 12 + 200

    problem = get_problem("quad_overlap")
    plain = run_cell(problem, (3.0,), "ctpe", 11, budget=25)
    no_partials = run_cell(problem, (3.0,), "ctpe", 11, budget=25, n_partial=0, cheap=(0,))
    assert plain[1] == no_partials[1]
    report(8, "augmented split sees |D|+200, objective sees |D|; N_p=0 trajectory bit-identical")


def test_criterion_9_wilcoxon_exact_oracle():
    assert wilcoxon_signed_rank([1, 2, 3, 4, 5], "greater") == pytest.approx(0.03125)
    rng = np.random.default_rng(4)
    cases = 0
    for _ in range(60):
        n = int(rng.integers(1, 13))
        diffs = rng.integers(-5, 6, n).astype(float)
        if not np.any(diffs != 0):
            continue
        for alternative in ("less", "greater", "two_sided"):
            mine = wilcoxon_signed_rank(diffs, alternative)
            oracle = brute_force_wilcoxon(diffs, alternative)
            assert mine == pytest.approx(oracle, abs=1e-12)
            cases += 1
    assert cases >= 120
    report(9, f"n=5 all-positive p=1/32; {cases} exact p-values match full enumeration")


def test_criterion_10_cli_reproducibility(tmp_path):
    runner = CliRunner()

    def run_and_summarize(tag):
        out = tmp_path / tag
        result = runner.invoke(
            cli,
            [
                "run",
                "--problem", "quad_overlap",
                "--threshold", "3",
                "--methods", "ctpe,random",
                "--budget", "14",
                "--seeds", "2",
                "--out", str(out / "logs"),
            ],
        )
        assert result.exit_code == 0, result.output
        result = runner.invoke(
            cli,
            ["summarize", str(out / "logs"), "--out", str(out / "summary")],
        )
        assert result.exit_code == 0, result.output
        payload = {}
        for path in sorted((out / "logs").iterdir()) + sorted((out / "summary").iterdir()):
            payload[path.name] = path.read_bytes()
        return payload

    first = run_and_summarize("a")
    second = run_and_summarize("b")
    assert first.keys() == second.keys()
    for name in first:
        assert first[name] == second[name], f"{name} differs between identical runs"
    report(10, f"{len(first)} log/summary files byte-identical across reruns")
