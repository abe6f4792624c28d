import numpy as np
import pytest

from ctpe.split import (
    ConstraintSpec,
    Observation,
    SplitResult,
    is_feasible,
    split_constraint,
    split_constraint_hard,
    split_objective_feasible,
    split_objective_vanilla,
    split_quantile_count,
)

SPEC = ConstraintSpec(threshold=0.0)


def obs(objective=None, constraint=None, hard=None, n_constraints=1):
    constraints = [None] * n_constraints
    flags = [None] * n_constraints
    if constraint is not None:
        constraints[0] = constraint
    if hard is not None:
        flags[0] = hard
    return Observation((0.5,), objective, tuple(constraints), tuple(flags))


def feasibility_pattern(flags):
    """Observations whose objective order equals insertion order; feasible
    entries have constraint value <= 0."""
    return [
        obs(objective=float(i), constraint=-1.0 if ok else 1.0)
        for i, ok in enumerate(flags)
    ]


class TestConstraintSpec:
    def test_measurable_needs_finite_threshold(self):
        with pytest.raises(ValueError):
            ConstraintSpec(threshold=None)
        with pytest.raises(ValueError):
            ConstraintSpec(threshold=float("inf"))

    def test_hard_takes_no_threshold_and_is_not_cheap(self):
        ConstraintSpec(kind="hard")
        with pytest.raises(ValueError):
            ConstraintSpec(kind="hard", threshold=1.0)
        with pytest.raises(ValueError):
            ConstraintSpec(kind="hard", cheap=True)

    def test_round_trip(self):
        spec = ConstraintSpec(threshold=2.5, cheap=True)
        assert ConstraintSpec.from_dict(spec.to_dict()) == spec


class TestObservation:
    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            obs(objective=float("nan"))
        with pytest.raises(ValueError):
            obs(objective=1.0, constraint=float("inf"))

    def test_hard_failure_flag(self):
        assert obs(hard=False).is_hard_failure
        assert not obs(objective=1.0, constraint=0.0).is_hard_failure

    def test_round_trip(self):
        record = obs(objective=2.0, constraint=0.5)
        assert Observation.from_dict(record.to_dict()) == record


class TestFeasibility:
    def test_all_measured_and_satisfied(self):
        assert is_feasible(obs(objective=1.0, constraint=-0.5), [SPEC])
        assert not is_feasible(obs(objective=1.0, constraint=0.5), [SPEC])

    def test_unmeasured_is_infeasible(self):
        assert not is_feasible(obs(objective=1.0), [SPEC])

    def test_hard_flag_required(self):
        hard = ConstraintSpec(kind="hard")
        assert is_feasible(obs(objective=1.0, hard=True), [hard])
        assert not is_feasible(obs(objective=1.0, hard=False), [hard])

    def test_no_constraints_always_feasible(self):
        record = Observation((0.5,), 1.0, (), ())
        assert is_feasible(record, ())


class TestObjectiveSplits:
    def test_quantile_count(self):
        assert split_quantile_count(9) == 1
        assert split_quantile_count(16) == 1
        assert split_quantile_count(100) == 3

    def test_feasible_walk_includes_leading_infeasible(self):
        # Nine observations, feasibility pattern F F F F T T F T T in
        # objective order: the good set runs through the first feasible one.
        data = feasibility_pattern([False] * 4 + [True, True, False, True, True])
        result = split_objective_feasible(data, [SPEC])
        assert result.good_indices == (0, 1, 2, 3, 4)
        assert result.gamma_hat == pytest.approx(5.0 / 9.0)

    def test_all_feasible_reduces_to_vanilla(self):
        data = feasibility_pattern([True] * 9)
        feasible = split_objective_feasible(data, [SPEC])
        vanilla = split_objective_vanilla(data)
        assert feasible == vanilla
        assert feasible.good_indices == (0,)

    def test_none_feasible_takes_everything(self):
        data = feasibility_pattern([False] * 9)
        result = split_objective_feasible(data, [SPEC])
        assert result.good_indices == tuple(range(9))
        assert result.gamma_hat == 1.0

    def test_vanilla_counts(self):
        data = feasibility_pattern([True] * 16)
        assert len(split_objective_vanilla(data).good_indices) == 1
        data = feasibility_pattern([True] * 100)
        assert len(split_objective_vanilla(data).good_indices) == 3

    def test_singleton(self):
        result = split_objective_vanilla([obs(objective=3.0, constraint=1.0)])
        assert result.good_indices == (0,)
        assert result.gamma_hat == 1.0

    def test_stable_tie_breaking(self):
        # Equal objectives: insertion order decides who enters the good set.
        data = [obs(objective=1.0, constraint=1.0) for _ in range(4)]
        assert split_objective_vanilla(data).good_indices == (0,)

    def test_hard_failures_excluded(self):
        hard = ConstraintSpec(kind="hard")
        data = [
            Observation((0.5,), None, (None,), (False,)),
            Observation((0.5,), 2.0, (None,), (True,)),
        ]
        result = split_objective_vanilla(data)
        assert result.good_indices == (1,)
        assert result.eligible_count == 1
        feas = split_objective_feasible(data, [hard])
        assert feas.eligible_count == 1

    def test_empty_eligible_set_rejected(self):
        with pytest.raises(ValueError):
            split_objective_vanilla([obs(hard=False)])


class TestConstraintSplit:
    def values(self, values):
        return [obs(objective=float(i), constraint=v) for i, v in enumerate(values)]

    def test_cut_at_largest_satisfying_value(self):
        result = split_constraint(self.values([1, 2, 3, 4, 5]), 0, 3.5)
        assert result.good_indices == (0, 1, 2)
        assert result.gamma_hat == pytest.approx(3.0 / 5.0)

    def test_no_satisfier_takes_best_value(self):
        result = split_constraint(self.values([1, 2, 3, 4, 5]), 0, 0.5)
        assert result.good_indices == (0,)
        assert result.gamma_hat == pytest.approx(1.0 / 5.0)

    def test_all_satisfy(self):
        result = split_constraint(self.values([1, 2, 3]), 0, 10.0)
        assert result.gamma_hat == 1.0

    def test_unmeasured_excluded(self):
        data = self.values([1.0, 2.0]) + [obs(objective=9.0)]
        result = split_constraint(data, 0, 1.5)
        assert result.eligible_count == 2

    def test_empty_eligible_rejected(self):
        with pytest.raises(ValueError):
            split_constraint([obs(objective=1.0)], 0, 1.0)


class TestHardSplit:
    def flags(self, flags):
        return [obs(hard=f) if f is not None else obs(objective=1.0) for f in flags]

    def test_partition(self):
        result = split_constraint_hard(self.flags([True, False, True]), 0)
        assert result.good_indices == (0, 2)
        assert result.gamma_hat == pytest.approx(2.0 / 3.0)

    def test_all_fail_leaves_empty_good_set(self):
        result = split_constraint_hard(self.flags([False, False]), 0)
        assert result.good_indices == ()
        assert result.gamma_hat == 0.0

    def test_all_ok(self):
        assert split_constraint_hard(self.flags([True, True]), 0).gamma_hat == 1.0

    def test_unflagged_excluded_and_empty_rejected(self):
        with pytest.raises(ValueError):
            split_constraint_hard(self.flags([None]), 0)


class TestSplitProperties:
    def test_partition_invariants_fuzz(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            threshold = float(rng.normal())
            data = [
                obs(objective=float(rng.normal()), constraint=float(rng.normal()))
                for _ in range(n)
            ]
            for result in (
                split_objective_vanilla(data),
                split_objective_feasible(data, [ConstraintSpec(threshold=threshold)]),
                split_constraint(data, 0, threshold),
            ):
                good, bad = set(result.good_indices), set(result.bad_indices)
                assert good | bad == set(range(n))
                assert not good & bad
                assert result.gamma_hat == len(good) / n
                assert result.good_indices or isinstance(result, SplitResult)
            assert split_objective_vanilla(data).good_indices
            assert split_objective_feasible(
                data, [ConstraintSpec(threshold=threshold)]
            ).good_indices
            assert split_constraint(data, 0, threshold).good_indices

    def test_feasible_equals_vanilla_when_all_feasible(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(1, 30))
            data = [
                obs(objective=float(rng.normal()), constraint=-abs(float(rng.normal())))
                for _ in range(n)
            ]
            assert split_objective_feasible(data, [SPEC]) == split_objective_vanilla(data)

    def test_good_set_is_exact_satisfier_set_when_nonempty(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            n = int(rng.integers(1, 30))
            values = rng.normal(size=n)
            threshold = float(rng.normal())
            data = [obs(objective=float(i), constraint=float(v)) for i, v in enumerate(values)]
            result = split_constraint(data, 0, threshold)
            satisfiers = {i for i, v in enumerate(values) if v <= threshold}
            if satisfiers:
                assert set(result.good_indices) == satisfiers

    def test_raising_threshold_never_shrinks_good_set(self):
        rng = np.random.default_rng(3)
        values = rng.normal(size=25)
        data = [obs(objective=float(i), constraint=float(v)) for i, v in enumerate(values)]
        previous = set()
        for threshold in np.linspace(-3, 3, 40):
            good = set(split_constraint(data, 0, float(threshold)).good_indices)
            assert previous <= good
            previous = good
