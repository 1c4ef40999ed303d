"""Tests for the replication engine, its tallies and parameter sweeps."""

from dataclasses import replace

import numpy as np
import pytest

from seamsim import (
    CombinationConfig,
    EffectSpec,
    InfeasibleScenarioError,
    OperatingCharacteristics,
    SampleSizePlan,
    Scenario,
    SelectionRule,
    SubgroupCounts,
    TestSpec,
    build_score_model,
    closed_test,
    combine,
    effect_to_expectation,
    expected_sample_size,
    intersection_pvalue,
    larger_is_better,
    replication_stream,
    run_scenario,
    sample_replication,
    select_population,
    select_treatments,
    stage_pvalue,
    sweep,
)


def treatment_scenario(rule, method="bonferroni", reps=400, seed=777, **kw):
    effects = EffectSpec(
        design="treatment",
        early=(0.0, 0.3, 0.5, 0.7),
        final=(0.0, 0.10, 0.15, 0.20),
        correlation=0.4,
    )
    plan = SampleSizePlan(stage1_per_arm=60, stage2_per_arm=120)
    config = CombinationConfig.from_sample_sizes(60, 120)
    return Scenario(
        effects=effects,
        plan=plan,
        rule=rule,
        test=TestSpec(method, config),
        replications=reps,
        master_seed=seed,
        **kw,
    )


def subgroup_scenario(rule, method="simes", reps=400, seed=4242, **kw):
    effects = EffectSpec(
        design="subgroup",
        early=(0.6, 0.9),
        final=(0.6, 0.9),
        early_outcome="T",
        final_outcome="T",
        correlation=0.5,
    )
    plan = SampleSizePlan(stage1_per_arm=100, stage2_per_arm=300, enrich_per_arm=200)
    config = CombinationConfig.from_sample_sizes(100, 300)
    kw.setdefault("prevalence", 0.3)
    return Scenario(
        effects=effects,
        plan=plan,
        rule=rule,
        test=TestSpec(method, config),
        replications=reps,
        master_seed=seed,
        **kw,
    )


# ---------------------------------------------------------------------------
# scenario validation


def test_scenario_validation():
    with pytest.raises(ValueError, match="does not fit"):
        treatment_scenario(SelectionRule("threshold-pair", limits=(0, 0)))
    with pytest.raises(ValueError, match="does not fit"):
        subgroup_scenario(SelectionRule("all"))
    with pytest.raises(ValueError, match="Dunnett"):
        subgroup_scenario(SelectionRule("futility-pair", limits=(0, 0)), method="dunnett")
    with pytest.raises(ValueError, match="subgroup/full"):
        treatment_scenario(SelectionRule("all"), method="spiessens-debois")
    with pytest.raises(ValueError, match="prevalence"):
        subgroup_scenario(SelectionRule("futility-pair", limits=(0, 0)), prevalence=None)
    with pytest.raises(ValueError, match="prevalence"):
        treatment_scenario(SelectionRule("all"), prevalence=0.3)
    with pytest.raises(ValueError, match="ptest"):
        subgroup_scenario(SelectionRule("futility-pair", limits=(0, 0)), ptest=(1,))
    with pytest.raises(ValueError, match="1..K"):
        treatment_scenario(SelectionRule("all"), ptest=(3, 4))
    with pytest.raises(ValueError, match="replications"):
        treatment_scenario(SelectionRule("all"), reps=0)
    with pytest.raises(ValueError, match="replications"):
        treatment_scenario(SelectionRule("all"), reps=10_000_001)
    with pytest.raises(ValueError, match="unknown intersection"):
        TestSpec("holm", CombinationConfig())


def test_ptest_arms_are_normalised():
    scn = treatment_scenario(SelectionRule("all"), ptest=[3, 2, 3])
    assert scn.ptest == (2, 3)
    assert scn.design == "treatment"


def test_operating_characteristics_conservation_checks():
    with pytest.raises(ValueError, match="histogram"):
        OperatingCharacteristics(
            design="treatment",
            replications=10,
            futility_count=0,
            expected_total_sample_size=0.0,
            selected_size_counts=(4, 0, 0),
            arm_selected_counts=(4, 0, 0),
            hypothesis_rejected_counts=(0, 0, 0),
            any_rejected_count=0,
        )
    with pytest.raises(ValueError, match="branch counts"):
        OperatingCharacteristics(
            design="subgroup",
            replications=10,
            futility_count=1,
            expected_total_sample_size=0.0,
            subgroup_counts={"sub": SubgroupCounts(n=4), "full": SubgroupCounts(), "both": SubgroupCounts(n=4)},
            union_rejected_count=0,
        )


# ---------------------------------------------------------------------------
# exact sample-size identities


def test_select_all_never_stops_and_spends_the_full_budget():
    scn = treatment_scenario(SelectionRule("all"), reps=2000)
    oc = run_scenario(scn)
    k = scn.effects.comparisons
    assert oc.futility_count == 0
    assert oc.selected_size_counts == (0, 0, 2000)
    assert oc.arm_selected_counts == (2000,) * k
    # every replication recruits all four stage-1 and all four stage-2 cohorts
    assert oc.expected_total_sample_size == (k + 1) * 60 + (k + 1) * 120


def test_certain_futility_still_budgets_the_control_stage2_cohort():
    scn = treatment_scenario(SelectionRule("threshold", threshold=50.0), reps=1000)
    oc = run_scenario(scn)
    assert oc.futility_count == 1000
    assert oc.any_rejected_count == 0
    assert oc.selected_size_counts == (0, 0, 0)
    # the control group's stage-2 allocation is committed in every replication
    assert oc.expected_total_sample_size == 4 * 60 + 120


def test_subgroup_futility_recruits_stage_one_only():
    scn = subgroup_scenario(SelectionRule("futility-pair", limits=(-50.0, -50.0)), reps=500)
    oc = run_scenario(scn)
    assert oc.futility_count == 500
    assert oc.union_rejected_count == 0
    assert oc.expected_total_sample_size == 2 * 100
    assert all(c.n == 0 for c in oc.subgroup_counts.values())


# ---------------------------------------------------------------------------
# determinism


def test_thread_count_does_not_change_the_result():
    scn = treatment_scenario(SelectionRule("best-2"), method="dunnett", reps=10_000)
    serial = run_scenario(scn, threads=1)
    parallel = run_scenario(scn, threads=3)
    assert serial == parallel
    assert run_scenario(scn, threads=1) == serial


def test_varying_prevalence_runs_deterministically():
    scn = subgroup_scenario(
        SelectionRule("futility-pair", limits=(0.0, 0.0)),
        reps=2000,
        prevalence=0.1,
        prevalence_fixed=False,
    )
    # a tiny stage-1 cohort makes empty-subgroup redraws likely
    scn = replace(scn, plan=replace(scn.plan, stage1_per_arm=5))
    first = run_scenario(scn, threads=1)
    assert first == run_scenario(scn, threads=2)
    assert first.prevalence_redraws > 0
    fixed = run_scenario(replace(scn, prevalence_fixed=True))
    assert fixed.prevalence_redraws == 0


# ---------------------------------------------------------------------------
# the engine agrees exactly with the public single-replication functions


def _manual_treatment(scn):
    """Replay a treatment scenario replication-by-replication."""
    spec, plan, config = scn.effects, scn.plan, scn.test.config
    k = spec.comparisons
    model = build_score_model(spec, plan)
    orient = 1.0 if larger_is_better(spec.design, spec.early_outcome) else -1.0
    futility = 0
    size_hist = np.zeros(k, dtype=int)
    arm_counts = np.zeros(k, dtype=int)
    hyp_counts = np.zeros(k, dtype=int)
    any_count = 0
    ptest_count = 0
    for rep in range(scn.replications):
        stream = replication_stream(scn.master_seed, rep)
        x = sample_replication(model, stream).values
        outcome = select_treatments(orient * x[:k], scn.rule, stream)
        if outcome.stopped_for_futility:
            futility += 1
            continue
        cont = sorted(outcome.continued)
        size_hist[len(cont) - 1] += 1
        for arm in cont:
            arm_counts[arm - 1] += 1
        z1 = x[k : 2 * k]
        z2 = x[2 * k :]
        contributors = None
        if scn.follow_up:
            z2 = np.where(np.isin(np.arange(1, k + 1), cont), z2, z1)
            contributors = range(1, k + 1)
        rejected = closed_test(
            z1, z2, outcome, scn.test.intersection, config, stage2_contributors=contributors
        )
        for arm in rejected:
            hyp_counts[arm - 1] += 1
        any_count += bool(rejected)
        if scn.ptest is not None:
            ptest_count += bool(set(scn.ptest) & rejected)
    return futility, tuple(size_hist), tuple(arm_counts), tuple(hyp_counts), any_count, ptest_count


@pytest.mark.parametrize(
    "rule, method, follow_up",
    [
        (SelectionRule("best-2"), "bonferroni", False),
        (SelectionRule("threshold", threshold=0.8), "simes", False),
        (SelectionRule("random-1"), "bonferroni", False),
        (SelectionRule("best-1"), "bonferroni", True),
        (SelectionRule("epsilon", epsilon=0.5), "simes", False),
    ],
)
def test_engine_reproduces_the_single_replication_path(rule, method, follow_up):
    scn = treatment_scenario(rule, method=method, ptest=(2, 3), follow_up=follow_up)
    oc = run_scenario(scn)
    futility, sizes, arms, hyps, any_count, ptest_count = _manual_treatment(scn)
    assert oc.futility_count == futility
    assert oc.selected_size_counts == sizes
    assert oc.arm_selected_counts == arms
    assert oc.hypothesis_rejected_counts == hyps
    assert oc.any_rejected_count == any_count
    assert oc.ptest_rejected_count == ptest_count


def _manual_subgroup(scn):
    """Replay a subgroup scenario through the public per-replication API."""
    spec, plan, config = scn.effects, scn.plan, scn.test.config
    model = build_score_model(spec, plan, scn.prevalence)
    orient_early = 1.0 if larger_is_better(spec.design, spec.early_outcome) else -1.0
    orient_final = 1.0 if larger_is_better(spec.design, spec.final_outcome) else -1.0
    cohort = "stage2-enriched" if plan.enrich_per_arm is not None else "stage2-subgroup-only"
    sub_only_mean = float(effect_to_expectation(spec, plan, "final", cohort)[0])
    futility = 0
    union = 0
    branches = {name: np.zeros(5, dtype=int) for name in ("sub", "full", "both")}
    for rep in range(scn.replications):
        stream = replication_stream(scn.master_seed, rep)
        x = sample_replication(model, stream).values
        s = -orient_early * x[:2]
        outcome = select_population(s[0], s[1], scn.rule)
        if outcome.stopped_for_futility:
            futility += 1
            continue
        cont = outcome.continued
        name = {frozenset({1}): "sub", frozenset({2}): "full", frozenset({1, 2}): "both"}[cont]
        z2_native = x[4:6].copy()
        if name == "sub":
            z2_native[0] += sub_only_mean - model.mean[4]
        z1 = orient_final * x[2:4]
        z2 = orient_final * z2_native
        rejected = closed_test(z1, z2, outcome, scn.test.intersection, config, tau=scn.prevalence)
        p1 = intersection_pvalue(z1, scn.test.intersection, tau=scn.prevalence)
        alive = sorted(cont)
        p2 = intersection_pvalue(z2[[i - 1 for i in alive]], scn.test.intersection, tau=scn.prevalence)
        inter = combine(p1, p2, config).reject
        row = branches[name]
        row[0] += 1
        row[1] += 1 in rejected
        row[2] += 2 in rejected
        row[3] += rejected == {1, 2}
        row[4] += inter
        union += bool(rejected)
    return futility, branches, union


@pytest.mark.parametrize(
    "rule, method",
    [
        (SelectionRule("futility-pair", limits=(0.0, 0.0)), "simes"),
        (SelectionRule("threshold-pair", limits=(-0.1, 0.1)), "bonferroni"),
    ],
)
def test_engine_reproduces_the_subgroup_path(rule, method):
    scn = subgroup_scenario(rule, method=method)
    oc = run_scenario(scn)
    futility, branches, union = _manual_subgroup(scn)
    assert oc.futility_count == futility
    assert oc.union_rejected_count == union
    for name, row in branches.items():
        got = oc.subgroup_counts[name]
        assert (got.n, got.hs, got.hf, got.both, got.intersection) == tuple(row), name
    # the recorded expected sample size follows the branch counts exactly
    n_sub, n_rest = branches["sub"][0], branches["full"][0] + branches["both"][0]
    manual = 2 * 100 + 2 * (200 * n_sub + 300 * n_rest) / scn.replications
    assert oc.expected_total_sample_size == pytest.approx(manual, abs=1e-12)


def test_follow_up_changes_the_outcome_but_not_the_draws():
    base = treatment_scenario(SelectionRule("best-1"), reps=3000, seed=91)
    kept = run_scenario(replace(base, follow_up=True))
    dropped = run_scenario(base)
    # selection is identical; only the stage-2 evidence differs
    assert kept.selected_size_counts == dropped.selected_size_counts
    assert kept.arm_selected_counts == dropped.arm_selected_counts
    assert kept.hypothesis_rejected_counts != dropped.hypothesis_rejected_counts


# ---------------------------------------------------------------------------
# aggregate sanity


def test_ptest_union_brackets_its_members():
    scn = treatment_scenario(SelectionRule("best-2"), reps=4000, ptest=(2, 3))
    oc = run_scenario(scn)
    h2, h3 = oc.hypothesis_rejected_counts[1], oc.hypothesis_rejected_counts[2]
    assert max(h2, h3) <= oc.ptest_rejected_count <= h2 + h3
    assert oc.ptest_rejected_count <= oc.any_rejected_count
    assert max(oc.hypothesis_rejected_counts) <= oc.any_rejected_count


def test_power_increases_with_the_final_effect_sizes():
    base = treatment_scenario(SelectionRule("best-2"), reps=20_000, seed=5150)
    strong = replace(
        base,
        effects=replace(base.effects, final=tuple(1.5 * v for v in base.effects.final)),
    )
    weak_power = run_scenario(base).any_rejected_count
    strong_power = run_scenario(strong).any_rejected_count
    assert strong_power > weak_power


# ---------------------------------------------------------------------------
# sweeps


def test_single_point_sweep_equals_run_scenario():
    base = treatment_scenario(SelectionRule("threshold", threshold=1.0), reps=3000)
    (point,) = sweep(base, "threshold", [1.0])
    assert point.axis == "threshold"
    assert point.value == 1.0
    assert point.oc == run_scenario(base)


def test_sweep_points_use_consecutive_seeds():
    base = treatment_scenario(SelectionRule("threshold", threshold=1.0), reps=3000)
    first, second = sweep(base, "threshold", [1.0, 1.0])
    assert first.oc != second.oc  # same settings, independent draws
    assert second.oc == run_scenario(replace(base, master_seed=base.master_seed + 1))


def test_stage1_allocation_sweep_preserves_the_budget():
    base = treatment_scenario(SelectionRule("best-2"), reps=500)
    base = replace(
        base,
        effects=EffectSpec(
            design="treatment",
            early=(0.0, 0.3, 0.5, 0.7, 0.6),
            final=(0.0, 0.10, 0.15, 0.20, 0.18),
            correlation=0.4,
        ),
        plan=SampleSizePlan(stage1_per_arm=100, stage2_per_arm=300),
    )
    points = sweep(base, "stage1-allocation", [40, 100, 160])
    plans = [p.scenario.plan for p in points]
    assert [(p.stage1_per_arm, p.stage2_per_arm) for p in plans] == [
        (40, 400),
        (100, 300),
        (160, 200),
    ]
    for p in plans:
        assert 5 * p.stage1_per_arm + 3 * p.stage2_per_arm == 1400


def test_sweep_validation_errors():
    base = treatment_scenario(SelectionRule("best-2"), reps=100)
    with pytest.raises(ValueError, match="unknown sweep axis"):
        sweep(base, "alpha", [0.025])
    with pytest.raises(ValueError, match="at least one"):
        sweep(base, "threshold", [])
    with pytest.raises(InfeasibleScenarioError, match="threshold selection rule"):
        sweep(base, "threshold", [1.0])
    with pytest.raises(InfeasibleScenarioError, match="futility-pair"):
        sweep(base, "futility-limits-grid", [(0.0, 0.0)])
    with pytest.raises(InfeasibleScenarioError, match="budget"):
        sweep(base, "stage1-allocation", [61])
    with pytest.raises(InfeasibleScenarioError, match="positive integers"):
        sweep(base, "stage1-allocation", [0])
    thresh = treatment_scenario(SelectionRule("threshold", threshold=1.0), reps=100)
    with pytest.raises(InfeasibleScenarioError, match="best-m"):
        sweep(thresh, "stage1-allocation", [30])


def test_futility_limit_sweep_reruns_the_subgroup_rule():
    base = subgroup_scenario(SelectionRule("futility-pair", limits=(0.0, 0.0)), reps=800)
    points = sweep(base, "futility-limits-grid", [(0.0, 0.0), (-1.0, 0.0)])
    assert [p.scenario.rule.limits for p in points] == [(0.0, 0.0), (-1.0, 0.0)]
    # a stricter subgroup limit can only shrink the subgroup-side branches
    assert points[1].oc.subgroup_counts["sub"].n <= points[0].oc.subgroup_counts["sub"].n


def test_expected_sample_size_matches_the_recorded_value():
    scn = treatment_scenario(SelectionRule("threshold", threshold=0.8), reps=2000)
    oc = run_scenario(scn)
    assert expected_sample_size(scn, oc) == oc.expected_total_sample_size
