"""Score-statistic simulation model for two-stage selection designs.

Rather than simulating individual patients, each trial replication draws one
multivariate normal vector of standardized test statistics: the early-outcome
statistics used for the interim selection and the final-outcome statistics of
the stage-1 and stage-2 cohorts used for the closed testing procedure. Means
come from the outcome-specific effect translations below; the correlation
structure combines

* a shared-control (or nested-population) correlation between comparisons,
* the early/final outcome correlation ``rho`` for statistics computed on the
  same patients, and
* independence between the stage-1 and stage-2 recruitment cohorts, which is
  what makes the stage-wise p-values of the combination test independent.

Outcome conventions follow the usual reporting scales: normal effects are
mean advantages over control, time-to-event effects are minus log hazard
rates for treatment designs and hazard ratios for subgroup designs, binary
effects are event rates for treatment designs and odds ratios for subgroup
designs. Statistics keep their natural sign (hazard/odds-ratio statistics
are negative for beneficial effects); the engine re-orients internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statdist import cholesky_psd, equicorrelated_matrix

__all__ = [
    "TREATMENT",
    "SUBGROUP",
    "OUTCOME_TYPES",
    "COHORTS",
    "EffectSpec",
    "SampleSizePlan",
    "ScoreModel",
    "StageStatistics",
    "effect_to_expectation",
    "build_score_model",
    "sample_replication",
    "resolve_prevalence",
    "cumulative_correlation",
    "larger_is_better",
]

TREATMENT = "treatment"
SUBGROUP = "subgroup"
OUTCOME_TYPES = ("N", "T", "B")
COHORTS = ("stage1", "stage2-full", "stage2-subgroup-only", "stage2-enriched")

MAX_COMPARISONS = 8


@dataclass(frozen=True)
class EffectSpec:
    """Assumed treatment effects for the early and final outcomes.

    Attributes:
        design: "treatment" (several arms against one control) or "subgroup"
            (one treatment, tested in a subgroup and the full population).
        early: effect sizes for the early outcome. Treatment designs list the
            control first followed by K experimental arms; subgroup designs
            give the (subgroup, full population) pair.
        final: effect sizes for the final outcome, same layout.
        early_outcome / final_outcome: outcome type codes "N", "T" or "B".
        correlation: correlation between early and final statistics computed
            on the same patients, in [-1, 1].
    """

    design: str
    early: tuple
    final: tuple
    early_outcome: str = "N"
    final_outcome: str = "N"
    correlation: float = 0.0

    def __post_init__(self):
        if self.design not in (TREATMENT, SUBGROUP):
            raise ValueError(f"unknown design kind: {self.design!r}")
        object.__setattr__(self, "early", tuple(float(v) for v in self.early))
        object.__setattr__(self, "final", tuple(float(v) for v in self.final))
        if len(self.early) != len(self.final):
            raise ValueError("early and final effect vectors must have equal length")
        if self.design == TREATMENT:
            if len(self.early) < 2:
                raise ValueError("treatment designs need a control and at least one arm")
            if len(self.early) - 1 > MAX_COMPARISONS:
                raise ValueError(f"at most {MAX_COMPARISONS} experimental arms are supported")
        else:
            if len(self.early) != 2:
                raise ValueError("subgroup designs take exactly (subgroup, full) effects")
        for name, code in (("early", self.early_outcome), ("final", self.final_outcome)):
            if code not in OUTCOME_TYPES:
                raise ValueError(f"{name} outcome type must be one of {OUTCOME_TYPES}")
        if not -1.0 <= self.correlation <= 1.0:
            raise ValueError("outcome correlation must lie in [-1, 1]")
        for code, effects in ((self.early_outcome, self.early), (self.final_outcome, self.final)):
            _validate_effects(self.design, code, effects)

    @property
    def comparisons(self) -> int:
        """Number of comparisons against control (K for treatment, 2 populations)."""
        return len(self.early) - 1 if self.design == TREATMENT else 2


def _validate_effects(design: str, code: str, effects: tuple) -> None:
    if design == TREATMENT and code == "B":
        if any(not 0.0 < v < 1.0 for v in effects):
            raise ValueError("binary effects are event rates and must lie strictly in (0, 1)")
    if design == SUBGROUP and code in ("T", "B"):
        if any(v <= 0.0 for v in effects):
            raise ValueError("hazard/odds ratios must be positive")


@dataclass(frozen=True)
class SampleSizePlan:
    """Per-arm sample sizes for the two recruitment stages.

    Attributes:
        stage1_per_arm: patients per arm recruited before the interim.
        stage2_per_arm: patients per arm recruited after it (full population).
        enrich_per_arm: optional enriched stage-2 size used when a subgroup
            design continues in the subgroup only; defaults to stage2_per_arm.
        allocation_ratio: lambda in the shared-control correlation
            1/(1+lambda); 1 means equal allocation.
    """

    stage1_per_arm: int
    stage2_per_arm: int
    enrich_per_arm: int | None = None
    allocation_ratio: float = 1.0

    def __post_init__(self):
        for name in ("stage1_per_arm", "stage2_per_arm"):
            v = getattr(self, name)
            if int(v) != v or v <= 0:
                raise ValueError(f"{name} must be a positive integer")
            object.__setattr__(self, name, int(v))
        if self.enrich_per_arm is not None:
            if int(self.enrich_per_arm) != self.enrich_per_arm or self.enrich_per_arm <= 0:
                raise ValueError("enrich_per_arm must be a positive integer")
            object.__setattr__(self, "enrich_per_arm", int(self.enrich_per_arm))
        if self.allocation_ratio <= 0.0:
            raise ValueError("allocation_ratio must be positive")

    @property
    def arm_correlation(self) -> float:
        """Correlation 1/(1+lambda) between comparisons sharing the control."""
        return 1.0 / (1.0 + self.allocation_ratio)


def larger_is_better(design: str, outcome: str) -> bool:
    """Whether larger values of the standardized statistic favour treatment.

    Treatment designs parameterize survival and binary outcomes through minus
    log hazard rates / minus log odds, so all their statistics point upward.
    Subgroup designs take hazard or odds ratios, whose log-scale statistics
    are negative for beneficial effects.
    """
    return design == TREATMENT or outcome == "N"


# ---------------------------------------------------------------------------
# effect translations


def _z_normal(theta: float, theta0: float, n: float) -> float:
    return math.sqrt(n / 2.0) * (theta - theta0)


def _z_survival_minus_log_hazard(theta: float, theta0: float, n: float) -> float:
    # Exponential event times observed over one unit of follow-up; hazard in
    # arm k is exp(-theta_k). Expected events drive the log-rank information.
    events = n * (1.0 - math.exp(-math.exp(-theta0))) + n * (1.0 - math.exp(-math.exp(-theta)))
    return math.sqrt(events / 4.0) * (theta - theta0)


def _z_binary_rates(rate: float, rate0: float, n: float) -> float:
    # Effects arrive as event rates; the test statistic is the log odds ratio
    # over its standard error, oriented so fewer events score higher.
    theta = math.log((1.0 - rate) / rate)
    theta0 = math.log((1.0 - rate0) / rate0)
    events, events0 = n * rate, n * rate0
    for o in (events, events0):
        if not 0.0 < o < n:
            raise ValueError("binary outcome is degenerate: expected events outside (0, n)")
    var = 1.0 / events + 1.0 / (n - events) + 1.0 / events0 + 1.0 / (n - events0)
    return (theta - theta0) / math.sqrt(var)


def _z_hazard_ratio(hr: float, n: float) -> float:
    # Subgroup designs: effect is the hazard ratio against a unit-hazard
    # control, so expected events pool both arms.
    events = n * (1.0 - math.exp(-1.0)) + n * (1.0 - math.exp(-hr))
    return math.log(hr) * math.sqrt(events / 4.0)


def _z_odds_ratio(orr: float, n: float) -> float:
    # Analogous binary convention: odds ratio against a control at rate 1/2.
    rate = orr / (1.0 + orr)
    events, events0 = n * rate, n * 0.5
    if not 0.0 < events < n:
        raise ValueError("binary outcome is degenerate: expected events outside (0, n)")
    var = 1.0 / events + 1.0 / (n - events) + 1.0 / events0 + 1.0 / (n - events0)
    return math.log(orr) / math.sqrt(var)


def _expected_statistic(design: str, code: str, effect: float, control: float, n: float) -> float:
    if code == "N":
        return _z_normal(effect, control, n)
    if design == TREATMENT:
        if code == "T":
            return _z_survival_minus_log_hazard(effect, control, n)
        return _z_binary_rates(effect, control, n)
    if code == "T":
        return _z_hazard_ratio(effect, n)
    return _z_odds_ratio(effect, n)


def effect_to_expectation(
    spec: EffectSpec,
    plan: SampleSizePlan,
    endpoint: str,
    cohort: str,
    prevalence: float | None = None,
) -> np.ndarray:
    """Expected standardized statistics for one endpoint and one cohort.

    Args:
        spec: effect assumptions.
        plan: per-arm stage sample sizes.
        endpoint: "early" or "final".
        cohort: which recruitment cohort the statistic summarises. Treatment
            designs use "stage1" and "stage2-full". Subgroup designs add
            "stage2-subgroup-only" (continue in the subgroup at the planned
            full-population size) and "stage2-enriched" (continue in the
            subgroup at the enriched size).
        prevalence: subgroup prevalence tau, required for subgroup cohorts
            that recruit from the full population.

    Returns:
        Expected statistics on their natural reporting scale: length-K vector
        for treatment designs, (subgroup, full) pair for "stage1" and
        "stage2-full", single-entry vector for the subgroup-only cohorts.
    """
    if endpoint not in ("early", "final"):
        raise ValueError("endpoint must be 'early' or 'final'")
    if cohort not in COHORTS:
        raise ValueError(f"unknown cohort {cohort!r}")
    code = spec.early_outcome if endpoint == "early" else spec.final_outcome
    effects = spec.early if endpoint == "early" else spec.final

    if spec.design == TREATMENT:
        if cohort not in ("stage1", "stage2-full"):
            raise ValueError("treatment designs recruit 'stage1' and 'stage2-full' cohorts")
        n = plan.stage1_per_arm if cohort == "stage1" else plan.stage2_per_arm
        control = effects[0]
        return np.array(
            [_expected_statistic(TREATMENT, code, eff, control, n) for eff in effects[1:]]
        )

    sub_eff, full_eff = effects
    if cohort in ("stage1", "stage2-full"):
        if prevalence is None or not 0.0 < prevalence < 1.0:
            raise ValueError("subgroup cohorts recruiting the full population need a prevalence in (0, 1)")
        n = plan.stage1_per_arm if cohort == "stage1" else plan.stage2_per_arm
        return np.array(
            [
                _expected_statistic(SUBGROUP, code, sub_eff, 0.0, prevalence * n),
                _expected_statistic(SUBGROUP, code, full_eff, 0.0, n),
            ]
        )
    if cohort == "stage2-subgroup-only":
        n = plan.stage2_per_arm
    else:
        if plan.enrich_per_arm is None:
            raise ValueError("stage2-enriched cohort needs enrich_per_arm in the plan")
        n = plan.enrich_per_arm
    return np.array([_expected_statistic(SUBGROUP, code, sub_eff, 0.0, n)])


# ---------------------------------------------------------------------------
# joint model


@dataclass(frozen=True)
class ScoreModel:
    """Joint normal law of the statistics one replication draws.

    The vector is laid out endpoint-major: the early-outcome stage-1 block,
    the final-outcome stage-1 block, then the final-outcome block for the
    cohort recruited in stage 2 (independent of the first two). Subgroup
    models carry the "both populations continue" stage-2 means; the engine
    re-centres the subgroup entry when only the subgroup continues.

    Attributes:
        design: "treatment" or "subgroup".
        mean: expected statistics, natural sign conventions.
        covariance: correlation-scale covariance matrix.
        index_map: (endpoint, stage, comparison-index) -> vector position,
            with comparisons numbered from 1 (subgroup designs: 1=subgroup,
            2=full population).
        cholesky: cached lower-triangular factor of the covariance.
        prevalence: subgroup prevalence the model was built with, if any.
    """

    design: str
    mean: np.ndarray
    covariance: np.ndarray
    index_map: dict
    cholesky: np.ndarray
    prevalence: float | None = None

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]

    @property
    def comparisons(self) -> int:
        return self.dimension // 3

    def block(self, endpoint: str, stage: int) -> slice:
        """Slice of the statistic vector holding one (endpoint, stage) block."""
        k = self.comparisons
        start = self.index_map[(endpoint, stage, 1)]
        return slice(start, start + k)


def build_score_model(
    spec: EffectSpec,
    plan: SampleSizePlan,
    prevalence: float | None = None,
) -> ScoreModel:
    """Assemble the joint normal model for one replication's statistics.

    The correlation structure is a Kronecker product of the endpoint/stage
    pattern with the between-comparison matrix: comparisons sharing a control
    correlate at 1/(1+lambda), subgroup and full-population statistics at
    sqrt(tau), early and final statistics on the same cohort at rho, and the
    stage-2 cohort is independent of everything observed in stage 1.

    Args:
        spec: effect assumptions.
        plan: sample size plan.
        prevalence: subgroup prevalence tau (subgroup designs only).

    Returns:
        ScoreModel with mean, covariance and cached Cholesky factor.
    """
    k = spec.comparisons
    if spec.design == TREATMENT:
        unit = equicorrelated_matrix(k, plan.arm_correlation)
        mean = np.concatenate(
            [
                effect_to_expectation(spec, plan, "early", "stage1"),
                effect_to_expectation(spec, plan, "final", "stage1"),
                effect_to_expectation(spec, plan, "final", "stage2-full"),
            ]
        )
    else:
        if prevalence is None:
            raise ValueError("subgroup models need a prevalence")
        root_tau = math.sqrt(prevalence)
        unit = np.array([[1.0, root_tau], [root_tau, 1.0]])
        mean = np.concatenate(
            [
                effect_to_expectation(spec, plan, "early", "stage1", prevalence),
                effect_to_expectation(spec, plan, "final", "stage1", prevalence),
                effect_to_expectation(spec, plan, "final", "stage2-full", prevalence),
            ]
        )

    rho = spec.correlation
    zero = np.zeros_like(unit)
    cov = np.block(
        [
            [unit, rho * unit, zero],
            [rho * unit, unit, zero],
            [zero, zero, unit],
        ]
    )
    index_map = {}
    for b, (endpoint, stage) in enumerate((("early", 1), ("final", 1), ("final", 2))):
        for i in range(k):
            index_map[(endpoint, stage, i + 1)] = b * k + i
    return ScoreModel(
        design=spec.design,
        mean=mean,
        covariance=cov,
        index_map=index_map,
        cholesky=cholesky_psd(cov),
        prevalence=prevalence,
    )


@dataclass(frozen=True)
class StageStatistics:
    """Sampled standardized statistics for a single replication."""

    values: np.ndarray
    model: ScoreModel

    def get(self, endpoint: str, stage: int, comparison: int) -> float:
        return float(self.values[self.model.index_map[(endpoint, stage, comparison)]])

    @property
    def early(self) -> np.ndarray:
        return self.values[self.model.block("early", 1)]

    @property
    def final_stage1(self) -> np.ndarray:
        return self.values[self.model.block("final", 1)]

    @property
    def final_stage2(self) -> np.ndarray:
        return self.values[self.model.block("final", 2)]


def sample_replication(model: ScoreModel, stream: np.random.Generator) -> StageStatistics:
    """Draw one replication's statistic vector from its stream.

    Consumes exactly ``model.dimension`` standard normal variates, so results
    are reproducible from the stream state alone.
    """
    eps = stream.standard_normal(model.dimension)
    return StageStatistics(values=model.mean + model.cholesky @ eps, model=model)


def resolve_prevalence(
    prevalence: float,
    fixed: bool,
    stream: np.random.Generator,
    total_stage1: int,
) -> tuple[float, int]:
    """Stage-1 subgroup prevalence for one replication.

    With ``fixed`` the configured value is used as-is. Otherwise the realised
    prevalence is a binomial draw over the total stage-1 recruitment; draws in
    which the subgroup or its complement would be empty describe a trial the
    design cannot run, so they are discarded and redrawn.

    Args:
        prevalence: configured prevalence in (0, 1).
        fixed: whether the prevalence is treated as known.
        stream: the replication's random stream.
        total_stage1: total stage-1 recruitment across arms.

    Returns:
        (effective prevalence, number of discarded draws).
    """
    if not 0.0 < prevalence < 1.0:
        raise ValueError("prevalence must lie strictly in (0, 1)")
    if fixed:
        return prevalence, 0
    if total_stage1 < 2:
        raise ValueError("total stage-1 recruitment must be at least 2")
    redraws = 0
    while True:
        count = int(stream.binomial(total_stage1, prevalence))
        if 0 < count < total_stage1:
            return count / total_stage1, redraws
        redraws += 1


def cumulative_correlation(
    info_early: np.ndarray,
    info_final: np.ndarray,
    rho: float,
    unit: np.ndarray,
) -> np.ndarray:
    """Correlation matrix of cumulative statistics across looks and endpoints.

    On the score scale the looks of one endpoint have covariance
    min(I_j, I_j') and the cross-endpoint block is rho * min(I12_j, I12_j')
    with I12 = sqrt(I_early * I_final) elementwise. Standardizing gives,
    within an endpoint, corr = sqrt(I_j / I_j') for j <= j'; across
    endpoints at a common look, rho; and across endpoints and looks,
    rho * min(I12) / sqrt(I_early_j * I_final_j'). The result is the
    Kronecker product of this 2J-pattern with the between-comparison matrix.

    Args:
        info_early / info_final: strictly increasing positive information.
        rho: early/final outcome correlation.
        unit: between-comparison correlation matrix.

    Returns:
        Correlation matrix of dimension 2 * J * unit.shape[0], ordered
        endpoint-major then look then comparison.
    """
    i1 = np.asarray(info_early, dtype=float)
    i2 = np.asarray(info_final, dtype=float)
    if i1.shape != i2.shape or i1.ndim != 1:
        raise ValueError("information sequences must be 1-d with equal length")
    if np.any(i1 <= 0) or np.any(i2 <= 0) or np.any(np.diff(i1) <= 0) or np.any(np.diff(i2) <= 0):
        raise ValueError("information sequences must be positive and strictly increasing")
    i12 = np.sqrt(i1 * i2)

    def gs(info):
        return np.minimum.outer(info, info)

    cov = np.block(
        [
            [gs(i1), rho * gs(i12)],
            [rho * gs(i12), gs(i2)],
        ]
    )
    d = np.sqrt(np.diag(cov))
    corr = cov / np.outer(d, d)
    return np.kron(corr, np.asarray(unit, dtype=float))
