"""Experiment suites: build tasks, fan runs out to workers, fold the results.

Layout of one suite directory::

    <output_dir>/<suite>/
        manifest.json
        summary.csv               one row per (variant, seed)
        curves.svg
        M0.mdp.json, <source>.mdp.json
        <variant>/seed_000.csv    RunTrace of one run
        <variant>/curve.csv       median and IQR of the MNE curves

Every run of a suite shares the learner stream ``make_rng(base_seed,
"learn", seed)`` with the other variants at the same seed, so variants are
compared on common random numbers.
"""
import hashlib
import logging
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import joblib
import numpy as np
import pydantic
from joblib import Parallel, delayed

from src.harness.charts import plot_curves
from src.harness.config import ExperimentConfig, Settings, dump_config
from src.harness.output import (
    BOUNDS_COLUMNS,
    RUN_SUMMARY_COLUMNS,
    write_csv,
    write_curve_csv,
    write_manifest,
    write_trace_csv,
)
from src.learning.learner import LearnerConfig, SafeCondition, run
from src.mdp.core import Mdp, QTable
from src.mdp.errors import ConfigError, InvalidArgumentError
from src.mdp.generators import delta_tilde_bound, perturb, random_mdp
from src.mdp.metrics import mne
from src.mdp.oracle import solve_q_star
from src.mdp.rng import GENERATOR_NAME, make_rng
from src.mdp.serialization import mdp_to_json, save_mdp
from src.theory.verify import BoundCheckRow, expected_rate_slope, slope_report, verify_grid

logger = logging.getLogger(__name__)

BASELINE = "baseline"
BASE_TASK = "M0"


@dataclass(frozen=True)
class Variant:
    name: str
    mode: SafeCondition
    source: Optional[str] = None


@dataclass(frozen=True)
class RunSummary:
    variant: str
    seed: int
    final_mne: float
    auc_mne: float


@dataclass(frozen=True)
class VariantCurve:
    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray


@dataclass
class SuitePlan:
    """Everything a suite needs before the first learning run."""

    config: ExperimentConfig
    base: Mdp
    q_star: QTable
    sources: Dict[str, Mdp]
    source_q_stars: Dict[str, QTable]
    variants: List[Variant]
    solver_log: Dict[str, dict] = field(default_factory=dict)


@dataclass
class SuiteResult:
    suite_dir: Path
    runs: List[RunSummary]
    curves: Dict[str, VariantCurve]
    manifest: dict

    def final_mnes(self, variant: str) -> np.ndarray:
        return np.array([r.final_mne for r in self.runs if r.variant == variant])

    def median_final_mne(self, variant: str) -> float:
        return float(np.median(self.final_mnes(variant)))


def suite_variants(config: ExperimentConfig) -> List[Variant]:
    variants = [Variant(BASELINE, SafeCondition.NEVER_TRANSFER)]
    for source in config.sources:
        if config.suite == "exp-safecond":
            variants.append(Variant(f"{source.name}-W-SC", SafeCondition.BELLMAN_GATE, source.name))
            variants.append(Variant(f"{source.name}-WO-SC", SafeCondition.ALWAYS_TRANSFER, source.name))
        else:
            variants.append(Variant(source.name, SafeCondition.BELLMAN_GATE, source.name))
    return variants


def build_plan(config: ExperimentConfig) -> SuitePlan:
    """Generate M0 and the sources and solve every Q*.

    Raises ``ConfigError`` for an infeasible perturbation, before any
    learning run starts.
    """
    for source in config.sources:
        try:
            source.spec.check_feasible(config.gamma0)
        except InvalidArgumentError as e:
            raise ConfigError(f"source '{source.name}': {e}") from e

    base = random_mdp(
        config.n_states, config.n_actions, config.gamma0, make_rng(config.base_seed, "mdp", BASE_TASK)
    )
    solver_log: Dict[str, dict] = {}

    def solve(name: str, mdp: Mdp) -> QTable:
        report = solve_q_star(mdp, config.solver_tol)
        solver_log[name] = {
            "iterations": report.iterations,
            "residual": report.residual,
            "guaranteed_mne": report.guaranteed_mne,
        }
        return report.q_star

    q_star = solve(BASE_TASK, base)
    sources: Dict[str, Mdp] = {}
    source_q_stars: Dict[str, QTable] = {}
    for source in config.sources:
        mdp = perturb(base, source.spec, make_rng(config.base_seed, "perturb", source.name))
        sources[source.name] = mdp
        source_q_stars[source.name] = solve(source.name, mdp)
        logger.info(
            f"source {source.name}: {source.spec.axis.value} eps={source.spec.magnitude} "
            f"distance={mne(source_q_stars[source.name], q_star):.4f}"
        )

    return SuitePlan(
        config=config,
        base=base,
        q_star=q_star,
        sources=sources,
        source_q_stars=source_q_stars,
        variants=suite_variants(config),
        solver_log=solver_log,
    )


def _run_one(
    variant: Variant,
    seed: int,
    mdp_new: Mdp,
    q_source: Optional[QTable],
    q_star: QTable,
    learner_config: LearnerConfig,
    base_seed: int,
    trace_path: Path,
):
    trace = run(mdp_new, q_source, learner_config, q_star, make_rng(base_seed, "learn", seed))
    write_trace_csv(trace, trace_path)
    summary = RunSummary(
        variant=variant.name,
        seed=seed,
        final_mne=trace.final_mne,
        auc_mne=math.fsum(trace.mne),
    )
    return summary, trace.mne


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _manifest(plan: SuitePlan) -> dict:
    config = plan.config
    mdps = {BASE_TASK: plan.base, **plan.sources}
    return {
        "suite": config.suite,
        "config": config.model_dump(mode="json"),
        "config_text": dump_config(config),
        "config_hash": config.config_hash(),
        "seeds": list(range(config.seeds)),
        "rng": {
            "generator": GENERATOR_NAME,
            "base_task": f"make_rng(base_seed, 'mdp', '{BASE_TASK}')",
            "sources": "make_rng(base_seed, 'perturb', <source>)",
            "learner": "make_rng(base_seed, 'learn', <seed>)",
        },
        "variants": [
            {"name": v.name, "safe_condition": v.mode.value, "source": v.source} for v in plan.variants
        ],
        "mdp_sha256": {name: _sha256(mdp_to_json(mdp)) for name, mdp in mdps.items()},
        "source_distance": {
            name: mne(q, plan.q_star) for name, q in plan.source_q_stars.items()
        },
        "delta_tilde": {
            name: delta_tilde_bound(plan.base, mdp).total for name, mdp in plan.sources.items()
        },
        "solver": plan.solver_log,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "pydantic": pydantic.VERSION,
            "joblib": joblib.__version__,
        },
    }


def run_suite(config: ExperimentConfig, settings: Optional[Settings] = None) -> SuiteResult:
    """Run every (variant, seed) of ``config`` and write the suite directory."""
    settings = settings or Settings()
    plan = build_plan(config)
    suite_dir = config.suite_dir()
    suite_dir.mkdir(parents=True, exist_ok=True)
    for name, mdp in {BASE_TASK: plan.base, **plan.sources}.items():
        save_mdp(mdp, suite_dir / f"{name}.mdp.json")

    tasks = []
    for variant in plan.variants:
        learner_config = LearnerConfig(
            horizon=config.horizon,
            safe_condition=variant.mode,
            safe_check_period=config.safe_check_period,
        )
        q_source = plan.source_q_stars[variant.source] if variant.source else None
        for seed in range(config.seeds):
            tasks.append(
                delayed(_run_one)(
                    variant,
                    seed,
                    plan.base,
                    q_source,
                    plan.q_star,
                    learner_config,
                    config.base_seed,
                    suite_dir / variant.name / f"seed_{seed:03d}.csv",
                )
            )

    logger.info(
        f"Running {config.suite}: {len(plan.variants)} variants x {config.seeds} seeds "
        f"on {settings.workers} worker(s)"
    )
    outputs = Parallel(n_jobs=settings.workers)(tasks)

    order = {v.name: i for i, v in enumerate(plan.variants)}
    outputs = sorted(outputs, key=lambda item: (order[item[0].variant], item[0].seed))
    runs = [summary for summary, _ in outputs]

    curves: Dict[str, VariantCurve] = {}
    for variant in plan.variants:
        stack = np.stack([curve for summary, curve in outputs if summary.variant == variant.name])
        q25, median, q75 = np.percentile(stack, [25, 50, 75], axis=0)
        curves[variant.name] = VariantCurve(median=median, q25=q25, q75=q75)
        write_curve_csv(median, q25, q75, suite_dir / variant.name / "curve.csv")
        logger.info(f"{variant.name}: median final MNE {median[-1]:.4e}")

    write_csv(
        suite_dir / "summary.csv",
        RUN_SUMMARY_COLUMNS,
        ((r.variant, r.seed, r.final_mne, r.auc_mne) for r in runs),
    )
    manifest = _manifest(plan)
    write_manifest(manifest, suite_dir / "manifest.json")

    plot_curves(
        {name: suite_dir / name / "curve.csv" for name in curves},
        suite_dir / "curves.svg",
        title=config.suite,
    )
    return SuiteResult(suite_dir=suite_dir, runs=runs, curves=curves, manifest=manifest)


def run_similarity_suite(config: ExperimentConfig, settings: Optional[Settings] = None) -> SuiteResult:
    """Baseline plus one gated TTQL variant per source (nine by default)."""
    if config.suite not in ("exp-similarity", "custom"):
        raise ConfigError(f"expected an exp-similarity config, got suite '{config.suite}'")
    return run_suite(config, settings)


def run_safecond_suite(config: ExperimentConfig, settings: Optional[Settings] = None) -> SuiteResult:
    """Baseline plus W-SC (gated) and WO-SC (always transfer) runs per source."""
    if config.suite != "exp-safecond":
        raise ConfigError(f"expected an exp-safecond config, got suite '{config.suite}'")
    return run_suite(config, settings)


def run_bounds_verify(output_dir: Path) -> List[BoundCheckRow]:
    """Write the coefficient bound grid and fitted rate slopes as CSVs."""
    output_dir = Path(output_dir)
    rows = verify_grid()
    write_csv(
        output_dir / "bounds.csv",
        BOUNDS_COLUMNS,
        (
            (
                r.n,
                r.gamma_beta_star,
                r.exact_sum,
                r.thm2,
                r.exact_alpha,
                r.thm3,
                r.thm2_ok,
                r.thm3_ok,
                r.thm2_ratio,
                r.thm3_ratio,
            )
            for r in rows
        ),
    )
    slopes = slope_report()
    write_csv(
        output_dir / "slopes.csv",
        ("gamma_beta_star", "fitted_slope", "expected_slope"),
        ((gb, slope, expected_rate_slope(gb)) for gb, slope in slopes.items()),
    )
    return rows
