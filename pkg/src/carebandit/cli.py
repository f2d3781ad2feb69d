"""Command-line pipeline driver.

Subcommands run the stages synth -> fit -> impute -> replay -> report,
each writing its outputs under the chosen directory and recording a
fingerprint in ``manifest.json``.  A stage whose fingerprint and outputs
are unchanged is skipped unless ``--force`` is given.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_pipeline_config, pipeline_payload
from .domain import load_cohort, save_cohort
from .errors import CareBanditError, NumericalError, ConfigurationError
from .features import fit_feature_spec
from .manifest import (
    fingerprint,
    load_manifest,
    new_manifest,
    record_stage,
    save_manifest,
    stage_fingerprint,
    stage_info,
    stage_outputs,
)
from .oracle import (
    FullRewardTable,
    RewardOracle,
    default_candidates,
    fit_reward_model,
    impute_full_rewards,
    select_reward_model,
)
from .policies import PolicyConfig, PolicyKind
from .report import render_regret_chart, write_summary
from .simulator import (
    QuantileBand,
    RegretTrace,
    ReplayContext,
    aggregate_quantiles,
    grid_search,
    run_replications,
)
from .synth import generate_cohort

STAGE_ORDER = ("synth", "fit", "impute", "replay", "report")
BANDIT_ORDER = (PolicyKind.LINUCB, PolicyKind.LINTS)
BASELINE_ORDER = (PolicyKind.RANDOM, PolicyKind.LOGGED, PolicyKind.ORACLE_BEST)
DEFAULT_OUT_DIR = "carebandit_out"


def _series_name(kind, value=None):
    if value is None:
        return kind.value
    return f"{kind.value}_{value:g}"


class Pipeline:
    """Executes stages against one output directory."""

    def __init__(self, config, out_dir, force=False):
        self.config = config
        self.out = Path(out_dir)
        self.force = force
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "traces").mkdir(exist_ok=True)
        (self.out / "bands").mkdir(exist_ok=True)
        self.manifest_path = self.out / "manifest.json"
        if self.manifest_path.exists():
            self.manifest = load_manifest(self.manifest_path)
        else:
            self.manifest = new_manifest(
                __version__, config.replay.master_seed, pipeline_payload(config)
            )
        self.manifest["version"] = __version__
        self.manifest["master_seed"] = config.replay.master_seed
        self.manifest["config"] = pipeline_payload(config)
        self._payloads = pipeline_payload(config)

    # -- fingerprints and freshness --

    def expected_fingerprint(self, stage):
        if stage == "synth":
            return fingerprint(self._payloads["synth"])
        if stage == "fit":
            return fingerprint(
                self._payloads["oracle"], self.expected_fingerprint("synth")
            )
        if stage == "impute":
            return fingerprint({"stage": "impute"}, self.expected_fingerprint("fit"))
        if stage == "replay":
            return fingerprint(
                self._payloads["replay"], self.expected_fingerprint("impute")
            )
        if stage == "report":
            return fingerprint({"stage": "report"}, self.expected_fingerprint("replay"))
        raise ValueError(f"unknown stage {stage!r}")

    def _stage_complete(self, stage):
        if stage_fingerprint(self.manifest, stage) != self.expected_fingerprint(stage):
            return False
        outputs = stage_outputs(self.manifest, stage)
        return bool(outputs) and all((self.out / rel).exists() for rel in outputs)

    def up_to_date(self, stage):
        return not self.force and self._stage_complete(stage)

    def require_upstream(self, stage):
        for upstream in STAGE_ORDER[: STAGE_ORDER.index(stage)]:
            if not self._stage_complete(upstream):
                raise ConfigurationError(
                    f"stage '{stage}' needs up-to-date outputs of stage "
                    f"'{upstream}'; run `carebandit {upstream}` or `carebandit run` first"
                )

    def _finish(self, stage, outputs, info=None):
        record_stage(
            self.manifest, stage, self.expected_fingerprint(stage), outputs, info
        )
        save_manifest(self.manifest, self.manifest_path)

    # -- stages --

    def stage_synth(self):
        cohort, truth = generate_cohort(self.config.synth)
        save_cohort(cohort, self.out / "cohort.csv")
        truth.save(self.out / "ground_truth.txt")
        adverse = float(np.mean([rec.outcome == 0 for rec in cohort]))
        self._finish(
            "synth",
            ["cohort.csv", "ground_truth.txt"],
            info={"n_patients": len(cohort.records), "adverse_rate": adverse},
        )
        print(
            f"[synth] wrote cohort.csv ({len(cohort.records)} patients, "
            f"adverse rate {adverse:.3f})"
        )

    def stage_fit(self):
        cohort = load_cohort(self.out / "cohort.csv")
        settings = self.config.oracle
        selection = select_reward_model(
            cohort, default_candidates(), folds=settings.folds, seed=settings.seed
        )
        oracle = fit_reward_model(
            cohort,
            selection.config,
            threshold=settings.threshold,
            mode=settings.mode,
            seed=settings.seed,
            cv_auc=selection.cv_auc,
        )
        oracle.save(self.out / "oracle.json")
        self._finish(
            "fit",
            ["oracle.json"],
            info={"selected": selection.config.label(), "cv_auc": selection.cv_auc},
        )
        print(
            f"[fit] selected {selection.config.label()} "
            f"(cv AUC {selection.cv_auc:.4f})"
        )

    def stage_impute(self):
        cohort = load_cohort(self.out / "cohort.csv")
        oracle = RewardOracle.load(self.out / "oracle.json")
        table = impute_full_rewards(oracle, cohort)
        table.save(cohort, self.out / "rewards.csv")
        n_rows = sum(len(table.row(rec.patient_id)) for rec in cohort)
        self._finish("impute", ["rewards.csv"], info={"n_rewards": n_rows})
        print(f"[impute] wrote rewards.csv ({n_rows} imputed rewards)")

    def stage_replay(self):
        cohort = load_cohort(self.out / "cohort.csv")
        table = FullRewardTable.load(
            self.out / "rewards.csv", mode=self.config.oracle.mode
        )
        spec = fit_feature_spec(cohort, self.config.variant)
        context = ReplayContext(cohort, table, spec)
        replay = self.config.replay
        outputs = []
        series_index = {}
        selected = {}

        def persist(series, traces):
            trace_paths = []
            for rep, trace in enumerate(traces):
                rel = f"traces/{series}_rep{rep}.csv"
                trace.save(self.out / rel)
                trace_paths.append(rel)
            band = aggregate_quantiles(traces, label=series)
            band_rel = f"bands/{series}.csv"
            band.save(self.out / band_rel)
            outputs.extend(trace_paths + [band_rel])
            series_index[series] = {"traces": trace_paths, "band": band_rel}

        for kind in BANDIT_ORDER:
            best, traces_by_value = grid_search(
                cohort, table, kind, replay,
                variant=self.config.variant, lam=self.config.lam, context=context,
            )
            selected[kind.value] = best
            for value in sorted(traces_by_value):
                persist(_series_name(kind, value), traces_by_value[value])
            print(f"[replay] {kind.value}: selected exploration {best:g}")
        for kind in BASELINE_ORDER:
            traces = run_replications(
                cohort, table, PolicyConfig(kind=kind), replay, context=context
            )
            persist(_series_name(kind), traces)
        self._finish(
            "replay", outputs, info={"selected": selected, "series": series_index}
        )
        print(f"[replay] wrote {len(outputs)} trace/band files")

    def stage_report(self):
        info = stage_info(self.manifest, "replay")
        if not info:
            raise ConfigurationError(
                "stage 'report' needs stage 'replay'; run it first"
            )
        series_index = info["series"]
        selected = info["selected"]
        grid = self.config.replay.grid

        def band_for(series):
            return QuantileBand.load(self.out / series_index[series]["band"], series)

        fig1_series = []
        for kind in BANDIT_ORDER:
            for value in sorted(float(v) for v in grid):
                name = _series_name(kind, value)
                fig1_series.append((name, band_for(name)))
        render_regret_chart(
            self.out / "fig1.svg", fig1_series,
            title="Median cumulative regret by exploration setting",
        )

        fig2_series = []
        summary_rows = []
        roster = [
            (kind, float(selected[kind.value])) for kind in BANDIT_ORDER
        ] + [(kind, None) for kind in BASELINE_ORDER]
        for kind, value in roster:
            name = _series_name(kind, value)
            band = band_for(name)
            fig2_series.append((name, band))
            finals = [
                RegretTrace.load(self.out / rel).final_cum_reward
                for rel in series_index[name]["traces"]
            ]
            summary_rows.append(
                (kind.value, value, band.median[-1], float(np.median(finals)))
            )
        render_regret_chart(
            self.out / "fig2.svg", fig2_series,
            title="Policy comparison (median and interquartile band)",
            with_bands=True,
        )
        write_summary(self.out / "summary.csv", summary_rows)
        self._finish("report", ["fig1.svg", "fig2.svg", "summary.csv"])
        print("[report] wrote fig1.svg, fig2.svg, summary.csv")

    def run(self, stages):
        for stage in stages:
            if self.up_to_date(stage):
                print(f"[{stage}] up to date, skipping")
                continue
            self.require_upstream(stage)
            getattr(self, f"stage_{stage}")()


def build_parser():
    parser = argparse.ArgumentParser(
        prog="carebandit",
        description="Care-intervention bandit replay pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="INI config file with [synth]/[oracle]/[replay] sections")
    common.add_argument("--seed", type=int, default=None,
                        help="master seed applied to every stage")
    common.add_argument("--out-dir", metavar="PATH", default=DEFAULT_OUT_DIR,
                        help=f"output directory (default: {DEFAULT_OUT_DIR})")
    common.add_argument("--force", action="store_true",
                        help="rerun stages even when up to date")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "synth": "generate the synthetic cohort and ground-truth sidecar",
        "fit": "select and fit the counterfactual reward model",
        "impute": "impute the full reward table",
        "replay": "run the bandit replay experiment",
        "report": "render regret charts and the summary table",
        "run": "run every stage in order",
    }
    for name, text in descriptions.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    stages = STAGE_ORDER if args.command == "run" else (args.command,)
    try:
        config = load_pipeline_config(args.config, seed=args.seed)
        Pipeline(config, args.out_dir, force=args.force).run(stages)
    except NumericalError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (CareBanditError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
