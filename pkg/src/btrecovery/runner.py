"""Experiment orchestration and persistence.

A run writes one directory: a manifest echoing the configuration, one
sub-directory per repetition with the iteration history, the extracted
front, and the per-episode log (including each episode's executed plan), and
a summary over repetitions.  Identical configurations reproduce all CSVs
byte-for-byte; floats are written with ``repr`` so round-tripping is exact.

Repetitions are independent and may run in a process pool; set the
``BTRECOVERY_WORKERS`` environment variable (or ``RunConfig.workers``).
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .optimizer import (EvaluationRecord, ExperimentConfig, ExperimentResult,
                        RepetitionResult, run_repetition)
from .scenarios import ScenarioSpec, load_scenario, scenario_to_doc

MANIFEST_NAME = "manifest.json"
SUMMARY_NAME = "summary.csv"


@dataclass
class RunConfig:
    scenario: int
    iterations: int = 40
    evals: int = 5
    repetitions: int = 10
    seed: int = 0
    optimizer: str = "bo"
    out_dir: str = ""  # default: runs/scenario_<id>_seed_<seed>
    workers: int = 0   # 0: take BTRECOVERY_WORKERS, default 1

    def resolved_out_dir(self) -> str:
        return self.out_dir or f"runs/scenario_{self.scenario}_seed_{self.seed}"

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(iterations=self.iterations, evals=self.evals,
                                repetitions=self.repetitions, seed=self.seed,
                                optimizer=self.optimizer)

    def resolved_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        return max(1, int(os.environ.get("BTRECOVERY_WORKERS", "1")))


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def history_header(scenario: ScenarioSpec, evals: int) -> list:
    head = ["iteration"]
    head += [f"theta.{n}" for n in scenario.param_space.names]
    head += [f"insertion_reward_{k}" for k in range(evals)]
    head += [f"force_reward_{k}" for k in range(evals)]
    head += [f"success_{k}" for k in range(evals)]
    head += ["success_count", "mean_insertion_reward", "mean_force_reward"]
    return head


def _history_row(record: EvaluationRecord) -> list:
    row = [record.iteration]
    row += list(record.theta)
    row += [e.insertion_reward for e in record.episodes]
    row += [e.force_reward for e in record.episodes]
    row += [int(e.success) for e in record.episodes]
    row += [record.success_count, record.insertion_reward, record.force_reward]
    return row


def write_history_csv(path: Path, scenario: ScenarioSpec, records, evals: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(history_header(scenario, evals))
        for record in records:
            writer.writerow([_fmt(v) for v in _history_row(record)])


def write_episodes_csv(path: Path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "eval", "seed", "success",
                         "insertion_reward", "force_reward",
                         "min_lateral_error", "force_integral",
                         "final_status", "plan", "trigger"])
        for record in records:
            for k, ep in enumerate(record.episodes):
                writer.writerow([_fmt(v) for v in (
                    record.iteration, k, ep.seed, int(ep.success),
                    ep.insertion_reward, ep.force_reward,
                    ep.min_lateral_error, ep.force_integral,
                    ep.final_status, "|".join(ep.plan), "|".join(ep.trigger))])


def read_front_rows(path: Path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _repetition_dir(out: Path, repetition: int) -> Path:
    return out / f"rep_{repetition:02d}"


def write_repetition(out: Path, scenario: ScenarioSpec, rep: RepetitionResult,
                     evals: int) -> None:
    rep_dir = _repetition_dir(out, rep.repetition)
    rep_dir.mkdir(parents=True, exist_ok=True)
    write_history_csv(rep_dir / "history.csv", scenario, rep.records, evals)
    write_history_csv(rep_dir / "front.csv", scenario, rep.front, evals)
    write_episodes_csv(rep_dir / "episodes.csv", rep.records)


def write_manifest(out: Path, cfg: RunConfig, scenario: ScenarioSpec) -> None:
    doc = {
        "package": "btrecovery",
        "version": __version__,
        "config": {
            "scenario": cfg.scenario,
            "iterations": cfg.iterations,
            "evals": cfg.evals,
            "repetitions": cfg.repetitions,
            "seed": cfg.seed,
            "optimizer": cfg.optimizer,
        },
        "scenario_doc": scenario_to_doc(scenario),
    }
    with open(out / MANIFEST_NAME, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest_config(path: str, out_dir: str) -> RunConfig:
    with open(path) as fh:
        doc = json.load(fh)
    cfg = doc["config"]
    return RunConfig(scenario=cfg["scenario"], iterations=cfg["iterations"],
                     evals=cfg["evals"], repetitions=cfg["repetitions"],
                     seed=cfg["seed"], optimizer=cfg["optimizer"],
                     out_dir=out_dir)


def write_summary(out: Path, result: ExperimentResult) -> None:
    with open(out / SUMMARY_NAME, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["repetition", "found_successful_policy", "front_size",
                         "best_insertion_reward", "best_force_reward"])
        for rep in result.repetitions:
            writer.writerow([_fmt(v) for v in (
                rep.repetition, int(rep.found_successful_policy), len(rep.front),
                max(r.insertion_reward for r in rep.records),
                max(r.force_reward for r in rep.records))])


def _run_one(args) -> RepetitionResult:
    scenario_id, cfg, repetition = args
    return run_repetition(load_scenario(scenario_id), cfg, repetition)


def run(cfg: RunConfig) -> int:
    """Execute a full run and write all artifacts; returns the exit code."""
    try:
        scenario = load_scenario(cfg.scenario)
        out = Path(cfg.resolved_out_dir())
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out, cfg, scenario)

        ecfg = cfg.experiment_config()
        ecfg.validate()
        workers = cfg.resolved_workers()
        result = ExperimentResult(scenario_id=scenario.id, config=ecfg)
        jobs = [(cfg.scenario, ecfg, r) for r in range(cfg.repetitions)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                result.repetitions = list(pool.map(_run_one, jobs))
        else:
            result.repetitions = [_run_one(j) for j in jobs]

        for rep in result.repetitions:
            write_repetition(out, scenario, rep, cfg.evals)
        write_summary(out, result)
    except OSError as exc:
        print(f"error: {exc}")
        return 1
    return 0
