"""Command-line entry point: ``atbat-mdp <command> ...``.

Every command builds its reports in memory and writes them only after all
stages succeed, so a failed run never leaves partial output behind. Reports
are CSV with a leading ``# <name> v1`` schema line, or JSON with sorted keys;
neither carries timestamps, so identical inputs and seeds give identical
bytes.

Exit codes: 0 success, 1 a stage failed, 2 bad usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .estimation import DEFAULT_POOLS, build_general_pools, estimate_transitions, general_policies
from .exceptions import AtBatError, EmptyTestData, StageError
from .exploit import ExploitResult, evaluate_root, intuitive_policy, run_hypothesis_test
from .ingest import dumps_atbat, group_by_pitcher, load_pitch_map, read_season
from .mdp import Policy, SolverConfig, policy_evaluation, root_value, value_iteration
from .model import TransitionModel
from .seeding import SEED_ENV_VAR, child_rng, resolve_seed
from .simulate import SimConfig, simulate_batter
from .spatial import BatterProfile, gate_batter, labeled_trajectories, train_classifier
from .states import ModelKind
from .synthgen import generate_season, load_specs

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    out_dir: Optional[Path] = None
    model_kind: ModelKind = ModelKind.SRLIB
    master_seed: Optional[int] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    n_pools: int = DEFAULT_POOLS
    repetitions: int = 100
    pitch_map: Optional[dict] = None


def csv_report(name: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# {name} v{SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return "" if v is None else v


def json_report(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _stage(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - every failure is reported with its stage
        raise StageError(name, exc) from exc


def _write_outputs(out_dir: Optional[Path], files: Mapping[str, str]) -> None:
    if out_dir is None:
        return
    for rel, text in files.items():
        path = out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _load(path, stage: str = "ingest"):
    return _stage(stage, read_season, path, strict=False)


def _require_seed(cfg: RunConfig) -> int:
    if cfg.master_seed is None:
        raise StageError("config", ValueError(f"a master seed is required (--seed or {SEED_ENV_VAR})"))
    return cfg.master_seed


# --------------------------------------------------------------------------- commands


def cmd_ingest(cfg: RunConfig) -> dict[str, str]:
    rows = []
    for path in cfg.inputs:
        data = _load(path)
        s = data.summary()
        reasons = ";".join(f"{k}={v}" for k, v in sorted(s["reject_reasons"].items()))
        rows.append([str(path), s["at_bats"], s["pitches"], s["pitchers"], s["rejects"], reasons])
    return {"ingest_summary.csv": csv_report(
        "ingest_summary", ["path", "at_bats", "pitches", "pitchers", "rejects", "reject_reasons"], rows)}


def cmd_synth(cfg: RunConfig, spec_path: str, n_atbats: int, season: int, swing_prob: float,
              batters: Sequence[str], trajectories: bool = True) -> dict[str, str]:
    seed = _require_seed(cfg)
    specs = _stage("synth", load_specs, spec_path)
    atbats = []
    for spec in specs:
        atbats.extend(_stage("synth", generate_season, spec, n_atbats, swing_prob, seed,
                             season=season, batter_ids=tuple(batters), with_trajectories=trajectories))
    return {f"season_{season}.jsonl": "".join(dumps_atbat(ab) + "\n" for ab in atbats)}


def cmd_estimate(cfg: RunConfig) -> dict[str, str]:
    files = {}
    for path in cfg.inputs:
        data = _load(path)
        for pid, abs_ in sorted(group_by_pitcher(data.at_bats).items()):
            model = _stage("estimate", estimate_transitions, abs_, cfg.model_kind, cfg.pitch_map)
            files[f"models/{pid}.json"] = json_report(model.to_dict())
            files[f"models/{pid}.csv"] = "# transition_model v1\n" + model.to_csv()
    return files


def cmd_solve(cfg: RunConfig) -> dict[str, str]:
    files = {}
    for path in cfg.inputs:
        model = _stage("solve", TransitionModel.load, path)
        policy, values = _stage("solve", value_iteration, model, cfg.solver)
        stem = Path(path).stem
        files[f"policies/{stem}.json"] = json_report(policy.to_dict())
        files[f"values/{stem}.json"] = json_report(dict(
            values.to_dict(), root_value=root_value(values, model.model_kind, model.pitch_class_counts)))
    return files


def cmd_evaluate(cfg: RunConfig, policy_path: str) -> dict[str, str]:
    policy = _stage("evaluate", lambda p: Policy.from_dict(json.loads(Path(p).read_text("utf-8"))), policy_path)
    rows = []
    for path in cfg.inputs:
        model = _stage("evaluate", TransitionModel.load, path)
        rows.append([str(path), _stage("evaluate", evaluate_root, model, policy, cfg.solver)])
    return {"evaluation.csv": csv_report("evaluation", ["model", "root_value"], rows)}


def cmd_pipeline(cfg: RunConfig, train_path, test_path) -> dict[str, str]:
    """Pitcher-specific vs general strategies on a held-out season."""
    seed = _require_seed(cfg)
    kind = cfg.model_kind
    train = group_by_pitcher(_load(train_path).at_bats)
    test = group_by_pitcher(_load(test_path).at_bats)
    pitchers = sorted(set(train) & set(test))
    if not pitchers:
        raise StageError("evaluate", EmptyTestData("no pitcher appears in both the training and the test season"))

    files = {}
    pools = _stage("general-pool", build_general_pools, train, seed, cfg.n_pools)
    pool_pols = _stage("general-pool", general_policies, pools, kind, cfg.solver, cfg.pitch_map)
    for k, pol in enumerate(pool_pols):
        files[f"policies/general_{k:02d}.json"] = json_report(pol.to_dict())

    results = []
    for pid in pitchers:
        m_train = _stage("estimate", estimate_transitions, train[pid], kind, cfg.pitch_map)
        m_test = _stage("estimate", estimate_transitions, test[pid], kind, cfg.pitch_map)
        pi, v_train = _stage("solve", value_iteration, m_train, cfg.solver)
        v_test = _stage("evaluate", policy_evaluation, m_test, pi, cfg.solver)
        j_specific = root_value(v_test, kind, m_test.pitch_class_counts)
        j_general = math.fsum(_stage("evaluate", evaluate_root, m_test, p, cfg.solver) for p in pool_pols) / len(pool_pols)
        j_intuitive = _stage("evaluate", evaluate_root, m_test, intuitive_policy(kind), cfg.solver)
        seasons = (train[pid][0].season, test[pid][0].season)
        results.append(ExploitResult(pid, seasons[0], seasons[1], j_specific, j_general, j_intuitive))
        files[f"models/{pid}.train.json"] = json_report(m_train.to_dict())
        files[f"models/{pid}.test.json"] = json_report(m_test.to_dict())
        files[f"policies/{pid}.json"] = json_report(pi.to_dict())
        files[f"values/{pid}.train.json"] = json_report(v_train.to_dict())
        files[f"values/{pid}.test.json"] = json_report(v_test.to_dict())

    report = _stage("hypothesis", run_hypothesis_test, results)
    header = list(results[0].row())
    files["exploit.csv"] = csv_report("exploit", header, [list(r.row().values()) for r in results])
    files["hypothesis.json"] = json_report(dict(report.to_dict(), model_kind=kind.value, pools=cfg.n_pools))
    return files


def load_profiles(path) -> list[BatterProfile]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    items = raw["batters"] if isinstance(raw, dict) else raw
    return [BatterProfile(d["batter_id"], int(d["strikeouts"]), int(d["plate_appearances"]), d.get("pitcher_id"))
            for d in items]


def cmd_simulate(cfg: RunConfig, train_path, test_path, profiles_path) -> dict[str, str]:
    """Gate batters on perceived pitch types, then simulate the admitted ones."""
    seed = _require_seed(cfg)
    kind = ModelKind.CRLIB
    train = group_by_pitcher(_load(train_path).at_bats)
    test = group_by_pitcher(_load(test_path).at_bats)
    profiles = _stage("profiles", load_profiles, profiles_path)
    sim_cfg = SimConfig(cfg.repetitions, seed)

    per_pitcher = {}
    gate_rows, line_rows = [], []
    for prof in profiles:
        pid = prof.pitcher_id
        if pid not in train or pid not in test:
            raise StageError("simulate", EmptyTestData(f"pitcher {pid!r} missing from the training or test season"))
        if pid not in per_pitcher:
            train_data = labeled_trajectories(train[pid], cfg.pitch_map)
            clf = _stage("classify", train_classifier, train_data)
            X = np.vstack([d.x for d in train_data])
            train_acc = float(np.mean(clf.predict(X) == np.array([int(d.label) for d in train_data])))
            policy, _ = _stage("solve", value_iteration, estimate_transitions(train[pid], kind, cfg.pitch_map), cfg.solver)
            per_pitcher[pid] = dict(
                clf=clf, train_acc=train_acc, policy=policy,
                test_data=labeled_trajectories(test[pid], cfg.pitch_map),
                model=_stage("estimate", estimate_transitions, test[pid], kind, cfg.pitch_map),
            )
        ctx = per_pitcher[pid]
        acc, admitted = _stage("gate", gate_batter, ctx["clf"], ctx["test_data"], prof,
                               child_rng(seed, "gate", prof.batter_id, pid))
        gate_rows.append([prof.batter_id, pid, prof.alpha, ctx["train_acc"], acc, ctx["clf"].chance_threshold_, admitted])
        if not admitted:
            continue
        atbats = [ab for ab in test[pid] if ab.batter_id == prof.batter_id]
        line = _stage("simulate", simulate_batter, atbats, ctx["policy"], ctx["model"], ctx["clf"], prof, sim_cfg)
        r = line.row()
        line_rows.append([prof.batter_id, pid, len(atbats), cfg.repetitions] + list(r.values()))

    return {
        "gate.csv": csv_report("gate", ["batter_id", "pitcher_id", "alpha", "train_accuracy", "test_accuracy",
                                        "chance_threshold", "admitted"], gate_rows),
        "batting.csv": csv_report("batting", ["batter_id", "pitcher_id", "at_bats", "repetitions",
                                              "AB", "H", "1B", "2B", "3B", "HR", "BB", "SO", "skipped",
                                              "AVG", "OBP", "SLG"], line_rows),
    }


# --------------------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=["srlib", "crlib"], default="srlib")
    common.add_argument("--seed", type=int, default=None, help=f"master seed (falls back to ${SEED_ENV_VAR})")
    common.add_argument("--epsilon", type=float, default=SolverConfig.epsilon)
    common.add_argument("--max-iter", type=int, default=SolverConfig.max_iterations)
    common.add_argument("--discount", type=float, default=SolverConfig.discount)
    common.add_argument("--pools", type=int, default=DEFAULT_POOLS)
    common.add_argument("--reps", type=int, default=100)
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--pitch-map", type=Path, default=None, help="JSON mapping raw pitch codes to classes")

    parser = argparse.ArgumentParser(prog="atbat-mdp", description="Batter strategy MDPs from pitch-by-pitch data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="validate seasons and summarise rejects")
    p.add_argument("paths", nargs="+")
    p = sub.add_parser("synth", parents=[common], help="generate a synthetic season from pitcher specs")
    p.add_argument("spec")
    p.add_argument("--atbats", type=int, default=1000)
    p.add_argument("--season", type=int, default=2009)
    p.add_argument("--swing-prob", type=float, default=0.5)
    p.add_argument("--batters", default="B000", help="comma-separated batter ids, assigned round robin")
    p.add_argument("--no-trajectories", action="store_true")
    p = sub.add_parser("estimate", parents=[common], help="per-pitcher transition models")
    p.add_argument("paths", nargs="+")
    p = sub.add_parser("solve", parents=[common], help="value iteration on saved models")
    p.add_argument("paths", nargs="+")
    p = sub.add_parser("evaluate", parents=[common], help="root value of a policy on saved models")
    p.add_argument("policy")
    p.add_argument("paths", nargs="+")
    p = sub.add_parser("pipeline", parents=[common], help="pitcher-specific vs general strategy report")
    p.add_argument("train")
    p.add_argument("test")
    p = sub.add_parser("simulate", parents=[common], help="gate batters and simulate their at-bats")
    p.add_argument("train")
    p.add_argument("test")
    p.add_argument("profiles")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        inputs=list(getattr(args, "paths", []) or []),
        out_dir=args.out,
        model_kind=ModelKind.parse(args.model),
        master_seed=resolve_seed(args.seed),
        solver=SolverConfig(epsilon=args.epsilon, max_iterations=args.max_iter, discount=args.discount),
        n_pools=args.pools,
        repetitions=args.reps,
        pitch_map=load_pitch_map(args.pitch_map) if args.pitch_map else None,
    )


def run(args: argparse.Namespace) -> dict[str, str]:
    cfg = config_from_args(args)
    if cfg.n_pools < 1 or cfg.repetitions < 1:
        raise StageError("config", ValueError("--pools and --reps must be at least 1"))
    if args.command == "ingest":
        return cmd_ingest(cfg)
    if args.command == "synth":
        return cmd_synth(cfg, args.spec, args.atbats, args.season, args.swing_prob,
                         [b for b in args.batters.split(",") if b], not args.no_trajectories)
    if args.command == "estimate":
        return cmd_estimate(cfg)
    if args.command == "solve":
        return cmd_solve(cfg)
    if args.command == "evaluate":
        return cmd_evaluate(cfg, args.policy)
    if args.command == "pipeline":
        return cmd_pipeline(cfg, args.train, args.test)
    return cmd_simulate(cfg, args.train, args.test, args.profiles)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        files = run(args)
    except (AtBatError, OSError, ValueError) as exc:
        print(f"atbat-mdp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.out is None:
        for rel, text in files.items():
            if rel.endswith(".csv") or len(files) == 1:
                sys.stdout.write(text)
    else:
        _write_outputs(args.out, files)
        for rel in files:
            print(args.out / rel)
    return 0


if __name__ == "__main__":
    sys.exit(main())
