"""Command-line surface tying the modules into reproducible experiments.

Subcommands:

    gen-data   generate benchmark train/val/test JSONL files plus a manifest
    train      run on-policy training, writing a per-step CSV and checkpoints
    eval       evaluate a checkpoint on a dataset split
    score      score a rollout JSONL file (CRPS, WIS, bracket, rewards)
    calib      spread-versus-error calibration from rollouts or a checkpoint

Configuration is a flat JSON object; command-line flags override file
values. Every command echoes its fully resolved config into the output
directory, and re-running from that echo reproduces all outputs byte for
byte. Exit codes: 0 success, 1 usage or config error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .evaluate import calibration_fit, calibration_from_policy, evaluate_policy
from .rewards import DegenerateRolloutError, compute_rewards
from .scoring import crps_empirical, wis
from .synthetic import MixtureTaskSpec, make_dataset
from .trainer import (NumericFailureError, ResumeState, TrainConfig, train)

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_STREAM_SPLIT = 44  # keys the validation carve-out apart from record streams


class UsageError(Exception):
    """Bad flags, bad config keys, or invalid configuration values."""


class DataError(Exception):
    """Missing or malformed input files."""


# Flat configuration schema: key -> (type tag, default). The echoed config
# carries every key so a run is fully described by one JSON object.
CONFIG_SCHEMA: dict[str, tuple[str, object]] = {
    "seed": ("int", 7),
    "out_dir": ("str", None),
    "data_dir": ("str", None),
    # mixture task
    "logistic_slope": ("float", 1.2),
    "mean_slope": ("float", 1.0 / 3.0),
    "wave_amp": ("float", 1.2),
    "wave_freq": ("float", 0.8),
    "noise_base": ("float", 0.12),
    "noise_amp": ("float", 0.28),
    "noise_freq": ("float", 0.7),
    "train_range": ("floatlist", [-6.0, 6.0]),
    "extrap_outer": ("float", 10.0),
    # data generation
    "n_train": ("int", 1200),
    "n_test": ("int", 600),
    "val_fraction": ("float", 0.1),
    # training
    "reward_mode": ("str", "dar"),
    "k_rollouts": ("int", 12),
    "batch_size": ("int", 256),
    "learning_rate": ("float", 0.5),
    "kl_coef": ("float", 0.001),
    "max_steps": ("int", 300),
    "temperature": ("float", 1.0),
    "advantage_epsilon": ("float", 1e-8),
    "eval_every": ("int", 10),
    # policy geometry
    "n_bins": ("int", 81),
    "bin_range": ("floatlist", [-6.0, 6.0]),
    "n_basis": ("int", 32),
    "basis_range": ("floatlist", [-12.0, 12.0]),
    "bandwidth": ("float", 0.75),
    # evaluation and scoring
    "eval_samples": ("int", 32),
    "eval_repeats": ("int", 5),
    "alpha_levels": ("floatlist", [0.2, 0.4, 0.6, 0.8]),
    "invalid_mode": ("str", "min_batch"),
    "fixed_penalty": ("float", -1.0),
    "split": ("str", "test"),
    "checkpoint": ("str", None),
    "rollout_file": ("str", None),
    "resume": ("str", None),
}

COMMANDS = {
    "gen-data": "generate benchmark train/val/test JSONL files plus a manifest",
    "train": "run on-policy training, writing a per-step CSV and checkpoints",
    "eval": "evaluate a checkpoint on a dataset split",
    "score": "score a rollout JSONL file (CRPS, WIS, bracket, rewards)",
    "calib": "spread-versus-error calibration from rollouts or a checkpoint",
}


def _parse_floatlist(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError(f"expected comma-separated numbers, got {text!r}")
    return [float(p) for p in parts]


def _coerce(key: str, value):
    kind = CONFIG_SCHEMA[key][0]
    if value is None:
        return None
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "floatlist":
            return _parse_floatlist(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid value for {key!r}: {value!r} ({exc})") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distreward",
                     description="CRPS-scored rollout rewards, toy policy training, "
                                 "and distributional evaluation")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for command, description in COMMANDS.items():
        p = sub.add_parser(command, add_help=True, help=description)
        p.add_argument("--config", default=None,
                       help="JSON config file; flags override its values")
        for key in CONFIG_SCHEMA:
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None,
                           help=argparse.SUPPRESS)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then config-file values, then explicit flags."""
    cfg = {key: default for key, (_, default) in CONFIG_SCHEMA.items()}
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            raise DataError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {path} ({exc})") from exc
        if not isinstance(loaded, dict):
            raise UsageError(f"config file must hold a JSON object: {path}")
        loaded.pop("command", None)
        for key, value in loaded.items():
            if key not in CONFIG_SCHEMA:
                raise UsageError(f"unknown config key {key!r} in {path}")
            cfg[key] = _coerce(key, value)
    for key in CONFIG_SCHEMA:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = _coerce(key, value)
    return cfg


def _require(cfg: dict, key: str, command: str) -> str:
    value = cfg.get(key)
    if value is None:
        raise UsageError(f"{command} requires --{key.replace('_', '-')} "
                         f"(or the {key!r} config key)")
    return value


def _task_spec(cfg: dict) -> MixtureTaskSpec:
    lo, hi = cfg["train_range"]
    outer = cfg["extrap_outer"]
    try:
        return MixtureTaskSpec(
            logistic_slope=cfg["logistic_slope"],
            mean_slope=cfg["mean_slope"],
            wave_amp=cfg["wave_amp"],
            wave_freq=cfg["wave_freq"],
            noise_base=cfg["noise_base"],
            noise_amp=cfg["noise_amp"],
            noise_freq=cfg["noise_freq"],
            train_range=(lo, hi),
            extrap_ranges=((-outer, lo), (hi, outer)),
        )
    except ValueError as exc:
        raise UsageError(f"invalid task configuration: {exc}") from exc


def _train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(
            reward_mode=cfg["reward_mode"],
            k_rollouts=cfg["k_rollouts"],
            batch_size=cfg["batch_size"],
            learning_rate=cfg["learning_rate"],
            kl_coef=cfg["kl_coef"],
            max_steps=cfg["max_steps"],
            temperature=cfg["temperature"],
            advantage_epsilon=cfg["advantage_epsilon"],
            seed=cfg["seed"],
            eval_every=cfg["eval_every"],
            eval_samples=cfg["eval_samples"],
            n_bins=cfg["n_bins"],
            bin_range=tuple(cfg["bin_range"]),
            n_basis=cfg["n_basis"],
            basis_range=tuple(cfg["basis_range"]),
            bandwidth=cfg["bandwidth"],
        )
    except ValueError as exc:
        raise UsageError(f"invalid training configuration: {exc}") from exc


def _echo_config(cfg: dict, command: str, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_json(out_dir / "config.json", {"command": command, **cfg})


def _load_split(cfg: dict, command: str):
    data_dir = Path(_require(cfg, "data_dir", command))
    split = cfg["split"]
    if split not in ("train", "val", "test"):
        raise UsageError(f"split must be train, val, or test, got {split!r}")
    path = data_dir / f"{split}.jsonl"
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    try:
        return io.read_dataset_jsonl(path)
    except (io.RolloutFormatError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def cmd_gen_data(cfg: dict) -> None:
    out_dir = Path(_require(cfg, "out_dir", "gen-data"))
    task = _task_spec(cfg)
    if cfg["n_train"] < 1 or cfg["n_test"] < 1:
        raise UsageError("n_train and n_test must be at least 1")
    if not 0.0 <= cfg["val_fraction"] < 1.0:
        raise UsageError("val_fraction must lie in [0, 1)")
    _echo_config(cfg, "gen-data", out_dir)

    train_full, test = make_dataset(task, cfg["n_train"], cfg["n_test"], cfg["seed"])
    n_val = int(round(len(train_full) * cfg["val_fraction"]))
    rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], _STREAM_SPLIT]))
    perm = rng.permutation(len(train_full))
    val_idx = np.sort(perm[:n_val])
    train_idx = np.sort(perm[n_val:])
    train_split = train_full.select(train_idx)
    val_split = train_full.select(val_idx)

    io.write_dataset_jsonl(train_split, out_dir / "train.jsonl")
    io.write_dataset_jsonl(val_split, out_dir / "val.jsonl")
    io.write_dataset_jsonl(test, out_dir / "test.jsonl")
    region_counts: dict[str, int] = {}
    for region in test.region:
        region_counts[region] = region_counts.get(region, 0) + 1
    io.write_json(out_dir / "manifest.json", {
        "seed": cfg["seed"],
        "n_train": len(train_split),
        "n_val": len(val_split),
        "n_test": len(test),
        "test_region_counts": region_counts,
        "task": {
            "logistic_slope": task.logistic_slope,
            "mean_slope": task.mean_slope,
            "wave_amp": task.wave_amp,
            "wave_freq": task.wave_freq,
            "noise_base": task.noise_base,
            "noise_amp": task.noise_amp,
            "noise_freq": task.noise_freq,
            "train_range": list(task.train_range),
            "extrap_ranges": [list(r) for r in task.extrap_ranges],
        },
    })
    print(f"wrote {len(train_split)}/{len(val_split)}/{len(test)} records to {out_dir}")


def _load_resume(path_text: str, config: TrainConfig) -> ResumeState:
    path = Path(path_text)
    if not path.exists():
        raise DataError(f"resume checkpoint not found: {path}")
    try:
        policy, extra = io.load_checkpoint(path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    rng_state = extra.get("rng_state")
    if not isinstance(rng_state, dict) or "next_step" not in rng_state:
        raise DataError(f"checkpoint lacks a resumable rng_state: {path}")
    if int(rng_state.get("seed", -1)) != config.seed:
        raise UsageError(
            f"resume seed {rng_state.get('seed')} does not match configured seed {config.seed}")
    best_weights = extra.get("best_weights")
    best_spearman = extra.get("best_spearman")
    best_rmse = extra.get("best_rmse")
    return ResumeState(
        policy=policy,
        next_step=int(rng_state["next_step"]),
        best_weights=None if best_weights is None else np.asarray(best_weights, dtype=float),
        best_step=extra.get("best_step"),
        best_spearman=-math.inf if best_spearman is None else float(best_spearman),
        best_rmse=math.inf if best_rmse is None else float(best_rmse),
    )


def cmd_train(cfg: dict) -> None:
    out_dir = Path(_require(cfg, "out_dir", "train"))
    config = _train_config(cfg)
    data_dir = Path(_require(cfg, "data_dir", "train"))
    for name in ("train.jsonl", "val.jsonl"):
        if not (data_dir / name).exists():
            raise DataError(f"dataset file not found: {data_dir / name}")
    try:
        train_set = io.read_dataset_jsonl(data_dir / "train.jsonl")
        val_set = io.read_dataset_jsonl(data_dir / "val.jsonl")
    except (io.RolloutFormatError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    resume = _load_resume(cfg["resume"], config) if cfg["resume"] else None
    _echo_config(cfg, "train", out_dir)

    result = train(config, train_set, val_set, resume=resume)

    io.write_train_log(result.log, out_dir / "log.csv")
    best_meta = _best_meta(result)
    io.save_checkpoint(out_dir / "checkpoint_best.json", result.best_policy, {
        "rng_state": {"seed": config.seed, "next_step": result.best_step + 1},
        "best_step": result.best_step,
        "best_weights": result.best_policy.weights.tolist(),
        **best_meta,
    })
    io.save_checkpoint(out_dir / "checkpoint_final.json", result.final_policy, {
        "rng_state": {"seed": config.seed, "next_step": config.max_steps + 1},
        "best_step": result.best_step,
        "best_weights": result.best_policy.weights.tolist(),
        **best_meta,
    })
    print(f"trained {len(result.log.records)} steps; best step {result.best_step}; "
          f"outputs in {out_dir}")


def _best_meta(result) -> dict:
    for rec in result.log.records:
        if rec.step == result.best_step and rec.val_spearman is not None:
            return {"best_spearman": rec.val_spearman, "best_rmse": rec.val_rmse}
    return {"best_spearman": None, "best_rmse": None}


def _load_policy(cfg: dict, command: str):
    path = Path(_require(cfg, "checkpoint", command))
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    try:
        policy, _ = io.load_checkpoint(path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return policy


def cmd_eval(cfg: dict) -> None:
    out_dir = Path(_require(cfg, "out_dir", "eval"))
    policy = _load_policy(cfg, "eval")
    data = _load_split(cfg, "eval")
    _echo_config(cfg, "eval", out_dir)

    report = evaluate_policy(
        policy, data,
        n_samples=cfg["eval_samples"],
        repeats=cfg["eval_repeats"],
        seed=cfg["seed"],
        alpha_levels=cfg["alpha_levels"],
    )
    io.write_json(out_dir / "metrics.json", report.to_dict())
    header = "scope,n_examples,rmse,mae,spearman,bracket_rate,mean_crps,mean_wis"
    lines = [header]

    def _row(scope: str, stats: dict) -> str:
        cells = [scope, str(stats["n_examples"])]
        for key in ("rmse", "mae", "spearman", "bracket_rate", "mean_crps", "mean_wis"):
            value = stats[key]
            cells.append("" if value is None or (isinstance(value, float) and math.isnan(value))
                         else repr(float(value)))
        return ",".join(cells)

    overall = {key: getattr(report, key) for key in
               ("rmse", "mae", "spearman", "bracket_rate", "mean_crps", "mean_wis")}
    overall["n_examples"] = report.n_examples
    lines.append(_row("overall", overall))
    for region in sorted(report.regions):
        lines.append(_row(region, report.regions[region]))
    (out_dir / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"evaluated {report.n_examples} examples; outputs in {out_dir}")


def cmd_score(cfg: dict) -> None:
    out_dir = Path(_require(cfg, "out_dir", "score"))
    rollout_path = Path(_require(cfg, "rollout_file", "score"))
    if not rollout_path.exists():
        raise DataError(f"rollout file not found: {rollout_path}")
    reward_mode = cfg["reward_mode"]
    if reward_mode not in ("dar", "mse"):
        raise UsageError(f"reward_mode must be dar or mse, got {reward_mode!r}")
    if cfg["invalid_mode"] not in ("min_batch", "fixed"):
        raise UsageError(f"invalid_mode must be min_batch or fixed, got {cfg['invalid_mode']!r}")
    _echo_config(cfg, "score", out_dir)

    score_lines = ["id,target,n_rollouts,n_invalid,crps,wis,bracketed"]
    reward_lines: list[str] = []
    row_errors: list[dict] = []
    crps_vals: list[float] = []
    wis_vals: list[float] = []
    brackets: list[bool] = []
    total_rollouts = 0
    total_invalid = 0
    n_scored = 0

    for line_no, rollouts, error, _ in io.iter_rollout_records(rollout_path):
        if error is not None:
            row_errors.append({"line": line_no, "error": error})
            print(f"skipping row: {error}", file=sys.stderr)
            continue
        n_invalid = rollouts.k - rollouts.n_valid
        total_rollouts += rollouts.k
        total_invalid += n_invalid
        if rollouts.n_valid == 0:
            row_errors.append({"line": line_no, "error": "no valid rollout to score"})
            print(f"skipping row: line {line_no}: no valid rollout to score", file=sys.stderr)
            continue
        n_scored += 1
        valid_p = rollouts.valid_predictions
        crps_val = crps_empirical(valid_p, rollouts.target)
        wis_val = wis(valid_p, rollouts.target, cfg["alpha_levels"])
        bracketed = rollouts.brackets_target()
        crps_vals.append(crps_val)
        wis_vals.append(wis_val)
        brackets.append(bracketed)
        score_lines.append(",".join([
            str(rollouts.example_id), repr(float(rollouts.target)),
            str(rollouts.k), str(n_invalid),
            repr(crps_val), repr(wis_val), str(int(bracketed)),
        ]))
        try:
            vector = compute_rewards(rollouts, reward_mode,
                                     invalid_mode=cfg["invalid_mode"],
                                     fixed_penalty=cfg["fixed_penalty"])
            reward_row = {"id": rollouts.example_id, "rewards": vector.rewards.tolist(),
                          "source": vector.source, "usable": vector.usable,
                          "n_invalid": n_invalid}
        except DegenerateRolloutError as exc:
            reward_row = {"id": rollouts.example_id, "rewards": None,
                          "source": reward_mode, "usable": False,
                          "n_invalid": n_invalid, "error": str(exc)}
        reward_lines.append(json.dumps(io.sanitize(reward_row), sort_keys=True))

    if n_scored == 0:
        raise DataError(f"no scoreable records in {rollout_path}")

    (out_dir / "scores.csv").write_text("\n".join(score_lines) + "\n", encoding="utf-8")
    (out_dir / "rewards.jsonl").write_text(
        "\n".join(reward_lines) + ("\n" if reward_lines else ""), encoding="utf-8")
    io.write_json(out_dir / "summary.json", {
        "n_scored": n_scored,
        "n_skipped_rows": len(row_errors),
        "row_errors": row_errors,
        "total_rollouts": total_rollouts,
        "total_invalid_rollouts": total_invalid,
        "mean_crps": float(np.mean(crps_vals)),
        "mean_wis": float(np.mean(wis_vals)),
        "bracket_rate": float(np.mean(brackets)),
        "reward_mode": reward_mode,
    })
    print(f"scored {n_scored} records ({total_invalid} invalid rollouts, "
          f"{len(row_errors)} skipped rows); outputs in {out_dir}")


def cmd_calib(cfg: dict) -> None:
    out_dir = Path(_require(cfg, "out_dir", "calib"))
    has_rollouts = cfg["rollout_file"] is not None
    has_checkpoint = cfg["checkpoint"] is not None
    if has_rollouts == has_checkpoint:
        raise UsageError("calib needs exactly one of --rollout-file or --checkpoint")
    _echo_config(cfg, "calib", out_dir)

    if has_rollouts:
        rollout_path = Path(cfg["rollout_file"])
        if not rollout_path.exists():
            raise DataError(f"rollout file not found: {rollout_path}")
        stds: list[float] = []
        errs: list[float] = []
        targets: list[float] = []
        n_skipped = 0
        for line_no, rollouts, error, _ in io.iter_rollout_records(rollout_path):
            if error is not None or rollouts.n_valid == 0:
                n_skipped += 1
                continue
            valid_p = rollouts.valid_predictions
            stds.append(float(valid_p.std()))
            errs.append(abs(float(valid_p.mean()) - rollouts.target))
            targets.append(rollouts.target)
        if len(targets) == 0:
            raise DataError(f"no usable records in {rollout_path}")
        scale = float(np.std(targets))
        if scale <= 0:
            scale = 1.0
        report = calibration_fit(np.column_stack([stds, errs]), scale)
    else:
        policy = _load_policy(cfg, "calib")
        data = _load_split(cfg, "calib")
        report = calibration_from_policy(policy, data,
                                         n_samples=cfg["eval_samples"], seed=cfg["seed"])

    io.write_json(out_dir / "calibration.json", {
        "log_pearson": report.log_pearson,
        "n_points": report.n_points,
        "n_excluded": report.n_excluded,
        "degenerate": report.degenerate,
    })
    lines = ["normalized_std,normalized_error"]
    for std_val, err_val in report.points:
        lines.append(f"{std_val!r},{err_val!r}")
    (out_dir / "calibration_points.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    label = "degenerate" if report.degenerate else f"log_pearson={report.log_pearson:.5f}"
    print(f"calibration over {report.n_points} points ({label}); outputs in {out_dir}")


_DISPATCH = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "score": cmd_score,
    "calib": cmd_calib,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        cfg = resolve_config(args)
        _DISPATCH[args.command](cfg)
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, io.RolloutFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
