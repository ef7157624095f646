"""Command line front end for training runs.

Precedence for every setting: explicit flag, then config file, then built-in
default. The output directory additionally falls back to the OFEXI_OUT_DIR
environment variable. Exit codes: 0 on success, 2 for configuration problems
(the message names the violated constraint), 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

from . import report
from .trainer import (Arch, ConfigError, Hyper, RunConfig, Schedule, Trainer)
from .sac import SacConfig

_FLAG_DEST = {
    "env": "env", "seed": "seed", "steps": "steps",
    "nu_ofe": "nu_ofe", "nu_pi": "nu_pi", "nu_v": "nu_v", "nu_q": "nu_q",
    "lambda_ofe": "lam_ofe", "lambda_rl": "lam_rl",
    "rho": "rho", "theta_tol": "theta_tol", "theta_lr": "theta_lr",
    "out_dir": "out_dir",
}

_HYPER_KEYS = {"nu_ofe", "nu_pi", "nu_v", "nu_q", "lam_ofe", "lam_rl",
               "rho", "theta_tol", "theta_lr"}

_SCHEDULE_KEYS = {"total_steps", "theta_freeze_steps", "random_fill_steps",
                  "ofe_pretrain_updates", "eval_every", "prune_every",
                  "final_round_fraction"}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ofexi",
        description="Train a gated feature extractor and SAC agent, pruning "
                    "units whose gate probability collapses.")
    p.add_argument("--env", choices=["pendulum", "pointmass"])
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="total environment steps")
    p.add_argument("--nu-ofe", type=float, dest="nu_ofe")
    p.add_argument("--nu-pi", type=float, dest="nu_pi")
    p.add_argument("--nu-v", type=float, dest="nu_v")
    p.add_argument("--nu-q", type=float, dest="nu_q")
    p.add_argument("--lambda-ofe", type=float, dest="lambda_ofe")
    p.add_argument("--lambda-rl", type=float, dest="lambda_rl")
    p.add_argument("--rho", type=float)
    p.add_argument("--theta-tol", type=float, dest="theta_tol")
    p.add_argument("--theta-lr", type=float, dest="theta_lr")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--config", help="path to a sectioned key=value file")
    return p


def _parse_widths(text: str, key: str) -> tuple:
    try:
        return tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok)
    except ValueError:
        raise ConfigError(f"{key} must be a comma separated list of ints")


def _typed(section: str, key: str, text: str, kind):
    try:
        if kind is bool:
            lowered = text.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be {kind.__name__}, "
                          f"got {text!r}")


def _read_config_file(path: str) -> dict:
    """Flat sectioned key=value file -> override dict."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}")

    out = {"run": {}, "hyper": {}, "schedule": {}, "arch": {}, "sac": {}}
    for section in parser.sections():
        if section not in out:
            raise ConfigError(f"unknown config section [{section}]")
        for key, text in parser.items(section):
            if section == "run":
                if key == "env":
                    out["run"]["env"] = text.strip()
                elif key == "seed":
                    out["run"]["seed"] = _typed(section, key, text, int)
                elif key == "steps":
                    out["run"]["steps"] = _typed(section, key, text, int)
                elif key == "out_dir":
                    out["run"]["out_dir"] = text.strip()
                elif key == "gated":
                    out["run"]["gated"] = _typed(section, key, text, bool)
                elif key == "eval_episodes":
                    out["run"]["eval_episodes"] = _typed(section, key, text, int)
                else:
                    raise ConfigError(f"unknown key {key} in [run]")
            elif section == "hyper":
                if key not in _HYPER_KEYS:
                    raise ConfigError(f"unknown key {key} in [hyper]")
                out["hyper"][key] = _typed(section, key, text, float)
            elif section == "schedule":
                if key not in _SCHEDULE_KEYS:
                    raise ConfigError(f"unknown key {key} in [schedule]")
                kind = float if key == "final_round_fraction" else int
                out["schedule"][key] = _typed(section, key, text, kind)
            elif section == "arch":
                if key not in ("units_o", "units_oa", "hidden"):
                    raise ConfigError(f"unknown key {key} in [arch]")
                out["arch"][key] = _parse_widths(text, key)
            elif section == "sac":
                if key == "batch_size":
                    out["sac"]["batch_size"] = _typed(section, key, text, int)
                elif key in ("lr", "discount", "polyak_tau", "entropy_alpha"):
                    out["sac"][key] = _typed(section, key, text, float)
                else:
                    raise ConfigError(f"unknown key {key} in [sac]")
    return out


def parse_cli(argv: list) -> RunConfig:
    """Resolve flags plus optional config file into a validated RunConfig."""
    args = _build_parser().parse_args(argv)
    overrides = {"run": {}, "hyper": {}, "schedule": {}, "arch": {}, "sac": {}}
    if args.config:
        overrides = _read_config_file(args.config)

    for flag, dest in _FLAG_DEST.items():
        value = getattr(args, flag)
        if value is None:
            continue
        if dest in _HYPER_KEYS:
            overrides["hyper"][dest] = value
        elif flag == "steps":
            overrides["run"]["steps"] = value
        else:
            overrides["run"][dest] = value

    run = overrides["run"]
    hyper = Hyper(**overrides["hyper"])
    steps = run.get("steps",
                    overrides["schedule"].get("total_steps", 30_000))
    schedule = Schedule.scaled(steps)
    for key, value in overrides["schedule"].items():
        if key == "total_steps":
            continue
        setattr(schedule, key, value)
    arch = Arch(**overrides["arch"])
    sac_cfg = SacConfig(**overrides["sac"])

    out_dir = run.get("out_dir") or os.environ.get("OFEXI_OUT_DIR") or "."

    config = RunConfig(
        env=run.get("env", "pendulum"),
        seed=run.get("seed", 0),
        schedule=schedule,
        sac=sac_cfg,
        hyper=hyper,
        arch=arch,
        gated=run.get("gated", True),
        eval_episodes=run.get("eval_episodes", 10),
        out_dir=out_dir,
    )
    config.validate()
    return config


def _echo_config(config: RunConfig) -> str:
    sched = config.schedule
    h = config.hyper
    lines = [
        "[run]",
        f"env = {config.env}",
        f"seed = {config.seed}",
        f"steps = {sched.total_steps}",
        f"out_dir = {config.out_dir}",
        f"gated = {str(config.gated).lower()}",
        f"eval_episodes = {config.eval_episodes}",
        "",
        "[hyper]",
        f"nu_ofe = {h.nu_ofe:g}",
        f"nu_pi = {h.nu_pi:g}",
        f"nu_v = {h.nu_v:g}",
        f"nu_q = {h.nu_q:g}",
        f"lam_ofe = {h.lam_ofe:g}",
        f"lam_rl = {h.lam_rl:g}",
        f"rho = {h.rho:g}",
        f"theta_tol = {h.theta_tol:g}",
        f"theta_lr = {h.theta_lr:g}",
        "",
        "[schedule]",
        f"theta_freeze_steps = {sched.theta_freeze_steps}",
        f"random_fill_steps = {sched.random_fill_steps}",
        f"ofe_pretrain_updates = {sched.ofe_pretrain_updates}",
        f"eval_every = {sched.eval_every}",
        f"prune_every = {sched.prune_every}",
        f"final_round_fraction = {sched.final_round_fraction:g}",
        "",
        "[arch]",
        f"units_o = {','.join(str(w) for w in config.arch.units_o)}",
        f"units_oa = {','.join(str(w) for w in config.arch.units_oa)}",
        f"hidden = {','.join(str(w) for w in config.arch.hidden)}",
        "",
        "[sac]",
        f"batch_size = {config.sac.batch_size}",
        f"lr = {config.sac.lr:g}",
        f"discount = {config.sac.discount:g}",
        f"polyak_tau = {config.sac.polyak_tau:g}",
        f"entropy_alpha = {config.sac.entropy_alpha:g}",
    ]
    return "\n".join(lines)


def main(argv: list = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        config = parse_cli(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    print(_echo_config(config))
    try:
        os.makedirs(config.out_dir, exist_ok=True)
        trainer = Trainer(config)
        artifacts = trainer.run()
        metrics_path = os.path.join(config.out_dir, "metrics.csv")
        arch_path = os.path.join(config.out_dir, "architecture.json")
        ckpt_path = os.path.join(config.out_dir, "checkpoint.ckpt")
        report.write_metrics(metrics_path, artifacts.metrics)
        arch = report.write_architecture_report(arch_path, trainer)
        report.save_checkpoint(ckpt_path, trainer)
        print(report.format_report_table(arch))
        print(f"wrote {metrics_path}, {arch_path}, {ckpt_path}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
