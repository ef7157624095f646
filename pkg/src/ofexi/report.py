"""Run outputs: metrics CSV, architecture report, checkpoints.

Numbers in the CSV are printed with six significant digits so files from
repeated runs of the same seed compare byte-for-byte. Checkpoints are a
versioned pickle container with a magic prefix; anything that fails the
header check raises CheckpointError instead of unpickling garbage.
"""

from __future__ import annotations

import csv
import io
import json
import pickle


from . import trainer as trainer_mod
from .trainer import MetricsRow, Trainer


class CheckpointError(RuntimeError):
    """Raised when a checkpoint file is missing, truncated, or foreign."""


METRICS_COLUMNS = [
    "step", "eval_return", "l_aux", "c_ofe", "c_pi", "c_v", "c_q1", "c_q2",
    "params_deploy", "params_train", "dr", "tr", "theta_binary_fraction",
    "units_per_layer",
]

_INT_COLUMNS = {"step", "params_deploy", "params_train"}
_STR_COLUMNS = {"units_per_layer"}


def _format_value(column: str, value) -> str:
    if column in _STR_COLUMNS:
        return str(value)
    if column in _INT_COLUMNS:
        return str(int(value))
    return "%.6g" % float(value)


def write_metrics(path: str, rows: list) -> None:
    """Write metrics rows as CSV with a fixed column order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for row in rows:
            writer.writerow([_format_value(c, getattr(row, c))
                             for c in METRICS_COLUMNS])


def read_metrics(path: str) -> list:
    """Read back a metrics CSV into MetricsRow objects."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRICS_COLUMNS:
            raise ValueError(f"unexpected metrics columns in {path}")
        for rec in reader:
            kwargs = {}
            for c in METRICS_COLUMNS:
                if c in _STR_COLUMNS:
                    kwargs[c] = rec[c]
                elif c in _INT_COLUMNS:
                    kwargs[c] = int(rec[c])
                else:
                    kwargs[c] = float(rec[c])
            rows.append(MetricsRow(**kwargs))
    return rows


# ---------------------------------------------------------------------------
# architecture report


def architecture_report(t: Trainer) -> dict:
    """Summarize the surviving architecture and its cost accounting."""
    snap = t.current_snapshot()
    stacks = {
        "phi_o": [b.width for b in t.ofe.blocks_o],
        "phi_oa": [b.width for b in t.ofe.blocks_oa],
    }
    for net in (t.pi, t.v, t.q1, t.q2):
        stacks[net.name] = [l.width for l in net.layers]
    return {
        "env": t.config.env,
        "seed": t.config.seed,
        "step": t.step,
        "units_per_layer": stacks,
        "units_total": {name: sum(widths) for name, widths in stacks.items()},
        "complexity": {
            "c_ofe": snap.c_ofe,
            "c_o": snap.c_o,
            "c_oa": snap.c_oa,
            "c_pred": snap.c_pred,
            "per_net": dict(snap.c_x),
        },
        "params": {
            "deploy": snap.params_deploy,
            "train": snap.params_train,
            "baseline_deploy": t.baseline_deploy,
            "baseline_train": t.baseline_train,
            "deploy_ratio": snap.dR,
            "train_ratio": snap.tR,
        },
        "theta_binary_fraction": t.theta_binary_fraction(),
    }


def write_architecture_report(path: str, t: Trainer) -> dict:
    report = architecture_report(t)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def format_report_table(report: dict) -> str:
    """Human-oriented text rendering of an architecture report."""
    out = io.StringIO()
    print(f"env={report['env']} seed={report['seed']} step={report['step']}",
          file=out)
    print("stack        widths", file=out)
    for name, widths in report["units_per_layer"].items():
        print(f"{name:<12} {','.join(str(w) for w in widths)}", file=out)
    comp = report["complexity"]
    print(f"C_OFE        {comp['c_ofe']:.6g}", file=out)
    for name, value in comp["per_net"].items():
        print(f"C_{name:<10} {value:.6g}", file=out)
    params = report["params"]
    print(f"params       deploy={params['deploy']} train={params['train']}",
          file=out)
    print(f"ratios       dR={params['deploy_ratio']:.4f} "
          f"tR={params['train_ratio']:.4f}", file=out)
    print(f"theta binary {report['theta_binary_fraction']:.4f}", file=out)
    return out.getvalue()


# ---------------------------------------------------------------------------
# checkpoints

_MAGIC = b"OFEXICKPT"
_VERSION = 1


def save_checkpoint(path: str, t: Trainer) -> None:
    state = trainer_mod.trainer_state(t)
    payload = pickle.dumps({"version": _VERSION, "state": state}, protocol=4)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(payload)


def load_checkpoint(path: str) -> Trainer:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not blob.startswith(_MAGIC):
        raise CheckpointError(f"{path} is not a checkpoint file")
    try:
        container = pickle.loads(blob[len(_MAGIC):])
    except Exception as exc:
        raise CheckpointError(f"{path} is corrupt: {exc}") from exc
    if not isinstance(container, dict) or "version" not in container:
        raise CheckpointError(f"{path} has no version header")
    if container["version"] != _VERSION:
        raise CheckpointError(
            f"{path} has version {container['version']}, expected {_VERSION}")
    return trainer_mod.trainer_from_state(container["state"])
