"""Thin subprocess wrapper around the analysis CLI.

The exporter consumes the analysis toolkit only through its external
interfaces: the portable file formats and this command line.
"""

from __future__ import annotations

import json
import subprocess
import sys


class PrimaryCliError(RuntimeError):
    pass


def run(*args: str) -> dict:
    """Invoke ``python -m pathcap`` and return the parsed JSON report."""
    cmd = [sys.executable, "-m", "pathcap", *args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise PrimaryCliError(
            f"{' '.join(cmd)} exited {proc.returncode}: {proc.stderr.strip()}"
        )
    return json.loads(proc.stdout)


def available() -> bool:
    try:
        proc = subprocess.run(
            [sys.executable, "-m", "pathcap", "--help"], capture_output=True, text=True
        )
        return proc.returncode == 0
    except OSError:
        return False


def median_normalized_margin(model_dir, data_csv) -> float:
    report = run("margins", "--model", str(model_dir), "--data", str(data_csv))
    return float(report["payload"]["median_normalized"])


def sweep_mean_accuracy(model_dir, data_csv, Ms, rounds, seed) -> dict[int, float]:
    report = run(
        "sweep", "--model", str(model_dir), "--data", str(data_csv),
        "--Ms", ",".join(str(m) for m in Ms), "--rounds", str(rounds), "--seed", str(seed),
    )
    return {row["M"]: row["mean_acc"] for row in report["payload"]["rows"]}


def eval_outputs(model_dir, data_csv):
    report = run("eval", "--model", str(model_dir), "--data", str(data_csv))
    return report["payload"]["outputs"]
