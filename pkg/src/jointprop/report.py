"""Run reports, convergence diagnostics, and evaluation arithmetic.

The report is plain JSON with sorted keys so that rendering is a fixed
point under parse/render and two identical runs produce identical bytes
once timing fields are excluded.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

MIN_RATE_POINTS = 5


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    contracting: bool


def estimate_rate(trace: list[tuple[int, float]]) -> RateEstimate:
    """Least-squares geometric rate from (iteration, residual) pairs.

    Fits log(residual) against iteration; the slope's exponential is the
    per-step contraction factor, which for this iteration should sit near
    c.  Exact-zero residuals carry no log information and are dropped.
    A rate at or above 1 is reported as non-contracting, not an error.
    """
    points = [(t, r) for t, r in trace if r > 0]
    if len(points) < MIN_RATE_POINTS:
        raise ValidationError(f"rate estimate needs >= {MIN_RATE_POINTS} positive-residual points")
    ts = np.array([t for t, _ in points], dtype=np.float64)
    logs = np.array([math.log(r) for _, r in points], dtype=np.float64)
    slope = float(np.polyfit(ts, logs, 1)[0])
    rate = math.exp(slope)
    return RateEstimate(rate, rate < 1.0)


def write_trace_csv(fh, entries) -> None:
    """CSV convergence trace: one row per iteration.

    Rows are (task, round, iteration, residual); the task and round
    columns let a single file hold every propagation of a joint run.
    """
    writer = csv.writer(fh)
    writer.writerow(["task", "round", "iteration", "residual"])
    for task, rnd, iteration, residual in entries:
        writer.writerow([task, rnd, iteration, residual])


def prf1(correct: int, emitted: int, gold: int) -> dict:
    """Micro precision/recall/F1 with the zero-emission convention P = 0."""
    precision = correct / emitted if emitted else 0.0
    recall = correct / gold if gold else 0.0
    denom = precision + recall
    f1 = 2 * precision * recall / denom if denom else 0.0
    return {
        "correct": correct,
        "emitted": emitted,
        "gold": gold,
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }


def empty_task_block(task: str) -> dict:
    block = {
        "skipped": False,
        "skip_reason": None,
        "nodes": 0,
        "seeds": 0,
        "unlabeled": 0,
        "emitted": 0,
        "abstained": 0,
        "dropped_gold": [],
        "rounds": [],
    }
    if task == "relation":
        block["dropped_endpoint_labels"] = 0
        block["candidates_truncated"] = False
    return block


def empty_report() -> dict:
    return {
        "config": {},
        "corpus": {
            "sentences": 0,
            "labeled_sentences": 0,
            "unlabeled_sentences": 0,
            "entity_types": [],
            "relation_types": [],
        },
        "tasks": {
            "entity": empty_task_block("entity"),
            "relation": empty_task_block("relation"),
        },
        "evaluation": {},
        "timings": {},
    }


def render_report(report: dict) -> bytes:
    """Canonical JSON bytes: sorted keys, two-space indent, trailing newline."""
    text = json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def parse_report(data: bytes) -> dict:
    return json.loads(data.decode("utf-8"))
