"""Edit-distance scoring for completion predictions.

Two views of the same DP table: the full unit-cost Levenshtein distance,
and the minimum distance achieved by any prefix of the prediction (a model
that says the right thing and then rambles scores well on the second,
poorly on the first; the gap is the conciseness delta).
"""

from __future__ import annotations

import csv
import json
import re
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

_WS_RUN = re.compile(r"[ \t]+")


def normalize_whitespace(text: str) -> str:
    """Collapse runs of spaces/tabs to one space; trim line-trailing blanks."""
    lines = text.split("\n")
    return "\n".join(_WS_RUN.sub(" ", line).rstrip() for line in lines)


def _dp_rows(prediction: Sequence, truth: Sequence):
    """Yield the final-column value of each DP row.

    Row i's final column is levenshtein(prediction[:i], truth); iterating
    all rows therefore scores every prefix of the prediction in one pass.
    Memory stays at two rows of len(truth)+1.
    """
    m = len(truth)
    prev = list(range(m + 1))
    yield prev[m]  # empty prefix
    for i, pc in enumerate(prediction, start=1):
        cur = [i] + [0] * m
        for j, tc in enumerate(truth, start=1):
            if pc == tc:
                cur[j] = prev[j - 1]
            else:
                cur[j] = 1 + min(prev[j - 1], prev[j], cur[j - 1])
        yield cur[m]
        prev = cur


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost edit distance over the sequence elements.

    Strings are compared per Unicode scalar; pass bytes for byte-level
    distance. Symmetric, zero iff equal, satisfies the triangle inequality.
    """
    # iterate rows over the shorter side: O(min(len)) memory
    if len(a) < len(b):
        a, b = b, a
    last = 0
    for last in _dp_rows(a, b):
        pass
    return last


def opt_prefix_distance(prediction: Sequence, ground_truth: Sequence) -> tuple[int, int]:
    """(min over prefixes of levenshtein(prefix, truth), length of that prefix).

    Ties go to the shortest prefix; the empty prefix (distance len(truth))
    and the whole prediction are both candidates, so the result never
    exceeds the full distance.
    """
    best = None
    best_len = 0
    for i, dist in enumerate(_dp_rows(prediction, ground_truth)):
        if best is None or dist < best:
            best = dist
            best_len = i
    return best, best_len


@dataclass(frozen=True)
class EvalRecord:
    test_id: str
    category: str
    prediction: str
    ground_truth: str
    full_distance: int
    opt_distance: int
    opt_prefix_len: int
    conciseness_delta: int  # full - opt; how much the tail rambles


def evaluate(
    tests: Iterable[tuple[str, str, str, str]],
    *,
    normalize: bool = False,
    as_bytes: bool = False,
) -> list[EvalRecord]:
    """Score (test_id, category, prediction, ground_truth) tuples.

    ``normalize`` applies whitespace normalization to both sides first;
    ``as_bytes`` runs the DP over UTF-8 bytes instead of Unicode scalars.
    """
    out = []
    for test_id, category, prediction, ground_truth in tests:
        pred, truth = prediction, ground_truth
        if normalize:
            pred = normalize_whitespace(pred)
            truth = normalize_whitespace(truth)
        seq_p: Sequence = pred.encode("utf-8") if as_bytes else pred
        seq_t: Sequence = truth.encode("utf-8") if as_bytes else truth
        full = levenshtein(seq_p, seq_t)
        opt, opt_len = opt_prefix_distance(seq_p, seq_t)
        out.append(
            EvalRecord(
                test_id=test_id,
                category=category,
                prediction=prediction,
                ground_truth=ground_truth,
                full_distance=full,
                opt_distance=opt,
                opt_prefix_len=opt_len,
                conciseness_delta=full - opt,
            )
        )
    return out


@dataclass(frozen=True)
class CategoryReport:
    category: str
    n_tests: int
    mean_opt: float
    mean_full: float
    median_opt: float
    median_full: float


def aggregate_report(records: Iterable[EvalRecord]) -> list[CategoryReport]:
    """Mean and median distances per category, ordered by category name."""
    groups: dict[str, list[EvalRecord]] = {}
    for rec in records:
        groups.setdefault(rec.category, []).append(rec)
    out = []
    for category in sorted(groups):
        recs = groups[category]
        opts = [r.opt_distance for r in recs]
        fulls = [r.full_distance for r in recs]
        out.append(
            CategoryReport(
                category=category,
                n_tests=len(recs),
                mean_opt=statistics.mean(opts),
                mean_full=statistics.mean(fulls),
                median_opt=float(statistics.median(opts)),
                median_full=float(statistics.median(fulls)),
            )
        )
    return out


def write_records(records: Iterable[EvalRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "test_id": r.test_id,
                        "category": r.category,
                        "prediction": r.prediction,
                        "ground_truth": r.ground_truth,
                        "full_distance": r.full_distance,
                        "opt_distance": r.opt_distance,
                        "opt_prefix_len": r.opt_prefix_len,
                        "conciseness_delta": r.conciseness_delta,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )


def write_report_csv(reports: Iterable[CategoryReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "n", "mean_opt", "median_opt", "mean_full", "median_full"])
        for r in reports:
            writer.writerow(
                [r.category, r.n_tests, f"{r.mean_opt:.4f}", f"{r.median_opt:.4f}",
                 f"{r.mean_full:.4f}", f"{r.median_full:.4f}"]
            )


def read_tests_jsonl(path: str | Path) -> list[tuple[str, str, str, str]]:
    """Read eval inputs: JSONL of {test_id, category, prediction, ground_truth}."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            out.append(
                (str(d["test_id"]), d.get("category", "unclassified"), d["prediction"], d["ground_truth"])
            )
    return out
