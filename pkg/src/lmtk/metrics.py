"""Preferred metrics and normalized aggregation.

Five metrics cover the benchmark: accuracy, binary F1, macro F1, Pearson
correlation, and bag-of-token F1 for extractive QA. All except Pearson
are reported on a 0-100 scale; Pearson stays in [-1, 1] and the task's
``high_score`` records which scale applies.

The aggregate is the normalized preferred metric: each task's raw score
is rescaled so random-level performance maps to 0 and perfect to 100,
then components are averaged per split (native / translated / all).
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .tasks import Gold


class MetricError(ValueError):
    pass


def _punct_strip(text: str) -> str:
    return "".join(" " if unicodedata.category(c).startswith("P") else c for c in text)


def normalize_answer(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace (QA convention)."""
    return _punct_strip(text.casefold()).split()


def token_f1_score(prediction: str, golds: Sequence[str]) -> float:
    """Best bag-of-token F1 of the prediction against any gold answer,
    in [0, 1]."""
    if not golds:
        raise MetricError("token_f1 needs at least one gold answer")
    pred_tokens = normalize_answer(prediction)
    best = 0.0
    for gold in golds:
        gold_tokens = normalize_answer(gold)
        if not pred_tokens and not gold_tokens:
            best = max(best, 1.0)
            continue
        if not pred_tokens or not gold_tokens:
            continue
        overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
        if overlap == 0:
            continue
        precision = overlap / len(pred_tokens)
        recall = overlap / len(gold_tokens)
        best = max(best, 2 * precision * recall / (precision + recall))
    return best


def accuracy(predictions: Sequence[str], golds: Sequence[str]) -> float:
    return 100.0 * sum(p == g for p, g in zip(predictions, golds)) / len(golds)


def f1_binary(predictions: Sequence[str], golds: Sequence[str], positive_label: str) -> float:
    tp = sum(1 for p, g in zip(predictions, golds) if p == positive_label and g == positive_label)
    fp = sum(1 for p, g in zip(predictions, golds) if p == positive_label and g != positive_label)
    fn = sum(1 for p, g in zip(predictions, golds) if p != positive_label and g == positive_label)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 100.0 * 2 * precision * recall / (precision + recall)


def f1_macro(predictions: Sequence[str], golds: Sequence[str], labels: Sequence[str]) -> float:
    """Unweighted mean of per-class F1 over the full label set; a class
    absent from both predictions and golds contributes 0."""
    if not labels:
        raise MetricError("f1_macro needs the label list")
    total = 0.0
    for label in labels:
        tp = sum(1 for p, g in zip(predictions, golds) if p == label and g == label)
        fp = sum(1 for p, g in zip(predictions, golds) if p == label and g != label)
        fn = sum(1 for p, g in zip(predictions, golds) if p != label and g == label)
        if tp:
            precision = tp / (tp + fp)
            recall = tp / (tp + fn)
            total += 2 * precision * recall / (precision + recall)
    return 100.0 * total / len(labels)


def pearson(predictions: Sequence[float], golds: Sequence[float]) -> float:
    n = len(golds)
    mx = sum(predictions) / n
    my = sum(golds) / n
    dx = [x - mx for x in predictions]
    dy = [y - my for y in golds]
    sxx = sum(d * d for d in dx)
    syy = sum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise MetricError("undefined correlation: zero variance")
    return sum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)


def compute_metric(
    kind: str,
    predictions: Sequence,
    golds: Sequence[Gold],
    labels: Optional[Sequence[str]] = None,
    positive_label: Optional[str] = None,
) -> float:
    """Dispatch on metric kind. predictions and golds are parallel lists;
    token_f1 golds are answer sets, pearson golds are numbers."""
    if len(predictions) != len(golds) or not golds:
        raise MetricError("predictions and golds must be equal-length and non-empty")
    if kind == "accuracy":
        return accuracy(predictions, golds)
    if kind == "f1_binary":
        if not positive_label:
            raise MetricError("f1_binary needs positive_label")
        return f1_binary(predictions, golds, positive_label)
    if kind == "f1_macro":
        return f1_macro(predictions, golds, labels or ())
    if kind == "pearson":
        return pearson([float(p) for p in predictions], [float(g) for g in golds])
    if kind == "token_f1":
        per = [token_f1_score(p, g if isinstance(g, (tuple, list)) else (str(g),))
               for p, g in zip(predictions, golds)]
        return 100.0 * sum(per) / len(per)
    raise MetricError(f"unknown metric kind {kind!r}")


_NUMBER = re.compile(r"-?\d+(?:[.,]\d+)?")


def parse_first_number(text: str) -> Optional[float]:
    """First decimal number in the text, accepting comma decimals."""
    m = _NUMBER.search(text)
    if m is None:
        return None
    return float(m.group().replace(",", "."))


# ---------------------------------------------------------------------------
# normalized aggregation

@dataclass(frozen=True)
class MetricResult:
    task_name: str
    raw: float
    random_score: float
    high_score: float
    n_examples: int
    per_example: tuple = ()

    def npm_component(self) -> float:
        if not self.random_score < self.high_score:
            raise MetricError(f"{self.task_name}: need random_score < high_score")
        return 100.0 * (self.raw - self.random_score) / (self.high_score - self.random_score)


@dataclass(frozen=True)
class NpmReport:
    components: Mapping[str, float]
    npm_native: Optional[float]
    npm_translated: Optional[float]
    npm_all: Optional[float]
    n_native: int
    n_translated: int
    invalid_tasks: Mapping[str, str] = field(default_factory=dict)

    @property
    def n_all(self) -> int:
        return self.n_native + self.n_translated

    def as_dict(self) -> dict:
        return {
            "components": dict(sorted(self.components.items())),
            "npm_native": self.npm_native,
            "npm_translated": self.npm_translated,
            "npm_all": self.npm_all,
            "n_native": self.n_native,
            "n_translated": self.n_translated,
            "n_all": self.n_all,
            "invalid_tasks": dict(sorted(self.invalid_tasks.items())),
        }


def compute_npm(
    results: Sequence[MetricResult],
    origins: Mapping[str, str],
    invalid_tasks: Optional[Mapping[str, str]] = None,
) -> NpmReport:
    """Rescale each task and average per split.

    ``origins`` maps task name to "native" or "translated". A split with
    no tasks reports None. npm_all is the mean over all components (not
    the mean of the two split means).
    """
    components: dict[str, float] = {}
    native: list[float] = []
    translated: list[float] = []
    for r in results:
        c = r.npm_component()
        components[r.task_name] = c
        origin = origins.get(r.task_name)
        if origin == "native":
            native.append(c)
        elif origin == "translated":
            translated.append(c)
        else:
            raise MetricError(f"{r.task_name}: origin must be native|translated, got {origin!r}")
    def mean(xs):
        return sum(xs) / len(xs) if xs else None
    return NpmReport(
        components=components,
        npm_native=mean(native),
        npm_translated=mean(translated),
        npm_all=mean(native + translated),
        n_native=len(native),
        n_translated=len(translated),
        invalid_tasks=dict(invalid_tasks or {}),
    )
