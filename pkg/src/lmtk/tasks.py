"""Task model for few-shot evaluation: examples, specs, registry, loaders.

A task couples an instruction, a pool of labeled demonstration examples,
a test set, and scoring metadata (answer mode, preferred metric, random
and high scores for normalization). Dataset contents are never bundled;
``load_task_dir`` reads user-provided directories of the documented
layout, and :data:`BENCHMARK` carries only the published metadata of the
14-dataset Portuguese benchmark (7 native, 7 translated) so reports can
be normalized and aggregated the same way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

ANSWER_MODES = ("rank", "rank_char_norm", "generate")
METRICS = ("accuracy", "f1_binary", "f1_macro", "pearson", "token_f1")
ORIGINS = ("native", "translated")
TASK_KINDS = ("multiclass", "binary", "multichoice", "extractive_qa", "regression")

Gold = Union[str, float, tuple]


class TaskError(ValueError):
    """Task definition failed validation."""


@dataclass(frozen=True)
class Example:
    """One labeled example.

    ``gold`` is a label string (classification), a number (regression),
    or a tuple of acceptable answer strings (extractive QA).
    ``candidates`` is required by the rank answer modes.
    """

    input: str
    gold: Gold
    candidates: Optional[tuple[str, ...]] = None
    example_id: Optional[str] = None

    def gold_text(self) -> str:
        """Rendering of the gold for use inside a prompt."""
        if isinstance(self.gold, tuple):
            return self.gold[0]
        if isinstance(self.gold, float):
            return f"{self.gold:g}"
        return str(self.gold)


@dataclass(frozen=True)
class Templates:
    """Per-task prompt rendering strings."""

    shot: str = "{input}\n{label}"
    stub: str = "{input}\n"
    separator: str = "\n\n"


@dataclass(frozen=True)
class TaskSpec:
    name: str
    origin: str  # native | translated
    task_kind: str
    instruction: str
    shot_pool: tuple[Example, ...]
    test_set: tuple[Example, ...]
    preferred_metric: str
    random_score: float
    high_score: float
    balanced_shots: bool
    default_num_shots: int
    answer_mode: str
    templates: Templates = Templates()
    num_classes: Optional[int] = None
    labels: Optional[tuple[str, ...]] = None
    positive_label: Optional[str] = None
    max_gen_tokens: int = 32

    def validate(self) -> None:
        if self.origin not in ORIGINS:
            raise TaskError(f"{self.name}: origin must be one of {ORIGINS}")
        if self.task_kind not in TASK_KINDS:
            raise TaskError(f"{self.name}: task_kind must be one of {TASK_KINDS}")
        if self.preferred_metric not in METRICS:
            raise TaskError(f"{self.name}: unknown metric {self.preferred_metric!r}")
        if self.answer_mode not in ANSWER_MODES:
            raise TaskError(f"{self.name}: unknown answer_mode {self.answer_mode!r}")
        if not self.random_score < self.high_score:
            raise TaskError(f"{self.name}: need random_score < high_score")
        if self.default_num_shots < 0:
            raise TaskError(f"{self.name}: default_num_shots must be >= 0")
        if self.preferred_metric == "f1_binary" and not self.positive_label:
            raise TaskError(f"{self.name}: f1_binary needs positive_label")
        if self.preferred_metric == "f1_macro" and not self.labels:
            raise TaskError(f"{self.name}: f1_macro needs the full labels list")
        if self.max_gen_tokens < 1:
            raise TaskError(f"{self.name}: max_gen_tokens must be >= 1")
        for where, examples in (("shot_pool", self.shot_pool), ("test_set", self.test_set)):
            for i, ex in enumerate(examples):
                if self.answer_mode in ("rank", "rank_char_norm") and not ex.candidates:
                    raise TaskError(f"{self.name}: {where}[{i}] lacks candidates")
                if self.task_kind == "extractive_qa" and (
                    not isinstance(ex.gold, tuple) or not ex.gold
                ):
                    raise TaskError(
                        f"{self.name}: {where}[{i}] gold must be a non-empty answer set"
                    )
        pool_inputs = {ex.input for ex in self.shot_pool}
        overlap = [ex.input for ex in self.test_set if ex.input in pool_inputs]
        if overlap:
            raise TaskError(
                f"{self.name}: shot_pool and test_set overlap ({overlap[0][:40]!r}...)"
            )


# ---------------------------------------------------------------------------
# published benchmark metadata

@dataclass(frozen=True)
class TaskMeta:
    """Registry row: normalization metadata for one benchmark dataset."""

    name: str
    display_name: str
    origin: str
    task_kind: str
    preferred_metric: str
    random_score: float
    high_score: float
    balanced_shots: bool
    default_num_shots: int
    answer_mode: str
    num_classes: Optional[int] = None


# Fourteen datasets; shot balancing is off for the six where class-balanced
# demonstrations are impossible or were not used (QA, exam-style
# multiple choice with position-coded answers, Winograd schemas).
BENCHMARK: tuple[TaskMeta, ...] = (
    TaskMeta("agnews", "AG News", "translated", "multiclass", "accuracy", 25.0, 100.0, True, 12, "rank", 4),
    TaskMeta("assin2-rte", "ASSIN 2 RTE", "native", "binary", "f1_binary", 50.0, 100.0, True, 18, "rank", 2),
    TaskMeta("assin2-sts", "ASSIN 2 STS", "native", "regression", "pearson", 0.0, 1.0, True, 15, "generate"),
    TaskMeta("bluex", "BLUEX", "native", "multichoice", "accuracy", 25.0, 100.0, False, 1, "rank", 4),
    TaskMeta("boolq", "BoolQ", "translated", "binary", "accuracy", 50.0, 100.0, True, 4, "rank", 2),
    TaskMeta("enem-challenge", "ENEM Challenge", "native", "multichoice", "accuracy", 20.0, 100.0, False, 1, "rank", 5),
    TaskMeta("enem-2022", "ENEM 2022", "native", "multichoice", "accuracy", 20.0, 100.0, False, 1, "rank", 5),
    TaskMeta("faquad", "FaQuAD", "native", "extractive_qa", "token_f1", 0.0, 100.0, False, 4, "generate"),
    TaskMeta("imdb", "IMDB", "translated", "binary", "accuracy", 50.0, 100.0, True, 2, "rank", 2),
    TaskMeta("massive", "MASSIVE", "translated", "multiclass", "f1_macro", 0.58, 100.0, True, 36, "rank", 18),
    TaskMeta("mkqa", "MKQA", "translated", "extractive_qa", "token_f1", 0.0, 100.0, False, 40, "generate"),
    TaskMeta("sst2", "SST2", "translated", "binary", "accuracy", 50.0, 100.0, True, 34, "rank", 2),
    TaskMeta("tweetsentbr", "TweetSentBR", "native", "multiclass", "f1_macro", 32.4, 100.0, True, 30, "rank", 3),
    TaskMeta("wsc", "WSC", "translated", "binary", "accuracy", 50.0, 100.0, False, 18, "rank", 2),
)

BENCHMARK_BY_NAME = {m.name: m for m in BENCHMARK}


# ---------------------------------------------------------------------------
# loading task directories

_TASK_KEYS = {
    "name", "origin", "task_kind", "num_classes", "instruction",
    "preferred_metric", "random_score", "high_score", "balanced_shots",
    "default_num_shots", "answer_mode", "templates", "labels",
    "positive_label", "max_gen_tokens",
}
_TEMPLATE_KEYS = {"shot", "stub", "separator"}
_EXAMPLE_KEYS = {"id", "input", "gold", "candidates"}


def _parse_gold(raw) -> Gold:
    if isinstance(raw, list):
        if not raw or not all(isinstance(x, str) for x in raw):
            raise TaskError("gold answer set must be a non-empty list of strings")
        return tuple(raw)
    if isinstance(raw, bool):
        raise TaskError("gold must be a string, number, or list of strings")
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        return raw
    raise TaskError(f"gold must be a string, number, or list of strings, got {type(raw).__name__}")


def _read_examples(path: Path) -> tuple[Example, ...]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise TaskError(f"{path}:{lineno}: invalid JSON: {e}") from e
            if not isinstance(obj, dict):
                raise TaskError(f"{path}:{lineno}: expected a JSON object")
            unknown = set(obj) - _EXAMPLE_KEYS
            if unknown:
                raise TaskError(f"{path}:{lineno}: unknown keys {sorted(unknown)}")
            if "input" not in obj or "gold" not in obj:
                raise TaskError(f"{path}:{lineno}: 'input' and 'gold' are required")
            candidates = obj.get("candidates")
            if candidates is not None:
                if not isinstance(candidates, list) or not all(isinstance(c, str) for c in candidates):
                    raise TaskError(f"{path}:{lineno}: candidates must be a list of strings")
                candidates = tuple(candidates)
            out.append(Example(
                input=str(obj["input"]),
                gold=_parse_gold(obj["gold"]),
                candidates=candidates,
                example_id=str(obj.get("id", lineno)),
            ))
    return tuple(out)


def load_task_dir(path: str | Path) -> TaskSpec:
    """Build a validated TaskSpec from a directory holding ``task.json``,
    ``shots.jsonl``, and ``test.jsonl``. Unknown keys are rejected."""
    root = Path(path)
    meta_path = root / "task.json"
    try:
        with open(meta_path, encoding="utf-8") as f:
            meta = json.load(f)
    except OSError as e:
        raise TaskError(f"{meta_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise TaskError(f"{meta_path}: invalid JSON: {e}") from e
    if not isinstance(meta, dict):
        raise TaskError(f"{meta_path}: expected a JSON object")
    unknown = set(meta) - _TASK_KEYS
    if unknown:
        raise TaskError(f"{meta_path}: unknown keys {sorted(unknown)}")
    for key in ("name", "origin", "task_kind", "instruction", "preferred_metric",
                "random_score", "high_score", "answer_mode"):
        if key not in meta:
            raise TaskError(f"{meta_path}: missing required key {key!r}")

    tpl = meta.get("templates", {})
    if not isinstance(tpl, dict) or set(tpl) - _TEMPLATE_KEYS:
        raise TaskError(f"{meta_path}: templates allows keys {sorted(_TEMPLATE_KEYS)}")
    templates = Templates(**{k: str(v) for k, v in tpl.items()})

    labels = meta.get("labels")
    spec = TaskSpec(
        name=str(meta["name"]),
        origin=str(meta["origin"]),
        task_kind=str(meta["task_kind"]),
        instruction=str(meta["instruction"]),
        shot_pool=_read_examples(root / "shots.jsonl"),
        test_set=_read_examples(root / "test.jsonl"),
        preferred_metric=str(meta["preferred_metric"]),
        random_score=float(meta["random_score"]),
        high_score=float(meta["high_score"]),
        balanced_shots=bool(meta.get("balanced_shots", False)),
        default_num_shots=int(meta.get("default_num_shots", 0)),
        answer_mode=str(meta["answer_mode"]),
        templates=templates,
        num_classes=meta.get("num_classes"),
        labels=tuple(labels) if labels else None,
        positive_label=meta.get("positive_label"),
        max_gen_tokens=int(meta.get("max_gen_tokens", 32)),
    )
    spec.validate()
    return spec


def load_task_root(path: str | Path) -> list[TaskSpec]:
    """Load every subdirectory of ``path`` containing a task.json,
    sorted by name for determinism."""
    root = Path(path)
    dirs = sorted(p for p in root.iterdir() if (p / "task.json").is_file())
    if not dirs:
        raise TaskError(f"{root}: no task directories found")
    return [load_task_dir(p) for p in dirs]
