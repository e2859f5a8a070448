"""Evaluation driver: answer modes, per-task runs, suite aggregation.

Three answer modes cover the benchmark:

- ``rank``: score each candidate string's log-likelihood as a
  continuation of the prompt, pick the argmax.
- ``rank_char_norm``: same, but each candidate's total log-likelihood is
  divided by its character count before ranking.
- ``generate``: greedy decoding until newline/stop/max_tokens; extractive
  QA keeps the text, regression parses the first number out of it.

Examples are evaluated in parallel up to a worker cap, but traces and
metrics are assembled in test-set order, so a run is deterministic given
(tasks, adapter, config, seed).
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .adapters import AdapterError, ModelAdapter
from .metrics import (
    MetricError,
    MetricResult,
    NpmReport,
    compute_metric,
    compute_npm,
    parse_first_number,
)
from .prompting import Fixed, MaxFit, Prompt, ShotPolicy, build_prompt
from .tasks import TaskSpec


class EvalAborted(RuntimeError):
    """Raised when on_error="abort" and an example failed."""


@dataclass(frozen=True)
class EvalConfig:
    budget: int = 2048
    shot_policy: Union[str, int] = "table"  # "table" | "max_fit" | int
    cap: Optional[int] = None
    seed: Optional[int] = None
    normalize: Optional[str] = None  # None (per task) | "none" | "char"
    workers: int = 1
    on_error: str = "record"  # "record" | "abort"

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if isinstance(self.shot_policy, str) and self.shot_policy not in ("table", "max_fit"):
            raise ValueError(f"shot_policy must be 'table', 'max_fit', or an int, got {self.shot_policy!r}")
        if isinstance(self.shot_policy, int) and self.shot_policy < 0:
            raise ValueError("shot_policy count must be >= 0")
        if self.cap is not None and self.cap < 1:
            raise ValueError("cap must be >= 1 when set")
        if self.normalize not in (None, "none", "char"):
            raise ValueError("normalize must be none|char")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.on_error not in ("record", "abort"):
            raise ValueError("on_error must be record|abort")

    def policy_for(self, task: TaskSpec) -> ShotPolicy:
        if self.shot_policy == "table":
            return Fixed(task.default_num_shots)
        if self.shot_policy == "max_fit":
            return MaxFit()
        return Fixed(int(self.shot_policy))


def score_candidates(
    adapter: ModelAdapter,
    prompt: str,
    candidates: Sequence[str],
    normalization: str = "none",
) -> list[tuple[str, float]]:
    """Rank candidates by continuation log-likelihood, descending.

    per_char mode divides each total by the candidate's character count
    (empty candidates count as one char). Ties keep list order.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if normalization not in ("none", "per_char"):
        raise ValueError(f"unknown normalization {normalization!r}")
    scored = []
    for cand in candidates:
        total = adapter.score(prompt, cand).total_logprob
        if normalization == "per_char":
            total = total / max(len(cand), 1)
        scored.append((cand, total))
    return sorted(scored, key=lambda cs: -cs[1])


def generate_answer(
    adapter: ModelAdapter,
    prompt: str,
    max_tokens: int,
    stop_sequences: Sequence[str] = (),
) -> str:
    """Greedy generation cut at the first newline or stop sequence,
    whitespace-stripped."""
    stop = ["\n"] + [s for s in stop_sequences if s and s != "\n"]
    resp = adapter.generate(prompt, max_tokens=max_tokens, stop=stop)
    return resp.text.strip()


def _gold_json(gold):
    return list(gold) if isinstance(gold, tuple) else gold


def _eval_example(adapter, task, config, tokenizer, index, example):
    record = {
        "task": task.name,
        "index": index,
        "example_id": example.example_id,
    }
    try:
        prompt = build_prompt(
            task, example, tokenizer,
            budget=config.budget,
            shot_policy=config.policy_for(task),
            seed=config.seed,
        )
        record.update(
            prompt_sha256=hashlib.sha256(prompt.text.encode("utf-8")).hexdigest(),
            shot_count=prompt.shot_count,
            token_count=prompt.token_count,
        )
        mode = task.answer_mode
        if mode in ("rank", "rank_char_norm"):
            if config.normalize is not None:
                norm = "per_char" if config.normalize == "char" else "none"
            else:
                norm = "per_char" if mode == "rank_char_norm" else "none"
            ranked = score_candidates(adapter, prompt.text, example.candidates, norm)
            record["scores"] = [[c, s] for c, s in ranked]
            prediction = ranked[0][0]
        else:
            text = generate_answer(adapter, prompt.text, task.max_gen_tokens)
            record["generated"] = text
            if task.task_kind == "regression":
                value = parse_first_number(text)
                if value is None:
                    record["parse_error"] = True
                    value = 0.0
                prediction = value
            else:
                prediction = text
    except (AdapterError, MetricError, ValueError) as e:
        record["error"] = f"{type(e).__name__}: {e}"
        prediction = 0.0 if task.task_kind == "regression" else ""
    record["prediction"] = prediction
    record["gold"] = _gold_json(example.gold)
    return prediction, record


def evaluate_task(
    adapter: ModelAdapter,
    task: TaskSpec,
    config: EvalConfig,
    tokenizer,
) -> MetricResult:
    """Run one task end to end and compute its preferred metric.

    Per-example failures are recorded in the trace and scored as wrong
    (on_error="record") or raised (on_error="abort").
    """
    task.validate()
    examples = list(task.test_set)
    if config.cap is not None:
        examples = examples[: config.cap]
    if not examples:
        raise MetricError(f"{task.name}: empty test set")

    def work(pair):
        return _eval_example(adapter, task, config, tokenizer, pair[0], pair[1])

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(work, enumerate(examples)))
    else:
        outcomes = [work(p) for p in enumerate(examples)]

    predictions = [p for p, _ in outcomes]
    records = tuple(r for _, r in outcomes)
    failed = [r for r in records if "error" in r]
    if failed and config.on_error == "abort":
        raise EvalAborted(f"{task.name}: {len(failed)} example(s) failed: {failed[0]['error']}")

    golds = [ex.gold for ex in examples]
    raw = compute_metric(
        task.preferred_metric, predictions, golds,
        labels=task.labels, positive_label=task.positive_label,
    )
    return MetricResult(
        task_name=task.name,
        raw=raw,
        random_score=task.random_score,
        high_score=task.high_score,
        n_examples=len(examples),
        per_example=records,
    )


def evaluate_suite(
    adapter: ModelAdapter,
    tasks: Sequence[TaskSpec],
    config: EvalConfig,
    tokenizer,
) -> tuple[NpmReport, list[MetricResult]]:
    """Evaluate every task; tasks that fail outright are excluded from
    the aggregate and reported under invalid_tasks."""
    if not tasks:
        raise ValueError("task list must be non-empty")
    results: list[MetricResult] = []
    invalid: dict[str, str] = {}
    for task in tasks:
        try:
            results.append(evaluate_task(adapter, task, config, tokenizer))
        except EvalAborted:
            raise
        except Exception as e:  # noqa: BLE001 - task isolation is the contract
            invalid[task.name] = f"{type(e).__name__}: {e}"
    origins = {t.name: t.origin for t in tasks}
    report = compute_npm(results, origins, invalid_tasks=invalid)
    return report, results


def report_dict(
    report: NpmReport,
    results: Sequence[MetricResult],
    tasks: Sequence[TaskSpec],
) -> dict:
    """JSON-ready report: aggregates plus per-task raw metrics."""
    by_name = {t.name: t for t in tasks}
    task_rows = {}
    for r in results:
        t = by_name[r.task_name]
        task_rows[r.task_name] = {
            "raw": r.raw,
            "random_score": r.random_score,
            "high_score": r.high_score,
            "n_examples": r.n_examples,
            "origin": t.origin,
            "preferred_metric": t.preferred_metric,
            "answer_mode": t.answer_mode,
        }
    out = report.as_dict()
    out["tasks"] = dict(sorted(task_rows.items()))
    return out
