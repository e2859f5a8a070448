"""Few-shot prompt construction under a hard token budget.

A prompt is ``instruction <sep> shot_1 <sep> ... shot_k <sep> stub`` with
the token count measured on the assembled text by a reference tokenizer.
Shot selection is class-balanced with round-robin alternation for tasks
that support it; ``max_fit`` greedily adds shots until one more would
exceed the budget. Prompts over budget are an error, never silently
truncated.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .tasks import Example, TaskSpec


class PromptBudgetError(ValueError):
    """Prompt cannot fit the token budget."""


class ShotSelectionError(ValueError):
    """Shot pool cannot satisfy the request."""


@dataclass(frozen=True)
class Prompt:
    text: str
    shot_count: int
    token_count: int
    task_name: str
    example_id: Optional[str] = None


@dataclass(frozen=True)
class MaxFit:
    """Pack as many shots as the budget allows."""


@dataclass(frozen=True)
class Fixed:
    """Exactly k shots; over-budget is an error."""

    k: int


ShotPolicy = Union[Fixed, MaxFit]


def _class_of(ex: Example) -> str:
    return ex.gold_text()


def _round_robin(by_class: dict[str, list[Example]], counts: dict[str, int]) -> list[Example]:
    """Interleave classes in first-appearance order until counts are used."""
    queues = {c: list(items[: counts[c]]) for c, items in by_class.items()}
    out: list[Example] = []
    while any(queues.values()):
        for c in by_class:
            if queues[c]:
                out.append(queues[c].pop(0))
    return out


def select_shots(
    pool: Sequence[Example],
    k: int,
    balanced: bool = False,
    ordering: str = "alternating",
    seed: Optional[int] = None,
) -> list[Example]:
    """Choose k demonstration examples from the pool.

    Unbalanced: the first k in pool order, or a uniform sample without
    replacement when ``seed`` is given. Balanced: per-class counts as
    equal as possible (earlier-appearing classes get the remainder),
    drawn in pool order (or seeded sample order) within each class and
    emitted class-alternating when ``ordering="alternating"``.
    """
    if ordering not in ("alternating", "pool"):
        raise ValueError(f"unknown ordering {ordering!r}")
    if k < 0:
        raise ShotSelectionError("k must be >= 0")
    if k > len(pool):
        raise ShotSelectionError(f"k={k} exceeds pool size {len(pool)}")
    if k == 0:
        return []
    rng = random.Random(seed) if seed is not None else None

    if not balanced:
        if rng is None:
            return list(pool[:k])
        return rng.sample(list(pool), k)

    by_class: dict[str, list[Example]] = {}
    for ex in pool:
        by_class.setdefault(_class_of(ex), []).append(ex)
    classes = list(by_class)
    base, extra = divmod(k, len(classes))
    counts = {c: base + (1 if i < extra else 0) for i, c in enumerate(classes)}
    for c, need in counts.items():
        if need > len(by_class[c]):
            raise ShotSelectionError(
                f"class {c!r} has {len(by_class[c])} pool examples, "
                f"needs {need} for balanced k={k}"
            )
    if rng is not None:
        by_class = {c: rng.sample(items, counts[c]) for c, items in by_class.items()}
    if ordering == "alternating":
        return _round_robin(by_class, counts)
    picked = {id(ex) for c, items in by_class.items() for ex in items[: counts[c]]}
    return [ex for ex in pool if id(ex) in picked]


def full_pool_order(
    pool: Sequence[Example],
    balanced: bool = False,
    seed: Optional[int] = None,
) -> list[Example]:
    """Every pool example, in the order max_fit should try them.

    Balanced mode round-robins classes and keeps going when short classes
    run dry, so consecutive classes differ whenever more than one class
    still has examples.
    """
    if not balanced:
        if seed is None:
            return list(pool)
        return random.Random(seed).sample(list(pool), len(pool))
    by_class: dict[str, list[Example]] = {}
    for ex in pool:
        by_class.setdefault(_class_of(ex), []).append(ex)
    if seed is not None:
        rng = random.Random(seed)
        by_class = {c: rng.sample(items, len(items)) for c, items in by_class.items()}
    return _round_robin(by_class, {c: len(items) for c, items in by_class.items()})


def render_shot(task: TaskSpec, ex: Example) -> str:
    return task.templates.shot.format(input=ex.input, label=ex.gold_text())


def render_stub(task: TaskSpec, ex: Example) -> str:
    return task.templates.stub.format(input=ex.input)


def assemble(task: TaskSpec, shots: Sequence[Example], test_example: Example) -> str:
    sep = task.templates.separator
    parts = [task.instruction]
    parts.extend(render_shot(task, s) for s in shots)
    parts.append(render_stub(task, test_example))
    return sep.join(parts)


def build_prompt(
    task: TaskSpec,
    test_example: Example,
    tokenizer,
    budget: int = 2048,
    shot_policy: ShotPolicy = MaxFit(),
    seed: Optional[int] = None,
) -> Prompt:
    """Assemble one prompt, guaranteeing token_count <= budget.

    ``tokenizer`` needs only a ``count_tokens(text) -> int`` method.
    Fixed(k) selects exactly k shots and errors if the result is over
    budget. MaxFit orders the whole pool (balanced round-robin when the
    task calls for it) and adds shots greedily while the assembled prompt
    stays within budget; the first shot that would overflow stops the
    scan, so adding one more would always exceed the budget.
    """
    base = assemble(task, [], test_example)
    base_count = tokenizer.count_tokens(base)
    if base_count > budget:
        raise PromptBudgetError(
            f"{task.name}: instruction and test example alone need "
            f"{base_count} tokens (> budget {budget})"
        )

    if isinstance(shot_policy, Fixed):
        shots = select_shots(
            task.shot_pool, shot_policy.k, balanced=task.balanced_shots, seed=seed
        )
        text = assemble(task, shots, test_example)
        count = tokenizer.count_tokens(text)
        if count > budget:
            raise PromptBudgetError(
                f"{task.name}: fixed {shot_policy.k} shots need {count} tokens "
                f"(> budget {budget})"
            )
        return Prompt(text, len(shots), count, task.name, test_example.example_id)

    ordered = full_pool_order(task.shot_pool, balanced=task.balanced_shots, seed=seed)
    shots: list[Example] = []
    text, count = base, base_count
    for candidate in ordered:
        trial = assemble(task, shots + [candidate], test_example)
        trial_count = tokenizer.count_tokens(trial)
        if trial_count > budget:
            break
        shots.append(candidate)
        text, count = trial, trial_count
    return Prompt(text, len(shots), count, task.name, test_example.example_id)
