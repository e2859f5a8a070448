"""
Few-shot evaluation, from prompt to normalized aggregate
========================================================

Builds a small sentiment task in memory, shows the assembled prompt,
scores candidates with a scripted mock model, and walks the raw metric
through normalization against the random and ceiling baselines.

Run from the repository root:

    python3 demos/eval_walkthrough.py
"""

from lmtk.adapters import MockModel, MockModelSpec
from lmtk.harness import EvalConfig, evaluate_suite, report_dict
from lmtk.prompting import Fixed, build_prompt
from lmtk.tasks import Example, TaskSpec

CANDS = ("positiva", "negativa")

pool = (
    Example("Gostei muito do atendimento e voltaria amanhã.", "positiva", CANDS, "p0"),
    Example("Esperei uma hora e saí sem ser atendido.", "negativa", CANDS, "p1"),
    Example("O prato chegou quente e o tempero estava no ponto.", "positiva", CANDS, "p2"),
    Example("A entrega atrasou e a caixa veio amassada.", "negativa", CANDS, "p3"),
)
tests = (
    Example("Recomendo a loja para qualquer pessoa.", "positiva", CANDS, "t0"),
    Example("Nunca mais compro neste mercado.", "negativa", CANDS, "t1"),
)

task = TaskSpec(
    name="resenha-toy",
    origin="native",
    task_kind="binary",
    instruction="Classifique a resenha como positiva ou negativa.",
    shot_pool=pool,
    test_set=tests,
    preferred_metric="accuracy",
    random_score=50.0,  # two balanced classes
    high_score=100.0,
    balanced_shots=True,
    default_num_shots=2,
    answer_mode="rank",
)

# prompts are shot blocks joined by blank lines; the trailing stub ends
# with a newline so the candidate starts on its own line


class CharCounter:
    # token budgets need only count_tokens; characters keep the demo legible
    def count_tokens(self, text):
        return len(text)


prompt = build_prompt(task, tests[0], CharCounter(), budget=4096,
                      shot_policy=Fixed(2))
print("assembled 2-shot prompt")
print("-" * 40)
print(prompt.text, end="")
print("-" * 40)
print(f"({prompt.shot_count} shots, {prompt.token_count} budget units)\n")

# a lookup mock scripts every (prompt, candidate) pair it will be asked;
# summed token logprobs decide the ranking
score_table = {}
for ex, right in zip(tests, ("positiva", "negativa")):
    p = build_prompt(task, ex, CharCounter(), budget=4096, shot_policy=Fixed(2)).text
    for cand in CANDS:
        lp = (-0.4,) if cand == right else (-2.9,)
        score_table[(p, cand)] = lp
adapter = MockModel(MockModelSpec(mode="lookup", score_table=score_table), None)

config = EvalConfig(shot_policy=2, budget=4096)
report, results = evaluate_suite(adapter, [task], config, CharCounter())

raw = results[0].raw
print(f"raw accuracy:        {raw:.1f}")
print(f"random baseline:     {task.random_score:.1f}")
print(f"ceiling:             {task.high_score:.1f}")
component = 100.0 * (raw - task.random_score) / (task.high_score - task.random_score)
print(f"normalized score:    {component:.1f}   = 100*(raw-random)/(high-random)\n")

body = report_dict(report, results, [task])
print("report:")
for key in ("npm_all", "npm_native", "npm_translated"):
    print(f"  {key:16} {body[key]}")
print(f"  tasks            {list(body['tasks'])}")

# per-example records carry the prompt hash, scores, and verdict, enough
# to audit any single decision later
record = results[0].per_example[0]
print("\nfirst trace record keys:", sorted(record))
print("scores for t0:", record["scores"])
