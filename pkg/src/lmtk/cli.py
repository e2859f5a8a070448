"""Command-line entry point.

Subcommands:

- ``corpus filter``: quality-filter documents, report keep/reject stats
- ``corpus pack``: filter and pack kept documents into a uint32 token file
- ``tokenize count``: token (or distinct-token) count of a text file
- ``eval run``: few-shot evaluation of a task directory against an adapter
- ``eval report``: pretty-print a report.json
- ``budget mfu`` / ``budget tokens``: utilization and token/cost math
- ``schedule dump``: CSV of (k, lr, beta2) for a schedule spec

Exit codes: 0 success, 1 validation error (bad flags, config, or input
files), 2 runtime failure (I/O, adapter unavailable). Artifact-producing
commands write ``manifest.json`` into --out-dir even when they fail;
``--canonical`` makes all outputs byte-stable (sorted keys, 6-significant-
digit floats, no timestamps).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import __version__
from .adapters import AdapterError
from .config import (
    AdapterOptions,
    ConfigError,
    RunConfig,
    config_as_dict,
    load_config_file,
    merge_config,
)
from .corpus import (
    CorpusError,
    PackWriteError,
    filter_only,
    pack_documents,
    read_documents_dir,
    read_documents_jsonl,
)
from .harness import evaluate_suite, report_dict
from .manifest import RunManifest, canonicalize, dump_json, write_atomic
from .metrics import MetricError
from .tasks import TaskError, load_task_root
from .trainmath import (
    WarmupConstant,
    WarmupCosineFloor,
    beta2_at,
    budget as budget_report,
    mfu,
    resolve_hardware,
)

VALIDATION_ERRORS = (ConfigError, TaskError, CorpusError, MetricError, ValueError, KeyError)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2 for
    runtime failures, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# config plumbing

def _resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config_file(args.config, cfg)
    overrides: dict = {}
    for key in ("seed", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = v
    if getattr(args, "vocab", None) or getattr(args, "merges", None):
        overrides["tokenizer"] = {"vocab": args.vocab, "merges": args.merges}
    eval_over = {}
    for flag, key in (("budget", "budget"), ("cap", "cap"), ("on_error", "on_error")):
        v = getattr(args, flag, None)
        if v is not None:
            eval_over[key] = v
    shots = getattr(args, "shots", None)
    if shots is not None:
        eval_over["shot_policy"] = int(shots) if shots.lstrip("-").isdigit() else shots.replace("-", "_")
    norm = getattr(args, "normalize", None)
    if norm is not None:
        eval_over["normalize"] = norm
    if getattr(args, "seed", None) is not None:
        eval_over["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        eval_over["workers"] = args.workers
    if eval_over:
        overrides["eval"] = eval_over
    adapter = getattr(args, "adapter", None)
    if adapter is not None:
        if adapter == "mock":
            ao = {"kind": "mock"}
            if getattr(args, "mock_table", None):
                ao.update(mock_mode="lookup", mock_table=args.mock_table)
            if getattr(args, "mock_seed", None) is not None:
                ao.update(mock_mode=ao.get("mock_mode", "unigram"), mock_seed=args.mock_seed)
        elif adapter.startswith(("http://", "https://")):
            ao = {"kind": "http", "base_url": adapter}
        else:
            raise ConfigError(f"--adapter must be 'mock' or an http(s) URL, got {adapter!r}")
        overrides["adapter"] = ao
    return merge_config(cfg, overrides)


# ---------------------------------------------------------------------------
# corpus commands

def _read_docs(args):
    if bool(args.input) == bool(args.input_dir):
        raise ConfigError("give exactly one of --input or --input-dir")
    if args.input:
        return read_documents_jsonl(args.input), [args.input]
    docs = list(read_documents_dir(args.input_dir))
    return docs, [d.source for d in docs]


def _cmd_corpus(args) -> int:
    pack = args.corpus_cmd == "pack"
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(subcommand=f"corpus {args.corpus_cmd}", config={})
    code = 0
    try:
        cfg = _resolve_config(args)
        manifest.config = config_as_dict(cfg)
        manifest.seed = cfg.seed
        docs, inputs = _read_docs(args)
        for p in inputs:
            manifest.add_input(p)
        tokenizer = cfg.load_tokenizer()
        normalize = not args.no_normalize
        with open(out_dir / "rejects.log", "w", encoding="utf-8") as rejects:
            if pack:
                with open(out_dir / "tokens.bin", "wb") as out:
                    stats = pack_documents(
                        docs, cfg.filter, tokenizer, out,
                        reject_log=rejects, normalize=normalize, workers=cfg.workers,
                    )
            else:
                stats = filter_only(
                    docs, cfg.filter, tokenizer,
                    reject_log=rejects, normalize=normalize, workers=cfg.workers,
                )
        write_atomic(out_dir / "stats.json", dump_json(stats.as_dict(), canonical=args.canonical))
        print(json.dumps(stats.as_dict()))
        manifest.finish("ok")
    except PackWriteError as e:
        _fail(str(e))
        manifest.finish(f"partial: {e}")
        code = 2
    except VALIDATION_ERRORS as e:
        _fail(str(e))
        manifest.finish(f"error: {e}")
        code = 1
    except Exception as e:  # noqa: BLE001 - manifest must record any failure
        _fail(str(e))
        manifest.finish(f"error: {e}")
        code = 2
    manifest.write(out_dir, canonical=args.canonical)
    return code


# ---------------------------------------------------------------------------
# tokenize

def _cmd_tokenize(args) -> int:
    cfg = _resolve_config(args)
    tokenizer = cfg.load_tokenizer()
    text = Path(args.file).read_bytes().decode("utf-8", errors="replace")
    print(tokenizer.count_unique(text) if args.unique else tokenizer.count_tokens(text))
    return 0


# ---------------------------------------------------------------------------
# eval commands

def _cmd_eval_run(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(subcommand="eval run", config={})
    code = 0
    try:
        cfg = _resolve_config(args)
        manifest.config = config_as_dict(cfg)
        manifest.seed = cfg.seed
        tasks = load_task_root(args.tasks)
        for t in sorted(Path(args.tasks).glob("*/task.json")):
            manifest.add_input(t)
        tokenizer = cfg.load_tokenizer()
        adapter = cfg.adapter.build(tokenizer)
        report, results = evaluate_suite(adapter, tasks, cfg.eval, tokenizer)
        body = report_dict(report, results, tasks)
        write_atomic(out_dir / "report.json", dump_json(body, canonical=args.canonical))
        with open(out_dir / "trace.jsonl", "w", encoding="utf-8") as f:
            for r in results:
                for record in r.per_example:
                    f.write(json.dumps(canonicalize(record, floats=args.canonical),
                                       sort_keys=True, ensure_ascii=False) + "\n")
        print(json.dumps({
            "npm_all": body["npm_all"],
            "npm_native": body["npm_native"],
            "npm_translated": body["npm_translated"],
            "invalid_tasks": sorted(body["invalid_tasks"]),
        }))
        if report.invalid_tasks:
            for name, err in sorted(report.invalid_tasks.items()):
                print(f"warning: task {name} excluded: {err}", file=sys.stderr)
        manifest.finish("ok")
    except VALIDATION_ERRORS as e:
        _fail(str(e))
        manifest.finish(f"error: {e}")
        code = 1
    except Exception as e:  # noqa: BLE001
        _fail(str(e))
        manifest.finish(f"error: {e}")
        code = 2
    manifest.write(out_dir, canonical=args.canonical)
    return code


def _cmd_eval_report(args) -> int:
    with open(args.report, encoding="utf-8") as f:
        body = json.load(f)
    rows = body.get("tasks", {})
    comps = body.get("components", {})
    if rows:
        name_w = max(len(n) for n in rows)
        print(f"{'task':<{name_w}}  {'origin':<10}  {'metric':<10}  {'raw':>8}  {'npm':>8}")
        for name in sorted(rows):
            r = rows[name]
            comp = comps.get(name)
            comp_s = f"{comp:8.2f}" if comp is not None else "       -"
            print(f"{name:<{name_w}}  {r['origin']:<10}  {r['preferred_metric']:<10}  "
                  f"{r['raw']:8.2f}  {comp_s}")
    for key in ("npm_native", "npm_translated", "npm_all"):
        v = body.get(key)
        print(f"{key}: {v:.2f}" if v is not None else f"{key}: -")
    for name, err in sorted(body.get("invalid_tasks", {}).items()):
        print(f"invalid: {name}: {err}")
    return 0


# ---------------------------------------------------------------------------
# budget / schedule

def _parse_hardware(text: str):
    if text.startswith("custom:"):
        return float(text.split(":", 1)[1])
    return resolve_hardware(text)


def _cmd_budget_mfu(args) -> int:
    value = mfu(args.params, args.tps, _parse_hardware(args.hardware))
    print(f"{value:.6g}")
    return 0


def _cmd_budget_tokens(args) -> int:
    rep = budget_report(
        args.steps, args.batch, args.seqlen,
        corpus_tokens=args.corpus,
        tokens_per_sec=args.tps,
        usd_per_hour=args.usd_per_hour,
    )
    if rep.epochs is None and rep.wallclock_seconds is None and rep.cost_usd is None:
        print(rep.tokens_trained)
    else:
        print(dump_json(rep.as_dict(), canonical=True), end="")
    return 0


_SCHEDULE_KEYS = {
    "warmup_constant": {"peak", "warmup_steps", "total_steps"},
    "warmup_cosine_floor": {"peak", "end", "warmup_steps", "decay_steps"},
}


def load_schedule_spec(path: str):
    """Schedule spec YAML: {variant: ..., peak: ..., ...}; fail-closed."""
    with open(path, encoding="utf-8") as f:
        raw = yaml.safe_load(f)
    if not isinstance(raw, dict) or "variant" not in raw:
        raise ConfigError(f"{path}: expected a mapping with a 'variant' key")
    variant = raw["variant"]
    if variant not in _SCHEDULE_KEYS:
        raise ConfigError(f"{path}: variant must be one of {sorted(_SCHEDULE_KEYS)}")
    keys = set(raw) - {"variant"}
    unknown = keys - _SCHEDULE_KEYS[variant]
    if unknown:
        raise ConfigError(f"{path}: unknown schedule key {sorted(unknown)[0]}")
    params = {k: raw[k] for k in keys}
    try:
        if variant == "warmup_constant":
            return WarmupConstant(**params)
        return WarmupCosineFloor(**params)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def _cmd_schedule_dump(args) -> int:
    spec = load_schedule_spec(args.spec)
    lines = ["k,lr,beta2"]
    for k in range(args.steps + 1):
        beta2 = f"{beta2_at(k):.10g}" if k >= 1 else ""
        lines.append(f"{k},{spec.lr_at(k):.10g},{beta2}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_common(p, out_dir: bool = False):
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--vocab", help="tokenizer vocab.json (default: bundled)")
    p.add_argument("--merges", help="tokenizer merges.txt (default: bundled)")
    p.add_argument("--canonical", action="store_true",
                   help="byte-stable outputs: sorted keys, 6-digit floats, no timestamps")
    if out_dir:
        p.add_argument("--out-dir", required=True, help="directory for outputs + manifest")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lmtk", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"lmtk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    corpus = sub.add_parser("corpus", help="filter and pack document corpora")
    corpus_sub = corpus.add_subparsers(dest="corpus_cmd", required=True, parser_class=_Parser)
    for name, help_text in (("filter", "filter only; write stats + reject log"),
                            ("pack", "filter, encode, and pack kept docs to tokens.bin")):
        cp = corpus_sub.add_parser(name, help=help_text)
        cp.add_argument("--input", help="JSONL file with id/text fields")
        cp.add_argument("--input-dir", help="directory of .txt documents")
        cp.add_argument("--no-normalize", action="store_true",
                        help="skip mojibake/HTML/NFC normalization")
        _add_common(cp, out_dir=True)
        cp.set_defaults(func=_cmd_corpus)

    tok = sub.add_parser("tokenize", help="token accounting")
    tok_sub = tok.add_subparsers(dest="tokenize_cmd", required=True, parser_class=_Parser)
    tc = tok_sub.add_parser("count", help="count tokens in a text file")
    tc.add_argument("file")
    tc.add_argument("--unique", action="store_true", help="count distinct token ids")
    _add_common(tc)
    tc.set_defaults(func=_cmd_tokenize)

    ev = sub.add_parser("eval", help="few-shot evaluation")
    ev_sub = ev.add_subparsers(dest="eval_cmd", required=True, parser_class=_Parser)
    er = ev_sub.add_parser("run", help="evaluate a directory of tasks")
    er.add_argument("--tasks", required=True, help="directory of task subdirectories")
    er.add_argument("--adapter", default=None, help="'mock' or an http(s):// base URL")
    er.add_argument("--mock-table", help="lookup-mock table JSON (with --adapter mock)")
    er.add_argument("--mock-seed", type=int, default=None, help="unigram-mock seed")
    er.add_argument("--budget", type=int, default=None, help="prompt token budget (default 2048)")
    er.add_argument("--shots", default=None,
                    help="'table' (per-task default), 'max-fit', or an integer")
    er.add_argument("--cap", type=int, default=None, help="max test examples per task")
    er.add_argument("--normalize", choices=("none", "char"), default=None,
                    help="override rank normalization for all tasks")
    er.add_argument("--on-error", dest="on_error", choices=("record", "abort"), default=None)
    _add_common(er, out_dir=True)
    er.set_defaults(func=_cmd_eval_run)
    ep = ev_sub.add_parser("report", help="pretty-print a report.json")
    ep.add_argument("--report", required=True)
    ep.set_defaults(func=_cmd_eval_report)

    bud = sub.add_parser("budget", help="training budget math")
    bud_sub = bud.add_subparsers(dest="budget_cmd", required=True, parser_class=_Parser)
    bm = bud_sub.add_parser("mfu", help="model FLOPs utilization")
    bm.add_argument("--params", type=float, required=True, help="parameter count")
    bm.add_argument("--tps", type=float, required=True, help="tokens per second")
    bm.add_argument("--hardware", required=True,
                    help="v2-512 | v3-8 | custom:PEAK_FLOPS")
    bm.set_defaults(func=_cmd_budget_mfu)
    bt = bud_sub.add_parser("tokens", help="token count, epochs, wallclock, cost")
    bt.add_argument("--steps", type=int, required=True)
    bt.add_argument("--batch", type=int, required=True)
    bt.add_argument("--seqlen", type=int, required=True)
    bt.add_argument("--corpus", type=int, default=None, help="corpus tokens (for epochs)")
    bt.add_argument("--tps", type=float, default=None, help="tokens/s (for wallclock)")
    bt.add_argument("--usd-per-hour", type=float, default=None)
    bt.set_defaults(func=_cmd_budget_tokens)

    sched = sub.add_parser("schedule", help="learning-rate schedules")
    sched_sub = sched.add_subparsers(dest="schedule_cmd", required=True, parser_class=_Parser)
    sd = sched_sub.add_parser("dump", help="CSV of (k, lr, beta2)")
    sd.add_argument("--spec", required=True, help="schedule spec YAML")
    sd.add_argument("--steps", type=int, required=True)
    sd.add_argument("--out", help="CSV output path (default: stdout)")
    sd.set_defaults(func=_cmd_schedule_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as e:
        _fail(str(e))
        return 1
    except AdapterError as e:
        _fail(str(e))
        return 2
    except OSError as e:
        _fail(str(e))
        return 2
    except Exception as e:  # noqa: BLE001 - last-resort: report, don't traceback
        _fail(f"{type(e).__name__}: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
