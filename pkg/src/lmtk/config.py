"""Run configuration: defaults <- config file <- CLI flags.

The config file is YAML with the sections below; any key the schema does
not know is an error naming the key (fail-closed), so typos never turn
into silently-default behavior.

    seed: 17                 # global; omit for unseeded
    workers: 4
    tokenizer:
      vocab: /path/vocab.json    # omit both to use the bundled vocabulary
      merges: /path/merges.txt
    filter:                  # any FilterConfig field
      min_words: 50
    eval:
      budget: 2048
      shots: table           # table | max_fit | integer
      cap: 350
      normalize: char        # none | char; omit to follow each task
      on_error: record       # record | abort
    adapter:
      kind: mock             # mock | http
      mock_mode: lookup      # unigram | lookup
      mock_table: /path/table.json
      mock_seed: 0
      base_url: http://host:8000
      timeout_s: 30.0
      max_attempts: 3
      backoff_base_s: 0.5
      max_inflight: 8
      auth_header: Authorization
      auth_token_env: LMTK_API_TOKEN
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .adapters import HttpConfig, MockModel, MockModelSpec, load_mock_table
from .filters import FilterConfig
from .harness import EvalConfig


class ConfigError(ValueError):
    """Bad or unknown configuration."""


@dataclass(frozen=True)
class TokenizerPaths:
    vocab: Optional[str] = None
    merges: Optional[str] = None

    def __post_init__(self):
        if (self.vocab is None) != (self.merges is None):
            raise ConfigError("tokenizer.vocab and tokenizer.merges must be set together")


@dataclass(frozen=True)
class AdapterOptions:
    kind: str = "mock"
    mock_mode: str = "unigram"
    mock_table: Optional[str] = None
    mock_seed: int = 0
    base_url: Optional[str] = None
    timeout_s: float = 30.0
    max_attempts: int = 3
    backoff_base_s: float = 0.5
    max_inflight: int = 8
    auth_header: Optional[str] = None
    auth_token_env: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"adapter.kind must be mock|http, got {self.kind!r}")
        if self.kind == "http" and not self.base_url:
            raise ConfigError("adapter.kind=http requires adapter.base_url")
        if self.mock_mode not in ("unigram", "lookup"):
            raise ConfigError(f"adapter.mock_mode must be unigram|lookup, got {self.mock_mode!r}")
        if self.mock_mode == "lookup" and self.kind == "mock" and not self.mock_table:
            raise ConfigError("adapter.mock_mode=lookup requires adapter.mock_table")

    def build(self, tokenizer):
        """Instantiate the adapter this config describes."""
        if self.kind == "mock":
            if self.mock_mode == "lookup":
                spec = load_mock_table(self.mock_table)
            else:
                spec = MockModelSpec(mode="unigram", seed=self.mock_seed)
            return MockModel(spec, tokenizer)
        from .adapters import HttpAdapter  # local import keeps mock path light
        token = os.environ.get(self.auth_token_env) if self.auth_token_env else None
        return HttpAdapter(HttpConfig(
            base_url=self.base_url,
            timeout_s=self.timeout_s,
            max_attempts=self.max_attempts,
            backoff_base_s=self.backoff_base_s,
            max_inflight=self.max_inflight,
            auth_header=self.auth_header,
            auth_token=token,
        ))


@dataclass(frozen=True)
class RunConfig:
    seed: Optional[int] = None
    workers: int = 1
    tokenizer: TokenizerPaths = TokenizerPaths()
    filter: FilterConfig = FilterConfig()
    eval: EvalConfig = EvalConfig()
    adapter: AdapterOptions = AdapterOptions()

    def load_tokenizer(self):
        from .bpe import load_reference_tokenizer, load_tokenizer
        if self.tokenizer.vocab:
            return load_tokenizer(self.tokenizer.vocab, self.tokenizer.merges)
        return load_reference_tokenizer()


_SECTION_TYPES = {
    "tokenizer": TokenizerPaths,
    "filter": FilterConfig,
    "eval": EvalConfig,
    "adapter": AdapterOptions,
}
_SCALAR_KEYS = {"seed", "workers"}


# friendly YAML spellings for awkward field names
_FIELD_ALIASES = {"eval": {"shots": "shot_policy"}}


def _merge_section(cls, current, overrides: dict, path: str):
    aliases = _FIELD_ALIASES.get(path, {})
    overrides = {aliases.get(k, k): v for k, v in overrides.items()}
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown config key {path}.{sorted(unknown)[0]}")
    values = {}
    for f in dataclasses.fields(cls):
        if f.name in overrides:
            v = overrides[f.name]
            if f.name == "stopwords" and isinstance(v, list):
                v = tuple(v)
            values[f.name] = v
        else:
            values[f.name] = getattr(current, f.name)
    try:
        return cls(**values)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e


def merge_config(base: RunConfig, overrides: dict) -> RunConfig:
    """Apply a nested mapping of overrides onto a RunConfig, rejecting
    unknown keys with the offending key named."""
    if not isinstance(overrides, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(overrides) - _SCALAR_KEYS - set(_SECTION_TYPES)
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]}")
    kwargs = {
        "seed": overrides.get("seed", base.seed),
        "workers": overrides.get("workers", base.workers),
    }
    if kwargs["seed"] is not None and not isinstance(kwargs["seed"], int):
        raise ConfigError("seed must be an integer")
    if not isinstance(kwargs["workers"], int) or kwargs["workers"] < 1:
        raise ConfigError("workers must be a positive integer")
    for name, cls in _SECTION_TYPES.items():
        section = overrides.get(name)
        if section is None:
            kwargs[name] = getattr(base, name)
            continue
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be a mapping")
        kwargs[name] = _merge_section(cls, getattr(base, name), section, name)
    return RunConfig(**kwargs)


def load_config_file(path: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Parse a YAML config file on top of defaults (or ``base``)."""
    base = base or RunConfig()
    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from e
    if raw is None:
        return base
    return merge_config(base, raw)


def config_as_dict(cfg: RunConfig) -> dict:
    """Resolved config as plain data for the run manifest."""
    out = dataclasses.asdict(cfg)
    flt = out["filter"]
    flt["stopwords"] = list(flt["stopwords"])
    flt["top_ngram_char_frac_max"] = {str(k): v for k, v in flt["top_ngram_char_frac_max"].items()}
    return out
