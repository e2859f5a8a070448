"""Toolkit for continued pretraining of language models on Portuguese text.

Four groups of tools, usable independently:

- corpus cleaning: quality filters adapted from web-scale English pipelines
  to Portuguese, plus deterministic packing into flat binary token files
  (``textnorm``, ``filters``, ``corpus``)
- tokenization: a byte-level BPE encoder/decoder compatible with the
  published GPT-2 vocabulary, used for token accounting (``bpe``)
- few-shot evaluation: prompt construction under a fixed token budget,
  candidate ranking and greedy generation against a model adapter, and
  normalized aggregate scoring (``tasks``, ``prompting``, ``metrics``,
  ``harness``, ``adapters``)
- training math: optimizer update rule, learning-rate schedules, z-loss
  regularizer, and hardware utilization / cost arithmetic (``trainmath``)

The ``lmtk`` console script exposes the same operations as subcommands.
"""

__version__ = "0.1.0"
