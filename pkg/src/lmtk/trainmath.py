"""Training arithmetic: optimizer update, LR/β₂ schedules, z-loss, budgets.

Everything here is pure double-precision math with no framework
dependencies, so each piece can be pinned by exact tests:

- the AdaFactor-style update without factorization (first-order momentum
  0.9, second moment with schedule β₂ = 1 − k^-0.8, global-norm clipping,
  decoupled lr² weight decay)
- warmup+constant and warmup+cosine-to-floor learning-rate schedules
- the z-loss partition-function regularizer and its analytic gradient
- model FLOPs utilization (6·N·throughput / peak) and token/cost budgets
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np


# ---------------------------------------------------------------------------
# schedules

def beta2_at(k: int, exponent: float = 0.8) -> float:
    """Second-moment decay at optimizer step k >= 1: 1 - k^-exponent."""
    if k < 1:
        raise ValueError(f"step must be >= 1, got {k}")
    return 1.0 - float(k) ** -exponent


@dataclass(frozen=True)
class WarmupConstant:
    """Linear warmup from 0 to peak, then constant."""

    peak: float
    warmup_steps: int
    total_steps: Optional[int] = None

    def __post_init__(self):
        if self.peak <= 0 or self.warmup_steps < 0:
            raise ValueError("need peak > 0 and warmup_steps >= 0")

    def lr_at(self, k: int) -> float:
        if k < 0:
            raise ValueError(f"step must be >= 0, got {k}")
        if self.warmup_steps == 0 or k >= self.warmup_steps:
            return self.peak
        return self.peak * (k / self.warmup_steps)


@dataclass(frozen=True)
class WarmupCosineFloor:
    """Linear warmup to peak, cosine decay to ``end`` over ``decay_steps``,
    then constant at ``end``.

    The decay is computed in the symmetric form
    ``(peak+end)/2 + (peak-end)/2 · cos(pi·p)`` so the midpoint lands on
    exactly ``(peak+end)/2`` in double precision; warmup end and decay end
    are separate branches and therefore exact as well.
    """

    peak: float
    end: float
    warmup_steps: int
    decay_steps: int

    def __post_init__(self):
        if not 0 < self.end <= self.peak:
            raise ValueError("need 0 < end <= peak")
        if self.warmup_steps < 0 or self.decay_steps < 1:
            raise ValueError("need warmup_steps >= 0 and decay_steps >= 1")

    def lr_at(self, k: int) -> float:
        if k < 0:
            raise ValueError(f"step must be >= 0, got {k}")
        if self.warmup_steps and k < self.warmup_steps:
            return self.peak * (k / self.warmup_steps)
        if k >= self.warmup_steps + self.decay_steps:
            return self.end
        p = (k - self.warmup_steps) / self.decay_steps
        return 0.5 * (self.peak + self.end) + 0.5 * (self.peak - self.end) * math.cos(math.pi * p)


ScheduleSpec = Union[WarmupConstant, WarmupCosineFloor]


def lr_at(schedule: ScheduleSpec, k: int) -> float:
    """Learning rate of either schedule variant at step k >= 0."""
    return schedule.lr_at(k)


# ---------------------------------------------------------------------------
# z-loss

def _log_z(logits: np.ndarray) -> float:
    m = float(np.max(logits))
    return m + math.log(float(np.sum(np.exp(logits - m))))


def zloss(logits, coeff: float = 1e-4) -> float:
    """coeff * log²(Z) where Z is the softmax partition function.

    Computed with max-subtraction, so large logits do not overflow.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0:
        raise ValueError("logits must be non-empty")
    return coeff * _log_z(z) ** 2


def zloss_grad(logits, coeff: float = 1e-4) -> np.ndarray:
    """Analytic gradient of :func:`zloss`: 2·coeff·log(Z)·softmax(z)."""
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0:
        raise ValueError("logits must be non-empty")
    log_z = _log_z(z)
    p = np.exp(z - np.max(z))
    p /= p.sum()
    return 2.0 * coeff * log_z * p


# ---------------------------------------------------------------------------
# optimizer

@dataclass(frozen=True)
class OptimizerConfig:
    beta1: float = 0.9
    beta2_exponent: float = 0.8
    epsilon: float = 1e-30
    clip_norm: float = 1.0
    weight_decay: bool = True  # decoupled multiplicative decay of lr^2

    def __post_init__(self):
        if not 0 <= self.beta1 < 1:
            raise ValueError("beta1 must be in [0, 1)")
        if self.beta2_exponent <= 0 or self.clip_norm <= 0 or self.epsilon < 0:
            raise ValueError("beta2_exponent and clip_norm must be > 0, epsilon >= 0")


@dataclass(frozen=True)
class OptimizerState:
    step: int
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]


def init_state(params: Sequence[np.ndarray]) -> OptimizerState:
    """Fresh state at step 1 with zero moment buffers."""
    arrays = [np.asarray(p, dtype=np.float64) for p in params]
    return OptimizerState(
        step=1,
        m=tuple(np.zeros_like(p) for p in arrays),
        v=tuple(np.zeros_like(p) for p in arrays),
    )


def global_norm(tensors: Sequence[np.ndarray]) -> float:
    """L2 norm over the concatenation of all tensors."""
    return math.sqrt(sum(float(np.sum(np.square(np.asarray(t, dtype=np.float64))))
                         for t in tensors))


def clip_global_norm(grads: Sequence[np.ndarray], max_norm: float = 1.0) -> list[np.ndarray]:
    """Scale all gradients by max_norm/norm when the global norm exceeds
    max_norm; otherwise return them unchanged."""
    arrays = [np.asarray(g, dtype=np.float64) for g in grads]
    norm = global_norm(arrays)
    if norm <= max_norm:
        return arrays
    scale = max_norm / norm
    return [g * scale for g in arrays]


def adafactor_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: OptimizerState,
    lr: float,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> tuple[list[np.ndarray], OptimizerState]:
    """One update without factorization.

    g   <- clip_global_norm(grads)
    v'  <- beta2·v + (1-beta2)·(g² + eps)        beta2 = 1 - k^-0.8
    u   <- g / sqrt(v')
    m'  <- beta1·m + (1-beta1)·u
    p'  <- p·(1 - lr²) - lr·m'                   (decay term optional)

    Returns new params and state; inputs are never mutated. At k=1 the
    second moment is exactly g²+eps, so v stays nonnegative forever.
    """
    p_arrays = [np.asarray(p, dtype=np.float64) for p in params]
    g_arrays = [np.asarray(g, dtype=np.float64) for g in grads]
    if len(p_arrays) != len(g_arrays) or len(p_arrays) != len(state.m):
        raise ValueError("params, grads, and state must have the same number of tensors")
    for p, g in zip(p_arrays, g_arrays):
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch: params {p.shape} vs grads {g.shape}")

    g_arrays = clip_global_norm(g_arrays, cfg.clip_norm)
    beta2 = beta2_at(state.step, cfg.beta2_exponent)
    decay = 1.0 - lr * lr if cfg.weight_decay else 1.0

    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        v2 = beta2 * v + (1.0 - beta2) * (g * g + cfg.epsilon)
        u = g / np.sqrt(v2)
        m2 = cfg.beta1 * m + (1.0 - cfg.beta1) * u
        new_p.append(p * decay - lr * m2)
        new_m.append(m2)
        new_v.append(v2)
    return new_p, OptimizerState(step=state.step + 1, m=tuple(new_m), v=tuple(new_v))


# ---------------------------------------------------------------------------
# throughput and budget

@dataclass(frozen=True)
class HardwareSpec:
    name: str
    peak_flops: float

    def __post_init__(self):
        if self.peak_flops <= 0:
            raise ValueError("peak_flops must be > 0")


# Dense-compute peaks from vendor spec sheets: a v2 chip sustains 45 TFLOP/s
# (512-core pod = 256 chips), a v3 chip 123 TFLOP/s (v3-8 board = 4 chips,
# ~0.42 PFLOP/s usable bf16).
KNOWN_HARDWARE = {
    "v2-512": HardwareSpec("v2-512", 256 * 45e12),
    "v3-8": HardwareSpec("v3-8", 4.2e14),
}


def resolve_hardware(spec: Union[str, HardwareSpec, float]) -> HardwareSpec:
    """Accept a known name, an explicit HardwareSpec, or raw peak FLOP/s."""
    if isinstance(spec, HardwareSpec):
        return spec
    if isinstance(spec, (int, float)):
        return HardwareSpec("custom", float(spec))
    try:
        return KNOWN_HARDWARE[spec]
    except KeyError:
        raise KeyError(
            f"unknown hardware {spec!r}; known: {sorted(KNOWN_HARDWARE)} "
            "(or pass peak FLOP/s directly)"
        ) from None


def mfu(n_params: float, tokens_per_sec: float, hardware: Union[str, HardwareSpec, float]) -> float:
    """Model FLOPs utilization: 6·N·throughput / peak.

    The 6 counts forward+backward matmul FLOPs per parameter per token;
    attention FLOPs are excluded by convention.
    """
    if n_params <= 0 or tokens_per_sec <= 0:
        raise ValueError("n_params and tokens_per_sec must be > 0")
    hw = resolve_hardware(hardware)
    return 6.0 * n_params * tokens_per_sec / hw.peak_flops


@dataclass(frozen=True)
class BudgetReport:
    tokens_trained: int
    epochs: Optional[float] = None
    wallclock_seconds: Optional[float] = None
    cost_usd: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "tokens_trained": self.tokens_trained,
            "epochs": self.epochs,
            "wallclock_seconds": self.wallclock_seconds,
            "cost_usd": self.cost_usd,
        }


def budget(
    steps: int,
    batch_seqs: int,
    seq_len: int,
    corpus_tokens: Optional[int] = None,
    tokens_per_sec: Optional[float] = None,
    usd_per_hour: Optional[float] = None,
) -> BudgetReport:
    """Token count for a run, plus epochs/wallclock/cost when the inputs
    needed for them are given."""
    if steps <= 0 or batch_seqs <= 0 or seq_len <= 0:
        raise ValueError("steps, batch_seqs, seq_len must be > 0")
    tokens = steps * batch_seqs * seq_len
    epochs = tokens / corpus_tokens if corpus_tokens else None
    wallclock = tokens / tokens_per_sec if tokens_per_sec else None
    cost = None
    if wallclock is not None and usd_per_hour is not None:
        cost = wallclock / 3600.0 * usd_per_hour
    return BudgetReport(tokens, epochs, wallclock, cost)
