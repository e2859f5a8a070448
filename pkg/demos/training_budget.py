"""
Training math on the back of an envelope
========================================

Hardware utilization from throughput, token and dollar budgets for a
run, the two learning-rate shapes, and the optimizer on a toy problem.

Run from the repository root:

    python3 demos/training_budget.py
"""

import numpy as np

from lmtk.trainmath import (
    WarmupConstant,
    WarmupCosineFloor,
    adafactor_step,
    budget,
    init_state,
    mfu,
    zloss,
    zloss_grad,
)

# --- utilization -----------------------------------------------------------
# mfu = achieved FLOP/s over peak FLOP/s, with 6 FLOPs per parameter per
# token as the standard forward+backward estimate
print("model FLOPs utilization")
for n_params, tps, hw in ((7.0e9, 124_000, "v2-512"),
                          (65.0e9, 14_000, "v2-512"),
                          (6.0e9, 5_200, "v3-8")):
    frac = mfu(n_params, tps, hw)
    print(f"  {n_params/1e9:4.0f}B at {tps:>7,} tok/s on {hw:7} -> {frac*100:5.2f}%")
print()

# --- token and dollar budget -----------------------------------------------
# 10k steps of 512 sequences x 2048 tokens, priced by throughput
print("one pretraining run, 10000 steps x 512 seqs x 2048 tokens")
for label, tps in (("7B", 124_000.0), ("65B", 14_000.0)):
    rep = budget(10_000, 512, 2048, corpus_tokens=7.8e9,
                 tokens_per_sec=tps, usd_per_hour=384.0)
    days = rep.wallclock_seconds / 86_400
    print(f"  {label:3} {rep.tokens_trained:,} tokens, {rep.epochs:.2f} epochs "
          f"of a 7.8B-token corpus, {days:5.1f} days, ${rep.cost_usd:,.0f}")
print()

# --- learning-rate schedules -----------------------------------------------
flat = WarmupConstant(peak=1e-3, warmup_steps=1_000, total_steps=10_000)
cos = WarmupCosineFloor(peak=1.2e-5, end=2.4e-6,
                        warmup_steps=13_500, decay_steps=135_518)
print("lr at milestones")
print("  warmup+constant:", [f"{flat.lr_at(k):.1e}" for k in (0, 500, 1_000, 10_000)])
mid = 13_500 + 135_518 // 2
print("  warmup+cosine:  ", [f"{cos.lr_at(k):.2e}" for k in (0, 13_500, mid, 149_018)])
print()

# --- z-loss ------------------------------------------------------------------
# coeff * log^2(Z) nudges the softmax normalizer toward 1; its gradient
# is tiny when logits are already centred
logits = np.array([2.0, -1.0, 0.5, 0.0])
print(f"zloss({logits.tolist()}) = {zloss(logits):.6f}")
print(f"gradient = {np.round(zloss_grad(logits), 8).tolist()}")
print()

# --- optimizer on a quadratic ------------------------------------------------
# second-moment-only steps with relative decay; beta2 ramps as 1 - k^-0.8
theta = [np.array([5.0])]
state = init_state(theta)
print("adafactor-style descent on f(x) = x^2/2 from x = 5, lr = 1e-2")
for k in range(1, 1_001):
    grads = [theta[0].copy()]
    theta, state = adafactor_step(theta, grads, state, lr=1e-2)
    if k in (1, 2, 10, 100) :
        print(f"  step {k:4}  x = {float(theta[0][0]): .6f}")
    if abs(float(theta[0][0])) < 0.01:
        print(f"  step {k:4}  |x| < 0.01, stopping")
        break
