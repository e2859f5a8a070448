import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lmtk.trainmath import (
    KNOWN_HARDWARE,
    BudgetReport,
    HardwareSpec,
    OptimizerConfig,
    OptimizerState,
    WarmupConstant,
    WarmupCosineFloor,
    adafactor_step,
    beta2_at,
    budget,
    clip_global_norm,
    global_norm,
    init_state,
    lr_at,
    mfu,
    resolve_hardware,
    zloss,
    zloss_grad,
)

# ---------------------------------------------------------------------------
# beta2 schedule


def test_beta2_values():
    assert beta2_at(1) == 0.0
    assert beta2_at(10) == pytest.approx(1.0 - 10 ** -0.8, rel=1e-15)
    assert beta2_at(10_000) == pytest.approx(0.999369, abs=1e-6)


def test_beta2_rejects_step_zero():
    with pytest.raises(ValueError):
        beta2_at(0)


@given(st.integers(1, 10 ** 9))
def test_beta2_monotone_in_unit_interval(k):
    b = beta2_at(k)
    assert 0.0 <= b < 1.0
    if k > 1:
        # strictly increasing until the increment falls below one ulp of 1.0
        assert b > beta2_at(k - 1) if k <= 10 ** 6 else b >= beta2_at(k - 1)


# ---------------------------------------------------------------------------
# learning-rate schedules


def test_warmup_constant_exact_endpoints():
    s = WarmupConstant(peak=1e-3, warmup_steps=1000)
    assert s.lr_at(0) == 0.0
    assert s.lr_at(500) == 5e-4
    assert s.lr_at(1000) == 1e-3
    assert s.lr_at(50_000) == 1e-3


def test_warmup_zero_steps():
    s = WarmupConstant(peak=2e-4, warmup_steps=0)
    assert s.lr_at(0) == 2e-4


def test_cosine_floor_exact_points():
    s = WarmupCosineFloor(peak=1.2e-5, end=2.4e-6, warmup_steps=13_500, decay_steps=135_518)
    assert s.lr_at(0) == 0.0
    assert s.lr_at(13_500) == 1.2e-5  # warmup end hits peak exactly
    # decay_steps is even, so the midpoint progress is exactly 0.5
    mid = 13_500 + 135_518 // 2
    assert s.lr_at(mid) == (1.2e-5 + 2.4e-6) / 2
    assert s.lr_at(13_500 + 135_518) == 2.4e-6
    assert s.lr_at(1_000_000) == 2.4e-6


def test_cosine_floor_monotone_decay():
    s = WarmupCosineFloor(peak=1e-3, end=1e-5, warmup_steps=10, decay_steps=100)
    lrs = [s.lr_at(k) for k in range(10, 111)]
    assert all(a >= b for a, b in zip(lrs, lrs[1:]))
    assert all(1e-5 <= lr <= 1e-3 for lr in lrs)


def test_schedule_validation():
    with pytest.raises(ValueError):
        WarmupConstant(peak=0.0, warmup_steps=10)
    with pytest.raises(ValueError):
        WarmupCosineFloor(peak=1e-4, end=2e-4, warmup_steps=0, decay_steps=10)
    with pytest.raises(ValueError):
        WarmupCosineFloor(peak=1e-4, end=1e-5, warmup_steps=0, decay_steps=0)
    with pytest.raises(ValueError):
        WarmupConstant(peak=1e-4, warmup_steps=5).lr_at(-1)


def test_lr_at_dispatch():
    assert lr_at(WarmupConstant(1e-3, 10), 5) == 5e-4


@given(st.integers(0, 300))
def test_cosine_bounded_by_peak(k):
    s = WarmupCosineFloor(peak=3e-4, end=3e-5, warmup_steps=20, decay_steps=200)
    assert 0.0 <= s.lr_at(k) <= 3e-4 + 1e-18


# ---------------------------------------------------------------------------
# z-loss


def test_zloss_single_zero_logit():
    # Z = 1, log Z = 0
    assert zloss([0.0]) == 0.0


def test_zloss_two_zero_logits():
    # Z = 2
    assert zloss([0.0, 0.0]) == pytest.approx(1e-4 * math.log(2) ** 2, rel=1e-15)


def test_zloss_shift_closed_form():
    base = [0.3, -1.2, 0.7]
    z0 = math.sqrt(zloss(base, coeff=1.0))  # |log Z|
    shifted = zloss([x + 5.0 for x in base], coeff=1.0)
    assert shifted == pytest.approx((z0 + 5.0) ** 2, rel=1e-12)


def test_zloss_no_overflow_on_large_logits():
    val = zloss([1000.0, 1000.0])
    assert val == pytest.approx(1e-4 * (1000.0 + math.log(2)) ** 2, rel=1e-12)


def test_zloss_grad_matches_formula():
    logits = np.array([0.5, -0.5, 2.0])
    g = zloss_grad(logits, coeff=1e-4)
    p = np.exp(logits) / np.exp(logits).sum()
    log_z = math.log(np.exp(logits).sum())
    np.testing.assert_allclose(g, 2 * 1e-4 * log_z * p, rtol=1e-12)


def test_zloss_grad_finite_difference():
    rng = np.random.default_rng(7)
    logits = rng.normal(size=12)
    g = zloss_grad(logits)
    h = 1e-6
    fd = np.empty_like(g)
    for i in range(logits.size):
        up, down = logits.copy(), logits.copy()
        up[i] += h
        down[i] -= h
        fd[i] = (zloss(up) - zloss(down)) / (2 * h)
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-12)


def test_zloss_empty_rejected():
    with pytest.raises(ValueError):
        zloss([])
    with pytest.raises(ValueError):
        zloss_grad([])


# ---------------------------------------------------------------------------
# clipping


def test_clip_three_four_five():
    clipped = clip_global_norm([np.array([3.0]), np.array([4.0])], max_norm=1.0)
    # global norm 5 -> scale 1/5
    assert clipped[0][0] == pytest.approx(0.6, rel=1e-15)
    assert clipped[1][0] == pytest.approx(0.8, rel=1e-15)
    assert global_norm(clipped) == pytest.approx(1.0, rel=1e-15)


def test_clip_below_threshold_unchanged():
    g = [np.array([0.3, 0.4])]
    out = clip_global_norm(g, max_norm=1.0)
    np.testing.assert_array_equal(out[0], g[0])


def test_global_norm_split_equivariance():
    rng = np.random.default_rng(3)
    flat = rng.normal(size=24)
    whole = global_norm([flat])
    split = global_norm([flat[:7], flat[7:15].reshape(2, 4), flat[15:]])
    assert split == pytest.approx(whole, rel=1e-12)


# ---------------------------------------------------------------------------
# optimizer update


def test_init_state():
    state = init_state([np.ones((2, 3)), np.ones(4)])
    assert state.step == 1
    assert all(np.all(m == 0) for m in state.m)
    assert state.m[0].shape == (2, 3) and state.v[1].shape == (4,)


def test_three_step_scalar_trace():
    """Constant gradient 2 (clipped to 1), lr 1e-3, from p=5.

    Hand trace with v == 1 throughout (beta2(1) = 0 and g² = 1 keep it
    there): m goes 0.1, 0.19, 0.271 and p follows p·(1-lr²) - lr·m.
    """
    p = [np.array([5.0])]
    state = init_state(p)
    expect_m = [0.1, 0.19, 0.271]
    expect_p = 5.0
    lr = 1e-3
    for k in range(3):
        p, state = adafactor_step(p, [np.array([2.0])], state, lr=lr)
        assert state.v[0][0] == pytest.approx(1.0, abs=1e-15)
        assert state.m[0][0] == pytest.approx(expect_m[k], rel=1e-12)
        expect_p = expect_p * (1.0 - lr * lr) - lr * expect_m[k]
        assert p[0][0] == pytest.approx(expect_p, rel=1e-12)
    assert state.step == 4


def test_convergence_on_quadratic():
    # gradient of theta²/2 is theta; |theta| decays monotonically and
    # first drops below 0.01 at step 673
    p = [np.array([5.0])]
    state = init_state(p)
    prev = 5.0
    for step in range(1, 1000):
        p, state = adafactor_step(p, [p[0].copy()], state, lr=1e-2)
        cur = abs(float(p[0][0]))
        if cur < 0.01:
            assert step == 673
            break
        assert cur < prev
        prev = cur
    else:
        pytest.fail("did not converge within 1000 steps")


def test_second_moment_stays_nonnegative():
    rng = np.random.default_rng(11)
    p = [rng.normal(size=5)]
    state = init_state(p)
    for _ in range(50):
        g = [rng.normal(size=5) * 10]
        p, state = adafactor_step(p, g, state, lr=1e-3)
        assert np.all(state.v[0] >= 0)


def test_weight_decay_flag():
    cfg = OptimizerConfig(weight_decay=False)
    p = [np.array([5.0])]
    state = init_state(p)
    (p2,), state = adafactor_step(p, [np.array([2.0])], state, lr=1e-3, cfg=cfg)
    # without decay: p - lr·m' = 5 - 1e-3·0.1
    assert p2[0] == pytest.approx(5.0 - 1e-3 * 0.1, rel=1e-12)


def test_inputs_not_mutated():
    p = [np.array([1.0, 2.0])]
    g = [np.array([3.0, 4.0])]
    state = init_state(p)
    adafactor_step(p, g, state, lr=1e-2)
    np.testing.assert_array_equal(p[0], [1.0, 2.0])
    np.testing.assert_array_equal(g[0], [3.0, 4.0])
    assert state.step == 1 and np.all(state.m[0] == 0)


def test_shape_mismatch_rejected():
    p = [np.zeros(3)]
    state = init_state(p)
    with pytest.raises(ValueError, match="shape"):
        adafactor_step(p, [np.zeros(4)], state, lr=1e-3)
    with pytest.raises(ValueError, match="number of tensors"):
        adafactor_step(p, [np.zeros(3), np.zeros(3)], state, lr=1e-3)


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(beta1=1.0)
    with pytest.raises(ValueError):
        OptimizerConfig(clip_norm=0.0)


# ---------------------------------------------------------------------------
# mfu and budget


def test_mfu_identity():
    # 6·N·tps == peak -> utilization exactly 1
    assert mfu(1e9, 1000.0, 6e12) == pytest.approx(1.0, rel=1e-15)


def test_mfu_known_hardware():
    assert resolve_hardware("v2-512").peak_flops == 256 * 45e12
    assert resolve_hardware("v3-8").peak_flops == 4.2e14
    assert mfu(1e9, 1000.0, "v2-512") == pytest.approx(6e12 / (256 * 45e12), rel=1e-12)


def test_resolve_hardware_forms():
    spec = HardwareSpec("x", 1e15)
    assert resolve_hardware(spec) is spec
    assert resolve_hardware(2e15).peak_flops == 2e15
    with pytest.raises(KeyError, match="unknown hardware"):
        resolve_hardware("v99")
    assert set(KNOWN_HARDWARE) == {"v2-512", "v3-8"}


def test_mfu_validation():
    with pytest.raises(ValueError):
        mfu(0, 100, "v3-8")


def test_budget_tokens_only():
    rep = budget(10_000, 512, 2048)
    assert rep == BudgetReport(tokens_trained=10_485_760_000)
    assert rep.epochs is None and rep.cost_usd is None


def test_budget_full():
    rep = budget(100, 4, 8, corpus_tokens=1600, tokens_per_sec=32.0, usd_per_hour=7200.0)
    assert rep.tokens_trained == 3200
    assert rep.epochs == pytest.approx(2.0)
    assert rep.wallclock_seconds == pytest.approx(100.0)
    assert rep.cost_usd == pytest.approx(100.0 / 3600.0 * 7200.0)
    assert rep.as_dict()["epochs"] == pytest.approx(2.0)


def test_budget_validation():
    with pytest.raises(ValueError):
        budget(0, 1, 1)


@given(st.integers(1, 10**6), st.integers(1, 4096), st.integers(1, 8192))
def test_budget_token_product(steps, batch, seqlen):
    assert budget(steps, batch, seqlen).tokens_trained == steps * batch * seqlen
