import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapsim import nets
from hapsim.ppo import (
    NetConfig,
    NumericalError,
    PolicyParams,
    PpoConfig,
    RolloutBuffer,
    action_scales,
    deterministic_action,
    entropy_base,
    entropy_squashed,
    gae,
    gaussian_log_prob,
    grad_check,
    init_policy,
    log_prob_of_raw,
    make_batch,
    make_synthetic_batch,
    paper_literal_advantage,
    policy_forward,
    ppo_loss,
    ppo_loss_and_grads,
    ppo_update,
    sample_action,
    squash,
    tanh_log_jacobian,
    value_forward,
)

TINY = NetConfig(obs_dim=5, action_dim=4, hidden_layers=3, hidden_width=4)


def tiny_params(seed=0):
    return init_policy(TINY, np.random.default_rng(seed))


def crafted_batch(params, cfg, ratio, adv, rng):
    """Single-sample batch whose importance ratio is exactly `ratio`."""
    obs = rng.standard_normal((1, TINY.obs_dim))
    raw = 0.3 * rng.standard_normal((1, TINY.action_dim))
    mean, log_std = policy_forward(params, obs, cfg)
    scales = action_scales(TINY.action_dim // 2, 50.0)
    jac = tanh_log_jacobian(raw, scales)
    new_lp = gaussian_log_prob(mean, log_std, raw) - jac
    return {
        "obs": obs,
        "raw": raw,
        "old_log_prob": new_lp - np.log(ratio),
        "adv": np.array([adv]),
        "ret": np.zeros(1),
        "jac": jac,
        "scales": scales,
    }


# -- forward passes -----------------------------------------------------------

def test_policy_forward_zero_weights_zero_mean():
    params = tiny_params()
    for p in params.actor:
        p[:] = 0.0
    mean, log_std = policy_forward(params, np.ones(5), PpoConfig())
    assert np.array_equal(mean, np.zeros(4))
    assert np.array_equal(log_std, np.zeros(4))  # raw zeros inside the clamp window


def test_policy_forward_pure():
    params = tiny_params(3)
    obs = np.random.default_rng(1).standard_normal(5)
    a = policy_forward(params, obs, PpoConfig())
    b = policy_forward(params, obs, PpoConfig())
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_policy_forward_dim_mismatch():
    with pytest.raises(ValueError):
        policy_forward(tiny_params(), np.ones(7), PpoConfig())


def test_policy_forward_log_std_clamped():
    params = tiny_params()
    params.actor[-1][:] = 100.0  # huge biases drive the raw head out of range
    _, log_std = policy_forward(params, np.ones(5), PpoConfig())
    assert np.all(log_std <= 2.0)
    params.actor[-1][:] = -100.0
    _, log_std = policy_forward(params, np.ones(5), PpoConfig())
    assert np.all(log_std >= -5.0)


def test_forward_matches_finite_difference():
    # d sum(mean) / d W1[0,0] via backprop vs central differences
    params = tiny_params(7)
    obs = np.random.default_rng(2).standard_normal((6, 5))
    out, acts = nets.mlp_forward(params.actor, obs)
    dout = np.zeros_like(out)
    dout[:, : TINY.action_dim] = 1.0
    analytic = nets.mlp_backward(params.actor, acts, dout)[0][0, 0]

    h = 1e-5
    w = params.actor[0]
    orig = w[0, 0]
    w[0, 0] = orig + h
    up = nets.mlp_forward(params.actor, obs)[0][:, : TINY.action_dim].sum()
    w[0, 0] = orig - h
    dn = nets.mlp_forward(params.actor, obs)[0][:, : TINY.action_dim].sum()
    w[0, 0] = orig
    fd = (up - dn) / (2 * h)
    assert abs(analytic - fd) / max(abs(analytic), abs(fd)) < 1e-4


# -- sampling and squashing ------------------------------------------------------

def test_zero_variance_limit_is_deterministic():
    mean = np.array([0.3, -0.8, 1.2, 0.0])
    log_std = np.full(4, -40.0)
    raw, act, _ = sample_action(mean, log_std, np.random.default_rng(0), r_max=50.0)
    assert np.allclose(raw, mean, atol=1e-12)
    assert np.array_equal(act, deterministic_action(mean, 50.0))


def test_zero_mean_maps_to_midpoint():
    act = deterministic_action(np.zeros(4), r_max=50.0)
    assert np.array_equal(act[:, 0], [0.0, 0.0])
    assert np.array_equal(act[:, 1], [25.0, 25.0])


@given(st.lists(st.floats(-1e6, 1e6), min_size=6, max_size=6))
def test_squash_respects_action_bounds(vals):
    act = squash(np.array(vals), r_max=50.0)
    assert np.all(act[:, 0] >= -np.pi) and np.all(act[:, 0] < np.pi)
    assert np.all(act[:, 1] >= 0.0) and np.all(act[:, 1] <= 50.0)


def test_squashed_density_integrates_to_one():
    # quadrature over the 1-D angle interval using the same log-prob code path
    mean, log_std = 0.4, -0.3
    angles = np.linspace(-np.pi + 1e-6, np.pi - 1e-6, 200_001)
    t = angles / np.pi
    raw = np.arctanh(t)[:, None]
    lp = gaussian_log_prob(np.full((1, 1), mean), np.full((1, 1), log_std), raw)
    lp = lp - tanh_log_jacobian(raw, np.array([np.pi]))
    integral = np.trapezoid(np.exp(lp), angles)
    assert abs(integral - 1.0) < 0.01


def test_sample_log_prob_matches_recompute():
    rng = np.random.default_rng(5)
    mean = rng.standard_normal(6)
    log_std = rng.uniform(-1, 0, size=6)
    raw, _, lp = sample_action(mean, log_std, rng, r_max=50.0)
    want = log_prob_of_raw(mean, log_std, raw, action_scales(3, 50.0))
    assert lp == pytest.approx(float(want), rel=1e-12)


def test_squashed_entropy_monotone_in_log_std():
    # 1-D Monte-Carlo entropy of the squashed density, decreasing log_std.
    # Monotonicity holds below tanh saturation; past sigma ~ 1 the mass piles
    # at the interval edges and entropy falls toward the uniform bound again.
    rng = np.random.default_rng(0)
    scales = np.array([np.pi])
    ents = []
    for ls in (0.0, -0.5, -1.0, -2.0, -3.0):
        raw = 0.0 + np.exp(ls) * rng.standard_normal((40_000, 1))
        lp = gaussian_log_prob(np.zeros((1, 1)), np.full((1, 1), ls), raw)
        lp = lp - tanh_log_jacobian(raw, scales)
        ents.append(-lp.mean())
    assert np.all(np.diff(ents) < 0)


def test_entropy_base_closed_form():
    log_std = np.array([[0.0, -1.0]])
    want = (0.0 - 1.0) + 2 * 0.5 * (1 + np.log(2 * np.pi))
    assert entropy_base(log_std)[0] == pytest.approx(want)


def test_entropy_squashed_matches_monte_carlo():
    rng = np.random.default_rng(9)
    scales = np.array([np.pi, 25.0])
    for mu, ls in [(0.0, 0.0), (0.8, -0.5), (-1.5, 0.4)]:
        mean = np.full((1, 2), mu)
        log_std = np.full((1, 2), ls)
        raw = mean + np.exp(log_std) * rng.standard_normal((200_000, 2))
        lp = gaussian_log_prob(mean, log_std, raw) - tanh_log_jacobian(raw, scales)
        mc = -lp.mean()
        assert entropy_squashed(mean, log_std, scales)[0] == pytest.approx(mc, abs=0.02)


def test_entropy_squashed_peaks_below_saturation():
    # the squashed entropy must *decrease* once sigma saturates the squash,
    # unlike the base-Gaussian entropy which grows without bound
    scales = np.array([np.pi])
    ls = np.linspace(-2.0, 2.0, 41)
    h = [entropy_squashed(np.zeros((1, 1)), np.full((1, 1), v), scales)[0] for v in ls]
    peak = ls[int(np.argmax(h))]
    assert -0.5 < peak < 0.5
    assert h[-1] < max(h) - 0.5


# -- advantages -------------------------------------------------------------------

HAND_REWARDS = [1.0, 0.0, 2.0]
HAND_VALUES = [0.5, 1.0, -0.5]
HAND_DONES = [False, False, True]


@pytest.mark.parametrize("lam,want", [
    (0.0, [1.4, -1.45, 2.5]),
    (0.95, [1.9878125, 0.6875, 2.5]),
    (1.0, [2.12, 0.8, 2.5]),
])
def test_gae_hand_computed_three_step(lam, want):
    adv, ret = gae(HAND_REWARDS, HAND_VALUES, HAND_DONES, 0.9, lam)
    assert np.allclose(adv, want, atol=1e-12)
    assert np.allclose(ret, np.array(want) + HAND_VALUES, atol=1e-12)


def test_gae_single_terminal_step():
    adv, _ = gae([0.7], [0.2], [True], 0.99, 0.95)
    assert adv[0] == pytest.approx(0.5)


def test_gae_lambda_zero_is_td_residual():
    rng = np.random.default_rng(1)
    r, v = rng.standard_normal(10), rng.standard_normal(10)
    dones = [False] * 9 + [True]
    adv, _ = gae(r, v, dones, 0.9, 0.0)
    expect = r + 0.9 * np.append(v[1:], 0.0) * np.append(np.ones(9), 0.0) - v
    assert np.allclose(adv, expect)


def test_gae_monte_carlo_limit():
    rng = np.random.default_rng(2)
    r = rng.standard_normal(12)
    dones = [False] * 11 + [True]
    adv, _ = gae(r, np.zeros(12), dones, 1.0, 1.0)
    expect = np.cumsum(r[::-1])[::-1]
    assert np.allclose(adv, expect)


def test_gae_matches_independent_delta_sum():
    # oracle: explicit double sum A_t = sum_l (gamma*lam)^l * delta_{t+l}
    rng = np.random.default_rng(3)
    n = 20
    r, v = rng.standard_normal(n), rng.standard_normal(n)
    dones = [False] * (n - 1) + [True]
    gamma, lam = 0.97, 0.9
    vnext = np.append(v[1:], 0.0)
    nonterm = np.append(np.ones(n - 1), 0.0)
    delta = r + gamma * vnext * nonterm - v
    want = np.zeros(n)
    for t in range(n):
        acc = 0.0
        for l in range(n - t):
            acc += (gamma * lam) ** l * delta[t + l]
        want[t] = acc
    adv, _ = gae(r, v, dones, gamma, lam)
    assert np.allclose(adv, want, atol=1e-10)


def test_paper_literal_advantage_mode():
    adv, ret = paper_literal_advantage([1.0, 2.0], [0.25, 0.5])
    assert np.allclose(adv, [0.75, 1.5])
    assert np.allclose(ret, [1.0, 2.0])


def test_gae_length_mismatch():
    with pytest.raises(ValueError):
        gae([1.0], [1.0, 2.0], [True], 0.9, 0.9)


# -- surrogate objective ------------------------------------------------------------

def surrogate_cfg():
    return PpoConfig(entropy_coef=0.0, value_coef=0.0)


def test_ratio_one_reduces_to_policy_gradient_baseline():
    cfg = surrogate_cfg()
    params = tiny_params(1)
    batch = crafted_batch(params, cfg, ratio=1.0, adv=0.37, rng=np.random.default_rng(0))
    loss, _ = ppo_loss(params, batch, cfg)
    assert loss == pytest.approx(-0.37, rel=1e-12)


def test_clip_caps_positive_advantage():
    cfg = surrogate_cfg()
    params = tiny_params(2)
    batch = crafted_batch(params, cfg, ratio=1.5, adv=1.0, rng=np.random.default_rng(1))
    loss, stats = ppo_loss(params, batch, cfg)
    assert loss == pytest.approx(-1.2, rel=1e-12)  # min(1.5, 1.2)
    assert stats["clip_frac"] == 1.0


def test_clipped_region_has_zero_policy_gradient():
    cfg = surrogate_cfg()
    params = tiny_params(3)
    batch = crafted_batch(params, cfg, ratio=np.exp(-5.0), adv=-1.0, rng=np.random.default_rng(2))
    loss, _, grads = ppo_loss_and_grads(params, batch, cfg)
    assert loss == pytest.approx(0.8, rel=1e-12)  # -(1-eps)*adv
    for g in grads[: len(params.actor)]:
        assert np.max(np.abs(g)) == 0.0


def test_zero_advantage_ratio_one_is_stationary():
    cfg = surrogate_cfg()
    params = tiny_params(4)
    batch = crafted_batch(params, cfg, ratio=1.0, adv=0.0, rng=np.random.default_rng(3))
    _, _, grads = ppo_loss_and_grads(params, batch, cfg)
    for g in grads[: len(params.actor)]:
        assert np.max(np.abs(g)) == 0.0


def test_perfect_value_fit_has_zero_critic_gradient():
    cfg = PpoConfig(entropy_coef=0.0)
    params = tiny_params(5)
    rng = np.random.default_rng(4)
    batch = make_synthetic_batch(params, cfg, rng, 6)
    batch["ret"] = value_forward(params, batch["obs"])
    _, _, grads = ppo_loss_and_grads(params, batch, cfg)
    for g in grads[len(params.actor):]:
        assert np.max(np.abs(g)) < 1e-15


# -- gradient check -------------------------------------------------------------------

def test_gradient_check_twenty_random_trials():
    worst = 0.0
    for trial in range(20):
        rng = np.random.default_rng(500 + trial)
        params = init_policy(TINY, rng)
        cfg = PpoConfig()
        batch = make_synthetic_batch(params, cfg, rng, 8)
        worst = max(worst, grad_check(params, batch, cfg))
    assert worst < 1e-4


# -- clipping / optimizer ----------------------------------------------------------------

def test_global_norm_clip_exact():
    rng = np.random.default_rng(11)
    for _ in range(20):
        grads = [rng.standard_normal((3, 5)) * 10, rng.standard_normal(5) * 10]
        pre = nets.clip_by_global_norm(grads, 1.0)
        if pre > 1.0:
            assert nets.global_norm(grads) <= 1.0 + 1e-6


def test_clip_noop_below_threshold():
    grads = [np.array([0.1, 0.2])]
    before = [g.copy() for g in grads]
    nets.clip_by_global_norm(grads, 1.0)
    assert np.array_equal(grads[0], before[0])


def test_adam_moves_against_gradient():
    params = [np.array([1.0, -1.0])]
    opt = nets.Adam(params, lr=0.1)
    opt.step(params, [np.array([1.0, -1.0])])
    assert params[0][0] < 1.0 and params[0][1] > -1.0


# -- update loop ---------------------------------------------------------------------------

def full_buffer(params, cfg, seed=0, capacity=64):
    rng = np.random.default_rng(seed)
    buf = RolloutBuffer(capacity, TINY.obs_dim, TINY.action_dim)
    scales = action_scales(TINY.action_dim // 2, 50.0)
    for t in range(capacity):
        obs = rng.standard_normal(TINY.obs_dim)
        mean, log_std = policy_forward(params, obs, cfg)
        raw, _, lp = sample_action(mean, log_std, rng, 50.0)
        buf.add(obs, raw, lp, rng.uniform(0, 1), value_forward(params, obs), t == capacity - 1)
    return buf, scales


def test_update_clears_buffer_and_improves_nothing_nan():
    cfg = PpoConfig(minibatch_size=16, rollout_frames=64)
    params = tiny_params(8)
    opt = nets.Adam(params.all(), lr=1e-3)
    buf, scales = full_buffer(params, cfg)
    stats = ppo_update(params, buf, cfg, opt, np.random.default_rng(0), scales)
    assert buf.ptr == 0
    assert np.isfinite(stats["loss"])
    assert stats["grad_norm_post_clip"] <= cfg.max_grad_norm + 1e-6


def test_update_deterministic_across_runs():
    def run():
        cfg = PpoConfig(minibatch_size=16, rollout_frames=64)
        params = tiny_params(9)
        opt = nets.Adam(params.all(), lr=1e-3)
        buf, scales = full_buffer(params, cfg, seed=2)
        for _ in range(3):
            ppo_update(params, buf, cfg, opt, np.random.default_rng(1), scales)
            buf, scales = full_buffer(params, cfg, seed=3)
        return params

    a, b = run(), run()
    for pa, pb in zip(a.all(), b.all()):
        assert np.array_equal(pa, pb)


def test_nan_aborts_update():
    cfg = PpoConfig(minibatch_size=16, rollout_frames=64)
    params = tiny_params(10)
    buf, scales = full_buffer(params, cfg)
    params.actor[0][0, 0] = np.nan
    opt = nets.Adam(params.all(), lr=1e-3)
    with pytest.raises(NumericalError):
        ppo_update(params, buf, cfg, opt, np.random.default_rng(0), scales)


def test_buffer_overflow_and_partial_batch_rejected():
    buf = RolloutBuffer(2, 3, 2)
    buf.add(np.zeros(3), np.zeros(2), 0.0, 0.0, 0.0, False)
    with pytest.raises(RuntimeError):
        make_batch(buf, PpoConfig(), np.array([np.pi, 25.0]))
    buf.add(np.zeros(3), np.zeros(2), 0.0, 0.0, 0.0, True)
    with pytest.raises(RuntimeError):
        buf.add(np.zeros(3), np.zeros(2), 0.0, 0.0, 0.0, False)


def test_advantage_normalization_in_batch():
    params = tiny_params(11)
    cfg = PpoConfig(minibatch_size=16, rollout_frames=64)
    buf, scales = full_buffer(params, cfg, seed=5)
    batch = make_batch(buf, cfg, scales)
    assert abs(batch["adv"].mean()) < 1e-10
    assert batch["adv"].std() == pytest.approx(1.0, abs=1e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        PpoConfig(gamma_df=0.0)
    with pytest.raises(ValueError):
        PpoConfig(gae_lambda=1.5)
    with pytest.raises(ValueError):
        PpoConfig(clip_eps=0.0)
    with pytest.raises(ValueError):
        PpoConfig(advantage="nstep")
