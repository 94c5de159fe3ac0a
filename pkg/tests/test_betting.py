import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.special import ndtr

from conformal_martingales.betting import (
    ConstantBetting,
    PluginBetting,
    PowerBetting,
    SimpleMixtureBetting,
    fit_kde,
    kde_density,
    log_mixture_integral,
    mixture_increment,
    parse_strategy,
    power_bet,
    reflect,
    silverman_bandwidth,
)
from conformal_martingales.core import InvalidInputError

from oracles import (
    betting_integral,
    integral_over_unit_log_scale,
    literal_kde,
    reference_log_mixture,
    simpson_unit,
    strategies_with_history,
)


# -- power -------------------------------------------------------------------


def test_power_bet_examples():
    assert power_bet(0.37, 1.0) == 1.0
    assert power_bet(0.25, 0.5) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(InvalidInputError):
        power_bet(0.0, 0.5)
    with pytest.raises(InvalidInputError):
        power_bet(0.5, 0.0)


@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_power_bet_integrates_to_one(eps):
    assert integral_over_unit_log_scale(lambda p: power_bet(p, eps)) == pytest.approx(1.0, abs=1e-6)


# -- simple mixture ----------------------------------------------------------


def test_mixture_closed_form_first_step():
    # int_0^1 eps * e^(1 - eps) d eps = e - 2
    assert mixture_increment(1, 0.0, math.exp(-1.0)) == pytest.approx(math.e - 2.0, rel=1e-12)


def test_mixture_with_all_ones():
    # S = 0: M_n = 1 / (n + 1)
    assert mixture_increment(1, 0.0, 1.0) == pytest.approx(1 / 2, rel=1e-12)
    assert mixture_increment(2, 0.0, 1.0) == pytest.approx((1 / 3) / (1 / 2), rel=1e-12)
    for n in (1, 2, 10, 1000):
        assert math.exp(log_mixture_integral(n, 0.0)) == pytest.approx(1 / (n + 1), rel=1e-12)


def test_mixture_uniform_stream_matches_reference_quadrature():
    rng = np.random.default_rng(0)
    p = rng.random(10_000)
    strategy = SimpleMixtureBetting()
    log_total = 0.0
    checkpoints = {1, 10, 100, 1000, 2500, 5000, 7500, 10_000}
    s = 0.0
    for n, pi in enumerate(p, start=1):
        log_total += strategy.log_bet(pi)
        s += math.log(pi)
        if n in checkpoints:
            assert math.isfinite(log_total)
            # relative error 1e-6 on M_n
            assert log_total == pytest.approx(reference_log_mixture(n, s), abs=1e-6)


def test_mixture_survives_extreme_scale():
    assert math.isfinite(log_mixture_integral(10_000, -10_000.0))
    assert math.isfinite(log_mixture_integral(20_000, -80_000.0))
    assert math.isfinite(log_mixture_integral(20_000, -100.0))


def test_mixture_telescopes():
    rng = np.random.default_rng(3)
    p = rng.beta(0.5, 1.0, 3000)
    strategy = SimpleMixtureBetting()
    total = sum(strategy.log_bet(x) for x in p)
    direct = log_mixture_integral(len(p), float(np.sum(np.log(p))))
    assert total == pytest.approx(direct, rel=1e-9, abs=1e-9)
    assert strategy.log_value == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("history", [[], [0.5], [0.01, 0.2, 0.9], list(np.linspace(0.05, 1, 40))])
def test_mixture_betting_function_integrates_to_one(history):
    strategy = SimpleMixtureBetting()
    for x in history:
        strategy.update(x)
    assert betting_integral(strategy) == pytest.approx(1.0, abs=1e-6)


# -- bandwidth ---------------------------------------------------------------


def test_silverman_three_point_example():
    # sd = 1, quartiles 0 and 1 (linear interpolation) -> IQR / 1.34 < sd
    expected = 0.9 * (1.0 / 1.34) * 3 ** -0.2
    assert silverman_bandwidth([-0.5, 0.5, 1.5]) == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(0.539154780286722, rel=1e-14)


def test_silverman_fallback_for_constant_sample():
    assert silverman_bandwidth([0.3] * 10) >= 1e-3
    assert silverman_bandwidth([0.0] * 10) == 1e-3
    assert silverman_bandwidth([0.7]) >= 1e-3


def test_silverman_empty():
    with pytest.raises(InvalidInputError):
        silverman_bandwidth([])


@settings(max_examples=50)
@given(st.lists(st.floats(-5, 5), min_size=5, max_size=60, unique=True),
       st.floats(0.01, 100))
def test_silverman_scales_with_data(sample, c):
    h = silverman_bandwidth(sample)
    assert silverman_bandwidth(np.array(sample) * c) == pytest.approx(c * h, rel=1e-9)


# -- KDE ---------------------------------------------------------------------


def test_empty_history_is_uniform():
    model = fit_kde([])
    assert model.is_uniform
    assert np.all(kde_density(model, np.linspace(0, 1, 11)) == 1.0)


def test_single_point_model_symmetric():
    model = fit_kde([0.5])
    assert kde_density(model, 0.3) == pytest.approx(kde_density(model, 0.7), rel=1e-12)


def test_single_point_model_value_at_half():
    model = fit_kde([0.5])
    h = silverman_bandwidth([-0.5, 0.5, 1.5])
    assert model.bandwidth == pytest.approx(h, rel=1e-14)
    z = np.mean(ndtr((1 - np.array([-0.5, 0.5, 1.5])) / h) - ndtr(-np.array([-0.5, 0.5, 1.5]) / h))
    expected = (stats.norm.pdf(0.0) + 2 * stats.norm.pdf(1.0 / h)) / (3 * h * z)
    assert kde_density(model, 0.5) == pytest.approx(expected, rel=1e-12)


def test_outside_support_is_zero():
    model = fit_kde([0.2, 0.4])
    assert kde_density(model, -0.1) == 0.0
    assert kde_density(model, 1.1) == 0.0
    assert PluginBetting().density(-0.1) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_fast_path_matches_literal_kde(seed):
    rng = np.random.default_rng(seed)
    past = rng.beta(0.7, 1.5, rng.integers(1, 400))
    model = fit_kde(past)
    grid = np.linspace(0, 1, 57)
    np.testing.assert_allclose(model.density(grid), literal_kde(past, grid), rtol=1e-10)
    # scalar path (windowed sum) and array path (dense sum) agree
    for x in grid[::7]:
        assert model.density(x) == pytest.approx(literal_kde(past, x)[0], rel=1e-10)
    h = silverman_bandwidth(reflect(past))
    assert model.bandwidth == pytest.approx(h, rel=1e-12)


def test_far_from_sample_density_stays_positive():
    model = fit_kde(np.full(5000, 0.999))
    assert model.log_density(0.0) > -np.inf
    assert model.density(0.0) >= 0.0


def test_kde_integrates_to_one_random_histories():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m = int(rng.integers(1, 300))
        past = rng.beta(rng.uniform(0.3, 5), rng.uniform(0.3, 5), m)
        past = np.clip(past, 1e-12, 1.0)
        model = fit_kde(past)
        assert simpson_unit(model.density) == pytest.approx(1.0, abs=1e-6)


def _sup_error(n, rng):
    sample = rng.beta(2, 5, n)
    grid = np.linspace(0, 1, 101)
    return np.abs(fit_kde(sample).density(grid) - stats.beta(2, 5).pdf(grid))


@pytest.mark.xfail(strict=True, reason=(
    "reflection forces a zero boundary slope while Beta(2,5) rises from 0, and the "
    "extended-sample bandwidth oversmooths the peak; measured sup error is about 1.4"
))
def test_kde_recovers_beta_within_0_1():
    assert _sup_error(10_000, np.random.default_rng(0)).max() <= 0.1


def test_kde_recovery_is_consistent():
    # interior sup-norm error shrinks as the sample grows
    rng = np.random.default_rng(0)
    inner = slice(10, 91)
    errs = [_sup_error(n, rng)[inner].max() for n in (300, 3000, 30_000)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.35


def test_kde_recovers_bimodal_shape():
    rng = np.random.default_rng(1)
    n = 10_000
    pick = rng.random(n) < 0.5
    sample = np.where(pick, rng.beta(8, 2, n), rng.beta(2, 8, n))
    model = fit_kde(sample)
    # two peaks and a trough in between, like the true mixture
    assert model.density(0.1) > model.density(0.5) * 1.5
    assert model.density(0.9) > model.density(0.5) * 1.5


# -- strategies --------------------------------------------------------------


def test_constant_and_power_one_never_move():
    rng = np.random.default_rng(0)
    for strategy in (ConstantBetting(), PowerBetting(1.0)):
        assert all(strategy.bet(p) == 1.0 for p in rng.random(100))


def test_plugin_first_bet_is_uniform():
    assert PluginBetting().bet(0.01) == 1.0
    assert PluginBetting().bet(0.99) == 1.0


def test_plugin_uses_strictly_past_values():
    rng = np.random.default_rng(2)
    history = rng.random(30)
    a, b = PluginBetting(), PluginBetting()
    for x in history:
        a.update(x)
        b.update(x)
    fa = a.bet(0.05)
    fb = b.bet(0.95)
    # the factor for p_i comes from the model fitted on p_1..p_{i-1}
    model = fit_kde(history)
    assert fa == pytest.approx(model.density(0.05), rel=1e-12)
    assert fb == pytest.approx(model.density(0.95), rel=1e-12)


def test_plugin_refit_stride_reuses_model():
    s = PluginBetting(refit_stride=5)
    for x in [0.1, 0.2, 0.3]:
        s.update(x)
    first = s.model
    s.update(0.4)
    assert s.model is first
    for x in [0.5, 0.6, 0.7, 0.8]:
        s.update(x)
    assert s.model is not first
    assert s.model.n_past == 8


def test_plugin_on_uniform_has_zero_mean_log_factor():
    rng = np.random.default_rng(0)
    s = PluginBetting()
    logs = np.array([s.log_bet(p) for p in rng.random(5000)])
    assert abs(logs.mean()) <= 0.02


def test_every_betting_function_integrates_to_one():
    rng = np.random.default_rng(11)
    for _ in range(10):
        for s in strategies_with_history(rng):
            assert betting_integral(s) == pytest.approx(1.0, abs=1e-6), s


@pytest.mark.parametrize("make", [ConstantBetting, lambda: PowerBetting(0.75), PluginBetting])
def test_mean_one_under_uniform(make):
    rng = np.random.default_rng(5)
    s = make()
    for x in rng.beta(0.5, 1.0, 50):
        s.update(x)
    u = rng.random(1_000_000)
    u[u == 0.0] = 0.5
    assert s.density(u).mean() == pytest.approx(1.0, abs=0.01)


def test_parse_strategy():
    assert isinstance(parse_strategy("constant"), ConstantBetting)
    assert parse_strategy("power:0.3").epsilon == 0.3
    assert parse_strategy("power:0.3").name == "power_0.3"
    assert isinstance(parse_strategy("mixture"), SimpleMixtureBetting)
    assert parse_strategy("plugin:4").refit_stride == 4
    for bad in ("power", "power:2", "plugin:0", "kelly", "mixture:1"):
        with pytest.raises(InvalidInputError):
            parse_strategy(bad)


def test_fresh_drops_history():
    s = PluginBetting(refit_stride=2)
    s.update(0.3)
    t = s.fresh()
    assert t.refit_stride == 2 and len(t.history) == 0


def test_bet_rejects_invalid_p():
    for s in (PowerBetting(0.5), SimpleMixtureBetting(), PluginBetting()):
        with pytest.raises(InvalidInputError):
            s.bet(0.0)
        with pytest.raises(InvalidInputError):
            s.bet(1.5)
