import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_pure
from ndweak.core import SystemSpec, alpha, pure_state, weak_values
from ndweak.dynamics import CouplingProfile
from ndweak.errors import NoppsError
from ndweak.exact_stats import (
    DecoherenceModel,
    conditional_distribution,
    exact_x_characteristic_function,
    postselection_probability,
)
from ndweak.expansion import (
    ExpansionContext,
    characteristic_function_k,
    characteristic_function_x,
    in_oscillation_regime,
    interpolated_distribution,
    interpolating_probability,
    mean_k_first_order,
    mean_x_first_order,
    normalization,
    oscillation_period,
    oscillation_weak_values,
    p_post_expanded,
)
from ndweak.probe import DispersionRelation, GaussianProbe, GridProbe

SYS = SystemSpec([1.0, -0.6, 0.3])
PROBE = GaussianProbe(1.0, 1.4, k_mean=0.3, x_mean=0.8)
DISP = DispersionRelation.quadratic(3.0)
SEED = 7


def states():
    rng = np.random.default_rng(SEED)
    return random_pure(rng, 3), random_density(rng, 3)


def inputs(lam, profile="constant", probe=PROBE, deco=None):
    rho_i, rho_f = states()
    return dict(
        sys=SYS, rho_i=rho_i, post=rho_f, probe=probe,
        profile=CouplingProfile.preset(profile, 1.5, lam), dispersion=DISP, deco=deco,
    )


def order_ratio(err, lam=0.1):
    """Ratio of errors at lam and lam/2."""
    return abs(err(lam)) / abs(err(lam / 2))


def test_states_have_complex_alpha01():
    rho_i, rho_f = states()
    a01 = alpha(0, 1, rho_i, rho_f, SYS)
    assert abs(a01.imag) > 0.05


def test_zero_coupling_expansion_is_exact():
    ctx = ExpansionContext.build(**inputs(0.0))
    rho_i, rho_f = states()
    assert p_post_expanded(ctx) == pytest.approx(np.trace(rho_f @ rho_i).real)
    dist = interpolated_distribution(ctx)
    assert np.max(np.abs(dist.values - PROBE.p0(dist.k))) < 1e-12
    assert normalization(ctx) == pytest.approx(1.0)


def test_p_post_first_order_sign_with_displaced_probe():
    # x_mean != 0 puts the Im alpha_01 term at first order; its sign is fixed by exp{i x_mean (k' - k)}
    def err(lam, sign=1):
        args = inputs(lam)
        ctx = ExpansionContext.build(**args)
        flip = 0 if sign == 1 else 4 * lam * ctx.avg(ctx.x_t(ctx.tau0)) * ctx.weights.alpha01.imag
        return postselection_probability(**args) - (p_post_expanded(ctx) + flip)

    assert order_ratio(err) > 3.5
    assert abs(err(0.05, sign=-1)) > 10 * abs(err(0.05))


def test_p_post_residual_is_dropped_alpha02_term():
    def err(lam):
        args = inputs(lam)
        ctx = ExpansionContext.build(**args)
        rho_i, rho_f = states()
        xt = ctx.x_t(ctx.tau0)
        a02 = alpha(0, 2, rho_i, rho_f, SYS)
        dropped = -(lam**2) * (
            ctx.avg(lambda x, k: xt(x, k) ** 2) * a02.real + ctx.profile.tau1 * a02.imag / DISP.mass
        )
        return postselection_probability(**args) - p_post_expanded(ctx) - dropped

    assert order_ratio(err) > 6


def test_decoherence_shift_of_b_w_coefficient():
    # exact change from decoherence is -(4 eps lam^2 / K_D^2)(Re a02 - a11) + O(lam^4);
    # the expansion keeps the a11 part
    scale = 3.0
    deco = DecoherenceModel(scale)
    rho_i, rho_f = states()
    a02 = alpha(0, 2, rho_i, rho_f, SYS).real
    a11 = alpha(1, 1, rho_i, rho_f, SYS).real

    def change(lam):
        exact = postselection_probability(**inputs(lam, deco=deco)) - postselection_probability(**inputs(lam))
        return exact + 4 * deco.epsilon * lam**2 / scale**2 * (a02 - a11)

    assert order_ratio(change) > 6
    ctx_on = ExpansionContext.build(**inputs(0.2, deco=deco))
    ctx_off = ExpansionContext.build(**inputs(0.2))
    shift = p_post_expanded(ctx_on) - p_post_expanded(ctx_off)
    assert shift == pytest.approx(4 * deco.epsilon * 0.04 / scale**2 * a11, rel=1e-10)


def test_characteristic_function_k_against_exact():
    theta = np.linspace(-2, 2, 9)

    def err(lam):
        args = inputs(lam)
        exact = conditional_distribution(**args).characteristic(theta)
        return np.max(np.abs(characteristic_function_k(ExpansionContext.build(**args), theta) - exact))

    assert characteristic_function_k(ExpansionContext.build(**inputs(0.3)), 0.0) == pytest.approx(1.0)
    assert err(0.1) < 0.01
    assert order_ratio(err) > 3.5


def test_mean_k_first_order_against_exact():
    def err(lam):
        args = inputs(lam)
        return conditional_distribution(**args).mean - mean_k_first_order(ExpansionContext.build(**args))

    assert order_ratio(err) > 3.5


def test_mean_k_matches_characteristic_derivative():
    ctx = ExpansionContext.build(**inputs(0.05))
    h = 1e-4
    z = characteristic_function_k(ctx, np.array([-h, h]))
    assert ((z[1] - z[0]) / (2j * h)).real == pytest.approx(mean_k_first_order(ctx), abs=0.05**2 * 5)


def test_covariance_from_chirped_grid_probe():
    c = 0.4
    k = np.linspace(-10, 10, 600)
    probe = GridProbe.from_wavefunction(k, np.exp(-(k**2) / 4 + 0.5j * c * k**2))
    ctx = ExpansionContext.build(**inputs(0.2, probe=probe))
    a_w = ctx.weights.A_w
    t0 = ctx.tau0
    expected = 0.2 * a_w.real - 2 * 0.2 * (-c + t0 / DISP.mass) * a_w.imag
    assert mean_k_first_order(ctx) == pytest.approx(expected, abs=1e-6)
    assert interpolated_distribution(ctx, k).norm == pytest.approx(1.0, abs=1e-8)


def exact_mean_x(args, h=1e-4):
    z = exact_x_characteristic_function(np.array([-h, h]), **{k: v for k, v in args.items() if k != "deco"})
    return ((z[1] - z[0]) / (2j * h)).real


def test_mean_x_first_order_against_exact():
    def err(lam):
        args = inputs(lam, "triangular")
        return exact_mean_x(args) - mean_x_first_order(ExpansionContext.build(**args))

    assert order_ratio(err) > 3.5


def test_characteristic_function_x_against_exact():
    chi = np.linspace(-1.5, 1.5, 7)

    def err(lam):
        args = inputs(lam, "raised-cosine")
        args.pop("deco")
        exact = exact_x_characteristic_function(chi, **args)
        return np.max(np.abs(characteristic_function_x(ExpansionContext.build(**args), chi) - exact))

    assert err(0.1) < 0.01
    assert order_ratio(err) > 3.5


def test_characteristic_function_x_derivative_is_mean_x():
    ctx = ExpansionContext.build(**inputs(0.05))
    h = 1e-4
    z = characteristic_function_x(ctx, np.array([-h, h]))
    assert characteristic_function_x(ctx, 0.0) == pytest.approx(1.0)
    assert ((z[1] - z[0]) / (2j * h)).real == pytest.approx(mean_x_first_order(ctx), abs=0.05**2 * 5)


def test_interpolated_distribution_against_exact():
    def err(lam):
        args = inputs(lam)
        exact = conditional_distribution(**args)
        interp = interpolated_distribution(ExpansionContext.build(**args), exact.k)
        return np.max(np.abs(exact.values - interp.values))

    assert order_ratio(err) > 3.5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.sampled_from(["constant", "triangular"]))
def test_interpolated_distribution_normalized(seed, lam, profile):
    rng = np.random.default_rng(seed)
    ctx = ExpansionContext.build(
        SYS, random_density(rng, 3), random_density(rng, 3), PROBE,
        CouplingProfile.preset(profile, 1.0, lam), DISP,
    )
    assert interpolated_distribution(ctx).norm == pytest.approx(1.0, abs=1e-10)


def test_orthogonal_states_stay_finite():
    sys = SystemSpec([1, -1])
    rho_i = pure_state(np.array([1, 1]) / np.sqrt(2))
    rho_f = pure_state(np.array([1, -1]) / np.sqrt(2))
    ctx = ExpansionContext.build(sys, rho_i, rho_f, GaussianProbe(), CouplingProfile.constant(1, 0.1), DISP)
    with pytest.raises(NoppsError):
        interpolating_probability(ctx, 0.0)
    with pytest.raises(NoppsError):
        mean_k_first_order(ctx)
    assert normalization(ctx) == np.inf
    dist = interpolated_distribution(ctx)
    assert np.all(np.isfinite(dist.values))
    assert dist.norm == pytest.approx(1.0, abs=1e-10)
    assert np.isfinite(characteristic_function_k(ctx, 0.7))


def test_first_order_refused_near_orthogonality():
    sys = SystemSpec([1, -1])
    rho_i = pure_state([np.cos(0.3), np.sin(0.3)])
    rho_f = pure_state([np.sin(0.3) + 1e-3, -np.cos(0.3)])
    rho_f = rho_f / np.trace(rho_f).real
    ctx = ExpansionContext.build(sys, rho_i, rho_f, GaussianProbe(), CouplingProfile.constant(1, 0.1), DISP)
    with pytest.raises(NoppsError):
        mean_x_first_order(ctx)
    assert mean_k_first_order(ctx, threshold=0.0) != 0


def test_oscillation_weak_values_reduce_at_stationary_point():
    # omega'(0) = 0 and A^2 = 1 for a spin: U_0 is a global phase
    sys = SystemSpec([1, -1])
    rng = np.random.default_rng(3)
    rho_i, rho_f = random_density(rng, 2), random_density(rng, 2)
    prof = CouplingProfile.constant(1.0, 0.5)
    wk = oscillation_weak_values(sys, rho_i, rho_f, prof, DISP, np.array([0.0, 1.0]))
    wv = weak_values(rho_i, rho_f, sys)
    assert wk.A_w[0] == pytest.approx(wv.A_w)
    assert wk.alpha00[1] != pytest.approx(wv.alpha00)


def test_oscillation_period_and_regime():
    sys = SystemSpec([1, -1])
    prof = CouplingProfile.constant(1.0, 0.5)
    k_h = 0.2
    disp = DispersionRelation.from_hamiltonian_scale(k_h, prof.tau0)
    assert oscillation_period(sys, prof, disp) == pytest.approx(np.pi * k_h**2 / 0.5)
    assert in_oscillation_regime(sys, GaussianProbe(1.0, 2.0), prof, disp)
    assert not in_oscillation_regime(sys, GaussianProbe(1.0, 2.0), prof, DispersionRelation.from_hamiltonian_scale(10, 0.5))
