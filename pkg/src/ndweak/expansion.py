"""
Controlled weak-coupling expansion of the readout statistics.

All quantities are assembled in "alpha form", i.e. multiplied through by
alpha_00, and divided by the quadratic normalization only at the very
end. This keeps them finite for nearly orthogonal pre/postselection
(NOPPS), where alpha_00 -> 0 and the alpha_11 terms dominate.

Notation: x_t = x + omega_P'(k) t is the write-in variable displaced by
free motion; ``delta`` is the decoherence correction to the coefficient
of B_w, 4 epsilon / K_D^2, which follows from expanding the suppression
factor to second order in lambda.
"""

from dataclasses import dataclass

import numpy as np

from .core import resolve_postselection, weak_values
from .errors import NoppsError
from .exact_stats import DecoherenceModel, ReadoutDistribution, default_grid
from .probe import conditional_integral, phase_space_average

NOPPS_THRESHOLD = 0.01


@dataclass(frozen=True)
class ExpansionContext:
    """Everything the expansion needs: coupling, weak values, probe and dynamics."""

    strength: float
    weights: object
    total_weight: float
    probe: object
    profile: object
    dispersion: object
    deco: DecoherenceModel = DecoherenceModel()

    @classmethod
    def build(cls, sys, rho_i, post, probe, profile, dispersion, deco=None):
        rho_i = sys.check(rho_i, "rho_i")
        rho_f, weight = resolve_postselection(post, sys.dim)
        wv = weak_values(rho_i, rho_f, sys)
        return cls(profile.strength, wv, weight, probe, profile, dispersion, deco or DecoherenceModel())

    @property
    def tau0(self):
        return self.profile.tau0

    @property
    def delta(self):
        d = self.deco
        return 4 * d.epsilon / d.scale**2 if d.enabled else 0.0

    def x_t(self, t):
        d1 = self.dispersion.d1
        return lambda x, k: x + d1(k) * t

    def avg(self, f):
        return phase_space_average(f, self.probe)

    def cov(self, f, g):
        return self.avg(lambda x, k: f(x, k) * g(x, k)) - self.avg(f) * self.avg(g)

    @property
    def p0_mean(self):
        return self.avg(lambda x, k: k)


def _alpha_norm(ctx):
    """alpha_00 * N = alpha_00 - 2 lam avg(x_t0) Im a01 + lam^2 avg(x_t0^2 + delta) a11."""
    w, lam = ctx.weights, ctx.strength
    xt = ctx.x_t(ctx.tau0)
    return (
        w.alpha00
        - 2 * lam * ctx.avg(xt) * w.alpha01.imag
        + lam**2 * (ctx.avg(lambda x, k: xt(x, k) ** 2) + ctx.delta) * w.alpha11
    )


def p_post_expanded(ctx):
    """Postselection probability to second order in the coupling.

    The alpha_02 contribution at second order is neglected against alpha_11.
    """
    return float(ctx.total_weight * _alpha_norm(ctx))


def normalization(ctx):
    """N = P_post / alpha_00 (infinite when alpha_00 vanishes)."""
    if ctx.weights.nopps:
        return np.inf
    return float(_alpha_norm(ctx) / ctx.weights.alpha00)


def characteristic_function_k(ctx, theta):
    """Readout characteristic function Z(theta) from the expansion; Z(0) = 1."""
    theta = np.asarray(theta, dtype=float)
    w, lam = ctx.weights, ctx.strength
    xt = ctx.x_t(ctx.tau0)

    def one(th):
        e = lambda x, k: np.exp(1j * th * k)  # noqa: E731
        e0 = ctx.avg(e)
        num = (
            w.alpha00 * e0
            + lam * (1j * th * e0 * w.alpha01.real - 2 * ctx.avg(lambda x, k: e(x, k) * xt(x, k)) * w.alpha01.imag)
            + lam**2 * ctx.avg(lambda x, k: e(x, k) * (xt(x, k) ** 2 + ctx.delta + th**2 / 4)) * w.alpha11
        )
        return num

    num = np.vectorize(one, otypes=[complex])(theta)
    return num / _alpha_norm(ctx)


def _interp_alpha_form(ctx, k, weights=None, displaced=True):
    w = weights or ctx.weights
    lam, probe = ctx.strength, ctx.probe
    k = np.asarray(k, dtype=float)
    xt = ctx.x_t(ctx.tau0) if displaced else (lambda x, kk: x + 0 * kk)
    x1 = conditional_integral(xt, probe, k)
    x2 = conditional_integral(lambda x, kk: xt(x, kk) ** 2, probe, k)
    p, dp, ddp = (_p0(probe, k, n) for n in range(3))
    return (
        w.alpha00 * p
        - 2 * lam * x1 * np.imag(w.alpha01)
        + lam**2 * (x2 + ctx.delta * p) * w.alpha11
        - lam * (dp * np.real(w.alpha01) - 0.25 * lam * ddp * w.alpha11)
    )


def _p0(probe, k, derivative):
    if hasattr(probe, "spread"):
        return probe.p0(k, derivative)
    return np.interp(k, probe.k, probe.p0(derivative))


def interpolating_probability(ctx, k):
    """N Q(k), the unnormalized interpolating formula.

    Divide by :func:`normalization` to obtain Q. May dip slightly below
    zero in the tails because the probability shifts are expanded.
    """
    if ctx.weights.nopps:
        raise NoppsError("alpha_00 = 0: use interpolated_distribution, which never divides by alpha_00")
    return np.real(_interp_alpha_form(ctx, k)) / ctx.weights.alpha00


def interpolated_distribution(ctx, k=None):
    """Q(k) from the interpolating formula, normalized by the expanded P_post."""
    k = ctx.probe.grid() if k is None else np.asarray(k, dtype=float)
    num = np.real(_interp_alpha_form(ctx, k))
    return ReadoutDistribution(k, num / _alpha_norm(ctx), p_post_expanded(ctx), "interpolated")


def _require_away_from_nopps(ctx, threshold):
    w = ctx.weights
    if w.nopps or abs(w.alpha00) < threshold * np.sqrt(abs(w.alpha11)):
        raise NoppsError(
            f"alpha_00 = {w.alpha00:.3g} is too small for first-order formulas; "
            "use characteristic_function_k or interpolated_distribution"
        )


def mean_k_first_order(ctx, threshold=NOPPS_THRESHOLD):
    """<k> ~ k_mean + lam Re A_w - 2 lam C(x_tau0, k) Im A_w (away from NOPPS)."""
    _require_away_from_nopps(ctx, threshold)
    a_w = ctx.weights.A_w
    lam = ctx.strength
    c = ctx.cov(ctx.x_t(ctx.tau0), lambda x, k: k)
    return float(ctx.p0_mean + lam * a_w.real - 2 * lam * c * a_w.imag)


def mean_x_first_order(ctx, threshold=NOPPS_THRESHOLD):
    """<x> ~ avg(x_tau) - 2 lam [C(x_tau, x_tau0) Im A_w - avg(omega'') t_v Re A_w]."""
    _require_away_from_nopps(ctx, threshold)
    a_w = ctx.weights.A_w
    lam, prof = ctx.strength, ctx.profile
    x_tau = ctx.x_t(prof.duration)
    c = ctx.cov(x_tau, ctx.x_t(prof.tau0))
    curv = ctx.avg(lambda x, k: ctx.dispersion.d2(k))
    return float(ctx.avg(x_tau) - 2 * lam * (c * a_w.imag - curv * prof.t_v * a_w.real))


def characteristic_function_x(ctx, chi):
    """Write-in characteristic function Z_x(chi) from the expansion; Z_x(0) = 1.

    Decoherence is not included in this quantity.
    """
    chi = np.asarray(chi, dtype=float)
    w, lam = ctx.weights, ctx.strength
    om, d1, d2 = ctx.dispersion.omega, ctx.dispersion.d1, ctx.dispersion.d2
    tau, t0, tv = ctx.profile.duration, ctx.profile.tau0, ctx.profile.t_v

    def one(c):
        def eF(x, k):
            return np.exp(1j * (c * x + (om(k + c / 2) - om(k - c / 2)) * tau))

        def xc(x, k):
            return x + 0.5 * (d1(k + c / 2) + d1(k - c / 2)) * t0

        def yc(x, k):
            return (d1(k + c / 2) - d1(k - c / 2)) * tv

        def fkk(x, k):
            return (d2(k + c / 2) - d2(k - c / 2)) * t0

        first = ctx.avg(lambda x, k: xc(x, k) * eF(x, k)) * w.alpha01.imag - 1j * ctx.avg(
            lambda x, k: yc(x, k) * eF(x, k)
        ) * w.alpha01.real
        second = ctx.avg(lambda x, k: (xc(x, k) ** 2 - yc(x, k) ** 2) * eF(x, k)) - 0.5j * ctx.avg(
            lambda x, k: fkk(x, k) * eF(x, k)
        )
        return w.alpha00 * ctx.avg(eF) - 2 * lam * first + lam**2 * second * w.alpha11

    num = np.vectorize(one, otypes=[complex])(chi)
    return num / one(0.0).real


def oscillation_unitary_phases(sys, profile, dispersion, k):
    """Diagonal of U_k = exp{i lam omega'(k) tau0 A - i (lam^2/2) omega''(k) (tau0 - tau1) A^2}.

    Returns an array of shape ``k.shape + (D,)``.
    """
    k = np.asarray(k, dtype=float)
    lam, t0, t1 = profile.strength, profile.tau0, profile.tau1
    a = sys.eigenvalues
    d1 = np.asarray(dispersion.d1(k))[..., None]
    d2 = np.asarray(dispersion.d2(k))[..., None]
    return np.exp(1j * lam * d1 * t0 * a - 0.5j * lam**2 * d2 * (t0 - t1) * a**2)


def oscillation_weak_values(sys, rho_i, post, profile, dispersion, k):
    """k-dependent normal weak values with rho_f -> U_k rho_f U_k^dagger.

    Returns a :class:`~ndweak.core.WeakValueSet` whose fields are arrays
    over ``k``.
    """
    from .core import WeakValueSet

    rho_i = sys.check(rho_i, "rho_i")
    rho_f, _ = resolve_postselection(post, sys.dim)
    u = oscillation_unitary_phases(sys, profile, dispersion, k)
    a = sys.eigenvalues
    # rho_f(k)[p, q] = u_p rho_f[p, q] conj(u_q)
    rf = u[..., :, None] * rho_f * np.conj(u)[..., None, :]
    a00 = np.einsum("...ij,ji->...", rf, rho_i).real
    a01 = np.einsum("...ij,j,ji->...", rf, a, rho_i)
    a11 = np.einsum("i,...ij,j,ji->...", a, rf, a, rho_i).real
    a02 = np.einsum("...ij,j,ji->...", rf, a**2, rho_i)
    nopps = bool(np.any(a00 == 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        return WeakValueSet(a00, a01, a11, a02, A_w=a01 / a00, B_w=a11 / a00, nopps=nopps)


def oscillation_period(sys, profile, dispersion, k_ref=0.0):
    """Period in k of the coherent oscillations, 2 pi / (lam a_M omega'' tau0)."""
    rate = abs(profile.strength) * sys.a_max * float(np.asarray(dispersion.d2(k_ref))) * profile.tau0
    return np.inf if rate == 0 else 2 * np.pi / rate


def in_oscillation_regime(sys, probe, profile, dispersion):
    """True when the oscillation period is below Delta_k and lam a_M below kappa_k."""
    period = oscillation_period(sys, profile, dispersion, getattr(probe, "k_mean", 0.0))
    return bool(period < probe.spread and abs(profile.strength) * sys.a_max < probe.coherence)


def oscillation_distribution(sys, rho_i, post, probe, profile, dispersion, k=None, deco=None):
    """Interpolating formula with k-dependent weak values and x_t -> x.

    Applies in the intermediate regime where the Hamiltonian phases can no
    longer be expanded. Normalized numerically on ``k``.
    """
    k = default_grid(probe, sys, profile) if k is None else np.asarray(k, dtype=float)
    ctx = ExpansionContext.build(sys, rho_i, post, probe, profile, dispersion, deco)
    wk = oscillation_weak_values(sys, rho_i, post, profile, dispersion, k)
    num = np.real(_interp_alpha_form(ctx, k, weights=wk, displaced=False))
    dk = k[1] - k[0]
    total = dk * np.sum(num)
    return ReadoutDistribution(k, num / total, ctx.total_weight * total, "oscillation")
