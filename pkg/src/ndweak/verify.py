"""
Self-checks that compare independent computations of the same quantity.

Each check returns a :class:`CheckResult` with the measured discrepancy and
the tolerance it was held to.
"""

import time
from collections import namedtuple

import numpy as np

from .core import SystemSpec
from .dynamics import CouplingProfile, lemma_solution, numeric_propagate_oracle
from .exact_stats import DecoherenceModel, conditional_distribution, joint_probability
from .expansion import ExpansionContext, interpolated_distribution
from .probe import DispersionRelation, GaussianProbe
from .spinhalf import BlochConfig, generic_inputs, spin_characteristic_function, spin_joint_probability, spin_p_post

CheckResult = namedtuple("CheckResult", "name measured tolerance passed detail")


def _check(name, measured, tolerance, detail="", passed=None):
    ok = bool(measured <= tolerance) if passed is None else bool(passed)
    return CheckResult(name, float(measured), float(tolerance), ok, detail)


def _unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_bloch(rng):
    """Random spin configuration with lambda in [0, 1], kappa in (0, 2], k_H in [0.1, 20]."""
    m = _unit(rng) * rng.choice([1.0, rng.uniform(0, 1)])
    n = _unit(rng) * rng.choice([1.0, rng.uniform(0, 1)])
    scale = rng.choice([np.inf, rng.uniform(0.5, 10)])
    return BlochConfig(m, n, _unit(rng), rng.uniform(0, 1), rng.uniform(0.05, 2), rng.uniform(0.1, 20), scale)


def propagator_step_sizes(steps=10_000, points=2048):
    """L2 errors of the product-formula propagation at ``steps/2`` and ``steps``."""
    k = np.linspace(-16, 16, points)
    dk = k[1] - k[0]
    psi0 = lambda k: (2 * np.pi) ** -0.25 * np.exp(-(k**2) / 4)  # noqa: E731
    omega = lambda k: k**2 / 2  # noqa: E731
    f = lambda t: np.ones_like(np.asarray(t, dtype=float))  # noqa: E731
    exact = lemma_solution(psi0, k, omega, f, 1.0)
    errors, norms = [], []
    for n in (steps // 2, steps):
        psi = numeric_propagate_oracle(psi0(k), k, omega, f, 1.0, n)
        errors.append(np.sqrt(dk * np.sum(np.abs(psi - exact) ** 2)))
        norms.append(abs(dk * np.sum(np.abs(psi) ** 2) - dk * np.sum(np.abs(psi0(k)) ** 2)))
    return errors, max(norms)


def check_propagator():
    t0 = time.perf_counter()
    (e_half, e_full), drift = propagator_step_sizes()
    elapsed = time.perf_counter() - t0
    ratio = e_half / e_full
    return [
        _check("propagator L2 error (1e4 steps)", e_full, 1e-4),
        _check("propagator convergence ratio", abs(ratio - 2), 0.2, f"ratio {ratio:.4f}"),
        _check("propagator norm drift", drift, 1e-10),
        _check("propagator runtime [s]", elapsed, 10.0),
    ]


def spin_generic_discrepancy(cfg, n_k=41, n_theta=20):
    g = generic_inputs(cfg)
    k = np.linspace(-5, 5, n_k)
    theta = np.linspace(-3, 3, n_theta)
    points = 8192 if cfg.k_h < 0.5 else 2048
    grid = g["probe"].grid(points, 9 + cfg.strength)
    dist = conditional_distribution(**g, k=grid)
    return max(
        np.max(np.abs(joint_probability(k, **g) - spin_joint_probability(cfg, k))),
        abs(dist.p_post - spin_p_post(cfg)),
        np.max(np.abs(dist.characteristic(theta) - spin_characteristic_function(cfg, theta))),
    )


def check_spin_generic(n_configs=100, seed=1):
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = max(spin_generic_discrepancy(random_bloch(rng)) for _ in range(n_configs))
    elapsed = time.perf_counter() - t0
    return [
        _check(f"spin-half closed forms vs generic engine ({n_configs} configs)", worst, 1e-10),
        _check("spin-half vs generic runtime [s]", elapsed, 30.0),
    ]


def check_normalization(n_configs=20, seed=2):
    rng = np.random.default_rng(seed)
    sys = SystemSpec([1.0, -0.4, 0.25])
    worst_exact = worst_interp = worst_zero = 0.0
    for _ in range(n_configs):
        states = []
        for _ in range(2):
            g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            rho = g @ g.conj().T
            states.append(rho / np.trace(rho).real)
        lam = rng.uniform(0, 1)
        probe = GaussianProbe(1.0, rng.uniform(0.2, 2.0), rng.uniform(-1, 1), rng.uniform(-1, 1))
        profile = CouplingProfile.preset(rng.choice(["constant", "triangular", "raised-cosine"]), 1.0, lam)
        disp = DispersionRelation.quadratic(rng.uniform(0.5, 50))
        args = dict(sys=sys, rho_i=states[0], post=states[1], probe=probe, profile=profile, dispersion=disp)
        exact = conditional_distribution(**args)
        wide = conditional_distribution(**args, k=probe.grid(4097, 12 + lam))
        worst_exact = max(worst_exact, abs(exact.p_post - wide.p_post) / wide.p_post)
        interp = interpolated_distribution(ExpansionContext.build(**args), exact.k)
        worst_interp = max(worst_interp, abs(interp.norm - 1))
        free = conditional_distribution(**dict(args, profile=profile.with_strength(0.0)))
        worst_zero = max(worst_zero, np.max(np.abs(free.values - probe.p0(free.k))))
    return [
        _check("P_post grid convergence (relative)", worst_exact, 1e-8),
        _check("Q_interp normalization", worst_interp, 1e-8),
        _check("zero coupling reproduces P_0", worst_zero, 1e-12),
    ]


def check_decoherence_off():
    cfg = BlochConfig.from_angles(np.pi / 3, np.pi / 2, 0.7)
    g = generic_inputs(cfg)
    k = g["probe"].grid()
    off = dict(g, deco=DecoherenceModel.from_rate(0.0, 1.0, g["dispersion"].mass, g["profile"].duration))
    diff = np.max(np.abs(joint_probability(k, **off) - joint_probability(k, **dict(g, deco=DecoherenceModel()))))
    return [_check("zero decoherence rate equals infinite K_D", diff, 0.0)]


def run_checks(n_configs=100):
    """Run every self-check; the result is a list of :class:`CheckResult`."""
    results = []
    results += check_propagator()
    results += check_spin_generic(n_configs)
    results += check_normalization()
    results += check_decoherence_off()
    return results


def format_result(r):
    status = "PASS" if r.passed else "FAIL"
    extra = f" ({r.detail})" if r.detail else ""
    return f"{status} {r.name}: measured {r.measured:.3e}, tolerance {r.tolerance:.1e}{extra}"
