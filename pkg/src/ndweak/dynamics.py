"""
Coupling profiles, the Hamiltonian phase and propagation of the probe.

For the time-dependent Hamiltonian omega(k) - f(t) x with [x, k] = i, the
propagator in the readout basis is

    <k|U(t)|k0> = delta(k - k0 - F(0, t)) exp{-i int_0^t omega(k - F(s, t)) ds},
    F(s, t) = int_s^t f.

The measurement coupling f(t) = lambda g(t) a gives the shift lambda a and
the phase Gamma_a(k). ``numeric_propagate_oracle`` builds the same object
from a product of short-time factors and is used only to check the closed
form.
"""

from collections import namedtuple
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

from .errors import BoundaryError, NumericError, PhysicsRangeError

PHASE_TOL = 1e-10
PANELS = 32


@dataclass(frozen=True, eq=False)
class CouplingProfile:
    """Normalized coupling profile g(t) on [0, duration] and strength lambda.

    Use the preset constructors; ``custom`` accepts any piecewise-smooth
    callable and integrates it numerically.
    """

    duration: float
    strength: float
    kind: str = "constant"
    g_func: object = None
    h_func: object = None
    breakpoints: tuple = ()

    def __post_init__(self):
        if not self.duration > 0:
            raise PhysicsRangeError("interaction duration must be positive")
        if not np.isfinite(self.strength):
            raise PhysicsRangeError("coupling strength must be finite")
        total = self.h(self.duration)
        if abs(total - 1) > 1e-10:
            raise PhysicsRangeError(f"coupling profile integrates to {total:.12g}, expected 1")

    @classmethod
    def constant(cls, duration=1.0, strength=0.0):
        return cls(duration, strength, "constant")

    @classmethod
    def triangular(cls, duration=1.0, strength=0.0):
        return cls(duration, strength, "triangular")

    @classmethod
    def raised_cosine(cls, duration=1.0, strength=0.0):
        return cls(duration, strength, "raised-cosine")

    @classmethod
    def custom(cls, g, duration, strength=0.0, h=None, breakpoints=()):
        """Arbitrary profile ``g``; ``breakpoints`` lists points where g is not smooth."""
        return cls(duration, strength, "custom", g_func=g, h_func=h, breakpoints=tuple(float(b) for b in breakpoints))

    @classmethod
    def preset(cls, name, duration=1.0, strength=0.0):
        presets = {"constant": cls.constant, "triangular": cls.triangular, "raised-cosine": cls.raised_cosine}
        try:
            return presets[name](duration, strength)
        except KeyError:
            raise ValueError(f"unknown profile preset {name!r}; choose from {sorted(presets)}") from None

    def with_strength(self, strength):
        return CouplingProfile(self.duration, strength, self.kind, self.g_func, self.h_func, self.breakpoints)

    def g(self, t):
        t = np.asarray(t, dtype=float)
        tau = self.duration
        inside = (t >= 0) & (t <= tau)
        if self.kind == "constant":
            val = np.full_like(t, 1.0 / tau)
        elif self.kind == "triangular":
            val = (2.0 / tau) * (1 - np.abs(2 * t / tau - 1))
        elif self.kind == "raised-cosine":
            val = (1 - np.cos(2 * np.pi * t / tau)) / tau
        else:
            val = np.vectorize(self.g_func, otypes=[float])(t)
        return np.where(inside, val, 0.0)

    def h(self, s):
        """Cumulative profile h(s) = int_0^s g."""
        s = np.clip(np.asarray(s, dtype=float), 0, self.duration)
        tau = self.duration
        u = s / tau
        if self.kind == "constant":
            return u
        if self.kind == "triangular":
            return np.where(u <= 0.5, 2 * u**2, 1 - 2 * (1 - u) ** 2)
        if self.kind == "raised-cosine":
            return u - np.sin(2 * np.pi * u) / (2 * np.pi)
        if self.h_func is not None:
            return np.vectorize(self.h_func, otypes=[float])(s)
        nodes, cumulative = self._panels
        j = np.clip(np.searchsorted(nodes, s, side="right") - 1, 0, nodes.size - 2)

        def partial(lo, b):
            return integrate.quad(self.g_func, lo, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]

        return cumulative[j] + np.vectorize(partial, otypes=[float])(nodes[j], s)

    @cached_property
    def _panels(self):
        # quadrature panels with the kinks of g on their edges
        inner = [b for b in self.breakpoints if 0 < b < self.duration]
        nodes = np.unique(np.concatenate([np.linspace(0, self.duration, PANELS + 1), inner]))
        pieces = [
            integrate.quad(self.g_func, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
            for a, b in zip(nodes[:-1], nodes[1:])
        ]
        return nodes, np.concatenate([[0.0], np.cumsum(pieces)])

    def moment(self, n):
        """tau_n = int_0^tau h^n (1 - h) ds."""
        if self.kind == "constant":
            return self.duration / ((n + 1) * (n + 2))
        points = [b for b in self.breakpoints if 0 < b < self.duration] or None
        val, _ = integrate.quad(
            lambda s: self.h(s) ** n * (1 - self.h(s)), 0, self.duration, epsabs=1e-13, epsrel=1e-12, limit=200,
            points=points,
        )
        return float(val)

    @property
    def tau0(self):
        return self.moment(0)

    @property
    def tau1(self):
        return self.moment(1)

    @property
    def t_v(self):
        return 0.5 * (self.duration - self.tau0)


def hamiltonian_phase(a, k, profile, dispersion, method="auto"):
    """Gamma_a(k) = int_0^tau omega_P(k - lambda a [1 - h(s)]) ds.

    ``method`` is ``"closed"`` (quadratic dispersion only), ``"quadrature"``
    (adaptive, tolerance 1e-10) or ``"auto"`` which picks the closed form
    whenever it applies.
    """
    k = np.asarray(k, dtype=float)
    lam = profile.strength
    if method == "auto":
        method = "closed" if dispersion.is_quadratic else "quadrature"
    if method == "closed":
        if not dispersion.is_quadratic:
            raise ValueError("closed form requires quadratic dispersion")
        tau, t0, t1 = profile.duration, profile.tau0, profile.tau1
        # int (1-h) = tau_0, int (1-h)^2 = tau_0 - tau_1
        return (tau * k**2 - 2 * lam * a * t0 * k + (lam * a) ** 2 * (t0 - t1)) / (2 * dispersion.mass)
    if lam == 0 or a == 0:
        return dispersion.omega(k) * profile.duration
    return _phase_quadrature(lambda s: dispersion.omega(k - lam * a * (1 - profile.h(s))), profile.duration)


def _phase_quadrature(integrand, t_final, tol=PHASE_TOL):
    val, err = integrate.quad_vec(integrand, 0.0, t_final, epsabs=tol, epsrel=tol, norm="max", limit=2000)
    scale = max(1.0, float(np.max(np.abs(val))))
    if not np.all(np.isfinite(val)) or err > tol * scale:
        raise NumericError(f"phase quadrature reached tolerance {err:.3g}, requested {tol:.1g}")
    return val


Propagator = namedtuple("Propagator", "support shift phase")


def analytic_propagator(k, k0, a, profile, dispersion):
    """Closed-form propagator <k, a|U|k0, a> = delta(k - k0 - lambda a) exp{-i Gamma_a(k)}.

    Returns the support ``k0 + lambda a``, the ``shift`` lambda a and the
    phase Gamma_a evaluated at ``k``.
    """
    shift = profile.strength * a
    return Propagator(np.asarray(k0) + shift, shift, hamiltonian_phase(a, k, profile, dispersion))


def lemma_phase(k, omega, f, t_final):
    """int_0^t omega(k - int_s^t f) ds for arbitrary callables ``omega``, ``f``."""
    k = np.asarray(k, dtype=float)

    def drift(s):
        return integrate.quad(f, s, t_final, epsabs=1e-13, epsrel=1e-13, limit=200)[0]

    return _phase_quadrature(lambda s: omega(k - drift(s)), t_final)


def lemma_solution(psi0, k, omega, f, t_final):
    """Exact evolved wavefunction psi(k, t) = exp{-i phase(k)} psi0(k - int_0^t f).

    ``psi0`` is a callable of k.
    """
    k = np.asarray(k, dtype=float)
    total = integrate.quad(f, 0, t_final, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return np.exp(-1j * lemma_phase(k, omega, f, t_final)) * psi0(k - total)


def product_formula_phase(k0, omega, f, t_final, steps):
    """Discrete product-formula propagator for a single initial k0.

    Returns ``(k_final, phase)`` with k_final = k0 + sum_j eps f(t_j) and
    phase = sum_j eps omega(k0 + sum_{m<=j} eps f(t_m)), t_j = j eps.
    """
    eps = t_final / steps
    t = eps * np.arange(steps)
    path = k0 + np.cumsum(eps * np.asarray(f(t), dtype=float) * np.ones(steps))
    return path[-1], float(np.sum(eps * omega(path)))


def _fourier_shift(psi, nu, shift):
    """psi(k - shift) for a band-limited periodic grid function."""
    return np.fft.ifft(np.fft.fft(psi) * np.exp(-1j * nu * shift))


def numeric_propagate_oracle(psi0, k, omega, f, t_final, steps, edge_tol=1e-12):
    """Propagate ``psi0`` on the uniform grid ``k`` with the first-order product formula.

    Each of ``steps`` slices first shifts the wavefunction by eps f(t_j)
    (exactly, in Fourier space) and then multiplies by exp{-i eps omega(k)}.

    Raises
    ------
    BoundaryError
        If more than ``edge_tol`` of the norm would be carried across the
        grid edge by the accumulated drift.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    k = np.asarray(k, dtype=float)
    psi = np.array(psi0, dtype=complex)
    dk = k[1] - k[0]
    eps = t_final / steps
    drift = np.asarray(f(eps * np.arange(steps)), dtype=float) * np.ones(steps) * eps
    path = np.concatenate([[0.0], np.cumsum(drift)])
    lo, hi = min(path.min(), 0.0), max(path.max(), 0.0)
    band = int(np.ceil(max(hi, -lo) / dk)) + 1
    dens = np.abs(psi) ** 2
    total = dens.sum()
    if band >= k.size // 2 or (dens[:band].sum() + dens[-band:].sum()) > edge_tol * total:
        raise BoundaryError("drifted support leaves the grid; widen the grid or reduce the drift")
    nu = 2 * np.pi * np.fft.fftfreq(k.size, dk)
    phase = np.exp(-1j * eps * np.asarray(omega(k)))
    for d in drift:
        psi = _fourier_shift(psi, nu, d) * phase
    return psi
