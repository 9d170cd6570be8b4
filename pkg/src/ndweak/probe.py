"""
Probe states, free probe dispersion, Wigner function and phase-space averages.

Conventions (hbar = 1): the write-in variable acts as x = i d/dk in the
readout representation, so a probe with mean position x_mean carries the
phase exp{i x_mean (k' - k)} in rho_0(k, k'). The Wigner function is

    W(x, k) = (1/2pi) int dq exp(i q x) rho_0(k + q/2, k - q/2).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import ConditioningError, ConformanceError, NumericError, PhysicsRangeError

DEFAULT_POINTS = 2048
DEFAULT_HALF_WIDTH = 8.0
CONDITIONING_TOL = 1e-12
GAUSS_HERMITE_NODES = 96

_SQRT2PI = np.sqrt(2 * np.pi)


@dataclass(frozen=True)
class GaussianProbe:
    """Gaussian probe state

    rho_0(k, k') ~ exp{-(k + k' - 2 k_mean)^2 / 8 spread^2 - (k - k')^2 / 2 coherence^2}
                   * exp{i x_mean (k' - k)}

    with unit trace. ``spread`` is Delta_k, ``coherence`` is kappa_k = 1/Delta_x.
    """

    spread: float = 1.0
    coherence: float = 2.0
    k_mean: float = 0.0
    x_mean: float = 0.0

    def __post_init__(self):
        if not (self.spread > 0 and self.coherence > 0):
            raise PhysicsRangeError("spread and coherence must be positive")
        if self.coherence > 2 * self.spread * (1 + 1e-12):
            raise PhysicsRangeError(
                f"coherence {self.coherence} exceeds twice the spread {self.spread} (uncertainty relation)"
            )

    @property
    def x_spread(self):
        return 1.0 / self.coherence

    def density(self, k1, k2):
        k1 = np.asarray(k1, dtype=float)
        k2 = np.asarray(k2, dtype=float)
        s, c = self.spread, self.coherence
        env = np.exp(-((k1 + k2 - 2 * self.k_mean) ** 2) / (8 * s**2) - (k1 - k2) ** 2 / (2 * c**2))
        return env * np.exp(1j * self.x_mean * (k2 - k1)) / (_SQRT2PI * s)

    def p0(self, k, derivative=0):
        """Diagonal P_0(k) or its first/second derivative."""
        z = (np.asarray(k, dtype=float) - self.k_mean) / self.spread
        p = np.exp(-0.5 * z**2) / (_SQRT2PI * self.spread)
        if derivative == 0:
            return p
        if derivative == 1:
            return -z * p / self.spread
        if derivative == 2:
            return (z**2 - 1) * p / self.spread**2
        raise ValueError("only derivatives up to second order are available")

    def grid(self, n=DEFAULT_POINTS, half_width=DEFAULT_HALF_WIDTH):
        return np.linspace(self.k_mean - half_width * self.spread, self.k_mean + half_width * self.spread, n)

    def wigner(self, x, k):
        x = np.asarray(x, dtype=float)
        gx = np.exp(-0.5 * ((x - self.x_mean) * self.coherence) ** 2) * self.coherence / _SQRT2PI
        return gx * self.p0(k)

    @cached_property
    def _nodes(self):
        z, w = hermegauss(GAUSS_HERMITE_NODES)
        w = w / _SQRT2PI
        return self.x_mean + z / self.coherence, self.k_mean + z * self.spread, w


class GridProbe:
    """Probe given by a sampled density matrix rho_0(k_i, k_j) on a uniform grid.

    Parameters
    ----------
    k : array_like
        Uniform readout grid.
    rho : array_like
        Complex matrix of shape (N, N); trace dk * sum(diag) must be 1.
    """

    def __init__(self, k, rho, tol=1e-8):
        k = np.asarray(k, dtype=float)
        rho = np.asarray(rho, dtype=complex)
        if k.ndim != 1 or k.size < 4:
            raise ConformanceError("grid must be one-dimensional with at least 4 points")
        dk = np.diff(k)
        if np.max(np.abs(dk - dk[0])) > 1e-9 * abs(dk[0]) or dk[0] <= 0:
            raise ConformanceError("grid must be uniform and increasing")
        if rho.shape != (k.size, k.size):
            raise ConformanceError(f"rho has shape {rho.shape}, grid has {k.size} points")
        self.k = k
        self.dk = float(dk[0])
        scale = np.max(np.abs(rho))
        if np.max(np.abs(rho - rho.conj().T)) > tol * max(scale, 1.0):
            raise ConformanceError("grid density matrix is not Hermitian")
        if abs(self.dk * np.trace(rho).real - 1) > tol:
            raise ConformanceError(f"grid density matrix has trace {self.dk * np.trace(rho).real:.10g}")
        if np.linalg.eigvalsh(rho * self.dk).min() < -tol:
            raise ConformanceError("grid density matrix is not positive semidefinite")
        self.rho = rho

    @classmethod
    def from_wavefunction(cls, k, psi):
        """Pure state from samples psi(k_i); normalized on the grid."""
        k = np.asarray(k, dtype=float)
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.sqrt((k[1] - k[0]) * np.sum(np.abs(psi) ** 2))
        return cls(k, np.outer(psi, psi.conj()))

    @classmethod
    def from_gaussian(cls, probe, k):
        k = np.asarray(k, dtype=float)
        rho = probe.density(k[:, None], k[None, :])
        rho = rho / ((k[1] - k[0]) * np.trace(rho).real)
        return cls(k, rho)

    @property
    def k_mean(self):
        return float(self.dk * np.sum(self.k * self.p0()))

    def p0(self, derivative=0):
        """Diagonal on the grid; derivatives by 4th-order central differences."""
        p = self.rho.diagonal().real.copy()
        if derivative == 0:
            return p
        if derivative not in (1, 2):
            raise ValueError("only derivatives up to second order are available")
        q = np.pad(p, 2)
        h = self.dk
        if derivative == 1:
            return (q[:-4] - 8 * q[1:-3] + 8 * q[3:-1] - q[4:]) / (12 * h)
        return (-q[:-4] + 16 * q[1:-3] - 30 * q[2:-2] + 16 * q[3:-1] - q[4:]) / (12 * h**2)

    @cached_property
    def _wigner_grid(self):
        n = self.k.size
        m = np.fft.fftfreq(n, 1.0 / n).astype(int)
        i = np.arange(n)[:, None]
        rows, cols = i + m[None, :], i - m[None, :]
        valid = (rows >= 0) & (rows < n) & (cols >= 0) & (cols < n)
        c = np.where(valid, self.rho[rows.clip(0, n - 1), cols.clip(0, n - 1)], 0)
        w = (self.dk / np.pi) * n * np.fft.ifft(c, axis=1)
        x = np.pi * np.fft.fftfreq(n, self.dk)
        order = np.argsort(x)
        return x[order], w.real[:, order].T

    def wigner(self):
        """Return ``(x, W)`` with ``W[j, i] = W(x_j, k_i)``."""
        return self._wigner_grid


@dataclass(frozen=True)
class DispersionRelation:
    """Free probe frequency omega_P(k) with analytic first and second derivatives."""

    omega: object
    d1: object
    d2: object
    mass: float = None
    name: str = "custom"

    @classmethod
    def quadratic(cls, mass):
        """omega_P(k) = k^2 / 2M (hbar = 1)."""
        if not mass > 0:
            raise PhysicsRangeError("mass must be positive")
        return cls(
            omega=lambda k: np.asarray(k, dtype=float) ** 2 / (2 * mass),
            d1=lambda k: np.asarray(k, dtype=float) / mass,
            d2=lambda k: np.full_like(np.asarray(k, dtype=float), 1.0 / mass),
            mass=mass,
            name="quadratic",
        )

    @classmethod
    def from_hamiltonian_scale(cls, k_h, tau0):
        """Quadratic dispersion with k_H^2 = M / tau_0."""
        if not (k_h > 0 and tau0 > 0):
            raise PhysicsRangeError("k_H and tau_0 must be positive")
        return cls.quadratic(k_h**2 * tau0)

    @classmethod
    def zero(cls):
        """No free evolution (von Neumann limit)."""
        z = lambda k: np.zeros_like(np.asarray(k, dtype=float))  # noqa: E731
        return cls(omega=z, d1=z, d2=z, name="zero")

    @property
    def is_quadratic(self):
        return self.name == "quadratic"

    def hamiltonian_scale(self, tau0):
        if not self.is_quadratic:
            raise ValueError("the Hamiltonian scale is defined for quadratic dispersion only")
        return float(np.sqrt(self.mass / tau0))


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise NumericError("integrand is not finite on the quadrature grid")
    return values


def wigner(probe, x=None, k=None):
    """Wigner function of ``probe``.

    For a :class:`GaussianProbe` the closed form is evaluated at ``(x, k)``
    (broadcast). For a :class:`GridProbe` the discrete transform is
    returned as ``(x, k, W)`` on the native grids.
    """
    if isinstance(probe, GaussianProbe):
        return probe.wigner(x, k)
    x_grid, w = probe.wigner()
    return x_grid, probe.k, w


def phase_space_average(f, probe):
    """Phase-space average of ``f(x, k)`` over the initial Wigner function.

    ``f`` must accept broadcastable arrays. Gaussian probes use a tensor
    Gauss-Hermite rule (exact for polynomials of degree < 192); grid
    probes use the discrete Wigner function with rectangle quadrature.
    """
    if isinstance(probe, GaussianProbe):
        x, k, w = probe._nodes
        vals = _check_finite(np.asarray(f(x[:, None], k[None, :])))
        vals = np.broadcast_to(vals, (x.size, k.size))
        return w @ vals @ w
    x, wg = probe.wigner()
    dx = x[1] - x[0]
    vals = _check_finite(np.asarray(f(x[:, None], probe.k[None, :])))
    return np.sum(vals * wg) * dx * probe.dk


def conditional_integral(f, probe, k=None):
    """int dx f(x, k) W(x, k), i.e. the conditional average times P_0(k).

    For grid probes ``k`` defaults to the native grid; other points are
    linearly interpolated.
    """
    if isinstance(probe, GaussianProbe):
        k = np.asarray(k, dtype=float)
        x, _, w = probe._nodes
        shape = (x.size,) + k.shape
        vals = _check_finite(np.broadcast_to(np.asarray(f(x.reshape((-1,) + (1,) * k.ndim), k)), shape))
        return np.tensordot(w, vals, axes=1) * probe.p0(k)
    x, wg = probe.wigner()
    dx = x[1] - x[0]
    vals = _check_finite(np.asarray(f(x[:, None], probe.k[None, :])))
    out = np.sum(vals * wg, axis=0) * dx
    if k is None:
        return out
    if np.iscomplexobj(out):
        return np.interp(k, probe.k, out.real) + 1j * np.interp(k, probe.k, out.imag)
    return np.interp(k, probe.k, out)


def conditional_average(f, probe, k=None):
    """Phase-space conditional average of ``f`` at readout ``k``.

    Raises :class:`ConditioningError` where P_0(k) is below 1e-12.
    """
    if isinstance(probe, GaussianProbe):
        p = probe.p0(k)
    else:
        p = probe.p0() if k is None else np.interp(k, probe.k, probe.p0())
    if np.any(np.asarray(p) < CONDITIONING_TOL):
        raise ConditioningError("P_0(k) vanishes at the requested readout value")
    return conditional_integral(f, probe, k) / p


def covariance(f, g, probe):
    """C(f, g) = avg(f g) - avg(f) avg(g) over the Wigner function."""
    fg = phase_space_average(lambda x, k: f(x, k) * g(x, k), probe)
    return fg - phase_space_average(f, probe) * phase_space_average(g, probe)
