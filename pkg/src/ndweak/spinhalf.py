"""
Closed-form statistics for a spin 1/2 measured along a Bloch direction.

Units of the probe spread (Delta_k = 1), probe centred at k = x = 0,
constant coupling and quadratic dispersion with Hamiltonian scale k_H.
These expressions are independent of the generic engine in
:mod:`ndweak.exact_stats` and serve as its oracle.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .core import SystemSpec
from .dynamics import CouplingProfile
from .errors import PhysicsRangeError
from .exact_stats import DEFAULT_EPSILON, DecoherenceModel, ReadoutDistribution
from .probe import DispersionRelation, GaussianProbe

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

FIG2_PARAMETERS = dict(pre_angle=np.pi / 3, post_angle=np.pi - 0.1, strength=0.5, coherence=2.0, k_h=10.0)


def bloch_state(r):
    """(1 + r.sigma) / 2 in the standard basis."""
    return 0.5 * (np.eye(2) + np.einsum("i,ijk->jk", np.asarray(r, dtype=float), PAULI))


@dataclass(frozen=True)
class BlochConfig:
    """Spin-1/2 measurement configuration in units of Delta_k.

    ``m`` and ``n`` are the pre- and postselection Bloch vectors, ``a``
    the unit measurement axis. ``scale`` is the decoherence scale K_D
    (infinite by default).
    """

    m: np.ndarray
    n: np.ndarray
    a: np.ndarray
    strength: float
    coherence: float = 2.0
    k_h: float = 10.0
    scale: float = np.inf
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        for name in ("m", "n", "a"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise PhysicsRangeError(f"{name} must be a 3-vector")
            object.__setattr__(self, name, v)
        if abs(np.linalg.norm(self.a) - 1) > 1e-12:
            raise PhysicsRangeError("measurement axis must be a unit vector")
        if np.linalg.norm(self.m) > 1 + 1e-12 or np.linalg.norm(self.n) > 1 + 1e-12:
            raise PhysicsRangeError("Bloch vectors must have length at most 1")
        if not (0 < self.coherence <= 2 + 1e-12):
            raise PhysicsRangeError("coherence must lie in (0, 2] in units of the spread")
        if not (self.k_h > 0 and self.scale > 0):
            raise PhysicsRangeError("k_H and K_D must be positive")

    @classmethod
    def from_angles(cls, pre_angle, post_angle, strength, coherence=2.0, k_h=10.0, scale=np.inf, epsilon=DEFAULT_EPSILON):
        """Pure states in the x-z plane, a = z.

        ``m`` makes ``pre_angle`` with the axis, ``n`` makes ``post_angle``
        with ``m`` (rotating further away from the axis).
        """
        t = pre_angle + post_angle
        m = np.array([np.sin(pre_angle), 0.0, np.cos(pre_angle)])
        n = np.array([np.sin(t), 0.0, np.cos(t)])
        return cls(m, n, np.array([0.0, 0.0, 1.0]), strength, coherence, k_h, scale, epsilon)

    def replace(self, **changes):
        fields = dict(self.__dict__)
        fields.update(changes)
        return BlochConfig(**fields)

    @property
    def invariants(self):
        """(m.a, n.a, m.n, (m x n).a)."""
        m, n, a = self.m, self.n, self.a
        return m @ a, n @ a, m @ n, np.cross(m, n) @ a

    @property
    def decoherence_exponent(self):
        # (a - a')^2 = 4 for the coherent terms
        return 0.0 if not np.isfinite(self.scale) else 8 * self.epsilon * self.strength**2 / self.scale**2

    @property
    def oscillation_period(self):
        return np.pi * self.k_h**2 / abs(self.strength) if self.strength else np.inf


def fig2_config(**changes):
    params = dict(FIG2_PARAMETERS)
    params.update(changes)
    return BlochConfig.from_angles(**params)


def fig3_config(**changes):
    params = dict(k_h=0.2)
    params.update(changes)
    return fig2_config(**params)


def _p0(k):
    return np.exp(-0.5 * np.asarray(k, dtype=float) ** 2) / np.sqrt(2 * np.pi)


def spin_p_post(cfg):
    """Probability of a successful postselection."""
    ma, na, mn, _ = cfg.invariants
    lam = cfg.strength
    damp = np.exp(-2 * lam**2 / cfg.coherence**2 - 2 * lam**2 / cfg.k_h**4 - cfg.decoherence_exponent)
    return float(0.5 * (1 + ma * na + damp * (mn - ma * na)))


def spin_joint_probability(cfg, k, coherent=True):
    """Joint probability P(k, rho_f) for readout ``k``.

    With ``coherent=False`` only the two shifted-Gaussian (a = a') terms are kept.
    """
    k = np.asarray(k, dtype=float)
    ma, na, mn, mxn = cfg.invariants
    lam = cfg.strength
    phi = 2 * lam * k / cfg.k_h**2
    damp = np.exp(-2 * lam**2 / cfg.coherence**2 - cfg.decoherence_exponent)
    diag = (1 + ma) * (1 + na) * _p0(k - lam) + (1 - ma) * (1 - na) * _p0(k + lam)
    if not coherent:
        return 0.25 * diag
    return 0.25 * (diag + 2 * damp * ((mn - ma * na) * np.cos(phi) - mxn * np.sin(phi)) * _p0(k))


def spin_characteristic_function(cfg, theta):
    """Conditional readout characteristic function Z(theta)."""
    theta = np.asarray(theta, dtype=float)
    ma, na, mn, mxn = cfg.invariants
    lam = cfg.strength
    q = 2 * lam / cfg.k_h**2
    expo = -2 * lam**2 * (cfg.coherence**-2 + cfg.k_h**-4) - cfg.decoherence_exponent
    # exp(expo) * cosh(q theta) etc. combined to avoid overflow
    ep = np.exp(expo + q * theta)
    em = np.exp(expo - q * theta)
    ch, sh = 0.5 * (ep + em), 0.5 * (ep - em)
    body = (1 + ma * na) * np.cos(lam * theta) + 1j * (ma + na) * np.sin(lam * theta)
    body = body + (mn - ma * na) * ch - 1j * mxn * sh
    return np.exp(-0.5 * theta**2) * 0.5 * body / spin_p_post(cfg)


def spin_distribution(cfg, k):
    k = np.asarray(k, dtype=float)
    p = spin_joint_probability(cfg, k)
    return ReadoutDistribution(k, p / spin_p_post(cfg), spin_p_post(cfg))


def generic_inputs(cfg, duration=1.0):
    """Translate ``cfg`` into arguments for the generic engine.

    Returns a dict with keys ``sys, rho_i, post, probe, profile, dispersion,
    deco`` expressed in the eigenbasis of a.sigma.
    """
    obs = np.einsum("i,ijk->jk", cfg.a, PAULI)
    evals, vecs = np.linalg.eigh(obs)
    rot = lambda r: vecs.conj().T @ bloch_state(r) @ vecs  # noqa: E731
    profile = CouplingProfile.constant(duration, cfg.strength)
    return dict(
        sys=SystemSpec(np.round(evals, 14)),
        rho_i=rot(cfg.m),
        post=rot(cfg.n),
        probe=GaussianProbe(1.0, cfg.coherence),
        profile=profile,
        dispersion=DispersionRelation.from_hamiltonian_scale(cfg.k_h, profile.tau0),
        deco=DecoherenceModel(cfg.scale, cfg.epsilon),
    )


OscillationScan = namedtuple("OscillationScan", "distribution period expected_period oscillating")


def measure_period(k, signal):
    """Mean spacing of the local maxima of ``signal``, refined parabolically."""
    peaks, _ = find_peaks(signal)
    if peaks.size < 2:
        return np.nan
    peaks = peaks[(peaks > 0) & (peaks < k.size - 1)]
    y0, y1, y2 = signal[peaks - 1], signal[peaks], signal[peaks + 1]
    denom = y0 - 2 * y1 + y2
    offset = np.where(denom != 0, 0.5 * (y0 - y2) / np.where(denom == 0, 1, denom), 0.0)
    pos = k[peaks] + offset * (k[1] - k[0])
    return float((pos[-1] - pos[0]) / (pos.size - 1))


def oscillation_scan(cfg, k, window=1e-3):
    """Exact Q(k) and the period of its coherent oscillations.

    The coherent residual (Q minus its a = a' part) is divided by P_0(k)
    where P_0 exceeds ``window`` times its peak, and the period is the mean
    spacing of its maxima. When the expected period exceeds Delta_k the
    oscillations cannot be resolved and ``period`` is None.
    """
    k = np.asarray(k, dtype=float)
    dist = spin_distribution(cfg, k)
    expected = cfg.oscillation_period
    oscillating = bool(expected < 1.0)
    if not oscillating:
        return OscillationScan(dist, None, expected, False)
    resid = dist.values - spin_joint_probability(cfg, k, coherent=False) / dist.p_post
    p0 = _p0(k)
    keep = p0 > window * p0.max()
    period = measure_period(k[keep], resid[keep] / p0[keep])
    return OscillationScan(dist, period, expected, True)
