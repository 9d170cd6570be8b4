"""
Exact readout statistics of the pre/postselected nondemolition measurement.

The joint probability of reading ``k`` and postselecting ``rho_f`` is

    P(k) = W sum_{a,a'} rho_f[a', a] rho_i[a, a'] exp{-i [Gamma_a(k) - Gamma_a'(k)]}
           * D_{a,a'} rho_0(k - lambda a, k - lambda a')

with D the optional decoherence suppression of the off-diagonal terms.
"""

from dataclasses import dataclass

import numpy as np

from .core import resolve_postselection
from .dynamics import hamiltonian_phase
from .errors import ConsistencyError, PhysicsRangeError, PostselectionImpossibleError
from .probe import DEFAULT_HALF_WIDTH

IMAG_TOL = 1e-8
P_POST_MIN = 1e-14
DEFAULT_EPSILON = 1.0 / 12.0


@dataclass(frozen=True)
class DecoherenceModel:
    """Effective decoherence during the interaction.

    Off-diagonal terms are multiplied by
    exp{-lambda^2 (a - a')^2 gamma k_B T epsilon tau^3 / M}
    = exp{-2 epsilon lambda^2 (a - a')^2 / K_D^2}.

    ``scale`` is K_D; ``inf`` switches decoherence off. ``epsilon`` depends
    on the shape of g(t) and is a free input.
    """

    scale: float = np.inf
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not (self.scale > 0 and self.epsilon > 0):
            raise PhysicsRangeError("decoherence scale and epsilon must be positive")

    @classmethod
    def from_rate(cls, gamma, thermal_energy, mass, duration, epsilon=DEFAULT_EPSILON):
        """Build from gamma, k_B T, M and tau: K_D = [gamma k_B T tau^3 / 2M]^(-1/2)."""
        if gamma < 0 or thermal_energy < 0 or mass <= 0 or duration <= 0:
            raise PhysicsRangeError("decoherence parameters must be non-negative (mass, duration positive)")
        rate = gamma * thermal_energy * duration**3 / (2 * mass)
        return cls(np.inf if rate == 0 else rate**-0.5, epsilon)

    @property
    def enabled(self):
        return np.isfinite(self.scale)

    def factor(self, strength, a, a2):
        if not self.enabled:
            return np.ones(np.broadcast(a, a2).shape)
        return np.exp(-2 * self.epsilon * strength**2 * (np.asarray(a) - a2) ** 2 / self.scale**2)


@dataclass(frozen=True)
class ReadoutDistribution:
    """Tabulated readout distribution on a uniform grid.

    ``values`` is Q(k) for conditional distributions or P(k, rho_f) for
    joint ones; ``p_post`` is the postselection probability used.
    """

    k: np.ndarray
    values: np.ndarray
    p_post: float = 1.0
    kind: str = "conditional"

    @property
    def dk(self):
        return float(self.k[1] - self.k[0])

    @property
    def norm(self):
        return float(self.dk * np.sum(self.values))

    def moments(self, n_max=4):
        return distribution_moments(self, n_max)

    @property
    def mean(self):
        return float(self.moments(1)[1])

    def characteristic(self, theta):
        return exact_characteristic_function(self, theta)


def _phase_table(sys, k, profile, dispersion):
    return np.array([hamiltonian_phase(a, k, profile, dispersion) for a in sys.eigenvalues])


def joint_terms(k, sys, rho_i, post, probe, profile, dispersion, deco=None, terms="all", include_weight=True):
    """Complex summand of the joint probability, summed over (a, a').

    ``terms`` selects ``"all"``, ``"diagonal"`` (a = a') or ``"coherent"``
    (a != a') contributions. The imaginary part is numerical residue.
    """
    k = np.asarray(k, dtype=float)
    rho_i = sys.check(rho_i, "rho_i")
    rho_f, weight = resolve_postselection(post, sys.dim)
    lam = profile.strength
    a = sys.eigenvalues
    gamma = _phase_table(sys, k, profile, dispersion)
    deco = deco or DecoherenceModel()
    out = np.zeros(k.shape, dtype=complex)
    for i in range(sys.dim):
        for j in range(sys.dim):
            if (terms == "diagonal" and i != j) or (terms == "coherent" and i == j):
                continue
            c = rho_f[j, i] * rho_i[i, j]
            if c == 0:
                continue
            term = c * np.exp(-1j * (gamma[i] - gamma[j])) * probe.density(k - lam * a[i], k - lam * a[j])
            if i != j:
                term = term * deco.factor(lam, a[i], a[j])
            out += term
    return weight * out if include_weight else out


def joint_probability(k, sys, rho_i, post, probe, profile, dispersion, deco=None, terms="all", include_weight=True):
    """Joint probability P(k, rho_f) of reading ``k`` and postselecting.

    Parameters
    ----------
    k : float or ndarray
        Readout values.
    sys : SystemSpec
    rho_i : ndarray
        Preselected state in the eigenbasis of A.
    post : PostselectionScheme or ndarray
        Postselection scheme, or a normalized rho_f (taken with W = 1).
    probe : GaussianProbe
    profile : CouplingProfile
    dispersion : DispersionRelation
    deco : DecoherenceModel, optional
    terms : {"all", "diagonal", "coherent"}
    include_weight : bool
        Multiply by W = sum_S w(S). The decohered expression is often
        written without it; the conditional distribution is unaffected.

    Raises
    ------
    ConsistencyError
        If the imaginary residue exceeds 1e-8, which indicates a bug.
    """
    z = joint_terms(k, sys, rho_i, post, probe, profile, dispersion, deco, terms, include_weight)
    scale = max(1.0, float(np.max(np.abs(z.real), initial=0.0)))
    if np.max(np.abs(z.imag), initial=0.0) > IMAG_TOL * scale:
        raise ConsistencyError(f"joint probability has imaginary part {np.max(np.abs(z.imag)):.3g}")
    return z.real


def default_grid(probe, sys, profile):
    """Probe grid widened by the largest coupling shift lambda |a|."""
    shift = abs(profile.strength) * float(np.max(np.abs(sys.eigenvalues)))
    return probe.grid(half_width=DEFAULT_HALF_WIDTH + shift / probe.spread)


def _grid(probe, k, sys, profile):
    return default_grid(probe, sys, profile) if k is None else np.asarray(k, dtype=float)


def postselection_probability(sys, rho_i, post, probe, profile, dispersion, deco=None, k=None):
    """P_post = int P(k, rho_f) dk by quadrature on ``k`` (default probe grid)."""
    k = _grid(probe, k, sys, profile)
    p = joint_probability(k, sys, rho_i, post, probe, profile, dispersion, deco)
    return float((k[1] - k[0]) * np.sum(p))


def conditional_distribution(sys, rho_i, post, probe, profile, dispersion, deco=None, k=None, terms="all"):
    """Conditional readout distribution Q(k) = P(k, rho_f) / P_post.

    Raises
    ------
    PostselectionImpossibleError
        When P_post < 1e-14.
    """
    k = _grid(probe, k, sys, profile)
    p = joint_probability(k, sys, rho_i, post, probe, profile, dispersion, deco, terms=terms)
    p_post = float((k[1] - k[0]) * np.sum(p))
    if p_post < P_POST_MIN:
        raise PostselectionImpossibleError(f"postselection probability {p_post:.3g} is zero")
    return ReadoutDistribution(k, p / p_post, p_post)


def distribution_moments(dist, n_max=4):
    """Raw moments <k^n>, n = 0..n_max, by rectangle quadrature."""
    if not 0 <= n_max <= 4:
        raise ValueError("n_max must be between 0 and 4")
    powers = dist.k[None, :] ** np.arange(n_max + 1)[:, None]
    return dist.dk * powers @ dist.values


def exact_characteristic_function(dist, theta):
    """int exp(i theta k) Q(k) dk by quadrature."""
    theta = np.asarray(theta, dtype=float)
    phase = np.exp(1j * np.multiply.outer(theta, dist.k))
    return dist.dk * phase @ dist.values


def postselected_probe_element(k1, k2, sys, rho_i, post, probe, profile, dispersion, deco=None):
    """Matrix element <k1| rho_P |k2> of the (unnormalized) postselected probe state.

    Equals W sum_{a,a'} rho_f[a',a] rho_i[a,a'] exp{-i Gamma_a(k1) + i Gamma_a'(k2)}
    rho_0(k1 - lambda a, k2 - lambda a') at the end of the interaction. On the
    diagonal it reduces to the joint probability.
    """
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    rho_i = sys.check(rho_i, "rho_i")
    rho_f, weight = resolve_postselection(post, sys.dim)
    lam = profile.strength
    a = sys.eigenvalues
    deco = deco or DecoherenceModel()
    g1 = _phase_table(sys, k1, profile, dispersion)
    g2 = _phase_table(sys, k2, profile, dispersion)
    out = np.zeros(np.broadcast(k1, k2).shape, dtype=complex)
    for i in range(sys.dim):
        for j in range(sys.dim):
            c = rho_f[j, i] * rho_i[i, j]
            if c == 0:
                continue
            term = c * np.exp(-1j * g1[i] + 1j * g2[j]) * probe.density(k1 - lam * a[i], k2 - lam * a[j])
            if i != j:
                term = term * deco.factor(lam, a[i], a[j])
            out += term
    return weight * out


def exact_x_characteristic_function(chi, sys, rho_i, post, probe, profile, dispersion, k=None):
    """<exp(i chi x)> conditioned on postselection, by quadrature of rho_P(k - chi, k)."""
    k = _grid(probe, k, sys, profile)
    dk = k[1] - k[0]
    p_post = dk * np.sum(joint_probability(k, sys, rho_i, post, probe, profile, dispersion))

    def one(c):
        return dk * np.sum(postselected_probe_element(k - c, k, sys, rho_i, post, probe, profile, dispersion))

    return np.vectorize(one, otypes=[complex])(np.asarray(chi, dtype=float)) / p_post
