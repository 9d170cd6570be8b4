"""
System-side bookkeeping: observable eigenbasis, density matrices,
postselection schemes and the normal weak values alpha_{m,n}.

Everything is expressed in the joint eigenbasis of the measured observable
A and the system Hamiltonian, so A is diagonal and is represented by its
eigenvalues only.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConformanceError, EmptyPostselectionError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10


@dataclass(frozen=True)
class SystemSpec:
    """Finite-dimensional system in the eigenbasis of the observable.

    Parameters
    ----------
    eigenvalues : array_like
        Eigenvalues a of the measured observable, one per basis state.
        Repeated values are allowed.
    frequencies : array_like, optional
        System frequencies omega_S(a) for the same basis states. They do
        not enter the readout statistics when postselection happens at the
        end of the interaction, but are kept for completeness.
    """

    eigenvalues: np.ndarray
    frequencies: np.ndarray = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.eigenvalues, dtype=float).ravel()
        if a.size == 0:
            raise ConformanceError("system needs at least one basis state")
        if not np.all(np.isfinite(a)):
            raise ConformanceError("eigenvalues must be finite")
        w = np.zeros_like(a) if self.frequencies is None else np.asarray(self.frequencies, dtype=float).ravel()
        if w.shape != a.shape:
            raise ConformanceError(f"expected {a.size} frequencies, got {w.size}")
        a.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "eigenvalues", a)
        object.__setattr__(self, "frequencies", w)

    @property
    def dim(self):
        return self.eigenvalues.size

    @property
    def a_max(self):
        """Largest distance between two eigenvalues (a_M)."""
        return float(self.eigenvalues.max() - self.eigenvalues.min())

    def observable(self, power=1):
        return np.diag(self.eigenvalues.astype(complex) ** power)

    def check(self, rho, name="rho"):
        rho = np.asarray(rho)
        if rho.shape != (self.dim, self.dim):
            raise ConformanceError(f"{name} has shape {rho.shape}, system dimension is {self.dim}")
        return rho


def density_matrix(rho, normalized=True):
    """Validate and return ``rho`` as a complex density matrix.

    Checks hermiticity, unit trace (if ``normalized``) and positivity with
    the module tolerances. Raises :class:`ConformanceError` on failure.
    """
    rho = np.array(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ConformanceError(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ConformanceError("density matrix is not Hermitian")
    if normalized and abs(np.trace(rho) - 1) > TRACE_TOL:
        raise ConformanceError(f"density matrix has trace {np.trace(rho).real:.3g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -POSITIVITY_TOL:
        raise ConformanceError("density matrix is not positive semidefinite")
    return rho


def pure_state(psi):
    """Projector onto the normalized vector ``psi``."""
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ConformanceError("cannot build a state from the zero vector")
    psi = psi / norm
    return np.outer(psi, psi.conj())


def maximally_mixed(dim):
    return np.eye(dim, dtype=complex) / dim


@dataclass(frozen=True)
class PostselectionScheme:
    """Projective measurement in ``basis`` followed by acceptance with ``weights``.

    ``basis`` holds the orthonormal outcome states |S> as columns and
    ``weights[j]`` is the acceptance probability w(S_j) in [0, 1].
    """

    basis: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        basis = np.array(self.basis, dtype=complex)
        weights = np.array(self.weights, dtype=float).ravel()
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise ConformanceError("postselection basis must be a square matrix of column vectors")
        if weights.size != basis.shape[1]:
            raise ConformanceError(f"{weights.size} weights for {basis.shape[1]} outcomes")
        if np.max(np.abs(basis.conj().T @ basis - np.eye(basis.shape[0]))) > 1e-10:
            raise ConformanceError("postselection basis is not orthonormal")
        if np.any(weights < 0) or np.any(weights > 1):
            raise ConformanceError("weights must lie in [0, 1]")
        basis.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def pure(cls, psi, weight=1.0):
        """Accept only the outcome ``psi``; the remaining basis is arbitrary."""
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        # complete psi to an orthonormal basis
        q, _ = np.linalg.qr(np.column_stack([psi, np.eye(psi.size, dtype=complex)]))
        q = q[:, : psi.size]
        q[:, 0] = psi
        weights = np.zeros(psi.size)
        weights[0] = weight
        return cls(q, weights)

    @classmethod
    def none(cls, dim, weight=1.0):
        """Equal weights on every outcome: no postselection at all."""
        return cls(np.eye(dim), np.full(dim, weight))

    @property
    def dim(self):
        return self.weights.size

    @property
    def total_weight(self):
        """W = sum_S w(S), between 0 and D."""
        return float(self.weights.sum())

    def state(self):
        return postselected_state(self)


def postselected_state(scheme):
    """Normalized postselected state sum_S w(S)|S><S| / sum_S w(S)."""
    total = scheme.total_weight
    if total <= 0:
        raise EmptyPostselectionError("all postselection weights are zero")
    b = scheme.basis
    return (b * scheme.weights) @ b.conj().T / total


def resolve_postselection(post, dim):
    """Return ``(rho_f, W)`` from a scheme or a bare density matrix (W = 1)."""
    if isinstance(post, PostselectionScheme):
        if post.dim != dim:
            raise ConformanceError(f"postselection has dimension {post.dim}, system has {dim}")
        return postselected_state(post), post.total_weight
    rho_f = np.asarray(post, dtype=complex)
    if rho_f.shape != (dim, dim):
        raise ConformanceError(f"rho_f has shape {rho_f.shape}, system dimension is {dim}")
    return rho_f, 1.0


def alpha(m, n, rho_i, rho_f, sys):
    """Normal weak value Tr{A^m rho_f A^n rho_i} with A diagonal.

    Parameters
    ----------
    m, n : int
        Non-negative powers, at most 4.
    rho_i, rho_f : ndarray
        Pre- and postselected density matrices in the eigenbasis of A.
    sys : SystemSpec

    Returns
    -------
    complex
    """
    if not (0 <= m <= 4 and 0 <= n <= 4):
        raise ValueError("alpha is supported for 0 <= m, n <= 4")
    rho_i = sys.check(rho_i, "rho_i")
    rho_f = sys.check(rho_f, "rho_f")
    a = sys.eigenvalues
    # sum_{a,a'} a^m rho_f[a,a'] a'^n rho_i[a',a]
    return complex(np.einsum("i,ij,j,ji->", a**m, rho_f, a**n, rho_i))


@dataclass(frozen=True)
class WeakValueSet:
    """Normal weak values and their ratios.

    When ``nopps`` is set, alpha_00 vanishes and ``A_w``/``B_w`` are None;
    only the raw alphas are meaningful.
    """

    alpha00: float
    alpha01: complex
    alpha11: float
    alpha02: complex
    A_w: complex = None
    B_w: float = None
    nopps: bool = False

    def ratio_or_raise(self):
        from .errors import NoppsError

        if self.nopps:
            raise NoppsError("alpha_00 = 0: weak values are undefined, use the raw alphas")
        return self.A_w, self.B_w


def weak_values(rho_i, rho_f, sys, zero_tol=1e-15):
    """Compute alpha_00, alpha_01, alpha_11, alpha_02 and A_w, B_w.

    A vanishing alpha_00 is not an error: the returned set carries the
    ``nopps`` flag and no ratios.
    """
    a00 = alpha(0, 0, rho_i, rho_f, sys).real
    a01 = alpha(0, 1, rho_i, rho_f, sys)
    a11 = alpha(1, 1, rho_i, rho_f, sys).real
    a02 = alpha(0, 2, rho_i, rho_f, sys)
    if abs(a00) <= zero_tol:
        return WeakValueSet(a00, a01, a11, a02, nopps=True)
    return WeakValueSet(a00, a01, a11, a02, A_w=a01 / a00, B_w=a11 / a00)
