"""Real symplectic linear algebra for bosonic Gaussian thermal states.

A state is parameterized by a mean vector mu (length 2n, quadrature
ordering q_1..q_n, p_1..p_n) and a real symmetric positive definite
Hamiltonian matrix H, as rho(mu, H) = exp(-(x-mu)^T H (x-mu)/2) / Z.
This module provides the symplectic form, the conversions between H and
the covariance matrix V via the matrix coth/arcoth maps

    V = coth(i Omega H / 2) (i Omega / 2),
    H = 2 i Omega arcoth(2 i V Omega),

the Williamson normal form V = S (D (+) D) S^T, the partition function
Z = sqrt(det(V + i Omega / 2)), and the one-parameter symplectic
evolutions generated by H.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, logm, schur, sqrtm

from .errors import (
    DimensionMismatch,
    NotFaithful,
    NotPositiveDefinite,
    NotSymmetric,
    NotSymplectic,
)

# Validation tolerances.  arcoth diverges at nu = 1/2, so EPS_FAITHFUL
# keeps a guard band between accepted states and the pure-state boundary.
TOL_SYM = 1e-10
TOL_SYMP = 1e-9
TOL_RECON = 1e-9
TOL_IMAG = 1e-10
EPS_FAITHFUL = 1e-8
COND_MAX = 1e8


class SignConvention(enum.Enum):
    """Generator convention for the symplectic evolution S(t).

    OMEGA_H evolves with exp(Omega H t) (Heisenberg action on centered
    quadratures); MINUS_H_OMEGA with exp(-H Omega t).  The two matrices
    are transposes of each other and are never conflated.
    """

    OMEGA_H = "omega_h"
    MINUS_H_OMEGA = "minus_h_omega"


def omega(n: int) -> np.ndarray:
    """Symplectic form [[0, I_n], [-I_n, 0]] for n modes (exact integers)."""
    if n < 1:
        raise DimensionMismatch(f"mode count must be >= 1, got {n}")
    ident = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, ident], [-ident, zero]])


def _as_square_matrix(m, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 != 0 or m.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a 2n x 2n matrix, got shape {m.shape}")
    return m

def _check_symmetric(m: np.ndarray, name: str, tol: float = TOL_SYM) -> np.ndarray:
    if np.max(np.abs(m - m.T)) > tol:
        raise NotSymmetric(f"{name} is not symmetric within {tol:g}")
    return 0.5 * (m + m.T)

def _check_positive_definite(m: np.ndarray, name: str) -> np.ndarray:
    w = np.linalg.eigvalsh(m)
    if w[0] <= 0.0:
        raise NotPositiveDefinite(f"{name} has eigenvalue {w[0]:g} <= 0")
    return w


def symplectic_eigenvalues(v: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a symmetric PD matrix, sorted descending.

    These are the moduli of the (purely imaginary) eigenvalues of V Omega,
    each returned once per mode.
    """
    v = _as_square_matrix(v, "v")
    n = v.shape[0] // 2
    lam = np.linalg.eigvals(v @ omega(n))
    nus = np.sort(np.abs(lam.imag))[::-1]
    return nus[::2].copy()


def _real_part_checked(m: np.ndarray, what: str, tol: float = TOL_IMAG) -> np.ndarray:
    resid = np.max(np.abs(m.imag))
    if resid > tol:
        raise ArithmeticError(f"{what}: imaginary residue {resid:g} exceeds {tol:g}")
    return m.real


def cov_from_ham(h: np.ndarray, cond_max: float = COND_MAX) -> np.ndarray:
    """Covariance matrix of the thermal state of the Hamiltonian matrix h.

    Evaluates V = coth(i Omega h / 2) (i Omega / 2) on the eigenbasis of
    the non-normal product Omega h (spectrum +-i d_k for h > 0).  When the
    eigenvector matrix is ill conditioned, falls back to the dense Pade
    form coth(X/2) = (e^X + I)(e^X - I)^{-1} with X = i Omega h.
    """
    h = _as_square_matrix(h, "h")
    h = _check_symmetric(h, "h")
    _check_positive_definite(h, "h")
    n = h.shape[0] // 2
    om = omega(n)
    a = om @ h
    lam, p = np.linalg.eig(a)
    use_dense = np.linalg.cond(p) > cond_max
    if not use_dense:
        # coth evaluated at the eigenvalues of i Omega h / 2
        f = 1.0 / np.tanh(0.5j * lam)
        v = (p * f) @ np.linalg.solve(p, 0.5j * om)
        try:
            v = _real_part_checked(v, "cov_from_ham")
        except ArithmeticError:
            use_dense = True
    if use_dense:
        e = expm(1j * a)
        ident = np.eye(2 * n)
        v = (e + ident) @ np.linalg.solve(e - ident, 0.5j * om)
        v = _real_part_checked(v, "cov_from_ham (dense)", tol=100 * TOL_IMAG)
    v = 0.5 * (v + v.T)
    return v


def ham_from_cov(v: np.ndarray, cond_max: float = COND_MAX) -> np.ndarray:
    """Hamiltonian matrix of the Gaussian state with covariance v.

    Requires all symplectic eigenvalues strictly above 1/2 (faithful
    state); arcoth is only used on the branch (1, +inf).
    """
    v = _as_square_matrix(v, "v")
    v = _check_symmetric(v, "v")
    _check_positive_definite(v, "v")
    nus = symplectic_eigenvalues(v)
    if nus[-1] <= 0.5 + EPS_FAITHFUL:
        raise NotFaithful(
            f"smallest symplectic eigenvalue {nus[-1]:.12g} is not above 1/2"
        )
    n = v.shape[0] // 2
    om = omega(n)
    b = v @ om
    lam, p = np.linalg.eig(b)
    use_dense = np.linalg.cond(p) > cond_max
    if not use_dense:
        z = 2j * lam  # eigenvalues of 2 i V Omega, real with |z| > 1
        f = 0.5 * np.log((z + 1.0) / (z - 1.0))
        h = 2j * om @ (p * f) @ np.linalg.inv(p)
        try:
            h = _real_part_checked(h, "ham_from_cov")
        except ArithmeticError:
            use_dense = True
    if use_dense:
        nmat = 2j * b
        ident = np.eye(2 * n)
        h = 1j * om @ logm((nmat + ident) @ np.linalg.inv(nmat - ident))
        h = _real_part_checked(h, "ham_from_cov (dense)", tol=100 * TOL_IMAG)
    h = 0.5 * (h + h.T)
    _check_positive_definite(h, "reconstructed h")
    return h


@dataclass(frozen=True)
class WilliamsonDecomposition:
    """Williamson normal form V = S (diag(d) (+) diag(d)) S^T.

    s is symplectic; d holds the n symplectic eigenvalues in descending
    order.  S is unique only up to a symplectic-orthogonal gauge, so only
    the reconstruction is contractual.
    """

    s: np.ndarray
    d: np.ndarray

    def reconstruct(self) -> np.ndarray:
        dd = np.concatenate([self.d, self.d])
        return self.s @ (dd[:, None] * self.s.T)


def williamson(v: np.ndarray) -> WilliamsonDecomposition:
    """Williamson decomposition of a symmetric positive definite matrix.

    Forms the antisymmetric matrix V^{1/2} Omega V^{1/2}, reads the
    symplectic eigenvalues off its real Schur form, and assembles
    S = V^{1/2} Q (D^{-1/2} (+) D^{-1/2}) from the Schur basis Q.
    """
    v = _as_square_matrix(v, "v")
    v = _check_symmetric(v, "v")
    _check_positive_definite(v, "v")
    n = v.shape[0] // 2
    om = omega(n)
    w = sqrtm(v)
    w = np.real_if_close(w, tol=1000)
    if np.iscomplexobj(w):  # pragma: no cover - PD input keeps sqrtm real
        w = w.real
    w = 0.5 * (w + w.T)
    a = w @ om @ w
    a = 0.5 * (a - a.T)
    t, q = schur(a)
    # The Schur form of an antisymmetric matrix is block diagonal with
    # 2x2 blocks [[0, b], [-b, 0]]; flip columns so every b is positive.
    d = np.empty(n)
    for i in range(n):
        b = t[2 * i, 2 * i + 1]
        if b < 0.0:
            q[:, [2 * i, 2 * i + 1]] = q[:, [2 * i + 1, 2 * i]]
            b = -b
        d[i] = b
    order = np.argsort(-d, kind="stable")
    cols = [2 * i for i in order] + [2 * i + 1 for i in order]
    q = q[:, cols]
    d = d[order]
    scale = np.concatenate([d, d]) ** -0.5
    s = w @ q * scale
    if np.max(np.abs(s @ om @ s.T - om)) > TOL_SYMP:
        raise NotSymplectic("Williamson basis failed the symplectic check")
    return WilliamsonDecomposition(s=s, d=d)


def ham_from_williamson(s: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Hamiltonian matrix from Williamson data: -2 Omega S [arcoth(2D)]^{(+)2} S^T Omega."""
    s = _as_square_matrix(s, "s")
    d = np.asarray(d, dtype=float)
    n = s.shape[0] // 2
    if d.shape != (n,):
        raise DimensionMismatch(f"d must have length {n}, got {d.shape}")
    om = omega(n)
    if np.max(np.abs(s @ om @ s.T - om)) > TOL_SYMP:
        raise NotSymplectic("s does not preserve the symplectic form")
    if np.min(d) <= 0.5 + EPS_FAITHFUL:
        raise NotFaithful(f"symplectic eigenvalue {np.min(d):.12g} is not above 1/2")
    x = 2.0 * d
    arc = 0.5 * np.log((x + 1.0) / (x - 1.0))
    diag = np.concatenate([arc, arc])
    h = -2.0 * om @ s @ (diag[:, None] * s.T) @ om
    return 0.5 * (h + h.T)


def symplectic_evolution(
    h: np.ndarray, t: float, convention: SignConvention = SignConvention.MINUS_H_OMEGA
) -> np.ndarray:
    """One-parameter symplectic evolution generated by h.

    Returns exp(Omega h t) under OMEGA_H or exp(-h Omega t) under
    MINUS_H_OMEGA; S(t) Omega S(t)^T = Omega and S(0) = I.
    """
    h = _as_square_matrix(h, "h")
    h = _check_symmetric(h, "h")
    n = h.shape[0] // 2
    om = omega(n)
    if convention is SignConvention.OMEGA_H:
        gen = om @ h
    else:
        gen = -h @ om
    return expm(gen * t)


def log_partition_function(mu: np.ndarray, h: np.ndarray) -> float:
    """log Z(mu, H) = log sqrt(det(V + i Omega / 2)); independent of mu.

    Equals sum_i log(nu_i^2 - 1/4) / 2 over the symplectic eigenvalues
    of the covariance matrix.
    """
    mu = np.asarray(mu, dtype=float)
    h = _as_square_matrix(h, "h")
    if mu.shape != (h.shape[0],):
        raise DimensionMismatch(
            f"mu has length {mu.shape}, expected ({h.shape[0]},)"
        )
    v = cov_from_ham(h)
    nus = symplectic_eigenvalues(v)
    if nus[-1] <= 0.5 + EPS_FAITHFUL:
        raise NotFaithful("state is not faithful")
    return 0.5 * float(np.sum(np.log(nus * nus - 0.25)))


def partition_function(mu: np.ndarray, h: np.ndarray) -> float:
    """Z(mu, H) = sqrt(det(V + i Omega / 2))."""
    return float(np.exp(log_partition_function(mu, h)))


class MatrixKind(enum.Enum):
    HAMILTONIAN = "hamiltonian"
    COVARIANCE = "covariance"


@dataclass(frozen=True)
class GaussianThermalState:
    """A validated bosonic Gaussian thermal state rho(mu, H).

    Holds the mean vector together with both the Hamiltonian and the
    covariance parameterization, the Williamson data of the covariance,
    and the log partition function.  Instances are immutable; build them
    with :func:`validate_state`.
    """

    n_modes: int
    mu: np.ndarray
    ham: np.ndarray
    cov: np.ndarray
    will: WilliamsonDecomposition
    log_partition: float

    @property
    def dim(self) -> int:
        return 2 * self.n_modes

    @property
    def nu(self) -> np.ndarray:
        """Symplectic eigenvalues of the covariance matrix (descending)."""
        return self.will.d


def validate_state(
    mu,
    matrix,
    kind: MatrixKind = MatrixKind.HAMILTONIAN,
) -> GaussianThermalState:
    """Construct a GaussianThermalState from (mu, H) or (mu, V).

    Performs all input validation (dimensions, symmetry, positive
    definiteness, faithfulness) and populates the derived caches.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    m = _as_square_matrix(matrix, "matrix")
    dim = m.shape[0]
    if mu.shape != (dim,):
        raise DimensionMismatch(
            f"mean vector has length {mu.shape[0]}, matrix is {dim} x {dim}"
        )
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(m))):
        raise DimensionMismatch("inputs contain non-finite entries")
    m = _check_symmetric(m, "matrix")
    if kind is MatrixKind.HAMILTONIAN:
        _check_positive_definite(m, "H")
        ham = m
        cov = cov_from_ham(ham)
    else:
        _check_positive_definite(m, "V")
        cov = m
        ham = ham_from_cov(cov)  # raises NotFaithful on nu <= 1/2
    will = williamson(cov)
    if will.d[-1] <= 0.5 + EPS_FAITHFUL:
        raise NotFaithful(
            f"smallest symplectic eigenvalue {will.d[-1]:.12g} is not above 1/2"
        )
    if np.max(np.abs(will.reconstruct() - cov)) > TOL_RECON:
        raise NotSymplectic("Williamson reconstruction failed its tolerance")
    logz = 0.5 * float(np.sum(np.log(will.d**2 - 0.25)))
    for arr in (mu, ham, cov, will.s, will.d):
        arr.setflags(write=False)
    return GaussianThermalState(
        n_modes=dim // 2,
        mu=mu,
        ham=ham,
        cov=cov,
        will=will,
        log_partition=logz,
    )
