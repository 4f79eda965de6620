"""Truncated Fock-space oracle.

Everything here is brute force on purpose: states and operators are
dense matrices in a per-mode number basis truncated at a cutoff N, and
all identities of the analytic modules are re-derived spectrally from
eigendecompositions so they can be checked numerically at small mode
number.  Quadratures are built from truncated ladder operators via
a = (q + i p) / sqrt(2); the canonical commutator then holds exactly
except at the truncation edge, so operator-identity checks restrict to
the sub-block that excludes the top Fock levels of every mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import CutoffTooSmall, DimensionMismatch, NotFaithful
from .geometry import ParameterIndex
from .kernels import KernelKind, kernel_ft
from .observables import QuadraticObservable
from .symplectic import log_partition_function

FOCK_TOL = 1e-8
EIG_FLOOR = 1e-12
EDGE_LEVELS = 2  # top Fock levels per mode excluded from identity checks


def _ladder(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff)), 1)


class FockRep:
    """Quadrature operators for n modes truncated at `cutoff` per mode."""

    def __init__(self, n_modes: int, cutoff: int):
        if n_modes < 1 or cutoff < 4:
            raise DimensionMismatch("need n_modes >= 1 and cutoff >= 4")
        self.n_modes = n_modes
        self.cutoff = cutoff
        self.dim = cutoff**n_modes
        a = _ladder(cutoff)
        q1 = (a + a.T) / np.sqrt(2.0)
        p1 = -1j * (a - a.T) / np.sqrt(2.0)
        eye = np.eye(cutoff)

        def embed(op, mode):
            mats = [eye] * n_modes
            mats[mode] = op
            return reduce(np.kron, mats)

        self.quad_mats = [embed(q1, m) for m in range(n_modes)] + [
            embed(p1, m) for m in range(n_modes)
        ]
        # per-basis-state occupation of each mode, for edge masking
        idx = np.arange(self.dim)
        occ = []
        for m in range(n_modes):
            stride = cutoff ** (n_modes - 1 - m)
            occ.append((idx // stride) % cutoff)
        self._occ = np.array(occ)

    def retained_mask(self, edge: int = EDGE_LEVELS) -> np.ndarray:
        """Basis states with every mode occupation below cutoff - edge."""
        return np.all(self._occ < self.cutoff - edge, axis=0)

    def centered_quads(self, mu) -> list[np.ndarray]:
        mu = np.asarray(mu, dtype=float).reshape(-1)
        if mu.shape[0] != 2 * self.n_modes:
            raise DimensionMismatch("mean vector length does not match mode count")
        eye = np.eye(self.dim)
        return [x - m * eye for x, m in zip(self.quad_mats, mu)]

    def hamiltonian_operator(self, mu, h) -> np.ndarray:
        """(x - mu)^T H (x - mu) / 2 with symmetrized quadrature products."""
        h = np.asarray(h, dtype=float)
        xc = self.centered_quads(mu)
        d = 2 * self.n_modes
        if h.shape != (d, d):
            raise DimensionMismatch("Hamiltonian matrix shape mismatch")
        op = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(d):
            for j in range(d):
                if h[i, j] != 0.0:
                    op += 0.5 * h[i, j] * (xc[i] @ xc[j])
        return 0.5 * (op + op.conj().T)

    def materialize(self, obs: QuadraticObservable, mu) -> np.ndarray:
        """Instantiate c*1 + sum lin_j x^c_j + sum quad_kl {x^c_k, x^c_l}/2."""
        xc = self.centered_quads(mu)
        d = 2 * self.n_modes
        if obs.dim != d:
            raise DimensionMismatch("observable dimension mismatch")
        op = obs.c * np.eye(self.dim, dtype=complex)
        for j in range(d):
            if obs.lin[j] != 0.0:
                op += obs.lin[j] * xc[j]
        for k in range(d):
            for l in range(d):
                if obs.quad[k, l] != 0.0:
                    op += obs.quad[k, l] * 0.5 * (xc[k] @ xc[l] + xc[l] @ xc[k])
        return 0.5 * (op + op.conj().T)


@dataclass(frozen=True)
class OracleState:
    """Normalized truncated thermal state with eigendata cached.

    The Fock fields are None for generic states wrapped purely for the
    eigendecomposition formulas (see spectral_oracle_state)."""

    rep: FockRep | None
    mu: np.ndarray | None
    ham: np.ndarray | None
    rho: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    trace_deficit: float

    @property
    def g_op(self) -> np.ndarray:
        """The exponent operator (x-mu)^T H (x-mu)/2 in the Fock basis."""
        return self.rep.hamiltonian_operator(self.mu, self.ham)


def build_state(mu, h, cutoff: int, fock_tol: float = FOCK_TOL, rep: FockRep | None = None) -> OracleState:
    """rho = exp(-H_op) / Tr exp(-H_op) in the truncated basis.

    Fails with CutoffTooSmall when the truncated trace differs from the
    analytic partition function by more than fock_tol.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float)
    n_modes = mu.shape[0] // 2
    if rep is None:
        rep = FockRep(n_modes, cutoff)
    elif rep.n_modes != n_modes or rep.cutoff != cutoff:
        raise DimensionMismatch("provided FockRep does not match the request")
    hop = rep.hamiltonian_operator(mu, h)
    w, u = np.linalg.eigh(hop)
    boltz = np.exp(-w)
    z_trunc = float(np.sum(boltz))
    z_exact = float(np.exp(log_partition_function(mu, h)))
    deficit = 1.0 - z_trunc / z_exact
    if abs(deficit) > fock_tol:
        raise CutoffTooSmall(
            f"trace deficit {deficit:.3g} exceeds {fock_tol:g}; raise the cutoff"
        )
    lam = boltz / z_trunc
    rho = (u * lam) @ u.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    order = np.argsort(lam)[::-1]
    return OracleState(
        rep=rep,
        mu=mu,
        ham=h,
        rho=rho,
        eigvals=lam[order],
        eigvecs=u[:, order],
        trace_deficit=deficit,
    )


def spectral_oracle_state(rho: np.ndarray) -> OracleState:
    """Wrap an arbitrary density matrix for the eigendecomposition formulas.

    Used by the generic (non-Gaussian) identity checks; the Fock fields
    are absent.
    """
    rho = 0.5 * (rho + rho.conj().T)
    lam, u = np.linalg.eigh(rho)
    order = np.argsort(lam)[::-1]
    return OracleState(
        rep=None,
        mu=None,
        ham=None,
        rho=rho,
        eigvals=lam[order],
        eigvecs=u[:, order],
        trace_deficit=0.0,
    )


def channel_apply(g_op: np.ndarray, x_op: np.ndarray, kind: KernelKind) -> np.ndarray:
    """Kernel-weighted unitary mixing int w(t) e^{iGt} X e^{-iGt} dt.

    In the eigenbasis of G the (k, l) element of X picks up the factor
    tanh(w/2)/(w/2) (or its square for Q) at w = g_k - g_l.
    """
    g_op = np.asarray(g_op)
    if np.max(np.abs(g_op - g_op.conj().T)) > 1e-10:
        raise DimensionMismatch("channel generator must be Hermitian")
    w, u = np.linalg.eigh(g_op)
    xt = u.conj().T @ x_op @ u
    factors = kernel_ft(kind, w[:, None] - w[None, :])
    return u @ (xt * factors) @ u.conj().T


def thermal_derivative_prop1(g_op: np.ndarray, dg_op: np.ndarray) -> np.ndarray:
    """Derivative of exp(-G)/Z along dG: -{Phi(dG), rho}/2 + rho <dG>."""
    w, u = np.linalg.eigh(np.asarray(g_op))
    lam = np.exp(-w)
    lam /= np.sum(lam)
    rho = (u * lam) @ u.conj().T
    phi = channel_apply(g_op, dg_op, KernelKind.P)
    mean = np.trace(rho @ dg_op)
    out = -0.5 * (phi @ rho + rho @ phi) + rho * mean
    return 0.5 * (out + out.conj().T)


def _amplitudes(state: OracleState, drho_list) -> np.ndarray:
    u = state.eigvecs
    return np.array([u.conj().T @ d @ u for d in drho_list])


def fb_from_eig(state: OracleState, drho_list) -> np.ndarray:
    """Fisher-Bures matrix from the eigendecomposition formula
    sum_{k,l} 2/(lam_k + lam_l) <k|d_i rho|l><l|d_j rho|k>.

    Terms with lam_k + lam_l below the spectral floor are dropped.
    """
    lam = state.eigvals
    denom = lam[:, None] + lam[None, :]
    kernel = np.where(denom > EIG_FLOOR, 2.0 / np.maximum(denom, EIG_FLOOR), 0.0)
    amps = _amplitudes(state, drho_list)
    mat = np.einsum("ikl,kl,jkl->ij", amps, kernel, amps.conj())
    return 0.5 * (mat + mat.conj().T).real


def km_from_eig(state: OracleState, drho_list, return_flag: bool = False):
    """Kubo-Mori matrix with the kernel c(x,y) = (ln x - ln y)/(x - y)
    (1/x on the diagonal); spectral terms below the floor are dropped
    and flagged when they carried weight."""
    lam = state.eigvals
    keep = lam > EIG_FLOOR
    safe = np.maximum(lam, EIG_FLOOR)
    lx, ly = safe[:, None], safe[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.where(
            np.abs(lx - ly) > 1e-14 * np.maximum(lx, ly),
            (np.log(lx) - np.log(ly)) / (lx - ly),
            1.0 / lx,
        )
    mask = np.outer(keep, keep)
    kernel = np.where(mask, kernel, 0.0)
    amps = _amplitudes(state, drho_list)
    mat = np.einsum("ikl,kl,jkl->ij", amps, kernel, amps.conj())
    mat = 0.5 * (mat + mat.conj().T).real
    if not return_flag:
        return mat
    dropped = np.max(np.abs(amps[:, ~mask])) if np.any(~mask) else 0.0
    return mat, bool(dropped > 1e-10)


def sld_from_eig(state: OracleState, drho: np.ndarray) -> np.ndarray:
    """L = sum_{k,l} 2/(lam_k + lam_l) |k><k| drho |l><l|."""
    lam = state.eigvals
    u = state.eigvecs
    denom = lam[:, None] + lam[None, :]
    kernel = np.where(denom > EIG_FLOOR, 2.0 / np.maximum(denom, EIG_FLOOR), 0.0)
    amp = u.conj().T @ drho @ u
    l_op = u @ (amp * kernel) @ u.conj().T
    return 0.5 * (l_op + l_op.conj().T)


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1^2."""
    w1, u1 = np.linalg.eigh(rho)
    w2, u2 = np.linalg.eigh(sigma)
    s1 = (u1 * np.sqrt(np.clip(w1, 0.0, None))) @ u1.conj().T
    s2 = (u2 * np.sqrt(np.clip(w2, 0.0, None))) @ u2.conj().T
    sv = np.linalg.svd(s1 @ s2, compute_uv=False)
    return float(np.sum(sv) ** 2)


def relative_entropy(rho: np.ndarray, sigma: np.ndarray, eps: float = EIG_FLOOR) -> float:
    """Tr[rho (ln rho - ln(sigma + eps I))] with spectral-floor handling."""
    w1, u1 = np.linalg.eigh(rho)
    w1c = np.clip(w1, 0.0, None)
    ent = float(np.sum(np.where(w1c > eps, w1c * np.log(np.maximum(w1c, eps)), 0.0)))
    w2, u2 = np.linalg.eigh(sigma)
    log_sigma = (u2 * np.log(np.clip(w2, 0.0, None) + eps)) @ u2.conj().T
    cross = float(np.real(np.trace(rho @ log_sigma)))
    return ent - cross


def exponent_derivative_operator(
    state: OracleState, param: ParameterIndex
) -> np.ndarray:
    """dG/dtheta in the Fock basis: -sum_j h_{m,j} x^c_j for a mean
    coordinate, {x^c_k, x^c_l}/4 for a Hamiltonian coordinate."""
    rep, mu, h = state.rep, state.mu, state.ham
    xc = rep.centered_quads(mu)
    if param.kind == "mean":
        m = param.k - 1
        op = np.zeros((rep.dim, rep.dim), dtype=complex)
        for j in range(2 * rep.n_modes):
            if h[m, j] != 0.0:
                op -= h[m, j] * xc[j]
        return op
    k, l = param.k - 1, param.l - 1
    return 0.25 * (xc[k] @ xc[l] + xc[l] @ xc[k])


def oracle_state_derivative(state: OracleState, param: ParameterIndex) -> np.ndarray:
    """d rho / d theta computed entirely inside the oracle (channel route)."""
    return thermal_derivative_prop1(state.g_op, exponent_derivative_operator(state, param))


def finite_difference_drho(
    mu, h, param: ParameterIndex, step: float, cutoff: int, fock_tol: float = FOCK_TOL
) -> np.ndarray:
    """Central difference (rho(theta + s e) - rho(theta - s e)) / 2s.

    Hamiltonian coordinates perturb h_{k,l} and h_{l,k} together so the
    perturbed matrix stays symmetric; the two coordinates carry the same
    derivative by symmetry of H, so the symmetric perturbation with half
    weight per entry reproduces the single-coordinate derivative.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float)
    rep = FockRep(mu.shape[0] // 2, cutoff)

    def at(sgn):
        mu2, h2 = mu.copy(), h.copy()
        if param.kind == "mean":
            mu2[param.k - 1] += sgn * step
        else:
            k, l = param.k - 1, param.l - 1
            if k == l:
                h2[k, k] += sgn * step
            else:
                h2[k, l] += 0.5 * sgn * step
                h2[l, k] += 0.5 * sgn * step
        return build_state(mu2, h2, cutoff, fock_tol, rep=rep).rho

    return (at(+1) - at(-1)) / (2.0 * step)


def subblock(mat: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Restrict a matrix to the rows/columns selected by a basis mask."""
    return mat[np.ix_(mask, mask)]
