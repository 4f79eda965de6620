"""The high-peak-tent density p(t), its self-convolution q(t), and
kernel-weighted matrix integrals.

p(t) = (2/pi) ln|coth(pi t / 2)| is an even probability density with a
logarithmic singularity at t = 0 and Fourier transform

    int dt p(t) e^{-i w t} = tanh(w/2) / (w/2);

q = p * p has the squared transform.  The module evaluates integrals of
the form int w(t) f(S(t)) dt for S(t) in the one-parameter symplectic
group generated by a Hamiltonian matrix, along two routes:

* spectral: diagonalize the generator and apply the closed-form Fourier
  transform at every eigenfrequency (default; no quadrature error),
* quadrature: time-domain integration with the kernel values, used as an
  independent cross-check and as the fallback when the eigenvector
  matrix is ill conditioned.

The t = 0 log singularity of p is integrated on a dedicated panel with
the substitution t = e^{-u}; q is finite everywhere and is integrated on
fixed Gauss-Legendre panels with q evaluated by nested adaptive
quadrature at the nodes (cached per configuration).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad, quad_vec
from scipy.linalg import expm

from .errors import IllConditioned, SingularPoint
from .symplectic import COND_MAX, SignConvention, omega

# Tail of p beyond t_max is below (8/pi^2) e^{-pi t_max}; the default
# t_max = 40 pushes it under 1e-54.
DEFAULT_ABS_TOL = 1e-10
DEFAULT_REL_TOL = 1e-10
DEFAULT_T_MAX = 40.0
DEFAULT_SINGULAR_SPLIT = 0.1


class KernelKind(enum.Enum):
    P = "p"
    Q = "q"


def tail_bound(t_max: float) -> float:
    """Analytic bound on int_{|t| > t_max} p(t) dt."""
    return (8.0 / math.pi**2) * math.exp(-math.pi * t_max)


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    t_max: float = DEFAULT_T_MAX
    singular_split: float = DEFAULT_SINGULAR_SPLIT

    def __post_init__(self):
        if not (0 < self.singular_split < 1.0 <= self.t_max):
            raise ValueError("require 0 < singular_split < 1 <= t_max")
        if tail_bound(self.t_max) > self.abs_tol:
            raise ValueError(
                f"truncation tail {tail_bound(self.t_max):g} exceeds abs_tol; "
                "increase t_max"
            )

    def _key(self):
        return (self.abs_tol, self.rel_tol, self.t_max, self.singular_split)


_DEFAULT_CONFIG = QuadratureConfig()


def p_density(t):
    """High-peak-tent density (2/pi) ln|coth(pi t / 2)|; singular at t = 0.

    Vectorized; even in t; decays like (4/pi) e^{-pi |t|}.
    """
    t = np.asarray(t, dtype=float)
    x = 0.5 * np.pi * np.abs(t)
    if np.any(x == 0.0):
        raise SingularPoint("p(t) is singular at t = 0")
    out = np.empty_like(x)
    small = x < 1.0
    out[small] = -np.log(np.tanh(x[small]))
    e = np.exp(-2.0 * x[~small])
    out[~small] = np.log1p(e) - np.log1p(-e)
    res = (2.0 / np.pi) * out
    return float(res) if res.ndim == 0 else res


def _p_scalar(t: float) -> float:
    x = 0.5 * math.pi * abs(t)
    if x < 1.0:
        v = -math.log(math.tanh(x))
    else:
        e = math.exp(-2.0 * x)
        v = math.log1p(e) - math.log1p(-e)
    return (2.0 / math.pi) * v


def _sing_quad(fr, h: float, tol: float) -> float:
    """int_0^h fr(r) dr where fr has a log singularity at r = 0.

    Substituting r = e^{-u} turns the singularity into an exponentially
    damped smooth integrand on [-(log h), inf).
    """
    if h <= 0.0:
        return 0.0
    u0 = -math.log(h)
    val, _ = quad(
        lambda u: fr(math.exp(-u)) * math.exp(-u),
        u0,
        45.0,
        epsabs=tol,
        epsrel=tol,
        limit=400,
    )
    return val


def q_density(t, config: QuadratureConfig | None = None) -> float:
    """Self-convolution q(t) = int p(tau) p(tau + t) dtau (finite everywhere).

    Written symmetrically as 2 int_0^inf p(s - t/2) p(s + t/2) ds, which
    leaves a single log singularity at s = |t|/2; that point gets the
    same exponential substitution used for p itself.
    """
    cfg = config or _DEFAULT_CONFIG
    t = abs(float(t))
    half = 0.5 * t
    tol = min(cfg.abs_tol, 1e-12)
    qk = dict(epsabs=tol, epsrel=tol, limit=400)
    if t == 0.0:
        v = _sing_quad(lambda r: _p_scalar(r) ** 2, cfg.singular_split, tol)
        v += quad(lambda s: _p_scalar(s) ** 2, cfg.singular_split, cfg.t_max, **qk)[0]
        return 2.0 * v
    h = min(cfg.singular_split, half)
    v = _sing_quad(lambda r: _p_scalar(r) * _p_scalar(t - r), h, tol)
    v += _sing_quad(lambda r: _p_scalar(r) * _p_scalar(t + r), h, tol)
    if half - h > 0.0:
        v += quad(lambda s: _p_scalar(half - s) * _p_scalar(half + s), 0.0, half - h, **qk)[0]
    v += quad(
        lambda s: _p_scalar(s - half) * _p_scalar(s + half),
        half + h,
        half + cfg.t_max,
        **qk,
    )[0]
    return 2.0 * v


def kernel_ft(kind: KernelKind, w):
    """Fourier transform of the kernel: tanh(w/2)/(w/2) for P, its square for Q.

    Near w = 0 the removable singularity is evaluated by the series
    1 - w^2/12 + w^4/120, accurate to relative error below 1e-14 for
    |w| < 1e-4.
    """
    w = np.asarray(w, dtype=float)
    x = 0.5 * w
    out = np.empty_like(x)
    small = np.abs(w) < 1e-4
    xs = x[~small]
    out[~small] = np.tanh(xs) / xs
    x2 = x[small] ** 2
    out[small] = 1.0 - x2 / 3.0 + (2.0 / 15.0) * x2 * x2
    if kind is KernelKind.Q:
        out = out * out
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Spectral path
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigendecomposition of the evolution generator (Omega H or -H Omega).

    freqs holds the n positive mode frequencies d_k (the symplectic
    eigenvalues of H); eigvals come in pairs +-i d_k for H > 0.
    """

    eigvals: np.ndarray
    basis: np.ndarray
    basis_inv: np.ndarray
    freqs: np.ndarray
    cond: float


def spectral_decomposition(
    h: np.ndarray, convention: SignConvention
) -> SpectralDecomposition:
    h = np.asarray(h, dtype=float)
    n = h.shape[0] // 2
    om = omega(n)
    gen = om @ h if convention is SignConvention.OMEGA_H else -h @ om
    lam, p = np.linalg.eig(gen)
    pinv = np.linalg.inv(p)
    freqs = np.sort(np.abs(lam.imag))[::-1][::2].copy()
    return SpectralDecomposition(
        eigvals=lam,
        basis=p,
        basis_inv=pinv,
        freqs=freqs,
        cond=float(np.linalg.cond(p)),
    )


def _realify(m: np.ndarray, what: str) -> np.ndarray:
    resid = float(np.max(np.abs(m.imag)))
    if resid > 1e-9:
        raise IllConditioned(f"{what}: imaginary residue {resid:g} too large")
    return m.real


def _evolution_spectral(kind, sd: SpectralDecomposition) -> np.ndarray:
    c1 = kernel_ft(kind, np.abs(sd.eigvals.imag))
    return _realify((sd.basis * c1) @ sd.basis_inv, "evolution integral")


def _pair_factor(kind, sd: SpectralDecomposition) -> np.ndarray:
    mu = sd.eigvals.imag
    return kernel_ft(kind, np.abs(mu[:, None] + mu[None, :]))


def _congruence_spectral(kind, sd, mat) -> np.ndarray:
    # int w(t) S(t)^T M S(t) dt = P^{-T} [ (P^T M P) * C2 ] P^{-1}
    c2 = _pair_factor(kind, sd)
    mid = (sd.basis.T @ mat @ sd.basis) * c2
    return _realify(sd.basis_inv.T @ mid @ sd.basis_inv, "congruence integral")


def _fourth_spectral(kind, sd, v, om) -> np.ndarray:
    c2 = _pair_factor(kind, sd)
    p, pinv = sd.basis, sd.basis_inv

    def pairint(b, c):
        bp = b @ p
        cp = c @ p
        g = np.einsum("aj,jb,cJ,Jd,jJ->abcd", bp, pinv, cp, pinv, c2)
        return _realify(g, "fourth-moment integral")

    j1 = _realify(pinv.T @ ((p.T @ v @ p) * c2) @ pinv, "fourth-moment integral")
    g2 = pairint(v, v)
    g4 = pairint(om, om)
    return (
        np.einsum("ab,cd->abcd", v, j1)
        + np.einsum("ikjl->ijkl", g2)
        + np.einsum("iljk->ijkl", g2)
        - 0.25 * (np.einsum("ikjl->ijkl", g4) + np.einsum("iljk->ijkl", g4))
    )


# ---------------------------------------------------------------------------
# Quadrature path
# ---------------------------------------------------------------------------

_Q_NODE_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

_PANEL_EDGES = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0)


def _q_nodes(config: QuadratureConfig, omega_max: float):
    """Fixed Gauss-Legendre panels on [0, t_max] with cached exact q values.

    q restricted to t >= 0 is smooth (its only non-analytic point is the
    kink at t = 0, which sits on a panel edge), so Gauss-Legendre
    converges geometrically; node counts grow with the largest
    eigenfrequency so oscillatory integrands stay resolved.
    """
    bucket = 16 * math.ceil(max(omega_max, 1.0) / 16.0)
    key = config._key() + (bucket,)
    hit = _Q_NODE_CACHE.get(key)
    if hit is not None:
        return hit
    edges = [e for e in _PANEL_EDGES if e < config.t_max] + [config.t_max]
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        width = b - a
        nper = min(160, max(40, int(0.75 * bucket * width) + 12))
        xs, ws = leggauss(nper)
        nodes.append(0.5 * (a + b) + 0.5 * width * xs)
        weights.append(0.5 * width * ws)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    qvals = np.array([q_density(t, config) for t in nodes])
    for arr in (nodes, weights, qvals):
        arr.setflags(write=False)
    _Q_NODE_CACHE[key] = (nodes, weights, qvals)
    return _Q_NODE_CACHE[key]


def _integrate_weighted(kind, f_even, shape, config, omega_max):
    """int_R w(t) f(t) dt for array-valued f, passed as f_even(t) = f(t) + f(-t).

    P uses adaptive quadrature (singular panel substituted, smooth panel
    direct); Q uses the fixed Gauss-Legendre nodes with cached q values.
    Returns (value, error_estimate); the Q error estimate is the
    difference against a node-refined evaluation and is only computed on
    demand by callers that need it.
    """
    if kind is KernelKind.P:
        s = config.singular_split
        u0 = -math.log(s)

        def f_sing(u):
            t = math.exp(-u)
            return p_density(t) * f_even(t) * t

        v1, e1 = quad_vec(
            f_sing, u0, 40.0, epsabs=config.abs_tol * 1e-2, epsrel=config.rel_tol
        )
        v2, e2 = quad_vec(
            lambda t: p_density(t) * f_even(t),
            s,
            config.t_max,
            epsabs=config.abs_tol * 1e-2,
            epsrel=config.rel_tol,
        )
        return (v1 + v2).reshape(shape), e1 + e2
    nodes, weights, qvals = _q_nodes(config, omega_max)
    acc = np.zeros(np.prod(shape))
    for t, wq in zip(nodes, weights * qvals):
        acc = acc + wq * f_even(t)
    return acc.reshape(shape), 0.0


def _evolution_quadrature(kind, h, convention, config, freqs):
    n2 = h.shape[0]
    om = omega(n2 // 2)
    gen = om @ h if convention is SignConvention.OMEGA_H else -h @ om

    def f_even(t):
        return (expm(gen * t) + expm(-gen * t)).ravel()

    val, _ = _integrate_weighted(kind, f_even, (n2, n2), config, float(np.max(freqs)))
    return val


def _congruence_quadrature(kind, h, mat, convention, config, freqs):
    n2 = h.shape[0]
    om = omega(n2 // 2)
    gen = om @ h if convention is SignConvention.OMEGA_H else -h @ om

    def one(t):
        s = expm(gen * t)
        return s.T @ mat @ s

    val, _ = _integrate_weighted(
        kind,
        lambda t: (one(t) + one(-t)).ravel(),
        (n2, n2),
        config,
        2.0 * float(np.max(freqs)),
    )
    return val


def _w_tensor(s, v, om):
    vs = v @ s
    os = om @ s
    svs = s.T @ v @ s
    return (
        np.einsum("ab,cd->abcd", v, svs)
        + np.einsum("ac,bd->abcd", vs, vs)
        + np.einsum("ad,bc->abcd", vs, vs)
        - 0.25 * np.einsum("ac,bd->abcd", os, os)
        - 0.25 * np.einsum("ad,bc->abcd", os, os)
    )


def _fourth_quadrature(kind, h, v, convention, config, freqs):
    n2 = h.shape[0]
    om = omega(n2 // 2)
    gen = om @ h if convention is SignConvention.OMEGA_H else -h @ om

    def f_even(t):
        wt = _w_tensor(expm(gen * t), v, om) + _w_tensor(expm(-gen * t), v, om)
        return wt.ravel()

    val, _ = _integrate_weighted(
        kind, f_even, (n2,) * 4, config, 2.0 * float(np.max(freqs))
    )
    return val


# ---------------------------------------------------------------------------
# Public integrals (spectral default, quadrature fallback / cross-check)
# ---------------------------------------------------------------------------


def _dispatch(method, sd, spectral_fn, quadrature_fn, cond_max):
    if method == "spectral":
        return spectral_fn()
    if method == "quadrature":
        return quadrature_fn()
    if sd.cond <= cond_max:
        try:
            return spectral_fn()
        except IllConditioned:
            pass
    try:
        return quadrature_fn()
    except Exception as exc:  # pragma: no cover - double failure is exotic
        raise IllConditioned(
            f"both spectral (cond {sd.cond:.3g}) and quadrature paths failed"
        ) from exc


def weighted_evolution_integral(
    kind: KernelKind,
    h: np.ndarray,
    convention: SignConvention,
    config: QuadratureConfig | None = None,
    method: str = "auto",
    cond_max: float = COND_MAX,
) -> np.ndarray:
    """K_w = int w(t) S(t) dt for the chosen kernel and S convention.

    The sine components of S(t) integrate to zero because both kernels
    are even, so K_w is the cosine transform of the evolution evaluated
    at the eigenfrequencies.
    """
    cfg = config or _DEFAULT_CONFIG
    h = np.asarray(h, dtype=float)
    sd = spectral_decomposition(h, convention)
    return _dispatch(
        method,
        sd,
        lambda: _evolution_spectral(kind, sd),
        lambda: _evolution_quadrature(kind, h, convention, cfg, sd.freqs),
        cond_max,
    )


def weighted_congruence_integral(
    kind: KernelKind,
    h: np.ndarray,
    mat: np.ndarray,
    convention: SignConvention,
    config: QuadratureConfig | None = None,
    method: str = "auto",
    cond_max: float = COND_MAX,
) -> np.ndarray:
    """int w(t) S(t)^T M S(t) dt; spectral products land on d_j +- d_k."""
    cfg = config or _DEFAULT_CONFIG
    h = np.asarray(h, dtype=float)
    mat = np.asarray(mat, dtype=float)
    sd = spectral_decomposition(h, convention)
    return _dispatch(
        method,
        sd,
        lambda: _congruence_spectral(kind, sd, mat),
        lambda: _congruence_quadrature(kind, h, mat, convention, cfg, sd.freqs),
        cond_max,
    )


def weighted_fourth_moment_integral(
    kind: KernelKind,
    h: np.ndarray,
    v: np.ndarray,
    config: QuadratureConfig | None = None,
    method: str = "auto",
    convention: SignConvention = SignConvention.MINUS_H_OMEGA,
    cond_max: float = COND_MAX,
) -> np.ndarray:
    """Rank-4 array int w(t) W_{k1,l1,k2,l2}(t) dt of centered fourth moments.

    W combines the stationary covariance v with the evolved covariance
    and symplectic-form factors,

        W(t) = V_{k1,l1} [S^T V S]_{k2,l2}
             + [V S]_{k1,k2} [V S]_{l1,l2} + [V S]_{k1,l2} [V S]_{l1,k2}
             - ( [Om S]_{k1,k2} [Om S]_{l1,l2}
               + [Om S]_{k1,l2} [Om S]_{l1,k2} ) / 4,

    with S(t) in the MINUS_H_OMEGA convention by default.
    """
    cfg = config or _DEFAULT_CONFIG
    h = np.asarray(h, dtype=float)
    v = np.asarray(v, dtype=float)
    sd = spectral_decomposition(h, convention)
    om = omega(h.shape[0] // 2)
    return _dispatch(
        method,
        sd,
        lambda: _fourth_spectral(kind, sd, v, om),
        lambda: _fourth_quadrature(kind, h, v, convention, cfg, sd.freqs),
        cond_max,
    )


def kernel_normalization(kind: KernelKind, config: QuadratureConfig | None = None) -> float:
    """int_R w(t) dt evaluated by this module's own quadrature (should be 1)."""
    cfg = config or _DEFAULT_CONFIG
    val, _ = _integrate_weighted(kind, lambda t: np.array([2.0]), (1,), cfg, 1.0)
    return float(val[0])


def kernel_cosine_transform(
    kind: KernelKind, w: float, config: QuadratureConfig | None = None
) -> float:
    """int_R w(t) cos(w t) dt by quadrature; matches kernel_ft(kind, w)."""
    cfg = config or _DEFAULT_CONFIG
    val, _ = _integrate_weighted(
        kind, lambda t: np.array([2.0 * math.cos(w * t)]), (1,), cfg, abs(w)
    )
    return float(val[0])


def kernel_sine_transform(
    kind: KernelKind, w: float, config: QuadratureConfig | None = None
) -> float:
    """int_R w(t) sin(w t) dt; vanishes because the kernels are even."""
    cfg = config or _DEFAULT_CONFIG
    val, _ = _integrate_weighted(
        kind,
        lambda t: np.array([math.sin(w * t) + math.sin(-w * t)]),
        (1,),
        cfg,
        abs(w),
    )
    return float(val[0])
