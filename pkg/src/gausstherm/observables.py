"""Closed-form symmetric logarithmic derivatives and state derivatives
of Gaussian thermal states, as quadratic polynomials in the centered
quadratures.

Every operator here is carried in the canonical form

    c * 1 + sum_j lin_j x^c_j + sum_{k,l} quad_{k,l} {x^c_k, x^c_l} / 2

with quad symmetric and the quadratic sum running over all ordered index
pairs, so the Gaussian expectation is simply c + Tr[quad V].

The derivative of the exponent G = (x - mu)^T H (x - mu) / 2 with
respect to h_{k,l} is {x^c_k, x^c_l} / 4 and with respect to mu_m is
-sum_j h_{m,j} x^c_j.  Pushing these through the p-kernel channel (which
acts on quadratures by the symplectic evolution S(t) = exp(Omega H t))
gives the operator A below; the state derivative is
d rho = -{A, rho}/2 + <dG> rho and the SLD is L = -A + <dG> 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotSymmetric
from .geometry import ParameterIndex
from .kernels import (
    KernelKind,
    QuadratureConfig,
    weighted_congruence_integral,
    weighted_evolution_integral,
)
from .symplectic import TOL_SYM, GaussianThermalState, SignConvention


@dataclass(frozen=True)
class QuadraticObservable:
    c: float
    lin: np.ndarray
    quad: np.ndarray

    def __post_init__(self):
        lin = np.asarray(self.lin, dtype=float)
        quad = np.asarray(self.quad, dtype=float)
        if lin.ndim != 1 or quad.shape != (lin.shape[0], lin.shape[0]):
            raise DimensionMismatch("lin must be length 2n and quad 2n x 2n")
        if np.max(np.abs(quad - quad.T)) > TOL_SYM:
            raise NotSymmetric("quad coefficient matrix must be symmetric")
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "quad", 0.5 * (quad + quad.T))

    @property
    def dim(self) -> int:
        return self.lin.shape[0]

    def __neg__(self) -> "QuadraticObservable":
        return QuadraticObservable(-self.c, -self.lin, -self.quad)

    def shifted(self, c: float) -> "QuadraticObservable":
        return QuadraticObservable(self.c + c, self.lin, self.quad)


@dataclass(frozen=True)
class StateDerivative:
    """d rho = -{a_op, rho}/2 + scalar_term * rho for one parameter."""

    param: ParameterIndex
    a_op: QuadraticObservable
    scalar_term: float


def _check_param(state: GaussianThermalState, param: ParameterIndex):
    d = state.dim
    if param.kind == "mean":
        if not 1 <= param.k <= d:
            raise DimensionMismatch(f"mean index {param.k} outside 1..{d}")
    else:
        if not (1 <= param.k <= d and 1 <= param.l <= d):
            raise DimensionMismatch(f"ham index ({param.k},{param.l}) outside 1..{d}")


def _channelled_exponent_derivative(
    state: GaussianThermalState,
    param: ParameterIndex,
    config: QuadratureConfig | None,
) -> tuple[QuadraticObservable, float]:
    """The p-channel image of dG/dtheta, plus the scalar <dG>_rho."""
    _check_param(state, param)
    d = state.dim
    h = state.ham
    if param.kind == "mean":
        kp = weighted_evolution_integral(
            KernelKind.P, h, SignConvention.OMEGA_H, config=config
        )
        lin = -(h @ kp)[param.k - 1, :]
        return QuadraticObservable(0.0, lin, np.zeros((d, d))), 0.0
    k, l = param.k - 1, param.l - 1
    e_sym = np.zeros((d, d))
    e_sym[k, l] += 0.25
    e_sym[l, k] += 0.25
    quad = weighted_congruence_integral(
        KernelKind.P, h, e_sym, SignConvention.OMEGA_H, config=config
    )
    quad = 0.5 * (quad + quad.T)
    scalar = 0.5 * state.cov[k, l]
    return QuadraticObservable(0.0, np.zeros(d), quad), scalar


def sld(
    state: GaussianThermalState,
    param: ParameterIndex,
    config: QuadratureConfig | None = None,
) -> QuadraticObservable:
    """Symmetric logarithmic derivative for one (mu, H) coordinate.

    Mean coordinates give a purely linear observable with coefficients
    from the m-th row of H K_P; Hamiltonian coordinates give a purely
    quadratic one with constant part V_{k,l}/2.  The result has zero
    mean on the state.
    """
    a_op, scalar = _channelled_exponent_derivative(state, param, config)
    return (-a_op).shifted(scalar)


def state_derivative(
    state: GaussianThermalState,
    param: ParameterIndex,
    config: QuadratureConfig | None = None,
) -> StateDerivative:
    """Derivative of rho in anticommutator form, d rho = -{A, rho}/2 + s rho."""
    a_op, scalar = _channelled_exponent_derivative(state, param, config)
    return StateDerivative(param=param, a_op=a_op, scalar_term=scalar)


def gaussian_expectation(obs: QuadraticObservable, state: GaussianThermalState) -> float:
    """<obs>_rho = c + Tr[quad V]; the linear part is centered and drops out."""
    if obs.dim != state.dim:
        raise DimensionMismatch(
            f"observable dimension {obs.dim} does not match state dimension {state.dim}"
        )
    return obs.c + float(np.sum(obs.quad * state.cov))
