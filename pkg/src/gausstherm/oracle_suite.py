"""Identity battery run inside the truncated-Fock oracle.

Each check instantiates one analytic claim of the package in a finite
basis and reports the achieved residual against its bound.  The suite
also performs the mean-block prefactor gate: the information carried by
a displaced thermal state has the independently derived closed form
2 tanh(beta/2) = 1/nu per mean component (Fisher-Bures) and
beta = 2 arcoth(2 nu) (Kubo-Mori), which exactly one of the two
bookkeeping candidates reproduces.  The resolved value is recorded and
used as the shipped default.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fock, geometry, observables
from .geometry import IndexMode, ParameterIndex
from .kernels import KernelKind
from .symplectic import (
    GaussianThermalState,
    MatrixKind,
    SignConvention,
    omega,
    symplectic_evolution,
    validate_state,
)

GATE_RECORD_PATH = Path.home() / ".gausstherm" / "oracle_gate.json"


@dataclass
class CheckResult:
    name: str
    residual: float
    bound: float
    passed: bool
    note: str = ""


@dataclass
class OracleReport:
    checks: list[CheckResult] = field(default_factory=list)
    resolved_mean_prefactor: float | None = None
    quick: bool = False

    def add(self, name: str, residual: float, bound: float, note: str = ""):
        self.checks.append(
            CheckResult(name, float(residual), float(bound), bool(residual <= bound), note)
        )

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    def failing(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_residual": self.max_residual,
            "resolved_mean_prefactor": self.resolved_mean_prefactor,
            "quick": self.quick,
            "checks": [asdict(c) for c in self.checks],
        }


def _tracenorm(m: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def _maxabs(m) -> float:
    return float(np.max(np.abs(m)))


def reference_cases(quick: bool):
    """The n = 1 reference grid: isotropic nu in {0.8, 1.0, 2.0} plus one
    anisotropic Hamiltonian matrix."""
    cases = []
    nus = [1.0] if quick else [0.8, 1.0, 2.0]
    for nu in nus:
        beta = 2.0 * np.arctanh(1.0 / (2.0 * nu))
        cases.append((f"nu={nu}", np.zeros(2), beta * np.eye(2)))
    if not quick:
        cases.append(
            ("anisotropic", np.array([0.2, -0.1]), np.array([[0.9, 0.15], [0.15, 0.7]]))
        )
    return cases


def reference_states(quick: bool, cutoff: int):
    """Reference states truncated at the requested cutoff.

    The nu = 2.0 state carries an edge artifact of about 1.5e-7 in the
    truncated trace at N = 60 (the quadrature-product Hamiltonian lowers
    its top eigenvalues, so excess weight ~ e^{-beta N / 2} appears);
    that is far below the 2e-4 matrix tolerances these states feed, so
    they are built with a documented 1e-6 trace allowance.  Checks that
    need the strict 1e-8 gate build their own states via strict_cutoff.
    """
    return [
        (name, mu, h, fock.build_state(mu, h, cutoff, fock_tol=1e-6))
        for name, mu, h in reference_cases(quick)
    ]


def strict_cutoff(h: np.ndarray, base: int) -> int:
    """Cutoff meeting the 1e-8 trace gate: the edge artifact scales as
    exp(-d_min N / 2) with d_min the smallest eigenfrequency of H."""
    from .kernels import spectral_decomposition
    from .symplectic import SignConvention as _SC

    d_min = float(np.min(spectral_decomposition(h, _SC.OMEGA_H).freqs))
    need = int(np.ceil(2.0 * 20.0 / d_min))  # e^{-20} ~ 2e-9
    return max(base, need)


# ---------------------------------------------------------------------------
# Foundation checks: state construction and Gaussian moment structure
# ---------------------------------------------------------------------------


def check_state_construction(report: OracleReport, quick: bool, base_cutoff: int):
    """Moments and spectrum of strictly truncated builds (1e-8 trace gate)."""
    geom_checked = False
    for name, mu, h in reference_cases(quick):
        cutoff = strict_cutoff(h, base_cutoff)
        ost = fock.build_state(mu, h, cutoff)
        st = validate_state(mu, h)
        d = 2 * ost.rep.n_modes
        xs = ost.rep.quad_mats
        first = np.array([np.real(np.trace(ost.rho @ x)) for x in xs])
        xc = ost.rep.centered_quads(mu)
        second = np.empty((d, d))
        for j in range(d):
            for k in range(d):
                second[j, k] = np.real(
                    0.5 * np.trace(ost.rho @ (xc[j] @ xc[k] + xc[k] @ xc[j]))
                )
        resid = max(_maxabs(first - mu), _maxabs(second - st.cov))
        report.add(f"state_moments[{name}]", resid, 1e-6)

        if not geom_checked and name == "nu=1.0":
            # geometric spectrum: lam_m = (2/3)(1/3)^m for beta = ln 3
            beta = h[0, 0]
            expected = (1.0 - np.exp(-beta)) * np.exp(-beta * np.arange(5))
            report.add(
                "state_spectrum_geometric", _maxabs(ost.eigvals[:5] - expected), 1e-8
            )
            geom_checked = True

            mask = ost.rep.retained_mask()
            comm = (
                ost.rep.quad_mats[0] @ ost.rep.quad_mats[1]
                - ost.rep.quad_mats[1] @ ost.rep.quad_mats[0]
            )
            resid = _maxabs(fock.subblock(comm - 1j * np.eye(ost.rep.dim), mask))
            report.add("commutator_subblock", resid, 1e-10)


def check_two_mode_moments(report: OracleReport, cutoff2: int):
    # Eigenvalues of H confined to [1.8, 2.6] keep every eigenfrequency
    # above 1.8, so the truncation-edge artifact e^{-d N/2} clears the
    # 1e-8 trace gate already at 24 levels per mode.
    rng = np.random.default_rng(42)
    m = rng.standard_normal((4, 4))
    w, u = np.linalg.eigh(m @ m.T)
    w = 1.8 + 0.8 * (w - w.min()) / (w.max() - w.min())
    h = u @ np.diag(w) @ u.T
    mu = np.array([0.1, -0.2, 0.05, 0.15])
    st = validate_state(mu, h)
    ost = fock.build_state(mu, h, cutoff2)
    xc = ost.rep.centered_quads(mu)
    second = np.empty((4, 4))
    for j in range(4):
        for k in range(4):
            second[j, k] = np.real(
                0.5 * np.trace(ost.rho @ (xc[j] @ xc[k] + xc[k] @ xc[j]))
            )
    report.add("state_moments_two_mode", _maxabs(second - st.cov), 1e-6)
    return st, ost


def check_lemma1(report: OracleReport, states, analytic):
    name, mu, h, ost = states[-1]
    st = analytic[-1]
    rep = ost.rep
    mask = rep.retained_mask()
    w, u = np.linalg.eigh(ost.g_op)
    xc = rep.centered_quads(mu)
    resid = 0.0
    for t in (0.3, 1.0):
        s_t = symplectic_evolution(h, t, SignConvention.OMEGA_H)
        phase = np.exp(1j * w * t)
        for k in range(2 * rep.n_modes):
            lhs = (u * phase) @ u.conj().T @ xc[k] @ (u * phase.conj()) @ u.conj().T
            rhs = sum(s_t[k, l] * xc[l] for l in range(2 * rep.n_modes))
            resid = max(resid, _maxabs(fock.subblock(lhs - rhs, mask)))
    report.add("lemma1_heisenberg_evolution", resid, 1e-6)


def check_moment_identities(report: OracleReport, states, analytic, two_mode=None):
    # fourth moments: <(a o b) o (c o d)> = VV + VV + VV - (OmOm + OmOm)/4
    sources = [(states[-1][3], analytic[-1])]
    if two_mode is not None:
        sources.append((two_mode[1], two_mode[0]))
    resid4 = 0.0
    resid3 = 0.0
    for ost, st in sources:
        rep = ost.rep
        d = 2 * rep.n_modes
        xc = rep.centered_quads(ost.mu)
        om = omega(rep.n_modes)
        v = st.cov

        def jordan(x, y):
            return 0.5 * (x @ y + y @ x)

        rng = np.random.default_rng(3)
        tuples = [tuple(rng.integers(0, d, 4)) for _ in range(8)]
        tuples += [(0, 0, 0, 0), (0, 1, 0, 1)]
        for a, b, c, e in tuples:
            lhs = np.real(np.trace(ost.rho @ jordan(jordan(xc[a], xc[b]), jordan(xc[c], xc[e]))))
            rhs = (
                v[a, b] * v[c, e]
                + v[a, c] * v[b, e]
                + v[a, e] * v[b, c]
                - 0.25 * (om[a, c] * om[b, e] + om[a, e] * om[b, c])
            )
            resid4 = max(resid4, abs(lhs - rhs))
        for a in range(d):
            for b in range(d):
                for c in range(d):
                    lhs = np.real(np.trace(ost.rho @ jordan(xc[a], jordan(xc[b], xc[c]))))
                    resid3 = max(resid3, abs(lhs))
    report.add("gaussian_fourth_moment_identity", resid4, 1e-6)
    report.add("gaussian_third_moments_vanish", resid3, 1e-8)


# ---------------------------------------------------------------------------
# General (non-Gaussian) checks of the thermal-family layer
# ---------------------------------------------------------------------------


def _random_hermitian(rng, dim, scale=1.0):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = 0.5 * (m + m.conj().T)
    return scale * m / max(np.linalg.norm(m, 2), 1.0)


def check_general_thermal_layer(report: OracleReport):
    """Propositions on a 6-level system with a generic Hermitian family."""
    rng = np.random.default_rng(11)
    dim = 6
    g0 = _random_hermitian(rng, dim, 1.2)
    g1 = _random_hermitian(rng, dim, 1.0)
    g2 = _random_hermitian(rng, dim, 1.0)

    def rho_of(theta1, theta2):
        g = g0 + theta1 * g1 + theta2 * g2
        w, u = np.linalg.eigh(g)
        lam = np.exp(-w)
        lam /= lam.sum()
        return (u * lam) @ u.conj().T, g

    theta = (0.3, -0.2)
    rho, g = rho_of(*theta)

    # Prop 1 versus central finite differences
    step = 1e-4
    resid = 0.0
    for j, gj in ((0, g1), (1, g2)):
        drho = fock.thermal_derivative_prop1(g, gj)
        tp = list(theta)
        tp[j] += step
        tm = list(theta)
        tm[j] -= step
        fd = (rho_of(*tp)[0] - rho_of(*tm)[0]) / (2 * step)
        resid = max(resid, _maxabs(drho - fd))
    report.add("prop1_derivative_vs_finite_difference", resid, 1e-8)

    # eigendecomposition-route FB/KM versus the channel forms
    state = fock.spectral_oracle_state(rho)
    drhos = [fock.thermal_derivative_prop1(g, gj) for gj in (g1, g2)]
    fb_eig = fock.fb_from_eig(state, drhos)
    km_eig = fock.km_from_eig(state, drhos)

    def mean(x):
        return np.real(np.trace(rho @ x))

    phi = [fock.channel_apply(g, gj, KernelKind.P) for gj in (g1, g2)]
    psi = [fock.channel_apply(g, gj, KernelKind.Q) for gj in (g1, g2)]
    fb_prop2 = np.empty((2, 2))
    km_prop2 = np.empty((2, 2))
    fb_prop3 = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            fb_prop2[i, j] = 0.5 * mean(phi[i] @ phi[j] + phi[j] @ phi[i]) - mean(
                (g1, g2)[i]
            ) * mean((g1, g2)[j])
            km_prop2[i, j] = 0.5 * mean(
                (g1, g2)[i] @ phi[j] + phi[j] @ (g1, g2)[i]
            ) - mean((g1, g2)[i]) * mean((g1, g2)[j])
            fb_prop3[i, j] = 0.5 * mean(
                (g1, g2)[i] @ psi[j] + psi[j] @ (g1, g2)[i]
            ) - mean((g1, g2)[i]) * mean((g1, g2)[j])
    report.add("prop2_fb_channel_vs_eigendecomposition", _maxabs(fb_prop2 - fb_eig), 1e-8)
    report.add("prop2_km_channel_vs_eigendecomposition", _maxabs(km_prop2 - km_eig), 1e-8)
    report.add("prop3_q_channel_vs_p_channel_fb", _maxabs(fb_prop3 - fb_prop2), 1e-8)

    # Prop 4: SLD operator equals -Phi(dG) + <dG> I, and solves the SLD equation
    resid_op = 0.0
    resid_eq = 0.0
    for j, gj in ((0, g1), (1, g2)):
        l_direct = -phi[j] + mean(gj) * np.eye(dim)
        l_eig = fock.sld_from_eig(state, drhos[j])
        resid_op = max(resid_op, _maxabs(l_direct - l_eig))
        resid_eq = max(
            resid_eq,
            _maxabs(drhos[j] - 0.5 * (l_direct @ rho + rho @ l_direct)),
        )
    report.add("prop4_sld_operator_identity", resid_op, 1e-8)
    report.add("prop4_sld_differential_equation", resid_eq, 1e-8)

    # Q channel equals P channel applied twice
    x = _random_hermitian(rng, dim)
    twice = fock.channel_apply(g, fock.channel_apply(g, x, KernelKind.P), KernelKind.P)
    once = fock.channel_apply(g, x, KernelKind.Q)
    report.add("channel_q_equals_p_twice", _maxabs(twice - once), 1e-8)


# ---------------------------------------------------------------------------
# The prefactor gate and the Gaussian-layer theorems
# ---------------------------------------------------------------------------


def resolve_mean_prefactor(report: OracleReport, cutoff: int) -> float:
    """Displacement-of-a-thermal-state gate.

    Closed forms (re-derived from the geometric number distribution):
    FB per mean component = 2 tanh(beta/2) = 1/nu, KM = beta.  Exactly
    one of the candidate bookkeeping factors must reproduce the oracle.
    """
    nu = 1.0
    beta = 2.0 * np.arctanh(1.0 / (2.0 * nu))
    mu = np.zeros(2)
    h = beta * np.eye(2)
    st = validate_state(mu, h)
    ost = fock.build_state(mu, h, cutoff)
    drhos = [
        fock.oracle_state_derivative(ost, ParameterIndex.mean(1)),
        fock.oracle_state_derivative(ost, ParameterIndex.mean(2)),
    ]
    fb_oracle = fock.fb_from_eig(ost, drhos)
    km_oracle = fock.km_from_eig(ost, drhos)
    closed_fb = 2.0 * np.tanh(beta / 2.0)
    closed_km = beta
    report.add(
        "oracle_vs_closed_form_displacement_fb",
        max(_maxabs(np.diag(fb_oracle) - closed_fb), _maxabs(fb_oracle[0, 1])),
        2e-4,
    )
    report.add(
        "oracle_vs_closed_form_displacement_km",
        max(_maxabs(np.diag(km_oracle) - closed_km), _maxabs(km_oracle[0, 1])),
        2e-4,
    )

    winners = []
    for cand in geometry.MEAN_PREFACTOR_CANDIDATES:
        info = geometry.fisher_bures(st, mean_prefactor=cand)
        block = info.data[:2, :2]
        resid = _maxabs(block - fb_oracle)
        ok = resid <= 2e-4
        report.add(
            f"prefactor_candidate_{cand:g}_mean_block",
            resid,
            np.inf,
            note="PASS" if ok else "FAIL",
        )
        if ok:
            winners.append(cand)
    report.add(
        "prefactor_discrimination_unique",
        0.0 if len(winners) == 1 else 1.0,
        0.5,
        note=f"winners={winners}",
    )
    resolved = winners[0] if len(winners) == 1 else None
    report.resolved_mean_prefactor = resolved
    return resolved


def check_theorem_info_matrices(report: OracleReport, states, analytic, prefactor):
    """Full FB/KM matrices against the eigendecomposition formulas."""
    for (name, mu, h, ost), st in zip(states, analytic):
        params = geometry.parameter_indices(1, IndexMode.FULL_REDUNDANT)
        drhos = [fock.oracle_state_derivative(ost, p) for p in params]
        fb_o = fock.fb_from_eig(ost, drhos)
        km_o = fock.km_from_eig(ost, drhos)
        fb_a = geometry.fisher_bures(st, mean_prefactor=prefactor).data
        km_a = geometry.kubo_mori(st, mean_prefactor=prefactor).data
        report.add(f"fb_matrix_vs_oracle[{name}]", _maxabs(fb_a - fb_o), 2e-4)
        report.add(f"km_matrix_vs_oracle[{name}]", _maxabs(km_a - km_o), 2e-4)
        d = 2
        cross = max(_maxabs(fb_o[:d, d:]), _maxabs(km_o[:d, d:]))
        report.add(f"cross_block_oracle_residual[{name}]", cross, 1e-8)


def check_derivative_theorem(report: OracleReport, states, analytic, cutoff, step=1e-4):
    """Analytic state derivatives against central finite differences."""
    name, mu, h, ost = states[-1]
    st = analytic[-1]
    resid = 0.0
    for p in geometry.parameter_indices(1, IndexMode.FULL_REDUNDANT):
        der = observables.state_derivative(st, p)
        a_mat = ost.rep.materialize(der.a_op, mu)
        drho_an = -0.5 * (a_mat @ ost.rho + ost.rho @ a_mat) + der.scalar_term * ost.rho
        fd = fock.finite_difference_drho(mu, h, p, step, cutoff)
        resid = max(resid, _tracenorm(drho_an - fd))
    report.add("state_derivative_vs_finite_difference", resid, 1e-5)


def check_sld_theorem(report: OracleReport, states, analytic):
    """SLD coefficients: differential relation in the oracle and the
    coefficient-level duality with the state derivative."""
    name, mu, h, ost = states[-1]
    st = analytic[-1]
    mask = ost.rep.retained_mask()
    resid_rel = 0.0
    resid_dual = 0.0
    resid_zero_mean = 0.0
    for p in geometry.parameter_indices(1, IndexMode.FULL_REDUNDANT):
        l_obs = observables.sld(st, p)
        l_mat = ost.rep.materialize(l_obs, mu)
        drho = fock.oracle_state_derivative(ost, p)
        rel = drho - 0.5 * (l_mat @ ost.rho + ost.rho @ l_mat)
        resid_rel = max(resid_rel, _maxabs(fock.subblock(rel, mask)))
        der = observables.state_derivative(st, p)
        resid_dual = max(
            resid_dual,
            abs(l_obs.c + der.a_op.c - der.scalar_term),
            _maxabs(l_obs.lin + der.a_op.lin),
            _maxabs(l_obs.quad + der.a_op.quad),
        )
        resid_zero_mean = max(
            resid_zero_mean, abs(observables.gaussian_expectation(l_obs, st))
        )
    report.add("sld_differential_relation_subblock", resid_rel, 1e-8)
    report.add("sld_vs_derivative_coefficient_duality", resid_dual, 1e-10)
    report.add("sld_zero_mean", resid_zero_mean, 1e-10)


def check_line_elements(report: OracleReport, cutoff, prefactor, quick=False):
    """Second-order match of the Bures and relative-entropy expansions,
    plus the cubic decay of the residual in the step size."""
    beta = np.log(3.0)
    mu = np.zeros(2)
    h = beta * np.eye(2)
    st = validate_state(mu, h)
    fb = geometry.fisher_bures(st, mean_prefactor=prefactor)
    km = geometry.kubo_mori(st, mean_prefactor=prefactor)
    rep = fock.FockRep(1, cutoff)
    base = fock.build_state(mu, h, cutoff, rep=rep)

    direction = {"mu_1": 0.7, "h_1_1": 0.9, "h_2_2": 0.4, "h_1_2": 0.3, "h_2_1": 0.3}
    dtheta = np.array([direction.get(ix.label, 0.0) for ix in fb.index_map])

    def perturbed(eps):
        mu2 = mu.copy()
        h2 = h.copy()
        for ix, val in zip(fb.index_map, dtheta):
            if val == 0.0:
                continue
            if ix.kind == "mean":
                mu2[ix.k - 1] += eps * val
            else:
                h2[ix.k - 1, ix.l - 1] += 0.5 * eps * val
                h2[ix.l - 1, ix.k - 1] += 0.5 * eps * val
        return fock.build_state(mu2, h2, cutoff, rep=rep).rho

    steps = [1e-2] if quick else [1e-2, 5e-3, 2.5e-3]
    resid_fb, resid_km = [], []
    for eps in steps:
        rho2 = perturbed(eps)
        quad_fb = geometry.bures_line_element(fb, eps * dtheta)
        val_fb = 2.0 * (1.0 - np.sqrt(fock.fidelity(base.rho, rho2)))
        resid_fb.append(abs(val_fb - quad_fb))
        quad_km = geometry.km_line_element(km, eps * dtheta)
        val_km = fock.relative_entropy(base.rho, rho2)
        resid_km.append(abs(val_km - quad_km))
        if eps == 1e-2:
            report.add("bures_line_element_second_order", resid_fb[-1] / quad_fb, 1e-2)
            report.add("km_line_element_second_order", resid_km[-1] / quad_km, 1e-2)
    if not quick:
        for label, resids in (("bures", resid_fb), ("km", resid_km)):
            slope = np.polyfit(np.log(steps), np.log(np.maximum(resids, 1e-16)), 1)[0]
            report.add(
                f"{label}_residual_cubic_scaling",
                0.0 if slope >= 2.5 else 2.5 - slope,
                0.0 + 1e-12,
                note=f"slope={slope:.2f}",
            )


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def run_suite(
    quick: bool = False,
    cutoff: int | None = None,
    prefactor_override: float | None = None,
) -> OracleReport:
    """Run the full identity battery; returns the report.

    ``prefactor_override`` forces a mean-block prefactor instead of the
    gate-resolved value, so both candidates can be exercised end to end.
    """
    t0 = time.time()
    report = OracleReport(quick=quick)
    n1 = cutoff or (40 if quick else 60)
    states = reference_states(quick, n1)
    analytic = [validate_state(mu, h) for _, mu, h, _ in states]

    check_state_construction(report, quick, n1)
    two_mode = None
    if not quick:
        two_mode = check_two_mode_moments(report, cutoff2=24)
    check_lemma1(report, states, analytic)
    check_moment_identities(report, states, analytic, two_mode)
    check_general_thermal_layer(report)

    resolved = resolve_mean_prefactor(report, n1)
    prefactor = prefactor_override if prefactor_override is not None else resolved
    if prefactor is None:
        prefactor = geometry.DEFAULT_MEAN_PREFACTOR

    check_theorem_info_matrices(report, states, analytic, prefactor)
    check_derivative_theorem(report, states, analytic, n1)
    check_sld_theorem(report, states, analytic)
    check_line_elements(report, n1, prefactor, quick=quick)

    report.add("suite_runtime_seconds", time.time() - t0, np.inf, note="informational")
    return report


def write_gate_record(report: OracleReport, path: Path | str | None = None) -> Path:
    """Persist the resolved prefactor next to the suite outcome."""
    target = Path(path) if path is not None else GATE_RECORD_PATH
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "mean_block_prefactor": report.resolved_mean_prefactor,
        "suite_passed": report.passed,
        "max_residual": report.max_residual,
        "recorded_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    target.write_text(json.dumps(payload, indent=2))
    return target


def read_gate_record(path: Path | str | None = None) -> dict | None:
    target = Path(path) if path is not None else GATE_RECORD_PATH
    if not target.exists():
        return None
    return json.loads(target.read_text())
