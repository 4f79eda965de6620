"""Command-line front end.

Subcommands: convert, fb, km, sld, deriv, crb, oracle-check.  All input
and output is JSON; matrices are row-major nested arrays of finite
doubles accompanied by an explicit index map, with the quadrature
ordering (q_1..q_n, p_1..p_n) documented in every payload.

Exit codes: 0 success, 2 validation error, 3 numerical failure of both
evaluation paths, 4 singular matrix, 5 oracle identity failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry, observables, oracle_suite
from .errors import (
    GaussThermError,
    IllConditioned,
    SingularMatrix,
)
from .geometry import IndexMode, ParameterIndex
from .kernels import QuadratureConfig
from .symplectic import MatrixKind, validate_state

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_SINGULAR = 4
EXIT_ORACLE = 5

ORDERING_NOTE = "q_1..q_n,p_1..p_n"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    quadrature: QuadratureConfig
    index_mode: IndexMode = IndexMode.FULL_REDUNDANT
    prefactor: str = "oracle"  # paper | prop3 | oracle
    fock_cutoff: int = 60
    fock_tol: float = 1e-8
    output_precision: int | None = None
    gate_record: Path | None = None

    @staticmethod
    def load(path: str | None) -> "RunConfig":
        raw = {}
        if path is not None:
            try:
                raw = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise CliError(f"cannot read config file: {exc}")
        quad = raw.get("quadrature", {})
        try:
            qc = QuadratureConfig(
                abs_tol=float(quad.get("abs_tol", 1e-10)),
                rel_tol=float(quad.get("rel_tol", 1e-10)),
                t_max=float(quad.get("t_max", 40.0)),
                singular_split=float(quad.get("singular_split", 0.1)),
            )
        except ValueError as exc:
            raise CliError(f"bad quadrature config: {exc}")
        mode = raw.get("index_mode", "full")
        if mode not in ("full", "reduced"):
            raise CliError(f"bad index_mode {mode!r}")
        fock_raw = raw.get("fock", {})
        record = raw.get("gate_record")
        return RunConfig(
            quadrature=qc,
            index_mode=IndexMode.FULL_REDUNDANT if mode == "full" else IndexMode.SYMMETRIC_REDUCED,
            prefactor=raw.get("mean_block_prefactor", "oracle"),
            fock_cutoff=int(fock_raw.get("cutoff", 60)),
            fock_tol=float(fock_raw.get("fock_tol", 1e-8)),
            output_precision=raw.get("output_precision"),
            gate_record=Path(record).expanduser() if record else None,
        )


def load_state_spec(path: str):
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read state spec: {exc}")
    for key in ("mean", "matrix", "matrix_kind"):
        if key not in raw:
            raise CliError(f"state spec is missing {key!r}")
    kind_raw = str(raw["matrix_kind"]).lower()
    if kind_raw not in ("hamiltonian", "covariance"):
        raise CliError(f"matrix_kind must be hamiltonian or covariance, got {kind_raw!r}")
    kind = MatrixKind.HAMILTONIAN if kind_raw == "hamiltonian" else MatrixKind.COVARIANCE
    mean = np.asarray(raw["mean"], dtype=float)
    matrix = np.asarray(raw["matrix"], dtype=float)
    if "n_modes" in raw and 2 * int(raw["n_modes"]) != mean.shape[0]:
        raise CliError("n_modes is inconsistent with the mean vector length")
    return validate_state(mean, matrix, kind)


def parse_param(text: str, dim: int) -> ParameterIndex:
    """Parse "mu:m" or "h:k,l" with 1-based indices."""
    try:
        head, _, rest = text.partition(":")
        if head == "mu":
            m = int(rest)
            if not 1 <= m <= dim:
                raise ValueError
            return ParameterIndex.mean(m)
        if head == "h":
            k_s, _, l_s = rest.partition(",")
            k, l = int(k_s), int(l_s)
            if not (1 <= k <= dim and 1 <= l <= dim):
                raise ValueError
            return ParameterIndex.ham(k, l)
        raise ValueError
    except ValueError:
        raise CliError(
            f"bad parameter {text!r}: expected mu:m or h:k,l with 1-based indices"
        )


def _round(x, precision):
    if precision is None:
        return float(x)
    return round(float(x), precision)


def matrix_payload(m: np.ndarray, precision) -> list:
    out = [[_round(v, precision) for v in row] for row in np.asarray(m)]
    for row in out:
        for v in row:
            if not np.isfinite(v):
                raise CliError("refusing to emit non-finite values", EXIT_NUMERICAL)
    return out


def emit(payload: dict, output: str | None):
    text = json.dumps(payload, indent=2, allow_nan=False)
    if output:
        Path(output).write_text(text + "\n")
    else:
        print(text)


def resolve_prefactor(choice: str, config: RunConfig) -> float:
    if choice == "paper":
        return 2.0
    if choice == "prop3":
        return 1.0
    if choice == "oracle":
        record = oracle_suite.read_gate_record(config.gate_record)
        if record is None or record.get("mean_block_prefactor") is None:
            raise CliError(
                "no oracle gate record found; run `gausstherm oracle-check` "
                "first or pass --prefactor paper|prop3 explicitly"
            )
        return float(record["mean_block_prefactor"])
    raise CliError(f"unknown prefactor choice {choice!r}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_convert(args, config: RunConfig) -> dict:
    state = load_state_spec(args.input)
    p = config.output_precision
    return {
        "ordering": ORDERING_NOTE,
        "n_modes": state.n_modes,
        "H": matrix_payload(state.ham, p),
        "V": matrix_payload(state.cov, p),
        "Z": _round(np.exp(state.log_partition), p),
        "log_Z": _round(state.log_partition, p),
        "symplectic_eigenvalues": [_round(v, p) for v in state.nu],
    }


def _info_payload(info: geometry.InfoMatrix, config: RunConfig) -> dict:
    return {
        "ordering": ORDERING_NOTE,
        "kind": info.kind.value,
        "index_mode": info.index_mode.value,
        "mean_block_prefactor": info.mean_prefactor,
        "index_map": info.labels,
        "data": matrix_payload(info.data, config.output_precision),
    }


def cmd_fb(args, config: RunConfig) -> dict:
    state = load_state_spec(args.input)
    pf = resolve_prefactor(args.prefactor or config.prefactor, config)
    mode = _index_mode(args, config)
    info = geometry.fisher_bures(
        state, index_mode=mode, mean_prefactor=pf, config=config.quadrature
    )
    return _info_payload(info, config)


def cmd_km(args, config: RunConfig) -> dict:
    state = load_state_spec(args.input)
    pf = resolve_prefactor(args.prefactor or config.prefactor, config)
    mode = _index_mode(args, config)
    info = geometry.kubo_mori(
        state, index_mode=mode, mean_prefactor=pf, config=config.quadrature
    )
    return _info_payload(info, config)


def _index_mode(args, config: RunConfig) -> IndexMode:
    if args.index_mode is None:
        return config.index_mode
    return IndexMode.FULL_REDUNDANT if args.index_mode == "full" else IndexMode.SYMMETRIC_REDUCED


def cmd_sld(args, config: RunConfig) -> dict:
    state = load_state_spec(args.input)
    param = parse_param(args.param, state.dim)
    obs = observables.sld(state, param, config=config.quadrature)
    p = config.output_precision
    return {
        "ordering": ORDERING_NOTE,
        "parameter": param.label,
        "evolution_convention": "omega_h",
        "c": _round(obs.c, p),
        "lin": [_round(v, p) for v in obs.lin],
        "quad": matrix_payload(obs.quad, p),
    }


def cmd_deriv(args, config: RunConfig) -> dict:
    state = load_state_spec(args.input)
    param = parse_param(args.param, state.dim)
    der = observables.state_derivative(state, param, config=config.quadrature)
    p = config.output_precision
    return {
        "ordering": ORDERING_NOTE,
        "parameter": param.label,
        "evolution_convention": "omega_h",
        "form": "d_rho = -{a_op, rho}/2 + scalar_term * rho",
        "scalar_term": _round(der.scalar_term, p),
        "a_op": {
            "c": _round(der.a_op.c, p),
            "lin": [_round(v, p) for v in der.a_op.lin],
            "quad": matrix_payload(der.a_op.quad, p),
        },
    }


def cmd_crb(args, config: RunConfig) -> dict:
    state = load_state_spec(args.input)
    pf = resolve_prefactor(args.prefactor or config.prefactor, config)
    mode = _index_mode(args, config)
    if mode is IndexMode.FULL_REDUNDANT and not args.pseudo_inverse:
        mode = IndexMode.SYMMETRIC_REDUCED if args.index_mode is None else mode
    info = geometry.fisher_bures(
        state, index_mode=mode, mean_prefactor=pf, config=config.quadrature
    )
    if args.weight is not None:
        try:
            weight = np.asarray(json.loads(Path(args.weight).read_text()), dtype=float)
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise CliError(f"cannot read weight matrix: {exc}")
    else:
        weight = np.eye(info.dim)
    bound = geometry.crb_scalar(
        info, weight, args.n_copies, allow_pseudo_inverse=args.pseudo_inverse
    )
    cond = float(np.linalg.cond(info.data)) if not args.pseudo_inverse else float("inf")
    return {
        "bound": _round(bound, config.output_precision),
        "n_copies": args.n_copies,
        "index_mode": info.index_mode.value,
        "mean_block_prefactor": info.mean_prefactor,
        "pseudo_inverse": bool(args.pseudo_inverse),
        "metric_condition_number": cond if np.isfinite(cond) else None,
        "index_map": info.labels,
    }


def cmd_oracle_check(args, config: RunConfig) -> tuple[dict, int]:
    override = None
    if args.prefactor == "paper":
        override = 2.0
    elif args.prefactor == "prop3":
        override = 1.0
    report = oracle_suite.run_suite(
        quick=args.quick,
        cutoff=config.fock_cutoff if config.fock_cutoff != 60 else None,
        prefactor_override=override,
    )
    path = oracle_suite.write_gate_record(report, config.gate_record)
    payload = report.to_dict()
    payload["gate_record"] = str(path)
    code = EXIT_OK
    if not report.passed:
        failing = report.failing()
        payload["failed_checks"] = [c.name for c in failing]
        code = EXIT_ORACLE
    return payload, code


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gausstherm",
        description="Information geometry of bosonic Gaussian thermal states",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("--input", required=True, help="state spec JSON file")
        sp.add_argument("--config", help="run config JSON file")
        sp.add_argument("--output", help="write the result JSON here instead of stdout")

    sp = sub.add_parser("convert", help="emit H, V, Z and the symplectic eigenvalues")
    add_common(sp)

    for name, help_text in (
        ("fb", "Fisher-Bures information matrix"),
        ("km", "Kubo-Mori information matrix"),
    ):
        sp = sub.add_parser(name, help=help_text)
        add_common(sp)
        sp.add_argument("--index-mode", choices=["full", "reduced"])
        sp.add_argument("--prefactor", choices=["paper", "prop3", "oracle"])

    for name, help_text in (
        ("sld", "symmetric logarithmic derivative coefficients"),
        ("deriv", "state derivative coefficients"),
    ):
        sp = sub.add_parser(name, help=help_text)
        add_common(sp)
        sp.add_argument("--param", required=True, help='parameter, "mu:m" or "h:k,l"')

    sp = sub.add_parser("crb", help="scalar Cramer-Rao bound")
    add_common(sp)
    sp.add_argument("--weight", help="JSON file with the weight matrix (default identity)")
    sp.add_argument("--n-copies", type=int, default=1)
    sp.add_argument("--index-mode", choices=["full", "reduced"])
    sp.add_argument("--prefactor", choices=["paper", "prop3", "oracle"])
    sp.add_argument("--pseudo-inverse", action="store_true")

    sp = sub.add_parser("oracle-check", help="run the Fock-oracle identity suite")
    add_common(sp, needs_input=False)
    sp.add_argument("--quick", action="store_true", help="n=1, cutoff 40 subset")
    sp.add_argument("--prefactor", choices=["paper", "prop3"], help="force a candidate")

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.load(args.config)
        if args.command == "convert":
            payload, code = cmd_convert(args, config), EXIT_OK
        elif args.command == "fb":
            payload, code = cmd_fb(args, config), EXIT_OK
        elif args.command == "km":
            payload, code = cmd_km(args, config), EXIT_OK
        elif args.command == "sld":
            payload, code = cmd_sld(args, config), EXIT_OK
        elif args.command == "deriv":
            payload, code = cmd_deriv(args, config), EXIT_OK
        elif args.command == "crb":
            payload, code = cmd_crb(args, config), EXIT_OK
        elif args.command == "oracle-check":
            payload, code = cmd_oracle_check(args, config)
        else:  # pragma: no cover
            raise CliError(f"unknown command {args.command!r}")
    except CliError as exc:
        emit_error(str(exc), exc.code, args)
        return exc.code
    except SingularMatrix as exc:
        emit_error(str(exc), EXIT_SINGULAR, args, kind="SingularMatrix")
        return EXIT_SINGULAR
    except IllConditioned as exc:
        emit_error(str(exc), EXIT_NUMERICAL, args, kind="IllConditioned")
        return EXIT_NUMERICAL
    except GaussThermError as exc:
        emit_error(str(exc), EXIT_VALIDATION, args, kind=type(exc).__name__)
        return EXIT_VALIDATION
    emit(payload, args.output)
    return code


def emit_error(message: str, code: int, args, kind: str = "ValidationError"):
    emit({"error": {"type": kind, "message": message, "exit_code": code}}, getattr(args, "output", None))


if __name__ == "__main__":
    sys.exit(main())
