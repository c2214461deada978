"""Command-line front end: a thin client of the service layer.

Subcommands (qfi, sweep, timescales, ising, verify) read a JSON config
matching the corresponding request schema, run it either in-process or
against a remote service instance (--url), and write results as CSV data
rows and/or a JSON summary.  `serve` starts the service.

Exit codes: 0 success, 1 assertion or verification failure,
2 usage/configuration error.
"""

import argparse
import json
import sys
from pathlib import Path

from pydantic import BaseModel, ValidationError

from .service import runners
from .service.schemas import (
    IsingRequest, IsingResponse, QfiRequest, QfiResponse, SlopeAssertion,
    SweepRequest, SweepResponse, TimescalesRequest, TimescalesResponse,
    VerifyRequest, VerifyResponse,
)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2

_COMMANDS = {
    "qfi": (QfiRequest, QfiResponse, runners.run_qfi),
    "sweep": (SweepRequest, SweepResponse, runners.run_sweep),
    "timescales": (TimescalesRequest, TimescalesResponse, runners.run_timescales),
    "ising": (IsingRequest, IsingResponse, runners.run_ising),
    "verify": (VerifyRequest, VerifyResponse, runners.run_verify),
}

_CSV_COLUMNS = {
    "qfi": ["t", "qfi_x1", "qfi_x2", "lower", "upper", "c_m", "c_M",
            "fidelity", "purity", "qcrb_x1", "qcrb_x2", "oracle_max_dev"],
    "sweep": ["n", "tau_z", "tau_d", "bound_x1", "bound_x2", "bound_gamma",
              "seminorm", "argmax_q"],
    "ising": ["n", "seminorm_exact", "argmax_q", "seminorm_asymptotic",
              "asymptotic_ratio", "tau_z", "tau_d", "bound_x1", "product_variance"],
}


def _fmt(value) -> str:
    if value is None:
        return "inf"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _rows_to_csv(command: str, rows) -> str:
    columns = _CSV_COLUMNS[command]
    lines = [",".join(columns)]
    for row in rows:
        data = row.model_dump()
        lines.append(",".join(_fmt(data.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def _summary_json(response: BaseModel) -> str:
    return json.dumps(response.model_dump(), indent=2, sort_keys=True,
                      allow_nan=False, default=str) + "\n"


def _load_config(path: str | None, model, overrides: dict):
    payload = {}
    if path is not None:
        text = Path(path).read_text()
        payload = json.loads(text)
        if not isinstance(payload, dict):
            raise ValueError(f"config root must be a JSON object, got {type(payload).__name__}")
    payload.update(overrides)
    return model.model_validate(payload)


def _parse_assert_slope(raw: str) -> tuple[float, float]:
    try:
        expected, tol = raw.split(":")
        return float(expected), float(tol)
    except ValueError as exc:
        raise ValueError(f"--assert-slope expects '<float>:<tol>', got {raw!r}") from exc


def _run_remote(url: str, command: str, request: BaseModel) -> dict:
    import httpx

    response = httpx.post(f"{url.rstrip('/')}/{command}",
                          json=request.model_dump(), timeout=600.0)
    if response.status_code != 200:
        raise ValueError(f"service returned {response.status_code}: {response.text}")
    return response.json()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dephmet",
        description="QFI, Cramer-Rao bounds, timescales, and scaling "
                    "exponents for many-body dephasing metrology.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file for the request")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--json-out", help="JSON summary output path")
        p.add_argument("--url", help="POST to a running service instead of in-process")

    p = sub.add_parser("qfi", help="QFI, bounds, fidelity, purity per time point")
    add_common(p)
    p.add_argument("--oracle", action="store_true",
                   help="cross-check the evolution against the stepped integrator")

    p = sub.add_parser("sweep", help="scaling sweep over N with slope fits")
    add_common(p)
    p.add_argument("--threads", type=int, help="worker pool size for sweep points")
    p.add_argument("--assert-slope", metavar="S:TOL",
                   help="fail (exit 1) unless the fitted x1/gamma slope is S within TOL")

    p = sub.add_parser("timescales", help="tau_Z, tau_D, and sensitivity bounds")
    add_common(p)

    p = sub.add_parser("ising", help="long-range coupling seminorm and bounds")
    add_common(p)

    p = sub.add_parser("verify", help="oracle-equivalence and bound test suites")
    add_common(p)
    p.add_argument("--seed", help="hex or decimal seed for the randomized checks")
    p.add_argument("--max-n", type=int, help="largest system size in the corpus (<= 8)")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _overrides_for(args) -> dict:
    overrides = {}
    if args.command == "qfi" and args.oracle:
        overrides["oracle"] = True
    if args.command == "sweep":
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.assert_slope is not None:
            expected, tol = _parse_assert_slope(args.assert_slope)
            overrides["assert_slope"] = SlopeAssertion(
                which="x1", expected=expected, tol=tol).model_dump()
    if args.command == "verify":
        if args.seed is not None:
            overrides["seed"] = int(args.seed, 0)
        if args.max_n is not None:
            overrides["max_n"] = args.max_n
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        uvicorn.run("dephmet.service.app:app", host=args.host, port=args.port)
        return EXIT_OK

    request_model, response_model, runner = _COMMANDS[args.command]
    try:
        request = _load_config(args.config, request_model, _overrides_for(args))
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.url:
            response = response_model.model_validate(
                _run_remote(args.url, args.command, request))
        else:
            response = runner(request)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.command in _CSV_COLUMNS:
        csv_text = _rows_to_csv(args.command, response.rows)
        if args.out:
            Path(args.out).write_text(csv_text)
        else:
            sys.stdout.write(csv_text)

    summary = _summary_json(response)
    if args.json_out:
        Path(args.json_out).write_text(summary)
    elif args.command not in _CSV_COLUMNS:
        sys.stdout.write(summary)

    if args.command == "verify" and not response.passed:
        return EXIT_ASSERTION
    if args.command == "sweep" and response.assertion_passed is False:
        return EXIT_ASSERTION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
