"""Command line: ``relbgk {solve, constants, verify, sweep, show-config, serve}``.

Runs in-process by default; ``--server URL`` turns it into a thin client of
the HTTP service. Exit status: 0 success, 1 verification or convergence
failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import (
    ConfigurationError,
    DomainError,
    HypothesisViolationError,
    InfeasibleConfigurationError,
    RelBGKError,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

CONFIG_ERRORS = (ConfigurationError, DomainError, HypothesisViolationError, InfeasibleConfigurationError)

log = logging.getLogger("relbgk")


def _w_list(values: list[str]) -> list[float]:
    out = []
    for v in values:
        for part in v.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                out.append(float(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not a number: {part!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relbgk", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    p.add_argument("--server", metavar="URL", help="send the work to a running service instead")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, output=True):
        sp.add_argument("--config", default="default", metavar="FILE", help="INI file or 'default'")
        sp.add_argument("--w", type=float, help="collision frequency (overrides the config)")
        sp.add_argument("--allow-beyond-eps", action="store_true", help="solve even if w >= eps")
        if output:
            sp.add_argument("--output", metavar="DIR", help="output directory (overrides the config)")

    sp = sub.add_parser("solve", help="Picard iteration to the fixed point")
    common(sp)
    sp.add_argument("--tol", type=float, help="stopping tolerance (overrides the config)")

    sp = sub.add_parser("constants", help="print every constant as JSON")
    common(sp)

    sp = sub.add_parser("verify", help="run the numerical inequality checks")
    common(sp)
    sp.add_argument("--report", metavar="FILE", help="verification report path")
    sp.add_argument("--seed", type=int, help="sampler seed (overrides the config)")

    sp = sub.add_parser("sweep", help="analytic vs empirical contraction over several w")
    common(sp)
    sp.add_argument("--w-list", nargs="+", required=True, metavar="W", help="values, space or comma separated")
    sp.add_argument("--workers", type=int, help="parallel solves (default: one per w up to the CPU count)")

    sub.add_parser("show-config", help="print the default configuration file")

    sp = sub.add_parser("serve", help="start the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    return p


def _load(args):
    from .config import load_config

    run = load_config(args.config)
    cfg = run.solve
    if args.w is not None:
        cfg = replace(cfg, w=args.w)
    if args.allow_beyond_eps:
        cfg = replace(cfg, allow_beyond_eps=True)
    if getattr(args, "output", None):
        cfg = replace(cfg, output_dir=args.output)
    if getattr(args, "tol", None) is not None:
        cfg = replace(cfg, tol=args.tol)
    if getattr(args, "seed", None) is not None:
        run.verify.seed = args.seed
    cfg.validate()
    run.solve = cfg
    return run


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, allow_nan=False))


def _solve_summary(report: dict, files: dict) -> dict:
    keys = ("w", "eps", "kappa", "within_theorem", "iterations", "converged",
            "empirical_contraction", "fixed_point_residual", "flux_deviation", "omega_all_passed")
    return {**{k: report.get(k) for k in keys}, "files": files}


def _print_verify(records: list[dict]) -> None:
    for r in records:
        status = "PASS" if r["pass"] else "FAIL"
        print(f"{status}  {r['name']:<28s} margin={r['margin']!s:<24} tol={r['tolerance']:g}")


def _print_sweep(payload: dict) -> None:
    print(f"eps = {payload['eps']:.6e}")
    print(f"{'w':>12s} {'theorem':>8s} {'kappa':>12s} {'empirical':>12s} {'iters':>6s}  status")

    def num(x):
        return f"{x:12.4e}" if x is not None else f"{'-':>12s}"

    for r in payload["rows"]:
        it = "-" if r["iterations"] is None else str(r["iterations"])
        status = "converged" if r["converged"] else (r["error"] or "failed")
        print(f"{r['w']:12.4e} {str(r['within_theorem']):>8s} {num(r['kappa'])} "
              f"{num(r['empirical_contraction'])} {it:>6s}  {status}")


# -- in-process ------------------------------------------------------------------


def _local(args, run) -> int:
    from . import api

    cfg = run.solve
    if args.command == "constants":
        payload = api.constants_payload(api.compute_constants(cfg))
        if cfg.output_dir:
            from .verify import write_json_atomic

            write_json_atomic(Path(cfg.output_dir) / "constants.json", payload)
        _print_json(payload)
        return EXIT_OK
    if args.command == "solve":
        result, files = api.run_solve(cfg)
        _print_json(_solve_summary(api.solve_payload(result), files))
        return EXIT_OK
    if args.command == "verify":
        path = args.report or (Path(cfg.output_dir) / "verification.json" if cfg.output_dir else None)
        report = api.run_verify(run, report_path=path)
        _print_verify([r.to_dict() for r in report.records])
        print("all checks passed" if report.passed else f"{len(report.failing())} check(s) failed")
        return EXIT_OK if report.passed else EXIT_FAILURE
    if args.command == "sweep":
        payload = api.run_sweep(cfg, _w_list(args.w_list), workers=args.workers)
        _print_sweep(payload)
        return EXIT_OK if all(r["converged"] for r in payload["rows"]) else EXIT_FAILURE
    raise AssertionError(args.command)


# -- thin client -----------------------------------------------------------------


class _RemoteError(Exception):
    def __init__(self, status: int, body: dict):
        super().__init__(body.get("message", str(body)))
        self.status = status
        self.body = body


def _post(base: str, route: str, payload: dict) -> dict:
    import httpx

    resp = httpx.post(base.rstrip("/") + route, json=payload, timeout=None)
    if resp.status_code >= 400:
        try:
            body = resp.json()
        except ValueError:
            body = {"message": resp.text}
        raise _RemoteError(resp.status_code, body)
    return resp.json()


def _remote(args, run) -> int:
    from .api import _write_text_atomic
    from .schemas import ProblemModel
    from .verify import write_json_atomic

    cfg = run.solve
    problem = ProblemModel.from_config(cfg).model_dump(by_alias=True)
    out = Path(cfg.output_dir) if cfg.output_dir else None
    if args.command == "constants":
        payload = _post(args.server, "/constants", problem)
        if out:
            write_json_atomic(out / "constants.json", payload)
        _print_json(payload)
        return EXIT_OK
    if args.command == "solve":
        body = _post(args.server, "/solve", problem)
        files = {}
        if out:
            files = {"report": out / "report.json", "profiles": out / "profiles.csv", "constants": out / "constants.json"}
            write_json_atomic(files["report"], body["report"])
            _write_text_atomic(files["profiles"], body["profiles_csv"])
            write_json_atomic(files["constants"], body["constants"])
        _print_json(_solve_summary(body["report"], {k: str(v) for k, v in files.items()}))
        return EXIT_OK
    if args.command == "verify":
        v = run.verify
        body = _post(args.server, "/verify", {"problem": problem, "seed": v.seed, "n_fields": v.n_fields, "n_pairs": v.n_pairs})
        path = args.report or (out / "verification.json" if out else None)
        if path:
            write_json_atomic(path, body)
        _print_verify(body["records"])
        return EXIT_OK if body["passed"] else EXIT_FAILURE
    if args.command == "sweep":
        body = _post(args.server, "/sweep", {"problem": problem, "w_list": _w_list(args.w_list), "workers": args.workers})
        _print_sweep(body)
        return EXIT_OK if all(r["converged"] for r in body["rows"]) else EXIT_FAILURE
    raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    if args.command == "show-config":
        from .config import default_config_text

        print(default_config_text(), end="")
        return EXIT_OK
    if args.command == "serve":
        import uvicorn

        uvicorn.run("relbgk.service:app", host=args.host, port=args.port)
        return EXIT_OK

    try:
        run = _load(args)
        return _remote(args, run) if args.server else _local(args, run)
    except argparse.ArgumentTypeError as exc:
        print(f"relbgk: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CONFIG_ERRORS as exc:
        print(f"relbgk: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RelBGKError as exc:
        print(f"relbgk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except _RemoteError as exc:
        print(f"relbgk: server error ({exc.status}): {exc}", file=sys.stderr)
        return EXIT_CONFIG if exc.status in (400, 422) else EXIT_FAILURE
    except OSError as exc:
        print(f"relbgk: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def cli_main(argv: list[str] | None = None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
