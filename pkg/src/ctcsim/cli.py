"""Command-line entry point: ``ctcsim run|demo|verify|list``.

Exit codes: 0 success, 1 configuration error, 2 Forbidden outcome with
``--fail-on-forbidden``, 3 verification-suite failure. Errors are written to
stderr as a JSON object with an ``error_kind`` field.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import sys
from dataclasses import replace

from .errors import ConfigError, CtcSimError
from .scenarios import MODELS, ScenarioConfig, builtin_scenarios, get_scenario, run_scenario
from .verify import SUITES, parse_layout, run_suite

EXIT_OK, EXIT_CONFIG, EXIT_FORBIDDEN, EXIT_VERIFY = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors, which would collide with the Forbidden code
    def error(self, message):
        sys.stderr.write(json.dumps({"error_kind": "usage", "message": message}) + "\n")
        self.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ctcsim", description="Simulate circuits with closed-timelike-curve wires.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--output", "-o", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)

    def scenario_flags(sp):
        common(sp)
        sp.add_argument("--model", choices=MODELS, default=None, help="override the configured model")
        sp.add_argument("--fail-on-forbidden", action="store_true",
                        help="exit 2 if any P-CTC outcome is Forbidden")

    run = sub.add_parser("run", help="run a scenario from a JSON config file")
    run.add_argument("config")
    scenario_flags(run)

    demo = sub.add_parser("demo", help="run a builtin scenario")
    demo.add_argument("name")
    scenario_flags(demo)

    ver = sub.add_parser("verify", help="run a randomized verification suite")
    ver.add_argument("--suite", required=True, choices=sorted(SUITES))
    ver.add_argument("--trials", type=int, default=None)
    ver.add_argument("--dims", nargs="+", default=None,
                     help="pctc-oracle: layouts like 2,2|2; pathint-equivalence: d_sys,d_ctc,steps")
    common(ver)

    lst = sub.add_parser("list", help="list builtin scenarios and suites")
    lst.add_argument("--output", "-o")
    lst.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def _load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise CliError("config_not_found", f"no such config file: {path}")
    except json.JSONDecodeError as exc:
        raise CliError("config_invalid", f"{path}: not valid JSON ({exc})")
    if isinstance(data, dict) and "config" in data:  # a previously written report
        data = data["config"]
    try:
        return ScenarioConfig.from_dict(data)
    except CtcSimError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CliError("config_invalid", f"{path}: {exc!r}")


def _overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    kw = {}
    if args.model is not None:
        kw["model"] = args.model
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.tol is not None:
        kw["tolerance"] = args.tol
    return replace(cfg, **kw) if kw else cfg


def _csv(rows: list[dict]) -> str:
    keys: list[str] = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError("output_unwritable", f"cannot write {path}: {exc}")


def _scenario(cfg: ScenarioConfig, args) -> int:
    out = run_scenario(cfg)
    reports = list(out) if isinstance(out, tuple) else [out]
    if args.format == "csv":
        text = _csv([r.summary_row() for r in reports])
    else:
        text = json.dumps({"config": cfg.to_dict(), "reports": [r.to_dict() for r in reports]}, indent=2)
    _emit(text, args.output)
    if args.fail_on_forbidden and any(r.forbidden for r in reports):
        return EXIT_FORBIDDEN
    return EXIT_OK


def _suite_kwargs(args) -> dict:
    fn = SUITES[args.suite]
    params = inspect.signature(fn).parameters
    kw = {"trials": args.trials, "seed": args.seed}
    if args.tol is not None:
        if "tol" not in params:
            raise CliError("config_invalid", f"suite {args.suite} takes no tolerance")
        kw["tol"] = args.tol
    if args.dims:
        if "layouts" in params:
            for text in args.dims:
                parse_layout(text)
            kw["layouts"] = tuple(args.dims)
        elif "sizes" in params:
            try:
                kw["sizes"] = tuple(tuple(int(x) for x in t.split(",")) for t in args.dims)
            except ValueError:
                raise CliError("config_invalid", f"bad --dims {args.dims}; expected d_sys,d_ctc,steps")
            if any(len(s) != 3 for s in kw["sizes"]):
                raise CliError("config_invalid", "each --dims entry needs d_sys,d_ctc,steps")
        else:
            raise CliError("config_invalid", f"suite {args.suite} takes no --dims")
    return kw


def _verify(args) -> int:
    result = run_suite(args.suite, **_suite_kwargs(args))
    if args.format == "csv":
        text = _csv([{k: v for k, v in result.items() if not isinstance(v, (list, dict, tuple))}])
    else:
        text = json.dumps(result, indent=2, default=float)
    _emit(text, args.output)
    return EXIT_OK if result["passed"] else EXIT_VERIFY


def _list(args) -> int:
    rows = [{"type": "scenario", "name": c.name, "model": c.model, "description": c.description}
            for c in builtin_scenarios()]
    rows += [{"type": "suite", "name": s, "model": "", "description": SUITES[s].__doc__ or ""}
             for s in sorted(SUITES)]
    text = _csv(rows) if args.format == "csv" else json.dumps(rows, indent=2)
    _emit(text, args.output)
    return EXIT_OK


def _fail(kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error_kind": kind, "message": message}) + "\n")
    return EXIT_CONFIG


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already reported
        return int(exc.code or 0)
    try:
        if args.command == "list":
            return _list(args)
        if args.command == "verify":
            return _verify(args)
        if args.command == "run":
            cfg = _load_config(args.config)
        else:
            try:
                cfg = get_scenario(args.name)
            except ConfigError as exc:
                raise CliError("unknown_scenario", str(exc))
        return _scenario(_overrides(cfg, args), args)
    except CliError as exc:
        return _fail(exc.kind, str(exc))
    except CtcSimError as exc:
        return _fail(exc.kind, str(exc))


if __name__ == "__main__":
    sys.exit(main())
