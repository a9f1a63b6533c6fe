"""Command-line surface: run built-in examples, check model files, merge reports.

Exit codes: 0 pass, 1 check failure, 2 usage error, 3 input/parse error.
Reports are deterministic: fixed summation order, sorted keys, no wall-clock
data in payloads, so identical invocations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import characters, symbolalg
from .geometry import ScanGrid, augmented_symbol, builtin_model, ellipticity_scan
from .modelfile import ModelParseError, parse_model_file
from .quadrature import (
    TEST_FUNCTIONS,
    DeltaReport,
    QuadratureSpec,
    delta_pairing,
    index_character,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INPUT = 3

SCHEMA_VERSION = "1"


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _report_document(runs: list[dict]) -> dict:
    return {"schema_version": SCHEMA_VERSION, "generated_by": "equichern",
            "runs": runs}


def load_schema() -> dict:
    return json.loads(resources.files("equichern")
                      .joinpath("report_schema.json").read_text())


def validate_report(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(doc, load_schema())


def _run_c_plane(args, out_dir: Path) -> int:
    model = builtin_model("c-plane-uv")
    spec = QuadratureSpec(gh_order=args.gh_order)
    report = index_character(model, theta_samples=args.theta_samples, spec=spec,
                             fourier_window=args.fourier_window)
    golden_dev = 0.0
    for t, v in zip(report.theta_samples, report.values):
        ref = -np.exp(1j * t) / (1 - np.exp(1j * t))
        golden_dev = max(golden_dev, abs(v - complex(ref)))
    fourier_dev = 0.0
    for n in range(-args.fourier_window, args.fourier_window + 1):
        target = -1.0 if n >= 1 else 0.0
        fourier_dev = max(fourier_dev, abs(report.fourier.coeff(n) - target))
    passed = golden_dev < args.tol and fourier_dev < 1e-4
    payload = report.to_dict()
    payload["golden"] = {
        "value_deviation": golden_dev,
        "value_tolerance": args.tol,
        "fourier_deviation": fourier_dev,
        "fourier_tolerance": 1e-4,
        "passed": bool(passed),
    }
    _write_json(out_dir / "index_report.json",
                _report_document([{"kind": "index-character", "label": "c-plane",
                                   "payload": payload}]))
    csv_text = characters.series_to_csv(report.fourier)
    (out_dir / "fourier.csv").write_text(csv_text, encoding="utf-8")
    print(f"c-plane: value deviation {golden_dev:.3e} (tol {args.tol:g}), "
          f"fourier deviation {fourier_dev:.3e} (tol 1e-04): "
          f"{'PASS' if passed else 'FAIL'}")
    return EXIT_PASS if passed else EXIT_FAIL


def _run_zero_op(args, out_dir: Path) -> int:
    model = builtin_model("zero-op")
    try:
        test_fn = TEST_FUNCTIONS[args.test]
    except KeyError:
        print(f"unknown test function {args.test!r}; "
              f"choose from {sorted(TEST_FUNCTIONS)}", file=sys.stderr)
        return EXIT_USAGE
    eps = [float(e) for e in args.eps.split(",")]
    report: DeltaReport = delta_pairing(model, test_fn, eps)
    err = abs(report.extrapolated - report.test_at_zero)
    passed = err < args.tol
    payload = report.to_dict()
    payload["golden"] = {"extrapolation_error": err, "tolerance": args.tol,
                         "passed": bool(passed)}
    _write_json(out_dir / "delta_report.json",
                _report_document([{"kind": "delta-pairing", "label": "zero-op",
                                   "payload": payload}]))
    for e, v in zip(report.eps, report.values):
        print(f"  eps={e:<8g} paired value = {v.real:+.8f}{v.imag:+.2e}j")
    print(f"zero-op: extrapolated {report.extrapolated.real:.8f} vs "
          f"test(0) = {report.test_at_zero.real:.8f}, error {err:.3e} "
          f"(tol {args.tol:g}): {'PASS' if passed else 'FAIL'}")
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_run_example(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.name == "c-plane":
        return _run_c_plane(args, out_dir)
    if args.name == "zero-op":
        return _run_zero_op(args, out_dir)
    print(f"unknown example {args.name!r}; choose c-plane or zero-op",
          file=sys.stderr)
    return EXIT_USAGE


def cmd_check_symbol(args) -> int:
    try:
        model = parse_model_file(args.model_file)
    except FileNotFoundError:
        print(f"model file not found: {args.model_file}", file=sys.stderr)
        return EXIT_INPUT
    except ModelParseError as exc:
        print(f"{args.model_file}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    transversal = symbolalg.transversal_ellipticity_check(
        model, grid=symbolalg.GridSpec(r_max=args.xi_max))
    scan = ellipticity_scan(augmented_symbol(model),
                            ScanGrid(samples=args.scan_samples, seed=args.seed,
                                     threshold=args.tol))
    passed = transversal.passed and scan.passed
    payload = {"model": model.name,
               "transversal_ellipticity": transversal.to_dict(),
               "ellipticity_scan": scan.to_dict(),
               "passed": bool(passed)}
    _write_json(out_dir / "symbol_report.json",
                _report_document([{"kind": "symbol-check", "label": model.name,
                                   "payload": payload}]))
    print(f"{model.name}: transversality "
          f"{'PASS' if transversal.passed else 'FAIL'}, ellipticity scan "
          f"{'PASS' if scan.passed else 'FAIL'}")
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_report(args) -> int:
    runs = []
    for path in args.inputs:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            print(f"missing input: {path}", file=sys.stderr)
            return EXIT_INPUT
        except json.JSONDecodeError as exc:
            print(f"{path}: invalid JSON: {exc}", file=sys.stderr)
            return EXIT_INPUT
        if doc.get("schema_version") != SCHEMA_VERSION:
            print(f"{path}: unsupported schema version", file=sys.stderr)
            return EXIT_INPUT
        runs.extend(doc.get("runs", []))
    runs.sort(key=lambda r: (r.get("kind", ""), r.get("label", "")))
    doc = _report_document(runs)
    validate_report(doc)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        _write_json(out_dir / "merged_report.json", doc)
    else:
        rows = ["kind,label,passed"]
        for r in runs:
            passed = r.get("payload", {}).get("passed",
                                              r.get("payload", {})
                                              .get("golden", {}).get("passed", ""))
            rows.append(f"{r.get('kind','')},{r.get('label','')},{passed}")
        (out_dir / "merged_report.csv").write_text("\n".join(rows) + "\n",
                                                   encoding="utf-8")
    print(f"merged {len(runs)} run(s) into {out_dir}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equichern",
        description="equivariant Chern characters and index characters "
                    "of orbitally augmented symbols")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run-example", help="run a built-in worked example")
    run.add_argument("name", help="c-plane or zero-op")
    run.add_argument("--theta-samples", type=int, default=32)
    run.add_argument("--fourier-window", type=int, default=16)
    run.add_argument("--gh-order", type=int, default=24)
    run.add_argument("--eps", default="1e-2,1e-3,1e-4",
                     help="comma-separated regularization values (zero-op)")
    run.add_argument("--test", default="gaussian",
                     help="test function name (zero-op)")
    run.add_argument("--tol", type=float, default=1e-4)
    run.add_argument("--out-dir", default=".")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.set_defaults(func=cmd_run_example)

    chk = sub.add_parser("check-symbol", help="symbol-algebra and ellipticity checks")
    chk.add_argument("model_file")
    chk.add_argument("--xi-max", type=float, default=1e3)
    chk.add_argument("--scan-samples", type=int, default=2000)
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--tol", type=float, default=1e-6)
    chk.add_argument("--out-dir", default=".")
    chk.add_argument("--format", choices=("json", "csv"), default="json")
    chk.set_defaults(func=cmd_check_symbol)

    rep = sub.add_parser("report", help="merge prior run reports")
    rep.add_argument("--inputs", nargs="+", required=True)
    rep.add_argument("--format", choices=("json", "csv"), default="json")
    rep.add_argument("--out-dir", default=".")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
