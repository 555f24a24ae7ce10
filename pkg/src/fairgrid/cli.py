"""Command-line interface.

Verbs: ``run`` executes a manifest against a CSV dataset and writes the
quality report plus the serialized best model; ``validate`` checks a
manifest against the workflow model; ``generate`` compiles a configuration
document into a manifest; ``serve`` starts the REST service; ``compare``
runs the Kruskal-Wallis test between two quality reports, metric by metric.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 execution
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, bench, manifest, metrics
from .data import CsvError, SchemaError, bind_schema, parse_csv
from .extfm import Configuration, UnknownFeatureError, load_feature_model

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_EXECUTION = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2
    # for validation failures, so route usage problems through exit code 1.
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="fairgrid", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fairgrid {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="execute a manifest against a dataset")
    run.add_argument("-m", "--manifest", required=True, type=Path)
    run.add_argument("-d", "--dataset", required=True, type=Path)
    run.add_argument("-o", "--outdir", required=True, type=Path)
    run.add_argument("--seed", type=int, default=None, help="override the manifest seed")

    val = sub.add_parser("validate", help="check a manifest against the workflow model")
    val.add_argument("-m", "--manifest", required=True, type=Path)

    gen = sub.add_parser("generate", help="compile a configuration document into a manifest")
    gen.add_argument("-c", "--config", required=True, type=Path,
                     help="JSON configuration document (selected features + attributes)")
    gen.add_argument("-o", "--output", required=True, type=Path)
    gen.add_argument("--emit-script", type=Path, default=None,
                     help="also write a shell wrapper that runs the manifest")
    gen.add_argument("--created", default=None,
                     help="pin the provenance timestamp (ISO-8601) for reproducible bytes")

    env = os.environ
    srv = sub.add_parser(
        "serve",
        help="start the REST service",
        description="Flags fall back to FAIRGRID_* environment variables.",
    )
    srv.add_argument("--host", default=env.get("FAIRGRID_HOST", "127.0.0.1"))
    srv.add_argument("--port", type=int, default=int(env.get("FAIRGRID_PORT", "8000")))
    srv.add_argument("--data-dir", type=Path,
                     default=Path(env.get("FAIRGRID_DATA_DIR", "fairgrid-data")))
    srv.add_argument("--workers", type=int, default=int(env.get("FAIRGRID_WORKERS", "2")))
    srv.add_argument("--upload-limit", type=int,
                     default=int(env.get("FAIRGRID_UPLOAD_LIMIT", str(10 * 1024 * 1024))),
                     help="maximum upload size in bytes")
    srv.add_argument("--retention", type=float,
                     default=float(env["FAIRGRID_RETENTION"]) if "FAIRGRID_RETENTION" in env else None,
                     help="prune completed jobs older than this many seconds")
    srv.add_argument("--cors", action="store_true",
                     default=env.get("FAIRGRID_CORS", "") == "1",
                     help="allow cross-origin requests")
    srv.add_argument("--frontend", type=Path,
                     default=Path(env["FAIRGRID_FRONTEND"]) if "FAIRGRID_FRONTEND" in env else None,
                     help="serve a built web UI from this directory")

    cmp_ = sub.add_parser("compare", help="Kruskal-Wallis test between two quality reports")
    cmp_.add_argument("-a", "--report-a", required=True, type=Path)
    cmp_.add_argument("-b", "--report-b", required=True, type=Path)
    return parser


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from exc


def _cmd_run(args) -> int:
    model = load_feature_model(None)
    try:
        spec = manifest.parse_manifest(_read(args.manifest), model, seed_override=args.seed)
    except manifest.ManifestError as exc:
        print(f"invalid manifest: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        table = parse_csv(_read(args.dataset))
        bound = bind_schema(table, spec.schema)
        report = bench.run_experiment(spec, bound)
        final = bench.finalize(spec, bound, report.best)
    except (CsvError, SchemaError, bench.ExperimentError, ValueError) as exc:
        print(f"execution failed: {exc}", file=sys.stderr)
        return EXIT_EXECUTION

    args.outdir.mkdir(parents=True, exist_ok=True)
    (args.outdir / "report.csv").write_bytes(bench.report_csv(report))
    (args.outdir / "model.fbm").write_bytes(bench.serialize_model(final))
    result_doc = bench.report_to_dict(report)
    (args.outdir / "result.json").write_text(
        json.dumps(result_doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    scaler, learner, method = report.best.as_tuple()
    print(f"best combination: scaler={scaler} model={learner} method={method}")
    for flag in report.flags:
        print(f"note: {flag}", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args) -> int:
    model = load_feature_model(None)
    try:
        manifest.parse_manifest(_read(args.manifest), model)
    except manifest.ManifestError as exc:
        if exc.violations:
            for reason in exc.violations:
                print(reason, file=sys.stderr)
        else:
            print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    print("manifest is valid")
    return EXIT_OK


def _cmd_generate(args) -> int:
    model = load_feature_model(None)
    try:
        doc = json.loads(_read(args.config).decode("utf-8"))
        config = Configuration.of(doc.get("selected", []), doc.get("attributes", {}))
    except (json.JSONDecodeError, UnicodeDecodeError, AttributeError) as exc:
        print(f"cannot parse configuration document: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        blob = manifest.generate_manifest(model, config, created=args.created)
    except (manifest.ManifestError, UnknownFeatureError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_bytes(blob)
    print(f"wrote {args.output}")
    if args.emit_script is not None:
        script = (
            "#!/bin/sh\n"
            '# Runs the generated experiment: ./run.sh <dataset.csv> <output dir>\n'
            f'exec fairgrid run -m "{args.output.name}" -d "$1" -o "${{2:-out}}"\n'
        )
        args.emit_script.write_text(script, encoding="utf-8")
        args.emit_script.chmod(0o755)
        print(f"wrote {args.emit_script}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import ServerConfig, create_app

    app = create_app(
        ServerConfig(
            data_dir=args.data_dir,
            workers=args.workers,
            upload_limit=args.upload_limit,
            retention_seconds=args.retention,
            cors=args.cors,
            frontend_dir=args.frontend,
        )
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _report_metric_columns(blob: bytes) -> tuple[dict[str, list[float]], int]:
    """Metric-mean columns of a quality report, keyed by short code."""
    lines = blob.decode("utf-8").strip().split("\n")
    if len(lines) < 2:
        raise ValueError("report has no data rows")
    header = lines[0].split(",")
    columns: dict[str, list[float]] = {}
    for i, name in enumerate(header):
        if not name.endswith("_mean"):
            continue
        code = name[: -len("_mean")]
        values = []
        for line in lines[1:]:
            cell = line.split(",")[i]
            if cell != "NA":
                values.append(float(cell))
        columns[code] = values
    return columns, len(lines) - 1


def _cmd_compare(args) -> int:
    try:
        cols_a, rows_a = _report_metric_columns(_read(args.report_a))
        cols_b, rows_b = _report_metric_columns(_read(args.report_b))
    except ValueError as exc:
        print(f"cannot parse report: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    shared = [c for c in cols_a if c in cols_b]
    if not shared:
        print("the reports share no metric columns", file=sys.stderr)
        return EXIT_VALIDATION
    if rows_a < 2 or rows_b < 2:
        print("each report needs at least two combination rows", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"{'metric':<10} {'H':>10} {'p':>10}  significant(0.05)")
    for code in shared:
        a, b = cols_a[code], cols_b[code]
        if not a or not b:
            print(f"{code:<10} {'NA':>10} {'NA':>10}  (undefined in a report)")
            continue
        h, p = metrics.kruskal_wallis([a, b])
        print(f"{code:<10} {h:>10.4f} {p:>10.4f}  {'yes' if p < 0.05 else 'no'}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handlers = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "generate": _cmd_generate,
        "serve": _cmd_serve,
        "compare": _cmd_compare,
    }
    try:
        return handlers[args.verb](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
