"""Command-line entry point.

Subcommands mirror the pipeline stages so each can run and be inspected in
isolation; `run` chains them. Exit codes: 0 success, 2 configuration
problem, 1 any other failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import PipelineConfig, load_config
from .errors import InvalidConfigError, ScopekitError
from .ingest import DEFAULT_MAX_FILE_BYTES, Language, ingest_repository, load_manifest, write_manifest
from .metrics import aggregate_report, evaluate, read_tests_jsonl, write_records, write_report_csv
from .pairs import (
    DEFAULT_EOT_TOKEN,
    FilterConfig,
    apply_filters,
    exclude_holdout,
    leakage_scan,
    make_primary_pair,
    make_random_start_pairs,
    pairs_sort_key,
    read_pairs,
    write_pairs,
)
from .pipeline import Mode, run_pipeline, run_sweep
from .ragindex import HashingEmbedder, RemoteEmbedder, VectorIndex, augment_query, index_build, knn_search
from .scopes import extract_scopes, read_scopes, write_scopes

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _existing_config(path: str | None) -> PipelineConfig | None:
    return load_config(path) if path else None


def _make_embedder(spec: str, dimension: int):
    if spec == "builtin":
        return HashingEmbedder(dimension)
    if spec.startswith("remote:"):
        return RemoteEmbedder(spec[len("remote:") :], dimension)
    raise InvalidConfigError([f"embedder must be 'builtin' or 'remote:<url>', got {spec!r}"])


def _cmd_ingest(args) -> int:
    cfg = _existing_config(args.config)
    root = args.root or (cfg.repo_root if cfg else None)
    if not root:
        raise InvalidConfigError(["--root (or a config with repo_root) is required"])
    languages = (
        {Language(v) for v in args.lang.split(",")}
        if args.lang
        else set(cfg.languages)
        if cfg
        else {Language.C_CPP, Language.JAVA}
    )
    excludes = tuple(args.exclude or (cfg.exclude_globs if cfg else ()))
    manifest = ingest_repository(
        root,
        languages,
        excludes,
        max_file_bytes=args.max_file_bytes
        or (cfg.max_file_bytes if cfg else DEFAULT_MAX_FILE_BYTES),
    )
    path = write_manifest(manifest, args.out)
    print(f"ingested {len(manifest.files)} files -> {path}")
    for lang, n in sorted(manifest.counts.items()):
        print(f"  {lang}: {n}")
    return EXIT_OK


def _cmd_scopes(args) -> int:
    cfg = _existing_config(args.config)
    manifest = load_manifest(args.manifest)
    patterns = tuple(args.logging_pattern or (cfg.logging_patterns if cfg else ())) or None
    all_cands = []
    diagnostics: list[str] = []
    for rec in manifest.files:
        all_cands.extend(extract_scopes(rec, patterns, diagnostics=diagnostics))
    write_scopes(all_cands, args.out)
    for d in diagnostics:
        print(f"warning: {d}", file=sys.stderr)
    print(f"extracted {len(all_cands)} scope candidates -> {args.out}")
    return EXIT_OK


def _filter_from_args(args, cfg: PipelineConfig | None) -> FilterConfig:
    base = cfg.filters if cfg else FilterConfig()
    overrides = {}
    for name in ("min_scope_bytes", "max_scope_bytes", "min_prefix_bytes", "max_prefix_bytes", "max_depth"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        import dataclasses

        base = dataclasses.replace(base, **overrides)
    base.validate()
    return base


def _cmd_pairs(args) -> int:
    cfg = _existing_config(args.config)
    manifest = load_manifest(args.manifest)
    candidates = read_scopes(args.scopes)
    filters = _filter_from_args(args, cfg)
    records = manifest.record_by_id()
    kept = apply_filters(candidates, filters, records)
    eot = args.eot_token or (cfg.eot_token if cfg else DEFAULT_EOT_TOKEN)
    k = args.random_starts if args.random_starts is not None else (cfg.random_starts if cfg else 1)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    include_closer = cfg.include_closing_delimiter if cfg else True
    pairs = []
    for cand in kept:
        content = records[cand.file_id].content
        pairs.append(make_primary_pair(cand, content, filters, eot, include_closer=include_closer))
        pairs.extend(
            make_random_start_pairs(
                cand, content, filters, eot, k=k, seed=seed, include_closer=include_closer
            )
        )
    holdout = list(cfg.holdout_paths) if cfg else []
    if args.holdout:
        holdout = [line.strip() for line in Path(args.holdout).read_text(encoding="utf-8").splitlines() if line.strip()]
    if holdout:
        path_by_id = {r.file_id: r.repo_relative_path for r in manifest.files}
        pairs = exclude_holdout(pairs, holdout, path_by_id)
    pairs.sort(key=pairs_sort_key)
    write_pairs(pairs, args.out)
    print(f"wrote {len(pairs)} pairs -> {args.out}")
    return EXIT_OK


def _cmd_leak_scan(args) -> int:
    train = read_pairs(args.train)
    tests = []
    with open(args.tests, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            test_id = d.get("pair_id") or d.get("test_id") or "?"
            label = d.get("label") if d.get("label") is not None else d.get("ground_truth", "")
            tests.append((str(test_id), label))
    report = leakage_scan(train, tests, args.eot_token)
    with open(args.out, "w", encoding="utf-8") as fh:
        for f in report.findings:
            fh.write(
                json.dumps(
                    {
                        "test_pair_id": f.test_pair_id,
                        "training_pair_id": f.training_pair_id,
                        "match_kind": f.match_kind,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    print(f"{len(report.findings)} leakage finding(s) -> {args.out}")
    return EXIT_OK


def _cmd_index_build(args) -> int:
    pairs = [p for p in read_pairs(args.pairs) if p.kind.value == "primary"]
    embedder = _make_embedder(args.embedder, args.dimension)
    index = index_build(pairs, embedder)
    index.save(args.out)
    print(f"indexed {len(index)} entries (dim {index.dimension}) -> {args.out}")
    return EXIT_OK


def _cmd_index_query(args) -> int:
    index = VectorIndex.load(args.index)
    embedder = _make_embedder(args.embedder, index.dimension)
    if embedder.embedder_id != index.embedder_id:
        raise InvalidConfigError(
            [f"index was built with {index.embedder_id!r}, queries need that embedder, got {embedder.embedder_id!r}"]
        )
    query = sys.stdin.read()
    vec = embedder.embed(query)
    results = knn_search(index, vec, args.top)
    print(json.dumps([{"pair_id": pid, "similarity": sim} for pid, sim in results], indent=2))
    if args.augment:
        print(augment_query(query, results, index, args.top, args.budget_bytes))
    return EXIT_OK


def _cmd_predict(args) -> int:
    from .client import GenerationRequest, batch_predict

    tests = []
    with open(args.tests, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                tests.append((str(d["test_id"]), d["prompt"]))
    template = GenerationRequest(
        prompt="",
        max_new_tokens=args.max_new_tokens,
        stop_sequences=tuple(args.stop or (DEFAULT_EOT_TOKEN,)),
        temperature=args.temperature,
        timeout=args.timeout,
    )
    outcomes = batch_predict(args.endpoint, tests, template, max_in_flight=args.max_in_flight)
    with open(args.out, "w", encoding="utf-8") as fh:
        for o in outcomes:
            fh.write(
                json.dumps(
                    {
                        "test_id": o.test_id,
                        "text": o.result.text if o.result else None,
                        "latency_s": o.result.latency_s if o.result else None,
                        "stop_reason": o.result.stop_reason.value if o.result else None,
                        "error": o.error,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
    failures = sum(1 for o in outcomes if o.error)
    print(f"{len(outcomes) - failures} prediction(s), {failures} failure(s) -> {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    tests = read_tests_jsonl(args.tests)
    records = evaluate(tests, normalize=args.normalize == "ws", as_bytes=args.bytes)
    write_records(records, args.out)
    reports = aggregate_report(records)
    write_report_csv(reports, args.report)
    for r in reports:
        print(
            f"{r.category}: n={r.n_tests} mean_opt={r.mean_opt:.2f} median_opt={r.median_opt:.2f} "
            f"mean_full={r.mean_full:.2f} median_full={r.median_full:.2f}"
        )
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.predictions:
        import dataclasses

        cfg = dataclasses.replace(cfg, predictions_path=Path(args.predictions))
    result = run_pipeline(cfg, Mode(args.mode))
    print(f"run complete -> {result.manifest_path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    rows = run_sweep(cfg)
    print(f"swept {len(rows)} grid point(s) -> {Path(cfg.output_dir) / 'sweep_summary.json'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scopekit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"scopekit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="walk a repository into a content-addressed manifest")
    p.add_argument("--root", help="repository root directory")
    p.add_argument("--lang", help="comma-separated languages (c_cpp,java)")
    p.add_argument("--exclude", action="append", help="exclude glob (repeatable)")
    p.add_argument("--max-file-bytes", type=int, dest="max_file_bytes")
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("scopes", help="extract scope candidates from an ingest manifest")
    p.add_argument("--manifest", required=True, help="manifest.jsonl or its directory")
    p.add_argument("--logging-pattern", action="append", dest="logging_pattern")
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_scopes)

    p = sub.add_parser("pairs", help="filter scopes and emit training pairs")
    p.add_argument("--scopes", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--holdout", help="file listing repo-relative holdout paths")
    p.add_argument("--random-starts", type=int, dest="random_starts")
    p.add_argument("--seed", type=int)
    p.add_argument("--eot-token", dest="eot_token")
    for name in ("min-scope-bytes", "max-scope-bytes", "min-prefix-bytes", "max-prefix-bytes", "max-depth"):
        p.add_argument(f"--{name}", type=int, dest=name.replace("-", "_"))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_pairs)

    p = sub.add_parser("leak-scan", help="scan training pairs for test-label leakage")
    p.add_argument("--train", required=True, help="training pairs JSONL")
    p.add_argument("--tests", required=True, help="JSONL with pair_id/test_id and label/ground_truth")
    p.add_argument("--eot-token", dest="eot_token", default=DEFAULT_EOT_TOKEN)
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_leak_scan)

    p = sub.add_parser("index", help="build or query a retrieval index")
    isub = p.add_subparsers(dest="index_command", required=True)
    b = isub.add_parser("build")
    b.add_argument("--pairs", required=True)
    b.add_argument("--embedder", default="builtin")
    b.add_argument("--dimension", type=int, default=384)
    b.add_argument("--config", help="pipeline config file")
    b.add_argument("--out", required=True)
    b.set_defaults(fn=_cmd_index_build)
    q = isub.add_parser("query")
    q.add_argument("--index", required=True)
    q.add_argument("--embedder", default="builtin")
    q.add_argument("--top", type=int, default=3)
    q.add_argument("--augment", action="store_true", help="print the augmented prompt")
    q.add_argument("--budget-bytes", type=int, dest="budget_bytes", default=6144)
    q.add_argument("--config", help="pipeline config file")
    q.set_defaults(fn=_cmd_index_query)

    p = sub.add_parser("predict", help="send prompts to a generation endpoint")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--tests", required=True, help="JSONL of {test_id, prompt}")
    p.add_argument("--max-new-tokens", type=int, dest="max_new_tokens", default=256)
    p.add_argument("--stop", action="append")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--timeout", type=float, default=120.0)
    p.add_argument("--max-in-flight", type=int, dest="max_in_flight", default=4)
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("eval", help="score predictions against ground truths")
    p.add_argument("--tests", required=True, help="JSONL of {test_id, category, prediction, ground_truth}")
    p.add_argument("--normalize", choices=["ws"], help="whitespace normalization")
    p.add_argument("--bytes", action="store_true", help="byte-level distances")
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--out", required=True, help="eval records JSONL")
    p.add_argument("--report", required=True, help="per-category CSV")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("run", help="run a full pipeline mode")
    p.add_argument("--config", required=True)
    p.add_argument("--mode", required=True, choices=[m.value for m in Mode])
    p.add_argument("--predictions", help="predictions JSONL for eval_only")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="grid-run FT exports over filter settings")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except InvalidConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except ScopekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
