"""End-to-end runs: chain the stages, hash every artifact, never lie about
partial output.

Three modes: FT_EXPORT writes the training JSONL and dataset card; RAG_EVAL
builds an index from non-holdout pairs, completes holdout queries through a
generation endpoint, and scores them; EVAL_ONLY scores an existing
predictions file.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from . import client, metrics, ragindex
from .config import PipelineConfig
from .errors import InvalidConfigError, StageError
from .ingest import IngestManifest, ingest_repository, write_manifest
from .pairs import (
    CompletionPair,
    PairKind,
    apply_filters,
    dataset_card,
    exclude_holdout,
    leakage_scan,
    make_primary_pair,
    make_random_start_pairs,
    pairs_sort_key,
    write_pairs,
)
from .scopes import extract_scopes, write_scopes

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    RAG_EVAL = "rag_eval"
    FT_EXPORT = "ft_export"
    EVAL_ONLY = "eval_only"


@dataclass
class StageRecord:
    stage: str
    status: str  # complete | failed
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)


@dataclass
class RunResult:
    mode: Mode
    out_dir: Path
    manifest_path: Path
    stages: list[StageRecord]


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class _Runner:
    def __init__(self, out_dir: Path, mode: Mode):
        self.out_dir = out_dir
        self.mode = mode
        self.stages: list[StageRecord] = []

    def run_stage(self, name: str, fn, inputs: dict[str, Path]):
        rec = StageRecord(
            stage=name,
            status="failed",
            inputs={k: _sha256_file(p) for k, p in inputs.items() if p.is_file()},
        )
        self.stages.append(rec)
        try:
            outputs = fn()
        except Exception as exc:
            self.write_manifest()
            raise StageError(name, exc) from exc
        rec.outputs = {str(p.relative_to(self.out_dir)): _sha256_file(p) for p in outputs}
        rec.status = "complete"
        return outputs

    def write_manifest(self) -> Path:
        path = self.out_dir / "run_manifest.json"
        payload = {
            "mode": self.mode.value,
            "stages": [
                {"stage": s.stage, "status": s.status, "inputs": s.inputs, "outputs": s.outputs}
                for s in self.stages
            ],
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _generate_all_pairs(
    manifest: IngestManifest, config: PipelineConfig
) -> list[CompletionPair]:
    """Scopes -> filters -> primary + random-start pairs, deterministic order."""
    records = manifest.record_by_id()
    pairs: list[CompletionPair] = []
    seen_content: set[str] = set()
    for rec in manifest.files:
        # files are content-addressed: a byte-identical copy elsewhere in the
        # repo would emit the exact same pairs, so process each content once
        if rec.file_id in seen_content:
            logger.info(
                "skipping %s: identical content already processed", rec.repo_relative_path
            )
            continue
        seen_content.add(rec.file_id)
        cands = extract_scopes(rec, config.logging_patterns)
        kept = apply_filters(cands, config.filters, records)
        for cand in kept:
            pairs.append(
                make_primary_pair(
                    cand,
                    rec.content,
                    config.filters,
                    config.eot_token,
                    include_closer=config.include_closing_delimiter,
                )
            )
            pairs.extend(
                make_random_start_pairs(
                    cand,
                    rec.content,
                    config.filters,
                    config.eot_token,
                    k=config.random_starts,
                    seed=config.seed,
                    include_closer=config.include_closing_delimiter,
                )
            )
    pairs.sort(key=pairs_sort_key)
    return pairs


def _stage_ingest(runner: _Runner, config: PipelineConfig) -> IngestManifest:
    holder: dict[str, IngestManifest] = {}

    def do():
        manifest = ingest_repository(
            config.repo_root,
            set(config.languages),
            config.exclude_globs,
            max_file_bytes=config.max_file_bytes,
        )
        holder["m"] = manifest
        path = write_manifest(manifest, runner.out_dir / "ingest")
        return [path]

    runner.run_stage("ingest", do, inputs={})
    return holder["m"]


def _stage_scopes_and_pairs(
    runner: _Runner, config: PipelineConfig, manifest: IngestManifest
) -> list[CompletionPair]:
    holder: dict[str, list[CompletionPair]] = {}
    scopes_path = runner.out_dir / "scopes.jsonl"
    ingest_manifest = runner.out_dir / "ingest" / "manifest.jsonl"

    def do_scopes():
        all_cands = []
        for rec in manifest.files:
            all_cands.extend(extract_scopes(rec, config.logging_patterns))
        write_scopes(all_cands, scopes_path)
        return [scopes_path]

    runner.run_stage("scopes", do_scopes, inputs={"manifest": ingest_manifest})

    pairs_path = runner.out_dir / "pairs_all.jsonl"

    def do_pairs():
        pairs = _generate_all_pairs(manifest, config)
        holder["p"] = pairs
        write_pairs(pairs, pairs_path)
        return [pairs_path]

    runner.run_stage("pairs", do_pairs, inputs={"scopes": scopes_path})
    return holder["p"]


def _split_holdout(
    pairs: list[CompletionPair], config: PipelineConfig, manifest: IngestManifest
) -> tuple[list[CompletionPair], list[CompletionPair]]:
    path_by_id = {r.file_id: r.repo_relative_path for r in manifest.files}
    train = exclude_holdout(pairs, config.holdout_paths, path_by_id)
    train_ids = {p.pair_id for p in train}
    held = [p for p in pairs if p.pair_id not in train_ids]
    return train, held


def _run_ft_export(runner: _Runner, config: PipelineConfig) -> None:
    manifest = _stage_ingest(runner, config)
    pairs = _stage_scopes_and_pairs(runner, config, manifest)
    train_path = runner.out_dir / "train_pairs.jsonl"
    card_path = runner.out_dir / "dataset_card.json"

    def do_export():
        train, _ = _split_holdout(pairs, config, manifest)
        write_pairs(train, train_path)
        card = dataset_card(
            train,
            config.filters,
            extra={
                "eot_token": config.eot_token,
                "random_starts": config.random_starts,
                "seed": config.seed,
                "holdout_paths": list(config.holdout_paths),
                "repo_root": str(config.repo_root),
            },
        )
        card_path.write_text(json.dumps(card, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return [train_path, card_path]

    runner.run_stage("ft_export", do_export, inputs={"pairs": runner.out_dir / "pairs_all.jsonl"})


def _run_rag_eval(runner: _Runner, config: PipelineConfig) -> None:
    if not config.generate_endpoint:
        raise InvalidConfigError(["rag_eval requires endpoints.generate"])
    if not config.holdout_paths:
        raise InvalidConfigError(["rag_eval requires pairs.holdout_paths (the test files)"])
    manifest = _stage_ingest(runner, config)
    pairs = _stage_scopes_and_pairs(runner, config, manifest)
    train, held = _split_holdout(pairs, config, manifest)
    tests = [p for p in held if p.kind is PairKind.PRIMARY]
    if not tests:
        raise StageError("rag_eval", ValueError("holdout files produced no test pairs"))

    embed_url = config.embed_endpoint()
    if embed_url:
        embedder = ragindex.RemoteEmbedder(embed_url, config.embedding_dimension)
    else:
        embedder = ragindex.HashingEmbedder(config.embedding_dimension)

    index_path = runner.out_dir / "train.index"
    train_primary = [p for p in train if p.kind is PairKind.PRIMARY]

    def do_index():
        index = ragindex.index_build(train_primary, embedder)
        index.save(index_path)
        return [index_path]

    runner.run_stage("index", do_index, inputs={"pairs": runner.out_dir / "pairs_all.jsonl"})
    index = ragindex.VectorIndex.load(index_path)

    leak_path = runner.out_dir / "leakage_report.jsonl"

    def do_leak():
        report = leakage_scan(train, [(p.pair_id, p.label) for p in tests], config.eot_token)
        with open(leak_path, "w", encoding="utf-8") as fh:
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
        if report.findings:
            logger.warning("leakage scan found %d finding(s)", len(report.findings))
        return [leak_path]

    runner.run_stage("leak_scan", do_leak, inputs={"pairs": runner.out_dir / "pairs_all.jsonl"})

    records_path = runner.out_dir / "eval_records.jsonl"
    report_path = runner.out_dir / "report.csv"
    predictions_path = runner.out_dir / "predictions.jsonl"

    def do_eval():
        prompts = []
        for p in tests:
            vec = embedder.embed(p.query)
            neighbors = ragindex.knn_search(index, vec, config.n_neighbors) if len(index) else []
            prompt = ragindex.augment_query(
                p.query, neighbors, index, config.n_neighbors, config.budget_bytes
            )
            prompts.append((p.pair_id, prompt))
        template = client.GenerationRequest(
            prompt="",
            max_new_tokens=config.gen_max_new_tokens,
            stop_sequences=(config.eot_token,),
            timeout=config.gen_timeout_s,
        )
        outcomes = client.batch_predict(config.generate_endpoint, prompts, template)
        with open(predictions_path, "w", encoding="utf-8") as fh:
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
        by_id = {p.pair_id: p for p in tests}
        evals = []
        for o in outcomes:
            if o.result is None:
                continue
            pair = by_id[o.test_id]
            evals.append((o.test_id, pair.category.value, o.result.text, pair.label_without_eot()))
        records = metrics.evaluate(evals)
        metrics.write_records(records, records_path)
        metrics.write_report_csv(metrics.aggregate_report(records), report_path)
        return [predictions_path, records_path, report_path]

    runner.run_stage("rag_eval", do_eval, inputs={"index": index_path})


def _run_eval_only(runner: _Runner, config: PipelineConfig) -> None:
    src = config.predictions_path
    if not src or not Path(src).is_file():
        raise InvalidConfigError(["eval_only requires predictions_path pointing at a JSONL file"])
    records_path = runner.out_dir / "eval_records.jsonl"
    report_path = runner.out_dir / "report.csv"

    def do():
        tests = metrics.read_tests_jsonl(src)
        records = metrics.evaluate(tests)
        metrics.write_records(records, records_path)
        metrics.write_report_csv(metrics.aggregate_report(records), report_path)
        return [records_path, report_path]

    runner.run_stage("eval_only", do, inputs={"predictions": Path(src)})


def run_pipeline(config: PipelineConfig, mode: Mode) -> RunResult:
    """Run one mode end to end under config.output_dir.

    Every stage's inputs and outputs land in run_manifest.json with sha256
    hashes; a failing stage is recorded as failed before the error
    propagates, so partial artifacts are never presented as complete.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = _Runner(out_dir, mode)
    if mode is Mode.FT_EXPORT:
        _run_ft_export(runner, config)
    elif mode is Mode.RAG_EVAL:
        _run_rag_eval(runner, config)
    elif mode is Mode.EVAL_ONLY:
        _run_eval_only(runner, config)
    else:
        raise InvalidConfigError([f"unknown mode {mode!r}"])
    manifest_path = runner.write_manifest()
    return RunResult(mode=mode, out_dir=out_dir, manifest_path=manifest_path, stages=runner.stages)


def _set_by_path(overrides: dict, dotted: str, value) -> dict:
    cur = overrides
    parts = dotted.split(".")
    for part in parts[:-1]:
        cur = cur.setdefault(part, {})
    cur[parts[-1]] = value
    return overrides


def run_sweep(config: PipelineConfig) -> list[dict]:
    """Grid over config.sweep (dotted filter keys -> value lists).

    Each grid point runs FT_EXPORT into its own subdirectory and its dataset
    card is collected into sweep_summary.json. Returns the summary rows.
    """
    if not config.sweep:
        raise InvalidConfigError(["sweep requires a non-empty sweep block"])
    keys = sorted(config.sweep)
    rows = []
    base_out = Path(config.output_dir)
    for i, combo in enumerate(itertools.product(*(config.sweep[k] for k in keys))):
        point = dict(zip(keys, combo))
        filt = config.filters
        for dotted, value in point.items():
            if dotted.startswith("filters."):
                name = dotted[len("filters.") :]
                if name == "category_allowlist" and value is not None:
                    from .scopes import ScopeCategory

                    value = frozenset(ScopeCategory(v) for v in value)
                if name == "exclude_keywords":
                    value = tuple(value)
                filt = replace(filt, **{name: value})
            else:
                raise InvalidConfigError([f"sweep only supports filters.* keys, got {dotted}"])
        filt.validate()
        sub = replace(config, filters=filt, output_dir=base_out / f"sweep_{i:03d}")
        result = run_pipeline(sub, Mode.FT_EXPORT)
        card = json.loads((result.out_dir / "dataset_card.json").read_text(encoding="utf-8"))
        rows.append({"point": point, "out_dir": str(result.out_dir), "card": card})
    summary = base_out / "sweep_summary.json"
    base_out.mkdir(parents=True, exist_ok=True)
    summary.write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return rows
