"""Pipeline configuration: one JSON file drives every stage.

Validation collects every violation before failing, so a bad config is
fixed in one round trip instead of one field at a time.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidConfigError
from .ingest import DEFAULT_MAX_FILE_BYTES, Language
from .pairs import DEFAULT_EOT_TOKEN, FilterConfig
from .scopes import DEFAULT_LOGGING_PATTERNS, ScopeCategory


@dataclass
class PipelineConfig:
    repo_root: Path
    output_dir: Path
    languages: tuple[Language, ...] = (Language.C_CPP, Language.JAVA)
    exclude_globs: tuple[str, ...] = ()
    max_file_bytes: int = DEFAULT_MAX_FILE_BYTES
    filters: FilterConfig = field(default_factory=FilterConfig)
    logging_patterns: tuple[str, ...] = DEFAULT_LOGGING_PATTERNS
    include_closing_delimiter: bool = True
    random_starts: int = 1
    seed: int = 0
    eot_token: str = DEFAULT_EOT_TOKEN
    holdout_paths: tuple[str, ...] = ()
    embedder: str = "builtin"  # "builtin" or "remote:<url>"
    embedding_dimension: int = 384
    n_neighbors: int = 3
    budget_bytes: int = 6144
    generate_endpoint: str | None = None
    gen_max_new_tokens: int = 256
    gen_timeout_s: float = 120.0
    predictions_path: Path | None = None  # EVAL_ONLY input
    sweep: dict[str, list] = field(default_factory=dict)

    def embed_endpoint(self) -> str | None:
        if self.embedder.startswith("remote:"):
            return self.embedder[len("remote:") :]
        return None


_FILTER_KEYS = {
    "min_scope_bytes", "max_scope_bytes", "min_prefix_bytes", "max_prefix_bytes",
    "max_depth", "category_allowlist", "exclude_keywords", "modified_after",
}

_TOP_KEYS = {
    "repo_root", "output_dir", "languages", "exclude_globs", "max_file_bytes",
    "filters", "pairs", "rag", "endpoints", "generation", "sweep", "predictions_path",
}


def _parse_filters(raw: dict, problems: list[str]) -> FilterConfig:
    unknown = set(raw) - _FILTER_KEYS
    if unknown:
        problems.append(f"filters: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key in _FILTER_KEYS & set(raw):
        kwargs[key] = raw[key]
    if "category_allowlist" in kwargs and kwargs["category_allowlist"] is not None:
        cats = []
        for name in kwargs["category_allowlist"]:
            try:
                cats.append(ScopeCategory(name))
            except ValueError:
                problems.append(f"filters.category_allowlist: unknown category {name!r}")
        kwargs["category_allowlist"] = frozenset(cats)
    if "exclude_keywords" in kwargs:
        kwargs["exclude_keywords"] = tuple(kwargs["exclude_keywords"])
    try:
        cfg = FilterConfig(**kwargs)
        cfg.validate()
        return cfg
    except InvalidConfigError as exc:
        problems.extend(exc.problems)
        return FilterConfig()
    except TypeError as exc:
        problems.append(f"filters: {exc}")
        return FilterConfig()


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a config file; raises InvalidConfigError listing
    every problem found."""
    p = Path(path)
    problems: list[str] = []
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InvalidConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as exc:
        raise InvalidConfigError([f"config is not valid JSON: {exc}"])
    if not isinstance(raw, dict):
        raise InvalidConfigError(["config root must be a JSON object"])

    unknown = set(raw) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown top-level keys {sorted(unknown)}")

    repo_root = raw.get("repo_root")
    if not repo_root:
        problems.append("repo_root is required")
        root_path = Path(".")
    else:
        root_path = Path(repo_root)
        if not root_path.is_dir():
            problems.append(f"repo_root is not a directory: {repo_root}")

    output_dir = raw.get("output_dir")
    if not output_dir:
        problems.append("output_dir is required")
        out_path = Path(".")
    else:
        out_path = Path(output_dir)

    languages = []
    for name in raw.get("languages", ["c_cpp", "java"]):
        try:
            lang = Language(name)
            if lang is Language.OTHER:
                raise ValueError
            languages.append(lang)
        except ValueError:
            problems.append(f"languages: unknown language {name!r}")
    if not languages:
        problems.append("languages must name at least one of c_cpp, java")

    filters = _parse_filters(raw.get("filters", {}), problems)

    pairs_raw = raw.get("pairs", {})
    random_starts = pairs_raw.get("random_starts", 1)
    if not isinstance(random_starts, int) or random_starts < 0:
        problems.append("pairs.random_starts must be an integer >= 0")
        random_starts = 1
    seed = pairs_raw.get("seed", 0)
    if not isinstance(seed, int):
        problems.append("pairs.seed must be an integer")
        seed = 0
    eot_token = pairs_raw.get("eot_token", DEFAULT_EOT_TOKEN)
    if not eot_token:
        problems.append("pairs.eot_token must be non-empty")
        eot_token = DEFAULT_EOT_TOKEN
    include_closer = bool(pairs_raw.get("include_closing_delimiter", True))
    holdout_paths = tuple(pairs_raw.get("holdout_paths", ()))
    logging_patterns = tuple(pairs_raw.get("logging_patterns", DEFAULT_LOGGING_PATTERNS))
    for pat in logging_patterns:
        try:
            re.compile(pat)
        except re.error as exc:
            problems.append(f"pairs.logging_patterns: bad regex {pat!r}: {exc}")

    rag_raw = raw.get("rag", {})
    embedder = rag_raw.get("embedder", "builtin")
    if embedder != "builtin" and not embedder.startswith("remote:"):
        problems.append("rag.embedder must be 'builtin' or 'remote:<url>'")
    dimension = rag_raw.get("dimension", 384)
    if not isinstance(dimension, int) or dimension < 1:
        problems.append("rag.dimension must be a positive integer")
        dimension = 384
    n_neighbors = rag_raw.get("n_neighbors", 3)
    if not isinstance(n_neighbors, int) or n_neighbors < 1:
        problems.append("rag.n_neighbors must be an integer >= 1")
        n_neighbors = 3
    budget_bytes = rag_raw.get("budget_bytes", 6144)
    if not isinstance(budget_bytes, int) or budget_bytes < 1:
        problems.append("rag.budget_bytes must be a positive integer")
        budget_bytes = 6144

    endpoints = raw.get("endpoints", {})
    generate_endpoint = endpoints.get("generate")
    gen_raw = raw.get("generation", {})
    gen_max_new_tokens = gen_raw.get("max_new_tokens", 256)
    gen_timeout = gen_raw.get("timeout_s", 120.0)

    max_file_bytes = raw.get("max_file_bytes", DEFAULT_MAX_FILE_BYTES)
    if not isinstance(max_file_bytes, int) or max_file_bytes < 1:
        problems.append("max_file_bytes must be a positive integer")
        max_file_bytes = DEFAULT_MAX_FILE_BYTES

    sweep = raw.get("sweep", {})
    if not isinstance(sweep, dict) or not all(isinstance(v, list) for v in sweep.values()):
        problems.append("sweep must map config keys to lists of values")
        sweep = {}

    predictions_path = raw.get("predictions_path")

    if problems:
        raise InvalidConfigError(problems)

    return PipelineConfig(
        repo_root=root_path,
        output_dir=out_path,
        languages=tuple(languages),
        exclude_globs=tuple(raw.get("exclude_globs", ())),
        max_file_bytes=max_file_bytes,
        filters=filters,
        logging_patterns=logging_patterns,
        include_closing_delimiter=include_closer,
        random_starts=random_starts,
        seed=seed,
        eot_token=eot_token,
        holdout_paths=holdout_paths,
        embedder=embedder,
        embedding_dimension=dimension,
        n_neighbors=n_neighbors,
        budget_bytes=budget_bytes,
        generate_endpoint=generate_endpoint,
        gen_max_new_tokens=gen_max_new_tokens,
        gen_timeout_s=float(gen_timeout),
        predictions_path=Path(predictions_path) if predictions_path else None,
        sweep=sweep,
    )
