"""Scope candidates: delimiter-bounded bodies classified by token lookbehind.

A scope is the content between a matched delimiter pair. Classification
looks at a handful of tokens before the opener instead of parsing; anything
ambiguous falls to UNCLASSIFIED rather than a wrong category.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .ingest import FileRecord
from .lexer import DelimiterSpan, ScanResult, Token, TokenWalker, scan

logger = logging.getLogger(__name__)

# Callee names matching any of these mark a call as logging output.
DEFAULT_LOGGING_PATTERNS = (r"(?i)(log|trace|pd_?)",)


class ScopeCategory(str, Enum):
    ELSE_BODY = "else_body"
    FOR_BODY = "for_body"
    FUNC_BODY = "func_body"
    IF_BODY = "if_body"
    LOGGING = "logging"
    FUNC_CALL = "func_call"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class ScopeCandidate:
    """One extractable scope; offsets index the file's canonical bytes.

    start_byte is the first byte inside the opening delimiter, end_byte one
    past the last content byte (the closing delimiter sits at end_byte).
    prefix_available_bytes equals start_byte: everything before the scope.
    """

    file_id: str
    category: ScopeCategory
    start_byte: int
    end_byte: int
    depth: int
    size_bytes: int
    prefix_available_bytes: int


# Words that introduce a type or linkage body; braces under one of these are
# member level, the braces themselves are not bodies we categorize.
_TYPE_BODY_WORDS = frozenset(
    {"class", "struct", "union", "enum", "interface", "namespace", "record", "extern", "new"}
)
_BRACE_IMMEDIATE_BAIL = frozenset({"try", "finally", "do", "switch"})
_QUALIFIER_PUNCT = frozenset({",", "->", "::", "*", "&", ":", "<", ">"})
# Keywords that cannot head a function definition or a call.
_RESERVED_HEADS = frozenset(
    {
        "if", "for", "while", "switch", "catch", "synchronized", "return",
        "throw", "new", "delete", "sizeof", "alignof", "typeid", "decltype",
        "static_assert", "case", "do", "else", "constexpr", "goto",
    }
)
# A word directly before a callee chain normally means a declaration
# ("int foo("), except these, which introduce expressions.
_CALL_PRECEDING_WORDS = frozenset(
    {"return", "new", "throw", "delete", "case", "else", "do", "assert", "instanceof", "await", "yield"}
)


def compile_logging_patterns(patterns) -> tuple[re.Pattern, ...]:
    return tuple(re.compile(p) for p in (patterns or DEFAULT_LOGGING_PATTERNS))


class _FileContext:
    """Shared lex context for classifying every span of one file."""

    def __init__(self, record: FileRecord, result: ScanResult):
        self.content = record.content
        self.result = result
        self.walker = TokenWalker(record.content, result.opaque)
        self.pair_by_close = {p.close_offset: p for p in result.pairs}
        # Nesting tree over all matched pairs (they are properly nested).
        self.depth: dict[DelimiterSpan, int] = {}
        self.brace_parent: dict[DelimiterSpan, DelimiterSpan | None] = {}
        self._type_body_cache: dict[DelimiterSpan, bool] = {}
        stack: list[DelimiterSpan] = []
        children: dict[DelimiterSpan, list[DelimiterSpan]] = {p: [] for p in result.pairs}
        order: list[DelimiterSpan] = []
        for pair in result.pairs:  # already sorted by open_offset
            while stack and stack[-1].close_offset < pair.open_offset:
                stack.pop()
            parent = stack[-1] if stack else None
            if parent is not None:
                children[parent].append(pair)
            if parent is None:
                self.brace_parent[pair] = None
            elif parent.delimiter == "{":
                self.brace_parent[pair] = parent
            else:
                self.brace_parent[pair] = self.brace_parent[parent]
            stack.append(pair)
            order.append(pair)
        for pair in reversed(order):  # children are computed before parents
            kids = children[pair]
            self.depth[pair] = 0 if not kids else 1 + max(self.depth[k] for k in kids)

    def is_type_body(self, brace: DelimiterSpan) -> bool:
        cached = self._type_body_cache.get(brace)
        if cached is not None:
            return cached
        verdict = False
        t = self.walker.token_before(brace.open_offset)
        for _ in range(16):
            if t is None:
                break
            if t.kind == "word":
                if t.text in _TYPE_BODY_WORDS:
                    verdict = True
                    break
            elif t.kind == "punct" and t.text in (";", "{", "}", "="):
                break
            t = self.walker.token_before(t.start)
        self._type_body_cache[brace] = verdict
        return verdict


def _member_level(span: DelimiterSpan, ctx: _FileContext) -> bool:
    parent = ctx.brace_parent.get(span)
    return parent is None or ctx.is_type_body(parent)


def _callee_chain(ctx: _FileContext, open_offset: int) -> tuple[Token, int, Token | None] | None:
    """Walk the qualified name before '(' backwards: a.b->c::d.

    Returns (head word adjacent to the paren, chain start offset, token
    before the whole chain), or None when no word abuts the paren.
    """
    head = ctx.walker.token_before(open_offset)
    if head is None or head.kind != "word":
        return None
    chain_start = head.start
    before = ctx.walker.token_before(head.start)
    while before is not None and before.kind == "punct" and before.text in (".", "->", "::"):
        prev = ctx.walker.token_before(before.start)
        if prev is None or prev.kind != "word":
            before = prev
            break
        chain_start = prev.start
        before = ctx.walker.token_before(prev.start)
    return head, chain_start, before


def _identifier_like(text: str) -> bool:
    return bool(text) and not text[0].isdigit()


def _classify_paren(span: DelimiterSpan, ctx: _FileContext, patterns) -> ScopeCategory:
    walked = _callee_chain(ctx, span.open_offset)
    if walked is None:
        return ScopeCategory.UNCLASSIFIED
    head, chain_start, before = walked
    if head.text in _RESERVED_HEADS or not _identifier_like(head.text):
        return ScopeCategory.UNCLASSIFIED
    if before is not None:
        if before.kind == "word" and before.text not in _CALL_PRECEDING_WORDS:
            return ScopeCategory.UNCLASSIFIED  # declaration: "int foo("
        if before.kind == "punct" and before.text in ("@", "~"):
            return ScopeCategory.UNCLASSIFIED  # annotation / destructor decl
    name = ctx.content[chain_start : head.end].decode("utf-8", "replace")
    for pat in patterns:
        if pat.search(name):
            return ScopeCategory.LOGGING
    return ScopeCategory.FUNC_CALL


def _classify_after_paren(span: DelimiterSpan, rparen: Token, ctx: _FileContext) -> ScopeCategory:
    par = ctx.pair_by_close.get(rparen.start)
    if par is None:
        return ScopeCategory.UNCLASSIFIED
    walked = _callee_chain(ctx, par.open_offset)
    if walked is None:
        return ScopeCategory.UNCLASSIFIED
    head, _, before = walked
    if head.text == "for":
        return ScopeCategory.FOR_BODY
    if head.text == "if":
        return ScopeCategory.IF_BODY
    if head.text in _RESERVED_HEADS or not _identifier_like(head.text):
        return ScopeCategory.UNCLASSIFIED
    if before is not None and before.kind == "word" and before.text == "new":
        return ScopeCategory.UNCLASSIFIED  # anonymous class body
    if _member_level(span, ctx):
        return ScopeCategory.FUNC_BODY
    return ScopeCategory.UNCLASSIFIED


def _classify_brace(span: DelimiterSpan, ctx: _FileContext) -> ScopeCategory:
    t = ctx.walker.token_before(span.open_offset)
    if t is None:
        return ScopeCategory.UNCLASSIFIED
    if t.kind == "word":
        if t.text == "else":
            return ScopeCategory.ELSE_BODY
        if t.text in _BRACE_IMMEDIATE_BAIL:
            return ScopeCategory.UNCLASSIFIED
    # Walk back over trailing qualifiers (const, noexcept, throws X, -> T)
    # toward the parameter-list ')'.
    for _ in range(10):
        if t is None:
            return ScopeCategory.UNCLASSIFIED
        if t.kind == "punct":
            if t.text == ")":
                return _classify_after_paren(span, t, ctx)
            if t.text not in _QUALIFIER_PUNCT:
                return ScopeCategory.UNCLASSIFIED
        elif t.kind == "word":
            if t.text in _TYPE_BODY_WORDS or t.text in _RESERVED_HEADS:
                # type body, or an init list after return/new/case/...
                return ScopeCategory.UNCLASSIFIED
        else:
            return ScopeCategory.UNCLASSIFIED  # string/char literal
        t = ctx.walker.token_before(t.start)
    return ScopeCategory.UNCLASSIFIED


def scan_delimiters(record: FileRecord) -> list[DelimiterSpan]:
    """Matched delimiter pairs of one file, sorted by opener offset."""
    return scan(record.content, record.language).pairs


def classify_scope(record: FileRecord, span: DelimiterSpan, logging_patterns=None) -> ScopeCategory:
    """Classify one span. Recomputes lex context; batch callers should
    prefer extract_scopes, which shares context across a file."""
    patterns = compile_logging_patterns(logging_patterns)
    ctx = _FileContext(record, scan(record.content, record.language))
    if span.delimiter == "{":
        return _classify_brace(span, ctx)
    return _classify_paren(span, ctx, patterns)


def extract_scopes(
    record: FileRecord,
    logging_patterns=None,
    *,
    diagnostics: list[str] | None = None,
) -> list[ScopeCandidate]:
    """All scope candidates of a file, nested scopes included, sorted by start.

    Per-file scan diagnostics (orphan delimiters, unterminated literals) are
    appended to ``diagnostics`` when given, otherwise logged as warnings.
    """
    patterns = compile_logging_patterns(logging_patterns)
    result = scan(record.content, record.language)
    if result.diagnostics:
        if diagnostics is not None:
            diagnostics.extend(f"{record.repo_relative_path}: {d}" for d in result.diagnostics)
        else:
            for d in result.diagnostics:
                logger.warning("%s: %s", record.repo_relative_path, d)
    ctx = _FileContext(record, result)
    out = []
    for pair in result.pairs:
        if pair.delimiter == "{":
            category = _classify_brace(pair, ctx)
        else:
            category = _classify_paren(pair, ctx, patterns)
        start = pair.open_offset + 1
        end = pair.close_offset
        out.append(
            ScopeCandidate(
                file_id=record.file_id,
                category=category,
                start_byte=start,
                end_byte=end,
                depth=ctx.depth[pair],
                size_bytes=end - start,
                prefix_available_bytes=start,
            )
        )
    out.sort(key=lambda c: (c.start_byte, c.end_byte))
    return out


def write_scopes(candidates: list[ScopeCandidate], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in candidates:
            fh.write(
                json.dumps(
                    {
                        "file_id": c.file_id,
                        "category": c.category.value,
                        "start_byte": c.start_byte,
                        "end_byte": c.end_byte,
                        "depth": c.depth,
                        "size_bytes": c.size_bytes,
                        "prefix_available_bytes": c.prefix_available_bytes,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_scopes(path: str | Path) -> list[ScopeCandidate]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            out.append(
                ScopeCandidate(
                    file_id=d["file_id"],
                    category=ScopeCategory(d["category"]),
                    start_byte=d["start_byte"],
                    end_byte=d["end_byte"],
                    depth=d["depth"],
                    size_bytes=d["size_bytes"],
                    prefix_available_bytes=d["prefix_available_bytes"],
                )
            )
    return out
