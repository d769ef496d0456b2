"""Exact-kNN retrieval over completion-pair queries.

Keys are embeddings of primary-pair queries, values the pair labels with
the eot token stripped. Search is a linear cosine scan over every key: no
approximation, ties broken by ascending pair_id, so results are exact and
reproducible.
"""

from __future__ import annotations

import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests

from .errors import (
    DimensionMismatchError,
    EmbeddingServiceUnavailableError,
    MalformedResponseError,
)
from .pairs import CompletionPair, PairKind

logger = logging.getLogger(__name__)

DEFAULT_DIMENSION = 384

_MAGIC = b"SCOPEIDX"
_VERSION = 1

# splitmix64 finalizer constants; all uint64 arithmetic wraps mod 2**64.
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= _MIX1
    x ^= x >> np.uint64(27)
    x *= _MIX2
    x ^= x >> np.uint64(31)
    return x


class HashingEmbedder:
    """Deterministic char-n-gram feature hashing with signed buckets.

    A self-contained, offline stand-in for a neural sentence embedder: the
    vector is a pure function of the text bytes, L2-normalized, float32.
    Not semantically clever, but stable across runs and machines, which is
    what the index contract needs.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION, ngram_sizes: Sequence[int] = (3, 4)):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self.ngram_sizes = tuple(ngram_sizes)

    @property
    def embedder_id(self) -> str:
        grams = "-".join(str(n) for n in self.ngram_sizes)
        return f"builtin-ngram-hash/d{self.dimension}/n{grams}"

    def embed(self, text: str) -> np.ndarray:
        if not text:
            logger.warning("embedding empty text: zero vector")
            return np.zeros(self.dimension, dtype=np.float32)
        raw = np.frombuffer(text.encode("utf-8"), dtype=np.uint8).astype(np.uint64)
        acc = np.zeros(self.dimension, dtype=np.float64)
        dim = np.uint64(self.dimension)
        with np.errstate(over="ignore"):
            for n in self.ngram_sizes:
                if len(raw) < n:
                    continue
                codes = np.zeros(len(raw) - n + 1, dtype=np.uint64)
                for j in range(n):
                    codes = (codes << np.uint64(8)) | raw[j : len(raw) - n + 1 + j]
                salt = np.uint64((n * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)
                mixed = _mix64(codes ^ salt)
                idx = (mixed % dim).astype(np.int64)
                signs = np.where(mixed >> np.uint64(63), -1.0, 1.0)
                np.add.at(acc, idx, signs)
        norm = float(np.linalg.norm(acc))
        if norm == 0.0:
            return np.zeros(self.dimension, dtype=np.float32)
        return (acc / norm).astype(np.float32)

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float32)
        return np.stack([self.embed(t) for t in texts])


class RemoteEmbedder:
    """Client for an embedding service speaking POST {"texts": [...]}.

    Batches requests and keeps a bounded number in flight; batch order is
    preserved in the output. Any transport failure or non-200 raises
    EmbeddingServiceUnavailableError; a vector of the wrong width raises
    DimensionMismatchError.
    """

    def __init__(
        self,
        endpoint: str,
        dimension: int = DEFAULT_DIMENSION,
        *,
        batch_size: int = 64,
        max_in_flight: int = 8,
        timeout: float = 60.0,
    ):
        self.endpoint = endpoint if endpoint.rstrip("/").endswith("/embed") else endpoint.rstrip("/") + "/embed"
        self.dimension = dimension
        self.batch_size = batch_size
        self.max_in_flight = max_in_flight
        self.timeout = timeout

    @property
    def embedder_id(self) -> str:
        return f"remote/{self.endpoint}/d{self.dimension}"

    def _embed_batch(self, batch: list[str]) -> np.ndarray:
        try:
            resp = requests.post(self.endpoint, json={"texts": batch}, timeout=self.timeout)
        except requests.RequestException as exc:
            raise EmbeddingServiceUnavailableError(f"embed call failed: {exc}") from exc
        if resp.status_code != 200:
            raise EmbeddingServiceUnavailableError(
                f"embed endpoint answered {resp.status_code}"
            )
        try:
            body = resp.json()
            vectors = body["vectors"]
            dim = int(body["dim"])
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedResponseError(f"bad embed response: {exc}") from exc
        if dim != self.dimension or any(len(v) != self.dimension for v in vectors):
            raise DimensionMismatchError(
                f"embed endpoint returned dim {dim}, expected {self.dimension}"
            )
        if len(vectors) != len(batch):
            raise MalformedResponseError(
                f"embed endpoint returned {len(vectors)} vectors for {len(batch)} texts"
            )
        return np.asarray(vectors, dtype=np.float32)

    def embed(self, text: str) -> np.ndarray:
        return self.embed_texts([text])[0]

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float32)
        batches = [list(texts[i : i + self.batch_size]) for i in range(0, len(texts), self.batch_size)]
        if len(batches) == 1:
            return self._embed_batch(batches[0])
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            parts = list(pool.map(self._embed_batch, batches))
        return np.concatenate(parts, axis=0)


@dataclass
class VectorIndex:
    dimension: int
    embedder_id: str
    pair_ids: list[str]
    keys: np.ndarray  # (count, dimension) float32
    values: list[str]

    def __post_init__(self):
        self._norms = None
        self._value_by_id = None

    def __len__(self) -> int:
        return len(self.pair_ids)

    def norms(self) -> np.ndarray:
        if self._norms is None:
            self._norms = np.linalg.norm(self.keys.astype(np.float64), axis=1)
        return self._norms

    def value_for(self, pair_id: str) -> str:
        if self._value_by_id is None:
            self._value_by_id = dict(zip(self.pair_ids, self.values))
        return self._value_by_id[pair_id]

    def save(self, path: str | Path) -> None:
        """Binary layout: magic, version, dim, count, embedder_id, then the
        float32 key matrix row-major little-endian, then length-prefixed
        UTF-8 pair_ids and values. Same entries in, same bytes out."""
        with open(path, "wb") as fh:
            eid = self.embedder_id.encode("utf-8")
            fh.write(_MAGIC)
            fh.write(struct.pack("<IIQI", _VERSION, self.dimension, len(self.pair_ids), len(eid)))
            fh.write(eid)
            fh.write(np.ascontiguousarray(self.keys, dtype="<f4").tobytes())
            for pid, value in zip(self.pair_ids, self.values):
                pb = pid.encode("utf-8")
                vb = value.encode("utf-8")
                fh.write(struct.pack("<I", len(pb)))
                fh.write(pb)
                fh.write(struct.pack("<I", len(vb)))
                fh.write(vb)

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        data = Path(path).read_bytes()
        if data[: len(_MAGIC)] != _MAGIC:
            raise ValueError(f"not an index file: {path}")
        off = len(_MAGIC)
        version, dim, count, eid_len = struct.unpack_from("<IIQI", data, off)
        if version != _VERSION:
            raise ValueError(f"unsupported index version {version}")
        off += struct.calcsize("<IIQI")
        embedder_id = data[off : off + eid_len].decode("utf-8")
        off += eid_len
        keys = np.frombuffer(data, dtype="<f4", count=count * dim, offset=off).reshape(count, dim).copy()
        off += count * dim * 4
        pair_ids = []
        values = []
        for _ in range(count):
            (n,) = struct.unpack_from("<I", data, off)
            off += 4
            pair_ids.append(data[off : off + n].decode("utf-8"))
            off += n
            (n,) = struct.unpack_from("<I", data, off)
            off += 4
            values.append(data[off : off + n].decode("utf-8"))
            off += n
        return cls(dimension=dim, embedder_id=embedder_id, pair_ids=pair_ids, keys=keys, values=values)


def index_build(pairs: Iterable[CompletionPair], embedder) -> VectorIndex:
    """Embed every primary pair's query; label minus eot becomes the value.

    Entry order follows input order, so rebuilding from the same pairs with
    the same embedder serializes byte-identically.
    """
    pair_list = list(pairs)
    non_primary = [p.pair_id for p in pair_list if p.kind is not PairKind.PRIMARY]
    if non_primary:
        raise ValueError(f"index_build takes primary pairs only; got {non_primary[:3]}")
    ids = [p.pair_id for p in pair_list]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate pair_ids in index input")
    for p in pair_list:
        if not p.query:
            logger.warning("pair %s has an empty query; key will be the zero vector", p.pair_id)
    try:
        keys = embedder.embed_texts([p.query for p in pair_list])
    except Exception:
        logger.error(
            "embedding failed while building index (first pair %s)",
            ids[0] if ids else "n/a",
        )
        raise
    values = [p.label_without_eot() for p in pair_list]
    return VectorIndex(
        dimension=embedder.dimension,
        embedder_id=embedder.embedder_id,
        pair_ids=ids,
        keys=keys.astype(np.float32),
        values=values,
    )


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine over float64; defined as 0.0 when either vector is zero."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(av, bv) / (na * nb))


def knn_search(index: VectorIndex, query_vec: np.ndarray, n: int) -> list[tuple[str, float]]:
    """Exact top-n by cosine similarity, ties broken by ascending pair_id.

    Scans every entry (linear cost); returns fewer than n results only when
    the index holds fewer entries.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    q = np.asarray(query_vec, dtype=np.float64).reshape(-1)
    if q.shape[0] != index.dimension:
        raise DimensionMismatchError(
            f"query vector has dim {q.shape[0]}, index has {index.dimension}"
        )
    count = len(index)
    if count == 0:
        return []
    qnorm = float(np.linalg.norm(q))
    norms = index.norms()
    if qnorm == 0.0:
        sims = np.zeros(count, dtype=np.float64)
    else:
        dots = index.keys.astype(np.float64) @ q
        denom = norms * qnorm
        sims = np.divide(dots, denom, out=np.zeros_like(dots), where=denom != 0.0)
    order = sorted(range(count), key=lambda i: (-sims[i], index.pair_ids[i]))
    return [(index.pair_ids[i], float(sims[i])) for i in order[:n]]


def augment_query(
    query: str,
    neighbors: list[tuple[str, float]],
    index: VectorIndex,
    n_used: int = 3,
    budget_bytes: int = 6144,
) -> str:
    """Frame retrieved labels as comment blocks ahead of the query.

    Blocks are laid out least-similar first, so budget truncation drops
    whole blocks from the front (worst neighbor first); headers are
    numbered by similarity rank. The query itself is never truncated: if
    not even one block fits, the query comes back verbatim.
    """
    used = neighbors[:n_used]
    blocks = [
        f"/* retrieved example {rank} */\n{index.value_for(pid)}\n"
        for rank, (pid, _) in enumerate(used, start=1)
    ]
    blocks.reverse()  # least similar at the front
    query_bytes = len(query.encode("utf-8"))
    sizes = [len(b.encode("utf-8")) for b in blocks]
    while blocks and query_bytes + sum(sizes) > budget_bytes:
        blocks.pop(0)
        dropped_size = sizes.pop(0)
        logger.info("augment_query dropped a %d-byte block to fit budget", dropped_size)
    return "".join(blocks) + query
