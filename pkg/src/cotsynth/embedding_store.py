"""Text embeddings: remote endpoint or feature-hashing fallback, with a
content-addressed JSONL cache in front of either."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import httpx
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ConfigError, DataError, DimensionMismatch, EmptyText, ProtocolError
from .inference import EndpointConfig, JsonEndpoint, response_json

logger = logging.getLogger(__name__)

MIN_HASH_DIM = 16
DEFAULT_HASH_DIM = 256
DEFAULT_BATCH_SIZE = 64


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _bucket(token: str, dim: int) -> tuple[int, float]:
    h = hashlib.sha256(token.encode("utf-8")).digest()
    index = int.from_bytes(h[:8], "little") % dim
    sign = 1.0 if h[8] & 1 == 0 else -1.0
    return index, sign


def hashing_embed(text: str, dim: int = DEFAULT_HASH_DIM) -> np.ndarray:
    """Signed feature-hashing of lowercase whitespace tokens, L2-normalised."""
    if dim < MIN_HASH_DIM:
        raise ConfigError(f"hashing dim must be >= {MIN_HASH_DIM}")
    tokens = text.lower().split()
    if not tokens:
        raise EmptyText("cannot embed text without tokens")
    vec = np.zeros(dim)
    for tok in tokens:
        i, sign = _bucket(tok, dim)
        vec[i] += sign
    norm = math.sqrt(math.fsum(v * v for v in vec))
    if norm == 0.0:
        raise DataError("token hashes cancel to a zero vector")
    return vec / norm


class HashingEmbedder(TransformerMixin, BaseEstimator):
    """Stateless transformer mapping an iterable of strings to hashed vectors."""

    def __init__(self, dim: int = DEFAULT_HASH_DIM):
        self.dim = dim

    def fit(self, X, y=None):
        if self.dim < MIN_HASH_DIM:
            raise ConfigError(f"hashing dim must be >= {MIN_HASH_DIM}")
        self.n_features_out_ = self.dim
        return self

    def transform(self, X) -> np.ndarray:
        if isinstance(X, str):
            raise TypeError("expected an iterable of strings, got a single string")
        rows = [hashing_embed(text, self.dim) for text in X]
        return np.vstack(rows) if rows else np.zeros((0, self.dim))


@dataclass(frozen=True)
class EmbeddingVector:
    owner_id: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise DimensionMismatch("embedding must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise DataError(f"{self.owner_id}: embedding has non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class EmbeddingProvider:
    """Where vectors come from.

    ``kind="hashing"`` needs only ``dim``; ``kind="remote"`` needs an
    ``endpoint`` whose ``model_name`` is the embedding model.
    """

    kind: str = "hashing"
    dim: int = DEFAULT_HASH_DIM
    endpoint: EndpointConfig | None = None
    cache_path: str | None = None
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self):
        if self.kind == "hashing":
            if self.dim < MIN_HASH_DIM:
                raise ConfigError(f"hashing dim must be >= {MIN_HASH_DIM}")
        elif self.kind == "remote":
            if self.endpoint is None:
                raise ConfigError("remote embedding provider needs an endpoint")
        else:
            raise ConfigError(f"unknown embedding provider kind {self.kind!r}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")

    def fingerprint(self) -> str:
        ident = (f"hashing:{self.dim}" if self.kind == "hashing"
                 else f"remote:{self.endpoint.base_url}:{self.endpoint.model_name}")
        return hashlib.sha256(ident.encode()).hexdigest()[:12]


class EmbeddingCache:
    """Append-only JSONL of ``{content_hash, dim, values}`` rows.

    One file holds vectors of a single dimension; mixing dimensions is an
    error on load.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self._mem: dict[str, np.ndarray] = {}
        self._dim: int | None = None
        self._lock = threading.Lock()
        self._loaded = False

    def _load(self):
        if self._loaded:
            return
        self._loaded = True
        if self.path is None or not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                row = json.loads(line)
                values = np.asarray(row["values"], dtype=float)
                if len(values) != row["dim"]:
                    raise DimensionMismatch(f"{self.path}:{lineno}: dim field disagrees with values")
                self._check_dim(len(values))
                self._mem[row["content_hash"]] = values

    def _check_dim(self, dim: int):
        if self._dim is None:
            self._dim = dim
        elif dim != self._dim:
            raise DimensionMismatch(f"cache holds dim {self._dim}, got {dim}")

    def get(self, key: str) -> np.ndarray | None:
        with self._lock:
            self._load()
            return self._mem.get(key)

    def put_many(self, rows: Iterable[tuple[str, np.ndarray]]):
        with self._lock:
            self._load()
            fresh = []
            for key, values in rows:
                self._check_dim(len(values))
                if key not in self._mem:
                    self._mem[key] = values
                    fresh.append((key, values))
            if self.path is not None and fresh:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                    for key, values in fresh:
                        fh.write(json.dumps({"content_hash": key, "dim": len(values),
                                             "values": [float(v) for v in values]}) + "\n")

    def clear_memory(self):
        with self._lock:
            self._mem.clear()
            self._dim = None
            self._loaded = False


class EmbeddingStore:
    """Embeds texts through the cache, calling the provider only on misses."""

    def __init__(self, provider: EmbeddingProvider, *, transport: httpx.BaseTransport | None = None,
                 sleep=None, env=None):
        self.provider = provider
        self.cache = EmbeddingCache(provider.cache_path)
        self.remote_calls = 0
        self._endpoint = None
        if provider.kind == "remote":
            kw = {"transport": transport, "env": env}
            if sleep is not None:
                kw["sleep"] = sleep
            self._endpoint = JsonEndpoint(provider.endpoint, **kw)

    def close(self):
        if self._endpoint is not None:
            self._endpoint.close()

    def _remote_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        body = {"model": self.provider.endpoint.model_name, "input": list(texts)}
        resp, _ = self._endpoint.post("/v1/embeddings", body)
        self.remote_calls += 1
        if resp.status_code >= 400:
            raise ProtocolError(f"embeddings endpoint answered HTTP {resp.status_code}")
        payload = response_json(resp)
        try:
            data = sorted(payload["data"], key=lambda d: d.get("index", 0))
            vectors = [np.asarray(d["embedding"], dtype=float) for d in data]
        except (KeyError, TypeError, AttributeError):
            raise ProtocolError("embeddings response lacks data[i].embedding") from None
        if len(vectors) != len(texts):
            raise ProtocolError(f"asked for {len(texts)} embeddings, got {len(vectors)}")
        return vectors

    def _compute(self, texts: Sequence[str]) -> list[np.ndarray]:
        if self.provider.kind == "hashing":
            return [hashing_embed(t, self.provider.dim) for t in texts]
        out = []
        step = self.provider.batch_size
        for i in range(0, len(texts), step):
            out.extend(self._remote_batch(texts[i:i + step]))
        return out

    def embed(self, items: Sequence[tuple[str, str]]) -> list[EmbeddingVector]:
        ids = [i for i, _ in items]
        if len(set(ids)) != len(ids):
            raise DataError("embedding ids must be unique")
        for owner, text in items:
            if not text or not text.strip():
                raise EmptyText(f"{owner}: empty text")

        keys = [content_hash(text) for _, text in items]
        found = {k: self.cache.get(k) for k in set(keys)}
        missing = sorted(k for k, v in found.items() if v is None)
        if missing:
            by_key = {k: text for k, (_, text) in zip(keys, items)}
            computed = self._compute([by_key[k] for k in missing])
            self.cache.put_many(zip(missing, computed))
            found.update(zip(missing, computed))

        vectors = [EmbeddingVector(owner, found[k]) for (owner, _), k in zip(items, keys)]
        dims = {v.dim for v in vectors}
        if len(dims) > 1:
            raise DimensionMismatch(f"provider returned inconsistent dimensions {sorted(dims)}")
        return vectors

    def matrix(self, items: Sequence[tuple[str, str]]) -> np.ndarray:
        return stack(self.embed(items))


def stack(vectors: Sequence[EmbeddingVector]) -> np.ndarray:
    if not vectors:
        raise DataError("no vectors to stack")
    dims = {v.dim for v in vectors}
    if len(dims) > 1:
        raise DimensionMismatch(f"inconsistent dimensions {sorted(dims)}")
    return np.vstack([v.values for v in vectors])


def embed_texts(provider: EmbeddingProvider, items: Sequence[tuple[str, str]], **store_kw) -> list[EmbeddingVector]:
    store = EmbeddingStore(provider, **store_kw)
    try:
        return store.embed(items)
    finally:
        store.close()
