import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cotsynth.embedding_store import (
    EmbeddingProvider,
    EmbeddingStore,
    HashingEmbedder,
    _bucket,
    content_hash,
    embed_texts,
    hashing_embed,
)
from cotsynth.errors import ConfigError, DataError, DimensionMismatch, EmptyText, ProtocolError
from cotsynth.inference import EndpointConfig
from cotsynth.mock_server import MockEmbeddingServer


def remote(tmp_path=None, dims=(8,), batch=64):
    server = MockEmbeddingServer(dims)
    provider = EmbeddingProvider(kind="remote", endpoint=EndpointConfig("http://emb", "emb-model"),
                                 cache_path=str(tmp_path / "cache.jsonl") if tmp_path else None,
                                 batch_size=batch)
    store = EmbeddingStore(provider, transport=__import__("httpx").MockTransport(server), env={})
    return store, server


def test_unit_norm_and_scaling():
    assert np.linalg.norm(hashing_embed("the participant is tired")) == pytest.approx(1.0, abs=1e-9)
    assert np.array_equal(hashing_embed("a a"), hashing_embed("a"))
    assert np.array_equal(hashing_embed("A"), hashing_embed("a"))


def test_pinned_buckets_and_cosine():
    assert [_bucket(t, 256) for t in "abcd"] == [(202, 1.0), (62, -1.0), (46, -1.0), (24, 1.0)]
    # four distinct buckets, so the two texts share no coordinate
    assert float(hashing_embed("a b") @ hashing_embed("c d")) == 0.0
    # one shared token of two on each side: cosine 1/2
    assert float(hashing_embed("a b") @ hashing_embed("a c")) == pytest.approx(0.5, abs=1e-12)


def test_empty_and_small_dim():
    with pytest.raises(EmptyText):
        hashing_embed("")
    with pytest.raises(EmptyText):
        hashing_embed("   ")
    with pytest.raises(ConfigError):
        hashing_embed("a", dim=8)


@settings(max_examples=100, deadline=None)
@given(st.text(min_size=1, max_size=80).filter(lambda s: s.split()))
def test_hashing_pure_and_normalised(text):
    try:
        v = hashing_embed(text, 64)
    except DataError:
        return  # opposite-signed collisions can cancel
    assert np.array_equal(v, hashing_embed(text, 64))
    assert math.isclose(float(np.linalg.norm(v)), 1.0, abs_tol=1e-9)


def test_sklearn_transformer():
    X = HashingEmbedder(dim=32).fit_transform(["a b", "c"])
    assert X.shape == (2, 32)
    assert HashingEmbedder(dim=32).get_params() == {"dim": 32}


def test_identical_texts_identical_vectors():
    vs = embed_texts(EmbeddingProvider(dim=64), [("x", "same text"), ("y", "same text")])
    assert np.array_equal(vs[0].values, vs[1].values)
    assert vs[0].owner_id == "x"


def test_duplicate_ids_and_empty_text():
    store = EmbeddingStore(EmbeddingProvider(dim=32))
    with pytest.raises(DataError):
        store.embed([("a", "x"), ("a", "y")])
    with pytest.raises(EmptyText):
        store.embed([("a", "")])


def test_cache_round_trip_zero_remote_calls(tmp_path):
    store, server = remote(tmp_path)
    items = [("a", "alpha text"), ("b", "beta text"), ("c", "alpha text")]
    first = store.embed(items)
    assert server.calls == 1 and server.inputs[0] == sorted(set(t for _, t in items), key=content_hash)
    store.cache.clear_memory()
    again = store.embed(items)
    assert server.calls == 1
    for x, y in zip(first, again):
        assert x.values.tobytes() == y.values.tobytes()
    fresh, server2 = remote(tmp_path)
    fresh.embed(items)
    assert server2.calls == 0
    rows = [json.loads(l) for l in (tmp_path / "cache.jsonl").read_text().splitlines()]
    assert {r["content_hash"] for r in rows} == {content_hash("alpha text"), content_hash("beta text")}
    assert all(r["dim"] == 8 == len(r["values"]) for r in rows)


def test_dimension_change_mismatch():
    store, _ = remote(dims=(8, 9))
    store.embed([("a", "one")])
    with pytest.raises(DimensionMismatch):
        store.embed([("b", "two")])


def test_dimension_change_within_call():
    store, _ = remote(dims=(8, 9), batch=1)
    with pytest.raises(DimensionMismatch):
        store.embed([("a", "one"), ("b", "two")])


def test_batching(tmp_path):
    store, server = remote(batch=2)
    store.embed([(str(i), f"text {i}") for i in range(5)])
    assert server.calls == 3


def test_bad_remote_payload():
    import httpx
    provider = EmbeddingProvider(kind="remote", endpoint=EndpointConfig("http://e", "m"))
    store = EmbeddingStore(provider, transport=httpx.MockTransport(lambda r: httpx.Response(200, json={})), env={})
    with pytest.raises(ProtocolError):
        store.embed([("a", "x")])


def test_provider_validation():
    with pytest.raises(ConfigError):
        EmbeddingProvider(kind="remote")
    with pytest.raises(ConfigError):
        EmbeddingProvider(kind="bert")
    with pytest.raises(ConfigError):
        EmbeddingProvider(dim=15)
    assert EmbeddingProvider(dim=64).fingerprint() != EmbeddingProvider(dim=128).fingerprint()
