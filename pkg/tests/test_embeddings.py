"""Hashed n-gram embedder, remote client, and descriptor corpus tests."""

import random

import numpy as np
import pytest

from symharvest import guideline
from symharvest.embeddings import (
    DimensionMismatchError,
    HashedNgramEmbedder,
    IncompleteCorpusError,
    ProtocolError,
    RemoteEmbedder,
    RemoteEmbeddingError,
    build_descriptor_embeddings,
    cosine_similarity,
    embed_hashed_ngrams,
    embed_remote,
    load_descriptor_corpus,
)
from symharvest.normalize import NormalizedPost

from mock_embed import MockEmbedServer


def post(*tokens):
    return NormalizedPost(id="x", tokens=tokens)


# ------------------------------------------------------------ native


def test_empty_post_is_zero_vector():
    v = embed_hashed_ngrams(post(), D=64)
    assert v.shape == (64,)
    assert not v.any()


def test_deterministic():
    a = embed_hashed_ngrams(post("feel", "tired", "all", "day"))
    b = embed_hashed_ngrams(post("feel", "tired", "all", "day"))
    assert np.array_equal(a, b)


def test_unit_norm():
    v = embed_hashed_ngrams(post("cannot", "sleep"), D=128)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-9


def test_preconditions():
    with pytest.raises(ValueError):
        embed_hashed_ngrams(post("a"), D=8)
    with pytest.raises(ValueError):
        embed_hashed_ngrams(post("a"), n_max=3)


def test_bigrams_change_the_vector():
    uni = embed_hashed_ngrams(post("so", "sad"), n_max=1)
    bi = embed_hashed_ngrams(post("so", "sad"), n_max=2)
    assert not np.array_equal(uni, bi)


def test_vector_independent_of_surrounding_dataset():
    emb = HashedNgramEmbedder(dim=64)
    posts = [post_n(i) for i in range(10)]
    single = emb.embed_posts([posts[3]])[0]
    batch = emb.embed_posts(posts)[3]
    shuffled = emb.embed_posts(posts[::-1])[6]
    assert np.array_equal(single, batch)
    assert np.array_equal(single, shuffled)


def post_n(i):
    return NormalizedPost(id=str(i), tokens=(f"word{i}", "common", f"tail{i}"))


def test_disjoint_vocabulary_pairs_nearly_orthogonal():
    rng = random.Random(42)
    violations = 0
    for k in range(1000):
        n1 = rng.randint(3, 8)
        n2 = rng.randint(3, 8)
        t1 = tuple(f"a{k}w{i}" for i in range(n1))
        t2 = tuple(f"b{k}w{i}" for i in range(n2))
        v1 = embed_hashed_ngrams(post(*t1), D=512)
        v2 = embed_hashed_ngrams(post(*t2), D=512)
        if cosine_similarity(v1, v2) >= 0.3:
            violations += 1
    assert violations <= 10


# ------------------------------------------------------------ remote


def _len_vector(dim):
    def fn(text):
        return [float(len(text)), 1.0] + [0.0] * (dim - 2)

    return fn


def test_remote_empty_input():
    got = embed_remote([], endpoint="http://127.0.0.1:1/never-used", expected_dim=16)
    assert got.shape == (0, 16)


def test_remote_vectors_are_renormalized_and_ordered():
    texts = ["a", "bbb", "cc", "dddd", "e"]
    with MockEmbedServer(_len_vector(16), dim=16) as srv:
        got = embed_remote(texts, endpoint=srv.endpoint, batch_size=2)
    assert got.shape == (5, 16)
    for row, text in zip(got, texts):
        expected = np.array(_len_vector(16)(text))
        expected /= np.linalg.norm(expected)
        assert np.allclose(row, expected)
        assert abs(np.linalg.norm(row) - 1.0) < 1e-9


def test_remote_short_response_is_protocol_error():
    with MockEmbedServer(_len_vector(16), dim=16, truncate=1) as srv:
        with pytest.raises(ProtocolError):
            embed_remote(["a", "b", "c"], endpoint=srv.endpoint)


def test_remote_dimension_mismatch_is_fatal():
    with MockEmbedServer(_len_vector(16), dim=16) as srv:
        with pytest.raises(DimensionMismatchError):
            embed_remote(["a"], endpoint=srv.endpoint, expected_dim=512)


def test_remote_connection_failure_reports_attempts():
    with pytest.raises(RemoteEmbeddingError) as ei:
        embed_remote(
            ["a"], endpoint="http://127.0.0.1:9/unreachable",
            max_retries=2, timeout=0.5,
        )
    assert ei.value.attempts == 2


def test_endpoint_env_var(monkeypatch):
    with MockEmbedServer(_len_vector(16), dim=16) as srv:
        monkeypatch.setenv("SYMHARVEST_EMBED_ENDPOINT", srv.endpoint)
        got = embed_remote(["hello"])
        assert got.shape == (1, 16)
    monkeypatch.delenv("SYMHARVEST_EMBED_ENDPOINT")
    with pytest.raises(ValueError):
        embed_remote(["hello"])


def test_provider_interchangeability():
    # A remote service computing the same hashed n-grams must be a drop-in
    # replacement for the native provider.
    native = HashedNgramEmbedder(dim=64)

    def server_fn(text):
        return native.embed_texts([text])[0].tolist()

    texts = ["i feel numb", "cannot sleep at 3 am", "so tired", ""]
    with MockEmbedServer(server_fn, dim=64) as srv:
        remote = RemoteEmbedder(endpoint=srv.endpoint, dim=64, batch_size=2)
        got = remote.embed_texts(texts)
    assert np.allclose(got, native.embed_texts(texts), atol=1e-12)


# ------------------------------------------------------------ descriptors


def test_descriptor_embeddings_cover_symptoms():
    corpus = {lab: [f"descriptor {lab}"] for lab in range(1, 11)}
    got = build_descriptor_embeddings(corpus, HashedNgramEmbedder(dim=32))
    assert sorted(got) == list(range(1, 11))
    assert all(m.shape == (1, 32) for m in got.values())


def test_descriptor_corpus_missing_label():
    corpus = {lab: ["d"] for lab in range(1, 10)}
    with pytest.raises(IncompleteCorpusError):
        build_descriptor_embeddings(corpus, HashedNgramEmbedder(dim=32))
    corpus[10] = []
    with pytest.raises(IncompleteCorpusError):
        build_descriptor_embeddings(corpus, HashedNgramEmbedder(dim=32))


def test_shipped_corpus_matches_guideline():
    shipped = load_descriptor_corpus()
    derived = guideline.descriptor_corpus()
    assert shipped == derived
    for lab in range(1, 11):
        entry = guideline.BY_LABEL[lab]
        expected = 1 + len(entry.elaboration) + len(entry.examples)
        assert len(shipped[lab]) == expected


def test_shipped_corpus_embeds_fully():
    got = build_descriptor_embeddings(load_descriptor_corpus(), HashedNgramEmbedder(dim=64))
    for lab, mat in got.items():
        norms = np.linalg.norm(mat, axis=1)
        assert np.all(norms > 0), f"label {lab} has an unembeddable descriptor"
        assert np.allclose(norms, 1.0, atol=1e-9)
