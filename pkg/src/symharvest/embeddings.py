"""Text-embedding providers.

Two interchangeable providers: a self-contained signed feature-hashing
n-gram embedder, and a client for a remote embedding HTTP service. Both
return L2-normalized vectors (zero vectors stay zero). Descriptor
embeddings for zero-shot labelling are built on top of either provider.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np
import requests

from .normalize import NormalizedPost, RawPost, normalize

DEFAULT_DIM = 512
DEFAULT_N_MAX = 2
ENDPOINT_ENV_VAR = "SYMHARVEST_EMBED_ENDPOINT"


class RemoteEmbeddingError(RuntimeError):
    """Connection or timeout failure after the configured retries."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempt(s))")
        self.attempts = attempts


class ProtocolError(RuntimeError):
    """The remote service violated the wire contract."""


class DimensionMismatchError(ValueError):
    """Remote vectors do not match the configured dimension."""


class IncompleteCorpusError(ValueError):
    """Descriptor corpus is missing a symptom label."""


def l2_normalize(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return v
    return v / norm


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


def _ngrams(tokens: Sequence[str], n_max: int) -> Iterable[str]:
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            yield " ".join(tokens[i : i + n])


def embed_hashed_ngrams(
    post,
    D: int = DEFAULT_DIM,
    n_max: int = DEFAULT_N_MAX,
) -> np.ndarray:
    """Signed feature hashing over word n-grams.

    Accepts any object with a .tokens attribute, or a plain token
    sequence. blake2b(128-bit) of each n-gram: the first 8 bytes select
    the bucket, the last 8 bytes select the sign. Result is L2-normalized;
    a post with no tokens embeds to the zero vector.
    """
    if D < 16:
        raise ValueError(f"dimension too small: {D}")
    if n_max not in (1, 2):
        raise ValueError(f"n_max must be 1 or 2, got {n_max}")
    tokens = tuple(getattr(post, "tokens", post))
    v = np.zeros(D, dtype=np.float64)
    for gram in _ngrams(tokens, n_max):
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=16).digest()
        idx = int.from_bytes(digest[:8], "big") % D
        sign = 1.0 if int.from_bytes(digest[8:], "big") & 1 else -1.0
        v[idx] += sign
    return l2_normalize(v)


class HashedNgramEmbedder:
    """Provider wrapper around embed_hashed_ngrams for raw strings."""

    def __init__(self, dim: int = DEFAULT_DIM, n_max: int = DEFAULT_N_MAX):
        self.dim = dim
        self.n_max = n_max

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            # Disclosure dropping is a corpus-construction rule, not an
            # embedding rule; descriptor sentences must always embed.
            post = normalize(RawPost(id=str(i), text=text), drop_on_disclosure=False)
            out[i] = embed_hashed_ngrams(post, self.dim, self.n_max)
        return out

    def embed_posts(self, posts: Sequence[NormalizedPost]) -> np.ndarray:
        out = np.zeros((len(posts), self.dim), dtype=np.float64)
        for i, post in enumerate(posts):
            out[i] = embed_hashed_ngrams(post, self.dim, self.n_max)
        return out


def _post_batch(endpoint: str, batch: list[str], timeout: float, max_retries: int) -> list[list[float]]:
    last_exc: Exception | None = None
    for attempt in range(1, max_retries + 1):
        try:
            resp = requests.post(endpoint, json={"texts": batch}, timeout=timeout)
            resp.raise_for_status()
            payload = resp.json()
            break
        except (requests.ConnectionError, requests.Timeout) as exc:
            last_exc = exc
            if attempt < max_retries:
                time.sleep(0.1 * 2 ** (attempt - 1))
        except (requests.HTTPError, json.JSONDecodeError, ValueError) as exc:
            raise ProtocolError(f"bad response from {endpoint}: {exc}") from exc
    else:
        raise RemoteEmbeddingError(str(last_exc), attempts=max_retries)

    vectors = payload.get("vectors")
    if not isinstance(vectors, list) or len(vectors) != len(batch):
        got = len(vectors) if isinstance(vectors, list) else "none"
        raise ProtocolError(f"expected {len(batch)} vectors, got {got}")
    return vectors


def embed_remote(
    texts: Sequence[str],
    endpoint: str | None = None,
    timeout: float = 10.0,
    batch_size: int = 32,
    max_retries: int = 3,
    expected_dim: int | None = None,
    max_in_flight: int = 4,
) -> np.ndarray:
    """Embed texts via the remote wire protocol, order-preserving.

    POST {"texts": [...]} -> {"vectors": [[...], ...], "dim": D}. Batches
    run with bounded parallelism and per-batch retry; vectors are
    re-normalized locally.
    """
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
    if not endpoint:
        raise ValueError(f"no endpoint given and {ENDPOINT_ENV_VAR} unset")
    if not texts:
        dim = expected_dim or 0
        return np.zeros((0, dim), dtype=np.float64)

    batches = [list(texts[i : i + batch_size]) for i in range(0, len(texts), batch_size)]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        results = list(
            pool.map(lambda b: _post_batch(endpoint, b, timeout, max_retries), batches)
        )

    rows: list[list[float]] = [vec for batch in results for vec in batch]
    dims = {len(r) for r in rows}
    if len(dims) != 1:
        raise ProtocolError(f"inconsistent vector dimensions: {sorted(dims)}")
    dim = dims.pop()
    if expected_dim is not None and dim != expected_dim:
        raise DimensionMismatchError(f"service dim {dim} != configured {expected_dim}")
    out = np.asarray(rows, dtype=np.float64)
    for i in range(out.shape[0]):
        out[i] = l2_normalize(out[i])
    return out


class RemoteEmbedder:
    """Provider wrapper around embed_remote."""

    def __init__(
        self,
        endpoint: str | None = None,
        dim: int = DEFAULT_DIM,
        timeout: float = 10.0,
        batch_size: int = 32,
        max_retries: int = 3,
        max_in_flight: int = 4,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
        self.dim = dim
        self.timeout = timeout
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.max_in_flight = max_in_flight

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        return embed_remote(
            texts,
            endpoint=self.endpoint,
            timeout=self.timeout,
            batch_size=self.batch_size,
            max_retries=self.max_retries,
            expected_dim=self.dim,
            max_in_flight=self.max_in_flight,
        )

    def embed_posts(self, posts: Sequence[NormalizedPost]) -> np.ndarray:
        return self.embed_texts([p.text for p in posts])


def load_descriptor_corpus(path=None) -> dict[int, list[str]]:
    """Read a {label_index: [descriptor strings]} JSON file.

    With no path, loads the corpus shipped with the package (built from
    the annotation guideline's symptom descriptions and examples).
    """
    if path is None:
        res = resources.files("symharvest.data") / "descriptors.json"
        with resources.as_file(res) as p:
            raw = json.loads(p.read_text(encoding="utf-8"))
    else:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    return {int(k): list(v) for k, v in raw.items()}


def build_descriptor_embeddings(
    corpus: Mapping[int, Sequence[str]], provider
) -> dict[int, np.ndarray]:
    """Embed every descriptor; the map must cover symptom labels 1-10."""
    missing = [lab for lab in range(1, 11) if not corpus.get(lab)]
    if missing:
        raise IncompleteCorpusError(f"labels without descriptors: {missing}")
    out: dict[int, np.ndarray] = {}
    for lab in sorted(corpus):
        vecs = provider.embed_texts(list(corpus[lab]))
        out[lab] = np.asarray(vecs, dtype=np.float64)
    return out
