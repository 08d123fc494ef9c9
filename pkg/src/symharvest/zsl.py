"""Zero-shot multi-label scoring against symptom descriptor embeddings.

A post is labelled with the symptoms whose descriptor sets it is close to
in embedding space: distance = 1 - cosine similarity, minimized over each
label's descriptors, thresholded and truncated to the k best labels.
"""

from __future__ import annotations

from typing import Mapping, NamedTuple

import numpy as np

DEFAULT_THRESHOLD = 1.0
DEFAULT_K = 3


class ScoredLabel(NamedTuple):
    label: int
    distance: float


class UnembeddableError(ValueError):
    """The post embeds to the zero vector; no similarity is defined."""


def zsl_label(
    v: np.ndarray,
    descriptors: Mapping[int, np.ndarray],
    threshold: float = DEFAULT_THRESHOLD,
    k: int = DEFAULT_K,
) -> list[ScoredLabel]:
    """Labels whose best descriptor lies strictly under the distance threshold.

    Per label the distance is min(1 - cos(v, d)) over that label's
    descriptor matrix (one row per descriptor). Results are sorted by
    ascending distance, ties by ascending label index, truncated to k.
    An empty result is a legitimate outcome.
    """
    v = np.asarray(v, dtype=np.float64)
    v_norm = float(np.linalg.norm(v))
    if v_norm == 0.0:
        raise UnembeddableError("zero post vector")

    scored: list[ScoredLabel] = []
    for label in sorted(descriptors):
        mat = np.asarray(descriptors[label], dtype=np.float64)
        if mat.size == 0:
            continue
        norms = np.linalg.norm(mat, axis=1)
        ok = norms > 0
        if not ok.any():
            continue
        sims = (mat[ok] @ v) / (norms[ok] * v_norm)
        distance = float(1.0 - sims.max())
        if distance < threshold:
            scored.append(ScoredLabel(label, distance))
    scored.sort(key=lambda s: (s.distance, s.label))
    return scored[:k]
