"""Synthetic corpus for pipeline tests.

Symptom posts are lightly perturbed variants of the packaged symptom
descriptor sentences (a word dropped, neighbours swapped), so the
zero-shot component has real signal to contribute; control posts use a
neutral everyday vocabulary that shares no content words with the
descriptors. Everything is seeded and deterministic.
"""

import random
from functools import lru_cache

from symharvest.embeddings import load_descriptor_corpus
from symharvest.normalize import RawPost, normalize
from symharvest.store import DatasetRecord

CONTROL_VOCAB = [
    "pizza", "garage", "football", "traffic", "sunshine", "kitten",
    "recipe", "stadium", "concert", "garden", "bicycle", "painting",
    "camera", "holiday", "puzzle", "laundry", "museum", "picnic",
    "guitar", "sailing", "carpet", "window", "barbecue", "library",
]


# Posts are generated from a handful of sentences per label so a split
# covers every sentence on both sides; the zero-shot matcher still sees
# the full descriptor bank.
GENERATION_SENTENCES = 5


@lru_cache(maxsize=1)
def descriptor_token_bank() -> dict[int, list[tuple[str, ...]]]:
    bank: dict[int, list[tuple[str, ...]]] = {}
    for lab, texts in load_descriptor_corpus().items():
        variants = []
        for text in texts:
            norm = normalize(RawPost(id="d", text=text))
            tokens = tuple(w for w in norm.tokens if w not in ".,?!")
            if len(tokens) >= 4:
                variants.append(tokens)
        bank[lab] = variants
    return bank


def symptom_tokens(rng: random.Random, lab: int) -> list[str]:
    base = list(rng.choice(descriptor_token_bank()[lab][:GENERATION_SENTENCES]))
    if len(base) > 5:
        base.pop(rng.randrange(len(base)))
    if rng.random() < 0.5 and len(base) > 3:
        i = rng.randrange(len(base) - 1)
        base[i], base[i + 1] = base[i + 1], base[i]
    return base


def record(pid, tokens, labels=None) -> DatasetRecord:
    return DatasetRecord(
        id=str(pid),
        text=" ".join(tokens),
        tokens=tuple(tokens),
        labels=None if labels is None else frozenset(labels),
    )


def make_corpus(
    seed=13,
    n_seed=140,
    n_pool=300,
    n_external=50,
    n_ed=40,
    n_noed=150,
    n_gibberish=6,
    n_pool_controls=30,
):
    """Returns (seed_posts, unlabelled_pool, external_pool)."""
    rng = random.Random(seed)
    labels_cycle = list(range(1, 11))

    seed_posts = []
    for i in range(n_seed):
        lab = labels_cycle[i % 10] if i < 20 else rng.choice(labels_cycle)
        seed_posts.append(record(f"seed{i}", symptom_tokens(rng, lab), {lab}))
    for i in range(n_ed):
        lab = rng.choice(labels_cycle)
        seed_posts.append(record(f"ed{i}", symptom_tokens(rng, lab), {11}))
    for i in range(n_noed):
        seed_posts.append(record(f"no{i}", rng.sample(CONTROL_VOCAB, 5), {12}))
    for i in range(n_gibberish):
        seed_posts.append(record(f"gib{i}", ["zq", "qz"], {13}))
    rng.shuffle(seed_posts)

    pool = [
        record(f"pool{i}", symptom_tokens(rng, rng.choice(labels_cycle)))
        for i in range(n_pool)
    ]
    pool += [
        record(f"poolctl{i}", rng.sample(CONTROL_VOCAB, 5))
        for i in range(n_pool_controls)
    ]

    external = [
        record(f"ext{i}", symptom_tokens(rng, rng.choice(labels_cycle)))
        for i in range(n_external)
    ]
    return seed_posts, pool, external
