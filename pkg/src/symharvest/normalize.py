"""Deterministic tweet-normalization pipeline.

Ten rules applied in a fixed order: lowercasing, one-character-word and
digit removal, contraction expansion, elongation collapse, self-disclosure
drop, punctuation filtering, URL removal, non-ASCII removal, hashtag
removal, emoji removal. The self-disclosure check runs first on the raw
lowercased text so later removals cannot mask the trigger words.

Output tokens contain only [a-z] words plus the four retained punctuation
marks . , ? ! as standalone tokens. The pipeline is closed under its own
output: normalizing a normalized text reproduces the same tokens.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping

KEEP_PUNCT = frozenset({".", ",", "?", "!"})
PUNCT_TOKENS = KEEP_PUNCT

_DISCLOSURE_RE = re.compile(r"\b(diagnosed|diagnosis)\b")
_URL_RE = re.compile(r"(https?://\S*|www\.\S*)", re.ASCII)
_ELONGATION_RE = re.compile(r"([a-z])\1{2,}")
_DIGIT_RE = re.compile(r"[0-9]")


@dataclass(frozen=True)
class RawPost:
    """One social-media text item prior to normalization."""

    id: str
    text: str
    source: str = ""


@dataclass(frozen=True)
class NormalizedPost:
    id: str
    tokens: tuple[str, ...]
    source: str = ""

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class Dropped:
    id: str
    reason: str


def load_contraction_map(path) -> dict[str, str]:
    """Read a surface<TAB>expansion contraction file (UTF-8, one pair per line)."""
    cmap: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            surface, _, expansion = line.partition("\t")
            if not expansion:
                raise ValueError(f"bad contraction line (no tab): {line!r}")
            cmap[surface.strip().lower()] = expansion.strip().lower()
    return cmap


@lru_cache(maxsize=1)
def default_contraction_map() -> dict[str, str]:
    path = resources.files("symharvest.data") / "contractions.tsv"
    with resources.as_file(path) as p:
        return load_contraction_map(p)


def _exempt_singles(cmap: Mapping[str, str]) -> frozenset[str]:
    # Single-character words produced by contraction expansion ("i have")
    # must survive the one-character filter, otherwise re-normalizing the
    # pipeline's own output would change it.
    return frozenset(w for exp in cmap.values() for w in exp.split() if len(w) == 1)


def _is_url(word: str) -> bool:
    return bool(_URL_RE.fullmatch(word))


def _is_hashtag(word: str) -> bool:
    return word.startswith("#") and len(word) > 1


def _word_filter(words: Iterable[str], exempt: frozenset[str]) -> list[str]:
    # Drops empty words and one-character words; the retained punctuation
    # marks and contraction-expansion singles are the allowed exceptions.
    out = []
    for w in words:
        if not w:
            continue
        if len(w) == 1 and w not in KEEP_PUNCT and w not in exempt:
            continue
        out.append(w)
    return out


def _expand_contractions(words: list[str], cmap: Mapping[str, str]) -> list[str]:
    out: list[str] = []
    for word in words:
        stripped_l = word.lstrip(string.punctuation)
        prefix = word[: len(word) - len(stripped_l)]
        core = stripped_l.rstrip(string.punctuation)
        suffix = stripped_l[len(core):]
        expansion = cmap.get(core) if core else None
        if expansion is None:
            out.append(word)
        else:
            out.extend((prefix + expansion + suffix).split())
    return out


def _collapse_elongation(word: str) -> str:
    # URLs and hashtags are removed whole by later rules; collapsing runs
    # inside them first would break the "www." prefix match.
    if _is_url(word) or _is_hashtag(word):
        return word
    return _ELONGATION_RE.sub(r"\1", word)


def _split_punctuation(word: str) -> list[str]:
    # Retained marks become standalone tokens; every other ASCII character
    # that is not a lowercase letter is dropped. Non-ASCII passes through
    # for the dedicated non-ASCII rule.
    if _is_url(word) or _is_hashtag(word):
        return [word]
    tokens: list[str] = []
    buf: list[str] = []
    for ch in word:
        if ch in KEEP_PUNCT:
            if buf:
                tokens.append("".join(buf))
                buf = []
            tokens.append(ch)
        elif ch.isascii() and not ("a" <= ch <= "z"):
            continue
        else:
            buf.append(ch)
    if buf:
        tokens.append("".join(buf))
    return tokens


def _strip_non_ascii(word: str) -> str:
    return "".join(ch for ch in word if ord(ch) < 128)


def normalize(
    post: RawPost,
    contraction_map: Mapping[str, str] | None = None,
    drop_on_disclosure: bool = True,
) -> NormalizedPost | Dropped:
    """Apply the normalization rules to one post.

    Returns a NormalizedPost, or Dropped("self-disclosure") when the raw
    text contains "diagnosed" or "diagnosis" as a word and the drop flag
    is set. Every input yields one of the two; nothing raises.
    """
    cmap = default_contraction_map() if contraction_map is None else contraction_map
    exempt = _exempt_singles(cmap)

    lowered = post.text.lower()
    if drop_on_disclosure and _DISCLOSURE_RE.search(lowered):
        return Dropped(id=post.id, reason="self-disclosure")

    words = lowered.split()
    words = [_DIGIT_RE.sub("", w) for w in words]
    words = _word_filter(words, exempt)
    words = _expand_contractions(words, cmap)
    words = [_collapse_elongation(w) for w in words]
    # Self-disclosure (rule 5) already handled on the raw text above.
    tokens: list[str] = []
    for w in words:
        tokens.extend(_split_punctuation(w))
    tokens = [t for t in tokens if not _is_url(t)]
    tokens = [_strip_non_ascii(t) for t in tokens]
    tokens = [t for t in tokens if not _is_hashtag(t)]
    # Emojis are non-ASCII code points, removed by the previous step; no
    # separate ASCII-emoticon handling.
    tokens = [_collapse_elongation(t) for t in tokens]
    tokens = _word_filter(tokens, exempt)
    return NormalizedPost(id=post.id, tokens=tuple(tokens), source=post.source)


def short_post_flag(post: NormalizedPost) -> bool:
    """True when the post has fewer than three non-punctuation tokens.

    Advisory signal for gibberish candidates; never auto-labels.
    """
    words = sum(1 for t in post.tokens if t not in PUNCT_TOKENS)
    return words < 3
