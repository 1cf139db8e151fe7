"""Homograph disambiguation from word co-occurrence statistics.

The db counts, per pronunciation variant, how often each nearby word was
seen in a window around annotated occurrences. At inference time variants
are ranked by a smoothed log-likelihood: add-alpha naive Bayes over the
context words plus a prior term, which degrades gracefully to the prior
when the context is empty or unseen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .core import BOUNDARY, PhonemeSequence
from .errors import (
    MissingAlignmentError,
    ParseError,
    UnknownVariantError,
    WordNotInDbError,
)
from .lexicon import HomographSite, Lexicon

DEFAULT_WINDOW = 5
DEFAULT_ALPHA = 1.0


@dataclass
class VariantStats:
    prior_count: int = 0
    cooc: dict[str, int] = field(default_factory=dict)


@dataclass
class HomographDb:
    window: int
    alpha: float
    words: dict[str, dict[int, VariantStats]]
    vocab_size: int

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def stats(self, word: str, variant_id: int) -> VariantStats:
        return self.words.get(word, {}).get(variant_id, VariantStats())

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomographDb):
            return NotImplemented
        return (
            self.window == other.window
            and self.alpha == other.alpha
            and self.vocab_size == other.vocab_size
            and {w: {v: (s.prior_count, s.cooc) for v, s in vs.items()} for w, vs in self.words.items()}
            == {w: {v: (s.prior_count, s.cooc) for v, s in vs.items()} for w, vs in other.words.items()}
        )


class AnnotatedToken(NamedTuple):
    surface: str
    variant: Optional[int]  # None for plain context tokens


def parse_annotated_token(raw: str) -> AnnotatedToken:
    """Split a ``word#<id>`` annotation; tokens without one pass through."""
    if "#" in raw:
        head, tail = raw.rsplit("#", 1)
        if head and tail.isdigit():
            return AnnotatedToken(head, int(tail))
    return AnnotatedToken(raw, None)


class AnnotatedCorpus:
    """Utterances whose homograph tokens carry an explicit variant annotation."""

    def __init__(self, utterances: Sequence[Sequence[str]]):
        self.utterances = [
            [parse_annotated_token(tok) for tok in utt] for utt in utterances
        ]

    @classmethod
    def load(cls, path) -> "AnnotatedCorpus":
        utterances = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                utterances.append(line.split())
        return cls(utterances)


def build_db(
    corpus: AnnotatedCorpus,
    lex: Lexicon,
    window: int = DEFAULT_WINDOW,
    alpha: float = DEFAULT_ALPHA,
) -> HomographDb:
    """Count priors and windowed co-occurrences for every annotated occurrence.

    Context is the unannotated tokens within ``window`` positions on either
    side. Every homograph in the lexicon gets a (possibly all-zero) entry so
    inference can always fall back to the prior tie-break.
    """
    words: dict[str, dict[int, VariantStats]] = {}
    for word in lex.homographs():
        words[word] = {v.id: VariantStats() for v in lex.variants(word)}
    vocab: set[str] = set()
    for utt in corpus.utterances:
        for i, tok in enumerate(utt):
            if tok.variant is None:
                continue
            if tok.surface not in lex or tok.variant >= len(lex.variants(tok.surface)):
                raise UnknownVariantError(tok.surface, tok.variant)
            stats = words.setdefault(tok.surface, {}).setdefault(tok.variant, VariantStats())
            stats.prior_count += 1
            lo = max(0, i - window)
            hi = min(len(utt), i + window + 1)
            for j in range(lo, hi):
                if j == i or utt[j].variant is not None:
                    continue
                ctx = utt[j].surface
                stats.cooc[ctx] = stats.cooc.get(ctx, 0) + 1
                vocab.add(ctx)
    return HomographDb(window=window, alpha=alpha, words=words, vocab_size=len(vocab))


def score(db: HomographDb, word: str, variant_id: int, context: Sequence[str]) -> float:
    """Smoothed log-likelihood of a variant given nearby words.

    log(prior + a) + sum over context of log((cooc + a) / (prior + a * V)).
    """
    if word not in db:
        raise WordNotInDbError(word)
    stats = db.stats(word, variant_id)
    alpha = db.alpha
    denom = stats.prior_count + alpha * db.vocab_size
    if denom == 0:  # nothing observed at all; smooth as if one context type existed
        denom = alpha
    total = math.log(stats.prior_count + alpha)
    for ctx in context:
        total += math.log((stats.cooc.get(ctx, 0) + alpha) / denom)
    return total


class Choice(NamedTuple):
    variant: int
    fallback: bool  # word absent from the db, prior-0 default used


def disambiguate(
    db: HomographDb, site: HomographSite, tokens: Sequence[str], lex: Lexicon
) -> Choice:
    """Pick the variant with the best contextual score.

    Context is every other token within the window. Ties break toward the
    higher db prior, then the lower variant id. Words missing from the db
    fall back to variant 0 with the fallback flag set.
    """
    word = site.word
    if word not in db:
        return Choice(0, True)
    i = site.token_index
    lo = max(0, i - db.window)
    hi = min(len(tokens), i + db.window + 1)
    context = [tokens[j] for j in range(lo, hi) if j != i]
    best: Optional[tuple] = None
    best_id = 0
    for variant in lex.variants(word):
        s = score(db, word, variant.id, context)
        key = (s, db.stats(word, variant.id).prior_count, -variant.id)
        if best is None or key > best:
            best = key
            best_id = variant.id
    return Choice(best_id, False)


def apply_homographs(
    seq: PhonemeSequence,
    sites: Sequence[HomographSite],
    choices: Sequence[int],
    lex: Lexicon,
) -> PhonemeSequence:
    """Splice each chosen variant's phonemes over its site's word span."""
    if seq.alignment is None:
        raise MissingAlignmentError("apply_homographs needs an aligned sequence")
    if len(sites) != len(choices):
        raise ValueError(f"{len(sites)} sites but {len(choices)} choices")
    replacements = {
        site.token_index: lex.variant_by_id(site.word, choice).phonemes
        for site, choice in zip(sites, choices)
    }
    items: list[str] = []
    spans: list[tuple[int, int]] = []
    for ordinal, (start, end) in enumerate(seq.alignment):
        if items:
            items.append(BOUNDARY)
        new_start = len(items)
        items.extend(replacements.get(ordinal, seq.items[start:end]))
        spans.append((new_start, len(items)))
    return PhonemeSequence(tuple(items), tuple(spans))


def save_db(db: HomographDb, path) -> None:
    """Write the db as TSV: header line, then one line per (word, variant)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"window={db.window}\talpha={db.alpha!r}\tvocab={db.vocab_size}\n")
        for word in sorted(db.words):
            for variant_id in sorted(db.words[word]):
                stats = db.words[word][variant_id]
                cooc = ",".join(f"{w}:{c}" for w, c in sorted(stats.cooc.items()))
                fh.write(f"{word}\t{variant_id}\t{stats.prior_count}\t{cooc}\n")


def load_db(path) -> HomographDb:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(0, "empty db file", path)
    header = dict(
        part.split("=", 1) for part in lines[0].split("\t") if "=" in part
    )
    try:
        window = int(header["window"])
        alpha = float(header["alpha"])
        vocab_size = int(header["vocab"])
    except (KeyError, ValueError) as exc:
        raise ParseError(1, f"bad db header: {lines[0]!r}", path) from exc
    words: dict[str, dict[int, VariantStats]] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(line_no, f"expected 4 fields, got {len(parts)}", path)
        word, variant_raw, prior_raw, cooc_raw = parts
        try:
            variant_id = int(variant_raw)
            prior = int(prior_raw)
        except ValueError as exc:
            raise ParseError(line_no, "bad variant or prior", path) from exc
        cooc: dict[str, int] = {}
        if cooc_raw:
            for pair in cooc_raw.split(","):
                ctx, _, count_raw = pair.rpartition(":")
                if not ctx or not count_raw.isdigit():
                    raise ParseError(line_no, f"bad cooc entry {pair!r}", path)
                cooc[ctx] = int(count_raw)
        words.setdefault(word, {})[variant_id] = VariantStats(prior, cooc)
    try:
        return HomographDb(window=window, alpha=alpha, words=words, vocab_size=vocab_size)
    except ValueError as exc:
        raise ParseError(1, str(exc), path) from exc
