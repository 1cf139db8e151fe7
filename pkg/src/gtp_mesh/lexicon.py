"""Context-free base phonemizer: lexicon lookup with letter-to-sound fallback.

This is the fast, always-resident stage. For words with several recorded
pronunciations it deliberately emits the highest-prior variant; fixing the
cases where that guess is wrong is the refinement services' job.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

from .core import BOUNDARY, PhonemeInventory, PhonemeSequence, Token, tokenize
from .errors import (
    EmptyPronunciationError,
    NoRuleError,
    ParseError,
    UnknownPhonemeError,
)


class PronVariant(NamedTuple):
    id: int
    phonemes: tuple[str, ...]
    prior_count: int


class HomographSite(NamedTuple):
    """Position of a multi-pronunciation word in an utterance."""

    token_index: int
    word: str


class Lexicon:
    """Surface form -> pronunciation variants, ordered by descending prior."""

    def __init__(self, entries: dict[str, list[PronVariant]]):
        for word, variants in entries.items():
            if not variants:
                raise ValueError(f"lexicon entry {word!r} has no variants")
            if sorted(v.id for v in variants) != list(range(len(variants))):
                raise ValueError(f"lexicon entry {word!r} has non-consecutive variant ids")
        self.entries = {
            word: sorted(variants, key=lambda v: (-v.prior_count, v.id))
            for word, variants in entries.items()
        }

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def variants(self, word: str) -> list[PronVariant]:
        return self.entries[word]

    def variant_by_id(self, word: str, variant_id: int) -> PronVariant:
        for v in self.entries[word]:
            if v.id == variant_id:
                return v
        raise KeyError((word, variant_id))

    def is_homograph(self, word: str) -> bool:
        return word in self.entries and len(self.entries[word]) > 1

    def homographs(self) -> list[str]:
        return [w for w, vs in self.entries.items() if len(vs) > 1]


@dataclass(frozen=True)
class LtsTable:
    """Single-grapheme letter-to-sound rules; rule outputs may be empty."""

    rules: dict[str, tuple[str, ...]]

    def __post_init__(self):
        for grapheme in self.rules:
            if len(grapheme) != 1:
                raise ValueError(f"LTS rule key must be one scalar: {grapheme!r}")


def load_lexicon(path, inventory: Optional[PhonemeInventory] = None) -> Lexicon:
    """Parse a lexicon TSV: ``word<TAB>phonemes<TAB>prior_count``.

    prior_count is optional (default 1). Duplicate (word, pronunciation) lines
    merge by summing their counts. Phoneme labels are validated against the
    inventory when one is given.
    """
    raw: dict[str, list[tuple[tuple[str, ...], int]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise ParseError(line_no, f"expected 2 or 3 tab-separated fields, got {len(parts)}", path)
            word = parts[0].strip()
            phonemes = tuple(parts[1].split())
            if not word or not phonemes:
                raise ParseError(line_no, "empty word or pronunciation", path)
            if inventory is not None:
                for pos, label in enumerate(phonemes):
                    if label not in inventory:
                        raise UnknownPhonemeError(label, pos)
            count = 1
            if len(parts) == 3 and parts[2].strip():
                try:
                    count = int(parts[2])
                except ValueError:
                    raise ParseError(line_no, f"bad prior count {parts[2]!r}", path) from None
                if count < 0:
                    raise ParseError(line_no, f"negative prior count {count}", path)
            variants = raw.setdefault(word, [])
            for i, (phones, prior) in enumerate(variants):
                if phones == phonemes:
                    variants[i] = (phones, prior + count)
                    break
            else:
                variants.append((phonemes, count))
    entries = {
        word: [PronVariant(i, phones, prior) for i, (phones, prior) in enumerate(variants)]
        for word, variants in raw.items()
    }
    return Lexicon(entries)


def load_lts(path, inventory: Optional[PhonemeInventory] = None) -> LtsTable:
    """Parse an LTS file: ``grapheme<TAB>phonemes`` (phonemes may be empty)."""
    rules: dict[str, tuple[str, ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(line_no, "expected grapheme<TAB>phonemes", path)
            grapheme = parts[0]
            if len(grapheme) != 1:
                raise ParseError(line_no, f"grapheme must be one scalar: {grapheme!r}", path)
            phonemes = tuple(parts[1].split())
            if inventory is not None:
                for pos, label in enumerate(phonemes):
                    if label not in inventory:
                        raise UnknownPhonemeError(label, pos)
            rules[grapheme] = phonemes
    return LtsTable(rules)


class PhonemizeResult(NamedTuple):
    phonemes: tuple[str, ...]
    is_homograph: bool
    word: str


def phonemize_token(token: Token, lex: Lexicon, lts: LtsTable) -> PhonemizeResult:
    """Lexicon lookup first; per-grapheme LTS fallback for unknown words."""
    word = token.surface
    if word in lex:
        variants = lex.variants(word)
        return PhonemizeResult(variants[0].phonemes, len(variants) > 1, word)
    phones: list[str] = []
    for grapheme in word:
        if grapheme not in lts.rules:
            raise NoRuleError(grapheme, token.index)
        phones.extend(lts.rules[grapheme])
    return PhonemizeResult(tuple(phones), False, word)


def phonemize_utterance(
    text: str, lex: Lexicon, lts: LtsTable
) -> tuple[PhonemeSequence, list[HomographSite]]:
    """Phonemize each token in order, with boundaries between words.

    Returns the aligned sequence plus a site record for every token whose
    word has multiple pronunciations. Each token must yield at least one
    phoneme so spans stay in one-to-one correspondence with tokens.
    """
    items: list[str] = []
    spans: list[tuple[int, int]] = []
    sites: list[HomographSite] = []
    for token in tokenize(text):
        result = phonemize_token(token, lex, lts)
        if not result.phonemes:
            raise EmptyPronunciationError(token.surface, token.index)
        if items:
            items.append(BOUNDARY)
        start = len(items)
        items.extend(result.phonemes)
        spans.append((start, len(items)))
        if result.is_homograph:
            sites.append(HomographSite(token.index, result.word))
    return PhonemeSequence(tuple(items), tuple(spans)), sites
