"""Tokens, phoneme inventories, and phoneme sequences.

Phonemes are whitespace-delimited ASCII-safe labels. A sequence is a flat
list of labels with ``|`` markers between words; the optional alignment maps
each word ordinal to its (start, end) item span so later stages can patch
individual words in place.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import AdjacentBoundaryError, ParseError, UnknownPhonemeError

BOUNDARY = "|"


@dataclass(frozen=True)
class Token:
    """One whitespace-delimited word of an utterance."""

    surface: str
    index: int

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if any(ch.isspace() for ch in self.surface):
            raise ValueError(f"token surface contains whitespace: {self.surface!r}")


class PhonemeInventory:
    """Ordered set of phoneme labels with one label designated as the Ezafe phoneme."""

    def __init__(self, symbols: Iterable[str], ezafe_symbol: str):
        symbols = tuple(symbols)
        seen = set()
        for sym in symbols:
            if not sym or any(ch.isspace() for ch in sym) or BOUNDARY in sym:
                raise ValueError(f"bad phoneme label: {sym!r}")
            if sym in seen:
                raise ValueError(f"duplicate phoneme label: {sym!r}")
            seen.add(sym)
        if ezafe_symbol not in seen:
            raise ValueError(f"ezafe symbol {ezafe_symbol!r} not in inventory")
        self.symbols = symbols
        self.ezafe_symbol = ezafe_symbol
        self._set = seen

    def __contains__(self, label: str) -> bool:
        return label in self._set

    def __len__(self) -> int:
        return len(self.symbols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhonemeInventory):
            return NotImplemented
        return self.symbols == other.symbols and self.ezafe_symbol == other.ezafe_symbol

    def __repr__(self) -> str:
        return f"PhonemeInventory({len(self.symbols)} symbols, ezafe={self.ezafe_symbol!r})"


Span = tuple[int, int]


@dataclass(frozen=True)
class PhonemeSequence:
    """Phoneme labels interleaved with word-boundary markers.

    ``alignment``, when present, holds one (start, end) span per word, in
    order, jointly covering exactly the non-boundary items. Equality compares
    items only; alignment is derived bookkeeping.
    """

    items: tuple[str, ...]
    alignment: Optional[tuple[Span, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        for a, b in zip(self.items, self.items[1:]):
            if a == BOUNDARY and b == BOUNDARY:
                raise AdjacentBoundaryError("adjacent boundary markers")
        if self.alignment is not None:
            align = tuple((int(s), int(e)) for s, e in self.alignment)
            object.__setattr__(self, "alignment", align)
            covered = []
            prev_end = 0
            for start, end in align:
                if not (0 <= start <= end <= len(self.items)) or start < prev_end:
                    raise ValueError(f"alignment span ({start}, {end}) out of order")
                covered.extend(range(start, end))
                prev_end = end
            phoneme_positions = [i for i, it in enumerate(self.items) if it != BOUNDARY]
            if covered != phoneme_positions:
                raise ValueError("alignment spans must cover exactly the non-boundary items")

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhonemeSequence):
            return NotImplemented
        return self.items == other.items

    def __hash__(self) -> int:
        return hash(self.items)

    def phonemes(self) -> list[str]:
        """Items with boundary markers removed."""
        return [it for it in self.items if it != BOUNDARY]

    @property
    def word_count(self) -> int:
        if self.alignment is None:
            raise ValueError("sequence has no alignment")
        return len(self.alignment)


def tokenize(text: str) -> list[Token]:
    """Split on Unicode whitespace, stripping punctuation off token edges.

    Tokens that are pure punctuation disappear; surviving tokens are indexed
    consecutively from 0.
    """
    tokens = []
    for raw in text.split():
        word = _strip_punct(raw)
        if word:
            tokens.append(Token(word, len(tokens)))
    return tokens


def _strip_punct(raw: str) -> str:
    start, end = 0, len(raw)
    while start < end and unicodedata.category(raw[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(raw[end - 1]).startswith("P"):
        end -= 1
    return raw[start:end]


def seq_to_text(seq: PhonemeSequence) -> str:
    """Render a sequence as space-joined labels with ``|`` boundaries."""
    return " ".join(seq.items)


def parse_seq(text: str, inventory: PhonemeInventory) -> PhonemeSequence:
    """Inverse of :func:`seq_to_text`; word alignment is derived from boundaries."""
    items = []
    for pos, label in enumerate(text.split()):
        if label == BOUNDARY:
            if items and items[-1] == BOUNDARY:
                raise AdjacentBoundaryError(f"adjacent boundary markers at position {pos}")
            items.append(BOUNDARY)
        elif label in inventory:
            items.append(label)
        else:
            raise UnknownPhonemeError(label, pos)
    return PhonemeSequence(tuple(items), derive_alignment(items))


def derive_alignment(items: Sequence[str]) -> tuple[Span, ...]:
    """Spans of the maximal non-boundary runs, one per word."""
    spans = []
    start = None
    for i, it in enumerate(items):
        if it == BOUNDARY:
            if start is not None:
                spans.append((start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        spans.append((start, len(items)))
    return tuple(spans)


def load_inventory(path) -> PhonemeInventory:
    """Read an inventory file: ``ezafe=<label>`` first, then one label per line."""
    ezafe = None
    symbols = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ezafe is None:
                if not line.startswith("ezafe="):
                    raise ParseError(line_no, "first line must be ezafe=<label>", path)
                ezafe = line[len("ezafe="):]
                if not ezafe:
                    raise ParseError(line_no, "empty ezafe label", path)
            else:
                symbols.append(line)
    if ezafe is None:
        raise ParseError(0, "empty inventory file", path)
    try:
        return PhonemeInventory(symbols, ezafe)
    except ValueError as exc:
        raise ParseError(0, str(exc), path) from exc


def save_inventory(inventory: PhonemeInventory, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"ezafe={inventory.ezafe_symbol}\n")
        for sym in inventory.symbols:
            fh.write(sym + "\n")
