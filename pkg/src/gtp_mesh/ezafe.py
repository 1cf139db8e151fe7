"""Ezafe detection as binary per-token tagging, plus phoneme insertion.

The tagger is an averaged perceptron over a small fixed feature template.
It stands behind the same surface a heavier neural tagger would: train on a
marked corpus, tag token lists, report precision/recall/F1. Training is
fully deterministic (fixed visit order, integer updates, running average).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import BOUNDARY, PhonemeInventory, PhonemeSequence
from .errors import (
    EmptyCorpusError,
    MissingAlignmentError,
    ParseError,
    TagLengthMismatchError,
)

EZAFE = "ezafe"
NONE = "none"
FEATURE_TEMPLATE_VERSION = 1

MARKER = "=e"


@dataclass
class EzafeModel:
    weights: dict[tuple[str, str], float]
    epochs_trained: int
    feature_template_version: int = FEATURE_TEMPLATE_VERSION


class EzafeCorpus:
    """Utterances as (surface, is_ezafe) pairs, parsed from ``=e`` markers."""

    def __init__(self, utterances: Sequence[Sequence[tuple[str, bool]]]):
        self.utterances = [list(utt) for utt in utterances]

    @classmethod
    def parse(cls, lines: Sequence[str], path=None) -> "EzafeCorpus":
        utterances = []
        for line_no, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            utt = []
            for raw in line.split():
                if raw.endswith(MARKER):
                    surface = raw[: -len(MARKER)]
                    if not surface or surface.endswith(MARKER):
                        raise ParseError(line_no, f"bad ezafe marker on {raw!r}", path)
                    utt.append((surface, True))
                else:
                    utt.append((raw, False))
            utterances.append(utt)
        return cls(utterances)

    @classmethod
    def load(cls, path) -> "EzafeCorpus":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read().splitlines(), path)

    def __len__(self) -> int:
        return len(self.utterances)


def extract_features(tokens: Sequence[str], i: int) -> list[str]:
    """Fixed template: word, neighbors, 1-3 char suffixes, next suffix, bias."""
    if not 0 <= i < len(tokens):
        raise IndexError(i)
    tok = tokens[i]
    feats = [
        f"w={tok}",
        f"prev={tokens[i - 1] if i > 0 else '^'}",
        f"next={tokens[i + 1] if i + 1 < len(tokens) else '$'}",
    ]
    for n in (1, 2, 3):
        if len(tok) >= n:
            feats.append(f"suf{n}={tok[-n:]}")
    if i + 1 < len(tokens):
        feats.append(f"next_suf1={tokens[i + 1][-1:]}")
    feats.append("bias")
    return feats


def _predict(weights: dict[tuple[str, str], float], feats: Sequence[str]) -> str:
    score_e = sum(weights.get((f, EZAFE), 0.0) for f in feats)
    score_n = sum(weights.get((f, NONE), 0.0) for f in feats)
    return EZAFE if score_e > score_n else NONE  # tie resolves to none


def train(corpus: EzafeCorpus, epochs: int) -> EzafeModel:
    """Averaged perceptron: visit utterances in order, +1/-1 updates on error,
    final weights are the average of the weight vector over all token steps."""
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if not corpus.utterances:
        raise EmptyCorpusError("training corpus is empty")
    weights: dict[tuple[str, str], float] = {}
    totals: dict[tuple[str, str], float] = {}
    stamps: dict[tuple[str, str], int] = {}
    step = 0

    def bump(key, delta):
        totals[key] = totals.get(key, 0.0) + (step - stamps.get(key, 0)) * weights.get(key, 0.0)
        stamps[key] = step
        weights[key] = weights.get(key, 0.0) + delta

    for _ in range(epochs):
        for utt in corpus.utterances:
            tokens = [surface for surface, _ in utt]
            for i, (_, gold_ezafe) in enumerate(utt):
                step += 1
                feats = extract_features(tokens, i)
                gold = EZAFE if gold_ezafe else NONE
                pred = _predict(weights, feats)
                if pred != gold:
                    for f in feats:
                        bump((f, gold), +1.0)
                        bump((f, pred), -1.0)
    averaged = {}
    for key, w in weights.items():
        total = totals.get(key, 0.0) + (step - stamps.get(key, 0)) * w
        averaged[key] = total / step
    return EzafeModel(weights=averaged, epochs_trained=epochs)


def tag(model: EzafeModel, tokens: Sequence[str]) -> list[bool]:
    """Per-token ezafe flags; the final token is always untagged since the
    ezafe phoneme links a word to a following one."""
    flags = []
    for i in range(len(tokens)):
        if i == len(tokens) - 1:
            flags.append(False)
        else:
            flags.append(_predict(model.weights, extract_features(tokens, i)) == EZAFE)
    return flags


def insert_ezafe(
    seq: PhonemeSequence,
    tags: Sequence[bool],
    inventory: PhonemeInventory,
    glide_triggers: Optional[frozenset] = None,
    glide_label: Optional[str] = None,
) -> PhonemeSequence:
    """Append the ezafe phoneme to each tagged word that lacks one.

    With a glide configuration, tagged words ending in a trigger phoneme get
    the glide label before the ezafe phoneme. Idempotent: spans that already
    end with the ezafe phoneme are left alone.
    """
    if seq.alignment is None:
        raise MissingAlignmentError("insert_ezafe needs an aligned sequence")
    if len(tags) != len(seq.alignment):
        raise TagLengthMismatchError(len(tags), len(seq.alignment))
    ez = inventory.ezafe_symbol
    items: list[str] = []
    spans: list[tuple[int, int]] = []
    for (start, end), tagged in zip(seq.alignment, tags):
        if items:
            items.append(BOUNDARY)
        new_start = len(items)
        word = list(seq.items[start:end])
        if tagged and (not word or word[-1] != ez):
            if glide_triggers and glide_label and word and word[-1] in glide_triggers:
                word.append(glide_label)
            word.append(ez)
        items.extend(word)
        spans.append((new_start, len(items)))
    return PhonemeSequence(tuple(items), tuple(spans))


def evaluate(model: EzafeModel, corpus: EzafeCorpus) -> tuple[float, float, float]:
    """Token-level precision, recall, F1 for the ezafe class (fractions)."""
    if not corpus.utterances:
        raise EmptyCorpusError("evaluation corpus is empty")
    tp = fp = fn = 0
    for utt in corpus.utterances:
        tokens = [surface for surface, _ in utt]
        predicted = tag(model, tokens)
        for (_, gold), pred in zip(utt, predicted):
            if pred and gold:
                tp += 1
            elif pred and not gold:
                fp += 1
            elif gold and not pred:
                fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def save_model(model: EzafeModel, path) -> None:
    """TSV dump, sorted by feature then class, with a metadata header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"epochs={model.epochs_trained}\ttemplate={model.feature_template_version}\n")
        for feature, cls in sorted(model.weights):
            fh.write(f"{feature}\t{cls}\t{model.weights[(feature, cls)]!r}\n")


def load_model(path) -> EzafeModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(0, "empty model file", path)
    header = dict(part.split("=", 1) for part in lines[0].split("\t") if "=" in part)
    try:
        epochs = int(header["epochs"])
        template = int(header["template"])
    except (KeyError, ValueError) as exc:
        raise ParseError(1, f"bad model header: {lines[0]!r}", path) from exc
    weights: dict[tuple[str, str], float] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(line_no, f"expected 3 fields, got {len(parts)}", path)
        feature, cls, weight_raw = parts
        if cls not in (EZAFE, NONE):
            raise ParseError(line_no, f"bad class {cls!r}", path)
        try:
            weights[(feature, cls)] = float(weight_raw)
        except ValueError as exc:
            raise ParseError(line_no, f"bad weight {weight_raw!r}", path) from exc
    return EzafeModel(weights=weights, epochs_trained=epochs, feature_template_version=template)
