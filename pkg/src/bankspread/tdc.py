"""Text-based refinement of detected table categories.

The vision detector cannot reliably tell credit tables from debit
tables, so both arrive under the merged ``CreditDebit`` label. This
module recovers the final category from the text around the table:

  1. ``extract_region_text`` gathers the OCR words belonging to a
     caption or header region (IoU > 0.5 with the region, or at least
     90% of the word's area inside it) in reading order.
  2. Captions map to the table whose top edge is vertically nearest;
     headers map to the table containing at least 90% of their area.
  3. Three multinomial naive-Bayes classifiers (header-only,
     caption-only, caption+header) score the 7 transaction-table text
     classes; the best-informed available model wins.
  4. ``refine_category`` applies the final rules: the classifier output
     replaces only the ``CreditDebit`` label (default ``Debit`` when no
     text was found), and an ``Other`` table whose caption mentions
     "service fee" is re-marked ``Debit`` outright.

Counts use Laplace smoothing with alpha = 1; all tie-breaks are fixed
so the whole path is deterministic.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, Union

from .docmodel import DetectedObject, OcrWord, TableCategory
from .geometry import Box, containment_ratio, iou

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Substring (case-insensitive, on the raw caption) that forces an
# Other-class table to be treated as a fee table, i.e. Debit.
SERVICE_FEE_PHRASE = "service fee"

# Fixed class order for the text classifiers; also the tie-break order.
CATEGORY_ORDER: tuple[TableCategory, ...] = (
    TableCategory.CREDIT,
    TableCategory.DEBIT,
    TableCategory.CHECK,
    TableCategory.TXN_BAL,
    TableCategory.TXN_AMT_BAL,
    TableCategory.TXN_CHECK_BAL,
    TableCategory.OTHER,
)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumerics; digits kept, punctuation dropped."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class RegionText:
    """Text gathered from one page region. ``region`` is None for
    non-spatial text such as training corpus rows."""

    tokens: tuple[str, ...]
    raw: str
    region: Box | None = None

    @classmethod
    def from_text(cls, raw: str, region: Box | None = None) -> "RegionText":
        return cls(tokens=tuple(tokenize(raw)), raw=raw, region=region)

    def __bool__(self) -> bool:
        return bool(self.tokens)


def extract_region_text(region: Box, words: Sequence[OcrWord]) -> RegionText:
    """Collect the words belonging to ``region`` in reading order.

    A word belongs when its IoU with the region exceeds 0.5 or at least
    90% of its area lies inside. Reading order is top-to-bottom then
    left-to-right on the word box corner.
    """
    hits = [
        w
        for w in words
        if iou(w.box, region) > 0.5 or containment_ratio(w.box, region) >= 0.9
    ]
    hits.sort(key=lambda w: (w.box.y1, w.box.x1))
    raw = " ".join(w.text for w in hits)
    return RegionText(tokens=tuple(tokenize(raw)), raw=raw, region=region)


def map_captions_to_tables(
    captions: Sequence[DetectedObject], tables: Sequence[DetectedObject]
) -> dict[int, int | None]:
    """Assign every caption index the index of its table, or None.

    A caption goes to the table minimizing the vertical distance of the
    top-left corners, ties broken by horizontal distance then by table
    order. The mapping is total over captions; with no tables every
    caption maps to None. Many captions may share one table.
    """
    mapping: dict[int, int | None] = {}
    for ci, cap in enumerate(captions):
        best: int | None = None
        best_key: tuple[float, float, int] | None = None
        for ti, table in enumerate(tables):
            key = (
                abs(cap.box.y1 - table.box.y1),
                abs(cap.box.x1 - table.box.x1),
                ti,
            )
            if best_key is None or key < best_key:
                best, best_key = ti, key
        mapping[ci] = best
    return mapping


def map_headers_to_tables(
    headers: Sequence[DetectedObject],
    tables: Sequence[DetectedObject],
    containment_threshold: float = 0.9,
) -> dict[int, int | None]:
    """Assign each header index the table containing it, or None.

    Containment is intersection area over header area; the threshold
    (default 0.9) reflects headers sitting fully inside their table.
    The best-containing table wins, ties broken by table order.
    """
    mapping: dict[int, int | None] = {}
    for hi, header in enumerate(headers):
        best: int | None = None
        best_ratio = -1.0
        for ti, table in enumerate(tables):
            ratio = containment_ratio(header.box, table.box)
            if ratio >= containment_threshold and ratio > best_ratio:
                best, best_ratio = ti, ratio
        mapping[hi] = best
    return mapping


class NBVariant(Enum):
    HEADER = "header"
    CAPTION = "caption"
    HEADER_CAPTION = "header_caption"


@dataclass(frozen=True)
class NBModel:
    """Multinomial naive-Bayes over caption/header tokens.

    ``class_token_counts[c][v]`` counts vocabulary token v in class c's
    training text; ``class_doc_counts[c]`` counts its training samples.
    """

    variant: NBVariant
    classes: tuple[TableCategory, ...]
    vocab: dict[str, int]
    class_doc_counts: tuple[int, ...]
    class_token_counts: tuple[tuple[int, ...], ...]
    alpha: float = 1.0


def nb_train(
    samples: Sequence[tuple[Sequence[str], TableCategory]],
    variant: NBVariant,
    classes: Sequence[TableCategory] | None = None,
) -> NBModel:
    """Fit counts for a multinomial NB model with Laplace smoothing.

    ``samples`` are (token sequence, category) pairs. When ``classes``
    is omitted the classes present in the samples are used, ordered by
    the fixed category order; when given explicitly, every listed class
    must have at least one sample.
    """
    if not samples:
        raise ValueError("cannot train on an empty sample list")
    present = {cat for _, cat in samples}
    if classes is None:
        ordered = tuple(c for c in CATEGORY_ORDER if c in present)
        extra = present - set(ordered)
        if extra:  # categories outside the classifier set (e.g. aux labels)
            raise ValueError(f"samples carry non-classifier categories: {sorted(extra)}")
    else:
        ordered = tuple(classes)
        missing = [c for c in ordered if c not in present]
        if missing:
            raise ValueError(f"classes with zero samples: {[c.value for c in missing]}")
        stray = present - set(ordered)
        if stray:
            raise ValueError(f"samples outside class list: {sorted(stray)}")

    vocab: dict[str, int] = {}
    for tokens, _ in samples:
        for tok in tokens:
            if tok not in vocab:
                vocab[tok] = len(vocab)

    index = {c: i for i, c in enumerate(ordered)}
    doc_counts = [0] * len(ordered)
    token_counts = [[0] * len(vocab) for _ in ordered]
    for tokens, cat in samples:
        ci = index[cat]
        doc_counts[ci] += 1
        for tok in tokens:
            token_counts[ci][vocab[tok]] += 1

    return NBModel(
        variant=variant,
        classes=ordered,
        vocab=vocab,
        class_doc_counts=tuple(doc_counts),
        class_token_counts=tuple(tuple(row) for row in token_counts),
        alpha=1.0,
    )


def nb_predict(
    model: NBModel, text: Union[RegionText, Sequence[str]]
) -> tuple[TableCategory, list[float]]:
    """Return (argmax category, per-class log posteriors up to a constant).

    Unseen tokens get the smoothed zero-count likelihood
    alpha / (total_c + alpha * V). Empty text reduces to the prior
    argmax. Ties break by the fixed class order.
    """
    tokens = text.tokens if isinstance(text, RegionText) else tuple(text)
    total_docs = sum(model.class_doc_counts)
    vocab_size = len(model.vocab)
    counts = Counter(tokens)
    scores: list[float] = []
    for ci in range(len(model.classes)):
        score = math.log(model.class_doc_counts[ci] / total_docs)
        class_total = sum(model.class_token_counts[ci])
        denom = class_total + model.alpha * vocab_size
        for tok, n in counts.items():
            vi = model.vocab.get(tok)
            seen = model.class_token_counts[ci][vi] if vi is not None else 0
            score += n * math.log((seen + model.alpha) / denom)
        scores.append(score)
    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    return model.classes[best], scores


def save_nb_model(model: NBModel, path: Union[str, Path]) -> None:
    data = {
        "variant": model.variant.value,
        "classes": [c.value for c in model.classes],
        "vocab": model.vocab,
        "class_doc_counts": list(model.class_doc_counts),
        "class_token_counts": [list(r) for r in model.class_token_counts],
        "alpha": model.alpha,
    }
    Path(path).write_text(
        json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_nb_model(path: Union[str, Path]) -> NBModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot load NB model from {path}: {exc}") from exc
    try:
        variant = NBVariant(data["variant"])
        classes = tuple(TableCategory(c) for c in data["classes"])
        vocab = {str(k): int(v) for k, v in data["vocab"].items()}
        doc_counts = tuple(int(n) for n in data["class_doc_counts"])
        token_counts = tuple(
            tuple(int(n) for n in row) for row in data["class_token_counts"]
        )
        alpha = float(data["alpha"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ValueError(f"malformed NB model file {path}: {exc}") from exc
    if sorted(vocab.values()) != list(range(len(vocab))):
        raise ValueError(f"{path}: vocab indices must be a bijection onto 0..V-1")
    if len(doc_counts) != len(classes) or len(token_counts) != len(classes):
        raise ValueError(f"{path}: count arrays do not match class count")
    if any(len(row) != len(vocab) for row in token_counts):
        raise ValueError(f"{path}: token count rows do not match vocab size")
    if alpha <= 0:
        raise ValueError(f"{path}: alpha must be positive")
    if any(n <= 0 for n in doc_counts):
        raise ValueError(f"{path}: every class needs at least one sample")
    return NBModel(
        variant=variant,
        classes=classes,
        vocab=vocab,
        class_doc_counts=doc_counts,
        class_token_counts=token_counts,
        alpha=alpha,
    )


@dataclass(frozen=True)
class NBModelSet:
    """The three trained text classifiers, one per text availability case."""

    header: NBModel
    caption: NBModel
    header_caption: NBModel

    _FILES = {
        NBVariant.HEADER: "header.json",
        NBVariant.CAPTION: "caption.json",
        NBVariant.HEADER_CAPTION: "header_caption.json",
    }

    def save(self, directory: Union[str, Path]) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for model in (self.header, self.caption, self.header_caption):
            save_nb_model(model, directory / self._FILES[model.variant])

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "NBModelSet":
        directory = Path(directory)
        loaded = {}
        for variant, name in cls._FILES.items():
            model = load_nb_model(directory / name)
            if model.variant is not variant:
                raise ValueError(f"{name} holds variant {model.variant.value!r}")
            loaded[variant] = model
        return cls(
            header=loaded[NBVariant.HEADER],
            caption=loaded[NBVariant.CAPTION],
            header_caption=loaded[NBVariant.HEADER_CAPTION],
        )


def train_model_set(
    rows: Iterable[tuple[str, str, TableCategory]],
    classes: Sequence[TableCategory] | None = None,
) -> NBModelSet:
    """Train all three variants from (caption_text, header_text, category) rows.

    Each variant trains on the rows where its text is non-empty: headers
    for the header model, captions for the caption model, and the
    caption+header concatenation for the combined model (concatenating
    an empty side is the identity).
    """
    rows = list(rows)
    header_samples = []
    caption_samples = []
    both_samples = []
    for caption, header, cat in rows:
        cap_tokens = tokenize(caption)
        head_tokens = tokenize(header)
        if head_tokens:
            header_samples.append((head_tokens, cat))
        if cap_tokens:
            caption_samples.append((cap_tokens, cat))
        if cap_tokens or head_tokens:
            both_samples.append((cap_tokens + head_tokens, cat))
    return NBModelSet(
        header=nb_train(header_samples, NBVariant.HEADER, classes),
        caption=nb_train(caption_samples, NBVariant.CAPTION, classes),
        header_caption=nb_train(both_samples, NBVariant.HEADER_CAPTION, classes),
    )


def classify_table_text(
    models: NBModelSet,
    caption: RegionText | None,
    header: RegionText | None,
) -> tuple[TableCategory, list[float]] | None:
    """Score the table's text with the best-informed model.

    Caption and header present: the combined model on concatenated
    tokens. One of them: that variant. Neither (or only empty text):
    None.
    """
    cap = caption if caption and caption.tokens else None
    head = header if header and header.tokens else None
    if cap and head:
        return nb_predict(models.header_caption, cap.tokens + head.tokens)
    if cap:
        return nb_predict(models.caption, cap.tokens)
    if head:
        return nb_predict(models.header, head.tokens)
    return None


def refine_category(
    table: DetectedObject,
    caption: RegionText | None,
    header: RegionText | None,
    models: NBModelSet,
) -> TableCategory:
    """Final category of a detected table after the text rules.

    An ``Other`` table whose caption contains "service fee" becomes
    ``Debit``. A ``CreditDebit`` table takes the text classifier's
    prediction, or ``Debit`` when no caption/header text exists. Every
    other category keeps its vision label (any classifier output for
    those is advisory only and not applied here).
    """
    category = table.label
    if not isinstance(category, TableCategory):
        raise ValueError(f"not a detector-taxonomy object: {table.label!r}")
    if category is TableCategory.OTHER:
        if caption is not None and SERVICE_FEE_PHRASE in caption.raw.lower():
            return TableCategory.DEBIT
        return category
    if category is not TableCategory.CREDIT_DEBIT:
        return category
    picked = classify_table_text(models, caption, header)
    if picked is None:
        return TableCategory.DEBIT
    return picked[0]
