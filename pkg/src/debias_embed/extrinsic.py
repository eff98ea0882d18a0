"""Extrinsic bias harness: occupation classification from short bios.

A deterministic multinomial linear classifier is trained by full-batch
gradient descent on cross-entropy over mean-of-token-vector features,
embeddings frozen. Bias is summarized as the mean absolute gap between
per-occupation accuracies for male- and female-authored records, and a
comparison of two runs reports the fraction of occupations whose gap
strictly shrank.

The corpus format is TSV: ``gender<TAB>occupation<TAB>token token ...``
with gender ``M`` or ``F``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from collections import Counter, defaultdict

import numpy as np

from .embeddings import EmbeddingSpace, space_fingerprint
from .subspace import BiasSubspace

log = logging.getLogger(__name__)

__all__ = [
    "BioRecord",
    "TrainConfig",
    "SynthesisConfig",
    "Classifier",
    "ExtrinsicResult",
    "GapComparison",
    "load_corpus",
    "synthesize_corpus",
    "split_corpus",
    "featurize",
    "cross_entropy_loss_and_grad",
    "train_classifier",
    "evaluate_gap",
    "compare_runs",
    "format_gap_table",
]

GENDERS = ("M", "F")


@dataclass(frozen=True)
class BioRecord:
    gender: str
    occupation: str
    tokens: tuple[str, ...]

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be 'M' or 'F', got {self.gender!r}")
        if not self.occupation:
            raise ValueError("empty occupation")
        if not self.tokens:
            raise ValueError("record has no tokens")
        object.__setattr__(self, "tokens", tuple(self.tokens))


def load_corpus(path, min_count: int = 100) -> list[BioRecord]:
    """Read a bios TSV; occupations rarer than ``min_count`` are dropped.

    Unknown gender tokens and empty bio texts raise ValueError with the
    line number. Dropped occupations are logged.
    """
    records: list[BioRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ValueError(
                    f"{path}: line {lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            gender, occupation, text = fields
            if gender not in GENDERS:
                raise ValueError(
                    f"{path}: line {lineno}: unknown gender token {gender!r}"
                )
            tokens = tuple(text.split())
            if not tokens:
                raise ValueError(f"{path}: line {lineno}: empty bio text")
            if not occupation:
                raise ValueError(f"{path}: line {lineno}: empty occupation")
            records.append(BioRecord(gender, occupation, tokens))
    counts = Counter(r.occupation for r in records)
    rare = {occ for occ, c in counts.items() if c < min_count}
    if rare:
        log.warning(
            "load_corpus: dropping %d occupation(s) with fewer than %d records: %s",
            len(rare),
            min_count,
            ", ".join(sorted(rare)),
        )
        records = [r for r in records if r.occupation not in rare]
    if not records:
        raise ValueError(f"{path}: no records left after the min-count filter")
    return records


@dataclass(frozen=True)
class SynthesisConfig:
    """Knobs for the planted-correlation corpus generator.

    ``bias_strength`` in [0, 1] sets how strongly author gender (and so
    the gendered marker words each record carries) co-occurs with the
    occupation label: occupation i leans male for even i and female for
    odd i, with the male share at 0.5 + max_skew * bias_strength * (+-1).
    Marker words are the vocabulary entries with the most positive /
    most negative projection on the first direction of ``subspace``;
    occupation-indicator words are picked from the least gender-loaded
    part of the vocabulary.
    """

    n_occupations: int
    n_records: int
    bias_strength: float
    subspace: BiasSubspace
    indicators_per_occupation: int = 8
    markers_per_gender: int = 6
    indicator_tokens: int = 8
    gendered_tokens: int = 4
    max_skew: float = 0.4

    def __post_init__(self):
        if self.n_occupations < 2:
            raise ValueError("need at least 2 occupations")
        if self.n_records < self.n_occupations:
            raise ValueError("need at least one record per occupation")
        if not 0.0 <= self.bias_strength <= 1.0:
            raise ValueError("bias_strength must lie in [0, 1]")
        if not 0.0 <= self.max_skew < 0.5:
            raise ValueError("max_skew must lie in [0, 0.5)")
        for name in ("indicators_per_occupation", "markers_per_gender",
                     "indicator_tokens", "gendered_tokens"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


def synthesize_corpus(
    space: EmbeddingSpace, config: SynthesisConfig, seed: int = 0
) -> list[BioRecord]:
    """Deterministically generate bios with a planted gender-occupation link."""
    need = (
        config.n_occupations * config.indicators_per_occupation
        + 2 * config.markers_per_gender
    )
    if len(space) < need:
        raise ValueError(
            f"vocabulary too small: {len(space)} words, {need} needed for this config"
        )
    b1 = config.subspace.basis[0]
    proj = space.matrix @ b1
    order = np.argsort(proj, kind="stable")
    m = config.markers_per_gender
    female_markers = [space.vocab[i] for i in order[:m]]
    male_markers = [space.vocab[i] for i in order[-m:]]
    marker_rows = set(order[:m]) | set(order[-m:])

    loading = np.linalg.norm(space.matrix @ config.subspace.basis.T, axis=1)
    neutral_order = [
        i for i in np.argsort(loading, kind="stable") if i not in marker_rows
    ]
    per = config.indicators_per_occupation
    indicator_sets = []
    for occ in range(config.n_occupations):
        rows = neutral_order[occ * per : (occ + 1) * per]
        indicator_sets.append([space.vocab[i] for i in rows])

    rng = np.random.default_rng(seed)
    base, extra = divmod(config.n_records, config.n_occupations)
    records: list[BioRecord] = []
    for occ in range(config.n_occupations):
        name = f"occ{occ:02d}"
        count = base + (1 if occ < extra else 0)
        polarity = 1.0 if occ % 2 == 0 else -1.0
        male_share = 0.5 + config.max_skew * config.bias_strength * polarity
        n_male = int(round(count * male_share))
        n_male = min(max(n_male, 0), count)
        genders = np.array(["M"] * n_male + ["F"] * (count - n_male))
        rng.shuffle(genders)
        indicators = indicator_sets[occ]
        for g in genders:
            ind = rng.choice(indicators, size=config.indicator_tokens, replace=True)
            markers = male_markers if g == "M" else female_markers
            gen = rng.choice(markers, size=config.gendered_tokens, replace=True)
            records.append(BioRecord(str(g), name, tuple(ind) + tuple(gen)))
    return records


def split_corpus(records, test_fraction: float = 0.2, seed: int = 0):
    """Stratified train/test split by (occupation, gender), seeded."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    strata: dict[tuple[str, str], list[int]] = defaultdict(list)
    for i, r in enumerate(records):
        strata[(r.occupation, r.gender)].append(i)
    rng = np.random.default_rng(seed)
    test_rows: set[int] = set()
    for key in sorted(strata):
        rows = strata[key]
        order = rng.permutation(len(rows))
        n_test = int(round(len(rows) * test_fraction))
        n_test = min(max(n_test, 1 if len(rows) > 1 else 0), len(rows) - 1)
        test_rows.update(rows[i] for i in order[:n_test])
    train = [r for i, r in enumerate(records) if i not in test_rows]
    test = [r for i, r in enumerate(records) if i in test_rows]
    return train, test


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1.0
    epochs: int = 300
    seed: int = 0
    min_coverage: float = 0.5

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not 0.0 <= self.min_coverage <= 1.0:
            raise ValueError("min_coverage must lie in [0, 1]")


def featurize(
    space: EmbeddingSpace,
    records,
    language: str | None = None,
    min_coverage: float = 0.5,
):
    """Mean-of-token-vector features; returns (features, kept_records).

    Records with in-vocabulary token coverage below ``min_coverage`` (or
    with no resolvable token at all) are dropped with a warning.
    """
    feats, kept, dropped = [], [], 0
    for record in records:
        rows = [space.locate(t, language) for t in record.tokens]
        rows = [i for i in rows if i is not None]
        coverage = len(rows) / len(record.tokens)
        if not rows or coverage < min_coverage:
            dropped += 1
            continue
        feats.append(space.matrix[rows].mean(axis=0))
        kept.append(record)
    if dropped:
        log.warning(
            "featurize: dropped %d/%d record(s) with token coverage below %.0f%%",
            dropped,
            len(records) if hasattr(records, "__len__") else dropped + len(kept),
            100.0 * min_coverage,
        )
    features = np.vstack(feats) if feats else np.empty((0, space.dim))
    return features, kept


def cross_entropy_loss_and_grad(weights, bias, features, labels):
    """Mean softmax cross-entropy and its analytic gradient.

    ``weights`` is (classes x dim), ``bias`` (classes,), ``features``
    (n x dim), ``labels`` integer class ids (n,). Returns
    (loss, d_weights, d_bias).
    """
    logits = features @ weights.T + bias
    logits = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    probs = exp / exp.sum(axis=1, keepdims=True)
    n = features.shape[0]
    loss = float(-np.mean(np.log(probs[np.arange(n), labels] + 1e-300)))
    probs[np.arange(n), labels] -= 1.0
    probs /= n
    return loss, probs.T @ features, probs.sum(axis=0)


@dataclass(frozen=True)
class Classifier:
    weights: np.ndarray
    bias: np.ndarray
    labels: tuple[str, ...]
    space: EmbeddingSpace
    config: TrainConfig
    language: str | None
    loss_history: tuple[float, ...] = field(repr=False, default=())

    def predict(self, features: np.ndarray) -> tuple[str, ...]:
        """Predicted occupation labels; score ties resolve to the earlier label."""
        indices = np.argmax(features @ self.weights.T + self.bias, axis=1)
        return tuple(self.labels[i] for i in indices)


def train_classifier(
    space: EmbeddingSpace,
    train,
    config: TrainConfig = TrainConfig(),
    language: str | None = None,
) -> Classifier:
    """Full-batch gradient descent on softmax cross-entropy, seeded init.

    The embedding stays frozen; only the linear head is learned. At the
    default learning rate (features are means of unit vectors) the loss
    is non-increasing across epochs.
    """
    features, kept = featurize(space, train, language, config.min_coverage)
    if not kept:
        raise ValueError("no trainable record after coverage filtering")
    label_names = tuple(sorted({r.occupation for r in kept}))
    if len(label_names) < 2:
        raise ValueError(f"training needs at least 2 occupations, got {label_names}")
    label_ids = {name: i for i, name in enumerate(label_names)}
    y = np.array([label_ids[r.occupation] for r in kept])

    rng = np.random.default_rng(config.seed)
    weights = 0.01 * rng.standard_normal((len(label_names), space.dim))
    bias = np.zeros(len(label_names))
    history = []
    for _ in range(config.epochs):
        loss, d_weights, d_bias = cross_entropy_loss_and_grad(weights, bias, features, y)
        history.append(loss)
        weights = weights - config.learning_rate * d_weights
        bias = bias - config.learning_rate * d_bias
    final_loss, _, _ = cross_entropy_loss_and_grad(weights, bias, features, y)
    history.append(final_loss)
    weights.setflags(write=False)
    bias.setflags(write=False)
    return Classifier(
        weights=weights,
        bias=bias,
        labels=label_names,
        space=space,
        config=config,
        language=language,
        loss_history=tuple(history),
    )


@dataclass(frozen=True)
class ExtrinsicResult:
    """Per-occupation accuracy gaps on a held-out set.

    ``per_occupation`` rows are (occupation, acc_male, acc_female, gap),
    sorted by occupation name. ``diff`` is the mean gap.
    """

    per_occupation: tuple[tuple[str, float, float, float], ...]
    diff: float
    male_acc: float
    female_acc: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "per_occupation", tuple(self.per_occupation))
        gaps = [abs(m - f) for _, m, f, _ in self.per_occupation]
        if gaps and abs(self.diff - sum(gaps) / len(gaps)) > 1e-9:
            raise ValueError("diff must equal the mean per-occupation accuracy gap")
        for value in (self.male_acc, self.female_acc, *gaps):
            if not 0.0 <= value <= 1.0:
                raise ValueError("accuracies must lie in [0, 1]")

    def occupations(self) -> tuple[str, ...]:
        return tuple(row[0] for row in self.per_occupation)


def evaluate_gap(classifier: Classifier, test) -> ExtrinsicResult:
    """Score a test set; occupations missing a gender are excluded."""
    features, kept = featurize(
        classifier.space, test, classifier.language, classifier.config.min_coverage
    )
    if not kept:
        raise ValueError("no evaluable record after coverage filtering")
    known = set(classifier.labels)
    unseen = {r.occupation for r in kept} - known
    if unseen:
        log.warning(
            "evaluate_gap: excluding occupation(s) unseen in training: %s",
            ", ".join(sorted(unseen)),
        )
    preds = classifier.predict(features)
    totals: dict[tuple[str, str], int] = Counter()
    hits: dict[tuple[str, str], int] = Counter()
    for record, pred in zip(kept, preds):
        if record.occupation not in known:
            continue
        key = (record.occupation, record.gender)
        totals[key] += 1
        hits[key] += int(pred == record.occupation)

    per_occupation = []
    scored = []
    for occ in sorted({occ for occ, _ in totals}):
        if totals[(occ, "M")] == 0 or totals[(occ, "F")] == 0:
            log.warning("evaluate_gap: occupation %r lacks one gender in the test set", occ)
            continue
        acc_m = hits[(occ, "M")] / totals[(occ, "M")]
        acc_f = hits[(occ, "F")] / totals[(occ, "F")]
        per_occupation.append((occ, acc_m, acc_f, abs(acc_m - acc_f)))
        scored.append(occ)
    if not per_occupation:
        raise ValueError("no occupation has test records of both genders")
    scored_set = set(scored)
    m_hits = sum(hits[(o, "M")] for o in scored_set)
    m_total = sum(totals[(o, "M")] for o in scored_set)
    f_hits = sum(hits[(o, "F")] for o in scored_set)
    f_total = sum(totals[(o, "F")] for o in scored_set)
    return ExtrinsicResult(
        per_occupation=tuple(per_occupation),
        diff=float(np.mean([row[3] for row in per_occupation])),
        male_acc=m_hits / m_total,
        female_acc=f_hits / f_total,
        seed=classifier.config.seed,
    )


@dataclass(frozen=True)
class GapComparison:
    """Occupation-level view of how gaps moved between two runs.

    ``f_i`` is the fraction of occupations whose gap strictly shrank;
    ``per_occupation_delta`` rows are (occupation, gap_before, gap_after).
    """

    f_i: float
    per_occupation_delta: tuple[tuple[str, float, float], ...]


def compare_runs(before: ExtrinsicResult, after: ExtrinsicResult) -> GapComparison:
    if before.occupations() != after.occupations():
        raise ValueError(
            "occupation sets differ between runs: "
            f"{before.occupations()} vs {after.occupations()}"
        )
    deltas = []
    reduced = 0
    for (occ, _, _, gap_b), (_, _, _, gap_a) in zip(
        before.per_occupation, after.per_occupation
    ):
        deltas.append((occ, gap_b, gap_a))
        if gap_a < gap_b:  # ties do not count as reduced
            reduced += 1
    return GapComparison(
        f_i=reduced / len(deltas), per_occupation_delta=tuple(deltas)
    )


def format_gap_table(rows: list[tuple[str, ExtrinsicResult, float | None]]) -> str:
    """Aligned text table of (label, result, f_i) rows, accuracies in %."""
    header = ["emb", "M", "F", "|Diff|", "f_i"]
    body = []
    for label, result, f_i in rows:
        body.append([
            label,
            f"{100.0 * result.male_acc:.2f}",
            f"{100.0 * result.female_acc:.2f}",
            f"{100.0 * result.diff:.2f}",
            "-" if f_i is None else f"{f_i:.3f}",
        ])
    widths = [max(len(h), *(len(r[i]) for r in body)) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip()]
    for row in body:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"
