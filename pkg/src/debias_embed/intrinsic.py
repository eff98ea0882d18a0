"""Intrinsic bias metrics over embedding spaces.

* :func:`dis` is mean cosine distance from one vector to a set.
* :func:`inbias` averages, over occupation pairs, the absolute gap
  between the masculine form's distance to the male seeds and the
  feminine form's distance to the female seeds, each word scored
  against its own language's seeds.
* :func:`cross_score` measures how much removing one language's top
  gender direction moves another language's neutral words along that
  other language's own top gender direction (relative change of the
  absolute projection). A language against itself scores exactly 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSpace
from .lexicon import GenderLexicon
from .subspace import difference_matrix, pca_basis

log = logging.getLogger(__name__)

__all__ = [
    "dis",
    "InBiasResult",
    "inbias",
    "cross_score",
    "CrossScoreMatrix",
    "cross_score_matrix",
    "format_inbias_table",
    "format_cross_table",
]


def dis(x, vectors) -> float:
    """Mean of 1 - cos(x, y) over y in ``vectors``; ranges over [0, 2]."""
    x = np.asarray(x, dtype=np.float64)
    xn = np.linalg.norm(x)
    if xn == 0.0:
        raise ValueError("dis is undefined for a zero vector")
    ys = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if ys.shape[0] == 0:
        raise ValueError("dis needs at least one reference vector")
    norms = np.linalg.norm(ys, axis=1)
    if (norms == 0.0).any():
        raise ValueError("dis is undefined against a zero reference vector")
    cos = (ys @ x) / (norms * xn)
    return float(np.mean(1.0 - cos))


@dataclass(frozen=True)
class InBiasResult:
    """Mean gap plus the per-occupation detail behind it.

    ``per_occupation`` rows are (language, masculine, feminine, gap);
    ``skipped`` rows are (language, masculine, feminine) pairs dropped
    because a word was missing or had a zero vector.
    """

    value: float
    per_occupation: tuple[tuple[str, str, str, float], ...]
    skipped: tuple[tuple[str, str, str], ...]


def _seed_matrix(space, words, lang, side):
    rows = []
    for w in words:
        i = space.locate(w, lang)
        if i is None:
            log.warning("inbias: %s seed %r [%s] is out of vocabulary", side, w, lang)
            continue
        vec = space.matrix[i]
        if not np.any(vec):
            log.warning("inbias: %s seed %r [%s] has a zero vector, dropped", side, w, lang)
            continue
        rows.append(vec)
    if not rows:
        raise ValueError(f"no usable {side} seed for language {lang!r}")
    return np.vstack(rows)


def inbias(
    space: EmbeddingSpace,
    lexicon: GenderLexicon,
    languages,
    seed_words: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] | None = None,
) -> InBiasResult:
    """Average |dis(masc, male seeds) - dis(fem, female seeds)|.

    ``seed_words`` optionally overrides the lexicon's static seed sets
    per language with (male_words, female_words), e.g. the two sides of
    held-out defining pairs. Occupation pairs with unresolvable or
    zero-vector words are skipped and reported.
    """
    languages = tuple(languages)
    if not languages:
        raise ValueError("at least one language is required")
    gaps: list[tuple[str, str, str, float]] = []
    skipped: list[tuple[str, str, str]] = []
    for lang in languages:
        if lang not in lexicon.occupation_pairs:
            raise ValueError(f"unknown language {lang!r} in lexicon")
        if seed_words is not None and lang in seed_words:
            male_words, female_words = seed_words[lang]
        else:
            male_words = lexicon.seed_sets[lang].male
            female_words = lexicon.seed_sets[lang].female
        male = _seed_matrix(space, male_words, lang, "male")
        female = _seed_matrix(space, female_words, lang, "female")
        for masc, fem in lexicon.occupation_pairs[lang]:
            i = space.locate(masc, lang)
            j = space.locate(fem, lang)
            if i is None or j is None:
                skipped.append((lang, masc, fem))
                continue
            vm, vf = space.matrix[i], space.matrix[j]
            if not np.any(vm) or not np.any(vf):
                log.warning(
                    "inbias: occupation pair (%s, %s) [%s] has a zero vector, skipped",
                    masc,
                    fem,
                    lang,
                )
                skipped.append((lang, masc, fem))
                continue
            gap = abs(dis(vm, male) - dis(vf, female))
            gaps.append((lang, masc, fem, gap))
    if skipped:
        log.warning("inbias: skipped %d unresolvable occupation pair(s)", len(skipped))
    if not gaps:
        raise ValueError("no occupation pair is resolvable in the space")
    value = float(np.mean([g[3] for g in gaps]))
    return InBiasResult(value=value, per_occupation=tuple(gaps), skipped=tuple(skipped))


def _top_direction(space, lexicon, lang) -> np.ndarray:
    if lang not in lexicon.defining_pairs:
        raise ValueError(f"unknown language {lang!r} in lexicon")
    diffs = difference_matrix(space, lexicon.defining_pairs[lang])
    return pca_basis(diffs, k=1).basis[0]


def cross_score(
    space: EmbeddingSpace,
    lexicon: GenderLexicon,
    l1: str,
    l2: str,
    epsilon: float = 1e-8,
) -> float:
    """Relative projection change of l2's neutral words along l2's own
    top gender direction after removing l1's top gender direction.

    Words whose original absolute projection falls below ``epsilon`` are
    skipped (their relative change is numerically meaningless); if every
    word is skipped that is an error.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    b1 = _top_direction(space, lexicon, l1)
    b2 = _top_direction(space, lexicon, l2)
    rows = []
    missing = 0
    for w in lexicon.neutral_words[l2].all_words():
        i = space.locate(w, l2)
        if i is None:
            missing += 1
            continue
        rows.append(i)
    if missing:
        log.warning("cross_score: %d neutral %s word(s) are out of vocabulary", missing, l2)
    if not rows:
        raise ValueError(f"no neutral word of {l2!r} is resolvable in the space")
    vecs = space.matrix[rows]
    proj = vecs @ b2
    keep = np.abs(proj) >= epsilon
    guarded = int(np.sum(~keep))
    if guarded:
        log.warning(
            "cross_score: %d/%d word(s) below the %.1e projection guard", guarded, len(rows), epsilon
        )
    if not keep.any():
        raise ValueError(
            f"every neutral word of {l2!r} falls below the epsilon guard ({epsilon:g})"
        )
    debiased = vecs[keep] - np.outer(vecs[keep] @ b1, b1)
    new_proj = debiased @ b2
    ratio = np.abs(np.abs(new_proj) - np.abs(proj[keep])) / np.abs(proj[keep])
    return float(np.mean(ratio))


@dataclass(frozen=True)
class CrossScoreMatrix:
    languages: tuple[str, ...]
    values: np.ndarray  # row = direction language l1, column = evaluated language l2
    epsilon: float

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        n = len(self.languages)
        if values.shape != (n, n):
            raise ValueError(f"values must be {n}x{n}, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "languages", tuple(self.languages))


def cross_score_matrix(
    space: EmbeddingSpace, lexicon: GenderLexicon, languages, epsilon: float = 1e-8
) -> CrossScoreMatrix:
    """All ordered language pairs; errors from any cell propagate."""
    languages = tuple(languages)
    if not languages:
        raise ValueError("at least one language is required")
    n = len(languages)
    values = np.empty((n, n), dtype=np.float64)
    for i, l1 in enumerate(languages):
        for j, l2 in enumerate(languages):
            values[i, j] = cross_score(space, lexicon, l1, l2, epsilon)
    return CrossScoreMatrix(languages=languages, values=values, epsilon=epsilon)


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip()]
    for row in rows:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def format_cross_table(matrix: CrossScoreMatrix) -> str:
    """Aligned text table, directions as rows and word sets as columns."""
    header = ["lang"] + [f"N_{l}" for l in matrix.languages]
    rows = [
        [f"b_{l1}"] + [f"{v:.3f}" for v in matrix.values[i]]
        for i, l1 in enumerate(matrix.languages)
    ]
    return _table(header, rows)


def format_inbias_table(columns: list[str], rows: list[tuple[str, dict[str, float]]]) -> str:
    """Aligned text table of per-language values, one column per run label."""
    header = ["lang"] + list(columns)
    body = []
    for lang, values in rows:
        body.append([lang] + [
            f"{values[c]:.4f}" if c in values and values[c] is not None else "-"
            for c in columns
        ])
    return _table(header, body)
