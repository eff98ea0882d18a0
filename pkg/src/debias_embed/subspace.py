"""Gender subspace estimation from male/female difference vectors.

Two estimators are provided over the stacked difference matrix:

* :func:`pca_basis` takes the top-k right singular vectors (optionally
  after centering); scores are explained-variance fractions.
* :func:`ppa_basis` is projection pursuit: it finds unit directions that
  maximize the excess kurtosis of the projected differences, one at a
  time, each constrained to the orthogonal complement of the previous
  ones (deflation). Each direction is located by multi-start projected
  gradient ascent (32 seeded starts) so the result is deterministic for
  a given seed; scores are the achieved excess kurtosis values.

Basis vectors are sign-canonicalized (first non-negligible coordinate
positive) and every produced basis is orthonormal.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, replace

import numpy as np

from .embeddings import EmbeddingSpace

log = logging.getLogger(__name__)

__all__ = [
    "DifferenceMatrix",
    "BiasSubspace",
    "difference_matrix",
    "pca_basis",
    "ppa_basis",
    "language_orientation",
    "select_equal_rep",
    "save_subspace",
    "load_subspace",
]

BASIS_TOL = 1e-8  # orthonormality tolerance for any produced basis
RANK_RTOL = 1e-10  # singular values below RANK_RTOL * s_max do not count toward rank

PPA_STARTS = 32
PPA_MAX_ITER = 1000
PPA_GRAD_TOL = 1e-9


@dataclass(frozen=True)
class DifferenceMatrix:
    """Stacked (male - female) vectors with a language tag per row."""

    rows: np.ndarray
    row_languages: tuple[str, ...]

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError(f"difference matrix must be 2-D and non-empty, got {rows.shape}")
        if len(self.row_languages) != rows.shape[0]:
            raise ValueError("one language tag required per row")
        norms = np.linalg.norm(rows, axis=1)
        if (norms == 0.0).any():
            raise ValueError("difference matrix contains a zero row")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "row_languages", tuple(self.row_languages))

    @property
    def shape(self):
        return self.rows.shape


@dataclass(frozen=True)
class BiasSubspace:
    """An orthonormal basis (k x dim) for the estimated gender subspace."""

    basis: np.ndarray
    method: str  # "pca" | "ppa"
    scores: tuple[float, ...]
    orientation_labels: tuple[str, ...] | None = None
    provenance: dict | None = None

    def __post_init__(self):
        basis = np.array(self.basis, dtype=np.float64)
        if basis.ndim != 2 or basis.shape[0] < 1:
            raise ValueError(f"basis must be a non-empty 2-D array, got {basis.shape}")
        if self.method not in ("pca", "ppa"):
            raise ValueError(f"unknown subspace method {self.method!r}")
        gram = basis @ basis.T
        err = np.max(np.abs(gram - np.eye(basis.shape[0])))
        if err > BASIS_TOL:
            raise ValueError(f"basis is not orthonormal (max Gram deviation {err:.3e})")
        scores = tuple(float(s) for s in np.atleast_1d(np.asarray(self.scores, dtype=np.float64)))
        if len(scores) != basis.shape[0]:
            raise ValueError("one score required per basis vector")
        if any(b - a > 1e-12 for a, b in zip(scores, scores[1:])):
            raise ValueError("scores must be non-increasing")
        if self.orientation_labels is not None and len(self.orientation_labels) != basis.shape[0]:
            raise ValueError("one orientation label required per basis vector")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "scores", scores)

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def difference_matrix(space: EmbeddingSpace, pairs) -> DifferenceMatrix:
    """Stack male-minus-female vectors for every resolvable pair.

    Pairs with a missing word, or whose two words share one vector, are
    skipped with a warning; no resolvable pair at all is an error.
    """
    if not space.normalized:
        log.warning("difference_matrix: space is not normalized")
    rows, langs, skipped = [], [], 0
    for pair in pairs:
        i = space.locate(pair.male_word, pair.language_tag)
        j = space.locate(pair.female_word, pair.language_tag)
        if i is None or j is None:
            skipped += 1
            log.warning(
                "difference_matrix: skipping pair (%s, %s) [%s]: word missing",
                pair.male_word,
                pair.female_word,
                pair.language_tag,
            )
            continue
        delta = space.matrix[i] - space.matrix[j]
        if not np.any(delta):
            skipped += 1
            log.warning(
                "difference_matrix: skipping pair (%s, %s) [%s]: identical vectors",
                pair.male_word,
                pair.female_word,
                pair.language_tag,
            )
            continue
        rows.append(delta)
        langs.append(pair.language_tag)
    if not rows:
        raise ValueError("no gender pair is resolvable in the space")
    return DifferenceMatrix(np.vstack(rows), tuple(langs))


def _canonical_signs(basis: np.ndarray) -> np.ndarray:
    """Flip vectors so the first non-negligible coordinate is positive."""
    out = basis.copy()
    for row in out:
        scale = np.max(np.abs(row))
        if scale == 0.0:
            continue
        nz = np.flatnonzero(np.abs(row) > 1e-12 * scale)
        lead = nz[0] if nz.size else int(np.argmax(np.abs(row)))
        if row[lead] < 0:
            row *= -1.0
    return out


def _numerical_rank(matrix: np.ndarray) -> tuple[int, np.ndarray]:
    s = np.linalg.svd(matrix, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0, s
    return int(np.sum(s >= RANK_RTOL * s[0])), s


def pca_basis(diffs: DifferenceMatrix, k: int, center: bool = False) -> BiasSubspace:
    """Top-k principal directions of the difference matrix.

    Scores are explained-variance fractions (squared singular values over
    their total), so they are non-increasing. ``k`` above the numerical
    rank raises ValueError naming the achievable k.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    data = diffs.rows - diffs.rows.mean(axis=0) if center else diffs.rows
    rank, _ = _numerical_rank(data)
    if k > rank:
        raise ValueError(
            f"k={k} exceeds the numerical rank of the difference matrix; achievable k is {rank}"
        )
    _, s, vt = np.linalg.svd(data, full_matrices=False)
    basis = _canonical_signs(vt[:k])
    scores = (s**2 / np.sum(s**2))[:k]
    return BiasSubspace(basis=basis, method="pca", scores=scores)


def _excess_kurtosis(z: np.ndarray) -> float:
    zc = z - z.mean()
    m2 = np.mean(zc**2)
    if m2 < 1e-30:
        return -3.0
    m4 = np.mean(zc**4)
    return float(m4 / m2**2 - 3.0)


def _kurtosis_and_grad(rows_c: np.ndarray, u: np.ndarray) -> tuple[float, np.ndarray]:
    # rows_c is the row-centered data, so projections come out centered too
    zc = rows_c @ u
    m2 = np.mean(zc**2)
    if m2 < 1e-30:
        return -3.0, np.zeros_like(u)
    m4 = np.mean(zc**4)
    n = rows_c.shape[0]
    g_m2 = (2.0 / n) * (rows_c.T @ zc)
    g_m4 = (4.0 / n) * (rows_c.T @ zc**3)
    grad = g_m4 / m2**2 - 2.0 * m4 * g_m2 / m2**3
    return float(m4 / m2**2 - 3.0), grad


def _ascend(rows_c: np.ndarray, u0: np.ndarray, complement: np.ndarray | None):
    """Projected gradient ascent on the unit sphere from one start."""

    def project(v):
        if complement is not None:
            v = v - complement.T @ (complement @ v)
        return v

    u = project(u0)
    norm = np.linalg.norm(u)
    if norm == 0.0:
        return u0, -np.inf
    u = u / norm
    value, grad = _kurtosis_and_grad(rows_c, u)
    step = 1.0
    for _ in range(PPA_MAX_ITER):
        direction = project(grad)
        direction -= (direction @ u) * u  # tangent component
        gnorm = np.linalg.norm(direction)
        if gnorm < PPA_GRAD_TOL:
            break
        # backtracking line search keeps the ascent monotone
        improved = False
        while step > 1e-18:
            cand = project(u + step * direction)
            cn = np.linalg.norm(cand)
            if cn > 0.0:
                cand = cand / cn
                cand_value, cand_grad = _kurtosis_and_grad(rows_c, cand)
                if cand_value > value + 1e-4 * step * gnorm**2:
                    u, value, grad = cand, cand_value, cand_grad
                    improved = True
                    step = min(step * 2.0, 1e6)
                    break
            step *= 0.5
        if not improved:
            break
    return u, value


def ppa_basis(diffs: DifferenceMatrix, k: int, seed: int = 0) -> BiasSubspace:
    """Kurtosis-maximizing directions via multi-start projected ascent.

    Direction j is the best of 32 seeded ascents constrained to the
    orthogonal complement of directions 1..j-1; at least 4 rows are
    needed for a meaningful fourth moment. Results are deterministic
    for a given seed.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n, dim = diffs.shape
    if n < 4:
        raise ValueError(f"projection pursuit needs at least 4 difference rows, got {n}")
    rank, _ = _numerical_rank(diffs.rows)
    if k > rank:
        raise ValueError(
            f"k={k} exceeds the numerical rank of the difference matrix; achievable k is {rank}"
        )
    rows_c = diffs.rows - diffs.rows.mean(axis=0)
    rng = np.random.default_rng(seed)
    found: list[np.ndarray] = []
    scores: list[float] = []
    for _ in range(k):
        complement = np.vstack(found) if found else None
        deflated = diffs.rows.copy()
        if complement is not None:
            deflated -= (deflated @ complement.T) @ complement
        # start 0: leading principal direction of the deflated data;
        # remaining starts: random unit vectors.
        starts = [np.linalg.svd(deflated, full_matrices=False)[2][0]]
        starts.extend(rng.standard_normal(dim) for _ in range(PPA_STARTS - 1))
        best_u, best_value = None, -np.inf
        for u0 in starts:
            u, value = _ascend(rows_c, u0, complement)
            if value > best_value:
                best_u, best_value = u, value
        if best_u is None or not np.isfinite(best_value):
            raise ValueError("projection pursuit failed to find a direction")
        found.append(best_u)
        scores.append(best_value)
    order = np.argsort(-np.asarray(scores), kind="stable")
    basis = _canonical_signs(np.vstack([found[i] for i in order]))
    return BiasSubspace(
        basis=basis, method="ppa", scores=np.asarray(scores)[order]
    )


def language_orientation(
    subspace: BiasSubspace, diffs: DifferenceMatrix, language_order=None
) -> BiasSubspace:
    """Label each basis vector with its closest language.

    The label is the language maximizing |cos| between the basis vector
    and the mean difference vector of that language's rows; ties go to
    the earlier language in ``language_order`` (default: order of first
    appearance in the difference matrix).
    """
    if language_order is None:
        language_order = tuple(dict.fromkeys(diffs.row_languages))
    else:
        language_order = tuple(language_order)
        present = set(diffs.row_languages)
        for lang in language_order:
            if lang not in present:
                raise ValueError(f"language {lang!r} has no rows in the difference matrix")
    if not language_order:
        raise ValueError("no languages to label with")
    tags = np.asarray(diffs.row_languages)
    means = np.vstack([diffs.rows[tags == lang].mean(axis=0) for lang in language_order])
    mean_norms = np.linalg.norm(means, axis=1)
    labels = []
    for vec in subspace.basis:
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.abs(means @ vec) / (mean_norms * np.linalg.norm(vec))
        cos = np.where(np.isfinite(cos), cos, 0.0)
        if np.max(cos) == 0.0:
            log.warning(
                "language_orientation: basis vector is orthogonal to every language mean; "
                "labeling it %r by order",
                language_order[0],
            )
        labels.append(language_order[int(np.argmax(cos))])
    return replace(subspace, orientation_labels=tuple(labels))


def _gram_schmidt(basis: np.ndarray) -> np.ndarray:
    """Stable (modified, twice-through) Gram-Schmidt in row order."""
    out = basis.astype(np.float64).copy()
    for i in range(out.shape[0]):
        for _ in range(2):
            for j in range(i):
                out[i] -= (out[i] @ out[j]) * out[j]
        norm = np.linalg.norm(out[i])
        if norm < 1e-12:
            raise ValueError("selected components are linearly dependent")
        out[i] /= norm
    return out


def select_equal_rep(pool: BiasSubspace, k: int, languages) -> BiasSubspace:
    """Pick k components with equal per-language representation.

    From an orientation-labeled candidate pool (ordered by score), the
    k/L best components per language are taken and kept in pool order;
    the result is re-orthonormalized if numerically necessary.
    """
    languages = tuple(languages)
    if not languages:
        raise ValueError("no languages given")
    if pool.orientation_labels is None:
        raise ValueError("candidate pool has no orientation labels")
    n_lang = len(languages)
    if k % n_lang != 0:
        raise ValueError(f"k={k} is not divisible by the language count {n_lang}")
    per_language = k // n_lang
    chosen: list[int] = []
    for lang in languages:
        rows = [i for i, lab in enumerate(pool.orientation_labels) if lab == lang]
        if len(rows) < per_language:
            raise ValueError(
                f"pool has only {len(rows)} component(s) labeled {lang!r}; "
                f"{per_language} needed ({per_language - len(rows)} short)"
            )
        chosen.extend(rows[:per_language])
    chosen.sort()  # keep the original pool (score) order
    basis = pool.basis[chosen]
    gram = basis @ basis.T
    if np.max(np.abs(gram - np.eye(len(chosen)))) > 1e-12:
        basis = _gram_schmidt(basis)
    return BiasSubspace(
        basis=basis,
        method=pool.method,
        scores=tuple(pool.scores[i] for i in chosen),
        orientation_labels=tuple(pool.orientation_labels[i] for i in chosen),
        provenance=pool.provenance,
    )


def pairs_fingerprint(pairs) -> str:
    """Stable sha256 over an ordered list of gender pairs."""
    h = hashlib.sha256()
    for p in pairs:
        h.update(f"{p.language_tag}\t{p.male_word}\t{p.female_word}\n".encode("utf-8"))
    return h.hexdigest()


def save_subspace(subspace: BiasSubspace, path) -> None:
    """Serialize a subspace to JSON (basis at full float precision)."""
    prov = dict(subspace.provenance or {})
    payload = {
        "method": subspace.method,
        "k": subspace.k,
        "seed": prov.pop("seed", None),
        "basis": [[float(x) for x in row] for row in subspace.basis],
        "scores": [float(x) for x in subspace.scores],
        "orientation_labels": (
            list(subspace.orientation_labels) if subspace.orientation_labels else None
        ),
        "embedding_fingerprint": prov.pop("embedding_fingerprint", None),
        "pairs_fingerprint": prov.pop("pairs_fingerprint", None),
        "provenance": prov or None,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_subspace(path) -> BiasSubspace:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    prov = dict(payload.get("provenance") or {})
    for key in ("seed", "embedding_fingerprint", "pairs_fingerprint"):
        if payload.get(key) is not None:
            prov[key] = payload[key]
    labels = payload.get("orientation_labels")
    return BiasSubspace(
        basis=np.array(payload["basis"], dtype=np.float64),
        method=payload["method"],
        scores=np.array(payload["scores"], dtype=np.float64),
        orientation_labels=tuple(labels) if labels else None,
        provenance=prov or None,
    )
