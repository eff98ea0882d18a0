"""Shared builders for the test suite."""

import numpy as np

from debias_embed.embeddings import EmbeddingSpace, normalize
from debias_embed.lexicon import GenderLexicon, GenderPair, NeutralWords, SeedSets


def unit_rows(rng, n, d):
    rows = rng.standard_normal((n, d))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def orthonormal_rows(rng, k, d):
    q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return q.T.copy()


def random_space(seed, n, d, tag="en", words=None):
    rng = np.random.default_rng(seed)
    if words is None:
        words = tuple(f"w{i:04d}" for i in range(n))
    return EmbeddingSpace(tag, tuple(words), unit_rows(rng, len(words), d), normalized=True)


def two_language_lexicon(n_pairs=6, n_neutral=5):
    """Synthetic lexicon over made-up languages 'aa' and 'bb'."""
    defining, neutral, seeds, occupations = {}, {}, {}, {}
    for tag in ("aa", "bb"):
        pairs = tuple(GenderPair(f"{tag}m{i}", f"{tag}f{i}", tag) for i in range(n_pairs))
        names = tuple(f"{tag}n{i}" for i in range(n_neutral))
        defining[tag] = pairs
        neutral[tag] = NeutralWords(names[:3], names[3:], ())
        seeds[tag] = SeedSets((f"{tag}m0", f"{tag}m1"), (f"{tag}f0", f"{tag}f1"))
        occupations[tag] = tuple((w, w) for w in names[:3])
    return GenderLexicon(defining, neutral, seeds, occupations)


def lexicon_vocab(lexicon, tag):
    words = []
    for p in lexicon.defining_pairs[tag]:
        words += [p.male_word, p.female_word]
    words += list(lexicon.neutral_words[tag].all_words())
    words += list(lexicon.seed_sets[tag].male) + list(lexicon.seed_sets[tag].female)
    for m, f in lexicon.occupation_pairs[tag]:
        words += [m, f]
    seen, out = set(), []
    for w in words:
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def space_for_lexicon(lexicon, tags, d=20, seed=0, merged=None):
    """Random normalized space covering every lexicon word of the given tags.

    With one tag the vocab is bare; with several it is prefixed and the
    space tag is the '+'-joined merge.
    """
    rng = np.random.default_rng(seed)
    if len(tags) == 1:
        vocab = tuple(lexicon_vocab(lexicon, tags[0]))
        tag = tags[0]
    else:
        vocab = tuple(f"{t}:{w}" for t in tags for w in lexicon_vocab(lexicon, t))
        tag = merged or "+".join(tags)
    return EmbeddingSpace(tag, vocab, unit_rows(rng, len(vocab), d), normalized=True)


def planted_marker_space(seed, d=300, k=4, n_perp=200, eta=0.05, tag="xx"):
    """Space with gendered marker words hugging +/- the first basis direction
    and a pool of words exactly orthogonal to the whole subspace.

    Returns (space, basis) where basis is a k x d orthonormal array.
    """
    rng = np.random.default_rng(seed)
    basis = orthonormal_rows(rng, k, d)
    b1 = basis[0]

    def off_subspace_unit():
        v = rng.standard_normal(d)
        v -= basis.T @ (basis @ v)
        return v / np.linalg.norm(v)

    words, vecs = [], []
    for j in range(6):
        words.append(f"him{j}")
        vecs.append(np.sqrt(1 - eta**2) * b1 + eta * off_subspace_unit())
    for j in range(6):
        words.append(f"her{j}")
        vecs.append(-np.sqrt(1 - eta**2) * b1 + eta * off_subspace_unit())
    for j in range(n_perp):
        words.append(f"w{j:03d}")
        vecs.append(off_subspace_unit())
    space = EmbeddingSpace(tag, tuple(words), np.array(vecs), normalized=True)
    return space, basis
