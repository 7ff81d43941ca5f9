"""Reference summarizers: lede-3, the fragment oracle, and TextRank.

All three are pure per document. The fragment oracle has access to the
reference summary and marks the ceiling for purely extractive systems;
lede-3 is the classic first-three-sentences floor.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .fragments import extract_fragments
from .text_core import DEFAULT_ABBREVIATIONS, TokenSeq, is_word_token, split_sentences, tokenize

SYSTEM_LEDE3 = "lede3"
SYSTEM_FRAGMENTS = "fragments"
SYSTEM_TEXTRANK = "textrank"


@dataclasses.dataclass
class SentenceGraph:
    sentences: list[TokenSeq]
    texts: list[str]
    weights: np.ndarray  # symmetric, nonnegative, zero diagonal
    scores: np.ndarray


def lede3(article_text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> str:
    """First three sentences of the article (fewer if the article is
    shorter), joined with single spaces."""
    return " ".join(split_sentences(article_text, abbreviations)[:3])


def oracle_fragments(article: TokenSeq, summary: TokenSeq) -> str:
    """Concatenate the extractive fragments in summary order, using the
    summary's original-case tokens."""
    fset = extract_fragments(article, summary)
    pieces = []
    for f in fset.fragments:
        pieces.append(" ".join(summary.raw_tokens[f.summary_start : f.summary_start + f.length]))
    return " ".join(pieces)


def sentence_similarity(a: TokenSeq, b: TokenSeq) -> float:
    """Shared normalized-token types over the sum of log sentence
    lengths. Sentences under two tokens get similarity zero (and the
    log-length denominator stays positive)."""
    if len(a) < 2 or len(b) < 2:
        return 0.0
    shared = len(set(a.tokens) & set(b.tokens))
    if shared == 0:
        return 0.0
    return shared / (np.log(len(a)) + np.log(len(b)))


def build_sentence_graph(
    texts: list[str],
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
    similarity=sentence_similarity,
) -> SentenceGraph:
    sentences = [tokenize(text, abbreviations) for text in texts]
    n = len(sentences)
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w = similarity(sentences[i], sentences[j])
            weights[i, j] = w
            weights[j, i] = w
    return SentenceGraph(sentences=sentences, texts=list(texts), weights=weights, scores=np.full(n, 1.0 / n) if n else np.zeros(0))


def power_iteration(
    weights: np.ndarray,
    damping: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> np.ndarray:
    """Damped power iteration over the row-normalized weight matrix.

    Rows with no outgoing weight redistribute uniformly, which keeps the
    transition matrix stochastic and the score total constant at 1.
    Stops when the L1 change drops below tol or after max_iter sweeps.
    """
    n = weights.shape[0]
    if n == 0:
        return np.zeros(0)
    row_sums = weights.sum(axis=1)
    transition = np.empty_like(weights, dtype=float)
    for i in range(n):
        if row_sums[i] > 0:
            transition[i] = weights[i] / row_sums[i]
        else:
            transition[i] = 1.0 / n
    scores = np.full(n, 1.0 / n)
    teleport = (1.0 - damping) / n
    for _ in range(max_iter):
        updated = teleport + damping * (transition.T @ scores)
        delta = np.abs(updated - scores).sum()
        scores = updated
        if delta < tol:
            break
    return scores


def textrank(
    article_text: str,
    max_words: int = 50,
    damping: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 100,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
    similarity=sentence_similarity,
) -> str:
    """Rank sentences by damped power iteration over pairwise lexical
    similarity, then greedily take high-scoring sentences that fit the
    word budget and emit them in document order.

    Score ties fall back to document position, so an article whose
    similarity graph is all zeros degrades to lede-under-budget. Words
    are alphanumeric tokens; pure punctuation does not spend budget.
    """
    if max_words < 1:
        raise ValueError("max_words must be >= 1")
    graph = build_sentence_graph(split_sentences(article_text, abbreviations), abbreviations, similarity)
    graph.scores = power_iteration(graph.weights, damping=damping, tol=tol, max_iter=max_iter)
    chosen = select_by_budget(graph, np.argsort(-graph.scores, kind="stable"), max_words)
    return " ".join(graph.texts[i] for i in chosen)


def select_by_budget(graph: SentenceGraph, order, max_words: int) -> list[int]:
    """Greedy selection along `order`, skipping sentences that would
    push the running word count past max_words; result in document
    order."""
    chosen: list[int] = []
    used = 0
    for i in order:
        words = sum(1 for tok in graph.sentences[i].tokens if is_word_token(tok))
        if used + words > max_words:
            continue
        chosen.append(int(i))
        used += words
    return sorted(chosen)
