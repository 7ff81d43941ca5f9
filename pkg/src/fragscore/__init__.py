"""Corpus analytics for article-summary pairs.

Decomposes summaries into shared token runs against their articles,
measures coverage, density, and compression, partitions corpora by
extractiveness, scores systems with ROUGE F1, and ingests raw HTML
pages into a clean dataset.
"""

from .config import Config
from .fragments import Fragment, FragmentSet, extract_fragments
from .measures import AnalysisRecord, analyze_pair, bin_corpus, compression, coverage, density
from .rouge import RougeScore, rouge_l, rouge_n, score_all
from .systems import lede3, oracle_fragments, textrank
from .text_core import TokenSeq, split_sentences, tokenize

__version__ = "0.1.0"

__all__ = [
    "AnalysisRecord",
    "Config",
    "Fragment",
    "FragmentSet",
    "RougeScore",
    "TokenSeq",
    "analyze_pair",
    "bin_corpus",
    "compression",
    "coverage",
    "density",
    "extract_fragments",
    "lede3",
    "oracle_fragments",
    "rouge_l",
    "rouge_n",
    "score_all",
    "split_sentences",
    "textrank",
    "tokenize",
    "__version__",
]
