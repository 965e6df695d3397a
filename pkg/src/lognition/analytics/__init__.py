from .series import BinnedSeries, bin_series
from .te import TEResult, WindowTE, te_windows, transfer_entropy
from .text import (
    DEFAULT_FILTERS,
    DEFAULT_STOPWORDS,
    TermEntry,
    TermStats,
    TokenFilters,
    tf_idf,
    tokenize,
    word_count,
)

__all__ = [
    "BinnedSeries",
    "DEFAULT_FILTERS",
    "DEFAULT_STOPWORDS",
    "TEResult",
    "TermEntry",
    "TermStats",
    "TokenFilters",
    "WindowTE",
    "bin_series",
    "te_windows",
    "tf_idf",
    "tokenize",
    "transfer_entropy",
    "word_count",
]
