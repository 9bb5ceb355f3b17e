"""Offset-preserving rule tokenizer and char/token span alignment.

Tokens are maximal runs of letters and digits (Unicode categories ``L*`` and
``N*``) or single other non-whitespace code points.  Offsets count code
points, matching Python string indexing.
"""

from __future__ import annotations

import unicodedata
from bisect import bisect_left
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from pie_ie.errors import AlignmentError, IndexOutOfRangeError


@dataclass(frozen=True)
class Token:
    start: int
    end: int
    text: str


def _is_alnum(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "LN"


def tokenize(text: str) -> List[Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        j = i + 1
        if _is_alnum(ch):
            while j < n and _is_alnum(text[j]):
                j += 1
        tokens.append(Token(i, j, text[i:j]))
        i = j
    return tokens


def char_span_to_token_span(tokens: Sequence[Token], start: int, end: int) -> Tuple[int, int]:
    """Token range ``[i, j)`` whose edges coincide exactly with ``(start, end)``."""
    starts = [t.start for t in tokens]
    ends = [t.end for t in tokens]
    i = bisect_left(starts, start)
    j = bisect_left(ends, end)
    if start < end and i < len(tokens) and starts[i] == start and j < len(tokens) and ends[j] == end and i <= j:
        return i, j + 1
    raise AlignmentError(start, end, _nearest(starts, start), _nearest(ends, end))


def _nearest(values: Sequence[int], x: int):
    if not values:
        return None
    k = bisect_left(values, x)
    candidates = [values[c] for c in (k - 1, k) if 0 <= c < len(values)]
    return min(candidates, key=lambda v: (abs(v - x), v))


def token_span_to_char_span(tokens: Sequence[Token], i: int, j: int) -> Tuple[int, int]:
    if not 0 <= i < j <= len(tokens):
        raise IndexOutOfRangeError(f"token range ({i}, {j}) invalid for {len(tokens)} tokens")
    return tokens[i].start, tokens[j - 1].end


def covering_token_span(tokens: Sequence[Token], start: int, end: int) -> Tuple[int, int]:
    """Smallest token range touching ``[start, end)``; empty ``(k, k)`` if none does."""
    ends = [t.end for t in tokens]
    starts = [t.start for t in tokens]
    i = bisect_left(ends, start + 1)
    j = bisect_left(starts, end)
    return i, max(i, j)
