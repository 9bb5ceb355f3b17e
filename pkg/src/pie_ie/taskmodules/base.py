from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from pie_ie.document import Annotation


@dataclass(frozen=True)
class Skipped:
    """An annotation (or candidate) a task module could not encode."""

    document_id: str
    reason: str
    annotation: Optional[Annotation] = None
    detail: str = ""


def summarize_skipped(skipped: Iterable[Skipped]) -> Counter:
    return Counter(entry.reason for entry in skipped)
