"""Tag imported APIs with one of seven behaviour categories."""
from __future__ import annotations

import os
from dataclasses import dataclass
from fnmatch import fnmatchcase
from importlib import resources

CATEGORIES = ("file", "process", "memory", "registry", "network", "windows_service", "other")
ENV_VAR = "MALDETECT_BEHAVIOR_MAP"


@dataclass(frozen=True)
class BehaviorCategoryMap:
    """Ordered (category, patterns) pairs; the first matching category wins."""
    entries: tuple

    def __post_init__(self):
        seen = set()
        for category, patterns in self.entries:
            if category not in CATEGORIES:
                raise ValueError(f"unknown behaviour category {category!r}")
            if category in seen:
                raise ValueError(f"category {category!r} listed twice")
            if not patterns:
                raise ValueError(f"category {category!r} has no patterns")
            seen.add(category)

    def category_of(self, api: str) -> str:
        name = api.rpartition("!")[2].lower()
        for category, patterns in self.entries:
            if any(fnmatchcase(name, p) for p in patterns):
                return category
        return "other"


def parse_behavior_map(text: str) -> BehaviorCategoryMap:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        category, sep, rest = line.partition(":")
        if not sep:
            raise ValueError(f"behaviour map line {lineno}: expected 'category: patterns'")
        patterns = tuple(p.strip().lower() for p in rest.split(",") if p.strip())
        entries.append((category.strip(), patterns))
    return BehaviorCategoryMap(tuple(entries))


def load_behavior_map(path=None) -> BehaviorCategoryMap:
    """Load from ``path``, else the file named by $MALDETECT_BEHAVIOR_MAP, else the default."""
    path = path or os.environ.get(ENV_VAR)
    if path:
        with open(path, encoding="utf-8") as fh:
            return parse_behavior_map(fh.read())
    text = resources.files("maldetect").joinpath("data/behaviors.cfg").read_text("utf-8")
    return parse_behavior_map(text)


def categorize_behaviors(api_names, behavior_map: BehaviorCategoryMap | None = None) -> dict:
    behavior_map = behavior_map or load_behavior_map()
    counts = dict.fromkeys(CATEGORIES, 0)
    for api in api_names:
        counts[behavior_map.category_of(api)] += 1
    return counts
