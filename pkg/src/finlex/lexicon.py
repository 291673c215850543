from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

CATEGORIES = ("negative", "uncertain", "litigious", "generic")


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class SentimentLexicon:
    name: str
    category: str
    words: frozenset[str]
    meta: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not self.name:
            raise LexiconError("lexicon name must be nonempty")
        if self.category not in CATEGORIES:
            raise LexiconError(f"unknown category {self.category!r}; expected one of {CATEGORIES}")
        words = frozenset(self.words)
        bad = [w for w in words if w != w.lower() or not w or any(c.isspace() for c in w)]
        if bad:
            raise LexiconError(f"{self.name}: words must be lowercase single tokens, got {sorted(bad)[:5]}")
        object.__setattr__(self, "words", words)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __iter__(self):
        return iter(sorted(self.words))

    def renamed(self, name: str) -> "SentimentLexicon":
        return SentimentLexicon(name, self.category, self.words, dict(self.meta))


def content_hash(words: Iterable[str]) -> str:
    h = hashlib.sha256()
    for w in sorted(words):
        h.update(w.encode("utf-8") + b"\n")
    return h.hexdigest()


def read_wordlist(path: str | Path) -> set[str]:
    """Words from a one-per-line file; ``#`` lines and blanks skipped, case folded to lower."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            words.add(line.split()[0].lower())
    return words


def read_lexicon(path: str | Path, name: str | None = None, category: str | None = None) -> SentimentLexicon:
    """Load a lexicon, taking name/category from the sidecar JSON when present."""
    path = Path(path)
    meta = {}
    sidecar = sidecar_path(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
    name = name or meta.get("name") or path.stem
    category = category or meta.get("category") or "generic"
    return SentimentLexicon(name, category, frozenset(read_wordlist(path)), meta)


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


_SIDECAR_SKIP = {"probabilities", "audit"}


def write_lexicon(lexicon: SentimentLexicon, path: str | Path) -> None:
    """Write the word file (sorted) and its JSON sidecar."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {lexicon.name} ({lexicon.category}), {len(lexicon)} words\n")
        for w in sorted(lexicon.words):
            fh.write(w + "\n")
    meta = {k: v for k, v in lexicon.meta.items() if k not in _SIDECAR_SKIP}
    meta.update(name=lexicon.name, category=lexicon.category, size=len(lexicon),
                words_sha256=content_hash(lexicon.words))
    sidecar_path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8")
