"""Dictionary of high-level command words and their synonyms.

Seven fixed categories (Verbs, Objects, PlaceWords, UnitOfMeasurement,
Nouns, Axes, TriggerWords), each mapping a canonical high-level word to a
synonym list. The vocabulary can grow at runtime ("X means Y" commands) and
persists as JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

CATEGORIES = (
    "Verbs",
    "Objects",
    "PlaceWords",
    "UnitOfMeasurement",
    "Nouns",
    "Axes",
    "TriggerWords",
)

# PlaceWords used to address a specific joint ("move joint 3").
JOINT_NUMBERS = {
    "One": 1, "Two": 2, "Three": 3, "Four": 4,
    "Five": 5, "Six": 6, "Seven": 7,
}

SCHEMA_VERSION = 1


class LexiconError(Exception):
    pass


class UnknownCategory(LexiconError):
    def __init__(self, name):
        super().__init__(f"unknown category: {name!r}")
        self.name = name


class UnknownTarget(LexiconError):
    def __init__(self, target, line_no=None):
        at = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"unknown target word: {target!r}{at}")
        self.target = target
        self.line_no = line_no


class DuplicateSynonym(LexiconError):
    def __init__(self, word):
        super().__init__(f"already a synonym: {word!r}")
        self.word = word


class CrossCategoryConflict(LexiconError):
    def __init__(self, word, existing):
        super().__init__(f"{word!r} already maps to {existing} in the same category")
        self.word = word
        self.existing = existing


class SchemaViolation(LexiconError):
    def __init__(self, detail):
        super().__init__(f"bad lexicon file: {detail}")
        self.detail = detail


class MalformedLine(LexiconError):
    def __init__(self, line_no, detail=""):
        super().__init__(f"malformed line {line_no}" + (f": {detail}" if detail else ""))
        self.line_no = line_no


@dataclass(frozen=True)
class HighLevelWord:
    category: str
    name: str


@dataclass(frozen=True)
class LearnDelta:
    """Record of one learned synonym, for persistence and client broadcast."""

    category: str
    high_level: str
    synonym: str


def _norm(word: str) -> str:
    return word.strip().lower().replace("_", " ")


class Lexicon:
    def __init__(self, categories: dict[str, dict[str, dict]]):
        missing = [c for c in CATEGORIES if c not in categories]
        if missing:
            raise SchemaViolation(f"missing categories: {missing}")
        extra = [c for c in categories if c not in CATEGORIES]
        if extra:
            raise SchemaViolation(f"unknown categories: {extra}")
        self._categories = categories
        self._index: dict[str, dict[str, str]] = {}
        for cat in CATEGORIES:
            self._reindex(cat)

    def _reindex(self, category: str) -> None:
        index: dict[str, str] = {}
        for name, entry in self._categories[category].items():
            syns = entry.get("synonyms")
            if not syns or not all(isinstance(s, str) and s.strip() for s in syns):
                raise SchemaViolation(f"{category}.{name}: empty or invalid synonym list")
            for syn in syns:
                key = _norm(syn)
                if key in index and index[key] != name:
                    raise SchemaViolation(
                        f"{category}: {syn!r} listed under both {index[key]} and {name}"
                    )
                index[key] = name
        self._index[category] = index

    # -- queries ----------------------------------------------------------

    @property
    def categories(self) -> dict[str, dict[str, dict]]:
        return self._categories

    def high_level_words(self, category: str) -> list[str]:
        if category not in self._categories:
            raise UnknownCategory(category)
        return list(self._categories[category])

    def synonyms(self, word: HighLevelWord) -> list[str]:
        return list(self._categories[word.category][word.name]["synonyms"])

    def lookup(self, word: str, category: str | None = None) -> HighLevelWord | None:
        """Resolve a surface word to its high-level word, or None.

        Canonical names resolve to themselves; matching is case-insensitive
        and treats underscores as spaces (multi-word object tokens).
        """
        if not word or not word.strip():
            return None
        if category is not None and category not in self._categories:
            raise UnknownCategory(category)
        key = _norm(word)
        cats = (category,) if category else CATEGORIES
        for cat in cats:
            name = self._index[cat].get(key)
            if name is not None:
                return HighLevelWord(cat, name)
            for canonical in self._categories[cat]:
                if canonical.lower() == key:
                    return HighLevelWord(cat, canonical)
        return None

    # -- mutation (single writer; see server for the locking contract) ----

    def learn(self, new_word: str, target: str) -> LearnDelta:
        """Append new_word to the synonym list of whatever target resolves to."""
        resolved = self.lookup(target)
        if resolved is None:
            raise UnknownTarget(target)
        cat, name = resolved.category, resolved.name
        existing = self._index[cat].get(_norm(new_word))
        if existing == name:
            raise DuplicateSynonym(new_word)
        if existing is not None:
            raise CrossCategoryConflict(new_word, HighLevelWord(cat, existing))
        for canonical in self._categories[cat]:
            if canonical.lower() == _norm(new_word) and canonical != name:
                raise CrossCategoryConflict(new_word, HighLevelWord(cat, canonical))
        self._categories[cat][name]["synonyms"].append(new_word.strip().lower())
        self._index[cat][_norm(new_word)] = name
        return LearnDelta(cat, name, new_word.strip().lower())

    def import_synonyms(self, lines) -> int:
        """Bulk-add synonyms from `category<TAB>high_level<TAB>syn1,syn2,...` lines.

        Accepts an iterable of lines or a file path. Returns the number of
        novel synonyms added; duplicates are skipped silently.
        """
        if isinstance(lines, str):
            with open(lines, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        added = 0
        for line_no, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedLine(line_no, "expected 3 tab-separated fields")
            category, high_level, syns = parts
            if category not in self._categories:
                raise MalformedLine(line_no, f"unknown category {category!r}")
            if high_level not in self._categories[category]:
                raise UnknownTarget(high_level, line_no=line_no)
            for syn in (s.strip() for s in syns.split(",")):
                if not syn:
                    continue
                if self.lookup(syn, category) is not None:
                    continue
                self._categories[category][high_level]["synonyms"].append(syn.lower())
                self._index[category][_norm(syn)] = high_level
                added += 1
        return added

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        return {"version": SCHEMA_VERSION, "categories": self._categories}

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, data: dict) -> "Lexicon":
        if not isinstance(data, dict) or "categories" not in data:
            raise SchemaViolation("missing 'categories'")
        if data.get("version") != SCHEMA_VERSION:
            raise SchemaViolation(f"unsupported version {data.get('version')!r}")
        cats = data["categories"]
        if not isinstance(cats, dict):
            raise SchemaViolation("'categories' must be an object")
        parsed = {}
        for cat, entries in cats.items():
            parsed[cat] = {}
            for name, entry in entries.items():
                if not isinstance(entry, dict) or "synonyms" not in entry:
                    raise SchemaViolation(f"{cat}.{name}: missing synonyms")
                parsed[cat][name] = {
                    "synonyms": list(entry["synonyms"]),
                    "extension": bool(entry.get("extension", False)),
                }
        return cls(parsed)

    @classmethod
    def load(cls, path: str) -> "Lexicon":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(str(exc)) from exc
        return cls.from_dict(data)

    @classmethod
    def default(cls) -> "Lexicon":
        """The shipped dictionary (core entries plus flagged extensions)."""
        text = resources.files("verbalarm.data").joinpath("lexicon.json").read_text("utf-8")
        return cls.from_dict(json.loads(text))


def diff(old: Lexicon, new: Lexicon) -> dict[str, list[str]]:
    """Synonyms present in new but not old, and vice versa, as 'Cat.Name: word'."""
    def flat(lex: Lexicon) -> set[str]:
        out = set()
        for cat, entries in lex.categories.items():
            for name, entry in entries.items():
                for syn in entry["synonyms"]:
                    out.add(f"{cat}.{name}: {syn}")
        return out

    a, b = flat(old), flat(new)
    return {"added": sorted(b - a), "removed": sorted(a - b)}
