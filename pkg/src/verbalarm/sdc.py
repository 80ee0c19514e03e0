"""Spatial Description Clause extraction from dependency trees.

Every command reduces to one or more four-slot clauses (event, object,
place, path) or to a control trigger (learn / stop). Split triggers
partition a sentence into independently extracted clauses.
"""

from __future__ import annotations

from dataclasses import dataclass

from .deptree import NUMBER_WORDS, SIGN_WORDS, _NUM_RE, DependencyTree, Token, parse_command
from .lexicon import JOINT_NUMBERS, HighLevelWord, Lexicon


class SdcError(Exception):
    pass


class NoEventFound(SdcError):
    def __init__(self, clause_text):
        super().__init__(f"no dictionary verb in: {clause_text!r}")
        self.clause_text = clause_text


class MalformedLearn(SdcError):
    def __init__(self, detail):
        super().__init__(f"learn trigger without a word on each side: {detail}")
        self.detail = detail


class NonNumericQuantifier(SdcError):
    def __init__(self, word):
        super().__init__(f"quantifier is not a number: {word!r}")
        self.word = word


@dataclass(frozen=True)
class Path:
    magnitude: float
    unit: HighLevelWord

    @property
    def rendered(self) -> str:
        return f"{self.magnitude:g}_{self.unit.name}"


@dataclass(frozen=True)
class SDC:
    event: HighLevelWord
    object: HighLevelWord | None = None
    place: HighLevelWord | None = None
    path: Path | None = None

    def joint_number(self) -> int | None:
        """1..7 when the place slot addresses a joint, else None."""
        if self.place is not None and self.place.name in JOINT_NUMBERS:
            return JOINT_NUMBERS[self.place.name]
        return None


@dataclass(frozen=True)
class TriggerAction:
    kind: str                      # "Stop" or "Learn"
    new_word: str | None = None
    target: str | None = None

    @staticmethod
    def stop() -> "TriggerAction":
        return TriggerAction("Stop")

    @staticmethod
    def learn(new_word: str, target: str) -> "TriggerAction":
        return TriggerAction("Learn", new_word=new_word, target=target)


# -- wire forms --------------------------------------------------------------

def to_wire(item) -> dict:
    if isinstance(item, TriggerAction):
        wire = {"trigger": item.kind}
        if item.kind == "Learn":
            wire["new_word"] = item.new_word
            wire["target"] = item.target
        return wire
    path = None
    if item.path is not None:
        mag = item.path.magnitude
        path = {"magnitude": int(mag) if mag == int(mag) else mag,
                "unit": item.path.unit.name}
    return {
        "event": item.event.name,
        "object": item.object.name if item.object else None,
        "place": item.place.name if item.place else None,
        "path": path,
    }


# -- slot finders -------------------------------------------------------------

def _trigger(lex: Lexicon, token: Token) -> str | None:
    hit = lex.lookup(token.lemma, "TriggerWords") or lex.lookup(token.text, "TriggerWords")
    return hit.name if hit else None


def _resolve(lex: Lexicon, token: Token, category: str) -> HighLevelWord | None:
    return lex.lookup(token.lemma, category) or lex.lookup(token.text, category)


def find_event(tree: DependencyTree, lex: Lexicon) -> HighLevelWord:
    return _find_event(tree, lex)[0]


def _find_event(tree: DependencyTree, lex: Lexicon) -> tuple[HighLevelWord, int]:
    root = tree.root
    hit = _resolve(lex, root, "Verbs")
    if hit:
        return hit, root.index
    for tok in tree.tokens:
        hit = _resolve(lex, tok, "Verbs")
        if hit:
            return hit, tok.index
    raise NoEventFound(tree.sentence or " ".join(t.text for t in tree.tokens))


def _numeric_value(token: Token) -> float:
    text = token.text
    if _NUM_RE.fullmatch(text):
        return float(text)
    if text in NUMBER_WORDS:
        return float(NUMBER_WORDS[text])
    raise NonNumericQuantifier(text)


def find_path(tree: DependencyTree, event_index: int, lex: Lexicon):
    """Path = unit-of-measurement noun (NNS) in the event subtree plus its
    nummod dependent. Returns (Path | None, consumed token indices)."""
    for tok in tree.subtree(event_index):
        if tok.pos != "NNS" or not _resolve(lex, tok, "UnitOfMeasurement"):
            continue
        unit = _resolve(lex, tok, "UnitOfMeasurement")
        numbers = [c for c in tree.children(tok.index) if c.dep == "nummod"]
        if not numbers:
            continue
        num = numbers[0]
        value = _numeric_value(num)
        consumed = {tok.index, num.index}
        if num.index > 1:
            prev = tree.tokens[num.index - 2]
            if prev.lemma in SIGN_WORDS or prev.text == "±":
                consumed.add(prev.index)
                if prev.lemma in ("minus", "negative"):
                    value = -value
        return Path(value, unit), consumed
    return None, set()


def _scan(tree: DependencyTree, event_index: int, consumed: set[int]):
    for tok in tree.subtree(event_index):
        if tok.index not in consumed:
            yield tok


def find_object(tree: DependencyTree, event_index: int, lex: Lexicon,
                consumed: set[int] = frozenset()) -> HighLevelWord | None:
    for tok in _scan(tree, event_index, consumed):
        hit = _resolve(lex, tok, "Objects")
        if hit:
            return hit
    return None


def find_place(tree: DependencyTree, event_index: int, lex: Lexicon,
               consumed: set[int] = frozenset()) -> HighLevelWord | None:
    """First subtree token naming a direction, an axis, or (in a clause that
    mentions a joint or a numbered menu item) a joint/menu number."""
    has_number_context = any(
        t.lemma in ("joint", "joints", "number", "numbers") for t in tree.tokens
    )
    for tok in _scan(tree, event_index, consumed):
        hit = _resolve(lex, tok, "PlaceWords") or _resolve(lex, tok, "Axes")
        if not hit:
            continue
        if hit.name in JOINT_NUMBERS and not has_number_context:
            continue  # bare small numbers are not places
        return hit
    return None


# -- extraction ---------------------------------------------------------------

def extract_single(tree: DependencyTree, lex: Lexicon) -> SDC:
    event, event_index = _find_event(tree, lex)
    path, consumed = find_path(tree, event_index, lex)
    obj = find_object(tree, event_index, lex, consumed)
    place = find_place(tree, event_index, lex, consumed)
    return SDC(event=event, object=obj, place=place, path=path)


def extract(tree: DependencyTree, lex: Lexicon, apply_learn: bool = True) -> list:
    """Turn one dependency tree into SDCs and/or trigger actions.

    A stop synonym anywhere dominates the whole sentence. Learn triggers
    consume their clause; with apply_learn the new word is added to the
    lexicon immediately, so later clauses of the same sentence resolve it.
    Split synonyms partition the sentence, left to right.
    """
    tokens = list(tree.tokens)
    if any(_trigger(lex, t) == "Stop" for t in tokens):
        return [TriggerAction.stop()]

    segments: list[list[Token]] = [[]]
    for tok in tokens:
        if _trigger(lex, tok) == "Split":
            segments.append([])
        else:
            segments[-1].append(tok)

    results = []
    whole = len(segments) == 1
    for seg in segments:
        if not seg:
            continue
        learn_pos = next((k for k, t in enumerate(seg) if _trigger(lex, t) == "Learn"), None)
        if learn_pos is not None:
            results.append(_extract_learn(tree, seg, learn_pos, lex, apply_learn))
            continue
        if whole:
            clause_tree = tree
        else:
            clause_tree = parse_command(" ".join(t.text for t in seg), lex)
        results.append(extract_single(clause_tree, lex))
    if not results:
        raise NoEventFound(tree.sentence)
    return results


def _extract_learn(tree: DependencyTree, seg: list[Token], learn_pos: int,
                   lex: Lexicon, apply_learn: bool) -> TriggerAction:
    left = [t for t in seg[:learn_pos] if t.pos != "DT"]
    right = [t for t in seg[learn_pos + 1:] if t.pos != "DT"]
    if not left or not right:
        raise MalformedLearn(" ".join(t.text for t in seg))
    trigger_index = seg[learn_pos].index
    head = left[-1]
    seg_indices = {t.index for t in seg}
    while head.head != 0 and head.head < trigger_index and head.head in seg_indices:
        head = tree.tokens[head.head - 1]
    action = TriggerAction.learn(head.text, right[0].text)
    if apply_learn:
        lex.learn(action.new_word, action.target)
    return action
