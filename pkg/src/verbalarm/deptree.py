"""Dependency trees for the command sublanguage.

Trees come from two sources: CoNLL-U documents produced by any external
dependency parser, or the built-in deterministic parser below, which
reproduces the head/dependent shape the pipeline expects for typed
pick-and-place commands.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .lexicon import Lexicon

PENN_TO_UPOS = {
    "VB": "VERB", "NN": "NOUN", "NNS": "NOUN", "CD": "NUM",
    "RB": "ADV", "IN": "ADP", "DT": "DET", "JJ": "ADJ",
}
UPOS_TO_PENN = {
    "VERB": "VB", "NOUN": "NN", "NUM": "CD", "ADV": "RB",
    "ADP": "IN", "DET": "DT", "ADJ": "JJ",
}

PREPOSITIONS = {
    "by", "to", "at", "in", "on", "of", "into", "onto", "from",
    "with", "towards", "toward", "along", "around", "over", "under",
    "above", "below", "through",
}
DETERMINERS = {"the", "a", "an", "this", "that"}
SIGN_WORDS = {"minus", "negative", "plus"}

NUMBER_WORDS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
    "eleven": 11, "twelve": 12, "fifteen": 15, "twenty": 20,
    "thirty": 30, "forty": 40, "fifty": 50, "sixty": 60,
    "seventy": 70, "eighty": 80, "ninety": 90, "hundred": 100,
}

_NUM_RE = re.compile(r"[+-]?\d+(?:\.\d+)?$")
_TOKEN_RE = re.compile(r"[+-]?\d+(?:\.\d+)?|[a-z]+|±")


class DepTreeError(Exception):
    pass


class MalformedLine(DepTreeError):
    def __init__(self, line_no, detail=""):
        super().__init__(f"malformed CoNLL-U line {line_no}" + (f": {detail}" if detail else ""))
        self.line_no = line_no


class CyclicHeads(DepTreeError):
    def __init__(self, sentence_no=None):
        super().__init__(f"cyclic head indices (sentence {sentence_no})")
        self.sentence_no = sentence_no


class MultipleRoots(DepTreeError):
    def __init__(self, sentence_no=None, count=0):
        super().__init__(f"expected exactly 1 root, found {count} (sentence {sentence_no})")
        self.sentence_no = sentence_no
        self.count = count


class EmptyInput(DepTreeError):
    pass


class UnparsableCommand(DepTreeError):
    def __init__(self, sentence):
        super().__init__(f"no verb-like root in: {sentence!r}")
        self.sentence = sentence


class IndexOutOfRange(DepTreeError):
    pass


@dataclass(frozen=True)
class Token:
    index: int          # 1-based surface position
    text: str
    lemma: str
    pos: str            # Penn-style tag (VB, NN, NNS, CD, RB, IN, DT, JJ)
    head: int           # 0 = root
    dep: str            # root, advmod, prep, pobj, dobj, nummod, det, amod, conj, dep


def _check_tokens(tokens: list[Token], sentence_no=None) -> None:
    n = len(tokens)
    if n == 0:
        raise EmptyInput("sentence with no tokens")
    for i, tok in enumerate(tokens, start=1):
        if tok.index != i:
            raise MalformedLine(i, f"token indices not contiguous at {tok.index}")
        if not (0 <= tok.head <= n) or tok.head == tok.index:
            raise CyclicHeads(sentence_no)
    roots = [t for t in tokens if t.head == 0]
    if len(roots) != 1:
        raise MultipleRoots(sentence_no, count=len(roots))
    # every token must reach the root without revisiting a node
    for tok in tokens:
        seen = set()
        cur = tok
        while cur.head != 0:
            if cur.index in seen:
                raise CyclicHeads(sentence_no)
            seen.add(cur.index)
            cur = tokens[cur.head - 1]


@dataclass(frozen=True)
class DependencyTree:
    tokens: tuple[Token, ...]
    sentence: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        _check_tokens(list(self.tokens), None)

    @property
    def root(self) -> Token:
        return next(t for t in self.tokens if t.head == 0)

    def children(self, index: int) -> list[Token]:
        """Tokens whose head is `index`, in surface order."""
        if not (1 <= index <= len(self.tokens)):
            raise IndexOutOfRange(f"token index {index} not in 1..{len(self.tokens)}")
        return [t for t in self.tokens if t.head == index]

    def subtree(self, index: int) -> list[Token]:
        """All descendants of `index` (not including it), in surface order."""
        if not (1 <= index <= len(self.tokens)):
            raise IndexOutOfRange(f"token index {index} not in 1..{len(self.tokens)}")
        keep = set()
        frontier = [index]
        while frontier:
            head = frontier.pop()
            for tok in self.tokens:
                if tok.head == head and tok.index not in keep:
                    keep.add(tok.index)
                    frontier.append(tok.index)
        return [t for t in self.tokens if t.index in keep]


# -- CoNLL-U ---------------------------------------------------------------

def parse_conllu(text: str) -> list[DependencyTree]:
    """Parse a CoNLL-U document into one tree per sentence block.

    Comment lines, multiword-token ranges and empty nodes are skipped.
    """
    trees = []
    block: list[tuple[int, str]] = []
    lines = text.splitlines()
    for line_no, line in enumerate(lines + [""], start=1):
        if line.strip():
            block.append((line_no, line))
            continue
        if block:
            trees.append(_parse_block(block, sentence_no=len(trees) + 1))
            block = []
    return trees


def _parse_block(block: list[tuple[int, str]], sentence_no: int) -> DependencyTree:
    tokens = []
    words = []
    for line_no, line in block:
        if line.startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t")
        if len(cols) != 10:
            raise MalformedLine(line_no, f"expected 10 columns, got {len(cols)}")
        idx, form, lemma, upos, xpos, _feats, head, deprel, _deps, _misc = cols
        if "-" in idx or "." in idx:
            continue  # multiword token range / empty node
        try:
            index = int(idx)
        except ValueError:
            raise MalformedLine(line_no, f"bad index {idx!r}")
        try:
            head_i = int(head)
        except ValueError:
            raise MalformedLine(line_no, f"bad head {head!r}")
        pos = xpos if xpos != "_" else UPOS_TO_PENN.get(upos, upos)
        dep = deprel.lower()
        if head_i == 0:
            dep = "root"
        tokens.append(Token(index, form, lemma if lemma != "_" else form.lower(),
                            pos, head_i, dep))
        words.append(form)
    _check_tokens(tokens, sentence_no)
    return DependencyTree(tuple(tokens), " ".join(words))


def to_conllu(tree: DependencyTree) -> str:
    """Serialize a tree back to a 10-column CoNLL-U block (re-parseable)."""
    lines = [f"# text = {tree.sentence}"] if tree.sentence else []
    for t in tree.tokens:
        upos = PENN_TO_UPOS.get(t.pos, "X")
        lines.append("\t".join([
            str(t.index), t.text, t.lemma, upos, t.pos, "_",
            str(t.head), t.dep, "_", "_",
        ]))
    return "\n".join(lines) + "\n"


# -- built-in command parser -------------------------------------------------

def tokenize(sentence: str, lex: Lexicon | None = None) -> list[str]:
    """Lowercase, strip punctuation, split digit/letter runs, merge known
    multi-word object names into single underscore-joined tokens."""
    lex = lex or Lexicon.default()
    text = sentence.lower().replace("+/-", "±")
    words = _TOKEN_RE.findall(text)
    if not words:
        raise EmptyInput(f"nothing to parse in {sentence!r}")
    multi = []
    for name, entry in lex.categories["Objects"].items():
        for syn in entry["synonyms"]:
            parts = syn.lower().split()
            if len(parts) > 1:
                multi.append(parts)
    multi.sort(key=len, reverse=True)
    out = []
    i = 0
    while i < len(words):
        for parts in multi:
            if words[i:i + len(parts)] == parts:
                out.append("_".join(parts))
                i += len(parts)
                break
        else:
            out.append(words[i])
            i += 1
    return out


def _assign_pos(word: str, lex: Lexicon) -> str:
    if _NUM_RE.fullmatch(word) or word in NUMBER_WORDS:
        return "CD"
    if lex.lookup(word, "Verbs"):
        return "VB"
    trigger = lex.lookup(word, "TriggerWords")
    if trigger:
        return "RB" if trigger.name == "Split" else "VB"
    if lex.lookup(word, "UnitOfMeasurement"):
        return "NNS"
    if lex.lookup(word, "PlaceWords"):
        return "RB"
    if word in PREPOSITIONS:
        return "IN"
    if word in DETERMINERS:
        return "DT"
    if word in SIGN_WORDS or word == "±":
        return "RB"
    return "NN"


def parse_command(sentence: str, lex: Lexicon | None = None) -> DependencyTree:
    """Deterministic rule-based parse of one command sentence.

    The first dictionary verb (else the first verb-like token) becomes the
    root; direction adverbs attach as advmod, prepositions as prep with the
    following noun as pobj, numbers as nummod to the adjacent measurement
    noun, determiners as det, and the first noun after the verb as dobj.
    """
    if not sentence or not sentence.strip():
        raise EmptyInput("empty command")
    lex = lex or Lexicon.default()
    words = tokenize(sentence, lex)
    n = len(words)
    pos = [_assign_pos(w, lex) for w in words]

    root = None
    for i, w in enumerate(words):
        if lex.lookup(w, "Verbs"):
            root = i
            break
    if root is None:
        for i, p in enumerate(pos):
            if p == "VB":
                root = i
                break
    if root is None:
        raise UnparsableCommand(sentence)

    heads = [root + 1] * n
    deps = ["dep"] * n
    heads[root], deps[root] = 0, "root"

    def next_noun(start: int) -> int | None:
        for j in range(start, n):
            if pos[j] in ("NN", "NNS"):
                return j
        return None

    pending_prep = None
    dobj_taken = False
    for i in range(n):
        if i == root:
            pending_prep = None
            continue
        p = pos[i]
        if p == "RB":
            deps[i] = "advmod"
        elif p == "VB":
            deps[i] = "conj"
        elif p == "IN":
            deps[i] = "prep"
            pending_prep = i
        elif p == "DT":
            nxt = next_noun(i + 1)
            if nxt is not None:
                heads[i], deps[i] = nxt + 1, "det"
        elif p == "CD":
            if i + 1 < n and pos[i + 1] in ("NN", "NNS"):
                heads[i], deps[i] = i + 2, "nummod"
            elif i - 1 >= 0 and pos[i - 1] in ("NN", "NNS"):
                heads[i], deps[i] = i, "nummod"
        elif p in ("NN", "NNS"):
            if pending_prep is not None:
                heads[i], deps[i] = pending_prep + 1, "pobj"
                pending_prep = None
            elif i > root and not dobj_taken:
                deps[i] = "dobj"
                dobj_taken = True
            elif i + 1 < n and pos[i + 1] in ("NN", "NNS"):
                heads[i], deps[i] = i + 2, "amod"

    tokens = tuple(
        Token(i + 1, words[i], words[i], pos[i], heads[i], deps[i])
        for i in range(n)
    )
    return DependencyTree(tokens, sentence)
