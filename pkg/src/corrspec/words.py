"""Words, walk graphs, and Furedi-Komlos sentence combinatorics.

A *word* is a nonempty tuple of positive-integer letters; it encodes the
closed index walks that appear when a matrix trace power is expanded.  Its
*graph* has the distinct letters as vertices and the unordered pairs of
consecutive letters as edges, each carrying a passage count.

An FK (Furedi-Komlos) *sentence* is an ordered list of words whose joint
graph is a tree, whose edges are jointly traversed at most twice, and where
every word after the first starts at a letter already visited.  Any word
parses uniquely into an FK sentence (``fk_syllabify``): scanning left to
right, an edge is *new* if its first traversal discovers an unseen letter
and *old* otherwise; the word is broken before every traversal of an old
edge and before the third and later traversals of a new edge.  Old edges
are exactly the cycle-closing ones, so cutting them leaves a tree, and the
cuts at third traversals enforce the multiplicity bound.

Every FK sentence satisfies the count identity

    m = #E1 - 2 * wt + 2 + total_length,

where m is the number of words, E1 the set of jointly once-traversed edges
(the *stem*), and wt the number of distinct letters.  The number of
equivalence classes (words up to relabeling letters) of FK sentences with m
words, total length l and weight k is at most

    2**(l - m) * binom(l - 1, m - 1) * k**(2 * (m - 1)),

which ``enumerate_fk_classes`` verifies against exhaustive counts.

Letters are 1-based for display; equivalence classes use the canonical form
in which letters are numbered by first appearance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

from .budget import BudgetError, ConfigError, check_budget

__all__ = [
    "Word",
    "WordGraph",
    "FkSentence",
    "EdgeClassReport",
    "parse_word",
    "format_word",
    "is_closed",
    "weight",
    "support",
    "graph_of",
    "sentence_passage_counts",
    "sentence_graph",
    "edge_classes",
    "classify_sentence_edges",
    "fk_syllabify",
    "is_fk_sentence",
    "validate_fk_sentence",
    "word_count_identity_holds",
    "is_wigner_word",
    "fk_word_decompose",
    "acronym",
    "relabel",
    "canonical_word",
    "canonical_sentence",
    "enumerate_fk_classes",
    "fk_class_bound",
]

Word = tuple  # tuple[int, ...], letters >= 1
Edge = tuple  # (a, b) with a <= b


def parse_word(text: str) -> Word:
    """Parse '12321' (single digits) or '1,2,13' (comma separated) into a word."""
    text = text.strip()
    if not text:
        raise ConfigError("empty word")
    parts = text.split(",") if "," in text else list(text)
    try:
        letters = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"cannot parse word {text!r}") from exc
    return _check_word(letters)


def format_word(w: Word) -> str:
    if all(1 <= s <= 9 for s in w):
        return "".join(str(s) for s in w)
    return ",".join(str(s) for s in w)


def _check_word(w) -> Word:
    w = tuple(int(s) for s in w)
    if len(w) == 0:
        raise ConfigError("a word needs at least one letter")
    if any(s < 1 for s in w):
        raise ConfigError(f"letters must be positive integers, got {w}")
    return w


def is_closed(w: Word) -> bool:
    return w[0] == w[-1]


def support(w: Word) -> frozenset:
    return frozenset(w)


def weight(w: Word) -> int:
    return len(set(w))


def _edge(a: int, b: int) -> Edge:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class WordGraph:
    vertices: frozenset
    edges: frozenset
    passage_counts: dict = field(compare=False)

    @property
    def total_passages(self) -> int:
        return sum(self.passage_counts.values())


def _passage_counts(words) -> dict:
    counts: dict = {}
    for w in words:
        for a, b in zip(w, w[1:]):
            e = _edge(a, b)
            counts[e] = counts.get(e, 0) + 1
    return counts


def graph_of(w: Word) -> WordGraph:
    """Graph of a single word: vertices = support, edges = consecutive pairs."""
    w = _check_word(w)
    counts = _passage_counts([w])
    return WordGraph(vertices=support(w), edges=frozenset(counts), passage_counts=counts)


def sentence_passage_counts(words) -> dict:
    return _passage_counts([_check_word(w) for w in words])


def sentence_graph(words) -> WordGraph:
    words = [_check_word(w) for w in words]
    if not words:
        raise ConfigError("a sentence needs at least one word")
    counts = _passage_counts(words)
    verts = frozenset().union(*(support(w) for w in words))
    return WordGraph(vertices=verts, edges=frozenset(counts), passage_counts=counts)


def edge_classes(passage_counts: dict) -> tuple[frozenset, frozenset, frozenset]:
    """Partition edges by joint passage count: exactly once / twice / three plus."""
    e1 = frozenset(e for e, c in passage_counts.items() if c == 1)
    e2 = frozenset(e for e, c in passage_counts.items() if c == 2)
    e3 = frozenset(e for e, c in passage_counts.items() if c >= 3)
    return e1, e2, e3


def _is_tree(vertices: frozenset, edges: frozenset) -> bool:
    if any(a == b for a, b in edges):
        return False
    if len(edges) != len(vertices) - 1:
        return False
    # connectivity by union-find
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = len(vertices)
    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            comps -= 1
    return comps == 1


@dataclass(frozen=True)
class FkSentence:
    """A validated FK sentence with its joint graph and edge classes."""

    words: tuple
    graph: WordGraph
    e1: frozenset
    e2: frozenset
    e3: frozenset

    @property
    def m(self) -> int:
        return len(self.words)

    @property
    def wt(self) -> int:
        return len(self.graph.vertices)

    @property
    def total_length(self) -> int:
        return sum(len(w) for w in self.words)


def _make_sentence(words) -> FkSentence:
    g = sentence_graph(words)
    e1, e2, e3 = edge_classes(g.passage_counts)
    return FkSentence(words=tuple(tuple(w) for w in words), graph=g, e1=e1, e2=e2, e3=e3)


def validate_fk_sentence(words) -> tuple[bool, str]:
    """(True, '') if the word list is an FK sentence, else (False, reason)."""
    words = [_check_word(w) for w in words]
    g = sentence_graph(words)
    if not _is_tree(g.vertices, g.edges):
        return False, "joint graph is not a tree"
    worst = max(g.passage_counts.values(), default=0)
    if worst > 2:
        return False, f"an edge is jointly traversed {worst} times"
    seen = set(words[0])
    for w in words[1:]:
        if w[0] not in seen:
            return False, f"word starting at {w[0]} does not start in the prior support"
        seen |= set(w)
    return True, ""


def is_fk_sentence(words) -> bool:
    return validate_fk_sentence(words)[0]


def word_count_identity_holds(s: FkSentence) -> bool:
    """m = #E1 - 2 wt + 2 + total length, satisfied by every FK sentence."""
    return s.m == len(s.e1) - 2 * s.wt + 2 + s.total_length


def fk_syllabify(w: Word) -> FkSentence:
    """Parse a word into its FK sentence.

    Scans left to right maintaining, per edge, whether it was new (first
    traversal reached an unseen letter) or old, and its traversal count.
    Breaks before the current letter at every position of an old edge and
    at the third and subsequent positions of a new edge.
    """
    w = _check_word(w)
    seen = {w[0]}
    is_new: dict = {}
    count: dict = {}
    out = []
    cur = [w[0]]
    for a, b in zip(w, w[1:]):
        e = _edge(a, b)
        if e not in count:
            count[e] = 0
            is_new[e] = b not in seen
        count[e] += 1
        cut = (not is_new[e]) or count[e] >= 3
        seen.add(b)
        if cut:
            out.append(tuple(cur))
            cur = [b]
        else:
            cur.append(b)
    out.append(tuple(cur))
    sentence = _make_sentence(out)
    ok, reason = validate_fk_sentence(sentence.words)
    assert ok, f"syllabification produced an invalid sentence: {reason}"
    return sentence


@dataclass
class EdgeClassReport:
    """Edge classes of a general sentence plus closed-walk count checks.

    For a single closed word of length 2k + 1 with weight t the counts obey

        2k >= #E1 + 2 #E2 + 3 #E3,    t <= #E1 + #E2 + #E3 + 1,

    the second because the walk graph is connected, so it has at least
    t - 1 distinct edges (equality exactly when the graph is a tree, e.g.
    any Wigner word).  Together these give k - t + #E1/2 >= #E3/2 - 1.
    Those checks are filled in only for such inputs.
    """

    e1: frozenset
    e2: frozenset
    e3: frozenset
    passage_counts: dict
    closed_word_checks: dict | None = None

    def to_json(self) -> dict:
        def fmt(edges):
            return sorted([list(e) for e in edges])

        out = {
            "e1": fmt(self.e1),
            "e2": fmt(self.e2),
            "e3": fmt(self.e3),
            "passage_counts": {f"{a},{b}": c for (a, b), c in sorted(self.passage_counts.items())},
        }
        if self.closed_word_checks is not None:
            out["closed_word_checks"] = dict(self.closed_word_checks)
        return out


def classify_sentence_edges(words) -> EdgeClassReport:
    """Joint passage counts partitioned into once / twice / three-plus."""
    if words and isinstance(words[0], int):
        words = [words]  # a bare word
    words = [_check_word(w) for w in words]
    counts = sentence_passage_counts(words)
    e1, e2, e3 = edge_classes(counts)
    checks = None
    if len(words) == 1 and is_closed(words[0]) and len(words[0]) % 2 == 1 and len(words[0]) > 1:
        k = (len(words[0]) - 1) // 2
        t = weight(words[0])
        n1, n2, n3 = len(e1), len(e2), len(e3)
        checks = {
            "k": k,
            "t": t,
            "passage_bound_holds": 2 * k >= n1 + 2 * n2 + 3 * n3,
            "weight_bound_holds": t <= n1 + n2 + n3 + 1,
            "excess_bound_holds": k - t + n1 / 2 >= n3 / 2 - 1,
        }
    return EdgeClassReport(e1=e1, e2=e2, e3=e3, passage_counts=counts, closed_word_checks=checks)


# Wigner words and the unique decomposition of an FK word ------------------------


def is_wigner_word(w: Word) -> bool:
    """Closed word whose graph is a tree with every edge traversed exactly twice."""
    w = _check_word(w)
    if not is_closed(w):
        return False
    g = graph_of(w)
    if not _is_tree(g.vertices, g.edges) and len(w) > 1:
        return False
    return all(c == 2 for c in g.passage_counts.values())


def fk_word_decompose(w: Word) -> list:
    """Split an FK word into its unique run of pairwise disjoint Wigner words.

    The once-traversed edges of an FK word are bridges crossed exactly once,
    so cutting the word at each of them leaves closed sub-walks on disjoint
    doubled subtrees; those are the Wigner words.
    """
    w = _check_word(w)
    ok, reason = validate_fk_sentence([w])
    if not ok:
        raise ConfigError(f"not an FK word: {reason}")
    counts = _passage_counts([w])
    pieces = []
    cur = [w[0]]
    for a, b in zip(w, w[1:]):
        if counts[_edge(a, b)] == 1:
            pieces.append(tuple(cur))
            cur = [b]
        else:
            cur.append(b)
    pieces.append(tuple(cur))
    assert all(is_wigner_word(p) for p in pieces)
    return pieces


def acronym(w: Word) -> Word:
    """First letters of the Wigner words in the unique decomposition."""
    return tuple(p[0] for p in fk_word_decompose(w))


# Equivalence and canonical forms -------------------------------------------------


def relabel(w: Word, mapping: dict) -> Word:
    return tuple(mapping[s] for s in w)


def canonical_word(w: Word) -> Word:
    """Letters renumbered 1, 2, ... by order of first appearance."""
    order: dict = {}
    for s in w:
        if s not in order:
            order[s] = len(order) + 1
    return tuple(order[s] for s in w)


def canonical_sentence(words) -> tuple:
    order: dict = {}
    for w in words:
        for s in w:
            if s not in order:
                order[s] = len(order) + 1
    return tuple(tuple(order[s] for s in w) for w in words)


# Exhaustive class enumeration ----------------------------------------------------

_ENUM_MAX_L = 12


def fk_class_bound(k: int, l: int, m: int) -> int:
    """2**(l-m) * binom(l-1, m-1) * k**(2(m-1)), the class-count upper bound."""
    if m < 1 or m > l:
        return 0
    return 2 ** (l - m) * math.comb(l - 1, m - 1) * k ** (2 * (m - 1))


class _UnionFind:
    """Union-find with an undo stack, for cycle pruning inside the DFS."""

    def __init__(self):
        self.parent: dict = {}
        self.size: dict = {}
        self.ops: list = []

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1
            self.ops.append(("add", x))

    def find(self, x):
        while self.parent[x] != x:
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.ops.append(("union", ra, rb))
        return True

    def mark(self) -> int:
        return len(self.ops)

    def rollback(self, mark: int):
        while len(self.ops) > mark:
            op = self.ops.pop()
            if op[0] == "add":
                del self.parent[op[1]]
                del self.size[op[1]]
            else:
                _, ra, rb = op
                self.parent[rb] = rb
                self.size[ra] -= self.size[rb]


def _compositions(l: int, m: int):
    """All ways to write l as an ordered sum of m positive parts."""
    if m == 1:
        yield (l,)
        return
    for first in range(1, l - m + 2):
        for rest in _compositions(l - first, m - 1):
            yield (first,) + rest


def enumerate_fk_classes(k: int, l: int, m: int) -> int:
    """Exact number of equivalence classes of FK sentences with weight k,
    total length l, and m words, by canonical-form DFS with cycle and
    multiplicity pruning.
    """
    if l > _ENUM_MAX_L:
        raise BudgetError(f"enumerate_fk_classes limited to total length <= {_ENUM_MAX_L}")
    if m < 1 or m > l or k < 1 or k > l:
        return 0
    check_budget(float(math.comb(l - 1, m - 1)) * 4.0 ** l * l, "enumerate_fk_classes")

    total = 0
    for comp in _compositions(l, m):
        total += _count_canonical(k, comp)
    return total


def _count_canonical(k: int, comp: tuple) -> int:
    """DFS over canonical letter assignments for fixed word lengths."""
    l = sum(comp)
    boundaries = set()
    pos = 0
    for length in comp[:-1]:
        pos += length
        boundaries.add(pos)  # position where a new word starts

    uf = _UnionFind()
    counts: dict = {}
    seq: list = []
    count_holder = [0]

    def rec(pos: int, nseen: int, word_start: bool):
        if nseen > k or nseen + (l - pos) < k:
            return
        if pos == l:
            if nseen == k:
                count_holder[0] += 1
            return
        # canonical form: candidate letters are 1..nseen plus the next new one
        candidates = range(1, nseen + 1) if word_start and pos > 0 else range(1, nseen + 2)
        for s in candidates:
            new_letter = s == nseen + 1
            if pos == 0:
                if not new_letter:
                    continue  # first letter is always 1 in canonical form
                mark = uf.mark()
                uf.add(s)
                seq.append(s)
                rec(pos + 1, nseen + 1, (pos + 1) in boundaries)
                seq.pop()
                uf.rollback(mark)
                continue
            if word_start:
                # no edge is traversed across a word boundary
                seq.append(s)
                rec(pos + 1, nseen, (pos + 1) in boundaries)
                seq.pop()
                continue
            prev = seq[-1]
            if s == prev:
                continue  # self-loops can never sit in a tree
            e = _edge(prev, s)
            c = counts.get(e, 0)
            if c >= 2:
                continue
            mark = uf.mark()
            if new_letter:
                uf.add(s)
            if c == 0:
                # a first traversal must not close a cycle
                if not uf.union(prev, s):
                    uf.rollback(mark)
                    continue
            counts[e] = c + 1
            seq.append(s)
            rec(pos + 1, nseen + (1 if new_letter else 0), (pos + 1) in boundaries)
            seq.pop()
            counts[e] = c
            if c == 0 and counts[e] == 0:
                del counts[e]
            uf.rollback(mark)

    rec(0, 0, True)
    return count_holder[0]
