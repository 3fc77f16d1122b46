import itertools

import numpy as np
import pytest

from corrspec import words as W
from corrspec.budget import BudgetError, ConfigError


def w(text):
    return W.parse_word(text)


# Word graphs ----------------------------------------------------------------------


def test_graph_of_single_letter():
    g = W.graph_of(w("1"))
    assert g.vertices == frozenset({1})
    assert g.edges == frozenset()


def test_graph_of_back_and_forth():
    g = W.graph_of(w("121"))
    assert g.vertices == frozenset({1, 2})
    assert g.passage_counts == {(1, 2): 2}


def test_graph_of_worked_walk_passage_counts():
    g = W.graph_of(w("12134321451"))
    assert g.passage_counts == {
        (1, 2): 3,
        (1, 3): 1,
        (3, 4): 2,
        (2, 3): 1,
        (1, 4): 1,
        (4, 5): 1,
        (1, 5): 1,
    }


# Edge classes ---------------------------------------------------------------------


def test_classify_worked_walk():
    rep = W.classify_sentence_edges(w("12134321451"))
    assert rep.e2 == frozenset({(3, 4)})
    assert rep.e3 == frozenset({(1, 2)})
    assert rep.e1 == frozenset({(1, 3), (2, 3), (1, 4), (4, 5), (1, 5)})
    assert rep.closed_word_checks["k"] == 5
    assert rep.closed_word_checks["t"] == 5
    assert rep.closed_word_checks["passage_bound_holds"]
    assert rep.closed_word_checks["weight_bound_holds"]
    assert rep.closed_word_checks["excess_bound_holds"]


def test_classify_wigner_word():
    rep = W.classify_sentence_edges(w("12321"))
    assert rep.e1 == frozenset()
    assert rep.e2 == frozenset({(1, 2), (2, 3)})
    assert rep.e3 == frozenset()


def test_classify_single_letter():
    rep = W.classify_sentence_edges(w("1"))
    assert rep.e1 == rep.e2 == rep.e3 == frozenset()


def test_closed_word_inequalities_exhaustive():
    # every closed word of interior length 2k <= 8 over <= 4 letters;
    # the weight bound needs the +1 (any tree-graphed walk, e.g. 121,
    # has t = #edges + 1), so the strict form t <= #edges is not universal
    saw_tree_equality = False
    for length in (3, 5, 7, 9):
        for inner in itertools.product(range(1, 5), repeat=length - 2):
            word = (1,) + inner + (1,)
            rep = W.classify_sentence_edges(word)
            checks = rep.closed_word_checks
            assert checks["passage_bound_holds"], word
            assert checks["weight_bound_holds"], word
            assert checks["excess_bound_holds"], word
            edges = len(rep.e1) + len(rep.e2) + len(rep.e3)
            if checks["t"] == edges + 1:
                saw_tree_equality = True
    assert saw_tree_equality


# Syllabification ------------------------------------------------------------------


def test_syllabify_updown_walk_stays_whole():
    s = W.fk_syllabify(w("12321"))
    assert s.words == (w("12321"),)


def test_syllabify_repeated_edge():
    s = W.fk_syllabify(w("121212"))
    assert s.words == (w("121"), w("2"), w("1"), w("2"))
    # each later word starts inside the prior support
    ok, reason = W.validate_fk_sentence(s.words)
    assert ok, reason


def test_syllabify_worked_walk():
    # old edges {2,3}, {1,4}, {1,5} break at their only traversals; the
    # third traversal of {1,2} breaks as well
    s = W.fk_syllabify(w("12134321451"))
    assert s.words == (w("121343"), w("2"), w("1"), w("45"), w("1"))
    assert s.m == 5
    assert s.wt == 5
    assert s.total_length == 11
    assert s.e1 == frozenset({(1, 3), (4, 5)})
    assert W.word_count_identity_holds(s)  # 2 - 10 + 2 + 11 = 5


def test_syllabify_self_loop_breaks():
    s = W.fk_syllabify(w("112"))
    assert s.words == (w("1"), w("12"))
    assert W.is_fk_sentence(s.words)


def _all_words(max_letters, length):
    for tup in itertools.product(range(1, max_letters + 1), repeat=length):
        yield tup


@pytest.mark.parametrize("length", range(1, 8))
def test_syllabify_invariants_exhaustive_small(length):
    # alphabet <= 4, lengths <= 7 here; the acceptance suite pushes to 9
    for word in _all_words(4, length):
        s = W.fk_syllabify(word)
        ok, reason = W.validate_fk_sentence(s.words)
        assert ok, (word, reason)
        assert W.word_count_identity_holds(s), word
        assert tuple(x for piece in s.words for x in piece) == word


def test_syllabify_preserves_equivalence():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        length = int(rng.integers(1, 12))
        word = tuple(int(x) for x in rng.integers(1, 6, size=length))
        letters = sorted(set(word))
        perm = rng.permutation(100)[: len(letters)] + 1
        mapping = {s: int(p) for s, p in zip(letters, perm)}
        relabeled = W.relabel(word, mapping)
        parsed_then_relabeled = tuple(W.relabel(piece, mapping)
                                      for piece in W.fk_syllabify(word).words)
        relabeled_then_parsed = W.fk_syllabify(relabeled).words
        assert parsed_then_relabeled == relabeled_then_parsed


# Wigner words and decomposition ---------------------------------------------------


def test_wigner_word_checks():
    assert W.is_wigner_word(w("1"))
    assert W.is_wigner_word(w("12321"))
    assert W.is_wigner_word(w("12131"))
    assert not W.is_wigner_word(w("12"))      # open
    assert not W.is_wigner_word(w("1231"))    # cycle
    assert not W.is_wigner_word(w("1212121"))  # edge traversed 6 times


def test_decompose_wigner_word_is_itself():
    assert W.fk_word_decompose(w("12321")) == [w("12321")]
    assert W.acronym(w("12321")) == (1,)


def test_decompose_open_word_into_singletons():
    assert W.fk_word_decompose(w("12")) == [w("1"), w("2")]
    assert W.acronym(w("12")) == (1, 2)


def test_decompose_mixed():
    assert W.fk_word_decompose(w("1213")) == [w("121"), w("3")]


def test_decompose_rejects_non_fk_words():
    with pytest.raises(ConfigError):
        W.fk_word_decompose(w("12121"))  # an edge traversed thrice
    with pytest.raises(ConfigError):
        W.fk_word_decompose(w("1231"))   # cycle


def test_decompose_pieces_are_disjoint_wigner_words():
    for word in _all_words(4, 7):
        if not W.is_fk_sentence([word]):
            continue
        pieces = W.fk_word_decompose(word)
        assert tuple(x for p in pieces for x in p) == word
        supports = [set(p) for p in pieces]
        for a in range(len(supports)):
            for b in range(a + 1, len(supports)):
                assert not (supports[a] & supports[b]), word
        assert all(W.is_wigner_word(p) for p in pieces)


# Class enumeration ----------------------------------------------------------------


def _oracle_count(k, l, m):
    """Independent brute force: all canonical letter sequences split at all
    composition boundaries, filtered by FK validity and weight."""
    count = 0
    for comp in _compositions(l, m):
        for seq in itertools.product(range(1, l + 1), repeat=l):
            if W.canonical_word(seq) != seq:
                continue
            if len(set(seq)) != k:
                continue
            words = []
            pos = 0
            for c in comp:
                words.append(seq[pos: pos + c])
                pos += c
            if W.is_fk_sentence(words):
                count += 1
    return count


def _compositions(l, m):
    if m == 1:
        yield (l,)
        return
    for first in range(1, l - m + 2):
        for rest in _compositions(l - first, m - 1):
            yield (first,) + rest


def test_enumerate_trivial_cells():
    assert W.enumerate_fk_classes(1, 1, 1) == 1
    assert W.enumerate_fk_classes(2, 2, 1) == 1
    assert W.enumerate_fk_classes(3, 2, 5) == 0  # m > l
    assert W.enumerate_fk_classes(5, 4, 1) == 0  # k > l


@pytest.mark.parametrize("l", range(1, 7))
def test_enumerate_matches_bruteforce_oracle(l):
    for m in range(1, l + 1):
        for k in range(1, l + 1):
            got = W.enumerate_fk_classes(k, l, m)
            want = _oracle_count(k, l, m)
            assert got == want, (k, l, m, got, want)


def test_enumerate_respects_class_bound():
    for l in range(1, 9):
        for m in range(1, l + 1):
            for k in range(1, l + 1):
                count = W.enumerate_fk_classes(k, l, m)
                assert count <= W.fk_class_bound(k, l, m), (k, l, m)


def test_enumerate_budget_guard():
    with pytest.raises(BudgetError):
        W.enumerate_fk_classes(4, 13, 2)


def test_parse_word_forms():
    assert W.parse_word("1,2,13") == (1, 2, 13)
    assert W.format_word((1, 2, 13)) == "1,2,13"
    assert W.format_word((1, 2, 3)) == "123"
    with pytest.raises(ConfigError):
        W.parse_word("")
