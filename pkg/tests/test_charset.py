from hypothesis import given, strategies as st

from strsolver.charset import Alphabet, CharSet, partition_charsets

chars = st.characters(min_codepoint=32, max_codepoint=126)
char_sets = st.frozensets(chars, max_size=12).map(lambda s: CharSet.of("".join(s)))


def members(cs: CharSet) -> frozenset:
    return frozenset(cs)


@given(char_sets, char_sets)
def test_union_intersect_difference(a, b):
    assert members(a.union(b)) == members(a) | members(b)
    assert members(a.intersect(b)) == members(a) & members(b)
    assert members(a.difference(b)) == members(a) - members(b)


@given(char_sets)
def test_complement_involution(a):
    u = Alphabet.printable_ascii().charset
    c = a.complement_in(u)
    assert members(c) == members(u) - members(a)
    assert members(c.complement_in(u)) == members(a) & members(u)


def test_ranges_normalized():
    cs = CharSet.of("ace").union(CharSet.of("bd"))
    assert cs.intervals == ((ord("a"), ord("e")),)
    assert len(cs) == 5
    assert cs.min_char() == "a"


@given(st.lists(char_sets, max_size=5))
def test_partition_is_disjoint_cover(sets):
    blocks = partition_charsets(sets)
    covered = frozenset()
    for b in blocks:
        assert not members(b) & covered
        covered |= members(b)
    assert covered == frozenset().union(*(members(s) for s in sets)) if sets else not covered
    # every block lies inside or outside each input set entirely
    for b in blocks:
        for s in sets:
            inter = members(b) & members(s)
            assert inter in (frozenset(), members(b))


def test_klass_shortcuts():
    al = Alphabet.printable_ascii()
    assert "5" in al.klass("digit")
    assert "_" in al.klass("word")
    assert " " in al.klass("space")
    assert "x" not in al.klass("digit")
