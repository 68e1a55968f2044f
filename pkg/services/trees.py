"""
Planar rooted trees with labelled vertices.

A tree is either ``UNIT`` (a bare edge, the unit tree) or a pair
``(label, children)`` where ``children`` is a tuple of trees and the vertex
arity is ``len(children)``. Vertices are read in preorder: root first, then
the children from left to right. Tensor factors of labels are always ordered by
this preorder, and every rearrangement sign is obtained by tagging labels with
their source position and handing the resulting permutation to the sign oracle.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Callable, Hashable, Iterator, List, NamedTuple, Sequence, Tuple

from services.errors import TruncationError
from services.graded import permutation_sign

UNIT: tuple = ()


class Label(NamedTuple):
    """Vertex label: a basis element of the generating sequence."""

    name: Hashable
    degree: int
    arity: int
    weight: int = 1


Tree = tuple


def corolla(label: Label) -> Tree:
    return (label, (UNIT,) * label.arity)


@lru_cache(maxsize=None)
def arity(t: Tree) -> int:
    if t == UNIT:
        return 1
    return sum(arity(c) for c in t[1])


@lru_cache(maxsize=None)
def labels(t: Tree) -> Tuple[Label, ...]:
    """Labels in preorder."""
    if t == UNIT:
        return ()
    out = [t[0]]
    for c in t[1]:
        out.extend(labels(c))
    return tuple(out)


def vertex_count(t: Tree) -> int:
    return len(labels(t))


def degree(t: Tree) -> int:
    return sum(l.degree for l in labels(t))


def weight(t: Tree) -> int:
    return sum(l.weight for l in labels(t))


# tagging: labels become (position, label) so rearrangements can be traced


def tag(t: Tree, start: int = 0) -> Tuple[Tree, int]:
    """Replace each label by (start + preorder index, label); returns the tagged tree and next index."""
    if t == UNIT:
        return UNIT, start
    tagged_root = (start, t[0])
    position = start + 1
    children = []
    for c in t[1]:
        tc, position = tag(c, position)
        children.append(tc)
    return (tagged_root, tuple(children)), position


def untag(t: Tree) -> Tuple[Tree, List[int]]:
    """Strip tags; returns the plain tree and the source positions in preorder."""
    positions: List[int] = []

    def strip(node):
        if node == UNIT:
            return UNIT
        (pos, label), children = node
        positions.append(pos)
        return (label, tuple(strip(c) for c in children))

    return strip(t), positions


def rearrangement_sign(source_degrees: Sequence[int], positions: Sequence[int]) -> int:
    return permutation_sign(source_degrees, positions)


# grafting


def graft(t: Tree, i: int, s: Tree) -> Tree:
    """Plug s into the i-th leaf (1-based) of t. Works on plain or tagged trees."""
    if t == UNIT:
        if i != 1:
            raise IndexError(f"leaf {i} out of range")
        return s
    label, children = t
    new_children = []
    offset = 0
    placed = False
    for c in children:
        a = _arity_any(c)
        if not placed and offset < i <= offset + a:
            new_children.append(graft(c, i - offset, s))
            placed = True
        else:
            new_children.append(c)
        offset += a
    if not placed:
        raise IndexError(f"leaf {i} out of range")
    return (label, tuple(new_children))


def _arity_any(t: Tree) -> int:
    if t == UNIT:
        return 1
    return sum(_arity_any(c) for c in t[1])


def partial_compose(t: Tree, i: int, s: Tree) -> Tuple[Tree, int]:
    """t ∘_i s with its Koszul sign relative to the tensor order (labels of t, labels of s)."""
    tt, nxt = tag(t)
    ts, _ = tag(s, nxt)
    result, positions = untag(graft(tt, i, ts))
    degrees = [l.degree for l in labels(t)] + [l.degree for l in labels(s)]
    return result, rearrangement_sign(degrees, positions)


def assemble(bottom: Tree, tops: Sequence[Tree]) -> Tuple[Tree, int]:
    """Graft tops[j] into the (j+1)-th leaf of bottom, with the sign relative to
    the tensor order (labels of bottom, labels of tops[0], labels of tops[1], ...)."""
    if len(tops) != arity(bottom):
        raise ValueError(f"bottom has arity {arity(bottom)} but {len(tops)} tops were given")
    tagged, position = tag(bottom)
    tagged_tops = []
    for top in tops:
        tt, position = tag(top, position)
        tagged_tops.append(tt)
    result = _graft_all(tagged, tagged_tops)
    plain, positions = untag(result)
    degrees = [l.degree for l in labels(bottom)]
    for top in tops:
        degrees.extend(l.degree for l in labels(top))
    return plain, rearrangement_sign(degrees, positions)


def _graft_all(t: Tree, tops: Sequence[Tree]) -> Tree:
    it = iter(tops)

    def walk(node):
        if node == UNIT:
            return next(it)
        label, children = node
        return (label, tuple(walk(c) for c in children))

    return walk(t)


# decomposition along lower sets


class Cut(NamedTuple):
    bottom: Tree
    tops: Tuple[Tree, ...]
    sign: int


def cuts(t: Tree) -> List[Cut]:
    """All decompositions of t into a lower part and the trees hanging above it.

    Lower parts range over the downward-closed vertex sets, the empty set
    (bottom = unit tree) and the full set (all tops are units) included.
    """
    tagged, _ = tag(t)
    degrees = [l.degree for l in labels(t)]
    out = []
    for bottom, tops in _tagged_cuts(tagged):
        plain_bottom, order = untag(bottom)
        plain_tops = []
        for top in tops:
            plain_top, top_order = untag(top)
            plain_tops.append(plain_top)
            order = order + top_order
        out.append(Cut(plain_bottom, tuple(plain_tops), rearrangement_sign(degrees, order)))
    return out


def _tagged_cuts(t: Tree) -> List[Tuple[Tree, Tuple[Tree, ...]]]:
    if t == UNIT:
        return [(UNIT, (UNIT,))]
    options: List[Tuple[Tree, Tuple[Tree, ...]]] = [(UNIT, (t,))]
    label, children = t
    for choice in product(*(_tagged_cuts(c) for c in children)):
        bottom = (label, tuple(b for b, _ in choice))
        tops: Tuple[Tree, ...] = tuple(top for _, ts in choice for top in ts)
        options.append((bottom, tops))
    return options


# vertex substitution and subtree contraction


def substitute_vertex(t: Tree, k: int, r: Tree) -> Tuple[Tree, int]:
    """Replace the k-th vertex (preorder) of t by the tree r, whose leaves receive the vertex's children.

    The sign is relative to the tensor order (labels before k, labels of r, labels after k).
    """
    tagged, n = tag(t)
    tagged_r, _ = tag(r, n)

    def walk(node):
        if node == UNIT:
            return UNIT
        (pos, label), children = node
        children = tuple(walk(c) for c in children)
        if pos == k:
            return _graft_all(tagged_r, children)
        return ((pos, label), children)

    plain, positions = untag(walk(tagged))
    t_labels, r_labels = labels(t), labels(r)
    concat = t_labels[:k] + r_labels + t_labels[k + 1:]

    def concat_index(pos: int) -> int:
        if pos >= n:
            return k + pos - n
        return pos if pos < k else pos - 1 + len(r_labels)

    return plain, rearrangement_sign([l.degree for l in concat], [concat_index(p) for p in positions])


class Contraction(NamedTuple):
    path: Tuple[int, ...]
    subtree: Tree
    tops: Tuple[Tree, ...]
    sign: int
    degree_before: int


def contractions(t: Tree) -> Iterator[Contraction]:
    """Every nonempty connected subtree s of t, with the trees hanging above it.

    ``sign`` moves the labels of s into one block placed at the root of s;
    ``degree_before`` is the total degree of the labels preceding that block.
    """
    tagged, count = tag(t)
    degrees = [l.degree for l in labels(t)]
    for path in _vertex_paths(tagged):
        node = _at_path(tagged, path)
        root_pos = node[0][0]
        for bottom, tops in _tagged_cuts(node):
            if bottom == UNIT:
                continue
            subtree, inside = untag(bottom)
            plain_tops = tuple(untag(top)[0] for top in tops)
            inside_set = set(inside)
            rest = [p for p in range(root_pos, count) if p not in inside_set]
            order = list(range(root_pos)) + inside + rest
            yield Contraction(
                path,
                subtree,
                plain_tops,
                rearrangement_sign(degrees, order),
                sum(degrees[:root_pos]),
            )


def _vertex_paths(t: Tree, prefix: Tuple[int, ...] = ()) -> Iterator[Tuple[int, ...]]:
    if t == UNIT:
        return
    yield prefix
    for k, c in enumerate(t[1]):
        yield from _vertex_paths(c, prefix + (k,))


def _at_path(t: Tree, path: Sequence[int]) -> Tree:
    for k in path:
        t = t[1][k]
    return t


def replace_at_path(t: Tree, path: Sequence[int], new: Tree) -> Tree:
    if not path:
        return new
    label, children = t
    k = path[0]
    return (label, children[:k] + (replace_at_path(children[k], path[1:], new),) + children[k + 1:])


def vertex_paths(t: Tree) -> List[Tuple[int, ...]]:
    """Paths to the vertices of t, in preorder."""
    return list(_vertex_paths(t))


def subtree_at(t: Tree, path: Sequence[int]) -> Tree:
    return _at_path(t, path)


# enumeration


def enumerate_trees(
    generators: Sequence[Label], max_weight: int, max_arity: int, include_unit: bool = True
) -> List[Tree]:
    """Planar trees on the generators with total weight ≤ max_weight and arity ≤ max_arity.

    Output is sorted by arity, then weight, then generation order.
    """
    for g in generators:
        if g.weight <= 0:
            raise TruncationError(f"generator {g.name!r} has non-positive weight; enumeration would not terminate")
        if g.arity == 0:
            raise TruncationError(f"generator {g.name!r} has arity 0, which is not supported")
    generators = tuple(generators)

    @lru_cache(maxsize=None)
    def trees_within(budget: int) -> Tuple[Tuple[Tree, int, int], ...]:
        found = []
        for g in generators:
            if g.weight > budget or g.arity > max_arity:
                continue
            for children, w, a in slot_sequences(g.arity, budget - g.weight, max_arity):
                found.append(((g, children), w + g.weight, a))
        return tuple(found)

    @lru_cache(maxsize=None)
    def slot_sequences(k: int, budget: int, arity_budget: int) -> Tuple[Tuple[Tuple[Tree, ...], int, int], ...]:
        if k == 0:
            return (((), 0, 0),)
        out = []
        options = [(UNIT, 0, 1)] + list(trees_within(budget))
        for first, w, a in options:
            if a > arity_budget - (k - 1):
                continue
            for rest, w2, a2 in slot_sequences(k - 1, budget - w, arity_budget - a):
                out.append(((first,) + rest, w + w2, a + a2))
        return tuple(out)

    result = [(tree, w, a) for tree, w, a in trees_within(max_weight) if a <= max_arity]
    if include_unit and max_arity >= 1:
        result.append((UNIT, 0, 1))
    order = {id(entry): k for k, entry in enumerate(result)}
    result.sort(key=lambda e: (e[2], e[1], order[id(e)]))
    return [tree for tree, _, _ in result]


def render(t: Tree, show: Callable[[Label], str] = lambda l: str(l.name)) -> str:
    """Compact bracket notation, e.g. ``m2(|, m2(|, |))``."""
    if t == UNIT:
        return "|"
    label, children = t
    if not children:
        return show(label)
    return f"{show(label)}({', '.join(render(c, show) for c in children)})"
