"""Lazily defined infinite rooted trees.

A tree is described by a branching law, never stored.  Vertices are address
words: tuples of child indices read from the root, so ``()`` is the root and
``(0, 2)`` is the third child of the first child of the root.

Every shape here assigns the same number of children to all vertices of a
given level, which is what makes level enumeration a plain Cartesian product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import AddressError, ParseError, RangeError

Vertex = tuple[int, ...]

ROOT: Vertex = ()

# level sizes are reported as native 64-bit counts
MAX_COUNT = 2**63 - 1


class TreeShape:
    """Branching law of an infinite rooted tree without terminal vertices."""

    def branching(self, depth: int) -> int:
        """Number of children of each vertex at ``depth``."""
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.text()


@dataclass(frozen=True)
class Homogeneous(TreeShape):
    """(q+1)-homogeneous tree: the root has q+1 children, every other vertex q."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q < 1:
            raise ValueError(f"homogeneous degree q must be a positive integer, got {self.q!r}")

    def branching(self, depth: int) -> int:
        return self.q + 1 if depth == 0 else self.q

    def text(self) -> str:
        return f"homogeneous:{self.q}"


@dataclass(frozen=True)
class ConstantChildren(TreeShape):
    """Every vertex has exactly k children; k = 1 is the path tree."""

    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"child count k must be a positive integer, got {self.k!r}")

    def branching(self, depth: int) -> int:
        return self.k

    def text(self) -> str:
        return f"constant:{self.k}"


@dataclass(frozen=True)
class PerLevel(TreeShape):
    """Child counts per level; the last entry repeats forever."""

    table: tuple[int, ...]

    def __post_init__(self):
        table = tuple(self.table)
        if not table:
            raise ValueError("per-level table must be non-empty")
        if any(not isinstance(k, int) or k < 1 for k in table):
            raise ValueError(f"per-level child counts must be positive integers, got {table!r}")
        object.__setattr__(self, "table", table)

    def branching(self, depth: int) -> int:
        return self.table[min(depth, len(self.table) - 1)]

    def text(self) -> str:
        return "perlevel:" + ",".join(str(k) for k in self.table)


def parse_shape(text: str) -> TreeShape:
    """Parse ``homogeneous:q``, ``constant:k`` or ``perlevel:a,b,c``."""
    kind, sep, rest = text.strip().partition(":")
    if not sep:
        raise ParseError(f"tree shape {text!r} lacks a ':'", len(text))
    offset = len(kind) + 1
    try:
        numbers = [int(tok) for tok in rest.split(",")]
    except ValueError:
        raise ParseError(f"tree shape {text!r} has a non-integer parameter", offset) from None
    try:
        if kind == "homogeneous" and len(numbers) == 1:
            return Homogeneous(numbers[0])
        if kind == "constant" and len(numbers) == 1:
            return ConstantChildren(numbers[0])
        if kind == "perlevel":
            return PerLevel(tuple(numbers))
    except ValueError as exc:
        raise ParseError(str(exc), offset) from None
    raise ParseError(f"unknown tree shape {text!r}", 0)


def validate(shape: TreeShape, v: Sequence[int]) -> Vertex:
    """Return ``v`` as a tuple, raising AddressError if it is not a vertex of ``shape``."""
    v = tuple(v)
    for depth, index in enumerate(v):
        if not isinstance(index, int) or isinstance(index, bool) or index < 0:
            raise AddressError(f"address {v!r}: index {index!r} at position {depth} is not a non-negative integer")
        if index >= shape.branching(depth):
            raise AddressError(
                f"address {v!r}: index {index} at position {depth} exceeds "
                f"{shape.branching(depth)} children of {shape}"
            )
    return v


def backward_shift(v: Vertex) -> Vertex:
    """Parent of ``v``; the root is fixed."""
    return v[:-1]


def children(shape: TreeShape, v: Vertex) -> list[Vertex]:
    v = validate(shape, v)
    return [v + (i,) for i in range(shape.branching(len(v)))]


def common_prefix_length(v: Vertex, w: Vertex) -> int:
    n = 0
    for a, b in zip(v, w):
        if a != b:
            break
        n += 1
    return n


def distance(shape: TreeShape, v: Vertex, w: Vertex) -> int:
    """Length of the unique path between ``v`` and ``w``."""
    v = validate(shape, v)
    w = validate(shape, w)
    return len(v) + len(w) - 2 * common_prefix_length(v, w)


def level(shape: TreeShape, n: int) -> Iterator[Vertex]:
    """Yield the vertices of length ``n`` in lexicographic order, lazily."""
    if n < 0:
        raise ValueError(f"level must be non-negative, got {n}")
    return itertools.product(*(range(shape.branching(d)) for d in range(n)))


def ball(shape: TreeShape, radius: int) -> Iterator[Vertex]:
    """Vertices with length at most ``radius`` in level order, lexicographic within a level."""
    for n in range(radius + 1):
        yield from level(shape, n)


def level_size(shape: TreeShape, n: int) -> int:
    """Exact number of vertices of length ``n``."""
    if n < 0:
        raise ValueError(f"level must be non-negative, got {n}")
    if isinstance(shape, Homogeneous):
        size = 1 if n == 0 else (shape.q + 1) * shape.q ** (n - 1)
    else:
        size = 1
        for d in range(n):
            size *= shape.branching(d)
    if size > MAX_COUNT:
        raise RangeError(
            f"level {n} of {shape} has {size} vertices, beyond the 64-bit range; "
            f"max safe depth is {max_safe_depth(shape)}",
            max_safe=max_safe_depth(shape),
        )
    return size


def max_safe_depth(shape: TreeShape) -> int:
    """Largest n for which the closed ball of radius n still has a 64-bit vertex count."""
    total, size, n = 1, 1, 0
    while True:
        size *= shape.branching(n)
        if total + size > MAX_COUNT:
            return n
        total += size
        n += 1
        if shape.branching(n) == 1 and n >= _stable_from(shape):
            # a path from here on never overflows in any practical sense
            return MAX_COUNT


def _stable_from(shape: TreeShape) -> int:
    return len(shape.table) if isinstance(shape, PerLevel) else 1


def ball_size(shape: TreeShape, radius: int) -> int:
    """Number of vertices with length at most ``radius``."""
    total = sum(level_size(shape, n) for n in range(radius + 1))
    if total > MAX_COUNT:
        raise RangeError(f"ball of radius {radius} in {shape} is too large", max_safe=max_safe_depth(shape))
    return total


def in_sector(ancestor: Vertex, w: Vertex) -> bool:
    """True iff ``w`` is ``ancestor`` or one of its descendants."""
    return tuple(w[: len(ancestor)]) == tuple(ancestor)


def in_ball(center: Vertex, radius: int, w: Vertex, shape: TreeShape, closed: bool = False) -> bool:
    """Membership in the open ball B(center, radius), or the closed one when ``closed``."""
    d = distance(shape, center, w)
    return d <= radius if closed else d < radius


def has_branching(shape: TreeShape, depth: int) -> bool:
    """True iff some vertex with length below ``depth`` has at least two children."""
    return any(shape.branching(d) >= 2 for d in range(max(depth, 1)))


def level_order_key(v: Vertex) -> tuple[int, Vertex]:
    """Sort key for the canonical level-then-lexicographic order."""
    return (len(v), v)
