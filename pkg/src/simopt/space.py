"""Discrete Cartesian-product search spaces and their neighborhood structures.

A solution is a tuple of per-axis level indices (0-based). Axis levels are
opaque to the solvers: only the index positions and their order matter, so
categorical and discretized-numeric axes mix freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .errors import EmptyNeighborhoodError, InvalidSolutionError

Level = int | float | str
Solution = tuple[int, ...]


@dataclass(frozen=True)
class Axis:
    """One hyperparameter: a name and its ordered, finite set of levels.

    Order is meaningful; adjacency in the coordinate neighborhood is
    positional. Arity-1 axes are allowed and simply pin a coordinate.
    """

    name: str
    levels: tuple[Level, ...]

    def __post_init__(self):
        if not self.levels:
            raise ValueError(f"axis {self.name!r} has no levels")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"axis {self.name!r} has duplicate levels")

    @property
    def arity(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class SearchSpace:
    """Cartesian product of ordered finite axes."""

    axes: tuple[Axis, ...]
    _radix: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.axes:
            raise ValueError("search space needs at least one axis")
        # Mixed-radix place values, axis 0 most significant.
        place = 1
        radix = [1] * len(self.axes)
        for d in range(len(self.axes) - 1, -1, -1):
            radix[d] = place
            place *= self.axes[d].arity
        object.__setattr__(self, "_radix", tuple(radix))

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def cardinality(self) -> int:
        n = 1
        for axis in self.axes:
            n *= axis.arity
        return n

    def validate(self, x: Solution) -> None:
        if len(x) != self.dimension:
            raise InvalidSolutionError(
                f"solution has {len(x)} coordinates, space has {self.dimension} axes"
            )
        for d, (idx, axis) in enumerate(zip(x, self.axes)):
            if not 0 <= idx < axis.arity:
                raise InvalidSolutionError(
                    f"axis {d} ({axis.name!r}): index {idx} outside [0, {axis.arity})"
                )

    def assignment(self, x: Solution) -> dict[str, Level]:
        """Map a solution to {axis name: level value}."""
        self.validate(x)
        return {axis.name: axis.levels[idx] for axis, idx in zip(self.axes, x)}


def flat_index(space: SearchSpace, x: Solution) -> int:
    """Mixed-radix encoding of a solution, axis 0 most significant."""
    space.validate(x)
    return sum(idx * place for idx, place in zip(x, space._radix))


def solution_at(space: SearchSpace, i: int) -> Solution:
    """Inverse of flat_index."""
    if not 0 <= i < space.cardinality:
        raise IndexError(f"flat index {i} outside [0, {space.cardinality})")
    out = []
    for axis in reversed(space.axes):
        i, r = divmod(i, axis.arity)
        out.append(r)
    return tuple(reversed(out))


def iter_solutions(space: SearchSpace) -> Iterator[Solution]:
    """All solutions in flat-index order."""
    for i in range(space.cardinality):
        yield solution_at(space, i)


def neighborhood_n1(space: SearchSpace, x: Solution) -> set[Solution]:
    """Everything-else neighborhood: the full space minus the solution itself."""
    space.validate(x)
    if space.cardinality < 2:
        raise EmptyNeighborhoodError("single-point space has no N1 neighbors")
    return {y for y in iter_solutions(space) if y != x}


def _axis_adjacent(idx: int, arity: int) -> tuple[int, ...]:
    """Indices {idx-1, idx, idx+1} with wraparound at both ends, deduplicated.

    At a boundary the step wraps to the other end of the ordered level set,
    so an arity-2 axis collapses to two distinct values and an arity-1 axis
    to one.
    """
    return tuple(dict.fromkeys(((idx - 1) % arity, idx, (idx + 1) % arity)))


def neighborhood_n2(space: SearchSpace, x: Solution) -> set[Solution]:
    """Coordinate-adjacent neighborhood with wraparound.

    Cartesian product of the per-axis adjacent index sets, minus the
    solution itself. Returned as a set, so neighbors that coincide after
    wraparound on tiny axes count once (candidate sampling stays uniform
    over distinct members).
    """
    space.validate(x)
    per_axis = [_axis_adjacent(idx, axis.arity) for idx, axis in zip(x, space.axes)]
    result: set[Solution] = set()
    stack: list[tuple[int, ...]] = [()]
    for options in per_axis:
        stack = [prefix + (o,) for prefix in stack for o in options]
    result.update(stack)
    result.discard(x)
    return result


def neighborhood(space: SearchSpace, x: Solution, kind: str) -> set[Solution]:
    if kind == "n1":
        return neighborhood_n1(space, x)
    if kind == "n2":
        return neighborhood_n2(space, x)
    raise ValueError(f"unknown neighborhood kind {kind!r}")


def space_from_axes(axes: Sequence[tuple[str, Sequence[Level]]]) -> SearchSpace:
    """Convenience constructor from (name, levels) pairs."""
    return SearchSpace(tuple(Axis(name, tuple(levels)) for name, levels in axes))
