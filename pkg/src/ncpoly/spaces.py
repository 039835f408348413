"""Finite measurable spaces with the power-set sigma-algebra.

Events are canonical sorted tuples of atom indices. A :class:`ProductSpace`
orders its atoms lexicographically by ``(left index, right index)``, which
matches the block order of :func:`ncpoly.linalg.kron`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "FiniteSpace",
    "ProductSpace",
    "Event",
    "product",
    "preimage",
    "all_events",
    "event_family",
    "MAX_EXHAUSTIVE_ATOMS",
]

MAX_EXHAUSTIVE_ATOMS = 12
PAIR_SEP = "|"


@dataclass(frozen=True)
class FiniteSpace:
    """An ordered, labeled finite set of atoms."""

    atoms: tuple[str, ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __init__(self, atoms: Iterable[str]):
        atoms = tuple(str(a) for a in atoms)
        if not atoms:
            raise DomainError("a finite space needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise DomainError(f"atom labels must be unique: {atoms}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(atoms)})

    def __len__(self) -> int:
        return len(self.atoms)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DomainError(f"unknown atom {label!r}") from None

    def event(self, labels: Iterable[str] = ()) -> "Event":
        return Event(self, [self.index(lbl) for lbl in labels])

    def atom(self, i: int) -> "Event":
        return Event(self, [i])

    @property
    def empty(self) -> "Event":
        return Event(self, ())

    @property
    def full(self) -> "Event":
        return Event(self, range(len(self)))

    def to_json(self) -> dict:
        return {"atoms": list(self.atoms)}


class ProductSpace(FiniteSpace):
    """``left x right`` with atoms labeled ``"a|b"`` in lexicographic order."""

    def __init__(self, left: FiniteSpace, right: FiniteSpace):
        self.__dict__["left"] = left
        self.__dict__["right"] = right
        super().__init__(f"{a}{PAIR_SEP}{b}" for a in left.atoms for b in right.atoms)

    left: FiniteSpace
    right: FiniteSpace

    def __eq__(self, other):
        return (
            isinstance(other, ProductSpace)
            and self.left == other.left
            and self.right == other.right
        )

    def __hash__(self):
        return hash((self.left, self.right))

    def __repr__(self):
        return f"ProductSpace({self.left!r}, {self.right!r})"

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.left), len(self.right)

    def pair(self, i: int) -> tuple[int, int]:
        """Coordinate indices of product atom ``i``."""
        return divmod(i, len(self.right))

    def pair_index(self, a: int, b: int) -> int:
        return a * len(self.right) + b

    def rectangle(self, A: "Event", B: "Event") -> "Event":
        """The product event ``A x B``."""
        if A.space != self.left or B.space != self.right:
            raise DomainError("rectangle sides do not belong to the factor spaces")
        return Event(self, [self.pair_index(a, b) for a in A.members for b in B.members])

    def swapped(self) -> "ProductSpace":
        return ProductSpace(self.right, self.left)

    def to_json(self) -> dict:
        return {"left": self.left.to_json(), "right": self.right.to_json()}


@dataclass(frozen=True)
class Event:
    """A subset of a finite space, stored as sorted distinct atom indices."""

    space: FiniteSpace
    members: tuple[int, ...]

    def __init__(self, space: FiniteSpace, members: Iterable[int] = ()):
        idx = tuple(sorted(set(int(i) for i in members)))
        n = len(space)
        if idx and (idx[0] < 0 or idx[-1] >= n):
            raise DomainError(f"atom index out of range for a space of {n} atoms: {idx}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "members", idx)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __contains__(self, i) -> bool:
        return i in self.members

    @property
    def labels(self) -> list[str]:
        return [self.space.atoms[i] for i in self.members]

    def _check(self, other: "Event"):
        if not isinstance(other, Event) or other.space != self.space:
            raise DomainError("events belong to different spaces")

    def union(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, set(self.members) | set(other.members))

    def intersection(self, other: "Event") -> "Event":
        self._check(other)
        return Event(self.space, set(self.members) & set(other.members))

    def complement(self) -> "Event":
        return Event(self.space, set(range(len(self.space))) - set(self.members))

    def issubset(self, other: "Event") -> bool:
        self._check(other)
        return set(self.members) <= set(other.members)

    __or__ = union
    __and__ = intersection
    __invert__ = complement

    def indicator(self) -> np.ndarray:
        v = np.zeros(len(self.space))
        v[list(self.members)] = 1.0
        return v

    def to_json(self) -> dict:
        return {"space": self.space.to_json(), "members": self.labels}

    def __repr__(self):
        return f"Event({{{', '.join(self.labels)}}})"


def product(left: FiniteSpace, right: FiniteSpace) -> ProductSpace:
    return ProductSpace(left, right)


def preimage(P: ProductSpace, coordinate: int, A: Event) -> Event:
    """Coordinate pullback: ``A x X2`` for coordinate 1, ``X1 x A`` for coordinate 2."""
    if not isinstance(P, ProductSpace):
        raise DomainError("preimage needs a product space")
    if coordinate == 1:
        if A.space != P.left:
            raise DomainError("event is not on the left factor")
        return P.rectangle(A, P.right.full)
    if coordinate == 2:
        if A.space != P.right:
            raise DomainError("event is not on the right factor")
        return P.rectangle(P.left.full, A)
    raise DomainError(f"coordinate must be 1 or 2, got {coordinate!r}")


def all_events(space: FiniteSpace, cap: int = MAX_EXHAUSTIVE_ATOMS) -> list[Event]:
    """Every event in bitmask order (empty set first, full space last)."""
    n = len(space)
    if n > cap:
        raise DomainError(f"refusing a 2^{n} event sweep (cap is {cap} atoms)")
    return [Event(space, [i for i in range(n) if mask >> i & 1]) for mask in range(1 << n)]


def event_family(
    space: FiniteSpace,
    exhaustive_atoms: int,
    n_random: int = 20,
    rng: np.random.Generator | None = None,
    extra: Sequence[Event] = (),
) -> list[Event]:
    """All events when ``len(space) <= exhaustive_atoms``, else atoms plus samples.

    The sampled branch returns the singletons, ``extra``, then ``n_random``
    seeded random events, with duplicates removed in order.
    """
    if len(space) <= exhaustive_atoms:
        return all_events(space)
    rng = np.random.default_rng(0) if rng is None else rng
    events = [space.atom(i) for i in range(len(space))] + list(extra)
    for _ in range(n_random):
        mask = rng.random(len(space)) < 0.5
        events.append(Event(space, np.flatnonzero(mask)))
    seen, out = set(), []
    for ev in events:
        if ev.space != space:
            raise DomainError("supplied event is outside the space")
        if ev.members not in seen:
            seen.add(ev.members)
            out.append(ev)
    return out
