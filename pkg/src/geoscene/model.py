"""Core domain types: boxes, objects, triplets, scene graphs, predicate vocabulary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import CategoryConflict, DegenerateBox, UnknownPredicate


class RelationCategory(Enum):
    GEOMETRIC = "geometric"
    POSSESSIVE = "possessive"
    SEMANTIC = "semantic"
    MISC = "misc"


class TripletSource(Enum):
    MODEL = "model"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle in corner (xyxy) form."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise DegenerateBox(f"non-finite box coordinates {coords}")
        if any(c < 0 for c in coords):
            raise DegenerateBox(f"negative box coordinates {coords}")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise DegenerateBox(
                f"box must have positive width and height, got {coords}"
            )

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> "BoundingBox":
        """Build from the (x, y, w, h) annotation form used by dump files."""
        if w <= 0 or h <= 0:
            raise DegenerateBox(f"degenerate box: w={w}, h={h}")
        return cls(x, y, x + w, y + h)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_xywh(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.width, self.height)

    def translate(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def scale(self, s: float) -> "BoundingBox":
        """Scale about the image origin by a positive factor."""
        return BoundingBox(self.x_min * s, self.y_min * s, self.x_max * s, self.y_max * s)


@dataclass(frozen=True)
class Point:
    """Image-coordinate point; y increases downward."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class ObjectInstance:
    """A detected object: class label, box, and detection confidence."""

    id: int
    label: str
    box: BoundingBox
    score: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"object score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class Triplet:
    """A scored subject-predicate-object relation between two scene objects."""

    subject_id: int
    predicate: int
    object_id: int
    score: float = 1.0
    source: TripletSource = TripletSource.MODEL

    def __post_init__(self) -> None:
        if self.subject_id == self.object_id:
            raise ValueError(f"triplet relates object {self.subject_id} to itself")
        if self.predicate < 0:
            raise ValueError(f"negative predicate index {self.predicate}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"triplet score {self.score} outside [0, 1]")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.subject_id, self.object_id)

    @property
    def key(self) -> tuple[int, int, int]:
        """Identity used for duplicate detection: (subject, predicate, object)."""
        return (self.subject_id, self.predicate, self.object_id)


@dataclass(frozen=True)
class SceneGraph:
    """Objects plus relation triplets for one image."""

    image_id: str
    width: int
    height: int
    objects: tuple[ObjectInstance, ...] = ()
    triplets: tuple[Triplet, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "triplets", tuple(self.triplets))
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"non-positive canvas {self.width}x{self.height}")
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate object ids in scene {self.image_id!r}")
        known = set(ids)
        for t in self.triplets:
            if t.subject_id not in known or t.object_id not in known:
                raise ValueError(
                    f"triplet {t.key} in scene {self.image_id!r} references an unknown object"
                )

    def object_by_id(self, object_id: int) -> ObjectInstance:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def objects_by_id(self) -> dict[int, ObjectInstance]:
        return {o.id: o for o in self.objects}

    def with_triplets(self, triplets: Iterable[Triplet]) -> "SceneGraph":
        return replace(self, triplets=tuple(triplets))


@dataclass(frozen=True)
class PredicateVocabulary:
    """Ordered predicate entries plus an alias map onto canonical names.

    Index = position in ``entries``; indices never move when the vocabulary
    is extended, so serialized triplets stay valid across extensions.
    """

    entries: tuple[tuple[str, RelationCategory], ...]
    alias_map: Mapping[str, str] = field(default_factory=dict)
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        entries = tuple((name, category) for name, category in self.entries)
        object.__setattr__(self, "entries", entries)
        names = [name for name, _ in entries]
        if len(names) != len(set(names)):
            raise ValueError("duplicate predicate names in vocabulary")
        index = {name: i for i, name in enumerate(names)}
        for alias, target in self.alias_map.items():
            if alias in index:
                raise ValueError(f"alias {alias!r} shadows a vocabulary entry")
            if target not in index:
                raise ValueError(f"alias {alias!r} points at unknown entry {target!r}")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.entries)

    def resolve(self, name: str) -> str:
        """Map a predicate name (or alias) to its canonical entry name."""
        if name in self._index:
            return name
        canonical = self.alias_map.get(name)
        if canonical is None:
            raise UnknownPredicate(f"unknown predicate {name!r}")
        return canonical

    def contains(self, name: str) -> bool:
        return name in self._index or name in self.alias_map

    def index_of(self, name: str) -> int:
        return self._index[self.resolve(name)]

    def name_of(self, index: int) -> str:
        return self.entries[index][0]

    def category_of(self, index: int) -> RelationCategory:
        return self.entries[index][1]

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)


# The six bucket predicates the refinement stage emits. "top" and "down"
# resolve through the default alias map onto the existing "above"/"under".
GEOMETRIC_EXTENSION: tuple[tuple[str, RelationCategory], ...] = (
    ("near", RelationCategory.GEOMETRIC),
    ("far", RelationCategory.GEOMETRIC),
    ("above", RelationCategory.GEOMETRIC),
    ("under", RelationCategory.GEOMETRIC),
    ("left", RelationCategory.GEOMETRIC),
    ("right", RelationCategory.GEOMETRIC),
)


def categorize_predicate(name: str, vocab: PredicateVocabulary) -> RelationCategory:
    """Return the relation-type category of a predicate (after alias resolution)."""
    return vocab.category_of(vocab.index_of(name))


def extend_vocabulary(
    vocab: PredicateVocabulary,
    additions: Iterable[tuple[str, RelationCategory]],
) -> PredicateVocabulary:
    """Append new predicates, preserving all existing indices.

    Entries already present (directly or through an alias) are skipped;
    a skipped entry whose requested category disagrees with the existing
    one raises CategoryConflict.
    """
    entries = list(vocab.entries)
    for name, category in additions:
        if vocab.contains(name):
            existing = vocab.category_of(vocab.index_of(name))
            if existing is not category:
                raise CategoryConflict(
                    f"{name!r} already categorized as {existing.value}, "
                    f"refusing {category.value}"
                )
            continue
        if any(name == n for n, _ in entries):
            continue
        entries.append((name, category))
    return PredicateVocabulary(tuple(entries), dict(vocab.alias_map))


def vocabulary_from_json(data: Sequence[Mapping]) -> PredicateVocabulary:
    """Build a vocabulary from the file schema: [{name, category, aliases[]}]."""
    entries = []
    aliases: dict[str, str] = {}
    for record in data:
        name = record["name"]
        entries.append((name, RelationCategory(record["category"])))
        for alias in record.get("aliases", ()):
            aliases[alias] = name
    return PredicateVocabulary(tuple(entries), aliases)


def vocabulary_to_json(vocab: PredicateVocabulary) -> list[dict]:
    by_target: dict[str, list[str]] = {}
    for alias, target in vocab.alias_map.items():
        by_target.setdefault(target, []).append(alias)
    return [
        {"name": name, "category": category.value, "aliases": sorted(by_target.get(name, []))}
        for name, category in vocab.entries
    ]
