from __future__ import annotations

import pytest

from geoscene.model import (
    GEOMETRIC_EXTENSION,
    BoundingBox,
    ObjectInstance,
    SceneGraph,
    extend_vocabulary,
)
from geoscene.vg_io import default_vocabulary


@pytest.fixture(scope="session")
def vocab():
    return default_vocabulary()


@pytest.fixture(scope="session")
def ext_vocab(vocab):
    return extend_vocabulary(vocab, GEOMETRIC_EXTENSION)


def make_scene(boxes, triplets=(), labels=None, image_id="img", canvas=(1000, 1000),
               scores=None):
    """Build a scene from raw (x_min, y_min, x_max, y_max) tuples."""
    labels = labels or [f"obj{i}" for i in range(len(boxes))]
    scores = scores or [1.0] * len(boxes)
    objects = tuple(
        ObjectInstance(id=i, label=labels[i], box=BoundingBox(*boxes[i]), score=scores[i])
        for i in range(len(boxes))
    )
    return SceneGraph(image_id, canvas[0], canvas[1], objects, tuple(triplets))
