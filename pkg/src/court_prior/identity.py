"""Sub-class assignment from court position: players inside, officials on the perimeter."""
from __future__ import annotations

from enum import Enum

from .cocodata import Annotation, Dataset
from .court import CourtRegion
from .geometry import contains


class Identity(str, Enum):
    PLAYER = "player"
    PERIMETER = "perimeter"
    BALL = "ball"


def is_ball(category_name: str) -> bool:
    return "ball" in category_name.lower()


def anchor_point(bbox) -> tuple[float, float]:
    """Bottom-centre of a COCO bbox, used as the ground-contact point."""
    x, y, w, h = bbox
    return x + w / 2, y + h


def classify_point(p, region: CourtRegion) -> Identity:
    return Identity.PLAYER if contains(region.interior, p) else Identity.PERIMETER


def classify(ann: Annotation, region: CourtRegion, categories: dict[int, str]) -> Identity:
    if is_ball(categories[ann.category_id]):
        return Identity.BALL
    return classify_point(anchor_point(ann.bbox), region)


def classify_dataset(ds: Dataset, regions: dict) -> dict[int, Identity]:
    names = ds.category_names()
    out = {}
    for a in ds.annotations:
        out[a.id] = classify(a, regions[a.image_id], names)
    return out
