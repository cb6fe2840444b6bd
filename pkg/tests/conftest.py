import math
import random

import pytest

from textfuse.formats import AnnotationRecord
from textfuse.geometry import QuadBox, canonicalize


def rect(x0: float, y0: float, x1: float, y1: float) -> QuadBox:
    return canonicalize([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def random_convex_quad(rng: random.Random, lo: float = 0.0, hi: float = 1000.0) -> QuadBox:
    """Four points on a random rotated ellipse, in angular order: always convex."""
    span = hi - lo
    cx = rng.uniform(lo + 0.15 * span, hi - 0.15 * span)
    cy = rng.uniform(lo + 0.15 * span, hi - 0.15 * span)
    rx = rng.uniform(0.015 * span, 0.14 * span)
    ry = rng.uniform(0.015 * span, 0.14 * span)
    rot = rng.uniform(0, math.pi)
    while True:
        angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(4))
        gaps = [angles[(i + 1) % 4] - angles[i] for i in range(3)]
        gaps.append(2 * math.pi - angles[3] + angles[0])
        if min(gaps) > 0.35:
            break
    pts = []
    for t in angles:
        x, y = rx * math.cos(t), ry * math.sin(t)
        pts.append(
            (cx + x * math.cos(rot) - y * math.sin(rot),
             cy + x * math.sin(rot) + y * math.cos(rot))
        )
    return canonicalize(pts)


def random_quad_pair(rng: random.Random) -> tuple[QuadBox, QuadBox]:
    """Two random quads with the second re-centered near the first so that
    a useful fraction of pairs overlap."""
    a = random_convex_quad(rng)
    b = random_convex_quad(rng)
    ax = sum(c.x for c in a.corners) / 4
    ay = sum(c.y for c in a.corners) / 4
    bx = sum(c.x for c in b.corners) / 4
    by = sum(c.y for c in b.corners) / 4
    dx = ax - bx + rng.uniform(-120, 120)
    dy = ay - by + rng.uniform(-120, 120)
    shifted = canonicalize([(c.x + dx, c.y + dy) for c in b.corners])
    return a, shifted


WORDS = ["xin", "chào", "việt", "nam", "quán", "cà,phê", "đường", "phố", "ngõ", "chợ"]


def grid_ground_truth(rng: random.Random, n_boxes: int = 10) -> list[AnnotationRecord]:
    """Disjoint word boxes laid out on a loose grid, like a signboard."""
    records = []
    for j in range(n_boxes):
        x = 40 + (j % 5) * 180 + rng.uniform(-8, 8)
        y = 40 + (j // 5) * 120 + rng.uniform(-8, 8)
        w, h = rng.uniform(60, 90), rng.uniform(22, 30)
        records.append(AnnotationRecord(box=rect(x, y, x + w, y + h), text=rng.choice(WORDS)))
    return records


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240817)
