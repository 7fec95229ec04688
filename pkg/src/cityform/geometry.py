"""Link bearings, intersection angles, and 3-way/4-way pattern codes.

Angles at a node come from its *outgoing* links only. Each link's initial
direction is taken toward its first shape point when one exists, so curved
streets contribute their true departure direction rather than the chord to
the far node. In geographic mode, neighbor points are first projected onto
a local tangent plane at the vertex (x scaled by cos(latitude)), which
keeps angle error sub-meter at street scale without a projection library.

Classification buckets each angle as acute / right / obtuse / straight /
reflex within a tolerance band ``tau`` (degrees), then maps the multiset of
categories at the node to a type code 1..7. Both decision tables are total:
every angle list receives exactly one code.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateGeometryError, ValidationError
from .graph import CityNetwork, GeoPoint, RoadGraph, RoadLink, RoadNode

DEFAULT_TAU_DEG = 10.0

ACUTE = "acute"
RIGHT = "right"
OBTUSE = "obtuse"
STRAIGHT = "straight"
REFLEX = "reflex"

PATTERN_TYPES = ("1", "2", "3", "4", "5", "6", "7")
OTHER_PATTERN = "other"

# Two directions closer than this (in coordinate units) are coincident.
_COINCIDENT_EPS = 1e-12


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 45.0:
        raise ValidationError(f"angle tolerance tau must lie in (0, 45), got {tau}")


def categorize(value: float, tau: float = DEFAULT_TAU_DEG) -> str:
    """Bucket an angle in [0, 360) into one of the five categories."""
    _check_tau(tau)
    if abs(value - 90.0) <= tau:
        return RIGHT
    if abs(value - 180.0) <= tau:
        return STRAIGHT
    if value < 90.0 - tau:
        return ACUTE
    if value < 180.0 - tau:
        return OBTUSE
    return REFLEX


def _local_xy(p: GeoPoint, origin: GeoPoint, mode: str) -> tuple[float, float]:
    dx = p.x - origin.x
    dy = p.y - origin.y
    if mode == "geographic":
        dx *= math.cos(math.radians(origin.y))
    return dx, dy


def angle(a: GeoPoint, o: GeoPoint, b: GeoPoint, mode: str = "planar") -> float:
    """Counterclockwise angle in degrees from ray o->a to ray o->b, in [0, 360).

    Computed as degrees(atan2(b - o) - atan2(a - o)), adding 360 when the
    difference is negative.
    """
    ax, ay = _local_xy(a, o, mode)
    bx, by = _local_xy(b, o, mode)
    if math.hypot(ax, ay) < _COINCIDENT_EPS or math.hypot(bx, by) < _COINCIDENT_EPS:
        raise DegenerateGeometryError(f"coincident points at vertex {o}")
    value = math.degrees(math.atan2(by, bx) - math.atan2(ay, ax))
    if value < 0.0:
        value += 360.0
    if value >= 360.0:
        value -= 360.0
    return value


def outgoing_ray(link: RoadLink, graph: RoadGraph) -> GeoPoint:
    """The point defining a link's initial direction at its start node.

    First shape point when present; falls through coincident shape points
    to the end node.
    """
    origin = graph.nodes[link.from_node].location
    for candidate in (*link.shape_points, graph.nodes[link.to_node].location):
        if abs(candidate.x - origin.x) > _COINCIDENT_EPS or abs(candidate.y - origin.y) > _COINCIDENT_EPS:
            return candidate
    raise DegenerateGeometryError(
        f"link {link.id!r} has no point distinct from its start node"
    )


def _initial_direction_deg(link: RoadLink, graph: RoadGraph) -> float:
    """Math-convention direction (CCW from +x) of the link's first segment."""
    origin = graph.nodes[link.from_node].location
    dx, dy = _local_xy(outgoing_ray(link, graph), origin, graph.mode)
    return math.degrees(math.atan2(dy, dx)) % 360.0


def link_bearing(link: RoadLink, graph: RoadGraph) -> float:
    """Compass bearing (0 = north, clockwise) of the link's initial direction."""
    origin = graph.nodes[link.from_node].location
    target = outgoing_ray(link, graph)
    if graph.mode == "planar":
        return math.degrees(math.atan2(target.x - origin.x, target.y - origin.y)) % 360.0
    lat1 = math.radians(origin.y)
    lat2 = math.radians(target.y)
    dlon = math.radians(target.x - origin.x)
    y = math.sin(dlon) * math.cos(lat2)
    x = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon)
    return math.degrees(math.atan2(y, x)) % 360.0


def node_angles(node: RoadNode, city: CityNetwork) -> list[float]:
    """Consecutive angular gaps between a node's outgoing links, summing to 360.

    Links are sorted by initial direction; the wrap-around gap closes the
    circle. Duplicate directions yield zero-degree gaps, which classify as
    acute.
    """
    links = city.graph.out_links(node.id)
    if len(links) < 2:
        raise ValidationError(
            f"node {node.id!r} has out-degree {len(links)}; angles need at least 2"
        )
    try:
        directions = sorted(_initial_direction_deg(link, city.graph) for link in links)
    except DegenerateGeometryError as exc:
        raise DegenerateGeometryError(f"node {node.id!r}: {exc}") from None
    gaps = [directions[i + 1] - directions[i] for i in range(len(directions) - 1)]
    gaps.append(360.0 - directions[-1] + directions[0])
    return gaps


def classify_pattern(angles: Sequence[float], degree: int, tau: float = DEFAULT_TAU_DEG) -> str:
    """Map a node's angle multiset to its intersection type code "1".."7".

    Degree-3 table (checked top-down):
      1: two right + one straight (the classic T)
      2: acute + obtuse + straight
      6: anything containing a reflex angle
      3: three obtuse
      4: right + two obtuse
      5: acute + two obtuse
      7: everything else

    Degree-4 table (checked top-down):
      1: four right angles (the square crossing)
      3: exactly two right + one acute + one obtuse
      2: two acute + two obtuse (skewed crossing, no right angle)
      4: contains a straight angle
      5: contains a reflex angle
      6: no right angle and none of the above
      7: everything else
    """
    if degree not in (3, 4):
        raise ValidationError(f"patterns are defined for degree 3 or 4, got {degree}")
    if len(angles) != degree:
        raise ValidationError(
            f"expected {degree} angles for a degree-{degree} node, got {len(angles)}"
        )
    cats = Counter(categorize(value, tau) for value in angles)
    if degree == 3:
        if cats == {RIGHT: 2, STRAIGHT: 1}:
            return "1"
        if cats == {ACUTE: 1, OBTUSE: 1, STRAIGHT: 1}:
            return "2"
        if cats[REFLEX] >= 1:
            return "6"
        if cats == {OBTUSE: 3}:
            return "3"
        if cats == {RIGHT: 1, OBTUSE: 2}:
            return "4"
        if cats == {ACUTE: 1, OBTUSE: 2}:
            return "5"
        return "7"
    if cats == {RIGHT: 4}:
        return "1"
    if cats[RIGHT] == 2 and cats[ACUTE] == 1 and cats[OBTUSE] == 1:
        return "3"
    if cats == {ACUTE: 2, OBTUSE: 2}:
        return "2"
    if cats[STRAIGHT] >= 1:
        return "4"
    if cats[REFLEX] >= 1:
        return "5"
    if cats[RIGHT] == 0:
        return "6"
    return "7"


@dataclass(frozen=True)
class NodePattern:
    node_id: str
    degree: int
    type_code: str
    angles: tuple[float, ...]


@dataclass(frozen=True)
class PatternCounts:
    """Per-type fractions of degree-3 and degree-4 nodes.

    Keys are "1".."7" plus "other" (nodes whose geometry was too degenerate
    to angle). Each map sums to 1 when its node set is non-empty and is
    all-zero otherwise.
    """

    d3_props: dict[str, float]
    d4_props: dict[str, float]


def node_patterns(city: CityNetwork, tau: float = DEFAULT_TAU_DEG) -> list[NodePattern]:
    """Classify every node with out-degree exactly 3 or 4."""
    _check_tau(tau)
    patterns = []
    for node in city.graph.nodes.values():
        degree = city.graph.out_degree(node.id)
        if degree not in (3, 4):
            continue
        try:
            angles = node_angles(node, city)
        except DegenerateGeometryError:
            patterns.append(NodePattern(node.id, degree, OTHER_PATTERN, ()))
            continue
        code = classify_pattern(angles, degree, tau)
        patterns.append(NodePattern(node.id, degree, code, tuple(angles)))
    return patterns


def pattern_counts(city: CityNetwork, tau: float = DEFAULT_TAU_DEG) -> PatternCounts:
    """Type-code proportions over the city's degree-3 and degree-4 nodes."""
    keys = PATTERN_TYPES + (OTHER_PATTERN,)
    tallies = {3: {k: 0 for k in keys}, 4: {k: 0 for k in keys}}
    totals = {3: 0, 4: 0}
    for pattern in node_patterns(city, tau):
        tallies[pattern.degree][pattern.type_code] += 1
        totals[pattern.degree] += 1

    def proportions(degree: int) -> dict[str, float]:
        total = totals[degree]
        if total == 0:
            return {k: 0.0 for k in keys}
        return {k: tallies[degree][k] / total for k in keys}

    return PatternCounts(d3_props=proportions(3), d4_props=proportions(4))
