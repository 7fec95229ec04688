"""Directed primal road graph: types, file ingestion, and per-city clipping.

Nodes are intersections or dead ends; links are directed street segments
that may carry intermediate shape points describing curvature. Two
coordinate modes exist and apply to a whole graph:

* ``geographic``: x = longitude, y = latitude (WGS84 degrees). Distances
  use the haversine formula; polygon areas use a spherical-excess formula.
* ``planar``: x, y in meters. Distances are Euclidean; areas use the
  shoelace formula.

Boundary rings are stored *open* (no repeated closing vertex) and treated
as implicitly closed. The GeoJSON loader strips a closing duplicate when
present.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import DataError, EmptyCityError, ValidationError

# Sphere radius such that one degree of longitude on the equator measures
# the conventional 111.32 km.
EARTH_RADIUS_M = 6378137.0

MODES = ("geographic", "planar")

# Tolerance, in coordinate units, for "point lies on the boundary" tests.
_ON_BOUNDARY_EPS = 1e-9


class GeoPoint(NamedTuple):
    x: float
    y: float


def validate_point(p: GeoPoint, mode: str) -> None:
    """Reject non-finite coordinates, and out-of-range lon/lat in geographic mode."""
    if not (math.isfinite(p.x) and math.isfinite(p.y)):
        raise DataError(f"non-finite coordinate: {p}")
    if mode == "geographic" and not (-180.0 <= p.x <= 180.0 and -90.0 <= p.y <= 90.0):
        raise DataError(f"coordinate out of lon/lat range: {p}")


def point_distance_m(a: GeoPoint, b: GeoPoint, mode: str) -> float:
    """Distance between two points in meters (haversine or Euclidean per mode)."""
    if mode == "planar":
        return math.hypot(b.x - a.x, b.y - a.y)
    lon1, lat1 = math.radians(a.x), math.radians(a.y)
    lon2, lat2 = math.radians(b.x), math.radians(b.y)
    sin_dlat = math.sin((lat2 - lat1) / 2.0)
    sin_dlon = math.sin((lon2 - lon1) / 2.0)
    h = sin_dlat * sin_dlat + math.cos(lat1) * math.cos(lat2) * sin_dlon * sin_dlon
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def polyline_length_m(points: Iterable[GeoPoint], mode: str) -> float:
    """Sum of consecutive segment distances along a polyline."""
    pts = list(points)
    return sum(point_distance_m(pts[i], pts[i + 1], mode) for i in range(len(pts) - 1))


@dataclass(frozen=True)
class RoadNode:
    id: str
    location: GeoPoint


@dataclass(frozen=True)
class RoadLink:
    id: str
    from_node: str
    to_node: str
    shape_points: tuple[GeoPoint, ...]
    length_m: float

    def polyline(self, graph: "RoadGraph") -> tuple[GeoPoint, ...]:
        """Full geometry: start node, shape points, end node."""
        return (
            graph.nodes[self.from_node].location,
            *self.shape_points,
            graph.nodes[self.to_node].location,
        )


class RoadGraph:
    """Validated directed primal graph. Treat as immutable after construction.

    Duplicate parallel links are allowed; self-loops are not. Every link
    endpoint must resolve to a node and every length must be positive.
    """

    def __init__(self, nodes: Iterable[RoadNode], links: Iterable[RoadLink], mode: str):
        if mode not in MODES:
            raise ValidationError(f"unknown coordinate mode: {mode!r}")
        self.mode = mode
        self.nodes: dict[str, RoadNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise DataError(f"duplicate node id: {node.id!r}")
            validate_point(node.location, mode)
            self.nodes[node.id] = node
        self.links: tuple[RoadLink, ...] = tuple(links)
        self._out: dict[str, list[RoadLink]] = {nid: [] for nid in self.nodes}
        self._in_degree: dict[str, int] = {nid: 0 for nid in self.nodes}
        for link in self.links:
            for endpoint in (link.from_node, link.to_node):
                if endpoint not in self.nodes:
                    raise DataError(
                        f"link {link.id!r} references missing node {endpoint!r}"
                    )
            if link.from_node == link.to_node:
                raise DataError(f"link {link.id!r} is a self-loop at {link.from_node!r}")
            if not (math.isfinite(link.length_m) and link.length_m > 0):
                raise DataError(f"link {link.id!r} has non-positive length {link.length_m}")
            for p in link.shape_points:
                validate_point(p, mode)
            self._out[link.from_node].append(link)
            self._in_degree[link.to_node] += 1

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def link_count(self) -> int:
        return len(self.links)

    def out_links(self, node_id: str) -> list[RoadLink]:
        return self._out[node_id]

    def out_degree(self, node_id: str) -> int:
        return len(self._out[node_id])

    def in_degree(self, node_id: str) -> int:
        return self._in_degree[node_id]


Ring = tuple[GeoPoint, ...]


@dataclass(frozen=True)
class CityBoundary:
    """One named boundary: a list of polygons, each (exterior, *holes)."""

    city_name: str
    polygons: tuple[tuple[Ring, ...], ...]

    def rings(self) -> Iterable[Ring]:
        for polygon in self.polygons:
            yield from polygon


def _validated_ring(raw: Iterable[tuple[float, float]], name: str) -> Ring:
    pts = [GeoPoint(float(x), float(y)) for x, y in raw]
    if len(pts) >= 2 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) < 3:
        raise DataError(f"boundary ring for {name!r} has fewer than 3 distinct vertices")
    return tuple(pts)


def make_boundary(
    city_name: str, polygons: Iterable[Iterable[Iterable[tuple[float, float]]]]
) -> CityBoundary:
    """Build a validated CityBoundary from nested (polygon, ring, vertex) data."""
    validated = tuple(
        tuple(_validated_ring(ring, city_name) for ring in polygon) for polygon in polygons
    )
    if not validated or any(len(polygon) == 0 for polygon in validated):
        raise DataError(f"boundary for {city_name!r} has no rings")
    return CityBoundary(city_name, validated)


@dataclass(frozen=True)
class CityNetwork:
    """A road graph clipped to one city, with the boundary-derived area."""

    city_name: str
    graph: RoadGraph
    area_km2: float

    @property
    def is_empty(self) -> bool:
        return self.graph.node_count == 0


# ---------------------------------------------------------------------------
# Point-in-polygon and areas
# ---------------------------------------------------------------------------


def _on_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool:
    if not (
        min(a.x, b.x) - _ON_BOUNDARY_EPS <= p.x <= max(a.x, b.x) + _ON_BOUNDARY_EPS
        and min(a.y, b.y) - _ON_BOUNDARY_EPS <= p.y <= max(a.y, b.y) + _ON_BOUNDARY_EPS
    ):
        return False
    cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
    scale = max(1.0, abs(b.x - a.x), abs(b.y - a.y))
    return abs(cross) <= _ON_BOUNDARY_EPS * scale


def point_in_polygon(p: GeoPoint, boundary: CityBoundary) -> bool:
    """Even-odd (ray casting) containment test; boundary points count as inside.

    Holes need no special casing: a point inside a hole crosses the hole
    ring and the exterior ring, yielding an even crossing count.
    """
    crossings = 0
    for ring in boundary.rings():
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            if _on_segment(p, a, b):
                return True
            if (a.y > p.y) != (b.y > p.y):
                x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
                if x_at > p.x:
                    crossings += 1
    return crossings % 2 == 1


def _ring_area_planar_m2(ring: Ring) -> float:
    total = 0.0
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        total += a.x * b.y - b.x * a.y
    return abs(total) / 2.0


def _ring_area_spherical_m2(ring: Ring) -> float:
    # Spherical-excess approximation over great-ellipse trapezoids.
    total = 0.0
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        total += math.radians(b.x - a.x) * (
            2.0 + math.sin(math.radians(a.y)) + math.sin(math.radians(b.y))
        )
    return abs(total) * EARTH_RADIUS_M * EARTH_RADIUS_M / 2.0


def boundary_area_km2(boundary: CityBoundary, mode: str) -> float:
    """Polygon area in km^2: exterior rings minus holes, floored at zero."""
    ring_area = _ring_area_planar_m2 if mode == "planar" else _ring_area_spherical_m2
    total_m2 = 0.0
    for polygon in boundary.polygons:
        total_m2 += ring_area(polygon[0])
        for hole in polygon[1:]:
            total_m2 -= ring_area(hole)
    return max(total_m2, 0.0) / 1e6


# ---------------------------------------------------------------------------
# Clipping
# ---------------------------------------------------------------------------


def clip_to_city(graph: RoadGraph, boundary: CityBoundary) -> CityNetwork:
    """Induced subgraph on nodes inside (or on) the boundary.

    A link survives only if both endpoints survive. An empty result is a
    legal outcome (``CityNetwork.is_empty``), not an error; downstream
    metrics raise :class:`EmptyCityError` where emptiness is fatal.
    """
    if graph.node_count == 0:
        raise EmptyCityError("cannot clip an empty regional graph")
    area = boundary_area_km2(boundary, graph.mode)
    if area <= 0.0:
        raise DataError(f"boundary {boundary.city_name!r} has zero area")
    kept_nodes = [
        node for node in graph.nodes.values() if point_in_polygon(node.location, boundary)
    ]
    kept_ids = {node.id for node in kept_nodes}
    kept_links = [
        link
        for link in graph.links
        if link.from_node in kept_ids and link.to_node in kept_ids
    ]
    return CityNetwork(
        city_name=boundary.city_name,
        graph=RoadGraph(kept_nodes, kept_links, graph.mode),
        area_km2=area,
    )


# ---------------------------------------------------------------------------
# File ingestion
# ---------------------------------------------------------------------------

NODES_HEADER = ["node_id", "x", "y"]
LINKS_HEADER = ["link_id", "from", "to", "length_m", "shape_points"]


def _parse_float(raw: str, what: str, where: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"{where}: cannot parse {what} from {raw!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{where}: non-finite {what}: {raw!r}")
    return value


def _parse_shape_points(raw: str, where: str) -> tuple[GeoPoint, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    points = []
    for token in raw.split(";"):
        parts = token.split()
        if len(parts) != 2:
            raise DataError(f"{where}: malformed shape point {token!r} (expected 'x y')")
        points.append(
            GeoPoint(_parse_float(parts[0], "shape x", where), _parse_float(parts[1], "shape y", where))
        )
    return tuple(points)


def _check_header(actual: list[str] | None, expected: list[str], path: str) -> None:
    if actual is None or [c.strip() for c in actual] != expected:
        raise DataError(f"{path}: expected header {','.join(expected)!r}, got {actual!r}")


def load_graph(nodes_file: str, links_file: str, mode: str) -> RoadGraph:
    """Load a RoadGraph from the documented CSV schemas.

    Nodes: ``node_id,x,y``. Links: ``link_id,from,to,length_m,shape_points``
    where ``shape_points`` is a semicolon-separated list of ``x y`` pairs and
    an empty ``length_m`` means "compute the polyline length".
    """
    if mode not in MODES:
        raise ValidationError(f"unknown coordinate mode: {mode!r}")
    nodes: list[RoadNode] = []
    with open(nodes_file, newline="") as handle:
        reader = csv.reader(handle)
        _check_header(next(reader, None), NODES_HEADER, str(nodes_file))
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not field.strip() for field in row):
                continue
            where = f"{nodes_file}:{line_no}"
            if len(row) != 3:
                raise DataError(f"{where}: expected 3 fields, got {len(row)}")
            point = GeoPoint(_parse_float(row[1], "x", where), _parse_float(row[2], "y", where))
            nodes.append(RoadNode(id=row[0].strip(), location=point))

    node_locations = {node.id: node.location for node in nodes}
    links: list[RoadLink] = []
    with open(links_file, newline="") as handle:
        reader = csv.reader(handle)
        _check_header(next(reader, None), LINKS_HEADER, str(links_file))
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not field.strip() for field in row):
                continue
            where = f"{links_file}:{line_no}"
            if len(row) != 5:
                raise DataError(f"{where}: expected 5 fields, got {len(row)}")
            link_id, from_id, to_id = row[0].strip(), row[1].strip(), row[2].strip()
            for endpoint in (from_id, to_id):
                if endpoint not in node_locations:
                    raise DataError(
                        f"{where}: link {link_id!r} references missing node {endpoint!r}"
                    )
            shape = _parse_shape_points(row[4], where)
            if row[3].strip():
                length = _parse_float(row[3], "length_m", where)
                if length <= 0:
                    raise DataError(f"{where}: length_m must be positive, got {length}")
            else:
                length = polyline_length_m(
                    (node_locations[from_id], *shape, node_locations[to_id]), mode
                )
            links.append(RoadLink(link_id, from_id, to_id, shape, length))

    return RoadGraph(nodes, links, mode)


def load_boundaries(path: str) -> list[CityBoundary]:
    """Load city boundaries from a GeoJSON FeatureCollection.

    Each feature must be a Polygon or MultiPolygon and carry a ``name``
    property.
    """
    with open(path) as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
    if doc.get("type") != "FeatureCollection":
        raise DataError(f"{path}: expected a GeoJSON FeatureCollection")
    boundaries = []
    for idx, feature in enumerate(doc.get("features", [])):
        props = feature.get("properties") or {}
        name = props.get("name")
        if not name:
            raise DataError(f"{path}: feature {idx} has no 'name' property")
        geometry = feature.get("geometry") or {}
        gtype = geometry.get("type")
        coords = geometry.get("coordinates")
        if gtype == "Polygon":
            polygons = [coords]
        elif gtype == "MultiPolygon":
            polygons = coords
        else:
            raise DataError(
                f"{path}: feature {name!r} has unsupported geometry type {gtype!r}"
            )
        boundaries.append(make_boundary(str(name), polygons))
    return boundaries
