"""Command-line interface: ingestion through metrics, patterns, features,
factor extraction, and clustering, plus a one-shot ``pipeline`` command.

Subcommands: synth, ingest, metrics, patterns, features, cluster, pipeline.
Exit codes: 0 success, 2 validation error, 3 data error, 4 internal error.
Coordinates are selected with ``--mode {geo,planar}``; the feature-set
choice (baseline vs enhanced) uses ``--feature-mode`` to avoid clashing
with the coordinate flag.

All artifacts are plain CSV/JSON and are byte-identical across runs with
the same configuration and inputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .clustering import elbow, kmeans
from .errors import CityformError, DataError, ValidationError
from .features import (
    DEFAULT_DOMINANT_THRESHOLD,
    FEATURE_MODES,
    CityMetrics,
    assemble_features,
    bearing_histogram,
    drop_features,
    pearson_report,
    zscore,
)
from .geometry import DEFAULT_TAU_DEG, PATTERN_TYPES, node_patterns, pattern_counts
from .graph import CityNetwork, clip_to_city, load_boundaries, load_graph
from .reduction import extract_factors
from .synth import ARCHETYPES, city_boundary, corpus_specs, generate
from .topology import DEGREE_CLASSES, topo_metrics

_MODE_NAMES = {"geo": "geographic", "planar": "planar"}

METRICS_HEADER = (
    ["city"]
    + [f"prop_deg{c}".replace("5+", "5plus") for c in DEGREE_CLASSES]
    + ["median_bc", "link_node_ratio", "density_km_per_km2", "mean_link_length_m", "pct_in_ne_out"]
)
PATTERNS_HEADER = (
    ["city"]
    + [f"d3_t{t}" for t in PATTERN_TYPES]
    + ["d3_other"]
    + [f"d4_t{t}" for t in PATTERN_TYPES]
    + ["d4_other"]
)

PIPELINE_ARTIFACTS = (
    "metrics.csv",
    "patterns.csv",
    "features.csv",
    "correlations.csv",
    "factors.json",
    "clusters.csv",
    "evaluation.json",
    "elbow.csv",
    "bearing_histograms.json",
)


@dataclass
class RunConfig:
    nodes_path: str
    links_path: str
    boundaries_path: str
    out_dir: str
    mode: str = "planar"
    feature_mode: str = "enhanced"
    tau: float = DEFAULT_TAU_DEG
    dominant_threshold: float = DEFAULT_DOMINANT_THRESHOLD
    k: int = 3
    k_range: tuple[int, int] | None = None
    seed: int = 0
    restarts: int = 10
    factors_override: int | None = None
    drop: tuple[str, ...] = ()
    corr_threshold: float = 0.9

    def validate(self) -> None:
        for label, path in (
            ("nodes", self.nodes_path),
            ("links", self.links_path),
            ("boundaries", self.boundaries_path),
        ):
            if not Path(path).is_file():
                raise ValidationError(f"{label} file does not exist: {path}")
        if self.mode not in _MODE_NAMES.values():
            raise ValidationError(f"unknown coordinate mode {self.mode!r}")
        if self.feature_mode not in FEATURE_MODES:
            raise ValidationError(f"unknown feature mode {self.feature_mode!r}")
        if not 0.0 < self.tau < 45.0:
            raise ValidationError(f"tau must lie in (0, 45), got {self.tau}")
        if not 0.0 < self.dominant_threshold < 1.0:
            raise ValidationError(
                f"dominant threshold must lie in (0, 1), got {self.dominant_threshold}"
            )
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.restarts < 1:
            raise ValidationError(f"restarts must be >= 1, got {self.restarts}")
        if self.k_range is not None and self.k_range[0] > self.k_range[1]:
            raise ValidationError(f"empty k range {self.k_range}")


def config_from_manifest(manifest: dict) -> RunConfig:
    """Rebuild the RunConfig recorded by a previous pipeline run."""
    raw = dict(manifest["config"])
    if raw.get("k_range") is not None:
        raw["k_range"] = tuple(raw["k_range"])
    raw["drop"] = tuple(raw.get("drop", ()))
    return RunConfig(**raw)


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows, written: list[Path]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    written.append(path)


def _write_json(path: Path, payload, written: list[Path]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write("\n")
    written.append(path)


def _finite_or_none(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


# ---------------------------------------------------------------------------
# Shared stages
# ---------------------------------------------------------------------------


def _load_cities(nodes: str, links: str, boundaries: str, mode: str) -> list[CityNetwork]:
    graph = load_graph(nodes, links, mode)
    cities = []
    for boundary in load_boundaries(boundaries):
        city = clip_to_city(graph, boundary)
        if city.is_empty:
            print(
                f"warning: city {city.city_name!r} has no nodes inside its boundary; skipped",
                file=sys.stderr,
            )
            continue
        cities.append(city)
    if not cities:
        raise DataError("no non-empty cities after clipping")
    return cities


def _metrics_row(city: CityNetwork, topo) -> list:
    profile = topo.degree_profile
    return (
        [city.city_name]
        + [profile.proportions_out[c] for c in DEGREE_CLASSES]
        + [
            topo.centrality.median_normalized_bc,
            topo.link_node_ratio,
            topo.network_density_km_per_km2,
            topo.mean_link_length_m,
            profile.pct_nodes_in_ne_out,
        ]
    )


def _patterns_row(city: CityNetwork, counts) -> list:
    return (
        [city.city_name]
        + [counts.d3_props[t] for t in PATTERN_TYPES]
        + [counts.d3_props["other"]]
        + [counts.d4_props[t] for t in PATTERN_TYPES]
        + [counts.d4_props["other"]]
    )


def _compute_bundles(cities: list[CityNetwork], config: RunConfig) -> list[CityMetrics]:
    return [
        CityMetrics(
            city_name=city.city_name,
            topo=topo_metrics(city),
            patterns=pattern_counts(city, config.tau),
            bearings=bearing_histogram(city, config.dominant_threshold),
        )
        for city in cities
    ]


def _feature_stage(bundles, config: RunConfig):
    matrix = assemble_features(bundles, config.feature_mode)
    if config.drop:
        matrix = drop_features(matrix, config.drop)
    return matrix


def _cluster_stage(matrix, config: RunConfig, written: list[Path], out: Path) -> None:
    normalized = zscore(matrix)
    model = extract_factors(normalized, config.factors_override)
    _write_json(
        out / "factors.json",
        {
            "eigenvalues": list(model.eigenvalues),
            "retained": model.retained,
            "override": config.factors_override,
            "warnings": list(model.warnings),
            "feature_count": len(model.feature_names),
        },
        written,
    )
    n_cities = len(matrix.cities)
    k = config.k
    if k > n_cities:
        raise ValidationError(f"k={k} exceeds the {n_cities} available cities")
    result = kmeans(model.scores, k, seed=config.seed, restarts=config.restarts)
    _write_csv(
        out / "clusters.csv",
        ["city", "label"],
        [[name, int(label)] for name, label in zip(matrix.cities, result.labels)],
        written,
    )
    dbi = _finite_or_none(result.davies_bouldin)
    _write_json(
        out / "evaluation.json",
        {
            config.feature_mode: {
                "k": result.k,
                "seed": result.seed,
                "restarts": result.restarts,
                "inertia": result.inertia,
                "silhouette": _finite_or_none(result.silhouette),
                "davies_bouldin": dbi,
                "degenerate_dbi": result.davies_bouldin is not None
                and not math.isfinite(result.davies_bouldin),
                "space": "factor_scores",
            }
        },
        written,
    )
    lo, hi = config.k_range if config.k_range else (1, min(10, n_cities))
    hi = min(hi, n_cities)
    curve = elbow(model.scores, range(lo, hi + 1), seed=config.seed, restarts=config.restarts)
    _write_csv(out / "elbow.csv", ["k", "inertia"], [[k_, inertia] for k_, inertia in curve.entries], written)


def run_pipeline(config: RunConfig) -> dict:
    """Run every stage and write all artifacts; clean up on failure."""
    config.validate()
    out = Path(config.out_dir)
    written: list[Path] = []
    try:
        cities = _load_cities(
            config.nodes_path, config.links_path, config.boundaries_path, config.mode
        )
        bundles = _compute_bundles(cities, config)
        _write_csv(
            out / "metrics.csv",
            METRICS_HEADER,
            [_metrics_row(c, b.topo) for c, b in zip(cities, bundles)],
            written,
        )
        _write_csv(
            out / "patterns.csv",
            PATTERNS_HEADER,
            [_patterns_row(c, b.patterns) for c, b in zip(cities, bundles)],
            written,
        )
        _write_json(
            out / "bearing_histograms.json",
            {
                b.city_name: {
                    "bins": list(b.bearings.bins),
                    "rotation_offset": b.bearings.rotation_offset,
                    "dominant_bin_count": b.bearings.dominant_bin_count,
                }
                for b in bundles
            },
            written,
        )
        matrix = _feature_stage(bundles, config)
        _write_csv(
            out / "features.csv",
            ["city"] + list(matrix.feature_names),
            [[name] + [float(v) for v in row] for name, row in zip(matrix.cities, matrix.values)],
            written,
        )
        report = pearson_report(matrix, config.corr_threshold)
        _write_csv(
            out / "correlations.csv",
            ["feature"] + list(report.feature_names),
            [
                [name] + [float(v) for v in row]
                for name, row in zip(report.feature_names, report.matrix)
            ],
            written,
        )
        _cluster_stage(matrix, config, written, out)
        manifest = {"tool": "cityform", "version": __version__, "config": asdict(config)}
        if manifest["config"]["k_range"] is not None:
            manifest["config"]["k_range"] = list(manifest["config"]["k_range"])
        manifest["config"]["drop"] = list(manifest["config"]["drop"])
        _write_json(out / "run_manifest.json", manifest, written)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return {"cities": len(cities), "artifacts": [p.name for p in written]}


# ---------------------------------------------------------------------------
# Synthetic corpus emission
# ---------------------------------------------------------------------------


def write_corpus(
    kinds: list[str],
    count: int,
    seed: int,
    size: int,
    spacing: float,
    out_dir: str,
) -> list[str]:
    """Generate cities and write nodes/links/boundaries files for ingestion."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    specs = [
        (name, spec)
        for name, spec in corpus_specs(count, seed, base_size=size, base_spacing=spacing)
        if spec.kind in kinds
    ]

    offset_step = spacing * (2.6 * math.sqrt(1.25 * size) + 4.0)
    node_rows = []
    link_rows = []
    features = []
    names = []
    for idx, (name, spec) in enumerate(specs):
        names.append(name)
        city = generate(spec, name=name)
        boundary = city_boundary(city.graph, spec.spacing, name)
        ox = (idx % 6) * offset_step
        oy = (idx // 6) * offset_step
        for node in city.graph.nodes.values():
            node_rows.append([f"{name}:{node.id}", node.location.x + ox, node.location.y + oy])
        for link in city.graph.links:
            shape = ";".join(f"{p.x + ox} {p.y + oy}" for p in link.shape_points)
            link_rows.append(
                [
                    f"{name}:{link.id}",
                    f"{name}:{link.from_node}",
                    f"{name}:{link.to_node}",
                    link.length_m,
                    shape,
                ]
            )
        ring = [[p.x + ox, p.y + oy] for p in boundary.polygons[0][0]]
        ring.append(ring[0])
        features.append(
            {
                "type": "Feature",
                "properties": {"name": name, "archetype": spec.kind},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }
        )

    written: list[Path] = []
    _write_csv(out / "nodes.csv", ["node_id", "x", "y"], node_rows, written)
    _write_csv(
        out / "links.csv",
        ["link_id", "from", "to", "length_m", "shape_points"],
        link_rows,
        written,
    )
    _write_json(
        out / "boundaries.geojson",
        {"type": "FeatureCollection", "features": features},
        written,
    )
    return names


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        nodes_path=args.nodes,
        links_path=args.links,
        boundaries_path=args.boundaries,
        out_dir=args.out,
        mode=_MODE_NAMES[args.mode],
        feature_mode=getattr(args, "feature_mode", "enhanced"),
        tau=args.tau,
        dominant_threshold=getattr(args, "dominant_threshold", DEFAULT_DOMINANT_THRESHOLD),
        k=getattr(args, "k", 3),
        k_range=getattr(args, "k_range", None),
        seed=getattr(args, "seed", 0),
        restarts=getattr(args, "restarts", 10),
        factors_override=getattr(args, "factors", None),
        drop=tuple(getattr(args, "drop_features", None) or ()),
        corr_threshold=getattr(args, "corr_threshold", 0.9),
    )


def _cmd_synth(args) -> None:
    kinds = list(ARCHETYPES) if args.kind == "all" else [args.kind]
    names = write_corpus(kinds, args.count, args.seed, args.size, args.spacing, args.out)
    print(f"wrote {len(names)} cities to {args.out}")


def _cmd_ingest(args) -> None:
    config = _config_from_args(args)
    config.validate()
    cities = _load_cities(config.nodes_path, config.links_path, config.boundaries_path, config.mode)
    written: list[Path] = []
    _write_csv(
        Path(config.out_dir) / "cities_summary.csv",
        ["city", "nodes", "links", "area_km2"],
        [[c.city_name, c.graph.node_count, c.graph.link_count, c.area_km2] for c in cities],
        written,
    )
    print(f"ingested {len(cities)} cities")


def _cmd_metrics(args) -> None:
    config = _config_from_args(args)
    config.validate()
    cities = _load_cities(config.nodes_path, config.links_path, config.boundaries_path, config.mode)
    rows = [_metrics_row(city, topo_metrics(city)) for city in cities]
    _write_csv(Path(config.out_dir) / "metrics.csv", METRICS_HEADER, rows, [])
    print(f"wrote metrics for {len(cities)} cities")


def _cmd_patterns(args) -> None:
    config = _config_from_args(args)
    config.validate()
    cities = _load_cities(config.nodes_path, config.links_path, config.boundaries_path, config.mode)
    rows = [_patterns_row(city, pattern_counts(city, config.tau)) for city in cities]
    out = Path(config.out_dir)
    _write_csv(out / "patterns.csv", PATTERNS_HEADER, rows, [])
    if args.detail:
        detail_rows = []
        for city in cities:
            for pattern in node_patterns(city, config.tau):
                detail_rows.append(
                    [
                        city.city_name,
                        pattern.node_id,
                        pattern.degree,
                        ";".join(str(a) for a in sorted(pattern.angles)),
                        pattern.type_code,
                    ]
                )
        _write_csv(
            out / "patterns_detail.csv",
            ["city", "node_id", "degree", "angles_sorted", "type"],
            detail_rows,
            [],
        )
    print(f"wrote patterns for {len(cities)} cities")


def _cmd_features(args) -> None:
    config = _config_from_args(args)
    config.validate()
    cities = _load_cities(config.nodes_path, config.links_path, config.boundaries_path, config.mode)
    bundles = _compute_bundles(cities, config)
    matrix = _feature_stage(bundles, config)
    out = Path(config.out_dir)
    _write_csv(
        out / "features.csv",
        ["city"] + list(matrix.feature_names),
        [[name] + [float(v) for v in row] for name, row in zip(matrix.cities, matrix.values)],
        [],
    )
    report = pearson_report(matrix, config.corr_threshold)
    _write_csv(
        out / "correlations.csv",
        ["feature"] + list(report.feature_names),
        [[name] + [float(v) for v in row] for name, row in zip(report.feature_names, report.matrix)],
        [],
    )
    print(f"wrote {matrix.values.shape[0]}x{matrix.values.shape[1]} feature matrix")


def _cmd_cluster(args) -> None:
    config = _config_from_args(args)
    config.validate()
    cities = _load_cities(config.nodes_path, config.links_path, config.boundaries_path, config.mode)
    bundles = _compute_bundles(cities, config)
    matrix = _feature_stage(bundles, config)
    _cluster_stage(matrix, config, [], Path(config.out_dir))
    print(f"clustered {len(cities)} cities with k={config.k}")


def _cmd_pipeline(args) -> None:
    config = _config_from_args(args)
    summary = run_pipeline(config)
    print(f"pipeline complete: {summary['cities']} cities, {len(summary['artifacts'])} artifacts")


def _parse_k_range(raw: str) -> tuple[int, int]:
    try:
        lo, hi = raw.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a..b', got {raw!r}") from None


def _add_io_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--nodes", required=True, help="nodes CSV (node_id,x,y)")
    parser.add_argument("--links", required=True, help="links CSV (link_id,from,to,length_m,shape_points)")
    parser.add_argument("--boundaries", required=True, help="GeoJSON FeatureCollection of city boundaries")
    parser.add_argument("--mode", choices=("geo", "planar"), default="planar", help="coordinate mode")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--tau", type=float, default=DEFAULT_TAU_DEG, help="angle tolerance in degrees")


def _add_cluster_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--feature-mode", choices=FEATURE_MODES, default="enhanced")
    parser.add_argument("--drop-features", nargs="*", default=None, help="feature columns to drop")
    parser.add_argument("--corr-threshold", type=float, default=0.9)
    parser.add_argument("--dominant-threshold", type=float, default=DEFAULT_DOMINANT_THRESHOLD)
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--k-range", type=_parse_k_range, default=None, metavar="A..B")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--restarts", type=int, default=10)
    parser.add_argument("--factors", type=int, default=None, help="override the Kaiser retention count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cityform", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cityform {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--kind", choices=ARCHETYPES + ("all",), default="all")
    p.add_argument("--count", type=int, default=10, help="cities per archetype")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=140, help="target nodes per city")
    p.add_argument("--spacing", type=float, default=100.0, help="street spacing in meters")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="load, clip, and summarize cities")
    _add_io_args(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("metrics", help="per-city topological metrics CSV")
    _add_io_args(p)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("patterns", help="per-city intersection pattern CSV")
    _add_io_args(p)
    p.add_argument("--detail", action="store_true", help="also write per-node detail")
    p.set_defaults(func=_cmd_patterns)

    p = sub.add_parser("features", help="assemble the feature matrix and correlations")
    _add_io_args(p)
    p.add_argument("--feature-mode", choices=FEATURE_MODES, default="enhanced")
    p.add_argument("--drop-features", nargs="*", default=None)
    p.add_argument("--corr-threshold", type=float, default=0.9)
    p.add_argument("--dominant-threshold", type=float, default=DEFAULT_DOMINANT_THRESHOLD)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("cluster", help="factor extraction plus k-means evaluation")
    _add_io_args(p)
    _add_cluster_args(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("pipeline", help="run every stage and write all artifacts")
    _add_io_args(p)
    _add_cluster_args(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except CityformError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
