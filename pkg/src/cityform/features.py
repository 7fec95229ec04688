"""Bearing histograms and city-by-feature matrix assembly.

Bearings of all directed links discretize into eighteen 20-degree bins.
The histogram is cyclically rotated so the fullest bin leads, which makes
the feature insensitive to a city's absolute compass orientation; the
count of dominant bins (share above a threshold, default 10%) summarizes
how concentrated the street directions are.

Feature matrices come in two layouts:

* baseline (9 columns): five out-degree proportions, median normalized
  betweenness, mean link length, network density, link-node ratio.
* enhanced (42 columns): baseline + 14 intersection-pattern proportions +
  18 rotated bearing bins + the dominant-bin count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, ValidationError
from .geometry import PATTERN_TYPES, PatternCounts, link_bearing
from .graph import CityNetwork
from .topology import DEGREE_CLASSES, TopoMetrics

BIN_COUNT = 18
BIN_WIDTH_DEG = 360.0 / BIN_COUNT
DEFAULT_DOMINANT_THRESHOLD = 0.10

DEGREE_FEATURES = tuple(f"prop_deg{c}".replace("5+", "5plus") for c in DEGREE_CLASSES)
BASELINE_FEATURES = DEGREE_FEATURES + (
    "median_bc",
    "mean_link_length_m",
    "density_km_per_km2",
    "link_node_ratio",
)
PATTERN_FEATURES = tuple(f"d3_t{t}" for t in PATTERN_TYPES) + tuple(
    f"d4_t{t}" for t in PATTERN_TYPES
)
BEARING_FEATURES = tuple(f"bearing_bin_{i}" for i in range(1, BIN_COUNT + 1)) + (
    "dominant_bin_count",
)
ENHANCED_FEATURES = BASELINE_FEATURES + PATTERN_FEATURES + BEARING_FEATURES

FEATURE_MODES = ("baseline", "enhanced")

# Columns whose population standard deviation falls below this are constant.
_CONSTANT_STD_EPS = 1e-12


@dataclass(frozen=True)
class BearingHistogram:
    """Rotated 18-bin histogram of directed link bearings.

    ``bins`` holds the rotated proportions (bin 1 = the fullest bin);
    ``rotation_offset`` is the pre-rotation index that became bin 1.
    """

    bins: tuple[float, ...]
    rotation_offset: int
    dominant_bin_count: int


def rotate_bins(proportions: Sequence[float]) -> tuple[tuple[float, ...], int]:
    """Cyclically rotate so the maximum proportion leads (ties: lowest index)."""
    props = list(proportions)
    if len(props) != BIN_COUNT:
        raise ValidationError(f"expected {BIN_COUNT} bins, got {len(props)}")
    offset = props.index(max(props))
    return tuple(props[offset:] + props[:offset]), offset


def bearing_histogram(
    city: CityNetwork, dominant_threshold: float = DEFAULT_DOMINANT_THRESHOLD
) -> BearingHistogram:
    """Histogram of every directed link's bearing in 20-degree bins."""
    if not 0.0 < dominant_threshold < 1.0:
        raise ValidationError(
            f"dominant threshold must lie in (0, 1), got {dominant_threshold}"
        )
    counts = [0] * BIN_COUNT
    for link in city.graph.links:
        bearing = link_bearing(link, city.graph)
        counts[int(bearing // BIN_WIDTH_DEG) % BIN_COUNT] += 1
    total = sum(counts)
    if total == 0:
        return BearingHistogram(bins=(0.0,) * BIN_COUNT, rotation_offset=0, dominant_bin_count=0)
    proportions = [c / total for c in counts]
    rotated, offset = rotate_bins(proportions)
    dominant = sum(1 for p in proportions if p > dominant_threshold)
    return BearingHistogram(bins=rotated, rotation_offset=offset, dominant_bin_count=dominant)


@dataclass(frozen=True)
class CityMetrics:
    """Everything one city contributes to the feature matrix."""

    city_name: str
    topo: TopoMetrics
    patterns: PatternCounts | None = None
    bearings: BearingHistogram | None = None


@dataclass(frozen=True)
class FeatureMatrix:
    cities: tuple[str, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray
    normalization: str = "none"
    means: tuple[float, ...] | None = None
    stds: tuple[float, ...] | None = None
    constant_columns: tuple[str, ...] = ()


def _baseline_row(bundle: CityMetrics) -> list[float]:
    profile = bundle.topo.degree_profile.proportions_out
    return [profile[c] for c in DEGREE_CLASSES] + [
        bundle.topo.centrality.median_normalized_bc,
        bundle.topo.mean_link_length_m,
        bundle.topo.network_density_km_per_km2,
        bundle.topo.link_node_ratio,
    ]


def assemble_features(bundles: Sequence[CityMetrics], mode: str = "baseline") -> FeatureMatrix:
    """Fixed-order cities x features matrix, unnormalized."""
    if mode not in FEATURE_MODES:
        raise ValidationError(f"unknown feature mode {mode!r}")
    if not bundles:
        raise DataError("empty corpus: no cities to assemble")
    rows = []
    for bundle in bundles:
        if bundle.topo is None:
            raise DataError(f"city {bundle.city_name!r} is missing topology metrics")
        row = _baseline_row(bundle)
        if mode == "enhanced":
            if bundle.patterns is None:
                raise DataError(f"city {bundle.city_name!r} is missing pattern counts")
            if bundle.bearings is None:
                raise DataError(f"city {bundle.city_name!r} is missing a bearing histogram")
            row += [bundle.patterns.d3_props[t] for t in PATTERN_TYPES]
            row += [bundle.patterns.d4_props[t] for t in PATTERN_TYPES]
            row += list(bundle.bearings.bins)
            row.append(float(bundle.bearings.dominant_bin_count))
        rows.append(row)
    names = BASELINE_FEATURES if mode == "baseline" else ENHANCED_FEATURES
    return FeatureMatrix(
        cities=tuple(b.city_name for b in bundles),
        feature_names=names,
        values=np.array(rows, dtype=float),
    )


def drop_features(matrix: FeatureMatrix, names: Sequence[str]) -> FeatureMatrix:
    """Remove named columns (e.g. ones flagged as redundant by correlation)."""
    unknown = [n for n in names if n not in matrix.feature_names]
    if unknown:
        raise ValidationError(f"cannot drop unknown features: {unknown}")
    keep = [i for i, n in enumerate(matrix.feature_names) if n not in set(names)]
    if not keep:
        raise ValidationError("cannot drop every feature")
    return FeatureMatrix(
        cities=matrix.cities,
        feature_names=tuple(matrix.feature_names[i] for i in keep),
        values=matrix.values[:, keep],
        normalization=matrix.normalization,
    )


def zscore(matrix: FeatureMatrix) -> FeatureMatrix:
    """Standardize each column to mean 0, population standard deviation 1.

    Constant columns become all-zero and are flagged by name.
    """
    if matrix.normalization != "none":
        raise ValidationError("matrix is already normalized")
    if matrix.values.shape[0] < 2:
        raise ValidationError("z-score needs at least 2 cities")
    means = matrix.values.mean(axis=0)
    stds = matrix.values.std(axis=0)
    constant = stds < _CONSTANT_STD_EPS
    safe = np.where(constant, 1.0, stds)
    values = (matrix.values - means) / safe
    values[:, constant] = 0.0
    return FeatureMatrix(
        cities=matrix.cities,
        feature_names=matrix.feature_names,
        values=values,
        normalization="zscore",
        means=tuple(float(m) for m in means),
        stds=tuple(float(s) for s in stds),
        constant_columns=tuple(
            n for n, is_const in zip(matrix.feature_names, constant) if is_const
        ),
    )


@dataclass(frozen=True)
class CorrelationReport:
    feature_names: tuple[str, ...]
    matrix: np.ndarray
    flagged_pairs: tuple[tuple[str, str, float], ...]
    degenerate_features: tuple[str, ...]


def pearson_report(matrix: FeatureMatrix, threshold: float = 0.9) -> CorrelationReport:
    """Full Pearson correlation matrix plus pairs with |r| at or above threshold.

    Constant columns correlate as 0 with everything (flagged as degenerate)
    rather than producing NaN.
    """
    values = matrix.values
    if values.shape[0] < 3:
        raise ValidationError("correlation needs at least 3 cities")
    centered = values - values.mean(axis=0)
    stds = values.std(axis=0)
    constant = stds < _CONSTANT_STD_EPS
    safe = np.where(constant, 1.0, stds)
    z = centered / safe
    corr = (z.T @ z) / values.shape[0]
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    corr = np.clip(corr, -1.0, 1.0)
    flagged = []
    for i in range(len(matrix.feature_names)):
        for j in range(i + 1, len(matrix.feature_names)):
            if abs(corr[i, j]) >= threshold:
                flagged.append(
                    (matrix.feature_names[i], matrix.feature_names[j], float(corr[i, j]))
                )
    return CorrelationReport(
        feature_names=matrix.feature_names,
        matrix=corr,
        flagged_pairs=tuple(flagged),
        degenerate_features=tuple(
            n for n, is_const in zip(matrix.feature_names, constant) if is_const
        ),
    )
