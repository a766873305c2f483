"""Text region, skeleton, contour and the width-normalized skeleton distance."""

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage
from skimage.morphology import thin

from .config import BIN_COUNT, BINARIZE_THRESHOLD, MIN_RADIUS, OUTLIER_FRACTION
from .errors import DegenerateMaskError, EmptyPointSetError, SizeMismatchError
from .imagecore import to_luma

_CROSS = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True, eq=False)
class TextMask:
    """Boolean text region; True marks pixels inside the glyph."""

    inside: np.ndarray

    def __post_init__(self):
        inside = np.array(self.inside, dtype=bool, copy=True)
        if inside.ndim != 2:
            raise DegenerateMaskError(f"Text mask must be 2-D, got shape {inside.shape}")
        if not inside.any():
            raise DegenerateMaskError("Text mask is empty: no pixel reaches the threshold")
        if inside.all():
            raise DegenerateMaskError("Text mask covers the whole image: no background pixel")
        inside.setflags(write=False)
        object.__setattr__(self, "inside", inside)

    @property
    def height(self):
        return self.inside.shape[0]

    @property
    def width(self):
        return self.inside.shape[1]


@dataclass(frozen=True, eq=False)
class SkeletonContour:
    skeleton: np.ndarray
    contour: np.ndarray
    contour_points: np.ndarray

    @property
    def contour_count(self):
        return len(self.contour_points)


@dataclass(frozen=True)
class WidthRegression:
    """Linear fit radius ~ k * rank + b over the sorted contour radii."""

    k: float
    b: float
    contour_count: int
    outlier_fraction: float = OUTLIER_FRACTION

    @property
    def mean_radius(self):
        return max(MIN_RADIUS, 0.5 * self.k * self.contour_count + self.b)

    @property
    def radius_floor(self):
        return self.outlier_fraction * self.k * self.contour_count + self.b


@dataclass(frozen=True, eq=False)
class DistanceField:
    dist: np.ndarray
    regression: WidthRegression
    bin_edges: np.ndarray
    bins: np.ndarray

    @property
    def max_distance(self):
        return float(self.bin_edges[-1])

    def bin_of(self, values):
        return bin_values(self.bin_edges, values)

    def with_edges(self, bin_edges):
        """Same distances quantized on another field's bins."""
        return replace(self, bin_edges=bin_edges, bins=bin_values(bin_edges, self.dist))


@dataclass(frozen=True, eq=False)
class TextGeometry:
    """Everything derived from one text image."""

    mask: TextMask
    skeleton_contour: SkeletonContour
    skeleton_distance: np.ndarray
    regression: WidthRegression
    field: DistanceField


def binarize(text_img, threshold=BINARIZE_THRESHOLD):
    """Pixels whose luma reaches the threshold belong to the text region."""
    if not 0 < threshold < 1:
        raise ValueError(f"Threshold must be in (0, 1), got {threshold}")
    luma = to_luma(text_img).data[:, :, 0]
    return TextMask(luma >= threshold)


def skeletonize(mask):
    """Thin the text region to a one-pixel skeleton and collect its 4-connected contour."""
    skeleton = thin(mask.inside)
    if not skeleton.any():
        raise DegenerateMaskError("Thinning produced an empty skeleton")

    # Pixels beyond the image edge count as inside, so a glyph cut by the border has no contour there.
    eroded = ndimage.binary_erosion(mask.inside, structure=_CROSS, border_value=1)
    contour = mask.inside & ~eroded
    return SkeletonContour(
        skeleton=skeleton,
        contour=contour,
        contour_points=np.argwhere(contour),
    )


def distance_to_set(shape, points):
    """
    Exact Euclidean distance from every pixel to its nearest member of a pixel set.

    `points` is a boolean mask of `shape` or an (n, 2) array of (y, x)
    coordinates. Returns (distance, nearest) where nearest has shape
    (2, height, width) and holds the (y, x) of the nearest member.
    """
    points = np.asarray(points)
    if points.dtype == bool and points.shape == tuple(shape):
        members = points
    else:
        members = np.zeros(shape, dtype=bool)
        if points.size:
            members[points[:, 0], points[:, 1]] = True
    if not members.any():
        raise EmptyPointSetError("Distance transform needs at least one set member")

    dist, nearest = ndimage.distance_transform_edt(~members, return_indices=True)
    return dist, nearest


def fit_width_regression(sc, raw_dist_to_skel, outlier_fraction=OUTLIER_FRACTION):
    """Least-squares line through the contour radii sorted ascending against their rank."""
    radii = np.sort(raw_dist_to_skel[sc.contour])
    n = len(radii)
    if n < 2:
        raise DegenerateMaskError(f"Width regression needs at least 2 contour pixels, got {n}")
    ranks = np.arange(1, n + 1, dtype=np.float64)
    k, b = np.polyfit(ranks, radii, 1)
    return WidthRegression(k=float(k), b=float(b), contour_count=n, outlier_fraction=outlier_fraction)


def corrected_radius(q, reg, raw_dist_to_skel):
    """Contour radius lifted to the regression floor; q is a PatchCoord on the contour."""
    return max(float(raw_dist_to_skel[q.y, q.x]), reg.radius_floor, MIN_RADIUS)


def corrected_radii(reg, raw_dist_to_skel):
    """corrected_radius for every pixel at once (only contour values are meaningful)."""
    return np.maximum(np.maximum(raw_dist_to_skel, reg.radius_floor), MIN_RADIUS)


def bin_values(bin_edges, values):
    """Uniform quantization on the given edges; values past the last edge land in the top bin."""
    idx = np.searchsorted(bin_edges, values, side="right") - 1
    return np.clip(idx, 0, len(bin_edges) - 2)


def bin_of(df, value):
    return df.bin_of(value)


def normalized_distance_field(mask, sc, reg, raw_dist_to_skel):
    """
    Skeleton distance normalized so the contour sits at 1.

    Outside the text: 1 + dist(q, contour) / mean radius. Inside (contour
    included): 1 - dist(q, contour) / corrected radius of the nearest contour
    pixel, floored at 0.
    """
    if raw_dist_to_skel.shape != mask.inside.shape:
        raise SizeMismatchError(
            f"Skeleton distance shape {raw_dist_to_skel.shape} does not match mask {mask.inside.shape}"
        )
    to_contour, nearest = distance_to_set(mask.inside.shape, sc.contour)
    radii = corrected_radii(reg, raw_dist_to_skel)
    r_perp = radii[nearest[0], nearest[1]]

    dist = np.where(
        mask.inside,
        1.0 - to_contour / r_perp,
        1.0 + to_contour / reg.mean_radius,
    )
    dist = np.maximum(dist, 0.0)
    edges = np.linspace(0.0, float(dist.max()), BIN_COUNT + 1)
    return DistanceField(dist=dist, regression=reg, bin_edges=edges, bins=bin_values(edges, dist))


def analyze_text(text_img, threshold=BINARIZE_THRESHOLD, outlier_fraction=OUTLIER_FRACTION):
    """Run binarize -> skeletonize -> regression -> normalized distance on one text image."""
    mask = binarize(text_img, threshold)
    sc = skeletonize(mask)
    raw, _ = distance_to_set(mask.inside.shape, sc.skeleton)
    reg = fit_width_regression(sc, raw, outlier_fraction)
    field = normalized_distance_field(mask, sc, reg, raw)
    return TextGeometry(mask=mask, skeleton_contour=sc, skeleton_distance=raw, regression=reg, field=field)


def width_scatter(geometry):
    """Rows of (rank, radius, fitted) for the sorted contour radii."""
    sc = geometry.skeleton_contour
    reg = geometry.regression
    radii = np.sort(geometry.skeleton_distance[sc.contour])
    return [
        {"rank": rank, "radius": float(radius), "fitted": reg.k * rank + reg.b}
        for rank, radius in enumerate(radii, start=1)
    ]
