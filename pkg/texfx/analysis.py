"""Partition-based reliability study of colour and patch scale in a text effect."""

from dataclasses import dataclass, field

import click
import numpy as np
from scipy.special import expit

from .config import (
    CLASSIFIER_EPOCHS,
    CLASSIFIER_L2,
    CLASSIFIER_LEARNING_RATE,
    CLASSIFIER_TOLERANCE,
    DEFAULT_PARTITIONS,
    DEFAULT_PATCH_SIZES,
    MAX_PARTITION_SAMPLES,
    PARTITION_MODES,
)
from .errors import EmptyPartitionError, SizeMismatchError
from .imagecore import to_luma
from .scalestats import self_match
from .textgeometry import analyze_text


@dataclass(frozen=True, eq=False)
class PartitionMap:
    mode: str
    n: int
    labels: np.ndarray

    def counts(self):
        return np.bincount(self.labels.ravel(), minlength=self.n)


@dataclass(frozen=True, eq=False)
class ResponseCurves:
    """Mean and std of best self-match distance per (partition, patch size)."""

    patch_sizes: tuple
    means: np.ndarray
    stds: np.ndarray
    counts: np.ndarray


@dataclass
class ModeReport:
    mode: str
    r_color: float
    epsilon: float
    r_scale: float
    sigma_inter: float
    sigma_intra: float
    curves: ResponseCurves

    def to_dict(self):
        rows = []
        for i in range(self.curves.means.shape[0]):
            for j, size in enumerate(self.curves.patch_sizes):
                rows.append({
                    "partition": i,
                    "patch_size": int(size),
                    "mean": float(self.curves.means[i, j]),
                    "std": float(self.curves.stds[i, j]),
                    "count": int(self.curves.counts[i, j]),
                })
        return {
            "mode": self.mode,
            "r_color": self.r_color,
            "epsilon": self.epsilon,
            "r_scale": self.r_scale,
            "sigma_inter": self.sigma_inter,
            "sigma_intra": self.sigma_intra,
            "curves": rows,
        }


@dataclass
class ReliabilityReport:
    image: str
    modes: list = field(default_factory=list)

    def to_dict(self):
        return {"image": self.image, "modes": [m.to_dict() for m in self.modes]}

    def by_mode(self):
        return {m.mode: m for m in self.modes}


class OneVsRestLogistic:
    """
    Linear one-vs-rest logistic classifier trained by full-batch gradient descent.

    Features are standardized with the training mean and std; L2
    regularization applies to the weights, not the biases. Training stops
    when the gradient norm drops below `tolerance` or after `epochs`.
    """

    def __init__(self, learning_rate=CLASSIFIER_LEARNING_RATE, l2=CLASSIFIER_L2,
                 tolerance=CLASSIFIER_TOLERANCE, epochs=CLASSIFIER_EPOCHS):
        self.learning_rate = learning_rate
        self.l2 = l2
        self.tolerance = tolerance
        self.epochs = epochs
        self.classes = None
        self.weights = None
        self.bias = None
        self.mean = None
        self.scale = None
        self.epochs_run = 0

    def _standardize(self, X):
        return (X - self.mean) / self.scale

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes = np.unique(y)
        self.mean = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale = np.where(scale > 0, scale, 1.0)
        Z = self._standardize(X)

        n, d = Z.shape
        targets = (y[:, None] == self.classes[None, :]).astype(np.float64)
        self.weights = np.zeros((d, len(self.classes)))
        self.bias = np.zeros(len(self.classes))

        for epoch in range(self.epochs):
            error = expit(Z @ self.weights + self.bias) - targets
            grad_w = Z.T @ error / n + self.l2 * self.weights
            grad_b = error.mean(axis=0)
            if np.sqrt(np.sum(grad_w ** 2) + np.sum(grad_b ** 2)) < self.tolerance:
                break
            self.weights -= self.learning_rate * grad_w
            self.bias -= self.learning_rate * grad_b
        self.epochs_run = epoch + 1
        return self

    def decision_function(self, X):
        return self._standardize(np.asarray(X, dtype=np.float64)) @ self.weights + self.bias

    def predict(self, X):
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def _labels_from_scalar(scalar, n):
    flat = np.asarray(scalar, dtype=np.float64).ravel()
    order = np.argsort(flat, kind="stable")
    labels = np.empty(flat.size, dtype=np.int64)
    labels[order] = (np.arange(flat.size) * n) // flat.size
    return labels.reshape(np.shape(scalar))


def make_partition(mode, shape, distance_field=None, n=DEFAULT_PARTITIONS, seed=0):
    """
    Split the pixels of an image into n equal-population classes.

    Every mode ranks pixels by one scalar (random: a seeded permutation,
    grid: cell index of a near-square grid, angle / ring: polar angle /
    radius about the image centre, distance: normalized skeleton distance)
    and cuts the ranking into n blocks.
    """
    if mode not in PARTITION_MODES:
        raise ValueError(f"Unknown partition mode: {mode}")
    if n < 2:
        raise ValueError(f"Partition count must be >= 2, got {n}")
    height, width = shape[:2]
    if n > height * width:
        raise ValueError(f"Cannot split {height * width} pixels into {n} partitions")

    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0

    if mode == "random":
        rng = np.random.default_rng(seed)
        scalar = rng.permutation(height * width).reshape(height, width)
    elif mode == "grid":
        cols = int(np.ceil(np.sqrt(n)))
        rows = int(np.ceil(n / cols))
        band_y = np.floor(ys * rows / height)
        band_x = np.floor(xs * cols / width)
        scalar = band_y * cols + band_x
    elif mode == "angle":
        scalar = np.arctan2(ys - cy, xs - cx)
    elif mode == "ring":
        scalar = np.hypot(ys - cy, xs - cx)
    else:
        if distance_field is None:
            raise ValueError("Distance partition needs a distance field")
        if distance_field.dist.shape != (height, width):
            raise SizeMismatchError(
                f"Distance field {distance_field.dist.shape} does not match image {(height, width)}"
            )
        scalar = distance_field.dist

    return PartitionMap(mode=mode, n=n, labels=_labels_from_scalar(scalar, n))


def color_reliability(partition, style_img):
    """Fit a linear colour -> label classifier; returns (1 - training error, training error)."""
    if partition.labels.shape != (style_img.height, style_img.width):
        raise SizeMismatchError(
            f"Partition {partition.labels.shape} does not match image {style_img.width}x{style_img.height}"
        )
    X = style_img.data.reshape(-1, style_img.channels)
    y = partition.labels.ravel()
    clf = OneVsRestLogistic().fit(X, y)
    epsilon = float(np.mean(clf.predict(X) != y))
    return 1.0 - epsilon, epsilon


def scale_response_curves(partition, text_img, style_img, patch_sizes=DEFAULT_PATCH_SIZES,
                          samples=MAX_PARTITION_SAMPLES, seed=0):
    """
    Best same-image match distance statistics for each partition and patch size.

    At most `samples` members per partition are matched, drawn with a
    seeded generator among the members whose patch fits the image.
    """
    rng = np.random.default_rng(seed)
    text = to_luma(text_img)
    height, width = partition.labels.shape
    means = np.zeros((partition.n, len(patch_sizes)))
    stds = np.zeros_like(means)
    counts = np.zeros(means.shape, dtype=np.int64)

    for j, size in enumerate(patch_sizes):
        if size < 3 or size % 2 == 0:
            raise ValueError(f"Patch sizes must be odd and >= 3, got {size}")
        half = size // 2
        valid = np.zeros((height, width), dtype=bool)
        valid[half:height - half, half:width - half] = True

        sampled = []
        for i in range(partition.n):
            members = np.flatnonzero((partition.labels == i) & valid)
            if len(members) > samples:
                members = np.sort(rng.choice(members, size=samples, replace=False))
            sampled.append(members)

        # One matching pass per size over the members of every partition.
        everyone = np.concatenate(sampled)
        dist = np.empty(0)
        if len(everyone):
            qy, qx = np.divmod(everyone, width)
            _, _, dist = self_match(text, style_img, size, queries=(qy, qx))

        start = 0
        for i, members in enumerate(sampled):
            d = dist[start:start + len(members)]
            start += len(members)
            d = d[np.isfinite(d)]
            if len(d) == 0:
                raise EmptyPartitionError(
                    f"Partition {i} of mode '{partition.mode}' has no valid patch centre at size {size}"
                )
            means[i, j] = d.mean()
            stds[i, j] = d.std()
            counts[i, j] = len(d)

    return ResponseCurves(patch_sizes=tuple(patch_sizes), means=means, stds=stds, counts=counts)


def scale_reliability(curves):
    """Ratio of the spread between partition curves to the spread within them."""
    means = np.asarray(curves.means)
    sigma_inter = float(np.mean(means.std(axis=0)))
    sigma_intra = float(np.mean(curves.stds))
    if sigma_intra == 0:
        click.secho("Warning: intra-curve deviation is 0, scale reliability is infinite", fg="yellow", err=True)
        return float("inf"), sigma_inter, sigma_intra
    return sigma_inter / sigma_intra, sigma_inter, sigma_intra


def analyze_image(text_img, style_img, modes=PARTITION_MODES, n_partitions=DEFAULT_PARTITIONS, seed=0,
                  patch_sizes=DEFAULT_PATCH_SIZES, samples=MAX_PARTITION_SAMPLES, geometry=None,
                  name="", verbose=False):
    """Run every requested partition mode over an exemplar pair."""
    if text_img.height != style_img.height or text_img.width != style_img.width:
        raise SizeMismatchError(
            f"Source text {text_img.width}x{text_img.height} and style "
            f"{style_img.width}x{style_img.height} differ in size"
        )
    if geometry is None and "distance" in modes:
        geometry = analyze_text(text_img)

    report = ReliabilityReport(image=name)
    for mode in modes:
        if verbose:
            click.echo(f"  Analyzing {mode} partition...")
        partition = make_partition(
            mode,
            (style_img.height, style_img.width),
            distance_field=geometry.field if geometry is not None else None,
            n=n_partitions,
            seed=seed,
        )
        r_color, epsilon = color_reliability(partition, style_img)
        curves = scale_response_curves(partition, text_img, style_img, patch_sizes, samples, seed)
        r_scale, sigma_inter, sigma_intra = scale_reliability(curves)
        report.modes.append(ModeReport(
            mode=mode,
            r_color=r_color,
            epsilon=epsilon,
            r_scale=r_scale,
            sigma_inter=sigma_inter,
            sigma_intra=sigma_intra,
            curves=curves,
        ))
    return report
