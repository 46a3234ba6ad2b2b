"""Confusion matrices, macro-averaged metrics and a nearest-centroid baseline."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, ShapeMismatchError, UnknownLabelError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray
    classes: tuple

    @property
    def total(self):
        return int(self.counts.sum())

    def normalized(self):
        """Row-normalised view; empty rows stay all-zero."""
        rows = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        out = np.zeros(self.counts.shape, dtype=np.float64)
        np.divide(self.counts, rows, out=out, where=rows > 0)
        return out

    def to_text(self, normalized=True):
        data = self.normalized() if normalized else self.counts
        width = max(6, *(len(c) for c in self.classes))
        lines = ["true\\pred".ljust(width) + "".join(c.rjust(width + 1) for c in self.classes)]
        for label, row in zip(self.classes, data):
            cells = (f"{v:.3f}" if normalized else str(int(v)) for v in row)
            lines.append(label.ljust(width) + "".join(c.rjust(width + 1) for c in cells))
        return "\n".join(lines)

    def to_ppm(self, cell=16):
        """Binary PPM (P6) heat map of the normalised matrix, white = 1."""
        grey = np.round(self.normalized() * 255).astype(np.uint8)
        img = np.kron(grey, np.ones((cell, cell), dtype=np.uint8))
        return encode_ppm(img)


def encode_ppm(grey):
    """Greyscale uint8 array -> binary PPM bytes (grey replicated into RGB)."""
    grey = np.asarray(grey, dtype=np.uint8)
    h, w = grey.shape
    rgb = np.repeat(grey[:, :, np.newaxis], 3, axis=2)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def confusion(y_true, y_pred, classes):
    classes = tuple(classes)
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise InvalidParameterError(f"label sequences differ in length: {len(y_true)} vs {len(y_pred)}")
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        for label in (t, p):
            if label not in index:
                raise UnknownLabelError(f"unknown label {label!r}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts, classes)


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy plus macro-averaged precision, recall and F1.

    Macro averages run over classes that occur in the true or predicted
    labels; absent classes are excluded.
    """

    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: dict
    averaging: str = "macro"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "precision", "recall", "f1"])
        for label, m in self.per_class.items():
            w.writerow([label, repr(m["precision"]), repr(m["recall"]), repr(m["f1"])])
        w.writerow([f"{self.averaging}_avg", repr(self.precision), repr(self.recall), repr(self.f1)])
        w.writerow(["accuracy", repr(self.accuracy), "", ""])
        return buf.getvalue()

    def to_text(self):
        lines = [f"{'class':<10}{'precision':>10}{'recall':>10}{'f1':>10}"]
        for label, m in self.per_class.items():
            lines.append(f"{label:<10}{m['precision']:>10.4f}{m['recall']:>10.4f}{m['f1']:>10.4f}")
        lines.append(f"{self.averaging + ' avg':<10}{self.precision:>10.4f}{self.recall:>10.4f}{self.f1:>10.4f}")
        lines.append(f"accuracy  {self.accuracy:.4f}")
        return "\n".join(lines)


def _ratio(num, den):
    return float(num) / float(den) if den else 0.0


def metrics(cm):
    counts = cm.counts
    if counts.size == 0 or cm.total == 0:
        raise InvalidParameterError("metrics need a non-empty confusion matrix")
    diag = np.diag(counts)
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    per_class = {}
    for i, label in enumerate(cm.classes):
        if rows[i] == 0 and cols[i] == 0:
            continue
        p = _ratio(diag[i], cols[i])
        r = _ratio(diag[i], rows[i])
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        per_class[label] = {"precision": p, "recall": r, "f1": f, "support": int(rows[i])}
    present = list(per_class.values())
    return MetricsReport(
        accuracy=_ratio(diag.sum(), cm.total),
        precision=float(np.mean([m["precision"] for m in present])),
        recall=float(np.mean([m["recall"] for m in present])),
        f1=float(np.mean([m["f1"] for m in present])),
        per_class=per_class,
    )


@dataclass(frozen=True)
class CentroidModel:
    classes: tuple
    mean: np.ndarray
    scale: np.ndarray
    centroids: np.ndarray
    shape: tuple

    def standardize(self, x):
        return (np.asarray(x, dtype=np.float64).ravel() - self.mean) / self.scale


def _as_array(x):
    return np.asarray(getattr(x, "values", x), dtype=np.float64)


def centroid_fit(samples, classes=None):
    """Fit class centroids on per-feature standardised inputs.

    ``samples`` is any iterable of ``(tensor, label)``; it is consumed once
    and only running sums are kept. ``classes`` fixes the tie-break order;
    by default the order of first appearance.
    """
    order = list(classes) if classes is not None else []
    shape = None
    shift = total = total_sq = None
    class_sums = {}
    class_counts = {}
    n = 0
    for tensor, label in samples:
        x = _as_array(tensor)
        if shape is None:
            shape = x.shape
            shift = x.ravel().copy()
            total = np.zeros(x.size)
            total_sq = np.zeros(x.size)
        elif x.shape != shape:
            raise ShapeMismatchError(f"tensor shape {x.shape} differs from {shape}")
        d = x.ravel() - shift
        total += d
        total_sq += d * d
        if label not in class_sums:
            class_sums[label] = np.zeros(x.size)
            class_counts[label] = 0
            if label not in order:
                order.append(label)
        class_sums[label] += d
        class_counts[label] += 1
        n += 1
    if n == 0:
        raise InvalidParameterError("centroid_fit needs at least one sample")
    missing = [c for c in order if c not in class_counts]
    if missing:
        raise InvalidParameterError(f"classes without training samples: {missing}")
    mean_d = total / n
    var = np.maximum(total_sq / n - mean_d**2, 0.0)
    scale = np.sqrt(var)
    # features constant over the training set carry no information
    scale[scale <= 1e-12 * max(1.0, float(np.abs(shift).max()))] = np.inf
    mean = shift + mean_d
    centroids = np.stack([(class_sums[c] / class_counts[c] - mean_d) / scale for c in order])
    return CentroidModel(tuple(order), mean, scale, centroids, tuple(shape))


def centroid_distances(model, tensor):
    x = _as_array(tensor)
    if x.shape != model.shape:
        raise ShapeMismatchError(f"tensor shape {x.shape} differs from model shape {model.shape}")
    z = model.standardize(x)
    return np.sqrt(((model.centroids - z) ** 2).sum(axis=1))


def centroid_predict(model, tensor):
    """Nearest centroid; ``argmin`` returns the first class on ties."""
    return model.classes[int(np.argmin(centroid_distances(model, tensor)))]
