"""Datasets: paired MS/HS samples, spectral degradation, CSV I/O, synthetic scenes.

All feature matrices are stored column-per-sample (bands x pixels). Labels are
1-based dense integers; one-hot rows are 0-indexed internally.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError

_FWHM_TO_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))  # ~2.3548


def _as_matrix(a, name):
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} contains non-finite values")
    return m


@dataclass(frozen=True)
class SpectralCube:
    """Pixel spectra (bands x pixels) with per-band center wavelengths in nm."""

    samples: np.ndarray
    band_centers: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_matrix(self.samples, "samples"))
        centers = np.asarray(self.band_centers, dtype=float)
        object.__setattr__(self, "band_centers", centers)
        d, n = self.samples.shape
        if d < 1 or n < 1:
            raise ValidationError("cube must have at least one band and one pixel")
        if centers.shape != (d,):
            raise ValidationError(
                f"band_centers length {centers.shape} does not match {d} bands"
            )
        if d > 1 and not np.all(np.diff(centers) > 0):
            raise ValidationError("band_centers must be strictly increasing")

    @property
    def num_bands(self):
        return self.samples.shape[0]

    @property
    def num_pixels(self):
        return self.samples.shape[1]


@dataclass(frozen=True)
class SrfBank:
    """Spectral response filters, one row per output (MS) band; rows sum to 1."""

    filters: np.ndarray

    def __post_init__(self):
        f = _as_matrix(self.filters, "filters")
        if np.any(f < 0):
            raise ValidationError("SRF weights must be nonnegative")
        sums = f.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValidationError("every SRF row must sum to 1")
        object.__setattr__(self, "filters", f)

    @property
    def num_ms_bands(self):
        return self.filters.shape[0]

    @property
    def num_hs_bands(self):
        return self.filters.shape[1]


def onehot_encode(labels, num_classes):
    """Return a num_classes x N one-hot matrix for 1-based labels."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ValidationError("labels must be a nonempty 1-D sequence")
    for i, lab in enumerate(labels):
        if int(lab) != lab or not (1 <= lab <= num_classes):
            raise ValidationError(
                f"label {lab} at index {i} outside [1..{num_classes}]"
            )
    labels = labels.astype(int)
    out = np.zeros((num_classes, labels.size))
    out[labels - 1, np.arange(labels.size)] = 1.0
    return out


@dataclass(frozen=True)
class PairedDataset:
    """Aligned MS/HS feature blocks with shared labels."""

    ms: np.ndarray
    hs: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        ms = _as_matrix(self.ms, "ms")
        hs = _as_matrix(self.hs, "hs")
        labels = np.asarray(self.labels, dtype=int)
        if ms.shape[1] != hs.shape[1]:
            raise ValidationError(
                f"ms has {ms.shape[1]} columns but hs has {hs.shape[1]}"
            )
        if labels.shape != (ms.shape[1],):
            raise ValidationError("labels length must equal the sample count")
        present = np.unique(labels)
        expected = np.arange(1, self.num_classes + 1)
        if not np.array_equal(present, expected):
            raise ValidationError(
                f"every class in [1..{self.num_classes}] must appear; got {present.tolist()}"
            )
        object.__setattr__(self, "ms", ms)
        object.__setattr__(self, "hs", hs)
        object.__setattr__(self, "labels", labels)

    @property
    def num_samples(self):
        return self.ms.shape[1]

    @property
    def onehot(self):
        return onehot_encode(self.labels, self.num_classes)


@dataclass(frozen=True)
class StackedSystem:
    """Block-diagonal stacked features and duplicated one-hot targets."""

    xtilde: np.ndarray
    ytilde: np.ndarray
    d_m: int
    d_h: int

    @property
    def num_pairs(self):
        return self.xtilde.shape[1] // 2


def stack_system(ds: PairedDataset) -> StackedSystem:
    """Place ms and hs on the diagonal of a (d_M+d_H) x 2N block matrix."""
    d_m, n = ds.ms.shape
    d_h = ds.hs.shape[0]
    xtilde = np.zeros((d_m + d_h, 2 * n))
    xtilde[:d_m, :n] = ds.ms
    xtilde[d_m:, n:] = ds.hs
    onehot = ds.onehot
    ytilde = np.hstack([onehot, onehot])
    return StackedSystem(xtilde=xtilde, ytilde=ytilde, d_m=d_m, d_h=d_h)


def simulate_ms(hs: SpectralCube, srf: SrfBank) -> SpectralCube:
    """Degrade a hyperspectral cube to multispectral by applying SRF filters."""
    if srf.num_hs_bands != hs.num_bands:
        raise ValidationError(
            f"SRF expects {srf.num_hs_bands} input bands, cube has {hs.num_bands}"
        )
    samples = srf.filters @ hs.samples
    centers = srf.filters @ hs.band_centers
    return SpectralCube(samples=samples, band_centers=centers)


def build_gaussian_srf(ms_centers, hs_centers, fwhm) -> SrfBank:
    """Gaussian band responses centered on ms_centers, normalized per row."""
    if fwhm <= 0:
        raise ValidationError(f"fwhm must be positive, got {fwhm}")
    ms_centers = np.asarray(ms_centers, dtype=float)
    hs_centers = np.asarray(hs_centers, dtype=float)
    if ms_centers.size == 0 or hs_centers.size == 0:
        raise ValidationError("center lists must be nonempty")
    if np.any(np.diff(ms_centers) <= 0) or np.any(np.diff(hs_centers) <= 0):
        raise ValidationError("center lists must be strictly increasing")
    sigma = fwhm / _FWHM_TO_SIGMA
    diff = hs_centers[None, :] - ms_centers[:, None]
    weights = np.exp(-(diff**2) / (2.0 * sigma**2))
    weights /= weights.sum(axis=1, keepdims=True)
    return SrfBank(filters=weights)


# ---------------------------------------------------------------------------
# CSV I/O. Format: header band_1..band_d[,label], one pixel per row.
# ---------------------------------------------------------------------------


def save_csv(path, samples, labels=None):
    """Write a bands x pixels matrix (one pixel per row) at full precision."""
    samples = _as_matrix(samples, "samples")
    d, n = samples.shape
    if labels is not None:
        labels = np.asarray(labels, dtype=int)
        if labels.shape != (n,):
            raise ValidationError("labels length must match the pixel count")
    header = ",".join(f"band_{i + 1}" for i in range(d))
    if labels is not None:
        header += ",label"
    lines = [header]
    for j in range(n):
        row = ",".join(repr(float(v)) for v in samples[:, j])
        if labels is not None:
            row += f",{labels[j]}"
        lines.append(row)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path):
    """Read a feature CSV; returns (samples d x N, labels or None)."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = [line.rstrip("\n") for line in fh]
    raw = [line for line in raw if line.strip() != ""]
    if not raw:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in raw[0].split(",")]
    has_label = header and header[-1] == "label"
    band_cols = header[:-1] if has_label else header
    expected = [f"band_{i + 1}" for i in range(len(band_cols))]
    if not band_cols or band_cols != expected:
        raise ParseError(f"{path}: header must be band_1..band_d[,label]", line=1)
    d = len(band_cols)
    width = d + (1 if has_label else 0)
    cols = []
    labels = []
    for lineno, line in enumerate(raw[1:], start=2):
        cells = line.split(",")
        if len(cells) != width:
            raise ParseError(
                f"{path}: expected {width} values, found {len(cells)}", line=lineno
            )
        try:
            values = [float(c) for c in cells[:d]]
        except ValueError:
            raise ParseError(f"{path}: non-numeric cell", line=lineno) from None
        cols.append(values)
        if has_label:
            try:
                labels.append(int(cells[d]))
            except ValueError:
                raise ParseError(f"{path}: non-integer label", line=lineno) from None
    if not cols:
        raise ParseError(f"{path}: no data rows", line=1)
    samples = np.asarray(cols, dtype=float).T
    return samples, (np.asarray(labels, dtype=int) if has_label else None)


def load_labels_csv(path):
    """Read a single-column label CSV (header `label`)."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = [line.strip() for line in fh if line.strip() != ""]
    if not raw or raw[0] != "label":
        raise ParseError(f"{path}: expected a single `label` header", line=1)
    try:
        return np.asarray([int(v) for v in raw[1:]], dtype=int)
    except ValueError:
        raise ParseError(f"{path}: non-integer label") from None


def load_srf_csv(path) -> SrfBank:
    """Read a headerless d_M x d_H SRF weight table."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = [line.strip() for line in fh if line.strip() != ""]
    rows = []
    for lineno, line in enumerate(raw, start=1):
        try:
            rows.append([float(c) for c in line.split(",")])
        except ValueError:
            raise ParseError(f"{path}: non-numeric cell", line=lineno) from None
        if len(rows[-1]) != len(rows[0]):
            raise ParseError(f"{path}: ragged row", line=lineno)
    if not rows:
        raise ParseError(f"{path}: empty file")
    return SrfBank(filters=np.asarray(rows, dtype=float))


def save_srf_csv(path, srf: SrfBank):
    with open(path, "w", encoding="utf-8") as fh:
        for row in srf.filters:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Synthetic scenes.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassSpec:
    hs_mean: np.ndarray
    size: int


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for a synthetic paired scene; serializable as JSON."""

    classes: tuple
    noise_sigma: float
    ms_centers: np.ndarray
    hs_centers: np.ndarray
    srf_fwhm: float
    test_fraction: float
    seed: int = 0
    brightness_sigma: float = 0.0

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ValidationError("a scene needs at least 2 classes")
        for c in self.classes:
            if c.size <= 0:
                raise ValidationError("class sizes must be positive")
        if self.noise_sigma < 0 or self.brightness_sigma < 0:
            raise ValidationError("noise sigmas must be nonnegative")
        if not (0 < self.test_fraction < 1):
            raise ValidationError("test_fraction must lie in (0, 1)")

    @staticmethod
    def from_json(doc):
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        classes = tuple(
            ClassSpec(hs_mean=np.asarray(c["hs_mean"], dtype=float), size=int(c["size"]))
            for c in doc["classes"]
        )
        return SceneSpec(
            classes=classes,
            noise_sigma=float(doc["noise_sigma"]),
            ms_centers=np.asarray(doc["ms_centers"], dtype=float),
            hs_centers=np.asarray(doc["hs_centers"], dtype=float),
            srf_fwhm=float(doc["srf_fwhm"]),
            test_fraction=float(doc["test_fraction"]),
            seed=int(doc.get("seed", 0)),
            brightness_sigma=float(doc.get("brightness_sigma", 0.0)),
        )

    def to_json(self):
        return json.dumps(
            {
                "classes": [
                    {"hs_mean": list(map(float, c.hs_mean)), "size": c.size}
                    for c in self.classes
                ],
                "noise_sigma": self.noise_sigma,
                "ms_centers": list(map(float, self.ms_centers)),
                "hs_centers": list(map(float, self.hs_centers)),
                "srf_fwhm": self.srf_fwhm,
                "test_fraction": self.test_fraction,
                "seed": self.seed,
                "brightness_sigma": self.brightness_sigma,
            },
            indent=2,
            sort_keys=True,
        )

    @property
    def srf(self) -> SrfBank:
        return build_gaussian_srf(self.ms_centers, self.hs_centers, self.srf_fwhm)


def metamer_hs_mean(base_mean, srf: SrfBank, scale, seed=0, leak=0.0):
    """Derive a second HS mean whose SRF image matches base_mean's.

    The offset lives in the SRF null space (scaled to `scale` in 2-norm); an
    optional `leak` adds a visible-in-MS component for near-metamer pairs.
    """
    from scipy.linalg import null_space

    base_mean = np.asarray(base_mean, dtype=float)
    ns = null_space(srf.filters)
    if ns.shape[1] == 0:
        raise ValidationError("SRF has trivial null space; no metamer exists")
    rng = np.random.default_rng(seed)
    coeff = rng.standard_normal(ns.shape[1])
    direction = ns @ coeff
    direction /= np.linalg.norm(direction)
    offset = scale * direction
    if leak != 0.0:
        visible = rng.standard_normal(base_mean.size)
        # remove the null-space part so `leak` is the exact MS-visible magnitude
        visible -= ns @ (ns.T @ visible)
        visible /= np.linalg.norm(visible)
        offset = offset + leak * visible
    return base_mean + offset


def make_synthetic_scene(spec: SceneSpec, seed=None):
    """Sample a paired training set and an MS-only test set from a SceneSpec.

    Returns (PairedDataset, test_ms: d_M x T matrix, test_labels). Deterministic
    for a fixed seed (defaults to spec.seed).
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    srf = spec.srf
    d_h = len(spec.hs_centers)
    train_hs, train_labels = [], []
    test_hs, test_labels = [], []
    for k, cls in enumerate(spec.classes, start=1):
        if cls.hs_mean.shape != (d_h,):
            raise ValidationError(
                f"class {k} hs_mean length {cls.hs_mean.size} != {d_h} HS bands"
            )
        n_test = int(round(cls.size * spec.test_fraction))
        n_train = cls.size - n_test
        if n_train < 1 or n_test < 1:
            raise ValidationError(
                f"class {k}: size {cls.size} with test_fraction {spec.test_fraction} "
                "leaves an empty split"
            )
        noise = rng.standard_normal((d_h, cls.size)) * spec.noise_sigma
        # per-pixel illumination offset, shared by every band
        brightness = rng.standard_normal(cls.size) * spec.brightness_sigma
        samples = cls.hs_mean[:, None] + noise + brightness[None, :]
        train_hs.append(samples[:, :n_train])
        test_hs.append(samples[:, n_train:])
        train_labels.extend([k] * n_train)
        test_labels.extend([k] * n_test)
    hs = np.hstack(train_hs)
    ds = PairedDataset(
        ms=srf.filters @ hs,
        hs=hs,
        labels=np.asarray(train_labels),
        num_classes=len(spec.classes),
    )
    test_ms = srf.filters @ np.hstack(test_hs)
    return ds, test_ms, np.asarray(test_labels)
