"""Feature extraction: first-order statistics and gray-level texture features.

Six method chains turn an A-scan into a fixed-length vector.  The 1-D chains
summarise a transformed signal with first-order statistics; the 2-D chains
quantize the short-time spectrum magnitude and read co-occurrence or
run-length texture off it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from . import transforms
from .errors import InvalidParameterError
from .radar import AScan

_DEGENERATE_VAR = 1e-24
ENTROPY_BINS = 64

FOS_NAMES = ("mean", "variance", "skewness", "kurtosis", "entropy", "energy")


@dataclass(frozen=True)
class FOSFeatures:
    """First-order statistics of a value distribution.

    Population moments; skewness and excess kurtosis are defined as 0 for
    (near-)constant input, entropy is Shannon entropy (natural log) of a
    64-bin equal-width histogram over [min, max].
    """

    mean: float
    variance: float
    skewness: float
    kurtosis: float
    entropy: float
    energy: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.mean, self.variance, self.skewness, self.kurtosis,
             self.entropy, self.energy]
        )


def fos(x) -> FOSFeatures:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot summarise an empty vector")
    mean = float(np.mean(x))
    centred = x - mean
    m2 = float(np.mean(centred**2))
    if m2 < _DEGENERATE_VAR:
        skew = 0.0
        kurt = 0.0
    else:
        skew = float(np.mean(centred**3)) / m2**1.5
        kurt = float(np.mean(centred**4)) / m2**2 - 3.0
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi - lo < _DEGENERATE_VAR:
        entropy = 0.0
    else:
        hist, _ = np.histogram(x, bins=ENTROPY_BINS, range=(lo, hi))
        p = hist[hist > 0] / x.size
        entropy = float(-np.sum(p * np.log(p)))
    energy = float(np.sum(x**2))
    return FOSFeatures(mean, m2, skew, kurt, entropy, energy)


@dataclass(frozen=True)
class GrayImage:
    """Integer image with values in [0, gray_levels)."""

    pixels: np.ndarray
    gray_levels: int


def quantize(m, gray_levels: int = 16) -> GrayImage:
    """dB-scale a non-negative matrix, then map [min, max] to 0..G-1.

    A constant matrix maps to all zeros; otherwise the maximum element always
    lands on G-1.
    """
    if gray_levels < 2:
        raise InvalidParameterError("need at least 2 gray levels")
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise InvalidParameterError("matrix entries must be finite")
    if np.any(m < 0):
        raise InvalidParameterError("dB quantization expects non-negative magnitudes")
    db = 20.0 * np.log10(m + 1e-12)
    lo, hi = db.min(), db.max()
    if hi - lo < 1e-12:
        pixels = np.zeros(m.shape, dtype=np.int64)
    else:
        pixels = np.floor((db - lo) / (hi - lo) * gray_levels).astype(np.int64)
        pixels = np.clip(pixels, 0, gray_levels - 1)
    return GrayImage(pixels, gray_levels)


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Symmetrically accumulated gray-level pair histogram at one offset."""

    counts: np.ndarray  # (G, G), normalised to sum 1
    offset: Tuple[int, int]  # (dy, dx)
    normalized: bool


# offsets at distance 1 for the four standard angles
GLCM_ANGLES = (0, 45, 90, 135)
ANGLE_OFFSETS = {0: (0, 1), 45: (-1, 1), 90: (-1, 0), 135: (-1, -1)}


def glcm(img: GrayImage, offset: Tuple[int, int]) -> CooccurrenceMatrix:
    """Co-occurrence counts for one offset, counted in both orders, normalised."""
    dy, dx = int(offset[0]), int(offset[1])
    if (dy, dx) == (0, 0):
        raise InvalidParameterError("offset (0, 0) is not a neighbour relation")
    rows, cols = img.pixels.shape
    r0, r1 = max(0, -dy), rows - max(0, dy)
    c0, c1 = max(0, -dx), cols - max(0, dx)
    if r1 <= r0 or c1 <= c0:
        raise InvalidParameterError(
            f"offset {(dy, dx)} does not fit inside a {rows}x{cols} image"
        )
    a = img.pixels[r0:r1, c0:c1].ravel()
    b = img.pixels[r0 + dy : r1 + dy, c0 + dx : c1 + dx].ravel()
    g = img.gray_levels
    counts = np.zeros((g, g), dtype=float)
    np.add.at(counts, (a, b), 1.0)
    counts = counts + counts.T
    counts /= counts.sum()
    return CooccurrenceMatrix(counts, (dy, dx), normalized=True)


GLCM_FEATURE_NAMES = (
    "contrast",
    "correlation",
    "energy",
    "homogeneity",
    "entropy",
    "dissimilarity",
)


def glcm_features(c: CooccurrenceMatrix) -> np.ndarray:
    """Haralick-style subset: contrast, correlation, angular second moment
    (energy), homogeneity, entropy, dissimilarity."""
    if not c.normalized or abs(c.counts.sum() - 1.0) > 1e-9:
        raise InvalidParameterError("co-occurrence matrix must be normalised")
    p = c.counts
    g = p.shape[0]
    i, j = np.indices((g, g))
    diff = i - j
    contrast = float(np.sum(p * diff**2))
    dissimilarity = float(np.sum(p * np.abs(diff)))
    energy = float(np.sum(p**2))
    homogeneity = float(np.sum(p / (1.0 + diff**2)))
    nonzero = p[p > 0]
    entropy = float(-np.sum(nonzero * np.log(nonzero)))
    pi = p.sum(axis=1)
    mu_i = float(np.sum(np.arange(g) * pi))
    var_i = float(np.sum((np.arange(g) - mu_i) ** 2 * pi))
    pj = p.sum(axis=0)
    mu_j = float(np.sum(np.arange(g) * pj))
    var_j = float(np.sum((np.arange(g) - mu_j) ** 2 * pj))
    if var_i < _DEGENERATE_VAR or var_j < _DEGENERATE_VAR:
        correlation = 0.0
    else:
        correlation = float(
            np.sum((i - mu_i) * (j - mu_j) * p) / np.sqrt(var_i * var_j)
        )
    return np.array(
        [contrast, correlation, energy, homogeneity, entropy, dissimilarity]
    )


@dataclass(frozen=True)
class RunLengthMatrix:
    """counts[g, l-1] = number of maximal runs of gray g with length l."""

    counts: np.ndarray  # (G, Lmax) integer
    direction: int  # degrees: 0, 45, 90 or 135


GLRLM_DIRECTIONS = (0, 45, 90, 135)


def _scan_lines(pixels: np.ndarray, direction: int) -> List[np.ndarray]:
    rows, cols = pixels.shape
    if direction == 0:
        return [pixels[r, :] for r in range(rows)]
    if direction == 90:
        return [pixels[:, c] for c in range(cols)]
    if direction == 45:
        flipped = np.fliplr(pixels)
        return [np.diagonal(flipped, k) for k in range(-(rows - 1), cols)]
    if direction == 135:
        return [np.diagonal(pixels, k) for k in range(-(rows - 1), cols)]
    raise InvalidParameterError(f"direction must be one of {GLRLM_DIRECTIONS}")


def glrlm(img: GrayImage, direction: int) -> RunLengthMatrix:
    """Maximal-run decomposition of every scan line in one direction."""
    rows, cols = img.pixels.shape
    max_len = max(rows, cols)
    counts = np.zeros((img.gray_levels, max_len), dtype=np.int64)
    for line in _scan_lines(img.pixels, int(direction)):
        if line.size == 0:
            continue
        breaks = np.flatnonzero(np.diff(line)) + 1
        starts = np.concatenate(([0], breaks))
        ends = np.concatenate((breaks, [line.size]))
        for s, e in zip(starts, ends):
            counts[line[s], e - s - 1] += 1
    return RunLengthMatrix(counts, int(direction))


GLRLM_FEATURE_NAMES = (
    "SRE", "LRE", "GLN", "RLN", "RP",
    "LGRE", "HGRE", "SRLGE", "SRHGE", "LRLGE", "LRHGE",
)


def glrlm_features(r: RunLengthMatrix, n_pixels: int) -> np.ndarray:
    """The 11 standard run-length features; gray levels weighted from 1."""
    if n_pixels <= 0:
        raise ValueError("n_pixels must be positive")
    counts = r.counts.astype(float)
    n_runs = counts.sum()
    if n_runs == 0:
        raise ValueError("run-length matrix holds no runs")
    g_idx, l_idx = np.indices(counts.shape)
    gray = (g_idx + 1).astype(float)  # 1-based gray weighting
    length = (l_idx + 1).astype(float)
    sre = np.sum(counts / length**2) / n_runs
    lre = np.sum(counts * length**2) / n_runs
    gln = np.sum(counts.sum(axis=1) ** 2) / n_runs
    rln = np.sum(counts.sum(axis=0) ** 2) / n_runs
    rp = n_runs / float(n_pixels)
    lgre = np.sum(counts / gray**2) / n_runs
    hgre = np.sum(counts * gray**2) / n_runs
    srlge = np.sum(counts / (gray**2 * length**2)) / n_runs
    srhge = np.sum(counts * gray**2 / length**2) / n_runs
    lrlge = np.sum(counts * length**2 / gray**2) / n_runs
    lrhge = np.sum(counts * gray**2 * length**2) / n_runs
    return np.array(
        [sre, lre, gln, rln, rp, lgre, hgre, srlge, srhge, lrlge, lrhge]
    )


METHOD_TAGS = ("FOS", "FFT+FOS", "DCT+FOS", "DWT+FOS", "STFT+GLCM", "STFT+GLRLM")


@dataclass(frozen=True)
class FeatureParams:
    """Knobs shared by the extraction chains."""

    gray_levels: int = 16
    stft_window_len: int = 64
    stft_hop: int = 32
    stft_fft_len: int = 64
    dwt_wavelet: str = "db4"
    dwt_levels: int = 4


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    method_tag: str

    @property
    def dim(self) -> int:
        return int(self.values.size)


def method_dim(method_tag: str, params: FeatureParams = FeatureParams()) -> int:
    """Feature dimension contract per chain under the given parameters."""
    return {
        "FOS": 6,
        "FFT+FOS": 6,
        "DCT+FOS": 6,
        "DWT+FOS": 6 * (params.dwt_levels + 1),
        "STFT+GLCM": 6 * len(GLCM_ANGLES),
        "STFT+GLRLM": 11 * len(GLRLM_DIRECTIONS),
    }[method_tag]


def _stft_image(mag: np.ndarray, params: FeatureParams) -> GrayImage:
    spec = transforms.stft(
        mag,
        window_len=params.stft_window_len,
        hop=params.stft_hop,
        fft_len=params.stft_fft_len,
    )
    return quantize(transforms.magnitude(spec.frames), params.gray_levels)


def extract(
    ascan: AScan, method_tag: str, params: FeatureParams = FeatureParams()
) -> FeatureVector:
    """Run one method chain on an A-scan.

    Real-valued chains operate on the magnitude sequence of the complex
    sweep; the FFT chain transforms the complex samples directly.
    """
    if method_tag not in METHOD_TAGS:
        raise InvalidParameterError(
            f"unknown method {method_tag!r}; available: {METHOD_TAGS}"
        )
    mag = np.abs(ascan.samples)
    if method_tag == "FOS":
        values = fos(mag).as_array()
    elif method_tag == "FFT+FOS":
        values = fos(np.abs(transforms.fft(ascan.samples).values)).as_array()
    elif method_tag == "DCT+FOS":
        values = fos(transforms.dct(mag)).as_array()
    elif method_tag == "DWT+FOS":
        subbands = transforms.dwt_multilevel(
            mag, params.dwt_levels, params.dwt_wavelet
        )
        values = np.concatenate([fos(band).as_array() for band in subbands.bands()])
    elif method_tag == "STFT+GLCM":
        img = _stft_image(mag, params)
        values = np.concatenate(
            [glcm_features(glcm(img, ANGLE_OFFSETS[a])) for a in GLCM_ANGLES]
        )
    else:  # STFT+GLRLM
        img = _stft_image(mag, params)
        n_pixels = img.pixels.size
        values = np.concatenate(
            [glrlm_features(glrlm(img, d), n_pixels) for d in GLRLM_DIRECTIONS]
        )
    return FeatureVector(values, method_tag)


def extract_matrix(
    ascans: Sequence[AScan], method_tag: str, params: FeatureParams = FeatureParams()
) -> Tuple[np.ndarray, np.ndarray]:
    """Stack per-scan feature vectors into (X, labels)."""
    if len(ascans) == 0:
        raise ValueError("no A-scans to extract from")
    X = np.vstack([extract(a, method_tag, params).values for a in ascans])
    y = np.array([int(a.label) for a in ascans], dtype=np.int64)
    return X, y


def export_features_csv(path, ascans, method_tag, params=FeatureParams()) -> None:
    """Feature CSV: method_tag, label, f_0..f_{d-1} per row."""
    X, y = extract_matrix(ascans, method_tag, params)
    header = ["method_tag", "label"] + [f"f_{i}" for i in range(X.shape[1])]
    lines = [",".join(header)]
    for label, row in zip(y, X):
        lines.append(
            ",".join([method_tag, str(int(label))] + [repr(float(v)) for v in row])
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
