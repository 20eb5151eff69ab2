"""Deterministic signal transforms feeding the feature extractors.

FFT and DCT delegate to numpy/scipy; the multilevel wavelet filterbank and
the short-time Fourier transform are implemented here so subband lengths,
boundary handling and framing are pinned down exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import scipy.fft

from .errors import DimensionMismatchError


@dataclass(frozen=True)
class Spectrum:
    """Unnormalised forward DFT values."""

    values: np.ndarray


@dataclass(frozen=True)
class SubbandSet:
    """Multilevel wavelet decomposition.

    approx holds the deepest low-pass band; details are ordered level 1
    (finest) .. levels (coarsest).  The transform is expansive: each level
    keeps floor((n + filter_len - 1) / 2) coefficients per band, so boundary
    padding may add samples relative to the input length.
    """

    approx: np.ndarray
    details: List[np.ndarray]
    levels: int
    wavelet_id: str

    def bands(self) -> List[np.ndarray]:
        """All subbands, deepest approximation first, then details level 1..L."""
        return [self.approx] + list(self.details)


@dataclass(frozen=True)
class STFTMatrix:
    """One-sided short-time spectra, shape (fft_len // 2 + 1, n_frames)."""

    frames: np.ndarray
    window_len: int
    hop: int
    fft_len: int


def fft(signal) -> Spectrum:
    """Standard unnormalised forward DFT of a (possibly complex) vector."""
    x = np.asarray(signal)
    if x.size == 0:
        raise ValueError("cannot transform an empty signal")
    return Spectrum(np.fft.fft(x))


def dct(signal) -> np.ndarray:
    """Orthonormal DCT-II coefficients of a real vector."""
    x = np.asarray(signal, dtype=float)
    if x.size == 0:
        raise ValueError("cannot transform an empty signal")
    return scipy.fft.dct(x, type=2, norm="ortho")


def idct(coeffs) -> np.ndarray:
    """Inverse of :func:`dct` (orthonormal DCT-III)."""
    return scipy.fft.idct(np.asarray(coeffs, dtype=float), type=2, norm="ortho")


# scaling (reconstruction low-pass) filters; sum = sqrt(2), energy = 1
WAVELETS = {
    "haar": np.array([0.7071067811865476, 0.7071067811865476]),
    "db2": np.array(
        [
            0.48296291314469025,
            0.8365163037378079,
            0.22414386804185735,
            -0.12940952255092145,
        ]
    ),
    "db4": np.array(
        [
            0.23037781330885523,
            0.7148465705525415,
            0.6308807679295904,
            -0.02798376941698385,
            -0.18703481171888114,
            0.030841381835986965,
            0.032883011666982945,
            -0.010597401784997278,
        ]
    ),
}


def _filters(wavelet_id: str) -> Tuple[np.ndarray, np.ndarray]:
    """Low-pass scaling filter and its quadrature-mirror high-pass mate."""
    try:
        lo = WAVELETS[wavelet_id]
    except KeyError:
        raise ValueError(
            f"unknown wavelet {wavelet_id!r}; available: {sorted(WAVELETS)}"
        ) from None
    n = np.arange(lo.size)
    hi = (-1.0) ** n * lo[::-1]
    return lo, hi


def _symmetric_extend(x: np.ndarray, pad: int) -> np.ndarray:
    """Half-sample symmetric extension by ``pad`` samples on each side."""
    left = x[pad - 1 :: -1] if pad > 0 else x[:0]
    right = x[: -pad - 1 : -1] if pad > 0 else x[:0]
    return np.concatenate([left, x, right])


def dwt_single(x: np.ndarray, wavelet_id: str) -> Tuple[np.ndarray, np.ndarray]:
    """One analysis level: symmetric extension, filtering, downsample by 2."""
    lo, hi = _filters(wavelet_id)
    filt_len = lo.size
    if x.size < filt_len:
        raise ValueError(
            f"signal of length {x.size} is shorter than the {filt_len}-tap filter"
        )
    ext = _symmetric_extend(np.asarray(x, dtype=float), filt_len - 1)
    approx = np.correlate(ext, lo, mode="valid")[1::2]
    detail = np.correlate(ext, hi, mode="valid")[1::2]
    return approx, detail


def idwt_single(
    approx: np.ndarray, detail: np.ndarray, wavelet_id: str, out_len: int
) -> np.ndarray:
    """One synthesis level: upsample, filter, overlap-add, trim to out_len."""
    lo, hi = _filters(wavelet_id)
    if approx.size != detail.size:
        raise DimensionMismatchError("approx/detail lengths differ")
    pad = lo.size - 1
    up = np.zeros(2 * approx.size)
    up[1::2] = approx
    recon = np.convolve(up, lo, mode="full")
    up[1::2] = detail
    recon = recon + np.convolve(up, hi, mode="full")
    if pad + out_len > recon.size:
        raise DimensionMismatchError(
            f"cannot reconstruct {out_len} samples from {approx.size} coefficients"
        )
    return recon[pad : pad + out_len]


def dwt_multilevel(signal, levels: int, wavelet_id: str = "db4") -> SubbandSet:
    """Cascade the analysis filterbank ``levels`` times on the running approximation."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    x = np.asarray(signal, dtype=float)
    filt_len = _filters(wavelet_id)[0].size
    details: List[np.ndarray] = []
    for level in range(levels):
        if x.size < filt_len:
            raise ValueError(
                f"signal too short for level {level + 1}: {x.size} samples, "
                f"{filt_len}-tap filter"
            )
        x, detail = dwt_single(x, wavelet_id)
        details.append(detail)
    return SubbandSet(approx=x, details=details, levels=levels, wavelet_id=wavelet_id)


def subband_lengths(n: int, levels: int, wavelet_id: str) -> List[int]:
    """Length at each cascade stage: [n, len_1, ..., len_levels]."""
    filt_len = _filters(wavelet_id)[0].size
    lens = [int(n)]
    for _ in range(levels):
        lens.append((lens[-1] + filt_len - 1) // 2)
    return lens


def idwt_multilevel(subbands: SubbandSet, original_length: int) -> np.ndarray:
    """Invert :func:`dwt_multilevel`; needs the original signal length."""
    lens = subband_lengths(original_length, subbands.levels, subbands.wavelet_id)
    for level, detail in enumerate(subbands.details, start=1):
        if detail.size != lens[level]:
            raise DimensionMismatchError(
                f"detail level {level} has {detail.size} coefficients, "
                f"expected {lens[level]} for input length {original_length}"
            )
    x = subbands.approx
    for level in range(subbands.levels, 0, -1):
        x = idwt_single(
            x, subbands.details[level - 1], subbands.wavelet_id, lens[level - 1]
        )
    return x


def stft(signal, window_len: int = 64, hop: int = 32, fft_len: int = 64) -> STFTMatrix:
    """Hamming-windowed, hopped, zero-padded one-sided DFT frames."""
    x = np.asarray(signal, dtype=float)
    if window_len > x.size:
        raise ValueError(f"window_len {window_len} exceeds signal length {x.size}")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    if fft_len < window_len:
        raise ValueError("fft_len must be >= window_len")
    n_frames = (x.size - window_len) // hop + 1
    window = np.hamming(window_len)
    frames = np.empty((fft_len // 2 + 1, n_frames), dtype=complex)
    for t in range(n_frames):
        seg = x[t * hop : t * hop + window_len] * window
        frames[:, t] = np.fft.rfft(seg, n=fft_len)
    return STFTMatrix(frames, window_len=window_len, hop=hop, fft_len=fft_len)


def magnitude(m) -> np.ndarray:
    """Element-wise modulus of a complex matrix."""
    return np.abs(np.asarray(m))
