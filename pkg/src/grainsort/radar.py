"""Stepped-frequency CW radar model of grain surfaces inside a model silo.

The silo is viewed from a downward-looking antenna.  A grain surface is
represented as a cloud of point scatterers whose two-way phase at each swept
frequency produces the complex frequency-domain measurement (one A-scan).
Amplitude factors (spreading loss, antenna pattern, reflectivity) are folded
into the per-scatterer amplitude; only the two-way phase is modelled
explicitly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import AliasingError, DimensionMismatchError, InvalidParameterError
from .seeding import record_seed

SPEED_OF_LIGHT = 2.99792458e8

# spawn_key discriminators under one record seed
_SURFACE_KEY = 0
_NOISE_KEY = 1
_JITTER_KEY = 2


class SurfaceClass(enum.IntEnum):
    """The three grain surface conditions left behind by filling/unloading."""

    LEVELLED = 0
    PEAKED_CONE = 1
    INVERTED_CONE = 2


CLASS_NAMES = tuple(c.name.lower() for c in SurfaceClass)


@dataclass(frozen=True)
class RadarParams:
    """Stepped-frequency sweep definition.

    f_start/f_stop in Hz, n_freq sweep points inclusive of both ends.
    """

    f_start: float = 18e9
    f_stop: float = 40e9
    n_freq: int = 301
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not (self.f_stop > self.f_start > 0):
            raise InvalidParameterError(
                f"need f_stop > f_start > 0, got {self.f_start}..{self.f_stop}"
            )
        if self.n_freq < 2:
            raise InvalidParameterError(f"need n_freq >= 2, got {self.n_freq}")
        if self.c <= 0:
            raise InvalidParameterError("propagation speed must be positive")

    @property
    def bandwidth(self) -> float:
        return self.f_stop - self.f_start

    def frequencies(self) -> np.ndarray:
        return np.linspace(self.f_start, self.f_stop, self.n_freq)


def range_resolution(params: RadarParams) -> float:
    """Range bin size dz = c / (2 B)."""
    bw = params.bandwidth
    if bw <= 0:
        raise InvalidParameterError("bandwidth must be positive")
    return params.c / (2.0 * bw)


def max_unambiguous_range(params: RadarParams) -> float:
    """Unambiguous range window N * dz covered by the sweep."""
    return params.n_freq * range_resolution(params)


@dataclass(frozen=True)
class ScattererCloud:
    """Point-scatterer representation of one scene realisation."""

    amplitudes: np.ndarray  # (n,), dimensionless, >= 0
    ranges: np.ndarray  # (n,), metres, > 0
    class_label: SurfaceClass

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=float)
        rng_ = np.asarray(self.ranges, dtype=float)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "ranges", rng_)
        if amp.size == 0 or rng_.size != amp.size:
            raise InvalidParameterError("cloud needs matching, non-empty p/R arrays")
        if np.any(amp < 0) or not np.all(np.isfinite(amp)):
            raise InvalidParameterError("amplitudes must be finite and >= 0")
        if np.any(rng_ <= 0) or not np.all(np.isfinite(rng_)):
            raise InvalidParameterError("ranges must be finite and > 0")

    def __len__(self) -> int:
        return int(self.amplitudes.size)


@dataclass(frozen=True)
class AScan:
    """One frequency-domain backscatter measurement plus its label and provenance."""

    samples: np.ndarray  # complex128, (n_freq,)
    label: SurfaceClass
    seed: int = 0
    snr_db: Optional[float] = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", s)
        if s.ndim != 1 or s.size == 0:
            raise InvalidParameterError("samples must be a non-empty 1-D vector")
        if not np.all(np.isfinite(s.view(np.float64))):
            raise InvalidParameterError("samples must be finite")


@dataclass(frozen=True)
class RangeProfile:
    """Inverse-transformed A-scan; magnitude peaks locate scatterers in range."""

    bins: np.ndarray  # complex, same length as the source A-scan
    bin_spacing: float  # metres per bin (= range resolution)


@dataclass(frozen=True)
class SiloScene:
    """Parametric scene: silo geometry, fill state and surface shape.

    The grain column occupies ranges rim_range (silo top) .. antenna_height
    (silo floor); fill_fraction sets the mean surface depth inside that span.
    cone_height is signed: positive piles up towards the antenna, negative
    digs a crater, zero is a levelled surface.  Shape exponents control the
    radial profile curvature (piles are rounded by avalanching, unloading
    craters are funnel-like), which is what makes the two cone classes more
    than mirror images of each other.
    """

    diameter: float = 0.36
    fill_fraction: float = 0.5
    cone_height: float = 0.16
    antenna_height: float = 1.2
    surface_roughness_sigma: float = 0.0025
    scatterers_per_scene: int = 400
    # silo top (wall rim) range from the antenna; fixed clutter reference
    rim_range: float = 0.24
    # lateral apex wander as a fraction of the silo radius
    apex_offset_fraction: float = 0.15
    # piles round off at the apex (exponent > 1); drainage craters funnel
    # steeply at the axis (exponent < 1)
    peaked_shape_exponent: float = 1.6
    inverted_shape_exponent: float = 0.5
    # avalanche ripples: poured piles carry radial corrugations left by
    # surface avalanches; drained craters are smoother (crater factor < 1)
    ripple_amplitude: float = 0.004
    ripple_wavelength: float = 0.065
    ripple_crater_factor: float = 0.25
    # multipliers on the roughness sigma per formation process, for scenes
    # where pouring and drainage should leave different micro-textures
    pour_roughness_factor: float = 1.0
    drain_roughness_factor: float = 1.0
    wall_clutter: bool = True
    wall_clutter_scatterers: int = 24
    wall_clutter_amplitude: float = 0.5
    contact_clutter_amplitude: float = 1.0
    # dihedral gain: a surface sloping down towards the wall forms an acute
    # corner with it (retro-reflecting groove), a surface rising to the wall
    # an obtuse one; scales the contact-ring return by the wall slope
    dihedral_gain: float = 0.95
    gain_jitter_db: float = 1.5

    def __post_init__(self):
        if self.diameter <= 0:
            raise InvalidParameterError("diameter must be positive")
        if not (0.0 < self.fill_fraction < 1.0):
            raise InvalidParameterError("fill_fraction must be in (0, 1)")
        if self.scatterers_per_scene < 10:
            raise InvalidParameterError("need at least 10 scatterers per scene")
        if not (0.0 < self.rim_range < self.antenna_height):
            raise InvalidParameterError("need 0 < rim_range < antenna_height")
        if self.surface_roughness_sigma < 0:
            raise InvalidParameterError("roughness sigma must be >= 0")
        if self.peaked_shape_exponent <= 0 or self.inverted_shape_exponent <= 0:
            raise InvalidParameterError("shape exponents must be positive")
        if self.ripple_amplitude < 0 or self.ripple_wavelength <= 0:
            raise InvalidParameterError("ripple amplitude >= 0 and wavelength > 0")

    @property
    def mean_surface_range(self) -> float:
        span = self.antenna_height - self.rim_range
        return self.antenna_height - self.fill_fraction * span


def _roughness_sigma(scene: SiloScene, surface_class: SurfaceClass) -> float:
    if surface_class is SurfaceClass.PEAKED_CONE:
        return scene.surface_roughness_sigma * scene.pour_roughness_factor
    if surface_class is SurfaceClass.INVERTED_CONE:
        return scene.surface_roughness_sigma * scene.drain_roughness_factor
    return scene.surface_roughness_sigma


def _wall_slope(scene: SiloScene, surface_class: SurfaceClass) -> float:
    """Surface grade d(depth)/d(radius) where the profile meets the wall.

    Positive means the surface deepens towards the wall (peaked pile, acute
    wall corner); negative means it rises to meet it (crater, obtuse corner).
    """
    h = abs(scene.cone_height)
    if surface_class is SurfaceClass.LEVELLED or h == 0.0:
        return 0.0
    radius = scene.diameter / 2.0
    if surface_class is SurfaceClass.PEAKED_CONE:
        return h * scene.peaked_shape_exponent / radius
    return -h * scene.inverted_shape_exponent / radius


def _surface_depths(
    scene: SiloScene,
    surface_class: SurfaceClass,
    radial: np.ndarray,
    mean_depth: float,
) -> np.ndarray:
    """Depth profile (range from antenna) at normalised radial coordinates.

    radial is the distance from the cone apex in units of the silo radius,
    clipped to [0, 1].  Profiles conserve the mean depth so fill_fraction
    alone fixes the grain volume: for depth = base + h * t**q over an
    area-uniform disk, E[t**q] = 2 / (q + 2).
    """
    h = abs(scene.cone_height)
    if surface_class is SurfaceClass.LEVELLED or h == 0.0:
        return np.full_like(radial, mean_depth)
    t = np.clip(radial, 0.0, 1.0)
    if surface_class is SurfaceClass.PEAKED_CONE:
        q = scene.peaked_shape_exponent
        apex_depth = mean_depth - 2.0 * h / (q + 2.0)
        return apex_depth + h * t**q
    q = scene.inverted_shape_exponent
    crater_depth = mean_depth + 2.0 * h / (q + 2.0)
    return crater_depth - h * t**q


def _ripple(
    scene: SiloScene,
    surface_class: SurfaceClass,
    radial: np.ndarray,
    phase: float,
) -> np.ndarray:
    """Radial corrugation of sloped surfaces; zero on a levelled bed."""
    if (
        surface_class is SurfaceClass.LEVELLED
        or abs(scene.cone_height) == 0.0
        or scene.ripple_amplitude == 0.0
    ):
        return np.zeros_like(radial)
    amp = scene.ripple_amplitude
    if surface_class is SurfaceClass.INVERTED_CONE:
        amp *= scene.ripple_crater_factor
    rho = np.clip(radial, 0.0, 1.0) * (scene.diameter / 2.0)
    return amp * np.cos(2.0 * np.pi * rho / scene.ripple_wavelength + phase)


def synth_surface(
    scene: SiloScene, surface_class: SurfaceClass, seed: int
) -> ScattererCloud:
    """Draw one scatterer-cloud realisation of a grain surface.

    Deterministic for fixed (scene, surface_class, seed).  Surface points are
    area-uniform over the silo disk; each gets the class's depth profile plus
    Gaussian roughness and a Rayleigh amplitude.  When enabled, two clutter
    rings are added at the silo radius: one at the fixed wall rim and one at
    the wall-surface contact line.  A per-scene gain factor jitters the
    absolute amplitude scale, as antenna coupling would.
    """
    surface_class = SurfaceClass(surface_class)
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=(_SURFACE_KEY,))
    )
    silo_radius = scene.diameter / 2.0
    mean_depth = scene.mean_surface_range
    n = scene.scatterers_per_scene

    # surface points, area-uniform over the disk
    rho = silo_radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    px = rho * np.cos(theta)
    py = rho * np.sin(theta)

    # apex may wander off-axis (filling is never perfectly centred)
    offset_r = scene.apex_offset_fraction * silo_radius * np.sqrt(rng.random())
    offset_t = 2.0 * np.pi * rng.random()
    ax, ay = offset_r * np.cos(offset_t), offset_r * np.sin(offset_t)

    ripple_phase = 2.0 * np.pi * rng.random()
    sigma = _roughness_sigma(scene, surface_class)
    radial = np.hypot(px - ax, py - ay) / silo_radius
    depths = _surface_depths(scene, surface_class, radial, mean_depth)
    depths = depths + _ripple(scene, surface_class, radial, ripple_phase)
    depths = depths + rng.normal(0.0, sigma, n)
    amps = rng.rayleigh(1.0, n)

    ranges = [depths]
    amplitudes = [amps]

    if scene.wall_clutter and scene.wall_clutter_scatterers > 0:
        n_c = scene.wall_clutter_scatterers
        ring_theta = 2.0 * np.pi * np.arange(n_c) / n_c
        # fixed rim ring: silo top, independent of fill state
        rim = np.full(n_c, scene.rim_range)
        rim = rim + rng.normal(0.0, 0.001, n_c)
        ranges.append(rim)
        amplitudes.append(rng.rayleigh(scene.wall_clutter_amplitude, n_c))
        # contact ring: where the surface meets the wall
        wall_radial = (
            np.hypot(silo_radius * np.cos(ring_theta) - ax,
                     silo_radius * np.sin(ring_theta) - ay)
            / silo_radius
        )
        contact = _surface_depths(scene, surface_class, wall_radial, mean_depth)
        contact = contact + _ripple(scene, surface_class, wall_radial, ripple_phase)
        contact = contact + rng.normal(0.0, sigma, n_c)
        ranges.append(contact)
        corner_factor = 1.0 + scene.dihedral_gain * np.tanh(
            _wall_slope(scene, surface_class) / 0.5
        )
        amplitudes.append(
            rng.rayleigh(scene.contact_clutter_amplitude * corner_factor, n_c)
        )

    gain = 10.0 ** (rng.uniform(-1.0, 1.0) * scene.gain_jitter_db / 20.0)
    all_ranges = np.concatenate(ranges)
    all_amps = gain * np.concatenate(amplitudes)
    return ScattererCloud(all_amps, all_ranges, surface_class)


def backscatter(
    cloud: ScattererCloud,
    params: RadarParams,
    snr_db: Optional[float] = None,
    seed: int = 0,
) -> AScan:
    """Coherent frequency-domain sum over the cloud, optionally noisy.

    At each swept frequency f the two-way phase of a scatterer at range R is
    2 * (2 pi f / c) * R, so the sample is sum_i p_i * exp(-2j * k_n * R_i).
    Additive complex white Gaussian noise is scaled so that the mean signal
    power over the sweep exceeds the noise power by snr_db decibels; None
    means noiseless.
    """
    r_max = max_unambiguous_range(params)
    if np.any(cloud.ranges >= r_max):
        worst = float(np.max(cloud.ranges))
        raise AliasingError(
            f"scatterer at {worst:.3f} m is at or beyond the unambiguous "
            f"range {r_max:.3f} m; refusing to alias"
        )
    freqs = params.frequencies()
    phase = (-4.0j * np.pi / params.c) * np.outer(freqs, cloud.ranges)
    samples = np.exp(phase) @ cloud.amplitudes.astype(complex)

    if snr_db is not None:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=int(seed), spawn_key=(_NOISE_KEY,))
        )
        signal_power = float(np.mean(np.abs(samples) ** 2))
        noise_power = signal_power * 10.0 ** (-float(snr_db) / 10.0)
        sigma = np.sqrt(noise_power / 2.0)
        noise = rng.normal(0.0, sigma, samples.shape) + 1j * rng.normal(
            0.0, sigma, samples.shape
        )
        samples = samples + noise

    return AScan(samples, cloud.class_label, seed=int(seed), snr_db=snr_db)


def range_profile(ascan: AScan, params: RadarParams) -> RangeProfile:
    """Inverse DFT of the sweep; bin spacing equals the range resolution."""
    if ascan.samples.size != params.n_freq:
        raise DimensionMismatchError(
            f"A-scan has {ascan.samples.size} samples, sweep defines {params.n_freq}"
        )
    bins = np.fft.ifft(ascan.samples)
    return RangeProfile(bins, range_resolution(params))


def generate_dataset(
    params: RadarParams,
    scene: SiloScene,
    per_class_counts: Union[int, Sequence[int]],
    snr_db: Optional[float],
    seed: int,
    fill_fraction_range: Optional[Sequence[float]] = None,
    cone_height_range: Optional[Sequence[float]] = None,
) -> list:
    """Simulate a labelled A-scan dataset, fully deterministic from ``seed``.

    Per sample, fill_fraction and |cone_height| are re-drawn uniformly from
    the given ranges (falling back to the template values when a range is
    None).  Records are emitted class-major: all levelled scans first, then
    peaked, then inverted.
    """
    if isinstance(per_class_counts, int):
        counts = [per_class_counts] * len(SurfaceClass)
    else:
        counts = [int(c) for c in per_class_counts]
    if len(counts) != len(SurfaceClass) or any(c < 1 for c in counts):
        raise InvalidParameterError(
            f"per_class_counts needs {len(SurfaceClass)} entries >= 1, got {counts}"
        )

    ascans = []
    for cls in SurfaceClass:
        for i in range(counts[cls]):
            rseed = record_seed(seed, "record", int(cls), i)
            jitter = np.random.default_rng(
                np.random.SeedSequence(entropy=rseed, spawn_key=(_JITTER_KEY,))
            )
            fill = scene.fill_fraction
            if fill_fraction_range is not None:
                fill = jitter.uniform(*fill_fraction_range)
            height = abs(scene.cone_height)
            if cone_height_range is not None:
                height = jitter.uniform(*cone_height_range)
            if cls is SurfaceClass.LEVELLED:
                signed_height = 0.0
            elif cls is SurfaceClass.PEAKED_CONE:
                signed_height = height
            else:
                signed_height = -height
            sample_scene = replace(
                scene, fill_fraction=float(fill), cone_height=float(signed_height)
            )
            cloud = synth_surface(sample_scene, cls, rseed)
            ascans.append(backscatter(cloud, params, snr_db, rseed))
    return ascans
