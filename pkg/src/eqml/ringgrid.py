"""Polygonal ring-sampling geometry and the sampled-image representation.

Conventions (used everywhere in the package):
  * angles are measured counterclockwise from the +col axis, so the pixel
    row decreases with sin(angle);
  * rotate_samples(x, g) shifts ring content forward by g positions,
    y[r, phi] = x[r, (phi - g) mod N_phi].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, InvalidDims, NormZero
from .statevec import StateVector


@dataclass(frozen=True)
class RingGrid:
    n_rad: int
    n_orb: int
    height: int
    width: int
    center: tuple[float, float]  # (row, col), fractional pixels
    radii: np.ndarray  # N_r strictly increasing radii in pixels
    angles: np.ndarray  # N_phi angles in radians, angles[phi] = 2*pi*phi/N_phi

    @property
    def n_rings(self) -> int:
        return 2**self.n_rad

    @property
    def n_angles(self) -> int:
        return 2**self.n_orb


def build_grid(n_rad: int, n_orb: int, height: int, width: int) -> RingGrid:
    if n_rad < 1 or n_orb < 1:
        raise InvalidDims(f"need n_rad >= 1 and n_orb >= 1, got ({n_rad}, {n_orb})")
    if height < 2 or width < 2:
        raise InvalidDims(f"need height >= 2 and width >= 2, got ({height}, {width})")
    n_r, n_phi = 2**n_rad, 2**n_orb
    center = ((height - 1) / 2, (width - 1) / 2)
    r_max = (min(height, width) - 1) / 2
    radii = (np.arange(1, n_r + 1) * r_max) / n_r
    angles = 2 * np.pi * np.arange(n_phi) / n_phi
    return RingGrid(n_rad, n_orb, height, width, center, radii, angles)


@dataclass(frozen=True)
class Image:
    height: int
    width: int
    pixels: np.ndarray  # (height, width) float64 in [0, 1]

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.shape != (self.height, self.width):
            raise InvalidDims(f"pixel shape {px.shape} != ({self.height}, {self.width})")
        if not np.all(np.isfinite(px)):
            raise InvalidDims("pixel values must be finite")
        object.__setattr__(self, "pixels", np.clip(px, 0.0, 1.0))

    @classmethod
    def from_array(cls, arr) -> "Image":
        arr = np.asarray(arr, dtype=float)
        return cls(arr.shape[0], arr.shape[1], arr)


@dataclass(frozen=True)
class SampledImage:
    grid: RingGrid
    values: np.ndarray  # (N_r, N_phi) float64

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_rings, self.grid.n_angles):
            raise DimMismatch(
                f"values shape {vals.shape} != ({self.grid.n_rings}, {self.grid.n_angles})"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidDims("sampled values must be finite")
        object.__setattr__(self, "values", vals)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def _round_half_away(a: np.ndarray) -> np.ndarray:
    return np.where(a >= 0, np.floor(a + 0.5), np.ceil(a - 0.5)).astype(int)


def vertex_pixels(grid: RingGrid) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-pixel (row, col) index arrays of shape (N_r, N_phi), clamped to bounds."""
    rr = grid.radii[:, None]
    rows = grid.center[0] - rr * np.sin(grid.angles)[None, :]
    cols = grid.center[1] + rr * np.cos(grid.angles)[None, :]
    rows = np.clip(_round_half_away(rows), 0, grid.height - 1)
    cols = np.clip(_round_half_away(cols), 0, grid.width - 1)
    return rows, cols


def sample_image(image: Image, grid: RingGrid) -> SampledImage:
    if (image.height, image.width) != (grid.height, grid.width):
        raise DimMismatch(
            f"image is {image.height}x{image.width}, grid expects {grid.height}x{grid.width}"
        )
    rows, cols = vertex_pixels(grid)
    return SampledImage(grid, image.pixels[rows, cols])


def encode_amplitudes(s: SampledImage) -> StateVector:
    """Amplitude-encode samples: amplitude at flat index r*N_phi + phi is x[r,phi]/||x||."""
    nrm = s.norm()
    if nrm == 0.0:
        raise NormZero("cannot amplitude-encode an all-zero sample matrix")
    amps = (s.values / nrm).reshape(-1).astype(complex)
    return StateVector(s.grid.n_rad + s.grid.n_orb, amps)


def render_encoded(s: SampledImage, background: float = 0.0) -> Image:
    grid = s.grid
    px = np.full((grid.height, grid.width), float(background))
    rows, cols = vertex_pixels(grid)
    px[rows.reshape(-1), cols.reshape(-1)] = s.values.reshape(-1)
    return Image(grid.height, grid.width, px)


def rotate_samples(s: SampledImage, g: int) -> SampledImage:
    """Cyclic group action on the angular index: y[r, phi] = x[r, (phi - g) mod N_phi]."""
    return SampledImage(s.grid, np.roll(s.values, int(g) % s.grid.n_angles, axis=1))


def ring_means(s: SampledImage) -> np.ndarray:
    return s.values.mean(axis=1)
