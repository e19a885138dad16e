"""Rotationally equivariant quantum classifier laboratory.

Ring-sampled amplitude encoding, a Fourier-diagonal equivariant circuit,
twirling-based feature analytics, diagnostic input transformations,
classical surrogates with FGSM/PGD transfer attacks, and an experiment
harness with CSV/figure reporting.
"""

from .ringgrid import (
    Image,
    RingGrid,
    SampledImage,
    build_grid,
    encode_amplitudes,
    render_encoded,
    ring_means,
    rotate_samples,
    sample_image,
)

__all__ = [
    "Image",
    "RingGrid",
    "SampledImage",
    "build_grid",
    "encode_amplitudes",
    "render_encoded",
    "ring_means",
    "rotate_samples",
    "sample_image",
]

__version__ = "0.1.0"
