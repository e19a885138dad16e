"""Dataset generation, IDX ingestion, rotation augmentation, and persistence.

Sampled datasets are stored in the EQDS container: a JSON manifest next to
a little-endian binary blob (magic "EQDS", version u32, sample count u32,
N_r u16, N_phi u16, dtype tag, f32 samples row-major, labels u16).
"""
from __future__ import annotations

import gzip
import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadMagic, ChecksumMismatch, DimMismatch, EmptyDataset, InvalidArgs
from .ringgrid import Image, RingGrid, SampledImage, build_grid, sample_image
from . import transforms as tf

EQDS_MAGIC = b"EQDS"
EQDS_VERSION = 1
_DTYPE_F32 = 0

# cos/sin of k*45 degrees with exact entries at the 90-degree multiples
_SQ2 = np.sqrt(2) / 2
_COS8 = (1.0, _SQ2, 0.0, -_SQ2, -1.0, -_SQ2, 0.0, _SQ2)
_SIN8 = (0.0, _SQ2, 1.0, _SQ2, 0.0, -_SQ2, -1.0, -_SQ2)


@dataclass
class Dataset:
    """Sampled dataset: values[i] is the N_r x N_phi matrix of sample i."""

    grid: RingGrid
    values: np.ndarray  # (n, N_r, N_phi) float64
    labels: np.ndarray  # (n,) int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if len(self.values) != len(self.labels):
            raise DimMismatch(f"{len(self.values)} samples vs {len(self.labels)} labels")
        if self.values.ndim != 3 or self.values.shape[1:] != (
            self.grid.n_rings,
            self.grid.n_angles,
        ):
            raise DimMismatch(f"sample array shape {self.values.shape} does not match grid")

    def __len__(self) -> int:
        return len(self.labels)

    def sample(self, i: int) -> SampledImage:
        return SampledImage(self.grid, self.values[i])

    def flat(self) -> np.ndarray:
        """(n, N_r*N_phi) view used by surrogates and attacks."""
        return self.values.reshape(len(self), -1)


@dataclass
class ImageSet:
    """Raw images pre-sampling (IDX ingestion output)."""

    images: list
    labels: np.ndarray
    meta: dict = field(default_factory=dict)


def rotate_image(img: Image, k_octants: int) -> Image:
    """Bilinear rotation by k*45 degrees counterclockwise about the image center.

    90-degree multiples land on pixel centers and are exact permutations;
    out-of-bounds source reads fill 0.
    """
    k = int(k_octants)
    if not 0 <= k <= 7:
        raise InvalidArgs("k_octants must lie in 0..7")
    if k == 0:
        return img
    h, w = img.height, img.width
    cy, cx = (h - 1) / 2, (w - 1) / 2
    c, s = _COS8[k], _SIN8[k]
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    u = jj - cx
    v = cy - ii
    src_col = cx + (u * c + v * s)
    src_row = cy - (-u * s + v * c)
    r0 = np.floor(src_row).astype(int)
    c0 = np.floor(src_col).astype(int)
    fr = src_row - r0
    fc = src_col - c0
    out = np.zeros((h, w))
    for dr, dc, wgt in (
        (0, 0, (1 - fr) * (1 - fc)),
        (0, 1, (1 - fr) * fc),
        (1, 0, fr * (1 - fc)),
        (1, 1, fr * fc),
    ):
        rr = r0 + dr
        cc = c0 + dc
        inside = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
        out[inside] += wgt[inside] * img.pixels[rr[inside], cc[inside]]
    return Image(h, w, out)


# class-signal constants of the procedural generator: a radial-bump ring-mean
# cue and a cross-ring phase-alignment cue, carried by alternating prototypes
_PROTO_BASE = 0.45        # background intensity
_PROTO_MEAN_D = 0.07      # ring-mean cue: bump amplitude spread across classes
_PROTO_MEAN_WIDTH = 0.35  # ring-mean cue: radial bump width
_PROTO_ALIGN_AMP = 0.22   # alignment cue: angular wave amplitude
_PROTO_WEAK_AMP = 0.08    # uninformative angular texture on mean-cue prototypes
_PROTO_FREQ = 2           # angular wave frequency (cycles per turn)


def _class_prototype(n_classes: int, c: int, cue_mean: bool, height: int,
                     width: int, n_rings: int,
                     rng: np.random.Generator) -> Image:
    """One procedural prototype carrying one of the two class cues.

    cue_mean=True: classes separate through a radial-bump ring-mean offset
    (angular texture present but uninformative).  cue_mean=False: ring
    means are class-independent and classes separate through the relative
    phase alignment of the angular wave across rings, a purely
    correlational cue that vanishes from the ring means.
    """
    cy, cx = (height - 1) / 2, (width - 1) / 2
    r_max = (min(height, width) - 1) / 2
    ii, jj = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    rho = np.sqrt((ii - cy) ** 2 + (jj - cx) ** 2) / r_max
    ang = np.arctan2(cy - ii, jj - cx)
    phase = rng.uniform(0, 2 * np.pi)
    # cos(gamma*pi*(rho*n_rings - 1)) evaluates to a class-specific ring-to-ring
    # alignment pattern at the sampled radii (k+1)/n_rings
    if cue_mean:
        spread = 2 * c / (n_classes - 1) - 1
        base = _PROTO_BASE + spread * _PROTO_MEAN_D * np.exp(
            -(((rho - 0.5) / _PROTO_MEAN_WIDTH) ** 2)
        )
        gamma = rng.uniform(0, 1)  # random alignment: carries no class signal
        angular = _PROTO_WEAK_AMP * np.cos(_PROTO_FREQ * ang + phase)
    else:
        base = np.full_like(rho, _PROTO_BASE)
        gamma = c / (n_classes - 1)
        angular = _PROTO_ALIGN_AMP * np.cos(_PROTO_FREQ * ang + phase)
    angular = angular * np.cos(gamma * np.pi * (rho * n_rings - 1.0))
    return Image(height, width, np.clip(base + angular, 0.0, 1.0))


def _f32_round(values: np.ndarray) -> np.ndarray:
    # generated samples are stored as f32 in the container; rounding here
    # makes save/load round trips bit-identical
    return values.astype("<f4").astype(float)


def synth_stm_like(
    n_classes: int,
    per_class: int,
    noise_sigma: float,
    grid: RingGrid,
    seed: int,
) -> Dataset:
    """Seeded synthetic analogue of a prototype-plus-rotations task.

    Samples come in blocks of 8: each block draws one seeded prototype for
    its class and contributes that prototype plus Gaussian pixel noise
    under all 8 multiples of 45 degrees (rotation index cycles within the
    block, so per_class = 8 with noise_sigma = 0 yields exactly the 8
    rotations of a single prototype per class).  Consecutive blocks
    alternate which cue carries the class signal: ring-mean offsets on
    even blocks, cross-ring phase alignment on odd blocks, so the task
    stays rotation-invariant while neither ring means alone nor angular
    correlations alone resolve every sample.
    """
    if n_classes < 2:
        raise InvalidArgs("need n_classes >= 2")
    if per_class < 1:
        raise InvalidArgs("need per_class >= 1")
    rng = np.random.default_rng(seed)
    values, labels = [], []
    for c in range(n_classes):
        proto = None
        for i in range(per_class):
            if i % 8 == 0 or proto is None:
                proto = _class_prototype(
                    n_classes, c, (i // 8) % 2 == 0,
                    grid.height, grid.width, grid.n_rings, rng,
                )
            px = proto.pixels
            if noise_sigma > 0:
                px = np.clip(px + rng.normal(0, noise_sigma, px.shape), 0.0, 1.0)
            img = rotate_image(Image(grid.height, grid.width, px), i % 8)
            values.append(sample_image(img, grid).values)
            labels.append(c)
    meta = {
        "source": "synth_stm_like",
        "seed": seed,
        "n_classes": n_classes,
        "per_class": per_class,
        "noise_sigma": noise_sigma,
        "transforms": [],
    }
    return Dataset(grid, _f32_round(np.stack(values)), np.array(labels), meta)


def _read_idx(path) -> np.ndarray:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise BadMagic(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic == 0x00000803:
        n, h, w = struct.unpack(">III", raw[4:16])
        data = np.frombuffer(raw, dtype=np.uint8, offset=16)
        if len(data) != n * h * w:
            raise DimMismatch(f"{path}: expected {n * h * w} bytes, got {len(data)}")
        return data.reshape(n, h, w)
    if magic == 0x00000801:
        (n,) = struct.unpack(">I", raw[4:8])
        data = np.frombuffer(raw, dtype=np.uint8, offset=8)
        if len(data) != n:
            raise DimMismatch(f"{path}: expected {n} labels, got {len(data)}")
        return data
    raise BadMagic(f"{path}: bad IDX magic 0x{magic:08x}")


def ingest_idx(images_path, labels_path, exclude_labels=(), limit=None) -> ImageSet:
    """Parse big-endian IDX pairs, scale to [0,1], filter and densely remap labels."""
    imgs = _read_idx(images_path)
    labels = _read_idx(labels_path)
    if imgs.ndim != 3:
        raise BadMagic(f"{images_path} does not hold an image tensor")
    if labels.ndim != 1:
        raise BadMagic(f"{labels_path} does not hold a label vector")
    if len(imgs) != len(labels):
        raise DimMismatch(f"{len(imgs)} images vs {len(labels)} labels")
    exclude = set(int(v) for v in exclude_labels)
    keep = [i for i, lab in enumerate(labels) if int(lab) not in exclude]
    if limit is not None:
        keep = keep[: int(limit)]
    kept_labels = sorted({int(labels[i]) for i in keep})
    remap = {lab: j for j, lab in enumerate(kept_labels)}
    images = [Image.from_array(imgs[i].astype(float) / 255.0) for i in keep]
    new_labels = np.array([remap[int(labels[i])] for i in keep], dtype=int)
    meta = {
        "source": str(images_path),
        "label_map": {str(k): v for k, v in remap.items()},
        "excluded": sorted(exclude),
        "transforms": [],
    }
    return ImageSet(images, new_labels, meta)


def encode_dataset(imageset: ImageSet, grid: RingGrid) -> Dataset:
    if not imageset.images:
        raise EmptyDataset("no images to encode")
    values = np.stack([sample_image(img, grid).values for img in imageset.images])
    meta = dict(imageset.meta)
    meta["grid"] = {"n_rad": grid.n_rad, "n_orb": grid.n_orb,
                    "height": grid.height, "width": grid.width}
    return Dataset(grid, _f32_round(values), imageset.labels.copy(), meta)


def apply_variant(
    ds: Dataset,
    variant: str,
    seed: int = 0,
    surrogate=None,
    fraction: float = 0.5,
    eps_range: tuple[float, float] = (0.05, 0.2),
    key_scope: str = "per_image",
) -> Dataset:
    """Per-sample transformation with fresh per-image keys; labels untouched."""
    if variant == "clean":
        return ds
    rng = np.random.default_rng(seed)
    meta = dict(ds.meta)
    meta["transforms"] = list(meta.get("transforms", [])) + [
        {"variant": variant, "seed": seed, "key_scope": key_scope}
    ]
    if variant == "t1":
        shared = tf.sample_circulant_key(ds.grid.n_orb, rng) if key_scope == "per_dataset" else None
        out = []
        for i in range(len(ds)):
            key = shared if shared is not None else tf.sample_circulant_key(ds.grid.n_orb, rng)
            out.append(tf.apply_t1(ds.sample(i), key).values)
        values = np.stack(out)
    elif variant == "t2":
        shared = (
            tf.sample_permutation_key(ds.grid.n_rad, ds.grid.n_orb, rng)
            if key_scope == "per_dataset" else None
        )
        out = []
        for i in range(len(ds)):
            key = shared if shared is not None else tf.sample_permutation_key(
                ds.grid.n_rad, ds.grid.n_orb, rng
            )
            out.append(tf.apply_t2(ds.sample(i), key).values)
        values = np.stack(out)
    elif variant == "t3":
        values = ds.values - ds.values.mean(axis=2, keepdims=True)
    elif variant == "adv":
        if surrogate is None:
            raise InvalidArgs("variant 'adv' needs a trained surrogate")
        from .attacks import build_adv_training_set

        flat, _ = build_adv_training_set(
            ds.flat(), ds.labels, surrogate, fraction, eps_range, seed
        )
        values = flat.reshape(ds.values.shape)
        meta["transforms"][-1].update({"fraction": fraction, "eps_range": list(eps_range)})
    else:
        raise InvalidArgs(f"unknown variant {variant!r}")
    return Dataset(ds.grid, values, ds.labels.copy(), meta)


def save_dataset(ds: Dataset, path) -> None:
    """Write the EQDS blob and its JSON manifest (same path + '.json')."""
    path = Path(path)
    n = len(ds)
    n_r, n_phi = ds.grid.n_rings, ds.grid.n_angles
    blob = EQDS_MAGIC
    blob += struct.pack("<IIHHB", EQDS_VERSION, n, n_r, n_phi, _DTYPE_F32)
    blob += ds.values.astype("<f4").tobytes()
    blob += ds.labels.astype("<u2").tobytes()
    path.write_bytes(blob)
    manifest = {
        "grid": {
            "n_rad": ds.grid.n_rad,
            "n_orb": ds.grid.n_orb,
            "height": ds.grid.height,
            "width": ds.grid.width,
        },
        "n_samples": n,
        "label_values": sorted(int(v) for v in set(ds.labels.tolist())),
        "provenance": ds.meta,
        "checksum_sha256": hashlib.sha256(blob).hexdigest(),
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(manifest, indent=2))


def load_dataset(path) -> Dataset:
    path = Path(path)
    blob = path.read_bytes()
    manifest_path = path.with_suffix(path.suffix + ".json")
    if not manifest_path.exists():
        raise OSError(f"missing manifest {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if hashlib.sha256(blob).hexdigest() != manifest["checksum_sha256"]:
        raise ChecksumMismatch(f"{path}: checksum does not match manifest")
    if blob[:4] != EQDS_MAGIC:
        raise BadMagic(f"{path}: bad magic {blob[:4]!r}")
    version, n, n_r, n_phi, dtype_tag = struct.unpack("<IIHHB", blob[4:17])
    if version != EQDS_VERSION:
        raise BadMagic(f"{path}: unsupported EQDS version {version}")
    if dtype_tag != _DTYPE_F32:
        raise BadMagic(f"{path}: unsupported dtype tag {dtype_tag}")
    need = 17 + 4 * n * n_r * n_phi + 2 * n
    if len(blob) != need:
        raise OSError(f"{path}: expected {need} bytes, got {len(blob)}")
    values = np.frombuffer(blob, dtype="<f4", count=n * n_r * n_phi, offset=17)
    labels = np.frombuffer(blob, dtype="<u2", count=n, offset=17 + 4 * n * n_r * n_phi)
    g = manifest["grid"]
    grid = build_grid(g["n_rad"], g["n_orb"], g["height"], g["width"])
    return Dataset(
        grid,
        values.reshape(n, n_r, n_phi).astype(float),
        labels.astype(int),
        manifest.get("provenance", {}),
    )
