"""File formats: raw volumes with JSON sidecars, PGM previews, measurement files.

Volume format: raw little-endian float32, x-fastest order, next to a JSON
sidecar ``<name>.json`` recording ``{"dims", "spacing", "dtype"}``.
Measurement format: raw little-endian floats (dtype recorded) plus a sidecar
with the operator id, seed, and noise description; loading is byte-exact.
"""

import json
from pathlib import Path

import numpy as np

from .model import GridGeometry, MeasurementSet, NoiseSpec, Signal

__all__ = ["save_volume", "load_volume", "save_slice_pgm",
           "save_measurements", "load_measurements"]


def _sidecar(path):
    return Path(str(path) + ".json")


def save_volume(path, signal, dtype="float32"):
    """Write a Signal's grid values as raw x-fastest floats plus sidecar."""
    if signal.geometry is None:
        raise ValueError("volume I/O needs a signal with grid geometry")
    path = Path(path)
    arr = signal.reshaped().astype(np.dtype(dtype).newbyteorder("<"))
    path.write_bytes(arr.ravel(order="F").tobytes())
    meta = {
        "dims": list(signal.geometry.dims),
        "spacing": list(signal.geometry.spacing),
        "dtype": str(np.dtype(dtype).name),
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2) + "\n")
    return path


def load_volume(path):
    path = Path(path)
    meta = json.loads(_sidecar(path).read_text())
    dims = tuple(int(d) for d in meta["dims"])
    dtype = np.dtype(meta["dtype"]).newbyteorder("<")
    raw = np.frombuffer(path.read_bytes(), dtype=dtype)
    arr = raw.reshape(dims, order="F").astype(np.float64)
    geom = GridGeometry(dims, tuple(meta.get("spacing", [1.0] * len(dims))))
    return Signal(values=arr.ravel(), geometry=geom)


def save_slice_pgm(path, plane, lo=None, hi=None):
    """8-bit binary PGM of a 2D array with min-max windowing.

    The window actually used is recorded in the sidecar so the mapping back
    to densities stays reproducible.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError("PGM export needs a 2D array")
    lo = float(plane.min()) if lo is None else float(lo)
    hi = float(plane.max()) if hi is None else float(hi)
    span = hi - lo if hi > lo else 1.0
    img = np.clip((plane - lo) / span * 255.0, 0, 255).astype(np.uint8)
    path = Path(path)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + img.tobytes())
    _sidecar(path).write_text(json.dumps({"window": [lo, hi]}) + "\n")
    return path


def save_measurements(path, mset, dtype="float64"):
    """Write raw measurement bytes plus a provenance sidecar (byte-exact roundtrip)."""
    path = Path(path)
    arr = np.ascontiguousarray(mset.y, dtype=np.dtype(dtype).newbyteorder("<"))
    path.write_bytes(arr.tobytes())
    noise = None
    if mset.noise_spec is not None:
        noise = {"sigma": mset.noise_spec.sigma, "quant_bits": mset.noise_spec.quant_bits}
    meta = {
        "m": int(mset.m),
        "dtype": str(np.dtype(dtype).name),
        "op_id": mset.op_id,
        "seed": int(mset.seed),
        "noise": noise,
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2) + "\n")
    return path


def load_measurements(path):
    path = Path(path)
    meta = json.loads(_sidecar(path).read_text())
    dtype = np.dtype(meta["dtype"]).newbyteorder("<")
    y = np.frombuffer(path.read_bytes(), dtype=dtype).astype(np.float64)
    if y.size != meta["m"]:
        raise ValueError(f"expected {meta['m']} measurements, file holds {y.size}")
    noise = None
    if meta.get("noise"):
        noise = NoiseSpec(sigma=meta["noise"].get("sigma", 0.0),
                          quant_bits=meta["noise"].get("quant_bits"))
    return MeasurementSet(y=y, op_id=meta.get("op_id", ""), seed=meta.get("seed", 0),
                          noise_spec=noise)
