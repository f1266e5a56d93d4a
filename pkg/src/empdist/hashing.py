import hashlib
import json

import numpy as np


def _default(obj):
    if isinstance(obj, np.ndarray):
        # dtype + shape + raw bytes: two arrays collide only if bitwise equal
        return {"__ndarray__": [str(obj.dtype), list(obj.shape), obj.tobytes().hex()]}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if hasattr(obj, "model_dump"):
        return obj.model_dump(mode="json")
    raise TypeError(f"cannot fingerprint {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default, allow_nan=True)


def fingerprint(*parts) -> str:
    """Short sha256 hex digest of the canonical JSON form of ``parts``."""
    return hashlib.sha256(canonical_json(list(parts)).encode("utf-8")).hexdigest()[:16]


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
