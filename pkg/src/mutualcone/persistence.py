"""Versioned, checksummed text container for trained classifiers.

Layout (UTF-8, ``\\n`` line endings)::

    mutualcone-model <version>
    <JSON body on one line>
    sha256 <hex digest of the body line>

Arrays are stored as ``{"shape": [...], "data": "<space separated>"}``
with 17 significant digits, so a save/load round trip is bit-exact.
"""

import hashlib
import json
import os

import numpy as np

from .classify import ClassifierModel, Hyperparameters
from .cone import AlsConfig, ConvexCone
from .data import atomic_write, format_float
from .discriminant import DiscriminantSpace
from .errors import ChecksumError, PersistenceError, SchemaError, VersionError
from .subspace import Subspace

MAGIC = "mutualcone-model"
FORMAT_VERSION = 1


def _encode_array(a):
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": " ".join(format_float(v) for v in a.ravel())}


def _decode_array(obj, what):
    try:
        shape = tuple(int(n) for n in obj["shape"])
        text = obj["data"]
        values = np.array([float(t) for t in text.split()], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{what}: malformed array ({exc})") from None
    if values.size != int(np.prod(shape)):
        raise SchemaError(f"{what}: {values.size} values do not fill shape {shape}")
    return values.reshape(shape)


def _encode_reference(ref):
    if isinstance(ref, ConvexCone):
        return {"kind": "cone", "nonnegative": ref.nonnegative,
                "generators": _encode_array(ref.generators)}
    return {"kind": "subspace", "basis": _encode_array(ref.basis)}


def _decode_reference(obj, what):
    kind = obj.get("kind")
    if kind == "cone":
        return ConvexCone(_decode_array(obj["generators"], what), nonnegative=bool(obj["nonnegative"]))
    if kind == "subspace":
        return Subspace(_decode_array(obj["basis"], what))
    raise SchemaError(f"{what}: unknown reference kind {kind!r}")


def _encode_projection(p):
    if p is None:
        return None
    if isinstance(p, DiscriminantSpace):
        return {"kind": "discriminant", "eigenvectors": _encode_array(p.eigenvectors),
                "eigenvalues": _encode_array(p.eigenvalues),
                "regularization": format_float(p.regularization),
                "basis": _encode_array(p.basis)}
    return {"kind": "gds", "basis": _encode_array(p.basis)}


def _decode_projection(obj):
    if obj is None:
        return None
    kind = obj.get("kind")
    if kind == "discriminant":
        return DiscriminantSpace(_decode_array(obj["eigenvectors"], "projection"),
                                 _decode_array(obj["eigenvalues"], "projection"),
                                 float(obj["regularization"]),
                                 _decode_array(obj["basis"], "projection"))
    if kind == "gds":
        return Subspace(_decode_array(obj["basis"], "projection"))
    raise SchemaError(f"unknown projection kind {kind!r}")


def dumps_model(model):
    body = {
        "method": model.method,
        "class_labels": list(model.class_labels),
        "seed": model.seed,
        "ambient_dim": model.ambient_dim,
        "hyperparameters": vars(model.hyperparameters).copy(),
        "als": vars(model.als).copy(),
        "references": [_encode_reference(r) for r in model.references],
        "projection": _encode_projection(model.projection),
        "diagnostics": model.diagnostics,
    }
    line = json.dumps(body, sort_keys=True, separators=(",", ":"), allow_nan=False)
    digest = hashlib.sha256(line.encode("utf-8")).hexdigest()
    return f"{MAGIC} {FORMAT_VERSION}\n{line}\nsha256 {digest}\n"


def loads_model(text, source="<string>"):
    lines = text.split("\n")
    head = lines[0].split(" ") if lines else []
    if len(head) != 2 or head[0] != MAGIC:
        raise SchemaError(f"{source}: not a model file (missing '{MAGIC} <version>' header)")
    if head[1] != str(FORMAT_VERSION):
        raise VersionError(
            f"{source}: model file version {head[1]!r} is not supported (this build reads version {FORMAT_VERSION})"
        )
    if len(lines) < 3 or not lines[2].startswith("sha256 "):
        raise ChecksumError(f"{source}: checksum line missing (file truncated?)")
    body = lines[1]
    expected = lines[2][len("sha256 "):].strip()
    actual = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if actual != expected:
        raise ChecksumError(f"{source}: checksum mismatch (stored {expected[:12]}..., computed {actual[:12]}...)")
    try:
        obj = json.loads(body)
        refs = tuple(_decode_reference(r, f"references[{i}]") for i, r in enumerate(obj["references"]))
        return ClassifierModel(
            method=obj["method"],
            class_labels=tuple(obj["class_labels"]),
            references=refs,
            hyperparameters=Hyperparameters(**obj["hyperparameters"]),
            als=AlsConfig(**obj["als"]),
            seed=int(obj["seed"]),
            ambient_dim=int(obj["ambient_dim"]),
            projection=_decode_projection(obj["projection"]),
            diagnostics=obj.get("diagnostics", {}),
        )
    except PersistenceError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise SchemaError(f"{source}: schema violation: {exc!r}") from None


def save_model(model, path):
    atomic_write(path, dumps_model(model))


def load_model(path):
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise PersistenceError(f"cannot read model {path}: {exc.strerror}") from exc
    except UnicodeDecodeError:
        raise SchemaError(f"{path}: not a UTF-8 text model file") from None
    return loads_model(text, path)
