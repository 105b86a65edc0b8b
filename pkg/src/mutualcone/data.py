"""Feature sets, CSV ingestion and the seeded synthetic generator.

CSV layout: header ``set_id,class_label,f0,...,f{d-1}``, one row per
feature vector, rows of a set contiguous, ``class_label`` empty for
unlabeled queries.  Values are written with 17 significant digits so a
save/load round trip is bit-exact.
"""

import configparser
import csv
import io
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ContractError, DataError

GENERATOR_NAME = "mutualcone.synthetic/1"


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """One image set: ``vectors`` is ``d x L`` with non-negative entries."""

    set_id: str
    class_label: str | None
    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DataError(f"set {self.set_id!r}: vectors must be a non-empty d x L matrix")
        if not np.all(np.isfinite(v)):
            raise DataError(f"set {self.set_id!r}: vectors contain NaN or Inf")
        if np.any(v < 0):
            i, j = np.argwhere(v < 0)[0]
            raise DataError(f"set {self.set_id!r}: negative entry {v[i, j]!r} in vector {j}, f{i}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self):
        return self.vectors.shape[0]

    def __len__(self):
        return self.vectors.shape[1]

    def scaled(self, factor):
        return FeatureSet(self.set_id, self.class_label, self.vectors * factor)


@dataclass(frozen=True, eq=False)
class Dataset:
    sets: tuple
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        sets = tuple(self.sets)
        if not sets:
            raise DataError("dataset contains no feature sets")
        d = sets[0].dim
        seen = set()
        for s in sets:
            if s.dim != d:
                raise DataError(f"set {s.set_id!r} has dimension {s.dim}, expected {d}")
            if s.set_id in seen:
                raise DataError(f"duplicate set_id {s.set_id!r}")
            seen.add(s.set_id)
        object.__setattr__(self, "sets", sets)

    @property
    def dimension(self):
        return self.sets[0].dim

    @property
    def class_labels(self):
        """Labels in order of first appearance (unlabeled sets skipped)."""
        out = []
        for s in self.sets:
            if s.class_label is not None and s.class_label not in out:
                out.append(s.class_label)
        return tuple(out)

    def by_class(self):
        groups = {}
        for s in self.sets:
            groups.setdefault(s.class_label, []).append(s)
        return groups

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(x):
    return format(float(x), ".17g")


def dumps_csv(dataset):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = dataset.dimension
    w.writerow(["set_id", "class_label"] + [f"f{i}" for i in range(d)])
    for s in dataset.sets:
        label = "" if s.class_label is None else s.class_label
        for col in s.vectors.T:
            w.writerow([s.set_id, label] + [format_float(v) for v in col])
    return buf.getvalue()


def save_csv(dataset, path):
    atomic_write(path, dumps_csv(dataset))


def load_csv(path):
    """Parse a feature CSV into a :class:`Dataset`.

    Every violation raises :class:`DataError` naming the file line (and
    column where relevant); nothing is repaired silently.
    """
    path = os.fspath(path)
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if len(header) < 3 or header[:2] != ["set_id", "class_label"]:
            raise DataError(f"{path}: header must start with set_id,class_label,f0")
        d = len(header) - 2
        expected = [f"f{i}" for i in range(d)]
        if header[2:] != expected:
            bad = next(i for i, (a, b) in enumerate(zip(header[2:], expected)) if a != b)
            raise DataError(f"{path}: header column {bad + 3} is {header[bad + 2]!r}, expected {expected[bad]!r}")

        blocks = []  # (set_id, label, [vectors])
        closed = set()
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != d + 2:
                raise DataError(f"{path}:{line}: expected {d + 2} fields, found {len(row)}")
            set_id, label = row[0], row[1] or None
            if not set_id:
                raise DataError(f"{path}:{line}: empty set_id")
            values = np.empty(d)
            for i, cell in enumerate(row[2:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}:{line}: column f{i} is not a number: {cell!r}") from None
                if not np.isfinite(v):
                    raise DataError(f"{path}:{line}: column f{i} is not finite: {cell!r}")
                if v < 0:
                    raise DataError(f"{path}:{line}: column f{i} is negative: {cell!r}")
                values[i] = v
            if blocks and blocks[-1][0] == set_id:
                if blocks[-1][1] != label:
                    raise DataError(f"{path}:{line}: set {set_id!r} changes class label")
                blocks[-1][2].append(values)
                continue
            if set_id in closed:
                raise DataError(
                    f"{path}:{line}: duplicate (set_id, index): rows of set {set_id!r} are not contiguous"
                )
            if blocks:
                closed.add(blocks[-1][0])
            blocks.append((set_id, label, [values]))
    if not blocks:
        raise DataError(f"{path}: no feature rows")
    sets = [FeatureSet(sid, lab, np.column_stack(vecs)) for sid, lab, vecs in blocks]
    return Dataset(sets, {"source": path})


@dataclass(frozen=True)
class SyntheticSpec:
    classes: int = 3
    sets_per_class: int = 5
    vectors_per_set: int = 10
    dim: int = 12
    rays_per_class: int = 2
    noise_sigma: float = 0.0
    overlap: float = 0.0
    seed: int = 0

    def validate(self):
        for name in ("classes", "sets_per_class", "vectors_per_set", "dim", "rays_per_class"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be >= 1")
        if self.classes > self.dim:
            raise ContractError(f"{self.classes} classes need dim >= {self.classes}")
        if self.rays_per_class > self.dim:
            raise ContractError("rays_per_class must not exceed dim")
        if not 0.0 <= self.overlap <= 1.0:
            raise ContractError("overlap must lie in [0, 1]")
        if self.overlap == 0 and self.classes * self.rays_per_class > self.dim:
            raise ContractError("disjoint class blocks need classes * rays_per_class <= dim")
        if self.noise_sigma < 0:
            raise ContractError("noise_sigma must be >= 0")


def read_spec(path):
    """Read a ``key = value`` synthetic spec file (``#`` comments allowed)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        parser.read_string("[synthetic]\n" + text)
    except configparser.Error as exc:
        raise ContractError(f"{path}: {exc}") from exc
    sect = parser["synthetic"]
    known = {f.name: f.type for f in fields(SyntheticSpec)}
    unknown = set(sect) - set(known)
    if unknown:
        raise ContractError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, typ in known.items():
        if key in sect:
            conv = float if typ is float else int
            try:
                kwargs[key] = conv(sect[key])
            except ValueError:
                raise ContractError(f"{path}: {key} = {sect[key]!r} is not a valid {conv.__name__}") from None
    return SyntheticSpec(**kwargs)


def write_spec(spec, path):
    atomic_write(path, "".join(f"{k} = {v}\n" for k, v in asdict(spec).items()))


def _unit(m):
    return m / np.linalg.norm(m, axis=0)


def class_rays(spec, rng):
    """Per-class unit generator rays, shape ``(classes, dim, rays_per_class)``."""
    c, d, r = spec.classes, spec.dim, spec.rays_per_class
    block = d // c
    own = np.zeros((c, d, r))
    for k in range(c):
        own[k, k * block:(k + 1) * block] = rng.random((block, r))
        own[k] = _unit(own[k])
    shared = _unit(rng.random((d, r)))
    return np.stack([_unit((1.0 - spec.overlap) * own[k] + spec.overlap * shared) for k in range(c)])


def generate_synthetic(spec):
    """Generate a labeled dataset of non-negative feature sets.

    Algorithm (numpy PCG64 seeded with ``spec.seed``):

    1. Class ``k`` owns coordinates ``[k*b, (k+1)*b)`` with ``b = dim // classes``;
       its own rays are uniform on that block, normalized.  One set of shared
       rays is drawn uniform on all coordinates.  Ray ``i`` of class ``k`` is
       ``normalize((1 - overlap) * own_i + overlap * shared_i)``.
    2. Each set draws per-ray weights ``s ~ U(0.2, 1)``; each vector is
       ``rays @ (s * u)`` with ``u ~ U(0, 1)``, plus ``N(0, noise_sigma^2)``
       noise per entry, clamped at zero.  A vector clamped to all zeros is
       replaced by its noise-free version.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    rays = class_rays(spec, rng)
    sets = []
    for k in range(spec.classes):
        for j in range(spec.sets_per_class):
            weights = rng.uniform(0.2, 1.0, size=spec.rays_per_class)
            coeff = weights[:, None] * rng.random((spec.rays_per_class, spec.vectors_per_set))
            clean = rays[k] @ coeff
            noise = rng.standard_normal(clean.shape) * spec.noise_sigma
            x = np.maximum(clean + noise, 0.0)
            dead = ~np.any(x > 0, axis=0)
            x[:, dead] = clean[:, dead]
            sets.append(FeatureSet(f"c{k}_s{j}", f"class{k}", x))
    manifest = {"generator": GENERATOR_NAME, "spec": asdict(spec)}
    return Dataset(sets, manifest)
