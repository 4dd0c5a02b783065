"""Record types and file ingestion/emission.

All floats are written with ``repr``, which yields the shortest decimal
string that round-trips to the identical IEEE-754 double.
"""

from __future__ import annotations

import csv
import enum
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DimMismatch, DuplicateSpeaker, InvalidArgument, IoError, ParseError

__all__ = [
    "Gender",
    "Method",
    "SpeakerRecord",
    "EmbeddingSet",
    "DVectorRecord",
    "GeneratedVoice",
    "parse_gender",
    "load_embeddings",
    "save_embeddings",
    "load_dvectors",
    "save_dvectors",
    "save_generated",
    "load_generated",
    "export_grid",
    "load_grid",
    "atomic_write_text",
    "format_float",
]


class Gender(str, enum.Enum):
    MALE = "M"
    FEMALE = "F"


class Method(str, enum.Enum):
    BASELINE = "baseline"
    ZERO_FILL = "zero_fill"
    NEIGHBOR_INTERP = "neighbor_interp"


_GENDER_TOKENS = {
    "m": Gender.MALE,
    "male": Gender.MALE,
    "f": Gender.FEMALE,
    "female": Gender.FEMALE,
}


def parse_gender(token) -> Gender:
    """Map ``M``/``F``/``male``/``female`` (any case) to :class:`Gender`."""
    if isinstance(token, Gender):
        return token
    try:
        return _GENDER_TOKENS[str(token).strip().lower()]
    except KeyError:
        raise ParseError(f"invalid gender token {token!r}") from None


def _as_finite_vector(values, what: str) -> np.ndarray:
    try:
        vec = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: non-numeric value ({exc})") from None
    if vec.ndim != 1:
        raise ParseError(f"{what}: expected a flat vector")
    if not np.all(np.isfinite(vec)):
        raise ParseError(f"{what}: non-finite value")
    return vec


@dataclass(frozen=True, eq=False)
class SpeakerRecord:
    speaker_id: str
    gender: Gender
    language: str
    embedding: np.ndarray

    def __post_init__(self):
        if not self.speaker_id:
            raise ParseError("speaker_id must be nonempty")
        object.__setattr__(self, "gender", parse_gender(self.gender))
        vec = _as_finite_vector(self.embedding, f"speaker {self.speaker_id!r}")
        vec.setflags(write=False)
        object.__setattr__(self, "embedding", vec)

    def __eq__(self, other):
        if not isinstance(other, SpeakerRecord):
            return NotImplemented
        return (
            self.speaker_id == other.speaker_id
            and self.gender == other.gender
            and self.language == other.language
            and np.array_equal(self.embedding, other.embedding)
        )


class EmbeddingSet:
    """An ordered, validated collection of speaker embeddings of one width."""

    def __init__(self, records: Sequence[SpeakerRecord]):
        records = list(records)
        seen = set()
        dim = None
        for rec in records:
            if rec.speaker_id in seen:
                raise DuplicateSpeaker(f"duplicate speaker_id {rec.speaker_id!r}")
            seen.add(rec.speaker_id)
            if dim is None:
                dim = rec.embedding.shape[0]
            elif rec.embedding.shape[0] != dim:
                raise DimMismatch(
                    f"speaker {rec.speaker_id!r} has dimension "
                    f"{rec.embedding.shape[0]}, expected {dim}"
                )
        self.records = records
        self.dim = 0 if dim is None else dim

    @classmethod
    def from_arrays(cls, X, genders, speaker_ids=None, languages=None):
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        if speaker_ids is None:
            speaker_ids = [f"s{i:04d}" for i in range(n)]
        if languages is None:
            languages = ["xx"] * n
        elif isinstance(languages, str):
            languages = [languages] * n
        return cls(
            SpeakerRecord(str(s), parse_gender(g), str(lang), row)
            for s, g, lang, row in zip(speaker_ids, genders, languages, X)
        )

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return self.dim == other.dim and self.records == other.records

    @property
    def X(self) -> np.ndarray:
        if not self.records:
            return np.empty((0, self.dim))
        return np.stack([r.embedding for r in self.records])

    @property
    def genders(self) -> np.ndarray:
        return np.array([r.gender.value for r in self.records], dtype="<U1")

    @property
    def speaker_ids(self) -> list[str]:
        return [r.speaker_id for r in self.records]

    def count(self, gender: Gender) -> int:
        return sum(1 for r in self.records if r.gender is gender)


@dataclass(frozen=True, eq=False)
class DVectorRecord:
    utterance_id: str
    voice_id: str
    language: str
    dvector: np.ndarray

    def __post_init__(self):
        vec = _as_finite_vector(self.dvector, f"utterance {self.utterance_id!r}")
        vec.setflags(write=False)
        object.__setattr__(self, "dvector", vec)

    def __eq__(self, other):
        if not isinstance(other, DVectorRecord):
            return NotImplemented
        return (
            (self.utterance_id, self.voice_id, self.language)
            == (other.utterance_id, other.voice_id, other.language)
            and np.array_equal(self.dvector, other.dvector)
        )


@dataclass(frozen=True, eq=False)
class GeneratedVoice:
    voice_id: int
    method: Method
    point2d: tuple[float, float] | None
    embedding: np.ndarray
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.point2d is not None:
            x, y = self.point2d
            object.__setattr__(self, "point2d", (float(x), float(y)))
        vec = _as_finite_vector(self.embedding, f"voice {self.voice_id}")
        vec.setflags(write=False)
        object.__setattr__(self, "embedding", vec)

    def __eq__(self, other):
        if not isinstance(other, GeneratedVoice):
            return NotImplemented
        return (
            self.voice_id == other.voice_id
            and self.method == other.method
            and self.point2d == other.point2d
            and np.array_equal(self.embedding, other.embedding)
        )


# -- writing helpers ---------------------------------------------------------


def format_float(value) -> str:
    return repr(float(value))


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    try:
        directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _dump_json_line(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _floats(vec) -> list[float]:
    return [float(v) for v in vec]


def _read_text(path) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _jsonl_objects(path):
    """Yield ``(line_number, obj)`` for every nonblank line."""
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise ParseError(f"{path}:{lineno}: expected a JSON object")
        yield lineno, obj


def _check_keys(obj, expected, where):
    keys = set(obj)
    if keys != set(expected):
        missing = sorted(set(expected) - keys)
        extra = sorted(keys - set(expected))
        raise ParseError(f"{where}: missing keys {missing}, unexpected keys {extra}")


def _infer_format(path, fmt):
    if fmt is not None:
        fmt = fmt.lower()
        if fmt not in ("csv", "jsonl"):
            raise ParseError(f"unknown format {fmt!r}")
        return fmt
    return "jsonl" if str(path).lower().endswith((".jsonl", ".json")) else "csv"


# -- embeddings --------------------------------------------------------------


def load_embeddings(path, format: str | None = None) -> EmbeddingSet:
    """Load a speaker embedding file (``csv`` or ``jsonl``) preserving row order."""
    fmt = _infer_format(path, format)
    if fmt == "jsonl":
        return _load_embeddings_jsonl(path)
    return _load_embeddings_csv(path)


def _load_embeddings_csv(path) -> EmbeddingSet:
    rows = list(csv.reader(_read_text(path).splitlines()))
    rows = [(i, r) for i, r in enumerate(rows, start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: missing header")
    _, header = rows[0]
    header = [h.strip() for h in header]
    if header[:3] != ["speaker_id", "gender", "language"]:
        raise ParseError(f"{path}: header must start with speaker_id,gender,language")
    dim = len(header) - 3
    expected = [f"e{i}" for i in range(dim)]
    if header[3:] != expected:
        bad = [h for h, e in zip(header[3:], expected) if h != e]
        raise ParseError(f"{path}: unexpected embedding columns {bad or header[3:]}")
    records = []
    for lineno, row in rows[1:]:
        if len(row) < 3:
            raise ParseError(f"{path}:{lineno}: too few fields")
        if len(row) - 3 != dim:
            raise DimMismatch(f"{path}:{lineno}: {len(row) - 3} values, header declares {dim}")
        sid, gender, lang = (c.strip() for c in row[:3])
        try:
            g = parse_gender(gender)
            values = [float(c) for c in row[3:]]
        except ParseError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        try:
            records.append(SpeakerRecord(sid, g, lang, values))
        except ParseError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    return EmbeddingSet(records)


def _load_embeddings_jsonl(path) -> EmbeddingSet:
    records = []
    for lineno, obj in _jsonl_objects(path):
        where = f"{path}:{lineno}"
        _check_keys(obj, ("speaker_id", "gender", "language", "embedding"), where)
        emb = obj["embedding"]
        if not isinstance(emb, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in emb):
            raise ParseError(f"{where}: embedding must be a list of numbers")
        if records and len(emb) != records[0].embedding.shape[0]:
            raise DimMismatch(f"{where}: {len(emb)} values, expected {records[0].embedding.shape[0]}")
        try:
            records.append(
                SpeakerRecord(str(obj["speaker_id"]), parse_gender(obj["gender"]), str(obj["language"]), emb)
            )
        except ParseError as exc:
            raise ParseError(f"{where}: {exc}") from None
    return EmbeddingSet(records)


def save_embeddings(eset: EmbeddingSet, path, format: str | None = None) -> None:
    fmt = _infer_format(path, format)
    if fmt == "jsonl":
        lines = [
            _dump_json_line(
                {
                    "speaker_id": r.speaker_id,
                    "gender": r.gender.value,
                    "language": r.language,
                    "embedding": _floats(r.embedding),
                }
            )
            for r in eset
        ]
        atomic_write_text(path, "".join(line + "\n" for line in lines))
        return
    header = ["speaker_id", "gender", "language"] + [f"e{i}" for i in range(eset.dim)]
    write_csv(
        path,
        header,
        ([r.speaker_id, r.gender.value, r.language, *map(float, r.embedding)] for r in eset),
    )


# -- d-vectors ---------------------------------------------------------------


def load_dvectors(path, format: str | None = None) -> list[DVectorRecord]:
    """Load utterance d-vectors. Only JSONL is defined; an empty file is valid."""
    fmt = _infer_format(path, format or "jsonl")
    if fmt != "jsonl":
        raise ParseError("d-vectors are only supported as JSONL")
    out = []
    for lineno, obj in _jsonl_objects(path):
        where = f"{path}:{lineno}"
        _check_keys(obj, ("utterance_id", "voice_id", "language", "dvector"), where)
        vec = obj["dvector"]
        if not isinstance(vec, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vec):
            raise ParseError(f"{where}: dvector must be a list of numbers")
        if out and len(vec) != out[0].dvector.shape[0]:
            raise DimMismatch(f"{where}: {len(vec)} values, expected {out[0].dvector.shape[0]}")
        try:
            out.append(DVectorRecord(str(obj["utterance_id"]), str(obj["voice_id"]), str(obj["language"]), vec))
        except ParseError as exc:
            raise ParseError(f"{where}: {exc}") from None
    return out


def save_dvectors(records: Sequence[DVectorRecord], path) -> None:
    lines = [
        _dump_json_line(
            {
                "utterance_id": r.utterance_id,
                "voice_id": r.voice_id,
                "language": r.language,
                "dvector": _floats(r.dvector),
            }
        )
        for r in records
    ]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


# -- generated voices --------------------------------------------------------


def save_generated(voices: Sequence[GeneratedVoice], path) -> None:
    """Write one JSON object per voice."""
    if not voices:
        raise InvalidArgument("no voices to save")
    lines = []
    for v in voices:
        lines.append(
            _dump_json_line(
                {
                    "voice_id": int(v.voice_id),
                    "method": v.method.value,
                    "point2d": None if v.point2d is None else [float(v.point2d[0]), float(v.point2d[1])],
                    "embedding": _floats(v.embedding),
                }
            )
        )
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_generated(path) -> list[GeneratedVoice]:
    voices = []
    for lineno, obj in _jsonl_objects(path):
        where = f"{path}:{lineno}"
        _check_keys(obj, ("voice_id", "method", "point2d", "embedding"), where)
        try:
            method = Method(obj["method"])
        except ValueError:
            raise ParseError(f"{where}: unknown method {obj['method']!r}") from None
        if isinstance(obj["voice_id"], bool) or not isinstance(obj["voice_id"], int):
            raise ParseError(f"{where}: voice_id must be an integer")
        pt = obj["point2d"]
        if pt is not None and (not isinstance(pt, list) or len(pt) != 2):
            raise ParseError(f"{where}: point2d must be [x, y] or null")
        if voices and len(obj["embedding"]) != voices[0].embedding.shape[0]:
            raise DimMismatch(f"{where}: embedding width differs from earlier rows")
        try:
            voices.append(GeneratedVoice(obj["voice_id"], method, None if pt is None else tuple(pt), obj["embedding"]))
        except ParseError as exc:
            raise ParseError(f"{where}: {exc}") from None
    return voices


# -- density grids -----------------------------------------------------------

GRID_HEADER = ("x", "y", "pm", "pf", "pa")


def export_grid(field, path) -> None:
    """Write every node of a density field as ``x,y,pm,pf,pa``, y-major."""
    rows = []
    for j, y in enumerate(field.ys):
        for i, x in enumerate(field.xs):
            rows.append((float(x), float(y), float(field.pm[i, j]), float(field.pf[i, j]), float(field.pa[i, j])))
    write_csv(path, GRID_HEADER, rows)


def load_grid(path):
    """Read a grid CSV back into a :class:`~ambivoice.density.DensityField`.

    The kernel configuration and source points are not stored in the file,
    so the returned field has ``config=None`` and no points.
    """
    from .density import DensityField

    lines = [ln for ln in _read_text(path).splitlines() if ln.strip()]
    if not lines or tuple(h.strip() for h in lines[0].split(",")) != GRID_HEADER:
        raise ParseError(f"{path}: grid header must be {','.join(GRID_HEADER)}")
    try:
        data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 5:
        raise ParseError(f"{path}: every row needs 5 values")
    ys = list(dict.fromkeys(data[:, 1].tolist()))
    xs = list(dict.fromkeys(data[:, 0].tolist()))
    nx, ny = len(xs), len(ys)
    if nx * ny != data.shape[0]:
        raise ParseError(f"{path}: rows do not form a full grid")
    grid = data.reshape(ny, nx, 5).transpose(1, 0, 2)
    return DensityField(
        xs=np.asarray(xs),
        ys=np.asarray(ys),
        pm=np.ascontiguousarray(grid[:, :, 2]),
        pf=np.ascontiguousarray(grid[:, :, 3]),
        pa=np.ascontiguousarray(grid[:, :, 4]),
        config=None,
    )

