"""Durable snapshots of an in-progress randomised BOSS build.

The on-disk layout is documented in ``docs/checkpoint_format.md``. A file
holds the build configuration, the parameter ids drawn so far, every retained
member in full, and a fingerprint of the training data so a resume against
different data is refused.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import sparse

from rboss.boss import BaseBossModel
from rboss.data import LabeledDataset
from rboss.ensemble import EnsembleMember, RbossConfig
from rboss.exceptions import (
    CheckpointError,
    CheckpointNotFoundError,
    ConfigError,
    DatasetMismatchError,
    ParameterError,
    VersionError,
)
from rboss.sfa import SfaParameters, decode_word, encode_word

__all__ = [
    "FORMAT_VERSION",
    "MAGIC",
    "DatasetFingerprint",
    "BuildCheckpoint",
    "save_checkpoint",
    "load_checkpoint",
    "dumps",
    "loads",
    "resume_build",
]

MAGIC = b"RBOS"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class DatasetFingerprint:
    n: int
    m: int
    class_count: int
    digest: bytes

    @classmethod
    def of(cls, data: LabeledDataset) -> "DatasetFingerprint":
        return cls(data.n, data.m, data.class_count, data.fingerprint())


@dataclass
class BuildCheckpoint:
    config: RbossConfig
    drawn_ids: list
    members: list
    members_built: int
    elapsed_seconds: float
    fingerprint: DatasetFingerprint
    peak_bags: int = 0
    format_version: int = FORMAT_VERSION

    def validate(self) -> None:
        if len(set(self.drawn_ids)) != len(self.drawn_ids):
            raise CheckpointError("drawn parameter ids are not distinct")
        if self.members_built != len(self.drawn_ids):
            raise CheckpointError(
                f"members_built {self.members_built} does not match "
                f"{len(self.drawn_ids)} drawn ids"
            )
        drawn = set(self.drawn_ids)
        for m in self.members:
            if m.param_id not in drawn:
                raise CheckpointError(f"member references undrawn id {m.param_id}")

    def check_dataset(self, data: LabeledDataset) -> None:
        if DatasetFingerprint.of(data) != self.fingerprint:
            raise DatasetMismatchError(
                "checkpoint was written for a different dataset "
                f"(n={self.fingerprint.n}, m={self.fingerprint.m}, "
                f"classes={self.fingerprint.class_count}); got "
                f"n={data.n}, m={data.m}, classes={data.class_count}"
            )


# --------------------------------------------------------------------------
# encoding


class _Writer:
    def __init__(self):
        self.parts = []

    def pack(self, fmt, *values):
        self.parts.append(struct.pack("<" + fmt, *values))

    def array(self, a, dtype):
        a = np.ascontiguousarray(a, dtype=dtype)
        self.pack("Q", a.size)
        self.parts.append(a.tobytes())

    def blob(self, b: bytes):
        self.pack("Q", len(b))
        self.parts.append(b)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = memoryview(buf)
        self.pos = 0

    def unpack(self, fmt):
        fmt = "<" + fmt
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise CheckpointError("checkpoint is truncated")
        out = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return out if len(out) > 1 else out[0]

    def _take(self, nbytes):
        if self.pos + nbytes > len(self.buf):
            raise CheckpointError("checkpoint is truncated")
        chunk = self.buf[self.pos : self.pos + nbytes]
        self.pos += nbytes
        return chunk

    def array(self, dtype):
        count = self.unpack("Q")
        dt = np.dtype(dtype)
        return np.frombuffer(self._take(count * dt.itemsize), dtype=dt).copy()

    def blob(self) -> bytes:
        return bytes(self._take(self.unpack("Q")))


def _write_member(w: _Writer, m: EnsembleMember):
    model = m.model
    p = model.params
    w.pack("IIiii?", m.param_id, m.ordinal, p.word_length, p.alphabet_size, p.window_length, p.normalize)
    w.pack("d", np.nan if m.train_accuracy is None else m.train_accuracy)
    w.pack("d", m.weight)
    w.pack("?", m.subsample_indices is not None)
    if m.subsample_indices is not None:
        w.array(m.subsample_indices, "<u4")
    w.pack("II", *model.breakpoints.shape)
    w.array(model.breakpoints.ravel(), "<f8")
    w.pack("II", model.class_count, model.series_length)
    w.array(model.train_labels, "<u4")
    symbols = np.array(
        [decode_word(v, p.word_length, p.alphabet_size) for v in model.vocabulary],
        dtype=np.uint8,
    ).reshape(-1, p.word_length)
    w.array(symbols.ravel(), "u1")
    counts = model.counts
    w.array(counts.indptr, "<u8")
    w.array(counts.indices, "<u4")
    w.array(counts.data, "<u4")


def _read_member(r: _Reader) -> EnsembleMember:
    param_id, ordinal, l, a, win, norm = r.unpack("IIiii?")
    params = SfaParameters(l, a, win, norm)
    acc = r.unpack("d")
    weight = r.unpack("d")
    subsample = r.array("<u4").astype(np.int64) if r.unpack("?") else None
    rows, cols = r.unpack("II")
    bp = r.array("<f8").reshape(rows, cols)
    bp.setflags(write=False)
    class_count, series_length = r.unpack("II")
    labels = r.array("<u4").astype(np.int64)
    labels.setflags(write=False)
    symbols = r.array("u1").reshape(-1, l)
    vocab = [encode_word(s, a) for s in symbols]
    vocab = np.array(vocab, dtype=np.int64 if a**l < 2**63 else object)
    indptr = r.array("<u8").astype(np.int64)
    indices = r.array("<u4").astype(np.int32)
    data = r.array("<u4").astype(np.float64)
    counts = sparse.csr_matrix((data, indices, indptr), shape=(labels.size, vocab.size))
    if bp.shape != (l, a - 1):
        raise CheckpointError("breakpoint matrix does not match member parameters")
    model = BaseBossModel(params, bp, vocab, counts, labels, class_count, series_length)
    return EnsembleMember(
        model, None if np.isnan(acc) else acc, weight, subsample, param_id, ordinal
    )


def dumps(state: BuildCheckpoint) -> bytes:
    state.validate()
    w = _Writer()
    w.parts.append(MAGIC)
    w.pack("I", state.format_version)
    w.blob(json.dumps(state.config.to_dict(), sort_keys=True).encode("utf-8"))
    fp = state.fingerprint
    w.pack("QQI", fp.n, fp.m, fp.class_count)
    w.blob(fp.digest)
    w.pack("QdQ", state.members_built, state.elapsed_seconds, state.peak_bags)
    w.array(state.drawn_ids, "<u4")
    w.pack("I", len(state.members))
    for m in state.members:
        _write_member(w, m)
    body = w.getvalue()
    return body + struct.pack("<I", zlib.crc32(body))


def loads(buf: bytes) -> BuildCheckpoint:
    if len(buf) < 12 or buf[:4] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic bytes)")
    version = struct.unpack_from("<I", buf, 4)[0]
    if version != FORMAT_VERSION:
        raise VersionError(version, FORMAT_VERSION)
    body, (crc,) = buf[:-4], struct.unpack("<I", buf[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError("checkpoint checksum mismatch (corrupted file)")
    r = _Reader(body)
    r.pos = 8
    try:
        config = RbossConfig.from_dict(json.loads(r.blob().decode("utf-8")))
        n, m, class_count = r.unpack("QQI")
        fp = DatasetFingerprint(n, m, class_count, r.blob())
        built, elapsed, peak = r.unpack("QdQ")
        drawn = [int(i) for i in r.array("<u4")]
        members = [_read_member(r) for _ in range(r.unpack("I"))]
    except (ValueError, IndexError, KeyError, struct.error, ParameterError, ConfigError) as exc:
        raise CheckpointError(f"corrupted checkpoint payload: {exc}") from None
    if r.pos != len(body):
        raise CheckpointError("trailing bytes after checkpoint payload")
    state = BuildCheckpoint(config, drawn, members, built, elapsed, fp, peak, version)
    state.validate()
    return state


def save_checkpoint(state: BuildCheckpoint, path) -> None:
    """Write ``state`` atomically: a temp file in the same directory is renamed over ``path``."""
    path = Path(path)
    payload = dumps(state)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
    except OSError as exc:
        raise CheckpointError(f"could not write checkpoint {path}: {exc}") from exc


def load_checkpoint(path) -> BuildCheckpoint:
    try:
        buf = Path(path).read_bytes()
    except FileNotFoundError:
        raise CheckpointNotFoundError(f"no checkpoint at {path}") from None
    except OSError as exc:
        raise CheckpointError(f"could not read checkpoint {path}: {exc}") from exc
    return loads(buf)


def resume_build(
    train: LabeledDataset,
    checkpoint: BuildCheckpoint,
    checkpoint_path=None,
    checkpoint_every: Optional[int] = None,
):
    """Continue an interrupted build with the configuration stored in ``checkpoint``."""
    from rboss.randomised import RbossBuilder

    builder = RbossBuilder.from_checkpoint(
        train, checkpoint, checkpoint_path=checkpoint_path, checkpoint_every=checkpoint_every
    )
    return builder.run()
