"""External file formats: the binary frame stream and enrollment documents.

Stream files carry one little-endian f32 record per frame (V* log-posterior
values followed by D embedding values) behind a fixed header; they are read
and written in blocks so memory never depends on stream length. Enrollment
files are JSON documents holding the keyword, its token text embeddings, the
pooling level, and the scoring flags, fingerprinted against the vocabulary.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CountMismatch, DimensionMismatch, HeaderMismatch
from .scoring import LEVELS, Enrollment, build_enrollment
from .vocab import Vocabulary, default_vocabulary, tokenize

STREAM_MAGIC = b"CTCA"
STREAM_VERSION = 1
_HEADER_STRUCT = struct.Struct("<4sHHHIf")  # magic, version, V*, D, T, frame_rate
HEADER_SIZE = _HEADER_STRUCT.size  # 18 bytes
_T_FIELD_OFFSET = 10  # byte offset of the frame-count field

DEFAULT_FRAME_RATE = 100.0


@dataclass(frozen=True)
class StreamHeader:
    vocab_size: int
    dim: int
    n_frames: int
    frame_rate_hz: float = DEFAULT_FRAME_RATE

    @property
    def frame_bytes(self) -> int:
        return 4 * (self.vocab_size + self.dim)


class StreamWriter:
    """Writes a stream file incrementally; frame count is patched on close."""

    def __init__(self, path, vocab_size: int, dim: int, frame_rate: float = DEFAULT_FRAME_RATE):
        self.vocab_size = int(vocab_size)
        self.dim = int(dim)
        self.frame_rate = float(frame_rate)
        self.n_frames = 0
        self._f = open(path, "wb")
        self._f.write(
            _HEADER_STRUCT.pack(
                STREAM_MAGIC, STREAM_VERSION, self.vocab_size, self.dim, 0, self.frame_rate
            )
        )

    def write_block(self, log_posteriors: np.ndarray, embeddings: np.ndarray):
        lp = np.asarray(log_posteriors)
        emb = np.asarray(embeddings)
        if lp.ndim != 2 or lp.shape[1] != self.vocab_size:
            raise DimensionMismatch(f"expected (T, {self.vocab_size}) log-posteriors, got {lp.shape}")
        if emb.ndim != 2 or emb.shape[1] != self.dim or emb.shape[0] != lp.shape[0]:
            raise DimensionMismatch(f"expected (T, {self.dim}) embeddings, got {emb.shape}")
        records = np.concatenate(
            [lp.astype("<f4", copy=False), emb.astype("<f4", copy=False)], axis=1
        )
        self._f.write(np.ascontiguousarray(records, dtype="<f4").tobytes())
        self.n_frames += lp.shape[0]

    def close(self):
        self._f.seek(_T_FIELD_OFFSET)
        self._f.write(struct.pack("<I", self.n_frames))
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class StreamReader:
    """Block-at-a-time stream reader; validates header and exact byte length."""

    def __init__(self, path):
        self._f = open(path, "rb")
        raw = self._f.read(HEADER_SIZE)
        if len(raw) < HEADER_SIZE:
            self._f.close()
            raise HeaderMismatch(f"{path}: truncated header")
        magic, version, vocab_size, dim, n_frames, rate = _HEADER_STRUCT.unpack(raw)
        if magic != STREAM_MAGIC:
            self._f.close()
            raise HeaderMismatch(f"{path}: bad magic {magic!r}")
        if version != STREAM_VERSION:
            self._f.close()
            raise HeaderMismatch(f"{path}: unsupported version {version}")
        self.header = StreamHeader(vocab_size, dim, n_frames, rate)
        self._f.seek(0, 2)
        expected = HEADER_SIZE + n_frames * self.header.frame_bytes
        if self._f.tell() != expected:
            self._f.close()
            raise HeaderMismatch(
                f"{path}: size {self._f.tell()} bytes, header implies {expected}"
            )
        self._f.seek(HEADER_SIZE)
        self._remaining = n_frames

    def read_block(self, max_frames: int = 4096):
        """Next (log_posteriors, embeddings) f32 block, or None at end of stream."""
        if self._remaining == 0:
            return None
        n = min(self._remaining, max_frames)
        width = self.header.vocab_size + self.header.dim
        data = np.frombuffer(self._f.read(n * self.header.frame_bytes), dtype="<f4")
        data = data.reshape(n, width)
        self._remaining -= n
        return data[:, : self.header.vocab_size], data[:, self.header.vocab_size :]

    def blocks(self, max_frames: int = 4096):
        while True:
            block = self.read_block(max_frames)
            if block is None:
                return
            yield block

    def close(self):
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def write_stream(path, log_posteriors, embeddings, frame_rate: float = DEFAULT_FRAME_RATE):
    lp = np.atleast_2d(np.asarray(log_posteriors))
    emb = np.atleast_2d(np.asarray(embeddings))
    with StreamWriter(path, lp.shape[1], emb.shape[1], frame_rate) as w:
        if lp.shape[0]:
            w.write_block(lp, emb)


def read_stream(path):
    """Whole-file convenience read: (header, log_posteriors, embeddings)."""
    with StreamReader(path) as r:
        header = r.header
        lps, embs = [], []
        for lp, emb in r.blocks():
            lps.append(lp.copy())
            embs.append(emb.copy())
    if lps:
        return header, np.concatenate(lps), np.concatenate(embs)
    return (
        header,
        np.zeros((0, header.vocab_size), dtype="<f4"),
        np.zeros((0, header.dim), dtype="<f4"),
    )


ENROLLMENT_FORMAT = "ctcat-enrollment"
ENROLLMENT_VERSION = 1


def save_enrollment(path, enr: Enrollment, vocab: Vocabulary | None = None):
    vocab = vocab or default_vocabulary()
    doc = {
        "format": ENROLLMENT_FORMAT,
        "version": ENROLLMENT_VERSION,
        "keyword": enr.keyword.text,
        "vocab_sha256": vocab.fingerprint(),
        "level": enr.level,
        "lambda": enr.lam,
        "U": enr.U,
        "dim": enr.dim,
        "include_spaces": enr.include_spaces,
        "normalize_ctc": enr.normalize_ctc,
        "token_te": [[float(x) for x in row] for row in enr.token_te],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, indent=1)
        f.write("\n")


def load_enrollment(path, vocab: Vocabulary | None = None) -> Enrollment:
    vocab = vocab or default_vocabulary()
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != ENROLLMENT_FORMAT or doc.get("version") != ENROLLMENT_VERSION:
        raise HeaderMismatch(f"{path}: not a ctcat enrollment document")
    if doc.get("vocab_sha256") != vocab.fingerprint():
        raise HeaderMismatch(f"{path}: enrollment was built against a different vocabulary")
    if doc.get("level") not in LEVELS:
        raise HeaderMismatch(f"{path}: unknown level {doc.get('level')!r}")
    keyword = tokenize(doc["keyword"], vocab)
    te = np.asarray(doc["token_te"], dtype=np.float64)
    if te.ndim != 2 or te.shape != (int(doc["U"]), int(doc["dim"])):
        raise CountMismatch(
            f"{path}: token_te shape {te.shape} disagrees with U={doc['U']}, dim={doc['dim']}"
        )
    if te.shape[0] != keyword.U:
        raise CountMismatch(f"{path}: {te.shape[0]} embedding rows for U={keyword.U}")
    return build_enrollment(
        keyword,
        te,
        level=doc["level"],
        lam=float(doc["lambda"]),
        include_spaces=bool(doc.get("include_spaces", False)),
        normalize_ctc=bool(doc.get("normalize_ctc", False)),
        vocab=vocab,
    )
