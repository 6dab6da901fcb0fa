"""Trial-record export: CSV long format and a compact binary frame."""

import csv
import io
import struct
from dataclasses import dataclass

import numpy as np

from .errors import MisuseError, ParseError
from .lattice import SimResult

PORTS = "ABCD"
_MAGIC = b"QRLFRAME"
_VERSION = 1


@dataclass(frozen=True)
class TrialRecord:
    """Raw and feedforward-processed outcomes of one trial."""

    trial_index: int
    seed_used: int
    macronodes: np.ndarray
    raw: np.ndarray          # (macronodes, 4)
    processed: np.ndarray    # (macronodes, 4)


def iter_trial_records(result: SimResult):
    for t in range(result.n_trials):
        yield TrialRecord(
            trial_index=t,
            seed_used=result.seed,
            macronodes=result.kept,
            raw=result.raw[:, :, t],
            processed=result.processed[:, :, t],
        )


def write_records_csv(result: SimResult, path):
    """Long-format CSV: one row per (trial, macronode, port)."""
    with open(path, "w", newline="") as handle:
        handle.write(f"# run_digest={result.run_digest} trials={result.n_trials} "
                     f"seed={result.seed}\n")
        writer = csv.writer(handle)
        writer.writerow(["trial", "macronode", "port", "raw", "processed"])
        for record in iter_trial_records(result):
            for i, k in enumerate(record.macronodes):
                for p, port in enumerate(PORTS):
                    writer.writerow(
                        [record.trial_index, int(k), port,
                         repr(float(record.raw[i, p])),
                         repr(float(record.processed[i, p]))]
                    )


def read_records_csv(path):
    """Returns (digest, raw, processed, kept) from a records CSV."""
    with open(path) as handle:
        header = handle.readline()
        if not header.startswith("# run_digest="):
            raise ParseError("missing run digest header", 1)
        digest = header.split()[1].split("=", 1)[1]
        reader = csv.DictReader(handle)
        cells = {}
        for row in reader:
            key = (int(row["trial"]), int(row["macronode"]), PORTS.index(row["port"]))
            cells[key] = (float(row["raw"]), float(row["processed"]))
    trials = 1 + max(k[0] for k in cells)
    kept = np.array(sorted({k[1] for k in cells}))
    raw = np.empty((len(kept), 4, trials))
    processed = np.empty((len(kept), 4, trials))
    index = {int(k): i for i, k in enumerate(kept)}
    for (t, k, p), (r, m) in cells.items():
        raw[index[k], p, t] = r
        processed[index[k], p, t] = m
    return digest, raw, processed, kept


def write_frame(result: SimResult, path):
    """Binary frame: header with the run digest, little-endian float64 data."""
    digest = result.run_digest.encode("ascii")
    if len(digest) != 16:
        raise MisuseError("run digest must be 16 hex characters")
    with open(path, "wb") as handle:
        handle.write(_MAGIC)
        handle.write(struct.pack("<I", _VERSION))
        handle.write(digest)
        handle.write(
            struct.pack("<QQQ", result.kept.size, 4, result.n_trials)
        )
        handle.write(struct.pack("<q", result.seed))
        handle.write(result.kept.astype("<u8").tobytes())
        handle.write(result.raw.astype("<f8").tobytes())
        handle.write(result.processed.astype("<f8").tobytes())


def read_frame(path):
    """Returns (digest, raw, processed, kept, seed) from a binary frame."""
    with open(path, "rb") as handle:
        data = handle.read()
    buf = io.BytesIO(data)
    if buf.read(8) != _MAGIC:
        raise ParseError("not a trial frame (bad magic)")
    (version,) = struct.unpack("<I", buf.read(4))
    if version != _VERSION:
        raise ParseError(f"unsupported frame version {version}")
    digest = buf.read(16).decode("ascii")
    n_kept, n_ports, n_trials = struct.unpack("<QQQ", buf.read(24))
    (seed,) = struct.unpack("<q", buf.read(8))
    kept = np.frombuffer(buf.read(8 * n_kept), dtype="<u8").astype(int)
    count = n_kept * n_ports * n_trials
    raw = np.frombuffer(buf.read(8 * count), dtype="<f8").reshape(
        n_kept, n_ports, n_trials
    )
    processed = np.frombuffer(buf.read(8 * count), dtype="<f8").reshape(
        n_kept, n_ports, n_trials
    )
    if buf.read(1):
        raise ParseError("trailing bytes after frame payload")
    return digest, raw.copy(), processed.copy(), kept, seed
