"""Waveform and hit-record file formats.

Waveforms travel as CSV (one sample per line, or ``time,value`` pairs
with uniform spacing) or headerless little-endian raw arrays
(``raw_f32_le``, ``raw_i16_le``); the sample rate always comes from
metadata supplied by the caller, never from sniffing.

Hit files use a self-describing container: a single UTF-8 JSON header
line

    {"format": "ae-hits", "version": 1, "sample_rate": ..., "record_length": ...,
     "pretrigger": ..., "channel": ..., "trigger_times": [...]}

terminated by a newline, followed by the concatenated ``raw_f32_le``
records.  The payload must be an exact multiple of
``4 * record_length`` bytes; ``trigger_times``, when present, must match
the record count (when absent, the record ordinal stands in).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .windowing import Waveform

__all__ = [
    "DataFormatError",
    "HitRecord",
    "WAVEFORM_FORMATS",
    "read_waveform",
    "write_waveform",
    "read_hits",
    "write_hits",
]

WAVEFORM_FORMATS = ("csv", "raw_f32_le", "raw_i16_le")

_HIT_FORMAT = "ae-hits"


class DataFormatError(ValueError):
    """A file's contents do not match its declared format."""


@dataclass(frozen=True)
class HitRecord:
    """One fixed-length triggered waveform snippet.

    ``pretrigger`` samples at the head of ``samples`` precede the trigger
    instant ``trigger_time`` (seconds).
    """

    trigger_time: float
    samples: np.ndarray
    pretrigger: int
    channel: int
    sample_rate: float

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not 0 <= self.pretrigger < samples.size:
            raise ValueError(
                f"pretrigger {self.pretrigger} must be less than the record "
                f"length {samples.size}"
            )
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def waveform(self) -> Waveform:
        return Waveform(samples=self.samples, sample_rate=self.sample_rate)


def read_waveform(
    path: str | Path, fmt: str, sample_rate: float | None = None
) -> Waveform:
    """Read a waveform in a declared format.

    CSV accepts one value per line or ``time,value`` pairs; pair
    timestamps must be uniformly spaced within 1e-6 relative, and when a
    ``sample_rate`` is also supplied it must agree with the timestamps to
    the same tolerance.  Raw formats require ``sample_rate``.
    """
    path = Path(path)
    if fmt not in WAVEFORM_FORMATS:
        raise DataFormatError(f"unknown waveform format {fmt!r}")
    if fmt == "csv":
        return _read_waveform_csv(path, sample_rate)
    raw = path.read_bytes()
    item = 4 if fmt == "raw_f32_le" else 2
    if len(raw) == 0 or len(raw) % item != 0:
        raise DataFormatError(
            f"{path}: {len(raw)} bytes is not a whole number of "
            f"{item}-byte samples"
        )
    if sample_rate is None:
        raise DataFormatError(f"{fmt} requires an explicit sample rate")
    dtype = "<f4" if fmt == "raw_f32_le" else "<i2"
    samples = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    return Waveform(samples=samples, sample_rate=sample_rate)


def _read_waveform_csv(path: Path, sample_rate: float | None) -> Waveform:
    try:
        table = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"{path}: could not parse CSV: {exc}") from exc
    if table.size == 0:
        raise DataFormatError(f"{path}: empty CSV")
    if table.shape[1] == 1:
        if sample_rate is None:
            raise DataFormatError("single-column CSV requires an explicit sample rate")
        return Waveform(samples=table[:, 0], sample_rate=sample_rate)
    if table.shape[1] != 2:
        raise DataFormatError(
            f"{path}: expected 1 or 2 columns, found {table.shape[1]}"
        )
    times, values = table[:, 0], table[:, 1]
    if len(times) < 2:
        if sample_rate is None:
            raise DataFormatError("cannot infer a rate from a single (time, value) row")
        return Waveform(samples=values, sample_rate=sample_rate)
    steps = np.diff(times)
    mean_step = float(steps.mean())
    if mean_step <= 0 or np.any(np.abs(steps - mean_step) > 1e-6 * abs(mean_step)):
        raise DataFormatError(f"{path}: timestamps are not uniformly spaced")
    inferred = 1.0 / mean_step
    if sample_rate is not None and abs(inferred - sample_rate) > 1e-6 * sample_rate:
        raise DataFormatError(
            f"{path}: timestamps imply {inferred:.6g} Hz but {sample_rate:.6g} Hz "
            "was declared"
        )
    return Waveform(samples=values, sample_rate=inferred)


def write_waveform(path: str | Path, waveform: Waveform, fmt: str) -> None:
    """Write a waveform in a declared format.

    ``raw_f32_le`` round-trips bit-exactly for float32-valued data;
    ``raw_i16_le`` requires integral samples within the int16 range.
    """
    path = Path(path)
    if fmt == "csv":
        lines = "\n".join(repr(v) for v in waveform.samples.tolist())
        path.write_text(lines + "\n", encoding="ascii")
    elif fmt == "raw_f32_le":
        path.write_bytes(waveform.samples.astype("<f4").tobytes())
    elif fmt == "raw_i16_le":
        values = waveform.samples
        if np.any(values != np.round(values)) or np.any(np.abs(values) > 32767):
            raise DataFormatError("raw_i16_le requires integral samples in int16 range")
        path.write_bytes(values.astype("<i2").tobytes())
    else:
        raise DataFormatError(f"unknown waveform format {fmt!r}")


def read_hits(path: str | Path) -> list[HitRecord]:
    """Parse a hit container into its records, in stored order."""
    path = Path(path)
    raw = path.read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise DataFormatError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: bad header: {exc}") from exc
    if header.get("format") != _HIT_FORMAT:
        raise DataFormatError(f"{path}: not an {_HIT_FORMAT} container")
    record_length = int(header["record_length"])
    sample_rate = float(header["sample_rate"])
    pretrigger = int(header["pretrigger"])
    channel = int(header.get("channel", 0))
    payload = raw[newline + 1 :]
    record_bytes = 4 * record_length
    if record_length < 1 or len(payload) % record_bytes != 0:
        raise DataFormatError(
            f"{path}: payload of {len(payload)} bytes is not a whole number of "
            f"{record_bytes}-byte records"
        )
    n_records = len(payload) // record_bytes
    times = header.get("trigger_times")
    if times is not None and len(times) != n_records:
        raise DataFormatError(
            f"{path}: header lists {len(times)} trigger times for "
            f"{n_records} records"
        )
    flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    hits = []
    for i in range(n_records):
        hits.append(
            HitRecord(
                trigger_time=float(times[i]) if times is not None else float(i),
                samples=flat[i * record_length : (i + 1) * record_length],
                pretrigger=pretrigger,
                channel=channel,
                sample_rate=sample_rate,
            )
        )
    return hits


def write_hits(path: str | Path, hits: list[HitRecord]) -> None:
    """Write records into a hit container.

    Records must agree on length, pretrigger, channel and sample rate;
    those become the container header.
    """
    if not hits:
        raise DataFormatError("cannot write an empty hit container")
    first = hits[0]
    record_length = first.samples.size
    for hit in hits:
        if (
            hit.samples.size != record_length
            or hit.pretrigger != first.pretrigger
            or hit.channel != first.channel
            or hit.sample_rate != first.sample_rate
        ):
            raise DataFormatError("hit records disagree on container metadata")
    header = {
        "format": _HIT_FORMAT,
        "version": 1,
        "sample_rate": first.sample_rate,
        "record_length": record_length,
        "pretrigger": first.pretrigger,
        "channel": first.channel,
        "trigger_times": [hit.trigger_time for hit in hits],
    }
    body = b"".join(hit.samples.astype("<f4").tobytes() for hit in hits)
    path = Path(path)
    path.write_bytes(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + body)
