"""Per-sample assignment probabilities, event boundaries, and AE features.

Window-level assignment probabilities are projected back onto the raw
time axis by averaging, per sample, the probability vectors of every
window covering it.  Maximal runs where the non-noise probability clears
a minimum become events, and each event slice yields the classic AE
features: ringdown count, peak amplitude, rise time, duration, and
energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dppmm import MixtureState, posterior_mean_rate
from .windowing import Waveform, WindowSpec, count_crossings

__all__ = [
    "SampleProbabilityField",
    "WaveformFeatures",
    "EventRecord",
    "average_probabilities",
    "segment_events",
    "extract_features",
    "noise_cluster_id",
    "build_event_records",
]

@dataclass(frozen=True)
class SampleProbabilityField:
    """Per-sample cluster probabilities over a waveform.

    ``probabilities`` maps each cluster key (stable id, or ``None`` for
    the fresh-component route) to a float array over samples.  Where
    ``coverage`` is zero no window reached the sample and every vector
    entry is zero; elsewhere each per-sample vector sums to one.
    """

    probabilities: dict[int | None, np.ndarray]
    coverage: np.ndarray

    def __len__(self) -> int:
        return self.coverage.size

    def probability_of(self, key: int | None) -> np.ndarray:
        zero = np.zeros(self.coverage.size)
        return self.probabilities.get(key, zero)


@dataclass(frozen=True)
class WaveformFeatures:
    """Classic per-event AE features, SI units throughout."""

    count: int
    peak_amplitude: float
    rise_time: float
    duration: float
    energy: float


@dataclass(frozen=True)
class EventRecord:
    """A segmented AE event on the raw time axis."""

    start_index: int
    end_index: int
    label: int
    mean_probability: float
    features: WaveformFeatures | None = None


def average_probabilities(
    window_probs: list[dict[int | None, float]],
    spec: WindowSpec,
    signal_len: int,
) -> SampleProbabilityField:
    """Arithmetic mean of window probability vectors at every sample.

    Window ``i`` covers samples ``[i*step, i*step + n)``.  Each covered
    sample averages the vectors of all windows containing it and is
    renormalised against accumulated rounding; coverage is recorded.

    Raises:
        ValueError: if the number of vectors does not match the window
            count the spec produces over ``signal_len``.
    """
    expected = spec.n_windows(signal_len)
    if len(window_probs) != expected:
        raise ValueError(
            f"got {len(window_probs)} window vectors but spec places {expected} "
            f"windows over {signal_len} samples"
        )
    n = spec.length_n
    step = spec.step
    coverage = np.zeros(signal_len, dtype=np.int64)
    sums: dict[int | None, np.ndarray] = {}
    for i, probs in enumerate(window_probs):
        start = i * step
        coverage[start : start + n] += 1
        for key, p in probs.items():
            if key not in sums:
                sums[key] = np.zeros(signal_len)
            sums[key][start : start + n] += p
    covered = coverage > 0
    total = np.zeros(signal_len)
    for acc in sums.values():
        total += acc
    # Dividing by the per-sample vector sum both averages and renormalises.
    safe_total = np.where(covered & (total > 0), total, 1.0)
    probabilities = {
        key: np.where(covered, acc / safe_total, 0.0) for key, acc in sums.items()
    }
    return SampleProbabilityField(probabilities=probabilities, coverage=coverage)


def segment_events(
    field: SampleProbabilityField,
    noise_cluster: int,
    min_probability: float = 0.5,
    min_length: int = 1,
) -> list[EventRecord]:
    """Maximal runs where the non-noise probability clears ``min_probability``.

    Each run is labelled with the non-noise cluster holding the highest
    mean probability over the run; runs shorter than ``min_length``
    samples are discarded.  ``mean_probability`` is the mean non-noise
    probability over the run, hence never below the minimum.
    """
    if noise_cluster not in field.probabilities:
        raise ValueError(f"noise cluster {noise_cluster} not present in field")
    if not 0.0 < min_probability <= 1.0:
        raise ValueError(f"min_probability must lie in (0, 1], got {min_probability}")
    event_prob = 1.0 - field.probability_of(noise_cluster)
    active = (event_prob >= min_probability) & (field.coverage > 0)
    events: list[EventRecord] = []
    boundaries = np.flatnonzero(np.diff(active.astype(np.int8)))
    starts = [0] if active[0] else []
    starts += [int(i) + 1 for i in boundaries if not active[i]]
    ends = [int(i) + 1 for i in boundaries if active[i]]
    if active[-1]:
        ends.append(active.size)
    for start, end in zip(starts, ends):
        if end - start < min_length:
            continue
        label = None
        best = -1.0
        for key, probs in field.probabilities.items():
            if key == noise_cluster or key is None:
                continue
            mean_p = float(probs[start:end].mean())
            if mean_p > best:
                best, label = mean_p, key
        if label is None:
            continue  # only fresh-component mass beat the noise; nothing to label
        events.append(
            EventRecord(
                start_index=start,
                end_index=end,
                label=label,
                mean_probability=float(event_prob[start:end].mean()),
            )
        )
    return events


def extract_features(
    waveform: Waveform,
    event: tuple[int, int],
    threshold: float,
    rectify: bool = True,
) -> WaveformFeatures:
    """AE features of one event slice.

    Count is the number of upward threshold crossings; duration spans the
    first to the last above-threshold sample; rise time runs from the
    first above-threshold sample to the absolute peak; energy is the sum
    of squared voltages divided by the sample rate.  A slice that never
    crosses the threshold reports count 0 with zero rise time and
    duration, but energy is still computed.
    """
    start, end = event
    if not 0 <= start < end <= len(waveform):
        raise ValueError(f"event ({start}, {end}) outside waveform of {len(waveform)}")
    v = waveform.samples[start:end]
    magnitude = np.abs(v)
    observed = magnitude if rectify else v
    count = count_crossings(v, threshold, rectify)
    energy = float(np.sum(v * v)) / waveform.sample_rate
    peak = float(magnitude.max())
    above = np.flatnonzero(observed > threshold)
    if above.size == 0:
        return WaveformFeatures(
            count=0, peak_amplitude=peak, rise_time=0.0, duration=0.0, energy=energy
        )
    first = int(above[0])
    last = int(above[-1])
    peak_index = int(np.argmax(magnitude))
    rise_time = (peak_index - first) / waveform.sample_rate
    duration = (last - first) / waveform.sample_rate
    return WaveformFeatures(
        count=count,
        peak_amplitude=peak,
        rise_time=rise_time,
        duration=duration,
        energy=energy,
    )


def noise_cluster_id(state: MixtureState) -> int:
    """Cluster representing background noise: the lowest posterior-mean rate.

    Background has the lowest count rate by construction; ties break
    toward the lowest id.
    """
    if not state.clusters:
        raise ValueError("state has no clusters")
    base = state.hyper.base
    return min(
        state.clusters.values(), key=lambda c: (posterior_mean_rate(c, base), c.id)
    ).id


def build_event_records(
    waveform: Waveform,
    field: SampleProbabilityField,
    noise_cluster: int,
    threshold: float,
    min_probability: float = 0.5,
    min_length: int = 1,
    rectify: bool = True,
) -> list[EventRecord]:
    """Segment events and attach extracted features in one pass."""
    events = segment_events(field, noise_cluster, min_probability, min_length)
    return [
        EventRecord(
            start_index=e.start_index,
            end_index=e.end_index,
            label=e.label,
            mean_probability=e.mean_probability,
            features=extract_features(
                waveform, (e.start_index, e.end_index), threshold, rectify
            ),
        )
        for e in events
    ]
