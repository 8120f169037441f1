"""Gait segmentation and phase-normalized excitation profiles.

A foot-contact boolean per frame is debounced and cut into strides at
touchdown events.  Excitation traces are resampled onto a fixed percent-of-
stride grid, with grid points split between stance and swing in proportion
to the measured duty factor, so gaits at different speeds line up.  Profiles
can then be compared against external EMG-style references loaded from CSV.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class GaitError(RuntimeError):
    """Raised when a contact sequence or profile cannot be analyzed."""


class Stride(NamedTuple):
    stance_start: int
    swing_start: int
    stride_end: int

    @property
    def stance_fraction(self) -> float:
        return (self.swing_start - self.stance_start) / (
            self.stride_end - self.stance_start)


# -- segmentation --------------------------------------------------------------

def _runs(mask):
    """Run-length encoding: list of [value, start, stop) triples."""
    out = []
    start = 0
    for i in range(1, len(mask) + 1):
        if i == len(mask) or mask[i] != mask[start]:
            out.append([bool(mask[start]), start, i])
            start = i
    return out


def _debounce(contact, min_phase_frames):
    """Flip runs shorter than the window into their neighbours, shortest first."""
    runs = _runs(contact)
    while len(runs) > 1:
        lengths = [stop - start for _, start, stop in runs]
        short = [i for i, n in enumerate(lengths) if n < min_phase_frames]
        if not short:
            break
        i = min(short, key=lambda k: (lengths[k], k))
        runs[i][0] = not runs[i][0]
        merged = []
        for run in runs:
            if merged and merged[-1][0] == run[0]:
                merged[-1][2] = run[2]
            else:
                merged.append(run)
        runs = merged
    clean = np.empty(len(contact), dtype=bool)
    for value, start, stop in runs:
        clean[start:stop] = value
    return clean


def segment_gait(contact, min_phase_frames: int = 3) -> list:
    """Cut a per-frame contact boolean into complete strides.

    A stride runs from one touchdown to the next; the falling edge inside it
    starts the swing phase.  A sequence that begins in contact counts the
    first frame as a touchdown.  Contact blips shorter than
    min_phase_frames are absorbed before segmentation.
    """
    contact = np.asarray(contact, dtype=bool)
    if contact.size == 0:
        raise GaitError("empty contact sequence")
    clean = _debounce(contact, min_phase_frames)
    edges = np.flatnonzero(clean[1:] & ~clean[:-1]) + 1
    starts = list(edges)
    if clean[0]:
        starts.insert(0, 0)
    strides = []
    for s, e in zip(starts[:-1], starts[1:]):
        falling = np.flatnonzero(~clean[s:e]) if e > s else np.zeros(0, int)
        if falling.size == 0:
            continue
        strides.append(Stride(int(s), int(s + falling[0]), int(e)))
    if not strides:
        raise GaitError("no complete stride found")
    return strides


# -- phase normalization -------------------------------------------------------

def _grid_split(strides, grid):
    sf = float(np.mean([st.stance_fraction for st in strides]))
    n_stance = int(round(grid * sf))
    n_stance = min(max(n_stance, 1), grid - 1)
    return n_stance, grid - n_stance, sf


def phase_normalize(trace, strides, grid: int = 200) -> np.ndarray:
    """Average a per-frame trace over strides on a percent-of-stride grid.

    Grid points are allocated to stance and swing in proportion to the mean
    stance fraction; within each phase the trace is linearly interpolated.
    Phase 0 is touchdown and the grid stops short of the next touchdown.
    """
    trace = np.asarray(trace, dtype=float)
    if not strides:
        raise GaitError("no strides to normalize over")
    n_stance, n_swing, _ = _grid_split(strides, grid)
    t_all = np.arange(trace.shape[0], dtype=float)
    rows = []
    for st in strides:
        u_stance = np.arange(n_stance) / n_stance
        u_swing = np.arange(n_swing) / n_swing
        times = np.concatenate([
            st.stance_start + u_stance * (st.swing_start - st.stance_start),
            st.swing_start + u_swing * (st.stride_end - st.swing_start)])
        rows.append(np.interp(times, t_all, trace))
    return np.mean(rows, axis=0)


@dataclass(frozen=True)
class GaitProfile:
    """Phase-normalized excitation traces for a set of muscles."""

    grid: int
    muscles: tuple
    traces: np.ndarray            # (M, grid)
    stance_fraction: float
    strides: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "muscles", tuple(self.muscles))
        object.__setattr__(self, "traces",
                           np.atleast_2d(np.asarray(self.traces, dtype=float)))
        object.__setattr__(self, "strides", tuple(self.strides))
        if self.traces.shape != (len(self.muscles), self.grid):
            raise GaitError("trace matrix does not match muscles x grid")
        if not 0.0 < self.stance_fraction < 1.0:
            raise GaitError("stance fraction must lie strictly inside (0, 1)")

    def trace(self, muscle: str) -> np.ndarray:
        return self.traces[self.muscles.index(muscle)]


def gait_profile(excitations: dict, contact, min_phase_frames: int = 3,
                 grid: int = 200) -> GaitProfile:
    """Segment contact and phase-normalize every excitation trace.

    excitations maps muscle name to a per-frame array sharing the contact
    clock.
    """
    strides = segment_gait(contact, min_phase_frames)
    _, _, sf = _grid_split(strides, grid)
    names = tuple(excitations)
    traces = np.stack([phase_normalize(excitations[name], strides, grid)
                       for name in names]) if names else np.zeros((0, grid))
    return GaitProfile(grid=grid, muscles=names, traces=traces,
                       stance_fraction=sf, strides=strides)


# -- comparison ----------------------------------------------------------------

@dataclass(frozen=True)
class ProfileComparison:
    muscle: str
    correlation: float
    peak_shift_percent: float
    excess: bool


def compare_profiles(sim: GaitProfile, reference: GaitProfile) -> dict:
    """Per-muscle comparison of a simulated profile against a reference.

    Both traces are mapped through the reference's min-max affine so level
    differences survive normalization (a simulated trace sitting 0.5 above
    the reference still reads as excess).  Reports Pearson correlation at
    zero lag, the peak-position difference in percent of stride (wrapped to
    [-50, 50)), and an excess flag raised when the simulation exceeds the
    reference by more than 0.2 over more than 15% of the grid.
    """
    if sim.grid != reference.grid:
        raise GaitError("profiles use different grid sizes")
    shared = [m for m in sim.muscles if m in reference.muscles]
    if not shared:
        raise GaitError("profiles share no muscles")
    grid = sim.grid
    out = {}
    for name in shared:
        ref = reference.trace(name)
        cur = sim.trace(name)
        span = float(ref.max() - ref.min())
        if span > 0.0:
            ref_n = (ref - ref.min()) / span
            cur_n = (cur - ref.min()) / span
        else:
            ref_n = ref - ref.min()
            cur_n = cur - ref.min()
        if np.std(cur_n) > 0.0 and np.std(ref_n) > 0.0:
            corr = float(np.corrcoef(cur_n, ref_n)[0, 1])
        else:
            corr = 1.0 if np.allclose(cur_n - np.mean(cur_n),
                                      ref_n - np.mean(ref_n)) else 0.0
        shift = (int(np.argmax(cur_n)) - int(np.argmax(ref_n))) / grid * 100.0
        shift = (shift + 50.0) % 100.0 - 50.0
        frac_above = float(np.mean(cur_n > ref_n + 0.2))
        out[name] = ProfileComparison(muscle=name, correlation=corr,
                                      peak_shift_percent=shift,
                                      excess=frac_above > 0.15)
    return out


# -- CSV interchange -----------------------------------------------------------

def load_emg_profile(text: str, grid: int = 200,
                     stance_fraction: float = 0.5) -> GaitProfile:
    """Reference profile from CSV with a phase column in percent of stride.

    Remaining columns are per-muscle values; rows may sample phase
    arbitrarily and are resampled periodically onto the grid.  External
    references carry no contact signal, so the stance fraction is taken on
    faith (default one half).
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[0].strip().lower() not in ("phase", "phase_percent"):
        raise GaitError("EMG CSV must start with a phase column")
    muscles = tuple(h.strip() for h in header[1:])
    if not muscles:
        raise GaitError("EMG CSV has no muscle columns")
    rows = []
    for row in reader:
        if not row or not "".join(row).strip():
            continue
        try:
            rows.append([float(v) for v in row])
        except ValueError as exc:
            raise GaitError(f"bad EMG row {row!r}") from exc
    if not rows:
        raise GaitError("EMG CSV has no data rows")
    data = np.asarray(rows, dtype=float)
    order = np.argsort(data[:, 0])
    phase = data[order, 0]
    values = data[order, 1:]
    target = np.arange(grid) / grid * 100.0
    traces = np.stack([
        np.interp(target, phase, values[:, m], period=100.0)
        for m in range(len(muscles))])
    return GaitProfile(grid=grid, muscles=muscles, traces=traces,
                       stance_fraction=stance_fraction)


def save_profile(profile: GaitProfile, fileobj) -> None:
    """Write a profile as CSV: phase percent, stance flag, one column per muscle."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["phase_percent", "stance"] + list(profile.muscles))
    n_stance = int(round(profile.grid * profile.stance_fraction))
    n_stance = min(max(n_stance, 1), profile.grid - 1)
    for g in range(profile.grid):
        row = [repr(g / profile.grid * 100.0), str(int(g < n_stance))]
        row += [repr(float(v)) for v in profile.traces[:, g]]
        writer.writerow(row)


def save_comparison(report: dict, fileobj) -> None:
    """Write a compare_profiles report as CSV, one row per muscle."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["muscle", "correlation", "peak_shift_percent", "excess"])
    for name, row in report.items():
        writer.writerow([name, repr(row.correlation),
                         repr(row.peak_shift_percent), str(int(row.excess))])
