"""Search-space description and decoding.

A search space is an ordered list of scalar entries, each either fixed to a
constant or free on a box ``[lo, hi)``.  The optimizer works in the
normalized unit cube over the free entries only; decoding applies the
affine map ``lo + x * (hi - lo)`` per free entry, fills in the fixed ones,
and assembles an :class:`~osclab.oscillators.OscillatorParams`.

Entry order is canonical: amplitudes, offsets, phase shifts (joint 0 first,
its phase shift always fixed to zero by convention), then the swing rate
and, for dual-rate variants, the stance rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .oscillators import OscillatorParams, PolicyVariant


@dataclass(frozen=True)
class SpaceEntry:
    """One scalar of the search space: fixed to ``value`` or free on [lo, hi)."""

    name: str
    lo: float = 0.0
    hi: float = 0.0
    value: float | None = None

    def __post_init__(self):
        if self.value is None and not self.lo < self.hi:
            raise ValueError(f"entry {self.name!r}: need lo < hi, got [{self.lo}, {self.hi})")

    @property
    def fixed(self) -> bool:
        return self.value is not None


def fixed(name: str, value: float) -> SpaceEntry:
    return SpaceEntry(name=name, value=float(value))


def uniform(name: str, lo: float, hi: float) -> SpaceEntry:
    return SpaceEntry(name=name, lo=float(lo), hi=float(hi))


@dataclass(frozen=True)
class SearchSpace:
    """Ordered entries plus the joint count they decode to."""

    joint_count: int
    entries: tuple[SpaceEntry, ...]
    variant: PolicyVariant = PolicyVariant.FULL

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        n = self.joint_count
        expected = 3 * n + (2 if self.variant.dual_rate else 1)
        if len(self.entries) != expected:
            raise ValueError(
                f"expected {expected} entries for {n} joints ({self.variant.value}), "
                f"got {len(self.entries)}"
            )

    @property
    def free_entries(self) -> tuple[SpaceEntry, ...]:
        return tuple(e for e in self.entries if not e.fixed)

    @property
    def dimension(self) -> int:
        return len(self.free_entries)

    def decode(self, x: Sequence[float]) -> OscillatorParams:
        """Map a free vector in the unit cube to oscillator parameters."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected {self.dimension} coordinates, got {x.shape}")
        values = []
        j = 0
        for entry in self.entries:
            if entry.fixed:
                values.append(entry.value)
            else:
                values.append(entry.lo + x[j] * (entry.hi - entry.lo))
                j += 1
        n = self.joint_count
        omega_swing = values[3 * n]
        omega_stance = values[3 * n + 1] if self.variant.dual_rate else omega_swing
        return OscillatorParams(
            amplitudes=np.array(values[0:n]),
            offsets=np.array(values[n : 2 * n]),
            phase_shifts=np.array(values[2 * n : 3 * n]),
            omega_swing=omega_swing,
            omega_stance=omega_stance,
        )

    def bounds(self) -> np.ndarray:
        """(d, 2) array of [lo, hi) per free entry, in entry order."""
        return np.array([[e.lo, e.hi] for e in self.free_entries])


def param_count(space: SearchSpace) -> int:
    """Number of free scalars; fixed entries do not count."""
    return space.dimension


def _scalar_or_range(name: str, spec) -> SpaceEntry:
    if isinstance(spec, (int, float)):
        return fixed(name, spec)
    lo, hi = spec
    return uniform(name, lo, hi)


def make_space(
    joint_count: int,
    amplitude,
    offset,
    phase,
    omega,
    variant: PolicyVariant = PolicyVariant.FULL,
) -> SearchSpace:
    """Build the canonical per-joint space from scalar-or-(lo, hi) specs.

    ``phase`` applies to joints 1..n-1; joint 0's shift is pinned to zero.
    Variants without phase shifts pin every shift; single-rate variants get
    one rate entry instead of two.
    """
    entries = []
    for i in range(joint_count):
        entries.append(_scalar_or_range(f"amplitude_{i}", amplitude))
    for i in range(joint_count):
        entries.append(_scalar_or_range(f"offset_{i}", offset))
    entries.append(fixed("phase_0", 0.0))
    for i in range(1, joint_count):
        if variant.uses_phase_shift:
            entries.append(_scalar_or_range(f"phase_{i}", phase))
        else:
            entries.append(fixed(f"phase_{i}", 0.0))
    entries.append(_scalar_or_range("omega_swing", omega))
    if variant.dual_rate:
        entries.append(_scalar_or_range("omega_stance", omega))
    return SearchSpace(joint_count=joint_count, entries=tuple(entries), variant=variant)
