"""Shared physical parameters, grids, wavepacket containers and transforms.

All frequencies in this library are detunings from the linearization point
of the waveguide dispersion, and the decay parameter ``tau`` fixes the time
unit (the spontaneous emission rate of the atom is ``2/tau``).  Frequency
integrals are plain rectangle sums ``sum(f) * step``; the time-domain
representation of a packet is

    a(t) = (2*pi)**-0.5 * integral dk f(k) exp(-i k t),

so a grid with spacing ``step`` supports time-domain evaluation for
``|t| <= pi/step`` (Nyquist window) before periodic images fold back.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooNarrow, InvalidWidth

__all__ = [
    "Mode",
    "SystemParams",
    "FrequencyGrid",
    "OnePhotonWavepacket",
    "TwoPhotonAmplitude",
    "make_gaussian_packet",
    "packet_to_time_domain",
    "packet_from_time_samples",
    "norm2_one",
    "norm2_two",
    "symmetrize",
]

# A normalization is accepted as exact when |norm^2 - 1| falls below this;
# re-normalizing is then a no-op, which makes normalize() idempotent
# bit-for-bit.
_NORM_TOL = 1e-12


class Mode(enum.Enum):
    """Waveguide topology: one-way or bidirectional propagation."""

    CHIRAL = "chiral"
    TWO_MODE = "two-mode"


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the atom-waveguide system.

    Attributes:
        omega_atom: atomic detuning from the dispersion linearization point.
        tau: inverse coupling rate; the spontaneous emission rate is 2/tau.
        mode: waveguide topology (chiral or two-mode).
    """

    omega_atom: float
    tau: float
    mode: Mode = Mode.CHIRAL

    def __post_init__(self) -> None:
        if not (self.tau > 0):
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not math.isfinite(self.omega_atom):
            raise ValueError("omega_atom must be finite")


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency axis ``w_n = start + n*step`` with ``count`` points."""

    start: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if not (self.step > 0):
            raise ValueError(f"step must be positive, got {self.step}")
        if self.count < 2:
            raise ValueError(f"count must be at least 2, got {self.count}")

    @property
    def stop(self) -> float:
        """Last grid point."""
        return self.start + (self.count - 1) * self.step

    @property
    def span(self) -> float:
        """Extent from first to last grid point."""
        return (self.count - 1) * self.step

    def points(self) -> np.ndarray:
        """Grid frequencies as a float array of length ``count``."""
        return self.start + self.step * np.arange(self.count)

    @staticmethod
    def centered(center: float, span: float, count: int) -> "FrequencyGrid":
        """Grid of ``count`` points covering ``[center-span/2, center+span/2]``."""
        step = span / (count - 1)
        return FrequencyGrid(center - span / 2.0, step, count)


def _frozen_array(values, shape_hint: str) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.ndim != len(shape_hint):
        raise ValueError(f"expected a {len(shape_hint)}-d amplitude array")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class OnePhotonWavepacket:
    """Spectral amplitude f(k) of a single-photon state on a grid.

    The squared norm is ``sum |f_n|^2 * step``; a normalized packet has
    squared norm 1 within 1e-10.
    """

    grid: FrequencyGrid
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = _frozen_array(self.amplitude, "x")
        if arr.shape != (self.grid.count,):
            raise ValueError(
                f"amplitude length {arr.shape[0]} != grid count {self.grid.count}"
            )
        object.__setattr__(self, "amplitude", arr)

    def norm2(self) -> float:
        return norm2_one(self)

    def normalize(self) -> "OnePhotonWavepacket":
        """Rescale to unit squared norm (no-op if already normalized)."""
        n2 = self.norm2()
        if n2 == 0.0:
            raise ValueError("cannot normalize a zero packet")
        if abs(n2 - 1.0) <= _NORM_TOL:
            return self
        return OnePhotonWavepacket(self.grid, self.amplitude / math.sqrt(n2))

    def delayed(self, t0: float) -> "OnePhotonWavepacket":
        """Packet translated in time by ``t0`` (phase ``exp(+i k t0)``)."""
        return OnePhotonWavepacket(
            self.grid, self.amplitude * np.exp(1j * self.grid.points() * t0)
        )


@dataclass(frozen=True)
class TwoPhotonAmplitude:
    """Two-photon spectral amplitude f(k1, k2) on a shared grid.

    Same-channel amplitudes are bosonic and are symmetrized on construction;
    cross-channel tables (the two axes label photons in different
    directions) are stored as given by passing ``symmetric=False``.
    The squared norm is ``sum |f|^2 * step**2``.
    """

    grid: FrequencyGrid
    amplitude: np.ndarray = field(repr=False)
    symmetric: bool = True

    def __post_init__(self) -> None:
        arr = _frozen_array(self.amplitude, "xy")
        if arr.shape != (self.grid.count, self.grid.count):
            raise ValueError(
                f"amplitude shape {arr.shape} != grid count {self.grid.count}"
            )
        if self.symmetric:
            arr = symmetrize(arr)
            arr.flags.writeable = False
        object.__setattr__(self, "amplitude", arr)

    def norm2(self) -> float:
        return norm2_two(self)

    def normalize(self) -> "TwoPhotonAmplitude":
        n2 = self.norm2()
        if n2 == 0.0:
            raise ValueError("cannot normalize a zero amplitude")
        if abs(n2 - 1.0) <= _NORM_TOL:
            return self
        return TwoPhotonAmplitude(
            self.grid, self.amplitude / math.sqrt(n2), symmetric=self.symmetric
        )

    def delayed(self, t0: float) -> "TwoPhotonAmplitude":
        """Amplitude translated in time by ``t0`` on both photons."""
        phase = np.exp(1j * self.grid.points() * t0)
        return TwoPhotonAmplitude(
            self.grid, self.amplitude * np.outer(phase, phase), symmetric=self.symmetric
        )


def symmetrize(table: np.ndarray) -> np.ndarray:
    """Project an N x N table onto its exchange-symmetric part.

    Exact on already-symmetric input and idempotent (floating-point addition
    is commutative, so the result is symmetric to the last bit).
    """
    table = np.asarray(table, dtype=complex)
    return 0.5 * (table + table.T)


def norm2_one(packet: OnePhotonWavepacket) -> float:
    """Squared L2 norm ``sum |f|^2 * step`` of a one-photon packet."""
    return float(np.sum(np.abs(packet.amplitude) ** 2) * packet.grid.step)


def norm2_two(amp: TwoPhotonAmplitude) -> float:
    """Squared L2 norm ``sum |f|^2 * step**2`` of a two-photon amplitude."""
    return float(np.sum(np.abs(amp.amplitude) ** 2) * amp.grid.step**2)


def make_gaussian_packet(
    grid: FrequencyGrid, center: float, width: float
) -> OnePhotonWavepacket:
    """Normalized Gaussian packet ``f(k) ~ exp(-(k-center)^2 / (2 width^2))``.

    Args:
        grid: frequency axis the packet lives on.
        center: peak frequency.
        width: amplitude standard deviation (must be > 0).

    Raises:
        InvalidWidth: if ``width <= 0``.
        GridTooNarrow: if the 5-sigma support extends beyond the grid.
    """
    if not (width > 0):
        raise InvalidWidth(f"width must be positive, got {width}")
    if center - 5 * width < grid.start or center + 5 * width > grid.stop:
        raise GridTooNarrow(
            f"Gaussian support [{center - 5 * width:g}, {center + 5 * width:g}] "
            f"exceeds grid [{grid.start:g}, {grid.stop:g}]"
        )
    k = grid.points()
    amp = np.exp(-((k - center) ** 2) / (2.0 * width**2)).astype(complex)
    return OnePhotonWavepacket(grid, amp).normalize()


def packet_to_time_domain(packet: OnePhotonWavepacket, times) -> np.ndarray:
    """Time-domain amplitude ``a(t) = (2 pi)^-1/2 sum_n f_n exp(-i w_n t) step``.

    Valid for ``|t| <= pi/step``; beyond that window the discrete frequency
    comb produces periodic images.
    """
    times = np.asarray(times, dtype=float)
    k = packet.grid.points()
    phases = np.exp(-1j * np.outer(times, k))
    return (phases @ packet.amplitude) * (packet.grid.step / math.sqrt(2.0 * math.pi))


def packet_from_time_samples(
    grid: FrequencyGrid, times, values
) -> OnePhotonWavepacket:
    """Inverse transform: ``f(k) = (2 pi)^-1/2 sum_j a(t_j) exp(+i k t_j) dt``.

    The time samples must be uniformly spaced and cover the support of
    ``a(t)`` for the rectangle sum to approximate the integral.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=complex)
    if times.size < 2:
        raise ValueError("need at least two time samples")
    dt = times[1] - times[0]
    k = grid.points()
    phases = np.exp(1j * np.outer(k, times))
    return OnePhotonWavepacket(
        grid, (phases @ values) * (dt / math.sqrt(2.0 * math.pi))
    )
