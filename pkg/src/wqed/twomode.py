"""Bidirectional waveguide via the even/odd decomposition.

The two-mode model splits into a free odd sector and an interacting even
sector that is exactly the chiral problem with a halved lifetime
``tau' = tau/2`` (the atom couples to the even combination with a sqrt(2)
stronger matrix element).  One-photon reflection and transmission follow
directly:

    rbar(k) = (t'(k) - 1) / 2        tbar(k) = (t'(k) + 1) / 2

with ``t'`` the chiral transmission at ``tau'``, which gives
``|rbar|^2 + |tbar|^2 = 1`` identically.  Left-moving photons are indexed
by negative frequencies in the underlying model; this module stores every
spectrum on the positive-detuning axis and carries the direction in the
channel label, so no sign flips ever reach file outputs.

For two right-moving input photons the output splits into RR/RL/LL
channels.  Expanding the four field operators into even/odd combinations
produces six non-vanishing sector pairings per channel; the factorized
parts collapse to products of rbar/tbar and every channel inherits the
even-sector background term with weight 1/4.  With the same state
conventions as :mod:`wqed.chiral` (cross-channel RL stored unsymmetrized,
``norm^2 = sum |g_rl|^2 step^2`` without a bosonic 1/2):

    g_rr(p1,p2) = tbar(p1) tbar(p2) f + (1/4) * bound'(p1,p2)
    g_ll(q1,q2) = rbar(q1) rbar(q2) f + (1/4) * bound'(q1,q2)
    g_rl(p1,q2) = sqrt(2) [ tbar(p1) rbar(q2) f + (1/4) * bound'(p1,q2) ]

where ``bound'`` is the chiral background evaluated with ``tau'`` and the
total norm over the three channels equals the input norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import chiral
from .model import (
    Mode,
    OnePhotonWavepacket,
    SystemParams,
    TwoPhotonAmplitude,
    norm2_two,
)

__all__ = [
    "DirectionalAmplitudes",
    "even_sector_params",
    "reflection",
    "transmission",
    "scatter_one_photon_two_mode",
    "scatter_two_photon_two_mode",
]


def even_sector_params(params: SystemParams) -> SystemParams:
    """Chiral-model parameters of the interacting even sector (tau' = tau/2)."""
    return SystemParams(params.omega_atom, params.tau / 2.0, Mode.CHIRAL)


def reflection(k, params: SystemParams):
    """One-photon reflection coefficient rbar(k)."""
    return (chiral.transmission(k, even_sector_params(params)) - 1.0) / 2.0


def transmission(k, params: SystemParams):
    """One-photon transmission coefficient tbar(k)."""
    return (chiral.transmission(k, even_sector_params(params)) + 1.0) / 2.0


def scatter_one_photon_two_mode(
    packet: OnePhotonWavepacket, params: SystemParams
) -> tuple[OnePhotonWavepacket, OnePhotonWavepacket]:
    """Split a right-moving packet into (transmitted, reflected) spectra.

    The reflected packet is reported on the positive-detuning axis; its
    direction is carried by the channel, not by a sign on the frequencies.
    """
    k = packet.grid.points()
    transmitted = OnePhotonWavepacket(
        packet.grid, transmission(k, params) * packet.amplitude
    )
    reflected = OnePhotonWavepacket(
        packet.grid, reflection(k, params) * packet.amplitude
    )
    return transmitted, reflected


@dataclass(frozen=True)
class DirectionalAmplitudes:
    """Two-photon output split over direction channels.

    ``rr`` and ``ll`` are exchange-symmetric same-channel amplitudes; ``rl``
    is the cross-channel table over (right-moving p1, left-moving p2) and is
    not exchange-symmetric.  ``norm2 = |rr|^2 + |rl|^2 + |ll|^2`` equals the
    input norm up to discretization error.
    """

    rr: TwoPhotonAmplitude
    rl: TwoPhotonAmplitude
    ll: TwoPhotonAmplitude

    def channel_norms(self) -> dict[str, float]:
        return {"rr": norm2_two(self.rr), "rl": norm2_two(self.rl), "ll": norm2_two(self.ll)}

    def total_norm2(self) -> float:
        return float(sum(self.channel_norms().values()))


def scatter_two_photon_two_mode(
    f: TwoPhotonAmplitude, params: SystemParams
) -> DirectionalAmplitudes:
    """Scatter two right-moving photons into the RR/RL/LL channels.

    Raises:
        GridTooNarrow: as in the chiral case, if the input touches the grid
            boundary above the 1e-6 mass threshold.
    """
    chiral._check_edge_mass(f)
    even = even_sector_params(params)
    grid = f.grid
    k = grid.points()
    tbar = transmission(k, params)
    rbar = reflection(k, params)
    s = chiral.excitation_amplitude(k, even)

    shell = chiral._antidiagonal_sums(f.amplitude, s, grid.step)
    idx = np.arange(grid.count)
    coef = 1j / (2.0 * math.pi) * math.sqrt(2.0 / even.tau)
    bound = 0.25 * coef * np.outer(s, s) * shell[idx[:, None] + idx[None, :]]

    g_rr = np.outer(tbar, tbar) * f.amplitude + bound
    g_ll = np.outer(rbar, rbar) * f.amplitude + bound
    g_rl = math.sqrt(2.0) * (np.outer(tbar, rbar) * f.amplitude + bound)

    return DirectionalAmplitudes(
        rr=TwoPhotonAmplitude(grid, g_rr),
        rl=TwoPhotonAmplitude(grid, g_rl, symmetric=False),
        ll=TwoPhotonAmplitude(grid, g_ll),
    )
