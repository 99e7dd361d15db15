"""Few-photon transport in a 1D waveguide coupled to a two-level atom.

Closed-form one- and two-photon scattering for chiral and bidirectional
waveguides, coherent-drive fluorescence dynamics, and a discretized-mode
brute-force verifier for all of it.
"""

from .errors import (
    BudgetExceeded,
    ConfigError,
    GridTooNarrow,
    InvalidWidth,
    InvalidWindow,
    NonPhysicalState,
    StepTooLarge,
    WqedError,
)
from .model import (
    FrequencyGrid,
    Mode,
    OnePhotonWavepacket,
    SystemParams,
    TwoPhotonAmplitude,
    make_gaussian_packet,
    norm2_one,
    norm2_two,
    packet_from_time_samples,
    packet_to_time_domain,
    symmetrize,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "WqedError",
    "InvalidWidth",
    "GridTooNarrow",
    "StepTooLarge",
    "BudgetExceeded",
    "NonPhysicalState",
    "InvalidWindow",
    "ConfigError",
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
