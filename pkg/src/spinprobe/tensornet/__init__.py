"""Matrix-product-state backend: DMRG ground states and TDVP real-time evolution."""
from .dmrg import DmrgConfig, DmrgNotConverged, dmrg_ground_state, flip_parity
from .dynamics import coherence_tdvp, initial_state_mps, two_time_correlation_mps
from .mps import MPO, MPSState, entanglement_entropy, overlap, xxz_mpo
from .tdvp import TdvpConfig, TdvpError, TdvpEvolver

__all__ = [
    "DmrgConfig",
    "DmrgNotConverged",
    "MPO",
    "MPSState",
    "TdvpConfig",
    "TdvpError",
    "TdvpEvolver",
    "coherence_tdvp",
    "dmrg_ground_state",
    "entanglement_entropy",
    "flip_parity",
    "initial_state_mps",
    "overlap",
    "two_time_correlation_mps",
    "xxz_mpo",
]
