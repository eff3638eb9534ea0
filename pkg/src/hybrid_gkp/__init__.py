"""Hybrid entanglement between approximate GKP states and photon-number states.

Two engines are provided: an exact algebra of coherent-state superpositions
(:mod:`hybrid_gkp.coherent`) and a truncated Fock-space engine
(:mod:`hybrid_gkp.fock`) that serves as an independent oracle and computes
Wigner functions.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .coherent import SuperposedState, CoherentTerm, ConditionalOutput  # noqa: E402
from .fock import FockState, WignerGrid  # noqa: E402
from .branched import BranchedState  # noqa: E402
from .circuit import Circuit  # noqa: E402
from .protocols import (HybridOutput, bred_input, equal_amplitude_generate, hybrid_generate,  # noqa: E402
                        qutrit_generate)
from .analysis import (ParitySpectrum, SweepRecord, closed_form_fidelity, optimal_alpha,  # noqa: E402
                       parity_spectrum, single_photon_fidelity, tradeoff)
