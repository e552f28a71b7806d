"""Simulation and analysis of CHSH-based QKD under a local-box replacement attack.

Modules:

- ``quantum``: density matrices, +/-1 observables, Born-rule sampling
- ``boxes``: honest, local (X1..X4) and product-state box pairs
- ``stats``: correlator/CHSH estimation, bias checks, coin-toss fluctuations
- ``protocol``: DI/DD protocol sessions with sifting and acceptance
- ``attack``: Eve's replacement attack, its bound and the n-tradeoff sweep
- ``cli``: the ``chsh-qkd`` command
"""

from .attack import (
    AttackConfig,
    attacked_box_source,
    expected_chsh,
    max_replacement_probability,
    simulate_attack,
    tradeoff_sweep,
)
from .boxes import AliceInput, BobInput, BoxKind, LocalBoxSpec, honest_box, local_box
from .protocol import Mode, run_session
from .quantum import bell_phi_plus, standard_observables, werner_state
from .stats import AcceptancePolicy, CorrelatorTable, InsufficientDataError, chsh_estimate

__version__ = "0.1.0"
