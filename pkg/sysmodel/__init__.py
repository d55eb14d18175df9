"""
System model package.
Plant/exosystem/controller value objects, transfer evaluation, closed-loop
assembly and the JSON file formats.
"""

from sysmodel.state_space import (
    StateSpace, Exosystem, Controller, ClosedLoop, PlantVariant, Resolvent,
    transfer_eval, assemble_closed_loop, exosystem_from_frequencies, jordan_block,
)
from numerics.linalg import spectral_abscissa

__all__ = [
    "StateSpace", "Exosystem", "Controller", "ClosedLoop", "PlantVariant",
    "Resolvent", "transfer_eval", "assemble_closed_loop",
    "exosystem_from_frequencies", "jordan_block", "spectral_abscissa",
]
