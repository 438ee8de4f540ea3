"""Finite Kripke frames with p-morphisms, treated as a category."""

from .frame_core import Frame, chain, cluster, fork, strict_chain
from .logic import LogicSpec, frame_in_logic, is_barr_exact, is_regular, parse_logic
from .pmorph import PMorphism

__all__ = [
    "Frame",
    "LogicSpec",
    "PMorphism",
    "chain",
    "cluster",
    "fork",
    "frame_in_logic",
    "is_barr_exact",
    "is_regular",
    "parse_logic",
    "strict_chain",
]
