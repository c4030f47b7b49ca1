"""Simulation and verification lab for one-message random oracle protocols
on shared entanglement: finite fields, dense qudit simulation, mutually
unbiased bases, protocol audits, rescaled-measurement attacks, spectral
certificates, nonlocal boxes, Fiat-Shamir composition and typed lightning.
"""
from .errors import WotroLabError
from .gf import binary_field, field_arith, field_enumerate, field_new, field_trace
from .rng import make_rng

__all__ = [
    "WotroLabError",
    "binary_field",
    "field_arith",
    "field_enumerate",
    "field_new",
    "field_trace",
    "make_rng",
]
__version__ = "0.1.0"
