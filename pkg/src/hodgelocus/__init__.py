"""Exact and numerical computations with polarized Hodge structures, nilpotent
orbits, limit mixed Hodge structures and their degenerations."""

__version__ = "0.1.0"
