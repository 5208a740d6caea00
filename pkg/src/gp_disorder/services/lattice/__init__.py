from .lattice import Lattice

__all__ = ["Lattice"]
