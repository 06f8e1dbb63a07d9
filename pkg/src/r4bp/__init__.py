"""Restricted four-body problem: L2 stability, normal forms and homoclinic orbits."""

__version__ = "0.1.0"

from .model import State, SystemConfig, jacobi_constant

__all__ = ["State", "SystemConfig", "jacobi_constant", "__version__"]
