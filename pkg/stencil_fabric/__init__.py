"""
Stencil Fabric - golden weather stencils, cycle models and a dataflow simulator for spatial accelerators.
"""

__all__ = []
