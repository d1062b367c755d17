"""Kernels, cost models, mapping and simulation."""
