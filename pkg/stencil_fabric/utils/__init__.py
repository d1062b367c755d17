"""Utility helpers for Stencil Fabric."""
