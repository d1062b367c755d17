"""Test suite for Stencil Fabric."""
