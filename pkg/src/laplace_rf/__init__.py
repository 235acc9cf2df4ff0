"""Laplace boundary value problems solved with relocated rational (dipole) basis functions."""
