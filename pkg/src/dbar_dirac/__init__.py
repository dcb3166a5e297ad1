"""Generalised d-bar reconstruction for the Dirac scattering problem."""
