"""Weak L-modules, Cech globalization and finite Maurer-Cartan geometry over Q."""

__version__ = "0.1.0"
