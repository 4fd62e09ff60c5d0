"""Finite-lattice spin systems: exact partition functions, Lee-Yang zero
location and zero-free verification, Ursell correlation functions and
transfer-matrix thermodynamics."""

__version__ = "0.1.0"
