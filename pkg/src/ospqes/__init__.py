"""Exact osp(2,2) checks and polynomial-sector spectra for the planar Dirac electron
in Coulomb plus uniform magnetic fields."""

__version__ = "0.1.0"
