"""
Numerical engine for stable forms in dimensions 6, 7 and 8.

Volume functionals, dual forms, induced metrics, SU(3) and G2 structures
and the reduced gradient and Hamiltonian flows built from them.
"""

__version__ = "0.1.0"
