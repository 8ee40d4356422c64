"""Exact-arithmetic toolkit for Dirac-Jacobi geometry.

The package is layered bottom-up:

- scalars: exact rationals and multivariate rational functions
- linalg: exact matrices and the subspace lattice, over Fraction or PolyFn
- fiber: the pointwise omni fiber model, Lagrangian subspaces, transforms
- calculus: chart-level derivations, jets, the der-complex Cartan calculus
- structures: whole-chart Dirac-Jacobi structures and morphisms
- pairs: weak dual pairs, their verifiers, and leaf correspondence
- sampling, io, cli: deterministic sample points, JSON documents, driver
"""

__version__ = "0.1.0"
