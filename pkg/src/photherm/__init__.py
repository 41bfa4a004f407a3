"""Few-photon linear-optics toolkit: equilibration toward generalized Gibbs
statistics and measurement-based fidelity and entanglement certification."""

from . import apparatus, certify, fock, gge, hamiltonian, linalg  # noqa: F401

__version__ = "0.1.0"
