"""Exact numerics for conditional mutual information of Gibbs states under
per-site noise: classical, dense quantum, and symplectic Pauli engines, plus
the cluster-expansion certificates that explain when the CMI decays."""

__version__ = "0.1.0"
