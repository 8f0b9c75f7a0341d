"""Exact dense-matrix engine for small quantum systems.

Everything is a plain q^n x q^n complex ndarray; site 0 is the most
significant tensor factor.  Intended for n up to ~12 qubits; used both
directly and as the cross-validation oracle for the faster engines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelLayer
from .model import HamiltonianTerm, LocalHamiltonian, Partition, SiteGraph

DENSE_DIM_CAP = 4096
_HERM_TOL = 1e-12


def term_matrix(graph: SiteGraph, term: HamiltonianTerm, bare: bool = False) -> np.ndarray:
    """Full-space matrix of lambda_a h_a (or bare h_a)."""
    if term.is_pauli:
        m = term.operator.to_matrix()
    else:
        diag = np.zeros(graph.dim)
        table = term.operator
        sup = term.support
        q = graph.q
        n = graph.n_sites
        for idx in range(graph.dim):
            digits = []
            rem = idx
            for s in range(n):
                digits.append(rem // q ** (n - 1 - s))
                rem %= q ** (n - 1 - s)
            diag[idx] = table[tuple(digits[s] for s in sup)]
        m = np.diag(diag).astype(complex)
    return m if bare else term.coefficient * m


def hamiltonian_matrix(h: LocalHamiltonian) -> np.ndarray:
    m = np.zeros((h.site_graph.dim, h.site_graph.dim), dtype=complex)
    for t in h.terms:
        m += term_matrix(h.site_graph, t)
    return m


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace matrix plus its site graph."""

    entries: np.ndarray
    graph: SiteGraph

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if np.max(np.abs(e - e.conj().T)) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(e).real - 1) > 1e-10:
            raise ValueError("density matrix is not normalized")
        self.entries = e


def gibbs_state(h: LocalHamiltonian, beta: float) -> DensityMatrix:
    """exp(-beta H)/Z; beta=inf gives the maximally mixed ground state.

    For commuting Hamiltonians the product of per-term exponentials is used
    and cross-checked against the eigendecomposition exponential.
    """
    g = h.site_graph
    if g.dim > DENSE_DIM_CAP:
        raise ValueError(f"dimension {g.dim} exceeds dense cap {DENSE_DIM_CAP}")
    hm = hamiltonian_matrix(h)
    vals, vecs = np.linalg.eigh(hm)
    if math.isinf(beta):
        ground = vals <= vals[0] + 1e-10
        p = np.where(ground, 1.0, 0.0)
        p /= p.sum()
        rho = (vecs * p) @ vecs.conj().T
        return DensityMatrix(rho, g)
    w = np.exp(-beta * (vals - vals.min()))
    w /= w.sum()
    rho = (vecs * w) @ vecs.conj().T
    if h.commuting and h.terms:
        prod = np.eye(g.dim, dtype=complex)
        for t in h.terms:
            tm = term_matrix(g, t)
            tv, tw = np.linalg.eigh(tm)
            prod = prod @ ((tw * np.exp(-beta * (tv - tv.min()))) @ tw.conj().T)
        prod /= np.trace(prod).real
        if np.max(np.abs(prod - rho)) > 1e-10:
            raise AssertionError("commuting-product exponential disagrees with eigh")
    return DensityMatrix(rho, g)


def _site_kraus(k: np.ndarray, site: int, graph: SiteGraph) -> np.ndarray:
    left = np.eye(graph.q**site, dtype=complex)
    right = np.eye(graph.q ** (graph.n_sites - site - 1), dtype=complex)
    return np.kron(np.kron(left, k), right)


def apply_layer_to_matrix(m: np.ndarray, layer: ChannelLayer, graph: SiteGraph) -> np.ndarray:
    out = m
    for c in layer.channels:
        ks = [_site_kraus(k, c.site, graph) for k in c.kraus_ops()]
        out = sum(k @ out @ k.conj().T for k in ks)
    return out


def apply_layer(rho: DensityMatrix, layer: ChannelLayer) -> DensityMatrix:
    return DensityMatrix(apply_layer_to_matrix(rho.entries, layer, rho.graph), rho.graph)


def partial_trace_matrix(m: np.ndarray, keep, graph: SiteGraph) -> np.ndarray:
    """Trace out every site not in ``keep``; kept sites stay in global order."""
    keep = sorted(set(keep))
    n, q = graph.n_sites, graph.q
    t = m.reshape((q,) * n * 2)
    traced = 0
    for s in range(n):
        if s not in keep:
            ax = s - traced
            live = n - traced
            t = np.trace(t, axis1=ax, axis2=ax + live)
            traced += 1
    d = q ** len(keep)
    return t.reshape(d, d)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep at least one site (use region_entropy for S=0 cases)")
    sub = SiteGraph(n_sites=len(keep), q=rho.graph.q)
    m = partial_trace_matrix(rho.entries, keep, rho.graph)
    return DensityMatrix(m, sub)


def embed_operator(m: np.ndarray, region, graph: SiteGraph) -> np.ndarray:
    """m on the sorted sites of region, tensored with identity elsewhere,
    permuted into global site order."""
    region = sorted(set(region))
    rest = [s for s in range(graph.n_sites) if s not in region]
    q, n = graph.q, graph.n_sites
    big = np.kron(m, np.eye(q ** len(rest), dtype=complex))
    order = region + rest
    t = big.reshape((q,) * n * 2)
    inv = [order.index(s) for s in range(n)]
    t = t.transpose(inv + [n + i for i in inv])
    return t.reshape(graph.dim, graph.dim)


def von_neumann_entropy(m: np.ndarray, base: float = 2.0) -> float:
    """Entropy of a unit-trace PSD matrix, eigenvalues clamped at 1e-15."""
    vals = np.linalg.eigvalsh(m)
    if vals.min() < -1e-8:
        raise ValueError(f"negative eigenvalue {vals.min()} in entropy input")
    vals = np.clip(vals.real, 1e-15, None)
    return float(-(vals * np.log(vals)).sum() / math.log(base))


def region_entropy(rho: DensityMatrix, region) -> float:
    if not region:
        return 0.0
    return von_neumann_entropy(partial_trace_matrix(rho.entries, region, rho.graph))


def quantum_cmi(rho: DensityMatrix, p: Partition) -> float:
    """I(A:C|B) = S(AB) + S(BC) - S(B) - S(ABC), in bits."""
    return (
        region_entropy(rho, p.a | p.b)
        + region_entropy(rho, p.b | p.c)
        - region_entropy(rho, p.b)
        - region_entropy(rho, p.abc)
    )


def _psd_log(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    if vals.min() < 1e-12:
        raise ValueError("temperature too low for operator-log form")
    return (vecs * np.log(vals)) @ vecs.conj().T


@dataclass
class CmiOperator:
    matrix: np.ndarray
    parts: dict  # the four log terms, for diagnostics

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))


def cmi_operator(h: LocalHamiltonian, beta: float, layer: ChannelLayer, p: Partition) -> CmiOperator:
    """log E[rho_AB] + log E[rho_BC] - log E[rho_B] - log E[rho_ABC]
    with unnormalized rho = exp(-beta H) and each marginal embedded as
    Tr_Lc(.) (x) I_Lc.  The channel layer must live on B."""
    g = h.site_graph
    if not layer.sites <= p.b:
        raise ValueError("cmi_operator expects the channel layer on B")
    hm = hamiltonian_matrix(h)
    vals, vecs = np.linalg.eigh(hm)
    rho_t = (vecs * np.exp(-beta * vals)) @ vecs.conj().T  # unnormalized
    noised = apply_layer_to_matrix(rho_t, layer, g)
    parts = {}
    out = np.zeros_like(noised)
    for name, region, s in (
        ("AB", p.a | p.b, 1),
        ("BC", p.b | p.c, 1),
        ("B", p.b, -1),
        ("ABC", p.abc, -1),
    ):
        if region:
            marg = partial_trace_matrix(noised, region, g)
            full = embed_operator(marg, region, g)
        else:
            full = np.trace(noised).real * np.eye(g.dim, dtype=complex)
        term = _psd_log(full)
        parts[name] = term
        out = out + s * term
    return CmiOperator(out, parts)
