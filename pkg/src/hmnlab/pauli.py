"""Symplectic engine for Gibbs states of commuting Pauli Hamiltonians under
Pauli-diagonal channels.

The state is stored as the normalized Pauli expansion

    rho = 2^{-n} sum_g c_g P(x_g, z_g),      c_I = 1,

keyed by (x, z) with the sign folded into the coefficient.  Built from the
exact factor identity exp(-b l P) = cosh(b l) I - sinh(b l) P by expanding
the product over terms; group-element collisions (h_a h_b = +-h_c) are
aggregated sign-aware.  Marginals diagonalize over group characters, so
entropies cost 2^r for the rank r of the restricted group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelLayer, pauli_damping_profile
from .model import LocalHamiltonian, Partition, PauliString, SiteGraph

TERM_CAP = 22
RANK_CAP = 24
PRUNE = 1e-18


@dataclass
class PauliExpansion:
    graph: SiteGraph
    coeffs: dict  # (x, z) -> real coefficient of the canonical Hermitian Pauli

    @property
    def n(self) -> int:
        return self.graph.n_qubits

    def to_matrix(self) -> np.ndarray:
        """Dense state, for cross-validation on small systems."""
        d = 2**self.n
        out = np.zeros((d, d), dtype=complex)
        for (x, z), c in self.coeffs.items():
            out += c * PauliString(self.n, x, z).to_matrix()
        return out / d


def expand_gibbs(h: LocalHamiltonian, beta: float) -> PauliExpansion:
    """Expansion of exp(-beta H)/Z; beta=inf uses tanh(+-inf) = +-1 factors."""
    if not h.all_pauli:
        raise ValueError("Pauli engine needs Pauli terms")
    if not h.commuting:
        raise ValueError("Hamiltonian terms do not commute")
    if len(h.terms) > TERM_CAP:
        raise ValueError(f"{len(h.terms)} terms exceed cap {TERM_CAP}")
    n = h.site_graph.n_qubits
    ident = PauliString.identity(n)
    # work with factors I - t_a h_a, t_a = tanh(beta lambda_a); the dropped
    # cosh prefactors cancel in the final normalization
    # accumulator maps the canonical (sign-stripped) key to its coefficient;
    # product signs are folded into the coefficient at each collision
    acc: dict[tuple[int, int], float] = {ident.key: 1.0}
    for t in h.terms:
        ta = math.tanh(beta * t.coefficient) if not math.isinf(beta) else (
            1.0 if t.coefficient > 0 else -1.0 if t.coefficient < 0 else 0.0
        )
        nxt: dict[tuple[int, int], float] = {}
        for (x, z), c in acc.items():
            prod = PauliString(n, x, z) * t.operator
            for key, cc in ((
                (x, z), c),
                (prod.key, -ta * c * prod.sign),
            ):
                nxt[key] = nxt.get(key, 0.0) + cc
        acc = nxt
    c0 = acc[ident.key]
    if abs(c0) < 1e-14:
        raise ValueError("expansion has zero trace (frustrated zero-temperature state)")
    coeffs = {}
    for key, c in acc.items():
        v = c / c0
        if abs(v) >= PRUNE:
            coeffs[key] = v
    return PauliExpansion(h.site_graph, coeffs)


def apply_pauli_layer(e: PauliExpansion, layer: ChannelLayer) -> PauliExpansion:
    """Damp each expansion coefficient by the per-site channel factors."""
    profiles = {}
    for c in layer.channels:
        profiles[c.site] = pauli_damping_profile(c)
    k = e.graph.qubits_per_site
    mask = (1 << k) - 1
    out = {}
    for (x, z), coeff in e.coeffs.items():
        f = coeff
        for site, prof in profiles.items():
            lx = (x >> (site * k)) & mask
            lz = (z >> (site * k)) & mask
            if lx or lz:
                f *= prof[(lx, lz)]
        if abs(f) >= PRUNE:
            out[(x, z)] = f
    return PauliExpansion(e.graph, out)


@dataclass
class RestrictedGroup:
    """Expansion elements supported inside a region, with independent
    generators found by F2 elimination and each element's exponent vector."""

    qubits: tuple[int, ...]
    generators: list  # of PauliString (restricted to the region's qubits)
    elements: list  # of (exponent bitmask over generators, signed coefficient)


def _region_qubits(graph: SiteGraph, region) -> tuple[int, ...]:
    out: list[int] = []
    for s in sorted(region):
        out.extend(graph.site_qubits(s))
    return tuple(out)


def restricted_group(e: PauliExpansion, region) -> RestrictedGroup:
    qs = _region_qubits(e.graph, region)
    qset = set(qs)
    members: list[tuple[PauliString, float]] = []
    for (x, z), c in e.coeffs.items():
        p = PauliString(e.n, x, z)
        if p.support() <= qset:
            members.append((p.restrict(qs), c))

    # F2 elimination with sign tracking: pivots[j] holds (pauli, exponent mask)
    nq = len(qs)
    gens: list[PauliString] = []
    pivots: dict[int, tuple[PauliString, int]] = {}  # leading-bit -> (row, mask)
    elements: list[tuple[int, float]] = []

    def reduce(p: PauliString) -> tuple[PauliString, int]:
        mask = 0
        word = (p.x << nq) | p.z
        cur = p
        while word:
            lead = word.bit_length() - 1
            if lead not in pivots:
                break
            row, rmask = pivots[lead]
            cur = cur * row
            mask ^= rmask
            word = (cur.x << nq) | cur.z
        return cur, mask

    for p, c in members:
        cur, mask = reduce(p)
        word = (cur.x << nq) | cur.z
        if word:
            if len(gens) >= RANK_CAP:
                raise ValueError(f"restricted-group rank exceeds cap {RANK_CAP}")
            gmask = 1 << len(gens)
            # store the sign-stripped canonical row so that every element's
            # sign relative to the generator products lands in its coefficient
            canon = PauliString(cur.n, cur.x, cur.z, 1)
            gens.append(canon)
            pivots[word.bit_length() - 1] = (canon, gmask)
            elements.append((mask | gmask, c * cur.sign))
        else:
            # cur = sign * I; fold the sign into the coefficient
            elements.append((mask, c * cur.sign))
    return RestrictedGroup(qs, gens, elements)


def marginal_spectrum(e: PauliExpansion, region) -> tuple[np.ndarray, int]:
    """Eigenvalues of the normalized marginal on ``region`` (one value per
    group character) and the degeneracy they each carry."""
    grp = restricted_group(e, region)
    r = len(grp.generators)
    nq = len(grp.qubits)
    d = np.zeros(2**r)
    for mask, c in grp.elements:
        d[mask] += c
    # Walsh-Hadamard transform gives lam_s = sum_b d_b (-1)^{s.b}
    lam = d.copy()
    h = 1
    while h < lam.size:
        for i in range(0, lam.size, 2 * h):
            a = lam[i : i + h].copy()
            b = lam[i + h : i + 2 * h].copy()
            lam[i : i + h] = a + b
            lam[i + h : i + 2 * h] = a - b
        h *= 2
    lam /= 2**nq
    if lam.min() < -1e-10:
        raise ValueError(f"marginal spectrum has eigenvalue {lam.min()} < -1e-10")
    return lam, 2 ** (nq - r)


def marginal_entropy(e: PauliExpansion, region) -> float:
    """Entropy (bits) of the reduced state on a site region."""
    if not set(region):
        return 0.0
    lam, deg = marginal_spectrum(e, region)
    total = lam.sum() * deg
    if abs(total - 1) > 1e-10:
        raise ValueError(f"marginal trace {total} != 1")
    pos = lam[lam > 1e-18]
    return float(-deg * (pos * np.log(pos)).sum() / math.log(2.0))


def pauli_cmi(e: PauliExpansion, p: Partition) -> float:
    return (
        marginal_entropy(e, p.a | p.b)
        + marginal_entropy(e, p.b | p.c)
        - marginal_entropy(e, p.b)
        - marginal_entropy(e, p.abc)
    )
