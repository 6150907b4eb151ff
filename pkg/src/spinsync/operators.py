"""Sparse operator and superoperator building blocks.

Vectorization convention (fixed throughout the package): density matrices
are stacked by rows, vec(rho)[i*d + j] = rho[i, j], so that
vec(A rho B) = (A kron B^T) vec(rho).  All matrix-level identity checks
depend on this convention.

Full product-space operators order the sites as the N spins of species A
followed by the N spins of species B.  The single-spin basis is
(|0>, |1>) = (ground, excited), i.e. sigma^z = diag(-1, +1).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SIGMA_P",
    "SIGMA_M",
    "SIGMA_Z",
    "site_operator",
    "collective_operator",
    "spre",
    "spost",
    "hamiltonian_superop",
    "dissipator",
    "dissipator_pair",
    "trace_vector",
    "vec",
    "unvec",
]

SIGMA_P = sp.csr_matrix(np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex))
SIGMA_M = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))
SIGMA_Z = sp.csr_matrix(np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex))

_ID2 = sp.identity(2, dtype=complex, format="csr")


def site_operator(op: sp.spmatrix, site: int, n_sites: int) -> sp.csr_matrix:
    """Embed a single-spin operator at ``site`` in an ``n_sites`` register."""
    factors = [_ID2] * n_sites
    factors[site] = op
    out = factors[0]
    for f in factors[1:]:
        out = sp.kron(out, f, format="csr")
    return out


def collective_operator(op: sp.spmatrix, sites: range, n_sites: int) -> sp.csr_matrix:
    """Sum of ``op`` over the given sites."""
    total = None
    for s in sites:
        term = site_operator(op, s, n_sites)
        total = term if total is None else total + term
    return total.tocsr()


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(d, d)


def spre(a: sp.spmatrix) -> sp.csr_matrix:
    """Superoperator for left multiplication, rho -> a rho."""
    d = a.shape[0]
    return sp.kron(a, sp.identity(d, dtype=complex, format="csr"), format="csr")


def spost(b: sp.spmatrix) -> sp.csr_matrix:
    """Superoperator for right multiplication, rho -> rho b."""
    d = b.shape[0]
    return sp.kron(sp.identity(d, dtype=complex, format="csr"), b.T, format="csr")


def hamiltonian_superop(h: sp.spmatrix) -> sp.csr_matrix:
    """-i [H, rho] as a matrix on vectorized density matrices."""
    return (-1j) * (spre(h) - spost(h))


def dissipator(o1: sp.spmatrix, o2: sp.spmatrix | None = None) -> sp.csr_matrix:
    """Generalized dissipator D[o1, o2] rho = o1 rho o2+ - {o2+ o1, rho}/2.

    With ``o2`` omitted this is the standard Lindblad dissipator D[o1].
    """
    if o2 is None:
        o2 = o1
    o2dag = o2.conj().T.tocsr()
    anti = (o2dag @ o1).tocsr()
    d = o1.shape[0]
    ident = sp.identity(d, dtype=complex, format="csr")
    return (
        sp.kron(o1, o2.conj(), format="csr")
        - 0.5 * sp.kron(anti, ident, format="csr")
        - 0.5 * sp.kron(ident, anti.T, format="csr")
    )


def dissipator_pair(o1: sp.spmatrix, o2: sp.spmatrix) -> sp.csr_matrix:
    """D[o1, o2] + D[o2, o1], the symmetric dissipative interaction."""
    return dissipator(o1, o2) + dissipator(o2, o1)


def trace_vector(d: int) -> np.ndarray:
    """Row functional returning tr(rho) from vec(rho)."""
    t = np.zeros(d * d, dtype=complex)
    t[:: d + 1] = 1.0
    return t
