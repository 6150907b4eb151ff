"""Permutationally invariant Liouvillian in the two-species Dicke basis.

The density matrix of two ensembles of identical spins decomposes into
blocks labeled by total-spin sectors (j_A, j_B); stored entries are the
matrix elements <j_A m_A; j_B m_B| rho |j_A m_A'; j_B m_B'>, identical
across the d_N(j_A) d_N(j_B) degenerate multiplicity copies.  The
degeneracy weights multiply every trace and expectation value; they are
stored with the basis and never recomputed ad hoc.

Collective terms act within blocks through standard angular-momentum
matrix elements.  The homogeneous local drive couples adjacent j sectors;
its reduced matrix elements are separable, so the sector-changing part
takes the sandwich form kappa * (G kron conj(G)) with a real transition
matrix G per (j -> j') shift.  Those coefficients are validated against
the full product-space solver at N <= 3 before any larger-N run.

State-space dimension grows like N^6 overall; angular momentum is
tracked through integer 2j and 2m to keep half-integer bookkeeping
exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .liouville import (
    CorrelatorSet,
    SteadyStateResult,
    steady_state,
)
from .operators import dissipator, dissipator_pair, hamiltonian_superop, spre, spost
from .params import CouplingParams, PhysicalityError, directional_from_symmetric

__all__ = [
    "MemoryBudgetError",
    "DickeBasis",
    "PIDensityMatrix",
    "dicke_basis",
    "degeneracy",
    "build_liouvillian_pi",
    "steady_state_pi",
    "correlators_pi",
]

DEFAULT_DIM_BUDGET = 2_500_000


class MemoryBudgetError(MemoryError):
    """PI state space exceeds the configured dimension budget."""


def degeneracy(N: int, twoj: int) -> int:
    """Multiplicity d_N(j) of the spin-j sector of N spin-1/2 particles."""
    k = (N - twoj) // 2
    d = math.comb(N, k) - (math.comb(N, k - 1) if k >= 1 else 0)
    return d


def _sz_diag(twoj: int) -> np.ndarray:
    """Eigenvalues of S^z = sum_i sigma^z_i, ordered by ascending m."""
    return np.arange(-twoj, twoj + 1, 2, dtype=float)


def _sp_matrix(twoj: int) -> sp.csr_matrix:
    """Collective raising operator S+ within a spin-j irrep."""
    n = twoj + 1
    k = np.arange(n - 1)
    amp = np.sqrt((twoj - k) * (k + 1.0))
    return sp.csr_matrix((amp, (k + 1, k)), shape=(n, n), dtype=complex)


@dataclass(frozen=True)
class DickeBasis:
    """Index bookkeeping for the two-species PI representation."""

    N: int
    twoj_list: tuple[int, ...]
    weights: dict[int, int]
    blocks: tuple[tuple[int, int], ...]
    block_dims: tuple[int, ...]
    offsets: tuple[int, ...]
    total_dim: int

    def block_index(self, twoj_a: int, twoj_b: int) -> int:
        return self.blocks.index((twoj_a, twoj_b))

    def trace_row(self) -> np.ndarray:
        """Weighted-trace functional on the concatenated block vector."""
        row = np.zeros(self.total_dim, dtype=complex)
        for (tja, tjb), dim, off in zip(self.blocks, self.block_dims, self.offsets):
            w = self.weights[tja] * self.weights[tjb]
            row[off : off + dim * dim : dim + 1] = w
        return row

    def charge_array(self) -> np.ndarray:
        """Coherence charge 2q = (2m_A + 2m_B) - (2m_A' + 2m_B') per entry.

        The generator preserves this charge exactly; the steady state
        lives in the q = 0 sector.
        """
        out = np.empty(self.total_dim, dtype=np.int32)
        for (tja, tjb), dim, off in zip(self.blocks, self.block_dims, self.offsets):
            na, nb = tja + 1, tjb + 1
            ma = np.repeat(_sz_diag(tja), nb)
            mb = np.tile(_sz_diag(tjb), na)
            tot = (ma + mb).astype(np.int32)
            out[off : off + dim * dim] = (tot[:, None] - tot[None, :]).reshape(-1)
        return out


def dicke_basis(N: int, dim_budget: int = DEFAULT_DIM_BUDGET) -> DickeBasis:
    if N < 1:
        raise ValueError("N must be a positive integer")
    twoj_list = tuple(range(N, -1 if N % 2 == 0 else 0, -2))
    weights = {tj: degeneracy(N, tj) for tj in twoj_list}
    blocks, dims, offsets = [], [], []
    off = 0
    for tja in twoj_list:
        for tjb in twoj_list:
            d = (tja + 1) * (tjb + 1)
            blocks.append((tja, tjb))
            dims.append(d)
            offsets.append(off)
            off += d * d
    if off > dim_budget:
        raise MemoryBudgetError(
            f"PI superoperator dimension {off} exceeds budget {dim_budget} (N={N})"
        )
    return DickeBasis(
        N=N,
        twoj_list=twoj_list,
        weights=weights,
        blocks=tuple(blocks),
        block_dims=tuple(dims),
        offsets=tuple(offsets),
        total_dim=off,
    )


def _pump_diag_rate(N: int, twoj: int, twoj_tgt: int, k: np.ndarray) -> np.ndarray:
    """Population transfer rate of the local drive, (j, m) -> (j', m+1).

    ``k`` indexes m = -j + k.  Rates are the Dicke-basis reduction of N
    identical local raising channels in the sector-population convention;
    summed over j' they satisfy sum_j' t = N/2 - m (one pump channel per
    ground-state spin).
    """
    k = np.asarray(k, dtype=float)
    if twoj_tgt == twoj + 2:
        return (k + 1) * (k + 2) * (N - twoj) / (2.0 * (twoj + 2) * (twoj + 1))
    if twoj_tgt == twoj:
        return (N + 2) * (twoj - k) * (k + 1) / (twoj * (twoj + 2.0))
    if twoj_tgt == twoj - 2:
        return (twoj - k - 1) * (twoj - k) * (twoj + 2 + N) / (2.0 * twoj * (twoj + 1))
    raise ValueError("target sector must differ from the source by at most one unit of j")


def pump_transition(N: int, twoj: int, twoj_tgt: int, weights: dict[int, int]) -> sp.csr_matrix:
    """Amplitude matrix G for the local-drive sandwich between sectors.

    The sector-changing part of kappa * sum_i D[sigma+_i] on stored matrix
    elements is kappa * (G kron conj(G)) with
    G[k', k] = sqrt(w_src / w_tgt) * sqrt(t(k)), where t is the population
    rate of :func:`_pump_diag_rate` and the weight ratio converts from
    sector populations to per-copy matrix elements.
    """
    n_src = twoj + 1
    n_tgt = twoj_tgt + 1
    if twoj_tgt == twoj + 2:
        k = np.arange(n_src)
        k_tgt = k + 2
    elif twoj_tgt == twoj:
        k = np.arange(n_src - 1)
        k_tgt = k + 1
    elif twoj_tgt == twoj - 2:
        k = np.arange(n_src - 2)
        k_tgt = k
    else:
        raise ValueError("invalid sector shift")
    if k.size == 0:
        return sp.csr_matrix((n_tgt, n_src), dtype=complex)
    t = _pump_diag_rate(N, twoj, twoj_tgt, k)
    ratio = weights[twoj] / weights[twoj_tgt]
    amp = np.sqrt(np.maximum(t, 0.0) * ratio)
    return sp.csr_matrix((amp.astype(complex), (k_tgt, k)), shape=(n_tgt, n_src))


def _block_ops(tja: int, tjb: int):
    """Collective operators of both species on one (j_A, j_B) block."""
    na, nb = tja + 1, tjb + 1
    ia = sp.identity(na, dtype=complex, format="csr")
    ib = sp.identity(nb, dtype=complex, format="csr")
    sp_a = _sp_matrix(tja)
    sp_b = _sp_matrix(tjb)
    sz_a = sp.diags(_sz_diag(tja)).astype(complex)
    sz_b = sp.diags(_sz_diag(tjb)).astype(complex)
    return {
        "Sp_A": sp.kron(sp_a, ib, format="csr"),
        "Sm_A": sp.kron(sp_a.conj().T, ib, format="csr"),
        "Sz_A": sp.kron(sz_a, ib, format="csr"),
        "Sp_B": sp.kron(ia, sp_b, format="csr"),
        "Sm_B": sp.kron(ia, sp_b.conj().T, format="csr"),
        "Sz_B": sp.kron(ia, sz_b, format="csr"),
        "I": sp.kron(ia, ib, format="csr"),
    }


def build_liouvillian_pi(
    params: CouplingParams,
    N: int | None = None,
    dim_budget: int = DEFAULT_DIM_BUDGET,
) -> tuple[sp.csr_matrix, DickeBasis]:
    """Assemble the generator on the blocked PI state space.

    Returns the sparse superoperator acting on the concatenation of
    row-major vectorized blocks, together with the basis descriptor.
    """
    if N is None:
        N = params.N
    if N is None:
        raise ValueError("N must be given (params.N or explicit argument)")
    if abs(params.V_plus) > params.V + 1e-12:
        raise PhysicalityError(
            f"|V_plus| <= V violated: V_plus={params.V_plus}, V={params.V}"
        )
    basis = dicke_basis(N, dim_budget=dim_budget)
    vm = complex(params.V_minus)
    kappa, delta, V, V_plus = params.kappa, params.delta, params.V, params.V_plus

    rows, cols, vals = [], [], []

    def _accumulate(mat: sp.spmatrix, off_row: int, off_col: int):
        coo = mat.tocoo()
        rows.append(coo.row + off_row)
        cols.append(coo.col + off_col)
        vals.append(coo.data)

    block_of = {b: i for i, b in enumerate(basis.blocks)}
    gcache = {}

    for bi, (tja, tjb) in enumerate(basis.blocks):
        ops = _block_ops(tja, tjb)
        off = basis.offsets[bi]

        h = (delta / 4.0) * (ops["Sz_A"] - ops["Sz_B"])
        h_x = (1j * vm / (2.0 * N)) * (ops["Sp_A"] @ ops["Sm_B"])
        h = h + h_x + h_x.conj().T
        Lb = hamiltonian_superop(h.tocsr())
        Lb = Lb + (V_plus / N) * dissipator_pair(ops["Sm_A"], ops["Sm_B"])
        Lb = Lb + (V / N) * (dissipator(ops["Sm_A"]) + dissipator(ops["Sm_B"]))

        # local drive, anticommutator part: sum_i sigma-_i sigma+_i = (N - S^z)/2
        anti = 0.5 * (N * ops["I"] - ops["Sz_A"]) + 0.5 * (N * ops["I"] - ops["Sz_B"])
        Lb = Lb - 0.5 * kappa * (spre(anti) + spost(anti))
        _accumulate(Lb, off, off)

        # local drive, sector-changing sandwich for each species
        for species in ("A", "B"):
            tj_src = tja if species == "A" else tjb
            for tj_tgt in (tj_src - 2, tj_src, tj_src + 2):
                if tj_tgt not in basis.weights:
                    continue
                tgt_block = (tj_tgt, tjb) if species == "A" else (tja, tj_tgt)
                key = (species == "A", tj_src, tj_tgt)
                if key not in gcache:
                    gcache[key] = pump_transition(N, tj_src, tj_tgt, basis.weights)
                g = gcache[key]
                if g.nnz == 0:
                    continue
                if species == "A":
                    g_f = sp.kron(g, sp.identity(tjb + 1, dtype=complex), format="csr")
                else:
                    g_f = sp.kron(sp.identity(tja + 1, dtype=complex), g, format="csr")
                sandwich = kappa * sp.kron(g_f, g_f.conj(), format="csr")
                _accumulate(sandwich, basis.offsets[block_of[tgt_block]], off)

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    L = sp.coo_matrix((vals, (rows, cols)), shape=(basis.total_dim, basis.total_dim))
    return L.tocsr(), basis


@dataclass
class PIDensityMatrix:
    """Blocked PI density matrix with its basis descriptor."""

    basis: DickeBasis
    blocks: list[np.ndarray]

    @classmethod
    def from_vec(cls, v: np.ndarray, basis: DickeBasis) -> "PIDensityMatrix":
        blocks = []
        for dim, off in zip(basis.block_dims, basis.offsets):
            blocks.append(np.asarray(v[off : off + dim * dim]).reshape(dim, dim))
        return cls(basis=basis, blocks=blocks)

    def to_vec(self) -> np.ndarray:
        return np.concatenate([b.reshape(-1) for b in self.blocks])

    def weighted_trace(self) -> complex:
        tot = 0.0 + 0.0j
        for (tja, tjb), b in zip(self.basis.blocks, self.blocks):
            w = self.basis.weights[tja] * self.basis.weights[tjb]
            tot += w * np.trace(b)
        return tot

    def hermitize(self):
        for i, b in enumerate(self.blocks):
            self.blocks[i] = 0.5 * (b + b.conj().T)

    def normalize(self):
        self.blocks = [b / self.weighted_trace().real for b in self.blocks]

    def positivity_floor(self) -> float:
        """Smallest eigenvalue over all (Hermitized) blocks."""
        floor = np.inf
        for b in self.blocks:
            h = 0.5 * (b + b.conj().T)
            floor = min(floor, float(np.linalg.eigvalsh(h).min()))
        return floor

    def max_imag(self) -> float:
        return max(float(np.abs(b.imag).max()) for b in self.blocks)

    def expectation(self, op_name_products: list[list[str]]) -> complex:
        """Weighted expectation of a sum of collective-operator products.

        Each inner list names block operators (e.g. ["Sp_A", "Sm_B"])
        multiplied left to right.
        """
        tot = 0.0 + 0.0j
        for (tja, tjb), b in zip(self.basis.blocks, self.blocks):
            ops = _block_ops(tja, tjb)
            w = self.basis.weights[tja] * self.basis.weights[tjb]
            for names in op_name_products:
                o = ops["I"]
                for nm in names:
                    o = o @ ops[nm]
                tot += w * np.trace((o @ b))
        return tot

    def save(self, path: str | Path):
        """Binary block data plus a JSON header describing the basis."""
        path = Path(path)
        np.save(path.with_suffix(".npy"), self.to_vec())
        header = {
            "N": self.basis.N,
            "sectors": [list(b) for b in self.basis.blocks],
            "block_dims": list(self.basis.block_dims),
            "weights": {str(k): v for k, v in self.basis.weights.items()},
            "convention": "row-major vec per (2j_A, 2j_B) block, m ascending",
        }
        path.with_suffix(".json").write_text(json.dumps(header, indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "PIDensityMatrix":
        path = Path(path)
        header = json.loads(path.with_suffix(".json").read_text())
        basis = dicke_basis(int(header["N"]))
        v = np.load(path.with_suffix(".npy"))
        return cls.from_vec(v, basis)


def steady_state_pi(
    params: CouplingParams,
    N: int | None = None,
    use_charge_sector: bool = True,
    check_degenerate: bool = True,
    degeneracy_tol: float = 1e-10,
    dim_budget: int = DEFAULT_DIM_BUDGET,
) -> tuple[PIDensityMatrix, SteadyStateResult]:
    """Steady state of the PI generator, residual measured on the full L.

    The generator conserves the coherence charge q, so the kernel search
    is restricted to the q = 0 sector by default; the reported residual
    ||L rho|| is still evaluated with the unrestricted generator.
    """
    L, basis = build_liouvillian_pi(params, N, dim_budget=dim_budget)
    trace_row = basis.trace_row()
    if use_charge_sector:
        mask = basis.charge_array() == 0
        idx = np.flatnonzero(mask)
        Lq = L[idx][:, idx]
        res_q = steady_state(
            Lq,
            trace_row[idx],
            check_degenerate=check_degenerate,
            degeneracy_tol=degeneracy_tol,
        )
        v = np.zeros(basis.total_dim, dtype=complex)
        v[idx] = res_q.rho_vec
    else:
        res_q = steady_state(
            L, trace_row, check_degenerate=check_degenerate, degeneracy_tol=degeneracy_tol
        )
        v = res_q.rho_vec
    pidm = PIDensityMatrix.from_vec(v, basis)
    pidm.hermitize()
    pidm.normalize()
    residual = float(np.linalg.norm(L @ pidm.to_vec()))
    return pidm, SteadyStateResult(rho_vec=pidm.to_vec(), residual=residual, gap=res_q.gap)


def correlators_pi(pidm: PIDensityMatrix) -> CorrelatorSet:
    """Distinct-spin correlators from a PI state (same conventions as the
    full-space extractor)."""
    N = pidm.basis.N
    e = pidm.expectation
    sz_a = e([["Sz_A"]]).real / N
    sz_b = e([["Sz_B"]]).real / N
    pp_ab = e([["Sp_A", "Sm_B"]]) / N**2
    zz_ab = e([["Sz_A", "Sz_B"]]).real / N**2
    sp_a = e([["Sp_A"]]) / N
    sp_b = e([["Sp_B"]]) / N
    quad = e([["Sp_A", "Sp_A", "Sm_B", "Sm_B"]])
    if N >= 2:
        denom = N * (N - 1)
        quad /= denom**2
        pp_aa = (e([["Sp_A", "Sm_A"]]).real - N * (1 + sz_a) / 2) / denom
        pp_bb = (e([["Sp_B", "Sm_B"]]).real - N * (1 + sz_b) / 2) / denom
        zz_aa = (e([["Sz_A", "Sz_A"]]).real - N) / denom
        zz_bb = (e([["Sz_B", "Sz_B"]]).real - N) / denom
    else:
        pp_aa = pp_bb = zz_aa = zz_bb = float("nan")
        quad = float("nan")
    return CorrelatorSet(
        N=N,
        s_z_A=sz_a,
        s_z_B=sz_b,
        pp_AA=pp_aa,
        pp_BB=pp_bb,
        pp_AB=pp_ab,
        zz_AA=zz_aa,
        zz_BB=zz_bb,
        zz_AB=zz_ab,
        quad=quad,
        sp_A=sp_a,
        sp_B=sp_b,
    )
