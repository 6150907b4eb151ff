"""Full product-space Liouvillian for two driven spin ensembles.

Exact at small N (dimension 4^(2N)); serves as the oracle that the
permutationally invariant solver is validated against.  The master
equation combines a detuning Hamiltonian, a coherent interspecies
exchange with amplitude i*V_minus/(2N), dissipative interspecies and
intraspecies couplings, and local incoherent driving of every spin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import (
    SIGMA_M,
    SIGMA_P,
    SIGMA_Z,
    collective_operator,
    dissipator,
    dissipator_pair,
    hamiltonian_superop,
    site_operator,
    spre,
    spost,
    trace_vector,
    unvec,
)
from .params import CouplingParams, PhysicalityError, directional_from_symmetric

__all__ = [
    "CollectiveOps",
    "CorrelatorSet",
    "DegenerateKernelError",
    "SteadyStateResult",
    "collective_ops",
    "build_liouvillian_full",
    "build_liouvillian_cascaded",
    "build_interaction_dissipators_appA",
    "build_interaction_dissipators_jump",
    "steady_state",
    "steady_state_full",
    "correlators_full",
    "pt_check",
]

FULL_N_MAX = 3


@dataclass(frozen=True)
class CollectiveOps:
    """Collective and drive operators on the 2N-spin product space."""

    N: int
    dim: int
    Sp_A: sp.csr_matrix
    Sm_A: sp.csr_matrix
    Sz_A: sp.csr_matrix
    Sp_B: sp.csr_matrix
    Sm_B: sp.csr_matrix
    Sz_B: sp.csr_matrix
    locals_A: tuple
    locals_B: tuple


def collective_ops(N: int) -> CollectiveOps:
    if not 1 <= N <= FULL_N_MAX:
        raise ValueError(
            f"full product-space solver supports N <= {FULL_N_MAX}, got N={N}"
        )
    n_sites = 2 * N
    sites_a = range(0, N)
    sites_b = range(N, 2 * N)
    return CollectiveOps(
        N=N,
        dim=2**n_sites,
        Sp_A=collective_operator(SIGMA_P, sites_a, n_sites),
        Sm_A=collective_operator(SIGMA_M, sites_a, n_sites),
        Sz_A=collective_operator(SIGMA_Z, sites_a, n_sites),
        Sp_B=collective_operator(SIGMA_P, sites_b, n_sites),
        Sm_B=collective_operator(SIGMA_M, sites_b, n_sites),
        Sz_B=collective_operator(SIGMA_Z, sites_b, n_sites),
        locals_A=tuple(site_operator(SIGMA_P, s, n_sites) for s in sites_a),
        locals_B=tuple(site_operator(SIGMA_P, s, n_sites) for s in sites_b),
    )


def _require_physical(params: CouplingParams):
    if abs(params.V_plus) > params.V + 1e-12:
        raise PhysicalityError(
            f"|V_plus| <= V violated: V_plus={params.V_plus}, V={params.V}"
        )


def _drive_superop(ops: CollectiveOps, kappa: float) -> sp.csr_matrix:
    total = None
    for o in ops.locals_A + ops.locals_B:
        term = dissipator(o)
        total = term if total is None else total + term
    return kappa * total


def build_liouvillian_full(
    params: CouplingParams,
    N: int | None = None,
    ops: CollectiveOps | None = None,
    swap_species: bool = False,
    h_inter_sign: float = 1.0,
) -> sp.csr_matrix:
    """Assemble the master-equation generator on the full product space.

    ``swap_species`` and ``h_inter_sign`` exist for the parity-time
    transformation (species exchange combined with flipping the coherent
    interspecies Hamiltonian); they leave all other terms untouched.
    """
    _require_physical(params)
    if ops is None:
        if N is None:
            N = params.N
        if N is None:
            raise ValueError("N must be given (params.N or explicit argument)")
        ops = collective_ops(N)
    N = ops.N
    if swap_species:
        Sp_A, Sm_A, Sz_A = ops.Sp_B, ops.Sm_B, ops.Sz_B
        Sp_B, Sm_B, Sz_B = ops.Sp_A, ops.Sm_A, ops.Sz_A
    else:
        Sp_A, Sm_A, Sz_A = ops.Sp_A, ops.Sm_A, ops.Sz_A
        Sp_B, Sm_B, Sz_B = ops.Sp_B, ops.Sm_B, ops.Sz_B

    h0 = (params.delta / 4.0) * (Sz_A - Sz_B)
    vm = complex(params.V_minus)
    h_inter = (1j * vm / (2.0 * N)) * (Sp_A @ Sm_B)
    h_inter = h_inter + h_inter.conj().T
    L = hamiltonian_superop((h0 + h_inter_sign * h_inter).tocsr())

    L = L + (params.V_plus / N) * dissipator_pair(Sm_A, Sm_B)
    L = L + (params.V / N) * (dissipator(Sm_A) + dissipator(Sm_B))
    L = L + _drive_superop(ops, params.kappa)
    return L.tocsr()


def build_liouvillian_cascaded(
    params: CouplingParams,
    N: int | None = None,
    ops: CollectiveOps | None = None,
) -> sp.csr_matrix:
    """Equivalent cascaded (two one-way channels) form of the generator.

    Valid for real V_minus only: a complex coherent amplitude cannot be
    split into two independent cascaded channels.
    """
    if abs(complex(params.V_minus).imag) > 1e-14:
        raise ValueError("cascaded form requires real V_minus")
    _require_physical(params)
    if ops is None:
        if N is None:
            N = params.N
        ops = collective_ops(N)
    N = ops.N
    d = directional_from_symmetric(params)
    v_ab, v_ba = d.V_AB.real, d.V_BA.real

    Sp_A, Sm_A = ops.Sp_A, ops.Sm_A
    Sp_B, Sm_B = ops.Sp_B, ops.Sm_B

    # -V_AB ([S+_B, S-_A rho] + [rho S+_A, S-_B]) / 2N  (A drives B)
    line1 = (
        spre(Sp_B @ Sm_A)
        - spre(Sm_A) @ spost(Sp_B)
        + spost(Sp_A @ Sm_B)
        - spre(Sm_B) @ spost(Sp_A)
    )
    # -V_BA ([S+_A, S-_B rho] + [rho S+_B, S-_A]) / 2N  (B drives A)
    line2 = (
        spre(Sp_A @ Sm_B)
        - spre(Sm_B) @ spost(Sp_A)
        + spost(Sp_B @ Sm_A)
        - spre(Sm_A) @ spost(Sp_B)
    )
    L = (-v_ab / (2.0 * N)) * line1 + (-v_ba / (2.0 * N)) * line2

    h0 = (params.delta / 4.0) * (ops.Sz_A - ops.Sz_B)
    L = L + hamiltonian_superop(h0.tocsr())
    L = L + (params.V / N) * (dissipator(Sm_A) + dissipator(Sm_B))
    L = L + _drive_superop(ops, params.kappa)
    return L.tocsr()


def build_interaction_dissipators_appA(
    params: CouplingParams, ops: CollectiveOps
) -> sp.csr_matrix:
    """L_inter + L_intra combined into explicit Lindblad channels.

    (|V_plus|/N) D[S-_A + sign(V_plus) S-_B]
    + ((V - |V_plus|)/N) (D[S-_A] + D[S-_B]).
    """
    _require_physical(params)
    N = ops.N
    sgn = 1.0 if params.V_plus >= 0 else -1.0
    L = (abs(params.V_plus) / N) * dissipator(ops.Sm_A + sgn * ops.Sm_B)
    L = L + ((params.V - abs(params.V_plus)) / N) * (
        dissipator(ops.Sm_A) + dissipator(ops.Sm_B)
    )
    return L.tocsr()


def build_interaction_dissipators_jump(
    params: CouplingParams, ops: CollectiveOps
) -> sp.csr_matrix:
    """L_inter + L_intra as the two collective jump channels.

    (V_uu/N) D[S-_A + S-_B] + (V_ud/N) D[S-_A - S-_B] with
    V_uu = (V + V_plus)/2 and V_ud = (V - V_plus)/2.
    """
    from .params import jump_decomposition

    jd = jump_decomposition(params)
    N = ops.N
    return (
        (jd.V_up_up / N) * dissipator(ops.Sm_A + ops.Sm_B)
        + (jd.V_up_down / N) * dissipator(ops.Sm_A - ops.Sm_B)
    ).tocsr()


def interaction_superop(params: CouplingParams, ops: CollectiveOps) -> sp.csr_matrix:
    """L_inter + L_intra in the direct (pairwise-dissipator) form."""
    N = ops.N
    return (
        (params.V_plus / N) * dissipator_pair(ops.Sm_A, ops.Sm_B)
        + (params.V / N) * (dissipator(ops.Sm_A) + dissipator(ops.Sm_B))
    ).tocsr()


class DegenerateKernelError(RuntimeError):
    """A second near-zero Liouvillian eigenvalue was found."""


@dataclass
class SteadyStateResult:
    """Steady-state vector with its defect norm ||L rho_ss||."""

    rho_vec: np.ndarray
    residual: float
    gap: float | None = None


_DIRECT_SOLVE_MAX = 5000


def _bordered_system(L: sp.spmatrix, trace_row: np.ndarray):
    """Replace the last row of L by the trace functional.

    Trace preservation (trace_row @ L = 0) makes any row with nonzero
    trace weight linearly dependent on the others, so the bordered system
    is nonsingular whenever the kernel is simple.  The dense row goes
    last so that it is eliminated last and cannot blow up LU/ILU fill-in.
    """
    n = L.shape[0]
    M = sp.vstack(
        [L.tocsr()[: n - 1, :], sp.csr_matrix(trace_row.reshape(1, n))], format="csc"
    )
    rhs = np.zeros(n, dtype=complex)
    rhs[n - 1] = 1.0
    return M, rhs


def _raise_if_degenerate(vals: np.ndarray, degeneracy_tol: float) -> float:
    vals = vals[np.argsort(np.abs(vals))]
    gap = float(abs(vals[1]))
    if gap < degeneracy_tol:
        raise DegenerateKernelError(
            f"two Liouvillian eigenvalues within {degeneracy_tol}: "
            f"{vals[0]:.3e}, {vals[1]:.3e}"
        )
    return gap


def steady_state(
    L: sp.spmatrix,
    trace_row: np.ndarray,
    check_degenerate: bool = True,
    degeneracy_tol: float = 1e-10,
) -> SteadyStateResult:
    """Unit-trace kernel vector of a trace-preserving generator.

    Solves the bordered linear system (trace row replacing one equation);
    small systems use a direct sparse LU, large ones an incomplete-LU
    preconditioned Krylov solve with direct fallback.  A shift-inverted
    Arnoldi pass supplies the slowest relaxing mode for the
    degenerate-kernel check (on large systems the incomplete factor
    doubles as the approximate inverse, with the Ritz values refined by
    Rayleigh quotients on the true generator).
    """
    L = L.tocsc()
    n = L.shape[0]
    gap = None
    M, rhs = _bordered_system(L, trace_row)

    if n <= _DIRECT_SOLVE_MAX:
        rho = spla.splu(M).solve(rhs)
        if check_degenerate and n >= 8:
            try:
                vals = spla.eigs(
                    L, k=2, sigma=-1e-6, which="LM", return_eigenvectors=False,
                    tol=1e-9,
                )
            except DegenerateKernelError:
                raise
            except Exception:
                vals = None
            if vals is not None:
                gap = _raise_if_degenerate(vals, degeneracy_tol)
    else:
        shifted = (L + 1e-6 * sp.identity(n, dtype=complex, format="csc")).tocsc()
        rho = None
        try:
            ilu = spla.spilu(shifted, drop_tol=1e-4, fill_factor=20)
            prec = spla.LinearOperator((n, n), matvec=ilu.solve)
            x, info = spla.lgmres(M, rhs, M=prec, rtol=1e-13, atol=0.0, maxiter=1000)
            if info == 0 and np.linalg.norm(M @ x - rhs) < 1e-9 * max(
                np.linalg.norm(x), 1e-300
            ):
                rho = x
            if check_degenerate:
                try:
                    vals, vecs = spla.eigs(
                        L, k=2, sigma=-1e-6, which="LM",
                        OPinv=spla.LinearOperator((n, n), matvec=ilu.solve),
                        tol=1e-4, ncv=16, maxiter=200,
                    )
                    # the incomplete factor is only an approximate inverse:
                    # refine the Ritz values on the true generator
                    refined = np.array(
                        [
                            (vecs[:, i].conj() @ (L @ vecs[:, i]))
                            / (vecs[:, i].conj() @ vecs[:, i])
                            for i in range(vals.size)
                        ]
                    )
                    gap = _raise_if_degenerate(refined, degeneracy_tol)
                except DegenerateKernelError:
                    raise
                except Exception:
                    gap = None
        except DegenerateKernelError:
            raise
        except RuntimeError:
            rho = None
        if rho is None:
            rho = spla.splu(M).solve(rhs)

    tr = trace_row @ rho
    rho = rho / tr
    residual = float(np.linalg.norm(L @ rho))
    return SteadyStateResult(rho_vec=rho, residual=residual, gap=gap)


def steady_state_full(
    params: CouplingParams, N: int, ops: CollectiveOps | None = None
) -> tuple[np.ndarray, SteadyStateResult]:
    """Exact steady density matrix on the product space (Hermitized)."""
    if ops is None:
        ops = collective_ops(N)
    L = build_liouvillian_full(params, ops=ops)
    res = steady_state(L, trace_vector(ops.dim))
    rho = unvec(res.rho_vec)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return rho, res


@dataclass(frozen=True)
class CorrelatorSet:
    """Distinct-spin normalized correlators of the two-ensemble state."""

    N: int
    s_z_A: float
    s_z_B: float
    pp_AA: float
    pp_BB: float
    pp_AB: complex
    zz_AA: float
    zz_BB: float
    zz_AB: float
    quad: complex
    sp_A: complex
    sp_B: complex


def _expect(rho: np.ndarray, op: sp.spmatrix) -> complex:
    return complex(np.trace(op @ rho))


def correlators_full(rho: np.ndarray, N: int, ops: CollectiveOps | None = None) -> CorrelatorSet:
    """Distinct-spin correlators from collective moments of an exact state.

    Same-site contributions are removed exactly:
    <S+_a S-_a> = N(1 + <sigma^z_a>)/2 + N(N-1) pp_aa and
    (S+_a)^2 already contains only distinct-site pairs since
    (sigma^+)^2 = 0.
    """
    if ops is None:
        ops = collective_ops(N)
    sz_a = _expect(rho, ops.Sz_A).real / N
    sz_b = _expect(rho, ops.Sz_B).real / N
    pp_ab = _expect(rho, ops.Sp_A @ ops.Sm_B) / N**2
    zz_ab = _expect(rho, ops.Sz_A @ ops.Sz_B).real / N**2
    quad = _expect(rho, ops.Sp_A @ ops.Sp_A @ ops.Sm_B @ ops.Sm_B)
    if N >= 2:
        quad /= (N * (N - 1)) ** 2
    sp_a = _expect(rho, ops.Sp_A) / N
    sp_b = _expect(rho, ops.Sp_B) / N
    if N == 1:
        # same-species pair correlators are undefined for a single spin
        pp_aa = pp_bb = zz_aa = zz_bb = float("nan")
        quad = float("nan")
    else:
        denom = N * (N - 1)
        pp_aa = (_expect(rho, ops.Sp_A @ ops.Sm_A).real - N * (1 + sz_a) / 2) / denom
        pp_bb = (_expect(rho, ops.Sp_B @ ops.Sm_B).real - N * (1 + sz_b) / 2) / denom
        zz_aa = (_expect(rho, ops.Sz_A @ ops.Sz_A).real - N) / denom
        zz_bb = (_expect(rho, ops.Sz_B @ ops.Sz_B).real - N) / denom
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


def pt_check(params: CouplingParams, N: int | None = None) -> float:
    """Defect of parity-time symmetry at the generator level.

    Builds L and its transform under species exchange combined with
    H_inter -> -H_inter, and returns the max-norm of L' - conj(L).
    Zero exactly when delta = 0 and Im V_minus = 0.
    """
    if N is None:
        N = params.N
    ops = collective_ops(N)
    L = build_liouvillian_full(params, ops=ops)
    Lt = build_liouvillian_full(params, ops=ops, swap_species=True, h_inter_sign=-1.0)
    diff = (Lt - L.conj()).tocoo()
    if diff.nnz == 0:
        return 0.0
    return float(np.max(np.abs(diff.data)))
