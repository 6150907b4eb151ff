"""Model parameters and coupling-representation conversions.

Two species of N spins each, incoherently driven at rate ``kappa`` and
detuned by ``delta``, interact through an intraspecies dissipative
strength ``V``, a reciprocal dissipative strength ``V_plus`` and a
nonreciprocal coherent strength ``V_minus`` (complex in general).  All
rates are expressed in units of ``kappa`` unless stated otherwise; the
``kappa`` field stays explicit so dimensional inputs remain usable.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

__all__ = [
    "PhysicalityError",
    "CouplingParams",
    "DirectionalCouplings",
    "CouplingStrengths",
    "CascadedWaveguideParams",
    "BraidedWaveguideParams",
    "JumpDecomposition",
    "directional_from_symmetric",
    "symmetric_from_directional",
    "couplings_from_cascaded",
    "couplings_from_braided",
    "jump_decomposition",
]

# slack for float round-off in the |V_plus| <= V bound
_PHYS_TOL = 1e-12


class PhysicalityError(ValueError):
    """Raised when couplings violate the Lindblad-form bound |V_plus| <= V."""


@dataclass(frozen=True)
class CouplingParams:
    """Rates and couplings of the two-species spin model.

    Parameters
    ----------
    V : float
        Intraspecies dissipative strength, >= 0.
    V_plus : float
        Reciprocal dissipative strength; may be negative, |V_plus| <= V.
    V_minus : complex
        Nonreciprocal coherent strength.  A nonzero imaginary part
        explicitly breaks the parity-time symmetry of the model.
    kappa : float
        Incoherent drive rate, > 0.  Defaults to 1 (unit of time).
    delta : float
        Detuning between the species (A at +delta/2, B at -delta/2).
    N : int or None
        Spins per species.  ``None`` marks the thermodynamic limit and is
        only meaningful for the mean-field equations.
    """

    V: float
    V_plus: float = 0.0
    V_minus: complex = 0.0 + 0.0j
    kappa: float = 1.0
    delta: float = 0.0
    N: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "V_minus", complex(self.V_minus))
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.V < 0:
            raise PhysicalityError(f"V must be nonnegative, got {self.V}")
        if abs(self.V_plus) > self.V + _PHYS_TOL:
            raise PhysicalityError(
                f"|V_plus| <= V required for a Lindblad-form master equation; "
                f"got V_plus={self.V_plus}, V={self.V}"
            )
        if self.N is not None:
            if not isinstance(self.N, int) or self.N < 1:
                raise ValueError(f"N must be a positive integer or None, got {self.N!r}")

    @property
    def is_thermodynamic(self) -> bool:
        return self.N is None

    def with_(self, **kwargs) -> "CouplingParams":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        """Flat key-value form shared by all CLI subcommands."""
        return {
            "kappa": self.kappa,
            "delta": self.delta,
            "V": self.V,
            "V_plus": self.V_plus,
            "V_minus_re": self.V_minus.real,
            "V_minus_im": self.V_minus.imag,
            "N": self.N,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CouplingParams":
        n = d.get("N")
        if isinstance(n, str):
            if n.lower() in ("inf", "none", "thermodynamic"):
                n = None
            else:
                n = int(n)
        return cls(
            V=float(d["V"]),
            V_plus=float(d.get("V_plus", 0.0)),
            V_minus=complex(float(d.get("V_minus_re", 0.0)), float(d.get("V_minus_im", 0.0))),
            kappa=float(d.get("kappa", 1.0)),
            delta=float(d.get("delta", 0.0)),
            N=n,
        )


class DirectionalCouplings(NamedTuple):
    """Influence strengths between the species: A on B and B on A."""

    V_AB: complex
    V_BA: complex


class CouplingStrengths(NamedTuple):
    """The (V, V_plus, V_minus) fragment produced by the waveguide maps."""

    V: float
    V_plus: float
    V_minus: complex


def directional_from_symmetric(params: CouplingParams) -> DirectionalCouplings:
    """Directional couplings from the symmetric/antisymmetric pair.

    V_AB = V_plus + V_minus and V_BA = V_plus - conj(V_minus).  For real
    V_minus this reduces to V_plus +/- V_minus; interactions with
    V_AB = -V_BA are maximally antagonistic.
    """
    vm = complex(params.V_minus)
    return DirectionalCouplings(params.V_plus + vm, params.V_plus - vm.conjugate())


def symmetric_from_directional(d: DirectionalCouplings, tol: float = 1e-9) -> tuple[float, complex]:
    """Inverse of :func:`directional_from_symmetric`.

    Returns (V_plus, V_minus).  A directional pair is representable only
    if V_AB + conj(V_BA) is real; otherwise a ValueError is raised.
    """
    v_plus = (d.V_AB + complex(d.V_BA).conjugate()) / 2.0
    v_minus = (d.V_AB - complex(d.V_BA).conjugate()) / 2.0
    scale = max(1.0, abs(d.V_AB), abs(d.V_BA))
    if abs(v_plus.imag) > tol * scale:
        raise ValueError(
            "directional pair not representable by real V_plus: "
            f"Im(V_AB + conj(V_BA))/2 = {v_plus.imag}"
        )
    return v_plus.real, v_minus


@dataclass(frozen=True)
class CascadedWaveguideParams:
    """Doubly cascaded implementation: two independent chiral waveguides.

    Mode 1 carries influence from species A to B with coupling ``g1``,
    sign ``p1`` from the phase shifter and transmission ``eta1``
    (eta = sqrt(1 - l^2) with loss l); mode 2 runs the other way.
    """

    g1: float
    g2: float
    p1: int = 1
    p2: int = 1
    eta1: float = 1.0
    eta2: float = 1.0

    def __post_init__(self):
        if self.g1 < 0 or self.g2 < 0:
            raise ValueError("coupling rates g1, g2 must be nonnegative")
        if self.p1 not in (1, -1) or self.p2 not in (1, -1):
            raise ValueError("phase-shift signs p1, p2 must be +1 or -1")
        for eta in (self.eta1, self.eta2):
            if not 0.0 <= eta <= 1.0:
                raise ValueError(f"transmission must lie in [0, 1], got {eta}")

    @property
    def l1(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.eta1**2))

    @property
    def l2(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.eta2**2))


@dataclass(frozen=True)
class BraidedWaveguideParams:
    """Braided implementation with a bidirectional and a chiral mode.

    The bidirectional mode (coupling ``g_plus``, transmission ``eta_plus``,
    phase-shift sign ``sign_plus``) mediates the dissipative reciprocal
    coupling; the lossless chiral mode (coupling ``g_minus``, phase
    ``beta``) mediates the purely coherent coupling and permits
    |V_minus| > V.
    """

    g_plus: float
    g_minus: float
    beta: float = 0.0
    sign_plus: int = 1
    eta_plus: float = 1.0

    def __post_init__(self):
        if self.g_plus < 0 or self.g_minus < 0:
            raise ValueError("coupling rates g_plus, g_minus must be nonnegative")
        if self.sign_plus not in (1, -1):
            raise ValueError("sign_plus must be +1 or -1")
        if not 0.0 <= self.eta_plus <= 1.0:
            raise ValueError(f"transmission must lie in [0, 1], got {self.eta_plus}")


class JumpDecomposition(NamedTuple):
    """Rates of the two collective jump channels S-_A + S-_B and S-_A - S-_B."""

    V_up_up: float
    V_up_down: float


def couplings_from_cascaded(w: CascadedWaveguideParams, N: int) -> CouplingStrengths:
    """Effective couplings of the doubly cascaded setup.

    V_pm/N = p1 g1^2 eta1 +/- p2 g2^2 eta2 and V/N = g1^2 + g2^2.  The
    result always satisfies |V_plus| <= V (and |V_minus| <= V), so this
    geometry cannot leave the physical region.
    """
    a = w.p1 * w.g1**2 * w.eta1
    b = w.p2 * w.g2**2 * w.eta2
    return CouplingStrengths(
        V=N * (w.g1**2 + w.g2**2),
        V_plus=N * (a + b),
        V_minus=complex(N * (a - b)),
    )


def couplings_from_braided(w: BraidedWaveguideParams, N: int) -> CouplingStrengths:
    """Effective couplings of the braided setup.

    V_minus/N = 2 g_minus^2 exp(i beta) (the chiral mode is taken
    lossless), V_plus/N = sign_plus * 2 g_plus^2 eta_plus and
    V/N = 2 g_plus^2.
    """
    return CouplingStrengths(
        V=N * 2.0 * w.g_plus**2,
        V_plus=w.sign_plus * N * 2.0 * w.g_plus**2 * w.eta_plus,
        V_minus=N * 2.0 * w.g_minus**2 * cmath.exp(1j * w.beta),
    )


def jump_decomposition(params: CouplingParams) -> JumpDecomposition:
    """Split the dissipative couplings into two nonnegative collective jumps.

    V_up_up = (V + V_plus)/2 drives the synchronizing jump S-_A + S-_B,
    V_up_down = (V - V_plus)/2 the pi-synchronizing jump S-_A - S-_B.
    Nonnegativity of both rates is equivalent to |V_plus| <= V.
    """
    up_up = (params.V + params.V_plus) / 2.0
    up_down = (params.V - params.V_plus) / 2.0
    if up_up < -_PHYS_TOL or up_down < -_PHYS_TOL:
        raise PhysicalityError(
            f"jump rates must be nonnegative: got ({up_up}, {up_down})"
        )
    return JumpDecomposition(max(up_up, 0.0), max(up_down, 0.0))
