"""Exact collective-spin simulation in the Dicke basis.

N two-mode atoms form a pseudo-spin S = N/2.  A pure symmetric state is the
complex amplitude vector c_m over |S, m>, stored in descending order
m = +S, ..., -S (index i maps to m = S - i).  Everything here is a pure
function: states are immutable values, operations return new states, and no
global mutable state exists, so parallel mapping over states is safe.

Rotations about x/y are driven by the eigendecomposition of the real
symmetric tridiagonal S_x matrix, whose spectrum is exactly m = -S ... +S and
whose eigenvector matrix is orthogonal, so rotations stay unitary to machine
precision at any N (naive column recurrences for the Wigner d-matrix blow up
beyond N of a few hundred).  z rotations and one-axis twisting are diagonal
phase multiplications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import DegenerateStateError

__all__ = [
    "DickeState",
    "SpinOp",
    "PulseSpec",
    "HusimiGrid",
    "make_css",
    "apply_oat",
    "apply_rotation",
    "expectation",
    "wineland_xi2",
    "husimi_grid",
    "operator_matrix",
    "wigner_d",
]

# Amplitudes with log-magnitude below this are flushed to exact zero;
# keeps long binomial tails from polluting moments with denormals.
_LOG_FLOOR = -700.0
_NORM_TOL = 1e-10
# Imaginary residue allowed on Hermitian expectation values, relative to the
# natural operator scale S**order.
_HERMITIAN_IMAG_TOL = 1e-12
_DENSE_MAX_ATOMS = 64


class SpinOp(str, Enum):
    """Closed set of collective spin operators with exact matrix elements."""

    SX = "sx"
    SY = "sy"
    SZ = "sz"
    SX2 = "sx2"
    SY2 = "sy2"
    SZ2 = "sz2"
    SP = "sp"
    SM = "sm"
    SP_SZ = "sp_sz"
    SP2_SZ = "sp2_sz"
    SP_SZ2 = "sp_sz2"
    SP_SM = "sp_sm"
    SP2_SM = "sp2_sm"


# Power of S setting the magnitude scale of each Hermitian label, used to
# normalise the imaginary-part check.
_OP_ORDER = {
    SpinOp.SX: 1, SpinOp.SY: 1, SpinOp.SZ: 1,
    SpinOp.SX2: 2, SpinOp.SY2: 2, SpinOp.SZ2: 2, SpinOp.SP_SM: 2,
}


@dataclass(frozen=True)
class DickeState:
    """Normalized amplitude vector over |S, m>, m = +S ... -S (descending).

    ``amplitudes`` must be treated as read-only; operations return new states.
    """

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != self.n_atoms + 1:
            raise ValueError(
                f"amplitudes must have length n_atoms + 1 = {self.n_atoms + 1}, "
                f"got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise ValueError("amplitudes contain non-finite entries")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm deviates from 1 by {abs(norm - 1.0):.3e}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def spin(self) -> float:
        """Total spin S = N/2."""
        return 0.5 * self.n_atoms

    @property
    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers in storage order (descending)."""
        return self.spin - np.arange(self.n_atoms + 1)

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class PulseSpec:
    """Instantaneous collective rotation: exp(-i * angle * S_axis)."""

    axis: str
    angle: float

    def __post_init__(self):
        if self.axis not in ("x", "y", "z"):
            raise ValueError(f"axis must be one of 'x', 'y', 'z', got {self.axis!r}")
        if not math.isfinite(self.angle):
            raise ValueError("pulse angle must be finite")


@dataclass(frozen=True)
class HusimiGrid:
    """Husimi Q samples: values[i, j] = Q(polar[i], azimuth[j])."""

    polar: np.ndarray
    azimuth: np.ndarray
    values: np.ndarray

    def sphere_integral(self) -> float:
        """Quadrature of Q over the sphere (trapezoid in polar, uniform azimuth)."""
        dphi = 2.0 * math.pi / len(self.azimuth)
        ring = self.values.sum(axis=1) * dphi * np.sin(self.polar)
        return float(np.trapezoid(ring, self.polar))


def _binomial_log_half(n: int) -> np.ndarray:
    """0.5 * log C(n, k) for k = 0..n, via log-gamma (overflow-safe)."""
    k = np.arange(n + 1)
    return 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def _css_amplitudes(n_atoms: int, polar: float) -> np.ndarray:
    """Real amplitudes of the coherent state at azimuth 0 (index k = S - m)."""
    n = n_atoms
    k = np.arange(n + 1)
    ch = math.cos(0.5 * polar)
    sh = math.sin(0.5 * polar)
    out = np.zeros(n + 1)
    if sh == 0.0:
        out[0] = 1.0
        return out
    if ch == 0.0:
        out[n] = 1.0
        return out
    logmag = (
        _binomial_log_half(n)
        + (n - k) * math.log(abs(ch))
        + k * math.log(abs(sh))
    )
    keep = logmag > _LOG_FLOOR
    out[keep] = np.exp(logmag[keep])
    # polar in [0, pi] gives ch, sh >= 0; signs only matter outside that range
    if ch < 0:
        out *= np.where((n - k) % 2 == 1, -1.0, 1.0)
    if sh < 0:
        out *= np.where(k % 2 == 1, -1.0, 1.0)
    out /= math.sqrt(float(np.sum(out**2)))
    return out


def make_css(n_atoms: int, polar: float, azimuth: float) -> DickeState:
    """Build the spin coherent state pointing along (polar, azimuth).

    (polar, azimuth) = (pi/2, 0) gives the +x binomial state
    2^-S sum_k C(2S, k)^(1/2) |S, S-k>; (0, anything) is the +S pole state.
    Amplitudes are assembled from log-gamma binomials so N >= 1000 is exact
    to double precision without overflow.
    """
    if not isinstance(n_atoms, (int, np.integer)) or n_atoms < 1:
        raise ValueError(f"n_atoms must be a positive integer, got {n_atoms!r}")
    if not (math.isfinite(polar) and math.isfinite(azimuth)):
        raise ValueError("polar and azimuth must be finite")
    if not 0.0 <= polar <= math.pi:
        raise ValueError(f"polar must lie in [0, pi], got {polar}")
    mags = _css_amplitudes(n_atoms, polar)
    k = np.arange(n_atoms + 1)
    amps = mags * np.exp(1j * k * azimuth)
    return DickeState(int(n_atoms), amps)


def apply_oat(state: DickeState, tau: float) -> DickeState:
    """One-axis twisting exp(-i * tau * S_z^2): diagonal phases exp(-i tau m^2)."""
    if not math.isfinite(tau):
        raise ValueError("tau must be finite")
    if tau == 0.0:
        return state
    m = state.m_values
    return DickeState(state.n_atoms, state.amplitudes * np.exp(-1j * tau * m * m))


def _ladder_strengths(n: int) -> np.ndarray:
    """f[k] = sqrt(k (n + 1 - k)): matrix element of S_+ from index k to k-1."""
    k = np.arange(n + 1, dtype=float)
    return np.sqrt(k * (n + 1.0 - k))


@lru_cache(maxsize=4)
def _sx_eigensystem(n_atoms: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal eigenvectors of the tridiagonal S_x and its exact spectrum.

    The computed eigenvalues are snapped to the exact values m = -S ... +S
    (ascending), which keeps rotation angles like 2 pi exactly periodic.
    """
    n = n_atoms
    off = 0.5 * _ladder_strengths(n)[1:]
    _, evecs = eigh_tridiagonal(np.zeros(n + 1), off)
    m_exact = np.arange(n + 1) - 0.5 * n
    evecs.setflags(write=False)
    m_exact.setflags(write=False)
    return m_exact, evecs


def _rotate_x(amplitudes: np.ndarray, n_atoms: int, angle: float) -> np.ndarray:
    """exp(-i angle S_x) applied through the S_x eigenbasis."""
    m_eig, u = _sx_eigensystem(n_atoms)
    return u @ (np.exp(-1j * angle * m_eig) * (u.T @ amplitudes))


def wigner_d(n_atoms: int, angle: float) -> np.ndarray:
    """Small-d rotation matrix <S,m'| exp(-i angle S_y) |S,m>.

    S_y equals the real tridiagonal S_x matrix conjugated by the diagonal
    gauge diag(i^k), so d = i^(r-c) * [U exp(-i angle m) U^T]_(r,c), which is
    real: entries take the cosine part for even r-c and the sine part for odd.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if not math.isfinite(angle):
        raise ValueError("angle must be finite")
    n = int(n_atoms)
    m_eig, u = _sx_eigensystem(n)
    cos_part = (u * np.cos(angle * m_eig)) @ u.T
    sin_part = (u * np.sin(angle * m_eig)) @ u.T
    k = np.arange(n + 1)
    p = np.subtract.outer(k, k) % 4
    re_mask = np.choose(p, [1.0, 0.0, -1.0, 0.0])
    im_mask = np.choose(p, [0.0, 1.0, 0.0, -1.0])
    return re_mask * cos_part + im_mask * sin_part


def apply_rotation(state: DickeState, pulse: PulseSpec) -> DickeState:
    """Rotate by exp(-i * angle * S_axis).

    z rotations are diagonal phases.  x rotations go through the S_x
    eigenbasis; y rotations conjugate an x rotation with exact quarter-turn
    z phases, exp(-i a S_y) = exp(-i pi/2 S_z) exp(-i a S_x) exp(+i pi/2 S_z).
    """
    if pulse.angle == 0.0:
        return state
    n = state.n_atoms
    m = state.m_values
    if pulse.axis == "z":
        return DickeState(n, state.amplitudes * np.exp(-1j * pulse.angle * m))
    if pulse.axis == "x":
        return DickeState(n, _rotate_x(state.amplitudes, n, pulse.angle))
    quarter = np.exp(0.5j * math.pi * m)
    amps = quarter.conj() * _rotate_x(quarter * state.amplitudes, n, pulse.angle)
    return DickeState(n, amps)


def _raising_sums(state: DickeState) -> dict:
    """Raw ladder sums reused by the expectation kernels."""
    c = state.amplitudes
    j = state.spin
    m = state.m_values
    f = _ladder_strengths(state.n_atoms)  # f[i]: |i> -> |i-1| strength of S_+
    pops = np.abs(c) ** 2
    up1 = np.conj(c[:-1]) * c[1:]  # pairs (i-1, i)
    up2 = np.conj(c[:-2]) * c[2:]  # pairs (i-2, i); empty for n = 1
    ff = f[2:] * f[1:-1]
    a2 = j * (j + 1.0) - m * (m - 1.0)  # eigenvalues of S_+ S_-
    return {
        "sp": np.sum(up1 * f[1:]),
        "sp_sz": np.sum(up1 * f[1:] * m[1:]),
        "sp_sz2": np.sum(up1 * f[1:] * m[1:] ** 2),
        "sm": np.sum(np.conj(c[1:]) * c[:-1] * f[1:]),
        "sz": np.sum(pops * m),
        "sz2": np.sum(pops * m * m),
        "sp_sm": np.sum(pops * a2),
        "sm_sp": np.sum(pops * (j * (j + 1.0) - m * (m + 1.0))),
        "sp2": np.sum(up2 * ff),
        "sp2_sz": np.sum(up2 * ff * m[2:]),
        "sm2": np.sum(np.conj(c[2:]) * c[:-2] * ff),
        "sp2_sm": np.sum(up1 * a2[1:] * f[1:]),
    }


def expectation(state: DickeState, op: SpinOp | str) -> complex | float:
    """Exact expectation value of a labelled spin operator.

    Hermitian labels are returned as floats after checking that the residual
    imaginary part is below 1e-12 (relative to the operator scale S**order);
    a larger residue indicates an operator-kernel bug and raises.
    """
    op = SpinOp(op)
    s = _raising_sums(state)
    if op is SpinOp.SP:
        return complex(s["sp"])
    if op is SpinOp.SM:
        return complex(s["sm"])
    if op is SpinOp.SP_SZ:
        return complex(s["sp_sz"])
    if op is SpinOp.SP_SZ2:
        return complex(s["sp_sz2"])
    if op is SpinOp.SP2_SZ:
        return complex(s["sp2_sz"])
    if op is SpinOp.SP2_SM:
        return complex(s["sp2_sm"])
    if op is SpinOp.SX:
        value = 0.5 * (s["sp"] + s["sm"])
    elif op is SpinOp.SY:
        value = -0.5j * (s["sp"] - s["sm"])
    elif op is SpinOp.SZ:
        value = s["sz"]
    elif op is SpinOp.SZ2:
        value = s["sz2"]
    elif op is SpinOp.SP_SM:
        value = s["sp_sm"]
    elif op is SpinOp.SX2:
        value = 0.25 * (s["sp2"] + s["sm2"] + s["sp_sm"] + s["sm_sp"])
    elif op is SpinOp.SY2:
        value = 0.25 * (-s["sp2"] - s["sm2"] + s["sp_sm"] + s["sm_sp"])
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unhandled operator {op}")
    value = complex(value)
    scale = max(1.0, state.spin ** _OP_ORDER[op])
    if abs(value.imag) > _HERMITIAN_IMAG_TOL * scale:
        raise DegenerateStateError(
            f"Hermitian operator {op.value} produced imaginary part "
            f"{value.imag:.3e} (scale {scale:.3e})"
        )
    return value.real


def wineland_xi2(state: DickeState) -> float:
    """Wineland squeezing parameter xi^2 = N Var(S_z) / (<S_x>^2 + <S_y>^2).

    The variance axis is fixed to z; orient the state with a pre-rotation if
    the squeezed quadrature lies elsewhere.
    """
    sp = complex(expectation(state, SpinOp.SP))
    sx, sy = sp.real, sp.imag
    denom = sx * sx + sy * sy
    if denom < 1e-20 * state.spin**2:
        raise DegenerateStateError(
            f"mean spin length {math.sqrt(denom):.3e} too small for xi^2"
        )
    sz = expectation(state, SpinOp.SZ)
    sz2 = expectation(state, SpinOp.SZ2)
    return state.n_atoms * (sz2 - sz * sz) / denom


def husimi_grid(state: DickeState, n_polar: int, n_azimuth: int) -> HusimiGrid:
    """Sample Q(theta, phi) = (2S+1)/(4 pi) |<CSS(theta, phi)|psi>|^2.

    Polar samples span [0, pi] inclusive; azimuth samples span [0, 2 pi)
    uniformly, so the trapezoid/riemann quadrature of Q over the sphere
    approaches 1 for fine grids.
    """
    if n_polar < 2 or n_azimuth < 2:
        raise ValueError("grid sizes must be >= 2")
    n = state.n_atoms
    k = np.arange(n + 1)
    polar = np.linspace(0.0, math.pi, n_polar)
    azimuth = np.linspace(0.0, 2.0 * math.pi, n_azimuth, endpoint=False)
    # <CSS(theta,phi)| picks up exp(-i k phi); precompute the phase matrix
    phases = np.exp(-1j * np.outer(azimuth, k))
    values = np.empty((n_polar, n_azimuth))
    prefactor = (n + 1.0) / (4.0 * math.pi)
    for i, th in enumerate(polar):
        css = _css_amplitudes(n, th)  # real
        overlap = phases @ (css * state.amplitudes)
        values[i] = prefactor * np.abs(overlap) ** 2
    return HusimiGrid(polar=polar, azimuth=azimuth, values=values)


def operator_matrix(n_atoms: int, op: SpinOp | str) -> np.ndarray:
    """Dense (N+1)x(N+1) matrix of a labelled operator, for small-N validation.

    Guarded to N <= 64: this backend exists for tests and cross-checks, not
    production evolution.
    """
    if n_atoms > _DENSE_MAX_ATOMS:
        raise ValueError(
            f"dense matrices limited to n_atoms <= {_DENSE_MAX_ATOMS}, got {n_atoms}"
        )
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    op = SpinOp(op)
    n = n_atoms
    f = _ladder_strengths(n)
    sp = np.zeros((n + 1, n + 1), dtype=complex)
    for i in range(1, n + 1):
        sp[i - 1, i] = f[i]
    sm = sp.conj().T
    sz = np.diag((0.5 * n - np.arange(n + 1)).astype(complex))
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    table = {
        SpinOp.SX: lambda: sx,
        SpinOp.SY: lambda: sy,
        SpinOp.SZ: lambda: sz,
        SpinOp.SX2: lambda: sx @ sx,
        SpinOp.SY2: lambda: sy @ sy,
        SpinOp.SZ2: lambda: sz @ sz,
        SpinOp.SP: lambda: sp,
        SpinOp.SM: lambda: sm,
        SpinOp.SP_SZ: lambda: sp @ sz,
        SpinOp.SP2_SZ: lambda: sp @ sp @ sz,
        SpinOp.SP_SZ2: lambda: sp @ sz @ sz,
        SpinOp.SP_SM: lambda: sp @ sm,
        SpinOp.SP2_SM: lambda: sp @ sp @ sm,
    }
    return table[op]()
