"""Pointwise Riemann solvers.

Each solver is a pure function from the states of two adjacent cells (plus
material data or equation parameters) to waves, speeds, and the left/right
fluctuations they induce.  Nothing here knows about grids, sweeps, or
threads: callers may invoke a solver on a single interface (inputs of shape
``(num_eqn,)``) or on any batch of interfaces at once (``(num_eqn, ...)``
with trailing batch axes), and every output element depends only on the
matching input elements, so results are bitwise identical however the batch
is carved up.

State conventions:
  advection       q = (tracer,)
  acoustics       q = (pressure, x-velocity, y-velocity)
  gas dynamics    q = (rho, x-momentum, y-momentum, total energy)

Fluctuations follow the wave-propagation convention: with waves W_p and
speeds s_p, amdq = sum over s_p < 0 of s_p * W_p (what leaves through the
left cell) and apdq = sum over s_p > 0 (what enters the right cell).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

# densities and pressures must strictly exceed this; there is no
# positivity-preserving repair, inadmissible inputs are an error
ADMISSIBILITY_FLOOR = 1e-300


class Direction(enum.Enum):
    """Which velocity/momentum component is normal to the interface."""

    X = "x"
    Y = "y"


class KernelError(ValueError):
    """Inadmissible or non-finite kernel input.

    `side` is "left" or "right" (None for parameter problems); `element`
    is the batch multi-index of the first offending interface, () for a
    single-interface call.
    """

    def __init__(self, message: str, side: str | None = None, element: tuple | None = None):
        super().__init__(message)
        self.side = side
        self.element = element


@dataclass(frozen=True)
class RiemannResult:
    """Solution of one batch of Riemann problems.

    waves   (num_waves, num_eqn) + batch  jump carried by each wave
    speeds  (num_waves,) + batch          signal speeds
    amdq    (num_eqn,) + batch            left-going fluctuation
    apdq    (num_eqn,) + batch            right-going fluctuation
    """

    waves: np.ndarray
    speeds: np.ndarray
    amdq: np.ndarray
    apdq: np.ndarray


@dataclass(frozen=True)
class KernelDescriptor:
    """Static metadata for one kernel family.

    arithmetic_intensity is the hand-counted flops/byte figure carried as
    metadata only; it is not a measured property of this implementation.
    """

    name: str
    num_eqn: int
    num_waves: int
    num_aux: int
    arithmetic_intensity: Fraction


DESCRIPTORS: dict[str, KernelDescriptor] = {
    "advection": KernelDescriptor("advection", 1, 1, 0, Fraction(1, 3)),
    "acoustics-const": KernelDescriptor("acoustics-const", 3, 2, 0, Fraction(4, 5)),
    "acoustics-var": KernelDescriptor("acoustics-var", 3, 2, 2, Fraction(1)),
    "euler": KernelDescriptor("euler", 4, 3, 0, Fraction(1)),
}

KERNEL_NAMES = tuple(DESCRIPTORS)


@dataclass(frozen=True)
class AcousticsParams:
    """Homogeneous acoustic medium: density and bulk modulus."""

    density: float
    bulk: float

    def __post_init__(self):
        if not (self.density > 0 and self.bulk > 0):
            raise ValueError(
                f"density and bulk modulus must be positive, got {self.density}, {self.bulk}"
            )

    @property
    def sound_speed(self) -> float:
        return math.sqrt(self.bulk / self.density)

    @property
    def impedance(self) -> float:
        return self.density * self.sound_speed


@dataclass(frozen=True)
class EulerParams:
    """Ideal-gas parameters."""

    gamma: float = 1.4

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")


def _first_bad(mask: np.ndarray) -> tuple:
    """Batch multi-index of the first True entry of a (ncomp,)+batch mask."""
    idx = np.argwhere(mask)[0]
    return tuple(int(k) for k in idx[1:])


def _check_states(ql: np.ndarray, qr: np.ndarray, num_eqn: int) -> tuple[np.ndarray, np.ndarray]:
    ql = np.asarray(ql, dtype=float)
    qr = np.asarray(qr, dtype=float)
    if ql.shape != qr.shape or ql.ndim < 1 or ql.shape[0] != num_eqn:
        raise ValueError(
            f"states must share a ({num_eqn}, ...) shape, got {ql.shape} and {qr.shape}"
        )
    for side, q in (("left", ql), ("right", qr)):
        bad = ~np.isfinite(q)
        if bad.any():
            raise KernelError(f"non-finite {side} state", side=side, element=_first_bad(bad))
    return ql, qr


def _check_positive(arr: np.ndarray, what: str, side: str):
    bad = ~(arr > ADMISSIBILITY_FLOOR)
    if bad.any():
        element = _first_bad(bad[np.newaxis])
        raise KernelError(f"nonpositive {what} on {side} side", side=side, element=element)


def _normal_slot(direction: Direction) -> int:
    return 1 if direction is Direction.X else 2


def rp_advection(direction: Direction, ql, qr, u: float, v: float) -> RiemannResult:
    """Scalar advection with constant velocity (u, v): pure upwinding.

    One wave W = qr - ql at speed u (X sweeps) or v (Y sweeps).
    """
    ql, qr = _check_states(ql, qr, 1)
    if not (math.isfinite(u) and math.isfinite(v)):
        raise KernelError(f"non-finite advection velocity ({u}, {v})")
    s = u if direction is Direction.X else v
    jump = qr - ql
    batch = jump.shape[1:]
    waves = jump[np.newaxis]
    speeds = np.full((1,) + batch, s)
    amdq = min(s, 0.0) * jump
    apdq = max(s, 0.0) * jump
    return RiemannResult(waves, speeds, amdq, apdq)


def rp_acoustics_const(direction: Direction, ql, qr, params: AcousticsParams) -> RiemannResult:
    """Constant-coefficient acoustics: two sound waves at speeds -c, +c.

    With jump components (dp, dn) in pressure and normal velocity and
    impedance Z, the wave strengths are

        a1 = (-dp + Z dn) / (2 Z),   a2 = (dp + Z dn) / (2 Z),

    carried by eigenvectors (-Z, 1, 0) and (Z, 1, 0) in (pressure, normal)
    slots.  The transverse velocity slot is untouched by both waves.
    """
    ql, qr = _check_states(ql, qr, 3)
    ni = _normal_slot(direction)
    z = params.impedance
    c = params.sound_speed

    dp = qr[0] - ql[0]
    dn = qr[ni] - ql[ni]
    a1 = (-dp + z * dn) / (2.0 * z)
    a2 = (dp + z * dn) / (2.0 * z)

    batch = dp.shape
    waves = np.zeros((2, 3) + batch)
    waves[0, 0] = -z * a1
    waves[0, ni] = a1
    waves[1, 0] = z * a2
    waves[1, ni] = a2
    speeds = np.empty((2,) + batch)
    speeds[0] = -c
    speeds[1] = c
    amdq = -c * waves[0]
    apdq = c * waves[1]
    return RiemannResult(waves, speeds, amdq, apdq)


def rp_acoustics_var(direction: Direction, ql, qr, auxl, auxr) -> RiemannResult:
    """Acoustics across a material jump: per-cell (rho, c) on each side.

    Impedances Z_l, Z_r weight the strengths

        a1 = (-dp + Z_r dn) / (Z_l + Z_r),  a2 = (dp + Z_l dn) / (Z_l + Z_r),

    the left-going wave travels at -c_l through eigenvector (-Z_l, 1, 0),
    the right-going at +c_r through (Z_r, 1, 0).  Reduces bitwise to the
    constant-coefficient solver when both sides carry the same material.
    """
    ql, qr = _check_states(ql, qr, 3)
    auxl = np.asarray(auxl, dtype=float)
    auxr = np.asarray(auxr, dtype=float)
    if auxl.shape != ql[:2].shape or auxr.shape != qr[:2].shape:
        raise ValueError(
            f"aux must have shape (2, ...) matching the states, got {auxl.shape}, {auxr.shape}"
        )
    ni = _normal_slot(direction)
    for side, aux in (("left", auxl), ("right", auxr)):
        _check_positive(aux[0], "density", side)
        _check_positive(aux[1], "sound speed", side)

    zl = auxl[0] * auxl[1]
    zr = auxr[0] * auxr[1]
    cl = auxl[1]
    cr = auxr[1]

    dp = qr[0] - ql[0]
    dn = qr[ni] - ql[ni]
    denom = zl + zr
    a1 = (-dp + zr * dn) / denom
    a2 = (dp + zl * dn) / denom

    batch = dp.shape
    waves = np.zeros((2, 3) + batch)
    waves[0, 0] = -zl * a1
    waves[0, ni] = a1
    waves[1, 0] = zr * a2
    waves[1, ni] = a2
    speeds = np.empty((2,) + batch)
    speeds[0] = -cl
    speeds[1] = cr
    amdq = -cl * waves[0]
    apdq = cr * waves[1]
    return RiemannResult(waves, speeds, amdq, apdq)


def rp_euler(direction: Direction, ql, qr, params: EulerParams) -> RiemannResult:
    """Ideal-gas dynamics via Roe linearization, three waves, no entropy fix.

    Speeds are (u_hat - c_hat, u_hat, u_hat + c_hat) from the sqrt-density
    weighted averages of velocity and specific enthalpy.  The middle wave
    carries the contact (density jump at constant pressure) together with
    the transverse-momentum jump.  Without an entropy fix, transonic
    rarefactions may be rendered as (entropy-violating) jumps; benchmarking
    kernel cost does not require shock admissibility.
    """
    ql, qr = _check_states(ql, qr, 4)
    gamma = params.gamma
    ni = _normal_slot(direction)
    ti = 3 - ni

    rho_l, rho_r = ql[0], qr[0]
    _check_positive(rho_l, "density", "left")
    _check_positive(rho_r, "density", "right")
    u_l, u_r = ql[ni] / rho_l, qr[ni] / rho_r
    v_l, v_r = ql[ti] / rho_l, qr[ti] / rho_r
    p_l = (gamma - 1.0) * (ql[3] - 0.5 * rho_l * (u_l * u_l + v_l * v_l))
    p_r = (gamma - 1.0) * (qr[3] - 0.5 * rho_r * (u_r * u_r + v_r * v_r))
    _check_positive(p_l, "pressure", "left")
    _check_positive(p_r, "pressure", "right")

    sq_l = np.sqrt(rho_l)
    sq_r = np.sqrt(rho_r)
    wsum = sq_l + sq_r
    u_hat = (sq_l * u_l + sq_r * u_r) / wsum
    v_hat = (sq_l * v_l + sq_r * v_r) / wsum
    h_hat = (sq_l * (ql[3] + p_l) / rho_l + sq_r * (qr[3] + p_r) / rho_r) / wsum
    kin_hat = 0.5 * (u_hat * u_hat + v_hat * v_hat)
    c2 = (gamma - 1.0) * (h_hat - kin_hat)
    bad = ~(c2 > 0.0)
    if bad.any():
        raise KernelError(
            "Roe-average sound speed is not real", element=_first_bad(bad[np.newaxis])
        )
    c_hat = np.sqrt(c2)

    d_rho = qr[0] - ql[0]
    d_mn = qr[ni] - ql[ni]
    d_mt = qr[ti] - ql[ti]
    d_e = qr[3] - ql[3]

    a_shear = d_mt - v_hat * d_rho
    a_mid = (gamma - 1.0) / c2 * ((h_hat - u_hat * u_hat) * d_rho + u_hat * d_mn
                                  - (d_e - a_shear * v_hat))
    span = (d_mn - u_hat * d_rho) / c_hat
    a_plus = 0.5 * (span + d_rho - a_mid)
    a_minus = d_rho - a_mid - a_plus

    batch = d_rho.shape
    waves = np.empty((3, 4) + batch)
    waves[0, 0] = a_minus
    waves[0, ni] = a_minus * (u_hat - c_hat)
    waves[0, ti] = a_minus * v_hat
    waves[0, 3] = a_minus * (h_hat - u_hat * c_hat)
    waves[1, 0] = a_mid
    waves[1, ni] = a_mid * u_hat
    waves[1, ti] = a_mid * v_hat + a_shear
    waves[1, 3] = a_mid * kin_hat + a_shear * v_hat
    waves[2, 0] = a_plus
    waves[2, ni] = a_plus * (u_hat + c_hat)
    waves[2, ti] = a_plus * v_hat
    waves[2, 3] = a_plus * (h_hat + u_hat * c_hat)

    speeds = np.empty((3,) + batch)
    speeds[0] = u_hat - c_hat
    speeds[1] = u_hat
    speeds[2] = u_hat + c_hat

    neg = np.minimum(speeds, 0.0)
    pos = np.maximum(speeds, 0.0)
    amdq = neg[0] * waves[0] + neg[1] * waves[1] + neg[2] * waves[2]
    apdq = pos[0] * waves[0] + pos[1] * waves[1] + pos[2] * waves[2]
    return RiemannResult(waves, speeds, amdq, apdq)


def euler_flux(q, direction: Direction, params: EulerParams) -> np.ndarray:
    """Physical gas-dynamics flux through a plane normal to `direction`.

    For X: (rho u, rho u^2 + p, rho u v, u (E + p)); Y is the mirror image.
    Used as the independent oracle for the conservation (Roe) property.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim < 1 or q.shape[0] != 4:
        raise ValueError(f"gas state must have 4 components, got shape {q.shape}")
    bad = ~np.isfinite(q)
    if bad.any():
        raise KernelError("non-finite state", element=_first_bad(bad))
    gamma = params.gamma
    ni = _normal_slot(direction)
    ti = 3 - ni

    rho = q[0]
    _check_positive(rho, "density", "input")
    un = q[ni] / rho
    kin = 0.5 * (q[ni] * q[ni] + q[ti] * q[ti]) / rho
    p = (gamma - 1.0) * (q[3] - kin)
    _check_positive(p, "pressure", "input")

    out = np.empty_like(q)
    out[0] = q[ni]
    out[ni] = q[ni] * un + p
    out[ti] = q[ti] * un
    out[3] = un * (q[3] + p)
    return out


class Kernel:
    """A kernel descriptor bound to its parameters, ready for sweeping.

    `solve(direction, ql, qr, auxl, auxr)` applies the underlying pointwise
    solver; aux arguments are ignored by kernels that take none.
    """

    def __init__(self, descriptor: KernelDescriptor, params: dict,
                 solve: Callable[..., RiemannResult]):
        self.descriptor = descriptor
        self.params = dict(params)
        self.solve = solve

    @property
    def name(self) -> str:
        return self.descriptor.name

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"Kernel({self.descriptor.name}, {args})"


def make_kernel(name: str, **params) -> Kernel:
    """Bind one of the built-in kernels to concrete parameters.

    advection(u, v), acoustics-const(rho, bulk), acoustics-var() which
    reads per-cell (rho, c) from the aux field, euler(gamma=1.4).
    """
    if name == "advection":
        u = float(params.pop("u"))
        v = float(params.pop("v"))
        _reject_extra(name, params)

        def solve(direction, ql, qr, auxl=None, auxr=None):
            return rp_advection(direction, ql, qr, u, v)

        return Kernel(DESCRIPTORS[name], {"u": u, "v": v}, solve)

    if name == "acoustics-const":
        p = AcousticsParams(density=float(params.pop("rho")), bulk=float(params.pop("bulk")))
        _reject_extra(name, params)

        def solve(direction, ql, qr, auxl=None, auxr=None):
            return rp_acoustics_const(direction, ql, qr, p)

        return Kernel(DESCRIPTORS[name], {"rho": p.density, "bulk": p.bulk}, solve)

    if name == "acoustics-var":
        _reject_extra(name, params)

        def solve(direction, ql, qr, auxl=None, auxr=None):
            if auxl is None or auxr is None:
                raise ValueError("acoustics-var requires aux data on both sides")
            return rp_acoustics_var(direction, ql, qr, auxl, auxr)

        return Kernel(DESCRIPTORS[name], {}, solve)

    if name == "euler":
        p = EulerParams(gamma=float(params.pop("gamma", 1.4)))
        _reject_extra(name, params)

        def solve(direction, ql, qr, auxl=None, auxr=None):
            return rp_euler(direction, ql, qr, p)

        return Kernel(DESCRIPTORS[name], {"gamma": p.gamma}, solve)

    raise ValueError(f"unknown kernel {name!r}; available: {', '.join(KERNEL_NAMES)}")


def _reject_extra(name: str, params: dict):
    if params:
        raise ValueError(f"unexpected parameters for {name}: {sorted(params)}")
