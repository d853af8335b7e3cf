"""Force decomposition and acceleration models for the RexROV.

Two models share one parameter set:

- ``accel_full``: the six-axis model used as simulator ground truth.
- ``accel_reduced``: the surge/sway/heave/yaw model used by the filter, valid
  when roll and pitch (and their rates) are zero.

Sign conventions
- Added-mass coefficients (Xdu ... Ndr) are stored as positive magnitudes; the
  effective mass on each axis is ``m + Xdu`` etc.
- The added-mass Coriolis vector keeps those same positive coefficients in its
  printed form, so the equations of motion read

      (M_RB + M_A) dnu = tau + damping(nu) - C_RB(nu) nu - C_A(nu) nu - g(eta)

- Linear/quadratic damping coefficients are negative; ``damping`` returns the
  resulting dissipative force, which opposes each velocity component.
"""

import math
from dataclasses import asdict, dataclass, fields
from typing import List, NamedTuple, Sequence

import numpy as np


class Wrench6(NamedTuple):
    """Body-frame force [N] and moment [N m]."""

    Tx: float = 0.0
    Ty: float = 0.0
    Tz: float = 0.0
    Tphi: float = 0.0
    Ttheta: float = 0.0
    Tpsi: float = 0.0


@dataclass(frozen=True)
class VehicleParams:
    """RexROV physical parameters and hydrodynamic coefficients.

    Defaults are the published RexROV values. ``W`` defaults to ``m * g`` and
    ``Ixx``/``Iyy`` (not published) default to ``Izz``.
    """

    m: float = 1863.0
    V: float = 1.838
    B: float = 18393.9972
    W: float = float("nan")
    g: float = 9.81
    rho: float = 1000.0
    Ixx: float = float("nan")
    Iyy: float = float("nan")
    Izz: float = 691.23
    zB: float = 0.0
    # added mass / inertia magnitudes
    Xdu: float = 779.79
    Ydv: float = 1222.0
    Zdw: float = 3659.9
    Kdp: float = 534.9
    Mdq: float = 842.69
    Ndr: float = 224.32
    # linear damping
    Xu: float = -74.82
    Yv: float = -69.48
    Zw: float = -782.4
    Kp: float = -268.8
    Mq: float = -309.77
    Nr: float = -105.0
    # quadratic damping
    Xuu: float = -748.22
    Yvv: float = -992.53
    Zww: float = -1821.01
    Kpp: float = -672.0
    Mqq: float = -774.44
    Nrr: float = -523.27

    def __post_init__(self):
        if math.isnan(self.W):
            object.__setattr__(self, "W", self.m * self.g)
        if math.isnan(self.Ixx):
            object.__setattr__(self, "Ixx", self.Izz)
        if math.isnan(self.Iyy):
            object.__setattr__(self, "Iyy", self.Izz)

    @property
    def added_mass(self) -> np.ndarray:
        return np.array([self.Xdu, self.Ydv, self.Zdw, self.Kdp, self.Mdq, self.Ndr])

    @property
    def linear_damping(self) -> np.ndarray:
        return np.array([self.Xu, self.Yv, self.Zw, self.Kp, self.Mq, self.Nr])

    @property
    def quadratic_damping(self) -> np.ndarray:
        return np.array([self.Xuu, self.Yvv, self.Zww, self.Kpp, self.Mqq, self.Nrr])

    @property
    def rigid_body_mass(self) -> np.ndarray:
        return np.array([self.m, self.m, self.m, self.Ixx, self.Iyy, self.Izz])

    @property
    def effective_mass(self) -> np.ndarray:
        """Diagonal of M_RB + M_A."""
        return self.rigid_body_mass + self.added_mass

    def violations(self) -> List[str]:
        """Every violated parameter invariant, as readable messages."""
        out = []
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                out.append(f"{f.name} must be finite")
        if self.m <= 0:
            out.append("m must be > 0")
        names = ["m+Xdu", "m+Ydv", "m+Zdw", "Ixx+Kdp", "Iyy+Mdq", "Izz+Ndr"]
        for name, val in zip(names, self.effective_mass):
            if not val > 0:
                out.append(f"effective mass {name} must be > 0 (got {val})")
        for name in ("Xu", "Yv", "Zw", "Kp", "Mq", "Nr", "Xuu", "Yvv", "Zww", "Kpp", "Mqq", "Nrr"):
            if getattr(self, name) > 0:
                out.append(f"damping coefficient {name} must be <= 0")
        if self.B < 0:
            out.append("B must be >= 0")
        if self.W < 0:
            out.append("W must be >= 0")
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def coriolis_rb(vel: Sequence[float], params: VehicleParams) -> np.ndarray:
    """Rigid-body Coriolis-centripetal vector ``C_RB(nu) nu`` (CG at origin)."""
    u, v, w, p, q, r = (float(a) for a in vel)
    m = params.m
    return np.array(
        [
            m * (q * w - r * v),
            m * (r * u - p * w),
            m * (p * v - q * u),
            q * r * (params.Izz - params.Iyy),
            r * p * (params.Ixx - params.Izz),
            q * p * (params.Iyy - params.Ixx),
        ]
    )


def coriolis_added(vel: Sequence[float], params: VehicleParams) -> np.ndarray:
    """Added-mass Coriolis-centripetal vector ``C_A(nu) nu``."""
    u, v, w, p, q, r = (float(a) for a in vel)
    Xdu, Ydv, Zdw = params.Xdu, params.Ydv, params.Zdw
    Kdp, Mdq, Ndr = params.Kdp, params.Mdq, params.Ndr
    return np.array(
        [
            Ydv * v * r - Zdw * w * q,
            Zdw * w * p - Xdu * u * r,
            Xdu * u * q - Ydv * v * p,
            (Ydv - Zdw) * v * w + (Mdq - Ndr) * q * r,
            (Zdw - Xdu) * u * w + (Ndr - Kdp) * p * r,
            (Xdu - Ydv) * u * v + (Kdp - Mdq) * p * q,
        ]
    )


def damping(vel: Sequence[float], params: VehicleParams) -> np.ndarray:
    """Dissipative hydrodynamic force ``(lin_i + quad_i |nu_i|) nu_i`` per axis."""
    nu = np.asarray(vel, dtype=float)
    return (params.linear_damping + params.quadratic_damping * np.abs(nu)) * nu


def hydrostatics(pose: Sequence[float], params: VehicleParams) -> np.ndarray:
    """Restoring vector ``g(eta)`` from weight and buoyancy.

    Only roll and pitch of ``pose`` matter.
    """
    phi, theta = float(pose[3]), float(pose[4])
    WB = params.W - params.B
    cth, sth = math.cos(theta), math.sin(theta)
    cphi, sphi = math.cos(phi), math.sin(phi)
    return np.array(
        [
            WB * sth,
            -WB * cth * sphi,
            -WB * cth * cphi,
            -params.zB * params.B * cth * sphi,
            -params.zB * params.B * sth,
            0.0,
        ]
    )


def accel_full(
    vel: Sequence[float], pose: Sequence[float], tau: Sequence[float], params: VehicleParams
) -> np.ndarray:
    """Six-axis body acceleration (du, dv, dw, dp, dq, dr).

    ``tau`` is a body wrench ordered (Tx, Ty, Tz, Tphi, Ttheta, Tpsi).
    """
    nu = np.asarray(vel, dtype=float)
    net = (
        np.asarray(tau, dtype=float)
        + damping(nu, params)
        - coriolis_rb(nu, params)
        - coriolis_added(nu, params)
        - hydrostatics(pose, params)
    )
    return net / params.effective_mass


def accel_reduced(vel: Sequence[float], tau: Sequence[float], params: VehicleParams) -> np.ndarray:
    """Surge, sway, heave and yaw acceleration (du, dv, dw, dr) of the 4-DoF model.

    ``vel`` is either (u, v, w, r) or a full (u, v, w, p, q, r) vector, in
    which case p and q are ignored. Only Tx, Ty, Tz and Tpsi of ``tau`` are used.
    """
    if len(vel) == 4:
        u, v, w, r = (float(a) for a in vel)
    else:
        u, v, w, _, _, r = (float(a) for a in vel)
    if len(tau) == 4:
        Tx, Ty, Tz, Tpsi = (float(a) for a in tau)
    else:
        Tx, Ty, Tz, _, _, Tpsi = (float(a) for a in tau)
    P = params
    du = ((P.Xu + P.Xuu * abs(u)) * u + P.m * r * v - P.Ydv * r * v + Tx) / (P.m + P.Xdu)
    dv = ((P.Yv + P.Yvv * abs(v)) * v - P.m * r * u + P.Xdu * r * u + Ty) / (P.m + P.Ydv)
    dw = ((P.Zw + P.Zww * abs(w)) * w - (P.B - P.W) + Tz) / (P.m + P.Zdw)
    dr = ((P.Nr + P.Nrr * abs(r)) * r + (P.Ydv - P.Xdu) * u * v + Tpsi) / (P.Izz + P.Ndr)
    return np.array([du, dv, dw, dr])


def kinetic_energy(vel: Sequence[float], params: VehicleParams) -> float:
    """``0.5 nu^T (M_RB + M_A) nu``."""
    nu = np.asarray(vel, dtype=float)
    return 0.5 * float(nu @ (params.effective_mass * nu))
