"""Time integration on the surface and on the moduli space.

Classical trajectories use the implicit midpoint rule (symplectic, second
order, time-symmetric); moduli trajectories use classical RK4 on the pair
(loop points, weight values), with the stage velocity given by the
Hamiltonian field of the induced observable realized as a normal
displacement field.  After every full RK4 step the weight is renormalized
to unit volume and the loop re-projected onto its integer level; both
corrections track the integrator's own local error and are logged.
"""

import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import NewtonDivergence
from .loops import HalfDensity, Loop, bs_defect, project_to_bs
from .moduli import ModuliPoint, _normal_displacement, omega_matrix
from .observables import evaluate_F, hamiltonian_field_H
from .surfaces import hamiltonian_vector_field as classical_field


@dataclass
class ClassicalTrajectory:
    times: np.ndarray
    points: np.ndarray
    values: np.ndarray

    def final(self):
        return self.points[-1]


def _implicit_midpoint_step(f, surface, p, h, tol, max_iter):
    """Solve p_new = p + h * X_f((p + p_new)/2) by Newton with FD Jacobian."""
    p = np.asarray(p, dtype=float)
    p_new = p + h * classical_field(f, surface, p)
    for _ in range(max_iter):
        mid = 0.5 * (p + p_new)
        res = p_new - p - h * classical_field(f, surface, mid)
        if np.max(np.abs(res)) < tol:
            return p_new
        eps = 1e-7
        jac = np.empty((2, 2))
        for j in range(2):
            dm = mid.copy()
            dm[j] += eps
            dp = mid.copy()
            dp[j] -= eps
            col = (classical_field(f, surface, dm) - classical_field(f, surface, dp)) / (2 * eps)
            jac[:, j] = -0.5 * h * col
        jac[0, 0] += 1.0
        jac[1, 1] += 1.0
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergence("singular Newton system in implicit midpoint") from exc
        if not np.all(np.isfinite(delta)) or np.max(np.abs(delta)) > 1e6:
            raise NewtonDivergence("implicit midpoint Newton step diverged")
        p_new = p_new + delta
    mid = 0.5 * (p + p_new)
    res = p_new - p - h * classical_field(f, surface, mid)
    if np.max(np.abs(res)) >= tol:
        raise NewtonDivergence(
            f"implicit midpoint failed to converge: residual {np.max(np.abs(res)):.3e}"
        )
    return p_new


def flow_classical(f, surface, p0, t_final, h, newton_tol=1e-13, max_newton=40):
    """Implicit-midpoint Hamiltonian flow of f from p0.

    Negative h integrates backwards.  Torus coordinates are kept on the lift
    internally (the fields are periodic) and wrapped in the output.
    """
    if h == 0:
        raise ValueError("step must be nonzero")
    steps = int(round(abs(t_final) / abs(h)))
    pts = np.empty((steps + 1, 2))
    pts[0] = np.asarray(p0, dtype=float)
    for i in range(steps):
        pts[i + 1] = _implicit_midpoint_step(f, surface, pts[i], h, newton_tol, max_newton)
    times = np.arange(steps + 1) * h
    out = surface.wrap(pts) if surface.kind == "torus" else pts
    vals = np.asarray(f(out[:, 0], out[:, 1]), dtype=float)
    return ClassicalTrajectory(times=times, points=out, values=vals)


@dataclass
class ModuliTrajectory:
    times: np.ndarray
    observable_values: np.ndarray
    volume_defects: np.ndarray
    bs_defects: np.ndarray
    checksums: list
    snapshots: list = field(default_factory=list)

    def final(self):
        return self.snapshots[-1][1] if self.snapshots else None


def _loop_checksum(points, theta):
    return zlib.crc32(points.tobytes() + theta.tobytes())


def _moduli_velocity(f, surface, points, theta_values, winding):
    """Stage velocity (d points/dt, d theta/dt) of the induced Hamiltonian flow."""
    loop = Loop(points, winding=winding)
    theta = HalfDensity(theta_values)
    p = ModuliPoint(surface, loop, theta, strict=False)
    h_field = hamiltonian_field_H(f, p, om=omega_matrix(p))
    return _normal_displacement(p, h_field.fvec), h_field.tvec


def flow_moduli(f, p0, t_final, h, snapshot_every=0):
    """RK4 flow of the induced observable F_f on the moduli space.

    Records per step: time, F_f, pre-renormalization volume defect,
    pre-projection level defect, and a CRC32 state checksum.  Snapshots of
    the full state are kept every ``snapshot_every`` steps when positive.
    """
    surface = p0.surface
    steps = int(round(t_final / h))
    pts = p0.loop.points.copy()
    th = p0.theta.values.copy()
    winding = p0.loop.winding

    times = np.arange(steps + 1) * h
    f_vals = np.empty(steps + 1)
    vol_defects = np.zeros(steps + 1)
    level_defects = np.zeros(steps + 1)
    checksums = []
    snapshots = []

    current = ModuliPoint(surface, Loop(pts, winding=winding), HalfDensity(th), strict=False)
    f_vals[0] = evaluate_F(f, current)
    checksums.append(_loop_checksum(pts, th))
    if snapshot_every > 0:
        snapshots.append((0.0, current))

    for i in range(steps):
        k1p, k1t = _moduli_velocity(f, surface, pts, th, winding)
        k2p, k2t = _moduli_velocity(f, surface, pts + 0.5 * h * k1p, th + 0.5 * h * k1t, winding)
        k3p, k3t = _moduli_velocity(f, surface, pts + 0.5 * h * k2p, th + 0.5 * h * k2t, winding)
        k4p, k4t = _moduli_velocity(f, surface, pts + h * k3p, th + h * k3t, winding)
        pts = pts + (h / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
        th = th + (h / 6.0) * (k1t + 2 * k2t + 2 * k3t + k4t)

        raw_theta = HalfDensity(th)
        vol_defects[i + 1] = abs(raw_theta.volume() - 1.0)
        raw_loop = Loop(pts, winding=winding)
        level_defects[i + 1] = abs(bs_defect(raw_loop, surface))
        projected = project_to_bs(raw_loop, surface)
        pts = projected.points.copy()
        th = raw_theta.normalized().values

        current = ModuliPoint(surface, Loop(pts, winding=winding), HalfDensity(th), strict=False)
        f_vals[i + 1] = evaluate_F(f, current)
        checksums.append(_loop_checksum(pts, th))
        if snapshot_every > 0 and (i + 1) % snapshot_every == 0:
            snapshots.append((times[i + 1], current))

    return ModuliTrajectory(
        times=times,
        observable_values=f_vals,
        volume_defects=vol_defects,
        bs_defects=level_defects,
        checksums=checksums,
        snapshots=snapshots,
    )
