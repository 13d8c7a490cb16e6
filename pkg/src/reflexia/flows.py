"""Fixed-step RK4 flows of sampled vector fields and the reflexion-flow
identities they are expected to satisfy."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive, check_vector
from .exceptions import LeftDomain, ParityViolated
from .reconstruction import parity_residual

FLOW_STEP = 1e-3
PARITY_TOL = 1e-4


@dataclass
class FlowTrajectory:
    label: str
    start: np.ndarray
    times: np.ndarray
    points: np.ndarray          # (len(times), ..., n)
    step: float
    valid: bool = True
    reversibility: float = float("nan")

    @property
    def end(self):
        return self.points[-1]


def _rk4_step(F, y, h):
    k1 = F(y)
    k2 = F(y + 0.5 * h * k1)
    k3 = F(y + 0.5 * h * k2)
    k4 = F(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _inside(y, radius):
    if not np.all(np.isfinite(y)):
        return False
    return radius is None or bool(np.all(np.linalg.norm(y, axis=-1) < radius))


def integrate(F, y0, t_end, steps, domain_radius=None, check_reversibility=True):
    """Classical fourth-order Runge-Kutta with ``steps`` equal steps.

    ``y0`` may be a batch ``(..., n)``.  A trajectory that leaves the domain
    (or hits a point the field cannot evaluate) is returned truncated with
    ``valid=False``.  The reversibility figure is the distance between
    ``y0`` and the result of integrating the end point back to time 0.
    """
    y0 = check_vector(y0, name="y0")
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    radius = domain_radius if domain_radius is not None else F.domain_radius
    h = float(t_end) / steps
    pts = [y0]
    y = y0
    for _ in range(steps):
        y = _rk4_step(F, y, h)
        if not _inside(y, radius):
            times = h * np.arange(len(pts))
            return FlowTrajectory(F.label, y0, times, np.array(pts), abs(h), valid=False)
        pts.append(y)
    traj = FlowTrajectory(F.label, y0, h * np.arange(steps + 1), np.array(pts), abs(h))
    if check_reversibility:
        back = y
        for _ in range(steps):
            back = _rk4_step(F, back, -h)
        traj.reversibility = float(np.max(np.linalg.norm(back - y0, axis=-1)))
    return traj


def flow(F, y0, t, step=FLOW_STEP, domain_radius=None):
    """Point(s) ``phi_t(y0)``; raises :class:`LeftDomain` on exit."""
    if t == 0:
        return np.array(y0, dtype=float)
    steps = max(1, int(round(abs(t) / step)))
    traj = integrate(F, y0, t, steps, domain_radius, check_reversibility=False)
    if not traj.valid:
        raise LeftDomain(f"flow of {F.label} left the domain before t={t}", traj)
    return traj.end


def flow_at_times(F, y0, times, step=FLOW_STEP, domain_radius=None):
    """``{t: phi_t(y0)}`` from one shared trajectory when the times are
    multiples of ``step``; other times are integrated separately."""
    times = [float(t) for t in times]
    out = {}
    grid = [t for t in times if t >= 0 and abs(t / step - round(t / step)) < 1e-9]
    if grid and max(grid) > 0:
        tmax = max(grid)
        n = int(round(tmax / step))
        traj = integrate(F, y0, tmax, n, domain_radius, check_reversibility=False)
        if not traj.valid:
            raise LeftDomain(f"flow of {F.label} left the domain", traj)
        for t in grid:
            out[t] = traj.points[int(round(t / step))]
    for t in times:
        if t not in out:
            out[t] = flow(F, y0, t, step, domain_radius)
    return out


@dataclass
class FlowReport:
    field_label: str
    times: list
    residuals: list
    step: float
    n_probes: int
    parity_residual: float
    extra: dict = field(default_factory=dict)

    @property
    def max_residual(self):
        r = [v for v in self.residuals if np.isfinite(v)]
        return max(r) if r else float("nan")

    def as_dict(self):
        return {"field": self.field_label, "times": list(self.times),
                "residuals": list(self.residuals), "max_residual": self.max_residual,
                "step": self.step, "n_probes": self.n_probes,
                "parity_residual": self.parity_residual, **self.extra}


def verify_flow_identity(S, x, F, times, probes, step=FLOW_STEP, parity_tol=PARITY_TOL,
                         fd_step=1e-5):
    """Compare ``S_{phi_t(x)} S_x y`` with ``phi_{2t}(y)`` on probes.

    ``F`` must be odd under ``(S_x)^*``; otherwise :class:`ParityViolated`.
    """
    x = check_vector(x, S.dim, "x")
    probes = np.atleast_2d(check_vector(probes, S.dim, "probes"))
    check_positive(step, "step")
    par = parity_residual(S, x, F, probes, -1, fd_step)
    if not par <= parity_tol:
        raise ParityViolated(f"(S_x)^*F + F = {par:.2e} exceeds {parity_tol:.0e}")
    times = [float(t) for t in times]
    base = flow_at_times(F, x, times, step, S.domain_radius)
    doubled = flow_at_times(F, probes, [2 * t for t in times], step, S.domain_radius)
    sx = S.evaluate(x, probes)
    res = []
    for t in times:
        lhs = S.evaluate(base[t], sx)
        diff = np.linalg.norm(lhs - doubled[2 * t], axis=1)
        if not np.all(np.isfinite(diff)):
            raise LeftDomain(f"S_(phi_t x) S_x y not evaluable at t={t}")
        res.append(float(diff.max()))
    return FlowReport(F.label, times, res, step, len(probes), par)


def automorphism_flow_check(S, F, t, p, q, step=FLOW_STEP):
    """max over pairs of ``||phi_t(S_p q) - S_{phi_t p} phi_t q||``."""
    p = np.atleast_2d(check_vector(p, S.dim, "p"))
    q = np.atleast_2d(check_vector(q, S.dim, "q"))
    spq = S.evaluate(p, q)
    moved = flow(F, np.concatenate([p, q, spq]), t, step, S.domain_radius)
    k = len(p)
    fp, fq, fspq = moved[:k], moved[k:2 * k], moved[2 * k:]
    diff = np.linalg.norm(fspq - S.evaluate(fp, fq), axis=1)
    if not np.all(np.isfinite(diff)):
        raise LeftDomain("flowed pairs left the reflexion domain")
    return float(diff.max())


def composition_residual(F, y, s, t, step=FLOW_STEP, domain_radius=None):
    """``||phi_s(phi_t(y)) - phi_{s+t}(y)||`` (max over probes)."""
    a = flow(F, flow(F, y, t, step, domain_radius), s, step, domain_radius)
    b = flow(F, y, s + t, step, domain_radius)
    return float(np.max(np.linalg.norm(np.atleast_2d(a - b), axis=-1)))


def generator_residual(S, x, F, probes, dt=1e-4, step=1e-5):
    """Compare ``d/dt|0 S_{phi_t(x)} S_x y`` with ``2 F(y)``.

    The derivative is a central difference over the flow through x.
    """
    x = check_vector(x, S.dim, "x")
    probes = np.atleast_2d(probes)
    sx = S.evaluate(x, probes)
    fwd = S.evaluate(flow(F, x, dt, step), sx)
    bwd = S.evaluate(flow(F, x, -dt, step), sx)
    deriv = (fwd - bwd) / (2 * dt)
    return float(np.max(np.linalg.norm(deriv - 2 * F(probes), axis=1)))
