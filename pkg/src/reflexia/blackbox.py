"""Opaque reflexion maps on a chart of R^n."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import check_random_state, check_vector
from .exceptions import AxiomViolation, OutOfChartDomain


def sample_ball(rng, n_points, dim, radius, center=None):
    """Uniform samples from the open ball of the given radius."""
    d = rng.normal(size=(n_points, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(n_points, 1)) ** (1.0 / dim)
    pts = d * r
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts


@dataclass(frozen=True, eq=False)
class BlackBoxReflexion:
    """``S(x, y) = S_x y`` for ``||x||, ||y|| < domain_radius``.

    ``func`` receives two arrays of shape ``(B, dim)`` and returns ``(B, dim)``;
    rows it cannot evaluate come back as NaN.  The callable must be safe for
    concurrent read-only use.
    """

    dim: int
    domain_radius: float
    func: Callable
    tol: float = 1e-8
    label: str = "black box"

    def in_domain(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x, axis=-1) < self.domain_radius

    def evaluate(self, x, y):
        """Broadcasting evaluation; out-of-domain entries give NaN rows."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        shape = x.shape
        if shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}")
        xf = x.reshape(-1, self.dim)
        yf = y.reshape(-1, self.dim)
        out = np.full(xf.shape, np.nan)
        ok = self.in_domain(xf) & self.in_domain(yf)
        ok &= np.all(np.isfinite(xf), axis=1) & np.all(np.isfinite(yf), axis=1)
        if np.any(ok):
            out[ok] = self.func(xf[ok], yf[ok])
        return out.reshape(shape)

    def __call__(self, x, y):
        x = check_vector(x, self.dim, "x")
        y = check_vector(y, self.dim, "y")
        if not (np.all(self.in_domain(x)) and np.all(self.in_domain(y))):
            raise OutOfChartDomain(f"point outside the domain radius {self.domain_radius}")
        out = self.evaluate(x, y)
        if not np.all(np.isfinite(out)):
            raise OutOfChartDomain("reflexion could not be evaluated")
        return out

    def sanity_gate(self, n_samples=20, seed=0, radius=None):
        """A1/A2 check on random samples; raises :class:`AxiomViolation`."""
        rng = check_random_state(seed)
        r = self.domain_radius / 3 if radius is None else radius
        x = sample_ball(rng, n_samples, self.dim, r)
        y = sample_ball(rng, n_samples, self.dim, r)
        a1 = np.linalg.norm(self.evaluate(x, x) - x, axis=1)
        a2 = np.linalg.norm(self.evaluate(x, self.evaluate(x, y)) - y, axis=1)
        res = {"A1": float(np.nanmax(a1, initial=0.0)),
               "A2": float(np.nanmax(a2, initial=0.0)),
               "skipped": int(np.sum(~np.isfinite(a1) | ~np.isfinite(a2)))}
        if res["A1"] > self.tol or res["A2"] > self.tol:
            raise AxiomViolation(f"{self.label} fails the A1/A2 gate: {res}")
        if res["skipped"] == n_samples:
            raise AxiomViolation(f"{self.label}: no gate sample could be evaluated")
        return res


def flat_product(bb, flat_dims=1):
    """Append ``flat_dims`` coordinates on which every reflexion acts as the
    identity: ``S((x, a), (y, b)) = (S_x y, b)``."""
    n = bb.dim

    def func(x, y):
        head = bb.evaluate(x[:, :n], y[:, :n])
        return np.concatenate([head, y[:, n:]], axis=1)

    return BlackBoxReflexion(n + flat_dims, bb.domain_radius, func, bb.tol,
                             f"{bb.label} x R^{flat_dims}")


def trivial_reflexion(dim, domain_radius=1.0):
    """``S_x y = y``: satisfies A1-A3 with TS_x = I."""
    return BlackBoxReflexion(dim, domain_radius, lambda x, y: y.copy(), label="trivial")


def euclidean_reflexion(dim, domain_radius=1.0):
    """Point reflexion of flat space, ``S_x y = 2x - y``."""
    return BlackBoxReflexion(dim, domain_radius, lambda x, y: 2 * x - y, label="euclidean")
