"""Local reflexion space on a chart of G/K built from (g, k, h).

Chart coordinates ``x`` name the coset ``exp(sum_i x_i m_i) K`` where the
``m_i`` span a complement of k.  The reflexion is evaluated through

    S_{fK} gK = f h f^-1 g h^-1 K = exp(X) exp(-Ad(h)X) exp(Ad(h)Y) K,

which stays near the identity (``f h f^-1 g`` alone would sit next to h).
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_basis, check_positive, check_random_state, check_square, check_vector
from .blackbox import BlackBoxReflexion, sample_ball
from .exceptions import NotAutomorphism, NotInvolutive, OutOfChartDomain
from .lie import DEFAULT_TOL, Ad, mat_exp
from .linalg import numerical_rank, span_basis
from .symmetric import Involution, eigensplit


def _chart_complement(decomposition):
    """g^- followed by the orthogonal complement of k inside g^+."""
    k = decomposition.k_basis
    plus = decomposition.gplus_basis
    if k.shape[0]:
        plus = plus - (plus @ k.T) @ k
    rest = span_basis(plus, 1e-8, 1.0) if plus.shape[0] else plus
    return np.vstack([decomposition.gminus_basis, rest])


class HomogeneousReflexionModel:
    """Reflexion map of the symmetric pair (g, k, h) on a single chart.

    Parameters
    ----------
    spec : LieAlgebraSpec
        Must carry a matrix basis.
    involution : Involution
        Nominal involution; fixes g^+, g^- and hence the chart complement.
    k_basis : array-like, shape (dim_k, dim)
        Isotropy subalgebra.
    h_matrix : array-like, optional
        Group element whose Ad drives the reflexion.  Defaults to
        ``involution.h_matrix`` and, failing that, the reflexion uses
        ``involution.sigma`` directly.
    trust_radius : float
        Chart points passed to :meth:`reflexion` must have norm below this.
    chart_radius : float
        Group elements with ``||g - I||_2`` at or above this are rejected.
    check : bool
        Verify ``h^2 = I`` and ``Ad(h) = sigma`` on construction.  Negative
        controls switch this off.
    """

    def __init__(self, spec, involution, k_basis, h_matrix=None, trust_radius=0.3,
                 chart_radius=1.0, fd_step=1e-6, newton_tol=1e-12, max_iter=50,
                 coord_bound=3.0, tol=DEFAULT_TOL, check=True):
        if spec.matrix_basis is None:
            raise ValueError("the homogeneous model needs a matrix basis")
        self.spec = spec
        self.trust_radius = check_positive(trust_radius, "trust_radius")
        self.chart_radius = check_positive(chart_radius, "chart_radius")
        self.fd_step = check_positive(fd_step, "fd_step")
        self.newton_tol = check_positive(newton_tol, "newton_tol")
        self.max_iter = int(max_iter)
        self.coord_bound = float(coord_bound)
        self.tol = tol
        k = check_basis(k_basis, spec.dim, "k_basis")

        if h_matrix is None:
            h_matrix = involution.h_matrix
        self.h_matrix = None if h_matrix is None else check_square(h_matrix, "h_matrix", False)
        if self.h_matrix is not None:
            self.sigma = Ad(spec, self.h_matrix, tol)
        else:
            self.sigma = involution.sigma

        try:
            self.decomposition = eigensplit(spec, involution, k, tol)
            self.m_basis = _chart_complement(self.decomposition)
        except (NotInvolutive, NotAutomorphism):
            if check:
                raise
            self.decomposition = None
            proj = np.eye(spec.dim) - (span_basis(k).T @ span_basis(k) if k.shape[0] else 0)
            self.m_basis = span_basis(proj, 1e-8, 1.0)
        self.k_basis = self.decomposition.k_basis if self.decomposition else (
            span_basis(k) if k.shape[0] else k)
        if numerical_rank(np.vstack([self.m_basis, self.k_basis])) != spec.dim:
            raise ValueError("m_basis and k_basis do not form a basis of g")

        self.involution = involution
        self.dim = self.m_basis.shape[0]
        self._M = spec.matrix(self.m_basis) if self.dim else np.zeros((0,) + spec.matrix_basis.shape[1:])
        self._K = (spec.matrix(self.k_basis) if self.k_basis.shape[0]
                   else np.zeros((0,) + spec.matrix_basis.shape[1:]))
        # algebra coordinates -> (m, k) coordinates
        self._to_mk = np.linalg.inv(np.vstack([self.m_basis, self.k_basis]))
        if check:
            res = self.invariant_residuals()
            bad = {k_: v for k_, v in res.items() if v > tol}
            if bad:
                raise ValueError(f"model invariants violated: {bad}")

    # -- invariants --------------------------------------------------------

    def invariant_residuals(self):
        res = {"sigma_vs_involution": float(np.max(np.abs(self.sigma - self.involution.sigma)))}
        if self.h_matrix is not None:
            h = self.h_matrix
            res["h_squared"] = float(np.max(np.abs(h @ h - np.eye(h.shape[0]))))
        if self.k_basis.shape[0]:
            res["sigma_on_k"] = float(np.max(np.abs(self.k_basis @ self.sigma.T - self.k_basis)))
        return res

    def __repr__(self):
        return (f"HomogeneousReflexionModel(dim_g={self.spec.dim}, chart_dim={self.dim}, "
                f"trust_radius={self.trust_radius})")

    # -- chart machinery -----------------------------------------------------

    def to_algebra(self, x):
        """Algebra vector of the chart point ``x`` (an element of m)."""
        return np.asarray(x, dtype=float) @ self.m_basis

    def _assemble(self, u):
        """exp(X) exp(Z) for stacked unknowns u = (x, z)."""
        n = self.dim
        X = np.tensordot(u[:, :n], self._M, axes=1)
        Z = np.tensordot(u[:, n:], self._K, axes=1)
        e = mat_exp(np.stack([X, Z], axis=1))
        return e[:, 0], e[:, 1], X, Z

    def _value_and_jacobian(self, u):
        """exp(X)exp(Z) and its central-difference Jacobian (B, m*m, dim),
        from a single batched exponential."""
        n, d = self.dim, self.fd_step
        B = u.shape[0]
        X = np.tensordot(u[:, :n], self._M, axes=1)
        Z = np.tensordot(u[:, n:], self._K, axes=1)
        gens = np.concatenate([self._M, self._K])           # (dim, m, m)
        base = np.concatenate([np.repeat(X[:, None], n, 1),
                               np.repeat(Z[:, None], gens.shape[0] - n, 1)], axis=1)
        stack = np.concatenate([X[:, None], Z[:, None],
                                base + d * gens, base - d * gens], axis=1)
        e = mat_exp(stack)
        dim = gens.shape[0]
        eX, eZ = e[:, 0], e[:, 1]
        diff = (e[:, 2:2 + dim] - e[:, 2 + dim:]) / (2 * d)
        cols = np.concatenate([diff[:, :n] @ eZ[:, None], eX[:, None] @ diff[:, n:]], axis=1)
        J = cols.reshape(B, dim, -1).transpose(0, 2, 1)
        return eX @ eZ, J

    def _initial_guess(self, G):
        """Split a truncated log series of G along m and k."""
        A = G - np.eye(G.shape[-1])
        A2 = A @ A
        L = A - A2 / 2 + A2 @ A / 3
        return self.spec.coords(L) @ self._to_mk

    def _normalize(self, G):
        """Batched Newton solve of exp(X) exp(Z) = G.

        Returns ``(u, ok)``; rows with ``ok == False`` hold NaN.
        """
        B, m, _ = G.shape
        dim = self.spec.dim
        u = np.zeros((B, dim))
        eye = np.eye(m)
        ok = np.all(np.isfinite(G), axis=(1, 2))
        ok[ok] = np.linalg.norm(G[ok] - eye, ord=2, axis=(1, 2)) < self.chart_radius
        active = np.flatnonzero(ok)
        if active.size:
            u[active] = self._initial_guess(G[active])
        for _ in range(self.max_iter):
            if active.size == 0:
                break
            ua = u[active]
            A, J = self._value_and_jacobian(ua)
            r = (A - G[active]).reshape(active.size, -1)
            JT = J.transpose(0, 2, 1)
            du = -np.linalg.solve(JT @ J, (JT @ r[:, :, None]))[:, :, 0]
            u[active] = ua + du
            step = np.linalg.norm(du, axis=1)
            diverged = ~np.isfinite(step) | (np.linalg.norm(u[active], axis=1) > self.coord_bound)
            ok[active[diverged]] = False
            active = active[(step >= self.newton_tol) & ~diverged]
        ok[active] = False  # no convergence within max_iter
        good = np.flatnonzero(ok)
        if good.size:
            eX, eZ, _, _ = self._assemble(u[good])
            resid = np.linalg.norm(eX @ eZ - G[good], axis=(1, 2))
            ok[good[resid > 1e-10]] = False
        u[~ok] = np.nan
        return u, ok

    def _chart_of(self, G):
        u, _ = self._normalize(np.asarray(G, dtype=float).reshape((-1,) + G.shape[-2:]))
        return u[:, :self.dim].reshape(G.shape[:-2] + (self.dim,))

    def _reflect_algebra(self, Xa, Ya):
        """Chart coordinates of exp(X) exp(-sigma X) exp(sigma Y) K."""
        spec = self.spec
        Xa = np.atleast_2d(Xa)
        Ya = np.atleast_2d(Ya)
        Xa, Ya = np.broadcast_arrays(Xa, Ya)
        mats = np.stack([Xa, -Xa @ self.sigma.T, Ya @ self.sigma.T], axis=1)
        e = mat_exp(spec.matrix(mats))
        G = e[:, 0] @ e[:, 1] @ e[:, 2]
        return self._chart_of(G)

    def _check_trust(self, *points):
        for p in points:
            if np.any(np.linalg.norm(p, axis=-1) >= self.trust_radius):
                raise OutOfChartDomain(f"chart point outside trust radius {self.trust_radius}")

    def _evaluate(self, x, y):
        """Non-strict batched reflexion used by the black box and samplers."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        shape = x.shape
        xf, yf = x.reshape(-1, self.dim), y.reshape(-1, self.dim)
        out = np.full(xf.shape, np.nan)
        ok = (np.linalg.norm(xf, axis=1) < self.trust_radius) & \
             (np.linalg.norm(yf, axis=1) < self.trust_radius)
        ok &= np.all(np.isfinite(xf), axis=1) & np.all(np.isfinite(yf), axis=1)
        if np.any(ok):
            out[ok] = self._reflect_algebra(self.to_algebra(xf[ok]), self.to_algebra(yf[ok]))
        return out.reshape(shape)


def coset_normalize(model, g):
    """Solve ``exp(X) exp(Z) = g`` with X in span(m), Z in k by Newton.

    Returns chart coordinates ``x`` and k-coordinates ``z``; batched over
    leading axes of ``g``.
    """
    g = check_square(g, "g")
    G = g.reshape((-1,) + g.shape[-2:])
    u, ok = model._normalize(G)
    if not np.all(ok):
        raise OutOfChartDomain("coset normalisation left the chart or did not converge")
    n = model.dim
    lead = g.shape[:-2]
    return u[:, :n].reshape(lead + (n,)), u[:, n:].reshape(lead + (u.shape[1] - n,))


def reflexion(model, x, y):
    """Chart coordinates of ``S_x y``."""
    x = check_vector(x, model.dim, "x")
    y = check_vector(y, model.dim, "y")
    model._check_trust(x, y)
    out = model._evaluate(x, y)
    if not np.all(np.isfinite(out)):
        raise OutOfChartDomain("reflexion result leaves the chart domain")
    return out


def reflexion_at_element(model, X, y):
    """``S_{exp(X)K} y`` for an arbitrary algebra vector ``X`` (not only m)."""
    X = check_vector(X, model.spec.dim, "X")
    y = check_vector(y, model.dim, "y")
    out = model._reflect_algebra(X, model.to_algebra(y))
    out = out.reshape(np.broadcast_shapes(X.shape[:-1], y.shape[:-1]) + (model.dim,))
    if not np.all(np.isfinite(out)):
        raise OutOfChartDomain("reflexion result leaves the chart domain")
    return out


def double_reflexion(model, x, y):
    """``S_x S_0 y``."""
    return reflexion(model, x, reflexion(model, np.zeros(model.dim), y))


def translate(model, g, y):
    """Chart coordinates of ``g exp(Y) K``."""
    g = check_square(g, "g", allow_batch=False)
    y = check_vector(y, model.dim, "y")
    G = g @ mat_exp(model.spec.matrix(model.to_algebra(y)))
    x, _ = coset_normalize(model, G)
    return x


def right_invariant_field(model, X, y):
    """``d/dt|0`` of the chart of ``exp(tX) exp(Y) K``.

    Uses the chart differential: solve ``J(y, 0) delta = X exp(Y)`` where J
    is the Jacobian of ``(x, z) -> exp(x.m) exp(z.k)``.
    """
    X = check_vector(X, model.spec.dim, "X")
    y = check_vector(y, model.dim, "y")
    model._check_trust(y)
    Y = np.atleast_2d(y)
    Xb = np.broadcast_to(np.atleast_2d(X), (Y.shape[0], model.spec.dim)) \
        if X.ndim == 1 else np.atleast_2d(X)
    u = np.concatenate([Y, np.zeros((Y.shape[0], model.k_basis.shape[0]))], axis=1)
    A, J = model._value_and_jacobian(u)
    rhs = (model.spec.matrix(Xb) @ A).reshape(Y.shape[0], -1)
    JT = J.transpose(0, 2, 1)
    delta = np.linalg.solve(JT @ J, JT @ rhs[:, :, None])[:, :, 0]
    out = delta[:, :model.dim]
    return out.reshape(np.broadcast_shapes(X.shape[:-1], y.shape[:-1]) + (model.dim,))


@dataclass
class AxiomReport:
    a1: float
    a2: float
    a3: float
    n_samples: int
    skipped: dict
    tol: float
    trust_radius: float
    seed: int
    model_residuals: dict

    @property
    def skip_rate(self):
        return max(self.skipped.values()) / self.n_samples if self.n_samples else 0.0

    @property
    def axioms_passed(self):
        return {"A1": bool(self.a1 <= self.tol), "A2": bool(self.a2 <= self.tol),
                "A3": bool(self.a3 <= self.tol)}

    @property
    def passed(self):
        return all(self.axioms_passed.values())

    def as_dict(self):
        return {
            "residuals": {"A1": self.a1, "A2": self.a2, "A3": self.a3},
            "pass": self.axioms_passed,
            "passed": self.passed,
            "n_samples": self.n_samples,
            "skipped": dict(self.skipped),
            "skip_rate": self.skip_rate,
            "tol": self.tol,
            "trust_radius": self.trust_radius,
            "seed": self.seed,
            "model_residuals": dict(self.model_residuals),
        }


def _max_or_nan(r):
    r = r[np.isfinite(r)]
    return float(r.max()) if r.size else float("nan")


def verify_axioms(model, n_samples=1000, seed=42, tol=DEFAULT_TOL):
    """Sample the trust region and report the worst A1, A2, A3 residuals.

    A1 samples fill the ball of radius rho; pairs and triples are drawn from
    the ball of radius rho/3 so that composite reflexions stay in range.
    Samples that cannot be evaluated are skipped and counted.
    """
    rng = check_random_state(seed)
    n, rho = model.dim, model.trust_radius
    S = model._evaluate
    x1 = sample_ball(rng, n_samples, n, rho)
    x, y, z = (sample_ball(rng, n_samples, n, rho / 3) for _ in range(3))

    r1 = np.linalg.norm(S(x1, x1) - x1, axis=1)
    sxy = S(x, y)
    r2 = np.linalg.norm(S(x, sxy) - y, axis=1)
    lhs = S(x, S(y, z))
    rhs = S(sxy, S(x, z))
    r3 = np.linalg.norm(lhs - rhs, axis=1)
    skipped = {k: int(np.sum(~np.isfinite(r))) for k, r in (("A1", r1), ("A2", r2), ("A3", r3))}
    return AxiomReport(
        a1=_max_or_nan(r1), a2=_max_or_nan(r2), a3=_max_or_nan(r3),
        n_samples=n_samples, skipped=skipped, tol=tol, trust_radius=rho,
        seed=seed if isinstance(seed, int) else -1,
        model_residuals=model.invariant_residuals(),
    )


def as_black_box(model):
    """Hide the algebra: only the chart dimension, radius and map remain."""
    return BlackBoxReflexion(model.dim, model.trust_radius, model._evaluate,
                             label="homogeneous model")


def build_model(spec, h_matrix, k_basis, **kwargs):
    """Convenience constructor from a group element h."""
    inv = Involution.from_group_element(spec, h_matrix)
    return HomogeneousReflexionModel(spec, inv, k_basis, **kwargs)
