"""Recover the transvection algebra of an opaque reflexion map.

Everything here sees only a :class:`~reflexia.blackbox.BlackBoxReflexion`;
all derivatives are central differences.  Vector fields are evaluated in
batches: a field maps an array ``(..., n)`` of chart points to tangent
vectors of the same shape, with NaN wherever the black box refuses.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_positive, check_random_state, check_vector
from .blackbox import sample_ball
from .exceptions import (DomainTooSmall, EigenvalueAmbiguous, InvolutionViolated,
                         RankUnstable)
from .lie import LieAlgebraSpec, fingerprint, jacobi_residual
from .linalg import numerical_rank, span_basis
from .symmetric import maximal_ideal_in

FD_STEP = 1e-5
JACOBIAN_STEP = 1e-4
OUTER_STEP = 1e-2
RANK_RTOL = 1e-6
FINGERPRINT_RTOL = 1e-4

_EPS = np.finfo(float).eps


# -- tangent maps -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TangentData:
    """Jacobians of S at the diagonal point (x, x).

    ``TS_x`` differentiates the second slot, ``TS_up_x`` the first.
    """

    base: np.ndarray
    TS_x: np.ndarray
    TS_up_x: np.ndarray
    fd_error: float

    @property
    def involution_residual(self):
        n = self.TS_x.shape[0]
        return float(np.max(np.abs(self.TS_x @ self.TS_x - np.eye(n))))

    @property
    def splitting_residual(self):
        n = self.TS_x.shape[0]
        return float(np.max(np.abs(self.TS_x + self.TS_up_x - np.eye(n))))

    @property
    def eigenvalues(self):
        return np.sort_complex(np.linalg.eigvals(self.TS_x))


def _slot_jacobians(S, x, h):
    n = S.dim
    E = h * np.eye(n)
    xs = np.concatenate([x + E, x - E])
    second = S.evaluate(np.broadcast_to(x, xs.shape), xs)
    first = S.evaluate(xs, np.broadcast_to(x, xs.shape))
    J2 = ((second[:n] - second[n:]) / (2 * h)).T
    J1 = ((first[:n] - first[n:]) / (2 * h)).T
    return J2, J1


def tangent_maps(S, x, step=FD_STEP):
    """Both slot derivatives of S at (x, x) by central differences.

    Raises :class:`DomainTooSmall` when the stencil (twice the step, used
    for the error estimate) leaves the domain and :class:`InvolutionViolated`
    when ``||TS_x^2 - I||`` exceeds ten times the expected FD error.
    """
    x = check_vector(x, S.dim, "x")
    step = check_positive(step, "step")
    if np.linalg.norm(x) + 2 * step >= S.domain_radius:
        raise DomainTooSmall("finite-difference stencil leaves the black-box domain")
    J2, J1 = _slot_jacobians(S, x, step)
    J2b, J1b = _slot_jacobians(S, x, 2 * step)
    if not (np.all(np.isfinite(J2)) and np.all(np.isfinite(J2b))):
        raise DomainTooSmall("black box refused points of the stencil")
    scale = 1.0 + float(np.max(np.abs(x)))
    fd_error = float(max(np.max(np.abs(J2 - J2b)), np.max(np.abs(J1 - J1b)))) \
        + 100 * _EPS * scale / step
    td = TangentData(x.copy(), J2, J1, fd_error)
    if td.involution_residual > 10 * fd_error:
        raise InvolutionViolated(
            f"||TS_x^2 - I|| = {td.involution_residual:.2e} exceeds 10x FD error {fd_error:.1e}")
    return td


def tangent_split(td, gap=0.1):
    """Bases (rows, orthonormal) of T^- = range (I - TS_x)/2 and T^+ = range (I + TS_x)/2."""
    n = td.TS_x.shape[0]
    eig = np.linalg.eigvals(td.TS_x)
    dist = np.minimum(np.abs(eig - 1.0), np.abs(eig + 1.0))
    if np.any(dist > gap):
        raise EigenvalueAmbiguous(f"eigenvalues of TS_x away from +-1: {eig}")
    eye = np.eye(n)
    minus = span_basis(((eye - td.TS_x) / 2).T, 1e-3, 1.0)
    plus = span_basis(((eye + td.TS_x) / 2).T, 1e-3, 1.0)
    if minus.shape[0] + plus.shape[0] != n:
        raise EigenvalueAmbiguous("eigenspace dimensions do not add up to n")
    return minus, plus


# -- sampled vector fields --------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampledVectorField:
    evaluator: Callable
    label: str = ""
    domain_radius: Optional[float] = None

    def __call__(self, y):
        return self.evaluator(np.asarray(y, dtype=float))

    def __neg__(self):
        return SampledVectorField(lambda y: -self.evaluator(y), f"-{self.label}",
                                  self.domain_radius)


def linear_combination(coeffs, fields, label=None):
    coeffs = np.asarray(coeffs, dtype=float)

    def ev(y):
        return sum(c * f(y) for c, f in zip(coeffs, fields) if c != 0.0) \
            if np.any(coeffs) else np.zeros_like(np.asarray(y, dtype=float))

    radius = min((f.domain_radius for f in fields if f.domain_radius), default=None)
    return SampledVectorField(ev, label or "lincomb", radius)


def constant_field(v, domain_radius=None):
    v = np.asarray(v, dtype=float)

    def ev(y):
        return np.broadcast_to(v, np.shape(y)).copy()

    return SampledVectorField(ev, f"const{v.tolist()}", domain_radius)


def zero_field(n, domain_radius=None):
    return constant_field(np.zeros(n), domain_radius)


def r_field(S, x, X, step=FD_STEP):
    """``R_x(X)(y) = 1/2 d/dt S(x + tX, S_x y)`` at t = 0."""
    x = check_vector(x, S.dim, "x")
    X = check_vector(X, S.dim, "X")
    h = step

    def ev(y):
        sy = S.evaluate(x, y)
        a = S.evaluate(x + h * X, sy)
        b = S.evaluate(x - h * X, sy)
        return (a - b) / (4 * h)

    return SampledVectorField(ev, f"R_x({np.round(X, 6).tolist()})", S.domain_radius)


def directional_derivative(F, y, v, step=JACOBIAN_STEP):
    """``DF(y) v`` by central differences (batched over y and v)."""
    return (F(y + step * v) - F(y - step * v)) / (2 * step)


def directional_derivative4(F, y, v, step=OUTER_STEP):
    """Fourth-order central stencil for ``DF(y) v``."""
    return (-F(y + 2 * step * v) + 8 * F(y + step * v)
            - 8 * F(y - step * v) + F(y - 2 * step * v)) / (12 * step)


def field_bracket(F, G, y, step=JACOBIAN_STEP):
    """``[F, G](y) = DG(y) F(y) - DF(y) G(y)``."""
    y = np.asarray(y, dtype=float)
    Fy, Gy = F(y), G(y)
    return directional_derivative(G, y, Fy, step) - directional_derivative(F, y, Gy, step)


def bracket_field(F, G, step=JACOBIAN_STEP):
    return SampledVectorField(lambda y: field_bracket(F, G, y, step),
                              f"[{F.label},{G.label}]", F.domain_radius)


def pullback(S, x, F, step=FD_STEP):
    """``(S_x)^* F = TS_x o F o S_x`` (S_x is an involution)."""
    x = check_vector(x, S.dim, "x")

    def ev(y):
        sy = S.evaluate(x, y)
        v = F(sy)
        return (S.evaluate(x, sy + step * v) - S.evaluate(x, sy - step * v)) / (2 * step)

    return SampledVectorField(ev, f"(S_x)^*{F.label}", F.domain_radius)


def _rowmax(a):
    r = np.linalg.norm(np.asarray(a), axis=-1).ravel()
    r = r[np.isfinite(r)]
    return float(r.max()) if r.size else float("nan")


def parity_residual(S, x, F, points, sign=-1, step=FD_STEP):
    """max ||(S_x)^*F - sign * F|| over ``points``."""
    points = np.asarray(points, dtype=float)
    return _rowmax(pullback(S, x, F, step)(points) - sign * F(points))


def infinitesimal_automorphism_residual(S, F, p, q, step=FD_STEP):
    """max over pairs of ``||F(S_p q) - TS_p F(q) - TS^q F(p)||``.

    Returns ``(residual, skipped)``; pairs the black box cannot evaluate are
    skipped.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    Fp, Fq = F(p), F(q)
    lhs = F(S.evaluate(p, q))
    ts_p = (S.evaluate(p, q + step * Fq) - S.evaluate(p, q - step * Fq)) / (2 * step)
    ts_up = (S.evaluate(p + step * Fp, q) - S.evaluate(p - step * Fp, q)) / (2 * step)
    r = np.linalg.norm(lhs - ts_p - ts_up, axis=1)
    skipped = int(np.sum(~np.isfinite(r)))
    r = r[np.isfinite(r)]
    return (float(r.max()) if r.size else float("nan")), skipped


# -- reconstruction -----------------------------------------------------------

@dataclass
class ReconstructionReport:
    t_minus_dim: int
    t_plus_dim: int
    gx_dim: int
    transitive: bool
    structure_constants: np.ndarray
    fingerprint: object
    residuals: dict
    config: dict = field(default_factory=dict)
    singular_values: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def fitted_algebra(self):
        if self.gx_dim == 0:
            return None
        d = self.structure_constants.shape[0]
        return LieAlgebraSpec(d, self.structure_constants)

    def as_dict(self):
        return {
            "t_minus_dim": self.t_minus_dim,
            "t_plus_dim": self.t_plus_dim,
            "gx_dim": self.gx_dim,
            "transitive": self.transitive,
            "structure_constants": np.asarray(self.structure_constants).tolist(),
            "fingerprint": self.fingerprint.as_dict() if self.fingerprint else None,
            "residuals": dict(self.residuals),
            "singular_values": {k: list(v) for k, v in self.singular_values.items()},
            "config": dict(self.config),
            "notes": dict(self.notes),
        }


def _stable_rank(a, rtol, scale, what):
    ranks = {numerical_rank(a, f * rtol, scale) for f in (0.1, 1.0, 10.0)}
    if len(ranks) != 1:
        raise RankUnstable(f"{what}: rank changes under 10x cutoff perturbation {sorted(ranks)}")
    return ranks.pop()


class TransvectionReconstructor(BaseEstimator):
    """Estimate the transvection algebra g_x of a black-box reflexion.

    ``fit`` builds the fields R_x(e_i) on a basis of T^-_x, their pairwise
    brackets, decides dim g_x by numerical rank on a sample cloud and fits
    structure constants in the basis (R_1..R_p, E_1..E_r) where the E_a are
    the brackets orthonormalised on the cloud.  Brackets that land in g^-
    are read off at a few points through a fourth-order outer stencil.

    Parameters
    ----------
    base_point : array-like or None
        Point x; the chart origin when None.
    step : float
        Central-difference step for derivatives of the reflexion itself.
    jacobian_step : float
        Step for Jacobians of sampled fields (field brackets).
    outer_step : float
        Step of the fourth-order stencil used on bracket fields.
    samples_per_dim : int
        Cloud size is ``samples_per_dim * n``.
    cloud_radius : float or None
        Defaults to a quarter of the distance from x to the domain boundary.
    rank_rtol : float
        Cutoff relative to the largest singular value.
    fingerprint_rtol : float
        Rank cutoff used for the invariants of the fitted constants.
    random_state : int or None
    """

    def __init__(self, base_point=None, step=FD_STEP, jacobian_step=JACOBIAN_STEP,
                 outer_step=OUTER_STEP, samples_per_dim=50, cloud_radius=None,
                 rank_rtol=RANK_RTOL, fingerprint_rtol=FINGERPRINT_RTOL, n_fit_points=None,
                 gate_samples=20, random_state=0):
        self.base_point = base_point
        self.step = step
        self.jacobian_step = jacobian_step
        self.outer_step = outer_step
        self.samples_per_dim = samples_per_dim
        self.cloud_radius = cloud_radius
        self.rank_rtol = rank_rtol
        self.fingerprint_rtol = fingerprint_rtol
        self.n_fit_points = n_fit_points
        self.gate_samples = gate_samples
        self.random_state = random_state

    def fit(self, S, y=None):
        rng = check_random_state(self.random_state)
        n = S.dim
        x = np.zeros(n) if self.base_point is None else check_vector(self.base_point, n)
        gate = S.sanity_gate(self.gate_samples, rng)

        td = tangent_maps(S, x, self.step)
        t_minus, t_plus = tangent_split(td)
        p = t_minus.shape[0]
        self.base_point_ = x
        self.tangent_ = td
        self.t_minus_ = t_minus
        self.t_plus_ = t_plus
        self.r_fields_ = [r_field(S, x, t, self.step) for t in t_minus]
        pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
        self.bracket_pairs_ = pairs
        self.bracket_fields_ = [bracket_field(self.r_fields_[i], self.r_fields_[j],
                                              self.jacobian_step) for i, j in pairs]

        radius = self.cloud_radius or (S.domain_radius - np.linalg.norm(x)) / 4
        cloud = sample_ball(rng, int(self.samples_per_dim) * n, n, radius, center=x)
        fields = self.r_fields_ + self.bracket_fields_
        vals = np.array([f(cloud) for f in fields]) if fields else np.zeros((0, len(cloud), n))
        finite = np.all(np.isfinite(vals), axis=(0, 2))
        cloud, vals = cloud[finite], vals[:, finite]
        self.cloud_ = cloud
        residuals = {"gate_A1": gate["A1"], "gate_A2": gate["A2"],
                     "TS_involution": td.involution_residual,
                     "TS_splitting": td.splitting_residual,
                     "fd_error_estimate": td.fd_error,
                     "cloud_dropped": int(np.sum(~finite))}
        singular = {}

        stack = vals.reshape(len(fields), -1) if fields else np.zeros((0, 0))
        if p == 0:
            gx_dim = 0
        else:
            singular["cloud"] = np.linalg.svd(stack, compute_uv=False).tolist()
            gx_dim = _stable_rank(stack, self.rank_rtol, None, "g_x on the cloud")
        top = singular["cloud"][0] if p else 1.0

        # bracket basis E = C B, orthogonal on the cloud with common norm equal
        # to the top singular value of the bracket stack; B = beta E
        q = len(pairs)
        if q:
            U, s, _ = np.linalg.svd(stack[p:], full_matrices=False)
            r = numerical_rank(stack[p:], self.rank_rtol, top)
            C = s[0] * (U[:, :r] / s[:r]).T if r else np.zeros((0, q))
            beta = U[:, :r] * s[:r] / s[0] if r else np.zeros((q, 0))
            E = C @ stack[p:]
            bnorm = np.linalg.norm(stack[p:])
            residuals["bracket_fit"] = float(np.linalg.norm(stack[p:] - beta @ E) / bnorm) \
                if bnorm > 0 else 0.0
        else:
            r = 0
            C = np.zeros((0, 0))
            beta = np.zeros((0, 0))
        if p + r != gx_dim:
            residuals["rank_split_mismatch"] = float(abs(p + r - gx_dim))
        self.bracket_coefficients_ = C

        gamma = self._fit_gamma(S, x, cloud, pairs, residuals) if r else None
        c = self._assemble_constants(p, r, pairs, beta, C, gamma, residuals)
        self.structure_constants_ = c
        d = p + r

        # transitivity: evaluations at x alone
        at_x = np.array([f(x[None])[0] for f in fields]) if fields else np.zeros((0, n))
        if fields:
            singular["at_x"] = np.linalg.svd(at_x, compute_uv=False).tolist()
            rank_x = _stable_rank(at_x, self.rank_rtol, None, "g_x(x)")
        else:
            rank_x = 0
        transitive = rank_x == n
        residuals["r_reproducing"] = _rowmax(at_x[:p] - t_minus) if p else 0.0

        # parity of R-fields (odd) and brackets (even) on a few cloud points
        probe = cloud[: min(10, len(cloud))]
        if p:
            residuals["r_parity"] = max(parity_residual(S, x, f, probe, -1, self.step)
                                        for f in self.r_fields_)
            pq = sample_ball(rng, 10, n, radius, center=x)
            residuals["r_membership"] = max(
                infinitesimal_automorphism_residual(S, f, probe, pq, self.step)[0]
                for f in self.r_fields_)
        if q:
            residuals["bracket_parity"] = max(parity_residual(S, x, f, probe, +1, self.step)
                                              for f in self.bracket_fields_)

        fitted = LieAlgebraSpec(d, c) if d else None
        fp = fingerprint(fitted, self.fingerprint_rtol) if fitted else None
        notes = {"transitivity": "numerical proxy: rank of field values at x",
                 "fingerprint": "invariants of fitted constants; a match is necessary, "
                                "not sufficient, for isomorphism"}
        if fitted is not None:
            scale = max(float(np.max(np.abs(c))), 1.0)
            residuals["fitted_jacobi"] = jacobi_residual(fitted) / scale ** 2
            if r:
                kbasis = np.hstack([np.zeros((r, p)), np.eye(r)])
                ideal, _ = maximal_ideal_in(fitted, kbasis, self.fingerprint_rtol)
                if ideal.shape[0]:
                    central = np.einsum("ai,jik->ajk", ideal, c)
                    residuals["ideal_in_bracket_central"] = float(np.max(np.abs(central)))
                notes["ideal_check"] = (f"largest ideal of fitted g_x inside [g-,g-] has "
                                       f"dim {ideal.shape[0]}; checked on fitted constants only")

        self.gx_dim_ = gx_dim
        self.transitive_ = bool(transitive)
        self.fitted_algebra_ = fitted
        self.fingerprint_ = fp
        self.report_ = ReconstructionReport(
            t_minus_dim=p, t_plus_dim=t_plus.shape[0], gx_dim=gx_dim,
            transitive=bool(transitive), structure_constants=c, fingerprint=fp,
            residuals=residuals, singular_values=singular, notes=notes,
            config={k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v)
                    for k, v in self.get_params().items()},
        )
        return self

    def _fit_gamma(self, S, x, cloud, pairs, residuals):
        """Coefficients of [B_ij, R_k] = sum_l gamma[ij, k, l] R_l.

        These brackets lie in g^-, so each is pinned by its values at a few
        points (x plus the nearest cloud points).
        """
        R = self.r_fields_
        p = len(R)
        n = S.dim
        k_pts = self.n_fit_points or 2 * n
        order = np.argsort(np.linalg.norm(cloud - x, axis=1))
        pts = np.vstack([x[None], cloud[order[:k_pts]]])
        r_at = np.array([f(pts) for f in R])                       # (p, P, n)
        A = r_at.reshape(p, -1).T
        gamma = np.zeros((len(pairs), p, p))
        worst = 0.0
        for a, Bf in enumerate(self.bracket_fields_):
            Bv = Bf(pts)
            for k, Rk in enumerate(R):
                val = directional_derivative(Rk, pts, Bv, self.jacobian_step) \
                    - directional_derivative4(Bf, pts, r_at[k], self.outer_step)
                coef, *_ = np.linalg.lstsq(A, val.ravel(), rcond=None)
                gamma[a, k] = coef
                scale = max(np.linalg.norm(val), 1e-300)
                worst = max(worst, float(np.linalg.norm(A @ coef - val.ravel()) / scale)
                            if np.linalg.norm(val) > 1e-8 else 0.0)
        residuals["g_minus_fit"] = worst
        return gamma

    @staticmethod
    def _assemble_constants(p, r, pairs, beta, C, gamma, residuals):
        d = p + r
        c = np.zeros((d, d, d))
        bfull = np.zeros((p, p, r))
        for a, (i, j) in enumerate(pairs):
            bfull[i, j] = beta[a]
            bfull[j, i] = -beta[a]
        c[:p, :p, p:] = bfull
        if r:
            gE = np.einsum("ab,bkl->akl", C, gamma)               # [E_a, R_k] on R_l
            c[p:, :p, :p] = gE
            c[:p, p:, :p] = -gE.transpose(1, 0, 2)
            Cfull = np.zeros((r, p, p))
            for a, (i, j) in enumerate(pairs):
                Cfull[:, i, j] = C[:, a]
            # [E_a, E_b] = sum_{k<l} C_b,kl ([[E_a,R_k],R_l] + [R_k,[E_a,R_l]])
            t1 = np.einsum("bkl,akm,mle->abe", Cfull, gE, bfull)
            t2 = np.einsum("bkl,alm,kme->abe", Cfull, gE, bfull)
            c[p:, p:, p:] = t1 + t2
        asym = float(np.max(np.abs(c + c.transpose(1, 0, 2)))) if d else 0.0
        residuals["fitted_antisymmetry"] = asym
        return (c - c.transpose(1, 0, 2)) / 2

    def transform(self, Y):
        """Values of the basis fields (R_1..R_p, E_1..E_r) at points Y.

        Returns an array of shape ``(len(Y), gx_basis, n)``.
        """
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        R = [f(Y) for f in self.r_fields_]
        B = [f(Y) for f in self.bracket_fields_]
        out = list(R)
        if B and self.bracket_coefficients_.size:
            out += list(np.einsum("ab,byn->ayn", self.bracket_coefficients_, np.array(B)))
        if not out:
            return np.zeros((len(Y), 0, Y.shape[1]))
        return np.stack(out, axis=1)


def reconstruct_algebra(S, x=None, **config):
    """Functional front end to :class:`TransvectionReconstructor`."""
    return TransvectionReconstructor(base_point=x, **config).fit(S).report_


@dataclass
class ComparisonReport:
    match: bool
    fitted: dict
    reference: dict
    differences: list

    def as_dict(self):
        return {"match": self.match, "fitted": self.fitted, "reference": self.reference,
                "differences": list(self.differences),
                "note": "fingerprint equality is necessary, not sufficient, for isomorphism"}


def compare_algebras(fitted, reference, fitted_rtol=FINGERPRINT_RTOL, reference_rtol=1e-8):
    """Compare invariant fingerprints of two algebras."""
    fa = fitted if not isinstance(fitted, LieAlgebraSpec) else fingerprint(fitted, fitted_rtol)
    fb = reference if not isinstance(reference, LieAlgebraSpec) else fingerprint(reference, reference_rtol)
    da, db = fa.as_dict(), fb.as_dict()
    diffs = [k for k in da if da[k] != db[k]]
    return ComparisonReport(not diffs, da, db, diffs)
