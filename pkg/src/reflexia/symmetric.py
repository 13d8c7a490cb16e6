"""Eigen-decomposition of a Lie algebra under an involution and the
homogeneity conditions H1-H3, decided at the Lie algebra level."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_basis, check_square
from .exceptions import DimensionMismatch, NotAutomorphism, NotInvolutive
from .lie import DEFAULT_TOL, Ad, _constant_scale, bracket_span, validate
from .linalg import null_space, numerical_rank, span_basis, subspace_residual

RANK_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class Involution:
    """Linear map ``sigma`` on algebra coordinates, optionally ``Ad(h)``."""

    sigma: np.ndarray
    source: str = "abstract"
    h_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "sigma", check_square(self.sigma, "sigma", allow_batch=False))
        if self.source not in ("abstract", "group_element"):
            raise ValueError(f"unknown involution source {self.source!r}")

    @classmethod
    def from_group_element(cls, spec, h, tol=DEFAULT_TOL):
        h = check_square(h, "h", allow_batch=False)
        return cls(Ad(spec, h, tol), "group_element", h)

    def involution_residual(self):
        s = self.sigma
        return float(np.max(np.abs(s @ s - np.eye(s.shape[0]))))

    def automorphism_residual(self, spec):
        """max over basis pairs of ||sigma[e_i, e_j] - [sigma e_i, sigma e_j]||."""
        s = self.sigma
        if s.shape[0] != spec.dim:
            raise DimensionMismatch("sigma does not act on this algebra")
        c = spec.structure_constants
        lhs = np.einsum("ijl,kl->ijk", c, s)
        rhs = np.einsum("ai,bj,abk->ijk", s, s, c)
        return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True, eq=False)
class SymmetricDecomposition:
    """Orthonormal bases (rows) of the +1 / -1 eigenspaces and of k."""

    gplus_basis: np.ndarray
    gminus_basis: np.ndarray
    k_basis: np.ndarray

    @property
    def dim(self):
        return self.gplus_basis.shape[1]


def eigensplit(spec, inv, k_basis=(), tol=DEFAULT_TOL):
    """Split g into the +1 and -1 eigenspaces of ``inv`` via (I +- sigma)/2."""
    res = inv.involution_residual()
    if res > tol:
        raise NotInvolutive(f"sigma^2 differs from the identity by {res:.2e}")
    res = inv.automorphism_residual(spec)
    if res > tol:
        raise NotAutomorphism(f"sigma does not preserve brackets (residual {res:.2e})")
    eye = np.eye(spec.dim)
    plus = span_basis(((eye + inv.sigma) / 2).T, RANK_RTOL, 1.0)
    minus = span_basis(((eye - inv.sigma) / 2).T, RANK_RTOL, 1.0)
    k = check_basis(k_basis, spec.dim, "k_basis")
    k = span_basis(k, RANK_RTOL) if k.shape[0] else k
    return SymmetricDecomposition(plus, minus, k)


def minus_eigenspace(inv, rtol=RANK_RTOL):
    """Kernel of sigma + I; agrees with eigensplit for a true involution."""
    return null_space(inv.sigma + np.eye(inv.sigma.shape[0]), rtol, 1.0)


def bracket_generate(spec, seed, rtol=RANK_RTOL):
    """Smallest bracket-closed subspace containing ``seed``.

    Returns ``(basis, chain)`` where ``chain`` lists the dimension after each
    enlargement; it stops once the dimension repeats or fills g.
    """
    seed = check_basis(seed, spec.dim, "seed")
    scale = _constant_scale(spec)
    cur = span_basis(seed, rtol, scale) if seed.shape[0] else seed
    chain = [cur.shape[0]]
    while 0 < cur.shape[0] < spec.dim:
        grown = np.vstack([cur, bracket_span(spec, cur, cur)])
        nxt = span_basis(grown, rtol, scale)
        chain.append(nxt.shape[0])
        if nxt.shape[0] == cur.shape[0]:
            break
        cur = nxt
    return cur, chain


def maximal_ideal_in(spec, k_basis, rtol=RANK_RTOL):
    """Largest ideal of g inside span(k_basis).

    Fixpoint a_0 = k, a_{i+1} = {X in a_i : [g, X] in a_i}.  Returns
    ``(basis, chain)``.
    """
    k = check_basis(k_basis, spec.dim, "k_basis")
    scale = _constant_scale(spec)
    cur = span_basis(k, rtol, scale) if k.shape[0] else k
    chain = [cur.shape[0]]
    eye = np.eye(spec.dim)
    while cur.shape[0]:
        perp = eye - cur.T @ cur
        # rows: (e_l, output k) for each coefficient alpha_j of X = sum alpha_j a_j
        br = np.einsum("li,aj,ijk->lka", eye, cur, spec.structure_constants)
        M = np.einsum("mk,lka->lma", perp, br).reshape(-1, cur.shape[0])
        alpha = null_space(M, rtol, scale)
        nxt = span_basis(alpha @ cur, rtol, 1.0) if alpha.shape[0] else np.zeros((0, spec.dim))
        chain.append(nxt.shape[0])
        if nxt.shape[0] == cur.shape[0]:
            break
        cur = nxt
    return cur, chain


def ideal_residual(spec, basis):
    """How far span(basis) is from being an ideal: max ||P_perp [e_l, b]||."""
    basis = check_basis(basis, spec.dim)
    if basis.shape[0] == 0:
        return 0.0
    return subspace_residual(bracket_span(spec, np.eye(spec.dim), basis), basis)


def subalgebra_residual(spec, basis):
    basis = check_basis(basis, spec.dim)
    if basis.shape[0] == 0:
        return 0.0
    q = span_basis(basis)
    return subspace_residual(bracket_span(spec, q, q), q)


@dataclass
class HConditionReport:
    h1: bool
    h2: bool
    h3: bool
    residuals: dict
    h2_chain: list
    h3_chain: list
    gminus_basis: list
    ideal_basis: list
    gminus_plus_bracket_is_g: bool
    k_is_subalgebra: bool
    notes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.h1 and self.h2 and self.h3

    def as_dict(self):
        return {
            "h1": self.h1,
            "h2": self.h2,
            "h3": self.h3,
            "passed": self.passed,
            "residuals": dict(self.residuals),
            "h2_chain": list(self.h2_chain),
            "h3_chain": list(self.h3_chain),
            "gminus_basis": self.gminus_basis,
            "ideal_basis": self.ideal_basis,
            "gminus_plus_bracket_is_g": self.gminus_plus_bracket_is_g,
            "k_is_subalgebra": self.k_is_subalgebra,
            "notes": dict(self.notes),
        }


def check_conditions(spec, inv, k_basis=(), tol=DEFAULT_TOL, rtol=RANK_RTOL,
                     k_generators=None):
    """Decide H1, H2, H3 at the algebra level.

    ``k_generators`` (optional stack of matrices in K) enables the direct
    group-level check that h commutes with K, on top of sigma|k = id.
    """
    vrep = validate(spec, tol)
    if not vrep.passed:
        raise ValueError(f"invalid Lie algebra: {vrep.as_dict()}")
    k = check_basis(k_basis, spec.dim, "k_basis")
    residuals = {
        "sigma_involution": inv.involution_residual(),
        "sigma_automorphism": inv.automorphism_residual(spec),
        "sigma_on_k": float(np.max(np.abs(k @ inv.sigma.T - k))) if k.shape[0] else 0.0,
    }
    if inv.h_matrix is not None:
        h = inv.h_matrix
        residuals["h_squared"] = float(np.max(np.abs(h @ h - np.eye(h.shape[0]))))
        if k_generators is not None:
            gens = check_square(k_generators, "k_generators")
            residuals["h_commutes_with_K"] = float(np.max(np.abs(h @ gens - gens @ h)))
    h1 = all(v <= tol for v in residuals.values())

    gminus = minus_eigenspace(inv, rtol)
    gen, h2_chain = bracket_generate(spec, gminus, rtol)
    h2 = gen.shape[0] == spec.dim
    ideal, h3_chain = maximal_ideal_in(spec, k, rtol)
    h3 = ideal.shape[0] == 0

    scale = _constant_scale(spec)
    br = bracket_span(spec, gminus, gminus)
    one_step = numerical_rank(np.vstack([gminus, br]), rtol, scale) if gminus.shape[0] else 0
    triple = bracket_span(spec, span_basis(br, rtol, scale), gminus) if gminus.shape[0] else br
    residuals["triple_bracket_closure"] = subspace_residual(triple, gminus) if triple.size else 0.0
    residuals["h3_ideal"] = ideal_residual(spec, ideal)
    k_sub = subalgebra_residual(spec, k)
    residuals["k_subalgebra"] = k_sub

    return HConditionReport(
        h1=bool(h1), h2=bool(h2), h3=bool(h3),
        residuals=residuals,
        h2_chain=h2_chain, h3_chain=h3_chain,
        gminus_basis=gminus.tolist(),
        ideal_basis=ideal.tolist(),
        gminus_plus_bracket_is_g=bool(one_step == spec.dim),
        k_is_subalgebra=bool(k_sub <= tol),
        notes={"h3_topology": "not-checked: G/K connected and simply connected "
                              "has no Lie algebra level test"},
    )
