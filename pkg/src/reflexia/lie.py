"""Finite-dimensional matrix Lie algebras.

Algebra elements are coordinate vectors in a fixed basis; matrices are only
a derived view obtained through :meth:`LieAlgebraSpec.matrix`.
"""

from dataclasses import dataclass, field
from math import factorial
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from ._validation import check_basis, check_square, check_vector
from .exceptions import DimensionMismatch, NotAdInvariant, OutOfChartDomain
from .linalg import null_space, numerical_rank, span_basis

DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LieAlgebraSpec:
    """Structure constants ``c[i, j, k]``: the bracket of basis ``i`` and
    ``j`` has coefficient ``c[i, j, k]`` on basis ``k``.

    ``matrix_basis`` (shape ``(dim, m, m)``) is optional; it is required by
    everything that touches the group (``mat_exp`` of algebra elements,
    ``Ad``, the homogeneous model).
    """

    dim: int
    structure_constants: np.ndarray
    matrix_basis: Optional[np.ndarray] = None
    labels: Optional[Sequence[str]] = None
    _pinv: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        c = np.asarray(self.structure_constants, dtype=float)
        if c.shape != (dim, dim, dim):
            raise DimensionMismatch(
                f"structure_constants must have shape {(dim,) * 3}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "structure_constants", c)
        if self.matrix_basis is not None:
            mb = check_square(self.matrix_basis, "matrix_basis")
            if mb.ndim != 3 or mb.shape[0] != dim:
                raise DimensionMismatch(
                    f"matrix_basis must have shape ({dim}, m, m), got {mb.shape}")
            mb.setflags(write=False)
            object.__setattr__(self, "matrix_basis", mb)
            flat = mb.reshape(dim, -1)
            object.__setattr__(self, "_pinv", np.linalg.pinv(flat))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != dim:
                raise DimensionMismatch("need one label per basis element")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_matrices(cls, basis, labels=None):
        """Build a spec from matrices, reading structure constants off the
        commutators.  Raises if a commutator leaves the span."""
        mb = check_square(basis, "matrix_basis")
        dim = mb.shape[0]
        pinv = np.linalg.pinv(mb.reshape(dim, -1))
        comm = np.einsum("iab,jbc->ijac", mb, mb) - np.einsum("jab,ibc->ijac", mb, mb)
        flat = comm.reshape(dim, dim, -1)
        c = flat @ pinv
        c[np.abs(c) < 1e-13] = 0.0
        resid = np.max(np.abs(c @ mb.reshape(dim, -1) - flat)) if dim else 0.0
        if resid > 1e-10:
            raise ValueError(f"matrix basis is not closed under commutators (residual {resid:.2e})")
        return cls(dim, c, mb, labels)

    @property
    def matrix_size(self):
        if self.matrix_basis is None:
            return None
        return self.matrix_basis.shape[1]

    def _require_matrices(self):
        if self.matrix_basis is None:
            raise ValueError("operation needs a matrix basis")

    def matrix(self, X):
        """Matrix of the algebra vector ``X`` (batched over leading axes)."""
        self._require_matrices()
        X = check_vector(X, self.dim, "X")
        return np.tensordot(X, self.matrix_basis, axes=([-1], [0]))

    def coords(self, M, return_residual=False):
        """Expand matrices in the basis by least squares."""
        self._require_matrices()
        M = np.asarray(M, dtype=float)
        m = self.matrix_size
        flat = M.reshape(M.shape[:-2] + (m * m,))
        X = flat @ self._pinv
        if not return_residual:
            return X
        back = X @ self.matrix_basis.reshape(self.dim, -1)
        resid = np.linalg.norm(back - flat, axis=-1)
        return X, resid

    def bracket(self, X, Y):
        return bracket(self, X, Y)


def bracket(spec, X, Y):
    """Lie bracket ``[X, Y]`` in coordinates; broadcasts over leading axes."""
    X = check_vector(X, spec.dim, "X")
    Y = check_vector(Y, spec.dim, "Y")
    return np.einsum("...i,...j,ijk->...k", X, Y, spec.structure_constants)


def bracket_span(spec, A, B):
    """All brackets of rows of ``A`` with rows of ``B``, as rows."""
    A = check_basis(A, spec.dim)
    B = check_basis(B, spec.dim)
    out = np.einsum("ai,bj,ijk->abk", A, B, spec.structure_constants)
    return out.reshape(-1, spec.dim)


def ad(spec, X):
    """Matrix of ``Y -> [X, Y]``."""
    X = check_vector(X, spec.dim, "X")
    return np.einsum("...i,ijk->...kj", X, spec.structure_constants)


# -- exponential / logarithm -------------------------------------------------

_PADE_ORDER = 8
_PADE = np.array([
    factorial(2 * _PADE_ORDER - k) * factorial(_PADE_ORDER)
    / (factorial(2 * _PADE_ORDER) * factorial(k) * factorial(_PADE_ORDER - k))
    for k in range(_PADE_ORDER + 1)
])
# 1-norm bound after scaling; the [8/8] Pade error there is below 1e-18
_THETA = 1.0


def mat_exp(X):
    """Matrix exponential by scaling and squaring with a diagonal [8/8]
    Pade approximant.

    Accepts a stack of matrices ``(..., m, m)``.  The whole stack shares one
    scaling power, chosen from its largest 1-norm.
    """
    A = np.asarray(X, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimensionMismatch(f"X must be square, got shape {A.shape}")
    if A.size == 0:
        return A.copy()
    norm = float(np.max(np.abs(A).sum(axis=-2)))
    s = 0
    if norm > _THETA:
        s = int(np.ceil(np.log2(norm / _THETA)))
        A = A / 2.0 ** s
    eye = np.eye(A.shape[-1])
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    A8 = A4 @ A4
    c = _PADE
    U = A @ (c[1] * eye + c[3] * A2 + c[5] * A4 + c[7] * A6)
    V = c[0] * eye + c[2] * A2 + c[4] * A4 + c[6] * A6 + c[8] * A8
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


def mat_log(g, radius=0.9):
    """Principal logarithm of a group element close to the identity.

    Raises :class:`OutOfChartDomain` when ``||g - I||_2 >= radius`` or when
    the spectrum touches the closed negative real axis.
    """
    g = check_square(g, "g", allow_batch=False)
    dist = np.linalg.norm(g - np.eye(g.shape[0]), 2)
    eig = np.linalg.eigvals(g)
    on_cut = np.any((np.abs(eig.imag) < 1e-12) & (eig.real <= 0.0))
    if on_cut:
        raise OutOfChartDomain("spectrum meets the branch cut of the logarithm")
    if dist >= radius:
        raise OutOfChartDomain(f"||g - I|| = {dist:.3g} exceeds the chart radius {radius}")
    L = scipy.linalg.logm(g)
    return np.real(L)


def exp_algebra(spec, X):
    """Group element ``exp(X)`` for an algebra vector ``X``."""
    return mat_exp(spec.matrix(X))


def Ad(spec, g, tol=DEFAULT_TOL):
    """Matrix of ``X -> g X g^-1`` on algebra coordinates.

    Column ``i`` holds the coordinates of ``g B_i g^-1``.
    """
    spec._require_matrices()
    g = check_square(g, "g", allow_batch=False)
    if g.shape[0] != spec.matrix_size:
        raise DimensionMismatch("group element and matrix basis differ in size")
    ginv = np.linalg.inv(g)
    conj = g @ spec.matrix_basis @ ginv
    coeffs, resid = spec.coords(conj, return_residual=True)
    scale = max(1.0, float(np.max(np.linalg.norm(conj.reshape(spec.dim, -1), axis=1))))
    if np.max(resid) > tol * scale:
        raise NotAdInvariant(
            f"conjugation leaves the span of the basis (residual {np.max(resid):.2e})")
    coeffs[np.abs(coeffs) < 1e-14] = 0.0
    return coeffs.T


# -- Killing form and invariants ---------------------------------------------

def killing_matrix(spec):
    c = spec.structure_constants
    # K_ij = trace(ad e_i ad e_j) = sum_{k,l} c[i,l,k] c[j,k,l]
    return np.einsum("ilk,jkl->ij", c, c)


def killing_form(spec, X, Y):
    X = check_vector(X, spec.dim, "X")
    Y = check_vector(Y, spec.dim, "Y")
    return float(X @ killing_matrix(spec) @ Y)


def _constant_scale(spec):
    return max(float(np.max(np.abs(spec.structure_constants))), 1.0)


def killing_signature(spec, rtol=1e-8):
    """(number of positive, number of negative) eigenvalues."""
    eig = np.linalg.eigvalsh(killing_matrix(spec))
    cut = rtol * _constant_scale(spec) ** 2 * spec.dim
    return int(np.sum(eig > cut)), int(np.sum(eig < -cut))


def derived_series(spec, rtol=1e-8):
    """Dimensions of g, [g, g], [[g, g], [g, g]], ... until they stabilise."""
    scale = _constant_scale(spec)
    cur = np.eye(spec.dim)
    dims = [spec.dim]
    while cur.shape[0]:
        nxt = span_basis(bracket_span(spec, cur, cur), rtol, scale)
        if nxt.shape[0] == cur.shape[0]:
            break
        dims.append(nxt.shape[0])
        cur = nxt
    return dims


def lower_central_series(spec, rtol=1e-8):
    scale = _constant_scale(spec)
    full = np.eye(spec.dim)
    cur = full
    dims = [spec.dim]
    while cur.shape[0]:
        nxt = span_basis(bracket_span(spec, full, cur), rtol, scale)
        if nxt.shape[0] == cur.shape[0]:
            break
        dims.append(nxt.shape[0])
        cur = nxt
    return dims


def center_basis(spec, rtol=1e-8):
    # X is central iff sum_i X_i c[i, j, k] = 0 for all j, k
    c = spec.structure_constants
    M = c.reshape(spec.dim, -1).T
    return null_space(M, rtol, _constant_scale(spec))


@dataclass(frozen=True)
class Fingerprint:
    """Basis-independent invariants; equality is necessary for isomorphism."""

    dim: int
    derived_series: tuple
    lower_central_series: tuple
    center_dim: int
    killing_signature: tuple

    def as_dict(self):
        return {
            "dim": self.dim,
            "derived_series": list(self.derived_series),
            "lower_central_series": list(self.lower_central_series),
            "center_dim": self.center_dim,
            "killing_signature": list(self.killing_signature),
        }


def fingerprint(spec, rtol=1e-8):
    return Fingerprint(
        dim=spec.dim,
        derived_series=tuple(derived_series(spec, rtol)),
        lower_central_series=tuple(lower_central_series(spec, rtol)),
        center_dim=int(center_basis(spec, rtol).shape[0]),
        killing_signature=killing_signature(spec, rtol),
    )


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    antisymmetry: float
    jacobi: float
    matrix_consistency: Optional[float]
    matrix_independent: Optional[bool]
    tol: float

    @property
    def passed(self):
        ok = self.antisymmetry <= self.tol and self.jacobi <= self.tol
        if self.matrix_consistency is not None:
            ok = ok and self.matrix_consistency <= self.tol and bool(self.matrix_independent)
        return ok

    def as_dict(self):
        return {
            "antisymmetry": self.antisymmetry,
            "jacobi": self.jacobi,
            "matrix_consistency": self.matrix_consistency,
            "matrix_independent": self.matrix_independent,
            "tol": self.tol,
            "passed": self.passed,
        }


def jacobi_residual(spec):
    c = spec.structure_constants
    # [e_i, [e_j, e_l]] + [e_j, [e_l, e_i]] + [e_l, [e_i, e_j]]
    t1 = np.einsum("jlm,imk->ijlk", c, c)
    t2 = np.einsum("lim,jmk->ijlk", c, c)
    t3 = np.einsum("ijm,lmk->ijlk", c, c)
    return float(np.max(np.abs(t1 + t2 + t3)))


def antisymmetry_residual(spec):
    c = spec.structure_constants
    return float(np.max(np.abs(c + c.transpose(1, 0, 2))))


def validate(spec, tol=DEFAULT_TOL):
    """Residuals of the Lie algebra axioms and of matrix/constant agreement."""
    consistency = independent = None
    if spec.matrix_basis is not None:
        mb = spec.matrix_basis
        comm = np.einsum("iab,jbc->ijac", mb, mb) - np.einsum("jab,ibc->ijac", mb, mb)
        pred = np.einsum("ijk,kab->ijab", spec.structure_constants, mb)
        consistency = float(np.max(np.abs(comm - pred)))
        independent = numerical_rank(mb.reshape(spec.dim, -1), rtol=1e-10) == spec.dim
    return ValidationReport(
        antisymmetry=antisymmetry_residual(spec),
        jacobi=jacobi_residual(spec),
        matrix_consistency=consistency,
        matrix_independent=independent,
        tol=tol,
    )
