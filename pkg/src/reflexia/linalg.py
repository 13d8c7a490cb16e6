"""Rank decisions and subspace bases shared by the fixpoint loops.

All rank decisions go through :func:`numerical_rank`: a singular value
counts when it exceeds ``rtol * scale`` where ``scale`` defaults to the
largest singular value.  Passing an explicit ``scale`` matters whenever the
matrix itself may be pure noise (e.g. brackets that should vanish).
"""

import numpy as np

# below this the matrix is treated as exactly zero whatever the scale
_ABS_FLOOR = 1e-300


def _cutoff(s, rtol, scale):
    ref = s[0] if scale is None and s.size else (scale or 0.0)
    return max(rtol * ref, _ABS_FLOOR)


def numerical_rank(a, rtol=1e-8, scale=None):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > _cutoff(s, rtol, scale)))


def span_basis(vectors, rtol=1e-8, scale=None):
    """Orthonormal basis (rows) of the span of the rows of ``vectors``.

    The rank is decided by SVD; the basis itself comes from pivoted
    Gram-Schmidt so that coordinate-aligned inputs give coordinate-aligned
    outputs (the pivot is the row with the largest remaining norm, earliest
    row on ties).
    """
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    if v.size == 0:
        return np.zeros((0, v.shape[-1] if v.ndim == 2 else 0))
    rank = numerical_rank(v, rtol, scale)
    work = v.copy()
    basis = []
    for _ in range(rank):
        norms = np.linalg.norm(work, axis=1)
        top = norms.max()
        if top == 0.0:
            break
        i = int(np.flatnonzero(norms >= top * (1.0 - 1e-10))[0])
        if norms[i] == 0.0:
            break
        q = work[i] / norms[i]
        # two passes of re-orthogonalisation keep the basis orthonormal to eps
        for b in basis:
            q = q - (b @ q) * b
        q /= np.linalg.norm(q)
        basis.append(q)
        work = work - np.outer(work @ q, q)
    if not basis:
        return np.zeros((0, v.shape[1]))
    return np.array(basis)


def null_space(a, rtol=1e-8, scale=None):
    """Orthonormal basis (rows) of the kernel of ``a``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n)
    rank = int(np.sum(s > _cutoff(s, rtol, scale)))
    return vt[rank:]


def complement_basis(basis, dim):
    """Orthonormal basis of the orthogonal complement of the row span."""
    basis = np.asarray(basis, dtype=float).reshape(-1, dim)
    if basis.shape[0] == 0:
        return np.eye(dim)
    q = span_basis(basis)
    proj = np.eye(dim) - q.T @ q
    return span_basis(proj, rtol=1e-8, scale=1.0)


def subspace_residual(vectors, basis):
    """Largest distance from a row of ``vectors`` to the span of ``basis``.

    ``basis`` must be orthonormal.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    if vectors.size == 0:
        return 0.0
    basis = np.asarray(basis, dtype=float).reshape(-1, vectors.shape[1])
    rest = vectors - (vectors @ basis.T) @ basis
    return float(np.max(np.linalg.norm(rest, axis=1)))
