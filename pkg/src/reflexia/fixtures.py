"""Reference algebras and symmetric pairs used by the tests and the CLI.

Each ``*_pair`` function returns ``(spec, h_matrix, k_basis)``.
"""

import numpy as np

from .lie import LieAlgebraSpec


def so3():
    L = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        # (L_i)_{jk} = -eps_{ijk}
        L[i, j, k] = -1.0
        L[i, k, j] = 1.0
    return LieAlgebraSpec.from_matrices(L, labels=["L1", "L2", "L3"])


def sl2():
    E = np.array([[0.0, 1.0], [0.0, 0.0]])
    F = np.array([[0.0, 0.0], [1.0, 0.0]])
    H = np.array([[1.0, 0.0], [0.0, -1.0]])
    return LieAlgebraSpec.from_matrices(np.array([E, F, H]), labels=["E", "F", "H"])


def heisenberg():
    """Basis p, q, z with [p, q] = z, realised by strictly upper triangular 3x3."""
    mats = np.zeros((3, 3, 3))
    mats[0, 0, 1] = 1.0  # p
    mats[1, 1, 2] = 1.0  # q
    mats[2, 0, 2] = 1.0  # z
    return LieAlgebraSpec.from_matrices(mats, labels=["p", "q", "z"])


def abelian(dim=3):
    mats = np.zeros((dim, dim + 1, dim + 1))
    for i in range(dim):
        mats[i, i, dim] = 1.0
    return LieAlgebraSpec(dim, np.zeros((dim,) * 3), mats, [f"a{i + 1}" for i in range(dim)])


def so3_pair():
    """so(3), h = diag(1, -1, -1) (rotation by pi about axis 1), k = span(L1)."""
    return so3(), np.diag([1.0, -1.0, -1.0]), np.array([[1.0, 0.0, 0.0]])


def sl2_pair():
    """sl(2, R), h = diag(1, -1), k = span(H)."""
    return sl2(), np.diag([1.0, -1.0]), np.array([[0.0, 0.0, 1.0]])


def heisenberg_central_pair():
    """sigma = (-1, -1, +1) from h = diag(1, -1, 1), k = span(z); H3 fails."""
    return heisenberg(), np.diag([1.0, -1.0, 1.0]), np.array([[0.0, 0.0, 1.0]])


def heisenberg_nongenerating_pair():
    """sigma = (-1, +1, -1) from h = diag(1, -1, -1), k = {0}; H2 fails."""
    return heisenberg(), np.diag([1.0, -1.0, -1.0]), np.zeros((0, 3))


def corrupted_so3_h(angle=0.3):
    """Rotation about axis 1 by pi + angle: normalises k but h^2 != I."""
    t = np.pi + angle
    c, s = np.cos(t), np.sin(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def corrupted_sl2_h(scale=1.2):
    return np.diag([scale, -1.0 / scale])


def so3_plus_r():
    """so(3) + R as block-diagonal 4x4 matrices; the last basis element T
    is central."""
    mats = np.zeros((4, 4, 4))
    mats[:3, :3, :3] = so3().matrix_basis
    mats[3, 3, 3] = 1.0
    return LieAlgebraSpec.from_matrices(mats, labels=["L1", "L2", "L3", "T"])


def so3_plus_r_pair():
    """h = diag(1, -1, -1, 1) fixes T, k = span(L1).

    The chart gains the flat T axis on which every reflexion is the identity,
    so the pair is not transitive at the infinitesimal level (H2 fails).
    """
    return so3_plus_r(), np.diag([1.0, -1.0, -1.0, 1.0]), np.array([[1.0, 0.0, 0.0, 0.0]])
