"""Shared callables and small meshes used across the test modules."""

import numpy as np

from epsstokes.mesh import Mesh


def zero_scalar(x, y):
    return np.zeros(np.broadcast(x, y).shape)


def zero_vec(x, y):
    return np.zeros(np.broadcast(x, y).shape + (2,))


def unit_x(x, y):
    return np.stack([np.ones_like(x), np.zeros_like(y)], axis=-1)


def linear_x_minus_half(x, y):
    return x - 0.5


def ref_triangle_mesh() -> Mesh:
    """Single reference triangle (0,0), (1,0), (0,1)."""
    s = np.sqrt(0.5)
    return Mesh(
        vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        triangles=np.array([[0, 1, 2]]),
        boundary_edges=np.array([[0, 1, 1], [1, 2, 2], [2, 0, 4]]),
        edge_normals=np.array([[0.0, -1.0], [s, s], [-1.0, 0.0]]),
    )


def dense_from(mat):
    """Dense array from a CsrMatrix (small testing systems only)."""
    return mat.to_dense()
