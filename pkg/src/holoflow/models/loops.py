"""Parallel transport around closed loops and holonomy matrices."""
import numpy as np
from scipy.linalg import logm

from ..errors import InvalidInput
from .symmetric import d_to_stereographic, to_stereographic


def _rk4_transport(christoffel, velocity, V, steps):
    """Transport the columns of ``V`` for ``s in [0, 1]``; both callables take ``s``."""
    def rhs(s, V):
        return -np.einsum("kij,i,jc->kc", christoffel(s), velocity(s), V)

    h = 1.0 / steps
    for k in range(steps):
        s = k * h
        k1 = rhs(s, V)
        k2 = rhs(s + h / 2, V + h / 2 * k1)
        k3 = rhs(s + h / 2, V + h / 2 * k2)
        k4 = rhs(s + h, V + h * k3)
        V = V + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return V


def loop_holonomy(geom, loop, substeps=8):
    """Holonomy of a closed loop of grid-adjacent nodes, as an orthogonal matrix in the base frame.

    ``loop`` lists node index tuples; the first node is the base point and
    the loop must return to it.  Each step moves by one node along one axis
    (periodic wrap allowed).  Christoffels are linearly interpolated along
    each edge.
    """
    grid = geom.grid
    raw = [tuple(int(i) for i in p) for p in loop]
    if len(raw) < 2:
        raise InvalidInput("a loop needs at least two nodes")
    shape = grid.shape
    wrap = lambda p: tuple(i % N for i, N in zip(p, shape))
    if wrap(raw[0]) != wrap(raw[-1]):
        raise InvalidInput("loop is not closed")
    G = geom.christoffels
    n = geom.n
    V = np.eye(n)
    for a, b in zip(raw[:-1], raw[1:]):
        d = np.subtract(b, a)
        if np.sum(np.abs(d)) != 1:
            raise InvalidInput(f"nodes {a} and {b} are not grid-adjacent")
        dx = d * np.asarray(grid.spacing)
        Ga, Gb = G[wrap(a)], G[wrap(b)]
        V = _rk4_transport(lambda s: (1 - s) * Ga + s * Gb, lambda s: dx, V, substeps)
    E = geom.frames[wrap(raw[0])]
    return np.linalg.solve(E, V @ E)


def rectangle_loop(base, axes, sizes):
    """Counter-clockwise rectangle of grid nodes in the plane of two axes."""
    (i, j), (ni, nj) = axes, sizes
    p = list(base)
    out = [tuple(p)]
    for ax, count, sgn in ((i, ni, 1), (j, nj, 1), (i, ni, -1), (j, nj, -1)):
        for _ in range(count):
            p[ax] += sgn
            out.append(tuple(p))
    return out


def path_holonomy(christoffel, path, metric=None, steps=400):
    """Holonomy along a closed chart path.

    ``path`` is a list of segments ``(x, dx)`` where ``x(s)`` and ``dx(s)``
    give position and velocity for ``s in [0, 1]``.  Returns the coordinate
    transport matrix, or the matrix in a ``metric``-orthonormal frame at the
    base point when ``metric`` is given.
    """
    x_start = np.asarray(path[0][0](0.0), dtype=float)
    n = len(x_start)
    V = np.eye(n)
    for x, dx in path:
        V = _rk4_transport(lambda s: christoffel(np.asarray(x(s))), dx, V, steps)
    x_end = np.asarray(path[-1][0](1.0), dtype=float)
    if np.max(np.abs(x_end - x_start)) > 1e-9:
        raise InvalidInput("path is not closed")
    if metric is None:
        return V
    L = np.linalg.cholesky(metric(x_start))
    E = np.linalg.inv(L).T
    return np.linalg.solve(E, V @ E)


def great_arc(a, b):
    """Unit-speed-in-``s`` great circle arc from ``a`` to ``b`` on the unit sphere."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    theta = np.arccos(np.clip(a @ b, -1, 1))
    u = b - (a @ b) * a
    u = u / np.linalg.norm(u)
    pos = lambda s: np.cos(s * theta) * a + np.sin(s * theta) * u
    vel = lambda s: theta * (-np.sin(s * theta) * a + np.cos(s * theta) * u)
    return pos, vel, theta


def stereographic_polygon(vertices):
    """Closed chart path through sphere ``vertices`` joined by great arcs."""
    verts = [np.asarray(v, float) for v in vertices]
    segs = []
    for a, b in zip(verts, verts[1:] + verts[:1]):
        pos, vel, _ = great_arc(a, b)
        segs.append((
            (lambda pos: lambda s: to_stereographic(pos(s)))(pos),
            (lambda pos, vel: lambda s: d_to_stereographic(pos(s), vel(s)))(pos, vel),
        ))
    return segs


def octant_triangle():
    """The geodesic triangle bounding one octant of the unit two-sphere (area pi/2)."""
    return stereographic_polygon(np.eye(3))


def holonomy_log(P):
    """Real logarithm of an orthogonal holonomy matrix, antisymmetrized."""
    L = np.real(logm(np.asarray(P, dtype=float)))
    return 0.5 * (L - L.T)


def rotation_angle(P):
    """Angle of a 2x2 rotation."""
    return float(np.arctan2(P[1, 0], P[0, 0]))
