"""Reference wrap-length solvers used only by the tests.

Shortest-path lengths around a sphere or an infinite cylinder, found by
direct minimization over the two surface tangency points.  The surface arc
is the exact geodesic (great circle on the sphere, helix on the unrolled
cylinder), and an L1 penalty keeps the straight segments from cutting
through the geometry, so the minimizer cannot cheat with an infeasible
path.  Shares no geometry code with the package.
"""

import numpy as np
from scipy.optimize import minimize

_PEN = 10.0  # exact-penalty weight; any value above 1 is sufficient


def _seg_point_depth(p1, p2, c, r):
    """Penetration of segment p1p2 into the sphere (c, r)."""
    d = p2 - p1
    dd = float(d @ d)
    t = 0.0 if dd < 1e-18 else np.clip(float((c - p1) @ d) / dd, 0.0, 1.0)
    return max(0.0, r - float(np.linalg.norm(p1 + t * d - c)))


def _seg_line_depth(p1, p2, c, w, r):
    """Penetration of segment p1p2 into the infinite cylinder (c, w, r)."""
    a = p1 - c
    d = p2 - p1
    A = np.cross(a, w)
    B = np.cross(d, w)
    bb = float(B @ B)
    t = 0.0 if bb < 1e-18 else np.clip(-float(A @ B) / bb, 0.0, 1.0)
    return max(0.0, r - float(np.linalg.norm(A + t * B)))


def sphere_oracle(p1, p2, center, radius):
    """Shortest p1 -> p2 length staying outside the sphere."""
    p1, p2, c = (np.asarray(x, dtype=float) for x in (p1, p2, center))
    r = float(radius)
    if _seg_point_depth(p1, p2, c, r) <= 0.0:
        return float(np.linalg.norm(p2 - p1))

    def sph(th, ph):
        return c + r * np.array([np.cos(ph) * np.cos(th),
                                 np.cos(ph) * np.sin(th), np.sin(ph)])

    def objective(x):
        t1, t2 = sph(x[0], x[1]), sph(x[2], x[3])
        n1, n2 = (t1 - c) / r, (t2 - c) / r
        arc = np.arccos(np.clip(n1 @ n2, -1.0, 1.0))
        pen = _seg_point_depth(p1, t1, c, r) + _seg_point_depth(t2, p2, c, r)
        return (np.linalg.norm(p1 - t1) + r * arc + np.linalg.norm(t2 - p2)
                + _PEN * pen)

    d1, d2 = p1 - c, p2 - c
    th1 = np.arctan2(d1[1], d1[0])
    ph1 = np.arcsin(np.clip(d1[2] / np.linalg.norm(d1), -1.0, 1.0))
    th2 = np.arctan2(d2[1], d2[0])
    ph2 = np.arcsin(np.clip(d2[2] / np.linalg.norm(d2), -1.0, 1.0))
    best = np.inf
    for dph in (0.4, -0.4):
        res = minimize(objective, [th1, ph1 + dph, th2, ph2 + dph],
                       method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-13,
                                "maxiter": 6000, "maxfev": 9000})
        best = min(best, res.fun)
    return float(best)


def cylinder_oracle(p1, p2, center, axis, radius):
    """Shortest p1 -> p2 length staying outside the infinite cylinder."""
    p1, p2, c, w = (np.asarray(x, dtype=float) for x in (p1, p2, center, axis))
    w = w / np.linalg.norm(w)
    r = float(radius)
    u = np.zeros(3)
    u[np.argmin(np.abs(w))] = 1.0
    u = np.cross(w, u)
    u /= np.linalg.norm(u)
    v = np.cross(w, u)
    if _seg_line_depth(p1, p2, c, w, r) <= 0.0:
        return float(np.linalg.norm(p2 - p1))

    def surf(th, z):
        return c + r * (np.cos(th) * u + np.sin(th) * v) + z * w

    def objective(x, wind):
        t1, t2 = surf(x[0], x[1]), surf(x[2], x[3])
        dth = (x[2] - x[0]) % (2 * np.pi)
        if wind:
            dth -= 2 * np.pi
        geo = np.hypot(r * dth, x[3] - x[1])
        pen = _seg_line_depth(p1, t1, c, w, r) + _seg_line_depth(t2, p2, c, w, r)
        return (np.linalg.norm(p1 - t1) + geo + np.linalg.norm(t2 - p2)
                + _PEN * pen)

    d1, d2 = p1 - c, p2 - c
    x0 = [np.arctan2(d1 @ v, d1 @ u), float(d1 @ w),
          np.arctan2(d2 @ v, d2 @ u), float(d2 @ w)]
    best = np.inf
    for wind in (False, True):
        res = minimize(objective, x0, args=(wind,), method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-12,
                                "maxiter": 3000, "maxfev": 4500})
        best = min(best, res.fun)
    return float(best)
