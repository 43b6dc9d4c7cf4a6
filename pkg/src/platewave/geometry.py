"""Parametric smooth closed curves and uniform-parameter boundary meshes.

Curves are 2pi-periodic, counterclockwise, with outward unit normal and
kappa > 0 for convex curves (a circle of radius r has kappa = 1/r).  All
parameter derivatives are closed-form, never finite differences.
"""

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "SmoothClosedCurve",
    "BoundaryMesh",
    "star_curve",
    "circle_curve",
    "cavity_curve",
    "translate",
    "curve_frame",
    "discretize",
    "points_inside",
]

# Base kite shape for the cavity stand-in, before scaling to unit diameter.
_CAVITY_BASE = (0.65, 1.5)


@dataclass(frozen=True)
class SmoothClosedCurve:
    """A smooth simple closed curve gamma(t), t in [0, 2pi).

    kind        'star' (radial perturbation), 'circle', or 'cavity'
                (kite-shaped stand-in with a concave region).
    scale       overall scale factor (circle radius / star base radius).
    amplitude   perturbation amplitude a for 'star' (|a| < 1).
    arms        integer arm count m for 'star'.
    center      translation offset; translated copies share all frame data.
    """

    kind: str
    scale: float = 1.0
    amplitude: float = 0.0
    arms: int = 0
    center: tuple = (0.0, 0.0)

    def position(self, t):
        return self.derivatives(t, orders=(0,))[0]

    def derivatives(self, t, orders=(0, 1, 2, 3)):
        """Closed-form gamma and its first three t-derivatives, shape (..., 2)."""
        t = np.asarray(t, dtype=float)
        out = {}
        if self.kind in ("star", "circle"):
            a, m, s = self.amplitude, self.arms, self.scale
            ct, st = np.cos(t), np.sin(t)
            e = np.stack([ct, st], axis=-1)
            ep = np.stack([-st, ct], axis=-1)
            r = 1.0 + a * np.cos(m * t)
            r1 = -a * m * np.sin(m * t)
            r2 = -a * m * m * np.cos(m * t)
            r3 = a * m ** 3 * np.sin(m * t)
            r, r1, r2, r3 = (x[..., None] for x in (r, r1, r2, r3))
            out[0] = s * r * e
            out[1] = s * (r1 * e + r * ep)
            out[2] = s * (r2 * e + 2 * r1 * ep - r * e)
            out[3] = s * (r3 * e + 3 * r2 * ep - 3 * r1 * e - r * ep)
        elif self.kind == "cavity":
            b, c = _CAVITY_BASE
            s = self.scale
            ct, st = np.cos(t), np.sin(t)
            c2, s2 = np.cos(2 * t), np.sin(2 * t)
            out[0] = s * np.stack([ct + b * c2 - b, c * st], axis=-1)
            out[1] = s * np.stack([-st - 2 * b * s2, c * ct], axis=-1)
            out[2] = s * np.stack([-ct - 4 * b * c2, -c * st], axis=-1)
            out[3] = s * np.stack([st + 8 * b * s2, -c * ct], axis=-1)
        else:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if any(o == 0 for o in orders):
            out[0] = out[0] + np.asarray(self.center, dtype=float)
        return tuple(out[o] for o in orders)

    def diameter(self, samples: int = 720) -> float:
        p = self.position(np.linspace(0.0, 2 * np.pi, samples, endpoint=False))
        d = p[:, None, :] - p[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())


def star_curve(a: float, m: int, scale: float = 1.0) -> SmoothClosedCurve:
    """gamma(t) = scale*(1 + a*cos(m t))(cos t, sin t).

    Rejects |a| >= 1: the radial function may vanish and the curve
    degenerate or self-intersect.
    """
    if abs(a) >= 1.0:
        raise ValueError(f"perturbation amplitude must satisfy |a| < 1, got {a}")
    if m < 0 or int(m) != m:
        raise ValueError(f"arm count must be a nonnegative integer, got {m}")
    return SmoothClosedCurve(kind="star", scale=scale, amplitude=float(a), arms=int(m))


def circle_curve(radius: float = 1.0) -> SmoothClosedCurve:
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    return SmoothClosedCurve(kind="circle", scale=float(radius))


def cavity_curve(scale: float | None = None) -> SmoothClosedCurve:
    """Kite-shaped stand-in geometry with a concave region.

    The published experiments show this domain only as a figure; this is a
    documented stand-in, gamma(t) = (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)
    scaled to unit diameter by default.  All outputs derived from it should
    be read as stand-in geometry.
    """
    if scale is None:
        base = SmoothClosedCurve(kind="cavity", scale=1.0)
        scale = 1.0 / base.diameter()
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return SmoothClosedCurve(kind="cavity", scale=float(scale))


def translate(curve: SmoothClosedCurve, offset) -> SmoothClosedCurve:
    """Translated copy; tangent, normal, kappa and kappa' are unchanged."""
    off = np.asarray(offset, dtype=float)
    c = np.asarray(curve.center, dtype=float) + off
    return replace(curve, center=(float(c[0]), float(c[1])))


def curve_frame(curve: SmoothClosedCurve, t):
    """Frame data at parameter t: (position, tangent, normal, speed, kappa, kappa').

    kappa = (x'y'' - y'x'')/|gamma'|^3 with counterclockwise orientation and
    outward normal, so a circle of radius r has kappa = +1/r.  kappa' is the
    arc-length derivative (dkappa/dt)/|gamma'|.
    """
    g0, g1, g2, g3 = curve.derivatives(t, orders=(0, 1, 2, 3))
    x1, y1 = g1[..., 0], g1[..., 1]
    x2, y2 = g2[..., 0], g2[..., 1]
    x3, y3 = g3[..., 0], g3[..., 1]
    speed = np.sqrt(x1 * x1 + y1 * y1)
    tangent = g1 / speed[..., None]
    normal = np.stack([tangent[..., 1], -tangent[..., 0]], axis=-1)
    cross = x1 * y2 - y1 * x2
    kappa = cross / speed ** 3
    dcross = x1 * y3 - y1 * x3
    dkappa_dt = dcross / speed ** 3 - 3 * cross * (x1 * x2 + y1 * y2) / speed ** 5
    kappa_prime = dkappa_dt / speed
    return g0, tangent, normal, speed, kappa, kappa_prime


@dataclass(frozen=True)
class BoundaryMesh:
    """Uniform-parameter Nystrom mesh: t_j = 2pi j / N, weight h = 2pi/N."""

    curve: SmoothClosedCurve
    t: np.ndarray
    positions: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    speeds: np.ndarray
    kappa: np.ndarray
    kappa_prime: np.ndarray
    h: float = field(default=0.0)

    @property
    def n(self) -> int:
        return self.t.size

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid arclength weights h*|gamma'|."""
        return self.h * self.speeds

    @property
    def perimeter(self) -> float:
        return float(self.weights.sum())

    def max_spacing(self) -> float:
        return float(self.h * self.speeds.max())

    def contains(self, points) -> np.ndarray:
        return points_inside(self.positions, points)


def discretize(curve: SmoothClosedCurve, n: int) -> BoundaryMesh:
    """Evaluate all frame data on the uniform grid t_j = 2pi j / N.

    N must be even and at least 16 (quadrature corrections and the negation
    symmetry of downstream direction sets both need this).
    """
    if n < 16 or n % 2 != 0:
        raise ValueError(f"node count must be even and >= 16, got {n}")
    t = 2 * np.pi * np.arange(n) / n
    pos, tan, nor, speed, kap, kapp = curve_frame(curve, t)
    return BoundaryMesh(
        curve=curve,
        t=t,
        positions=pos,
        tangents=tan,
        normals=nor,
        speeds=speed,
        kappa=kap,
        kappa_prime=kapp,
        h=2 * np.pi / n,
    )


def points_inside(polygon: np.ndarray, points) -> np.ndarray:
    """Even-odd ray-casting test against the closed polygon (N, 2).

    Vectorized over query points; points exactly on an edge may land on
    either side, which is acceptable for the localization metrics.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    px, py = polygon[:, 0], polygon[:, 1]
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    inside = np.zeros(pts.shape[0], dtype=bool)
    for j in range(polygon.shape[0]):
        cond = (py[j] > y) != (qy[j] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = px[j] + (y - py[j]) * (qx[j] - px[j]) / (qy[j] - py[j])
        inside ^= cond & (x < xcross)
    return inside
