"""Sampling-method reconstructions from a far-field matrix.

LSM: one SVD of the weighted matrix (2 pi / N_d) U is reused for every
sampling point; the Tikhonov-regularized density follows from the filter
factors sigma/(sigma^2 + alpha), and 1/||g_z|| is the indicator.

DSM: two direct indicators,

    I1(z) = |<phi_z, F phi_z>|^(rho1/2),    I2(z) = ||F phi_z||^rho2,

with the discrete inner products carrying the trapezoid weight 2 pi / N so
values approximate their continuous counterparts.  Peaks mark the cavity;
away from it both indicators decay like a negative power of the distance.
"""

import csv as _csv
from dataclasses import dataclass, replace

import numpy as np

from ._parallel import map_chunks
from .geometry import points_inside
from .kernels import farfield_constant
from .operator import DirectionSet, FarFieldMatrix

__all__ = [
    "SamplingGrid",
    "IndicatorField",
    "TikhonovSolver",
    "rhs_vector",
    "lsm_solve",
    "lsm_indicator",
    "lsm_norms_at",
    "dsm_indicators",
    "dsm_values_at",
    "localization_metrics",
    "log_rescale",
    "field_to_csv",
    "field_to_pgm",
]

_GRID_CHUNK = 8192  # sampling points per evaluation batch; fixed for determinism


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform rectangular grid, row-major over (y, x)."""

    box: tuple  # (x0, x1, y0, y1)
    nx: int
    ny: int

    def __post_init__(self):
        x0, x1, y0, y1 = self.box
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 points per direction")
        if x1 <= x0 or y1 <= y0:
            raise ValueError(f"degenerate bounding box {self.box}")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.box[0], self.box[1], self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.box[2], self.box[3], self.ny)

    @property
    def points(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.xs, self.ys, indexing="xy")
        return np.stack([gx.ravel(), gy.ravel()], axis=-1)

    @property
    def cell(self) -> tuple:
        return (
            (self.box[1] - self.box[0]) / (self.nx - 1),
            (self.box[3] - self.box[2]) / (self.ny - 1),
        )


@dataclass(frozen=True)
class IndicatorField:
    """Sampled nonnegative indicator values with method metadata."""

    grid: SamplingGrid
    values: np.ndarray
    method: str
    parameter: float
    rescaled: bool = False

    def rescale(self) -> "IndicatorField":
        """Scale so the maximum value is one."""
        top = self.values.max()
        if top <= 0:
            raise ValueError("cannot rescale an all-zero indicator field")
        return replace(self, values=self.values / top, rescaled=True)

    @property
    def image(self) -> np.ndarray:
        return self.values.reshape(self.grid.ny, self.grid.nx)


class TikhonovSolver:
    """SVD of the weighted far-field matrix, shared across sampling points."""

    def __init__(self, ff: FarFieldMatrix):
        self.ff = ff
        self.weight = 2 * np.pi / ff.dirs.n
        weighted = self.weight * ff.data
        self.svd_u, self.sigma, self.svd_vh = np.linalg.svd(weighted, full_matrices=False)
        recon = (self.svd_u * self.sigma) @ self.svd_vh
        err = np.linalg.norm(weighted - recon)
        if err > 1e-10 * self.sigma[0]:
            raise RuntimeError(f"SVD reconstruction residual too large: {err:.2e}")

    def filtered(self, alpha: float) -> np.ndarray:
        if alpha <= 0:
            raise ValueError(f"regularization parameter must be positive, got {alpha}")
        return self.sigma / (self.sigma ** 2 + alpha)

    def solve_many(self, rhs: np.ndarray, alpha: float) -> np.ndarray:
        """g columns solving (alpha I + F*F) g = F* rhs for each rhs column."""
        proj = self.svd_u.conj().T @ rhs
        return self.svd_vh.conj().T @ (self.filtered(alpha)[:, None] * proj)

    def gnorm_many(self, rhs: np.ndarray, alpha: float) -> np.ndarray:
        """Weighted discrete L2 norms of the solutions, column-wise.

        The right singular vectors are orthonormal, so the norm is taken
        before rotating back.
        """
        proj = self.svd_u.conj().T @ rhs
        coef = self.filtered(alpha)[:, None] * proj
        return np.sqrt(self.weight) * np.linalg.norm(coef, axis=0)


def rhs_vector(z, directions: DirectionSet, k: float, scaled: bool) -> np.ndarray:
    """Point-source far-field data at sampling point z.

    scaled=True carries the full far-field constant (LSM right-hand side);
    scaled=False is the bare exponential used by the DSM.
    """
    z = np.asarray(z, dtype=float)
    vals = np.exp(-1j * k * directions.vectors @ z)
    return farfield_constant(k) * vals if scaled else vals


def _rhs_matrix(points, directions: DirectionSet, k: float, scaled: bool) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.exp(-1j * k * directions.vectors @ points.T)
    return farfield_constant(k) * vals if scaled else vals


def lsm_solve(solver: TikhonovSolver, phi_z: np.ndarray, alpha: float) -> np.ndarray:
    """Tikhonov-regularized density for a single sampling point."""
    return solver.solve_many(np.asarray(phi_z).reshape(-1, 1), alpha)[:, 0]


def lsm_norms_at(solver: TikhonovSolver, points, alpha: float,
                 workers: int = 1) -> np.ndarray:
    """||g_z|| at arbitrary sampling points (weighted discrete norm)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))

    def chunk_norms(chunk):
        rhs = _rhs_matrix(chunk, solver.ff.recv, solver.ff.k, scaled=True)
        return solver.gnorm_many(rhs, alpha)

    return np.concatenate(map_chunks(chunk_norms, points, _GRID_CHUNK, workers))


def lsm_indicator(grid: SamplingGrid, ff: FarFieldMatrix, alpha: float,
                  solver: TikhonovSolver = None, workers: int = 1) -> IndicatorField:
    """1/||g_z|| on the grid; blows down outside the cavity as alpha shrinks."""
    if solver is None:
        solver = TikhonovSolver(ff)
    norms = lsm_norms_at(solver, grid.points, alpha, workers)
    return IndicatorField(grid=grid, values=1.0 / norms, method="lsm",
                          parameter=float(alpha))


def dsm_values_at(ff: FarFieldMatrix, points, rho1: float = 2.0, rho2: float = 1.0,
                  workers: int = 1):
    """Raw DSM indicator values at arbitrary points; returns (I1, I2)."""
    if rho1 <= 0 or rho2 <= 0:
        raise ValueError("DSM exponents must be positive")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    w_d = 2 * np.pi / ff.dirs.n
    w_r = 2 * np.pi / ff.recv.n

    def chunk_vals(chunk):
        phi_d = _rhs_matrix(chunk, ff.dirs, ff.k, scaled=False)
        applied = w_d * (ff.data @ phi_d)
        phi_r = _rhs_matrix(chunk, ff.recv, ff.k, scaled=False)
        inner = w_r * (phi_r.conj() * applied).sum(axis=0)
        norm = np.sqrt(w_r) * np.linalg.norm(applied, axis=0)
        return np.stack([np.abs(inner) ** (rho1 / 2.0), norm ** rho2])

    both = np.concatenate(map_chunks(chunk_vals, points, _GRID_CHUNK, workers), axis=1)
    return both[0], both[1]


def dsm_indicators(grid: SamplingGrid, ff: FarFieldMatrix, rho1: float = 2.0,
                   rho2: float = 1.0, workers: int = 1):
    """Both DSM indicator fields on the grid."""
    v1, v2 = dsm_values_at(ff, grid.points, rho1, rho2, workers)
    return (
        IndicatorField(grid=grid, values=v1, method="dsm1", parameter=float(rho1)),
        IndicatorField(grid=grid, values=v2, method="dsm2", parameter=float(rho2)),
    )


# --- localization metrics --------------------------------------------------


def _curve_polygon(curve, samples: int = 512) -> np.ndarray:
    t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    return curve.position(t)


def _polygon_centroid(poly: np.ndarray) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def _find_peaks(field: IndicatorField, obstacle_scale: float, level: float):
    """Separated peaks by blob detection at the obstacle scale.

    The field is smoothed with a Gaussian of a quarter of the expected
    obstacle diameter, which fuses the annular ridge an individual cavity
    produces into a single blob while damping sub-wavelength sidelobes;
    local maxima of the smoothed field above level*max are the peaks.
    """
    from scipy import ndimage

    img = field.image
    cx, cy = field.grid.cell
    sigma = 0.25 * obstacle_scale
    sm = ndimage.gaussian_filter(img, sigma=(sigma / cy, sigma / cx), mode="nearest")
    is_max = sm == ndimage.maximum_filter(sm, size=3, mode="nearest")
    is_max &= sm >= level * sm.max()
    labels, count = ndimage.label(is_max)
    peaks = []
    for lab in range(1, count + 1):
        iy, ix = np.nonzero(labels == lab)
        j = np.argmax(sm[iy, ix])
        peaks.append((np.array([field.grid.xs[ix[j]], field.grid.ys[iy[j]]]),
                      float(sm[iy[j], ix[j]])))
    peaks.sort(key=lambda t: -t[1])
    return peaks


def localization_metrics(field: IndicatorField, truth_curves,
                         peak_level: float = 0.5,
                         decile: float = 0.9) -> dict:
    """Quantitative localization record against the true cavity curve(s).

    containment_top_decile: fraction of grid points whose value reaches the
    top decile of the (rescaled) range that lie inside a truth curve.
    centroid_error: distance between the indicator mass centroid and the
    area centroid of the truth.
    peak_count / obstacle_detected: persistence-dominant maxima and, per
    obstacle, whether a peak lies inside or within one grid cell.
    """
    if not isinstance(truth_curves, (list, tuple)):
        truth_curves = [truth_curves]
    vmax = field.values.max()
    if vmax <= 0:
        raise ValueError("degenerate all-zero indicator field")
    polys = [_curve_polygon(c) for c in truth_curves]
    points = field.grid.points
    top = field.values >= decile * vmax
    inside_any = np.zeros(points.shape[0], dtype=bool)
    for poly in polys:
        inside_any |= points_inside(poly, points)
    containment = float(inside_any[top].mean()) if top.any() else 0.0
    mass_centroid = (points * field.values[:, None]).sum(0) / field.values.sum()
    centroids = [_polygon_centroid(p) for p in polys]
    true_centroid = np.mean(centroids, axis=0)
    cell = field.grid.cell
    scale = float(np.mean([
        np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1)).max() for p in polys
    ]))
    peaks = _find_peaks(field, scale, peak_level)
    detected = []
    for poly in polys:
        hit = False
        for p, _ in peaks:
            inside = bool(points_inside(poly, p[None, :])[0])
            near = np.sqrt(((poly - p) ** 2).sum(-1)).min() <= max(cell)
            if inside or near:
                hit = True
                break
        detected.append(hit)
    return {
        "containment_top_decile": containment,
        "centroid_error": float(np.linalg.norm(mass_centroid - true_centroid)),
        "peak_count": len(peaks),
        "peaks": [[float(p[0]), float(p[1])] for p, _ in peaks],
        "obstacle_detected": detected,
        "top_decile_points": int(top.sum()),
    }


# --- exports ----------------------------------------------------------------


def log_rescale(field: IndicatorField) -> IndicatorField:
    """Contrast transform for heatmap export: log, then affine range rescale.

    Used when plotting the sharply peaked LSM indicator; raw values must be
    positive.  Metrics always run on the untransformed field.
    """
    logv = np.log(field.values)
    lo, hi = logv.min(), logv.max()
    vals = (logv - lo) / (hi - lo) if hi > lo else np.ones_like(logv)
    return replace(field, values=vals, rescaled=True)


def field_to_csv(field: IndicatorField, path) -> None:
    points = field.grid.points
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["x", "y", "value"])
        for (x, y), v in zip(points, field.values):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(v))])


def field_to_pgm(field: IndicatorField, path) -> None:
    """8-bit binary PGM of the rescaled field, rows from y0 upward."""
    scaled = field if field.rescaled else field.rescale()
    img = np.clip(np.rint(scaled.image * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())
