"""Supported-plate boundary integral solver.

Assembles the 2N x 2N Nystrom system for the boundary densities, with the
displacement and bending-moment traces as the two block rows, solves it by
dense LU, and evaluates the scattered field and its far-field pattern from
the layer representation.

All four kernels are mixed directional derivatives of the radial profile
phi(|x - y|); they are expanded over perfect matchings of the direction
lists with the radial factors G_j = ((1/r) d/dr)^j phi.  The logarithmic
part of each kernel (the same expansion over the entire profile phi_log)
feeds the spectral product quadrature in `_quadrature`.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve, lapack

from . import kernels as _kern
from ._parallel import LAPACK_LOCK
from ._quadrature import log_factor, log_weights, richardson_even
from .geometry import BoundaryMesh, curve_frame

__all__ = [
    "PlateParams",
    "IncidentTrace",
    "DensityPair",
    "SystemMatrix",
    "ResonanceWarning",
    "kernel_eval",
    "assemble",
    "plane_wave_trace",
    "point_source_trace",
    "solve",
    "eval_scattered",
    "eval_farfield",
    "farfield_rows",
    "point_source_test",
]


class ResonanceWarning(UserWarning):
    """Raised as a warning when the assembled system is nearly singular."""


@dataclass(frozen=True)
class PlateParams:
    """Wavenumber, Poisson ratio, and the derived kernel coefficients."""

    k: float
    nu: float = 0.3

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if not -1.0 < self.nu <= 0.5:
            raise ValueError(f"Poisson ratio must lie in (-1, 0.5], got {self.nu}")

    @property
    def alpha1(self) -> float:
        return 2.0 - self.nu

    @property
    def alpha2(self) -> float:
        return (-1.0 + self.nu) * (7.0 + self.nu) / (3.0 - self.nu)

    @property
    def alpha3(self) -> float:
        return (1.0 - self.nu) * (3.0 + self.nu) / (1.0 + self.nu)

    @property
    def c0(self) -> float:
        return (self.nu - 1.0) * (self.nu + 3.0) * (2.0 * self.nu - 1.0) / (
            2.0 * (3.0 - self.nu)
        )


@dataclass(frozen=True)
class IncidentTrace:
    """Dirichlet and bending-moment traces of an incident field at the nodes."""

    u_val: np.ndarray
    m_val: np.ndarray


@dataclass(frozen=True)
class DensityPair:
    """Boundary densities solving the discrete system, with solve residual."""

    phi1: np.ndarray
    phi2: np.ndarray
    residual: float

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.phi1, self.phi2])


# --- kernel patterns -------------------------------------------------------
#
# Direction names carry their own tag: second letter 'x' differentiates at
# the target, 'y' at the source (one sign flip each).

_SAME_SIDE_DOTS = {
    ("nx", "nx"): 1.0,
    ("tx", "tx"): 1.0,
    ("ny", "ny"): 1.0,
    ("ty", "ty"): 1.0,
    ("nx", "tx"): 0.0,
    ("ny", "ty"): 0.0,
}


def _rep_pattern(params: PlateParams, kappa_y, kappap_y):
    """Density-1 kernel of the layer representation (also the K11 pattern)."""
    return [
        (1.0, ("ny", "ny", "ny")),
        (params.alpha1, ("ny", "ty", "ty")),
        (params.alpha2 * kappa_y, ("ny", "ny")),
        (params.alpha3 * kappap_y, ("ty",)),
    ]


def _block_patterns(params: PlateParams, kappa_y, kappap_y):
    rep = _rep_pattern(params, kappa_y, kappap_y)
    k21 = []
    for lead, weight in ((("nx", "nx"), 1.0), (("tx", "tx"), params.nu)):
        for coef, dirs in rep:
            k21.append((weight * coef, lead + dirs))
    return {
        "11": rep,
        "12": [(1.0, ("ny",))],
        "21": k21,
        "22": [(1.0, ("nx", "nx", "ny")), (params.nu, ("tx", "tx", "ny"))],
    }


def _geometry(mesh: BoundaryMesh):
    return {
        "pos": mesh.positions,
        "tan": mesh.tangents,
        "nor": mesh.normals,
        "kappa": mesh.kappa,
        "kappap": mesh.kappa_prime,
    }


def _offset_geometry(mesh: BoundaryMesh, delta: float):
    pos, tan, nor, _, kap, kapp = curve_frame(mesh.curve, mesh.t + delta)
    return {"pos": pos, "tan": tan, "nor": nor, "kappa": kap, "kappap": kapp}


def _dots(xg, yg, pairwise: bool):
    """Pair difference vector, distance, and all direction dot products."""
    if pairwise:
        xs = {k: v[:, None, ...] for k, v in xg.items() if k in ("pos", "tan", "nor")}
        ys = {k: v[None, :, ...] for k, v in yg.items() if k in ("pos", "tan", "nor")}
    else:
        xs = {k: xg[k] for k in ("pos", "tan", "nor")}
        ys = {k: yg[k] for k in ("pos", "tan", "nor")}
    v = xs["pos"] - ys["pos"]
    r = np.sqrt((v * v).sum(-1))
    dv = {
        "nx": (xs["nor"] * v).sum(-1),
        "tx": (xs["tan"] * v).sum(-1),
        "ny": (ys["nor"] * v).sum(-1),
        "ty": (ys["tan"] * v).sum(-1),
    }
    dp = dict(_SAME_SIDE_DOTS)
    for a, avec in (("nx", xs["nor"]), ("tx", xs["tan"])):
        for b, bvec in (("ny", ys["nor"]), ("ty", ys["tan"])):
            val = (avec * bvec).sum(-1)
            dp[(a, b)] = val
            dp[(b, a)] = val
    return v, r, dv, dp


def _eval_patterns(gtab, dv, dp, patterns):
    """Evaluate kernel patterns against precomputed radial tables and dots."""
    out = {}
    for name, terms in patterns.items():
        total = 0.0
        for coef, dirs in terms:
            m = len(dirs)
            sign = (-1) ** sum(1 for d in dirs if d[1] == "y")
            acc = 0.0
            for pairs, singles in _kern._matchings(m):
                term = gtab[m - len(pairs)]
                for i, j in pairs:
                    term = term * dp[(dirs[i], dirs[j])]
                for i in singles:
                    term = term * dv[dirs[i]]
                acc = acc + term
            total = total + sign * coef * acc
        out[name] = total
    return out


def kernel_eval(block: str, mesh_x: BoundaryMesh, i: int, mesh_y: BoundaryMesh, j: int,
                params: PlateParams):
    """Single kernel entry K_block(x_i, y_j); coincident nodes are rejected."""
    if block not in ("11", "12", "21", "22"):
        raise ValueError(f"unknown kernel block {block!r}")
    if mesh_x is mesh_y and i == j:
        raise ValueError("coincident nodes: the diagonal is handled by quadrature")
    xg = {k: v[i] for k, v in _geometry(mesh_x).items()}
    yg = {k: v[j] for k, v in _geometry(mesh_y).items()}
    v, r, dv, dp = _dots(xg, yg, pairwise=False)
    gt = _kern.radial_g_table(np.atleast_1d(r), params.k, 5, "full")[:, 0]
    pats = _block_patterns(params, yg["kappa"], yg["kappap"])
    return complex(_eval_patterns(gt, dv, dp, {block: pats[block]})[block])


def _kernel_blocks(xg, yg, params, part, pairwise, r_mask=None, r_fill=1.0):
    v, r, dv, dp = _dots(xg, yg, pairwise)
    if pairwise:
        kap = yg["kappa"][None, :]
        kapp = yg["kappap"][None, :]
    else:
        kap = yg["kappa"]
        kapp = yg["kappap"]
    mask = None
    if pairwise and xg is yg:
        mask = np.eye(r.shape[0], dtype=bool)
        r = np.where(mask, 1.0, r)
    if r_mask is not None:
        r = np.where(r_mask, r, r_fill)
    gt = _kern.radial_g_table(r, params.k, 5, part)
    pats = _block_patterns(params, kap, kapp)
    blocks = _eval_patterns(gt, dv, dp, pats)
    if mask is not None:
        for b in blocks.values():
            b[mask] = 0.0
    return blocks


def _diagonal_limits(mesh: BoundaryMesh, params: PlateParams, levels: int):
    """Diagonal values of the log coefficient and smooth remainder per block.

    Symmetric Richardson extrapolation in the parameter offset; the kernel
    is only ever evaluated at shifted, non-coincident points.
    """
    xg = _geometry(mesh)
    samples_a = {b: [] for b in ("11", "12", "21", "22")}
    samples_b = {b: [] for b in ("11", "12", "21", "22")}
    delta0 = mesh.h / 2.0
    for level in range(levels):
        delta = delta0 / 2.0 ** level
        lf = log_factor(delta)
        acc_a, acc_b = {}, {}
        for s in (+delta, -delta):
            yg = _offset_geometry(mesh, s)
            full = _kernel_blocks(xg, yg, params, "full", pairwise=False)
            logc = _kernel_blocks(xg, yg, params, "log", pairwise=False)
            for b in full:
                a_half = 0.5 * logc[b]
                acc_a[b] = acc_a.get(b, 0.0) + 0.5 * a_half
                acc_b[b] = acc_b.get(b, 0.0) + 0.5 * (full[b] - a_half * lf)
        for b in acc_a:
            samples_a[b].append(acc_a[b])
            samples_b[b].append(acc_b[b])
    diag_a = {b: richardson_even(samples_a[b]) for b in samples_a}
    diag_b = {b: richardson_even(samples_b[b]) for b in samples_b}
    return diag_a, diag_b


def _taper(x):
    """C-infinity partition ramp: 1 at x <= 0, 0 at x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        f = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
        g = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
    return f / (f + g)


_LOG_BAND_ZCAP = 16.0  # max k*r inside the log-correction band


def _band_offsets(mesh: BoundaryMesh, params: PlateParams):
    """Taper of the log-correction band, per node offset.

    The log coefficient of the kernels grows like e^{kr} away from the
    diagonal (its modified-Bessel content), while the kernel itself stays
    smooth there; correcting only a band with k r bounded keeps the split
    numerically benign at every wavenumber.  Returns (chi, outer) with chi
    the per-offset taper values and outer the outer band radius in nodes.
    """
    n = mesh.n
    speed_max = float(mesh.speeds.max())
    outer = int(np.floor(_LOG_BAND_ZCAP / (params.k * mesh.h * speed_max)))
    outer = max(8, min(n // 3, outer))
    inner = max(4, outer // 2)
    j = np.arange(n)
    dist = np.minimum(j, n - j)
    chi = _taper((dist - inner) / max(outer - inner, 1))
    chi[dist >= outer] = 0.0
    return chi, outer


def _self_block(mesh: BoundaryMesh, params: PlateParams, levels: int):
    """Quadrature matrices of the four kernel blocks for one boundary."""
    n = mesh.n
    xg = _geometry(mesh)
    full = _kernel_blocks(xg, xg, params, "full", pairwise=True)
    chi_off, _ = _band_offsets(mesh, params)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    chi = chi_off[idx]
    logc = _kernel_blocks(xg, xg, params, "log", pairwise=True,
                          r_mask=chi > 0.0, r_fill=_LOG_BAND_ZCAP / params.k)
    weights_log = log_weights(n)[idx]
    dt = mesh.t[:, None] - mesh.t[None, :]
    lf = log_factor(np.where(idx == 0, np.pi, dt))
    diag_a, diag_b = _diagonal_limits(mesh, params, levels)
    eye = np.eye(n, dtype=bool)
    out = {}
    for b in full:
        a_mat = 0.5 * logc[b] * chi
        b_mat = full[b] - a_mat * lf
        a_mat[eye] = diag_a[b]
        b_mat[eye] = diag_b[b]
        out[b] = (weights_log * a_mat + mesh.h * b_mat) * mesh.speeds[None, :]
    return out


def _cross_block(mesh_x: BoundaryMesh, mesh_y: BoundaryMesh, params: PlateParams):
    """Smooth trapezoid blocks between two distinct boundaries."""
    blocks = _kernel_blocks(_geometry(mesh_x), _geometry(mesh_y), params, "full",
                            pairwise=True)
    w = mesh_y.weights[None, :]
    return {b: blocks[b] * w for b in blocks}


@dataclass
class SystemMatrix:
    """Dense 2N x 2N Nystrom matrix with its cached LU factorization."""

    meshes: list
    params: PlateParams
    matrix: np.ndarray
    lu: tuple = field(repr=False, default=None)
    rcond: float = float("nan")

    @property
    def n_total(self) -> int:
        return self.matrix.shape[0] // 2


def _as_mesh_list(meshes):
    if isinstance(meshes, BoundaryMesh):
        return [meshes]
    return list(meshes)


def assemble(meshes, params: PlateParams, quad_order: int = 10) -> SystemMatrix:
    """Assemble the two-by-two block system and factorize it eagerly.

    quad_order (even) sets the Richardson depth for the diagonal limits;
    it may not exceed N/2 for the smallest boundary.
    """
    meshes = _as_mesh_list(meshes)
    if quad_order < 4 or quad_order % 2 != 0:
        raise ValueError(f"quadrature order must be even and >= 4, got {quad_order}")
    nmin = min(m.n for m in meshes)
    if quad_order > nmin // 2:
        raise ValueError(
            f"quadrature order {quad_order} exceeds N/2 = {nmin // 2} "
            "for the smallest boundary"
        )
    levels = (quad_order - 2) // 2
    sizes = [m.n for m in meshes]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    ntot = int(offsets[-1])
    mat = np.zeros((2 * ntot, 2 * ntot), dtype=complex)
    for a, mesh_x in enumerate(meshes):
        ia = slice(offsets[a], offsets[a + 1])
        for b, mesh_y in enumerate(meshes):
            jb = slice(offsets[b], offsets[b + 1])
            if a == b:
                blocks = _self_block(mesh_x, params, levels)
            else:
                blocks = _cross_block(mesh_x, mesh_y, params)
            mat[ia, jb] = blocks["11"]
            mat[ia, offsets[b] + ntot:offsets[b + 1] + ntot] = blocks["12"]
            mat[offsets[a] + ntot:offsets[a + 1] + ntot, jb] = blocks["21"]
            mat[offsets[a] + ntot:offsets[a + 1] + ntot,
                offsets[b] + ntot:offsets[b + 1] + ntot] = blocks["22"]
    half = np.arange(ntot)
    mat[half, half] -= 0.5
    mat[ntot + half, ntot + half] -= 0.5
    kappa_all = np.concatenate([m.kappa for m in meshes])
    mat[ntot + half, half] += params.c0 * kappa_all ** 2
    anorm = np.linalg.norm(mat, 1)
    lu = lu_factor(mat)
    rcond, info = lapack.zgecon(lu[0], anorm)
    if info != 0 or rcond < 1e-13:
        warnings.warn(
            f"system is nearly singular (possible resonance): rcond ~ {rcond:.2e}",
            ResonanceWarning,
        )
    return SystemMatrix(meshes=meshes, params=params, matrix=mat, lu=lu,
                        rcond=float(rcond))


# --- incident traces -------------------------------------------------------


def plane_wave_trace(meshes, params: PlateParams, d) -> IncidentTrace:
    """Traces of exp(i k x.d):  M[u] = -k^2 (nu + (1-nu)(n.d)^2) u."""
    meshes = _as_mesh_list(meshes)
    d = np.asarray(d, dtype=float)
    pos = np.concatenate([m.positions for m in meshes])
    nor = np.concatenate([m.normals for m in meshes])
    u = np.exp(1j * params.k * pos @ d)
    ndot = nor @ d
    m_val = -params.k ** 2 * (params.nu + (1.0 - params.nu) * ndot ** 2) * u
    return IncidentTrace(u_val=u, m_val=m_val)


def point_source_trace(meshes, params: PlateParams, x0) -> IncidentTrace:
    """Traces of the fundamental solution with source x0 strictly inside."""
    meshes = _as_mesh_list(meshes)
    x0 = np.asarray(x0, dtype=float)
    if not any(bool(m.contains(x0)[0]) for m in meshes):
        raise ValueError("point source must lie strictly inside an obstacle")
    pos = np.concatenate([m.positions for m in meshes])
    nor = np.concatenate([m.normals for m in meshes])
    v = pos - x0
    r = np.sqrt((v * v).sum(-1))
    gt = _kern.radial_g_table(r, params.k, 2, "full")
    u = gt[0]
    lap = gt[2] * r ** 2 + 2.0 * gt[1]
    ddn = gt[2] * (nor * v).sum(-1) ** 2 + gt[1]
    m_val = params.nu * lap + (1.0 - params.nu) * ddn
    return IncidentTrace(u_val=u, m_val=m_val)


def solve(sysmat: SystemMatrix, trace: IncidentTrace) -> DensityPair:
    """Solve Q (phi1; phi2) = -(u; M[u]) with the cached factorization."""
    b = -np.concatenate([trace.u_val, trace.m_val])
    with LAPACK_LOCK:
        x = lu_solve(sysmat.lu, b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        residual = 0.0
    else:
        residual = float(np.linalg.norm(sysmat.matrix @ x - b) / bnorm)
    n = sysmat.n_total
    return DensityPair(phi1=x[:n], phi2=x[n:], residual=residual)


# --- field evaluation ------------------------------------------------------


def eval_scattered(meshes, params: PlateParams, dens: DensityPair, points,
                   check_distance: bool = True):
    """Layer representation at exterior points (valid beyond 3 mesh spacings)."""
    meshes = _as_mesh_list(meshes)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if check_distance:
        for mesh in meshes:
            d = points[:, None, :] - mesh.positions[None, :, :]
            dist = np.sqrt((d * d).sum(-1)).min(axis=1)
            limit = 3.0 * mesh.max_spacing()
            if np.any(dist <= limit):
                raise ValueError(
                    "evaluation point within 3 mesh spacings of the boundary; "
                    "the smooth quadrature is out of contract there"
                )
    out = np.zeros(points.shape[0], dtype=complex)
    offset = 0
    for mesh in meshes:
        n = mesh.n
        xg = {"pos": points, "tan": None, "nor": None}
        yg = _geometry(mesh)
        v = points[:, None, :] - yg["pos"][None, :, :]
        r = np.sqrt((v * v).sum(-1))
        dv = {
            "ny": (yg["nor"][None, :, :] * v).sum(-1),
            "ty": (yg["tan"][None, :, :] * v).sum(-1),
        }
        gt = _kern.radial_g_table(r, params.k, 3, "full")
        pats = {
            "rep": _rep_pattern(params, yg["kappa"][None, :], yg["kappap"][None, :]),
            "dlp": [(1.0, ("ny",))],
        }
        vals = _eval_patterns(gt, dv, _SAME_SIDE_DOTS, pats)
        w = mesh.weights[None, :]
        phi1 = dens.phi1[offset:offset + n]
        phi2 = dens.phi2[offset:offset + n]
        out += (vals["rep"] * w) @ phi1 + (vals["dlp"] * w) @ phi2
        offset += n
    return out


def farfield_rows(meshes, params: PlateParams, xhat) -> np.ndarray:
    """Far-field evaluation matrix: u_inf(xhat) = rows @ (phi1; phi2).

    Kernels are the plane-wave derivatives of the layer representation,
    scaled by the far-field constant so the output matches the radiation
    expansion u_s ~ e^{ikr}/sqrt(r) u_inf.
    """
    meshes = _as_mesh_list(meshes)
    xhat = np.atleast_2d(np.asarray(xhat, dtype=float))
    k = params.k
    p1_cols, p2_cols = [], []
    for mesh in meshes:
        e = np.exp(-1j * k * xhat @ mesh.positions.T)
        dn = -1j * k * (xhat @ mesh.normals.T)
        dt = -1j * k * (xhat @ mesh.tangents.T)
        kap = mesh.kappa[None, :]
        kapp = mesh.kappa_prime[None, :]
        p1 = (dn ** 3 + params.alpha1 * dn * dt ** 2 + params.alpha2 * kap * dn ** 2
              + params.alpha3 * kapp * dt) * e
        p2 = dn * e
        w = mesh.weights[None, :]
        p1_cols.append(p1 * w)
        p2_cols.append(p2 * w)
    cff = _kern.farfield_constant(k)
    return cff * np.concatenate(p1_cols + p2_cols, axis=1)


def eval_farfield(meshes, params: PlateParams, dens: DensityPair, xhat):
    """Far-field pattern of the layer representation at unit directions xhat."""
    rows = farfield_rows(meshes, params, xhat)
    out = rows @ dens.stacked
    return out if out.size > 1 else complex(out[0])


# --- analytic accuracy protocol -------------------------------------------


def point_source_test(meshes, params: PlateParams, sysmat: SystemMatrix = None,
                      x0=None, n_receivers: int = 10, radius_factor: float = 3.0):
    """Analytic solution test: interior point source, exterior receivers.

    The radiating field matching the traces of -Phi(., x0) on every boundary
    is -Phi itself, so the computed scattered field is compared against it
    at receivers on a circle of radius_factor times the overall diameter.
    The error is the max over receivers divided by the discrete L1 norm of
    the boundary densities.
    """
    meshes = _as_mesh_list(meshes)
    if sysmat is None:
        sysmat = assemble(meshes, params)
    nodes = np.concatenate([m.positions for m in meshes])
    center = nodes.mean(axis=0)
    diff = nodes - center
    diameter = 2.0 * np.sqrt((diff * diff).sum(-1)).max()
    if x0 is None:
        x0 = meshes[0].positions.mean(axis=0)
    x0 = np.asarray(x0, dtype=float)
    angles = 2 * np.pi * (np.arange(n_receivers) + 0.25) / n_receivers
    receivers = center + radius_factor * diameter * np.stack(
        [np.cos(angles), np.sin(angles)], axis=-1
    )
    trace = point_source_trace(meshes, params, x0)
    dens = solve(sysmat, trace)
    computed = eval_scattered(meshes, params, dens, receivers)
    rexact = np.sqrt(((receivers - x0) ** 2).sum(-1))
    exact = -_kern.phi(rexact, params.k)
    weights = np.concatenate([m.weights for m in meshes])
    density_l1 = float(((np.abs(dens.phi1) + np.abs(dens.phi2)) * weights).sum())
    max_err = float(np.abs(computed - exact).max())
    return {
        "n_nodes": int(sum(m.n for m in meshes)),
        "relative_error": max_err / density_l1,
        "max_abs_error": max_err,
        "density_l1": density_l1,
        "solve_residual": dens.residual,
        "x0": [float(x0[0]), float(x0[1])],
        "receiver_radius": float(radius_factor * diameter),
    }
