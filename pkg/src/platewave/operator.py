"""Far-field data synthesis, the discrete far-field operator, and noise.

The measurement matrix stores the raw samples u_inf(xhat_l, d_j); the
trapezoid weight 2 pi / N_d is applied only when the operator acts on a
density, so no weight is ever baked into the data twice.

Noise follows the two published recipes verbatim: a unit-modulus complex
direction delta/|delta| (independent standard-normal real and imaginary
parts, generated by Box-Muller from a counter-based Philox stream) scaled
by c|u| for the "additive" kind and by c alone for the "multiplicative"
kind.  Note the naming: the "additive" formula is the one proportional to
the data magnitude.
"""

import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import lu_solve

from . import forward as _fwd
from ._parallel import LAPACK_LOCK, map_chunks

__all__ = [
    "DirectionSet",
    "Provenance",
    "FarFieldMatrix",
    "synthesize",
    "reciprocity_residual",
    "add_noise",
    "apply_operator",
    "apply_adjoint",
    "save_bhff",
    "load_bhff",
    "save_csv",
]

_SOLVE_CHUNK = 64  # incident directions per solve batch; fixed for determinism

_NOISE_KINDS = ("additive", "multiplicative")


@dataclass(frozen=True)
class DirectionSet:
    """Uniform unit directions theta_j = 2 pi j / n, j = 0..n-1."""

    angles: np.ndarray

    @classmethod
    def uniform(cls, n: int) -> "DirectionSet":
        if n < 2:
            raise ValueError(f"need at least two directions, got {n}")
        return cls(angles=2 * np.pi * np.arange(n) / n)

    @property
    def n(self) -> int:
        return self.angles.size

    @property
    def vectors(self) -> np.ndarray:
        return np.stack([np.cos(self.angles), np.sin(self.angles)], axis=-1)

    def negation_closed(self) -> bool:
        """d_{j + n/2} = -d_j, available exactly when n is even."""
        return self.n % 2 == 0


@dataclass(frozen=True)
class Provenance:
    kind: str = "clean"
    noise_kind: str = ""
    level: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class FarFieldMatrix:
    """Raw far-field samples u_inf(xhat_l, d_j), receivers by incident."""

    data: np.ndarray
    k: float
    nu: float
    dirs: DirectionSet
    recv: DirectionSet
    provenance: Provenance = Provenance()

    @property
    def shape(self):
        return self.data.shape


def synthesize(meshes, params: _fwd.PlateParams, dirs: DirectionSet,
               recv: DirectionSet, sysmat: _fwd.SystemMatrix = None,
               workers: int = 1) -> FarFieldMatrix:
    """One boundary solve per incident plane wave against a single factorization."""
    meshes = _fwd._as_mesh_list(meshes)
    if sysmat is None:
        sysmat = _fwd.assemble(meshes, params)
    pos = np.concatenate([m.positions for m in meshes])
    nor = np.concatenate([m.normals for m in meshes])
    dvec = dirs.vectors
    rows = _fwd.farfield_rows(meshes, params, recv.vectors)

    def solve_chunk(cols):
        d = dvec[cols]
        u = np.exp(1j * params.k * pos @ d.T)
        ndot = nor @ d.T
        m = -params.k ** 2 * (params.nu + (1.0 - params.nu) * ndot ** 2) * u
        b = -np.concatenate([u, m], axis=0)
        try:
            with LAPACK_LOCK:
                x = lu_solve(sysmat.lu, b)
        except Exception as exc:  # pragma: no cover - propagated with context
            raise RuntimeError(
                f"forward solve failed for incident directions {cols[0]}..{cols[-1]}"
            ) from exc
        return rows @ x

    blocks = map_chunks(solve_chunk, np.arange(dirs.n), _SOLVE_CHUNK, workers)
    data = np.concatenate(blocks, axis=1)
    return FarFieldMatrix(data=data, k=params.k, nu=params.nu, dirs=dirs, recv=recv)


def reciprocity_residual(ff: FarFieldMatrix) -> float:
    """max |u_inf(xhat, d) - u_inf(-d, -xhat)| over the grid, relative to max |u_inf|.

    Requires receiver and incident sets to coincide and be closed under
    negation (even count).
    """
    if ff.dirs.n != ff.recv.n or not np.array_equal(ff.dirs.angles, ff.recv.angles):
        raise ValueError("reciprocity check needs identical incident/receiver sets")
    if not ff.dirs.negation_closed():
        raise ValueError("reciprocity check needs a negation-closed direction set")
    n = ff.dirs.n
    idx = (np.arange(n) + n // 2) % n
    swapped = ff.data[np.ix_(idx, idx)].T
    return float(np.abs(ff.data - swapped).max() / np.abs(ff.data).max())


def _unit_complex_noise(shape, seed: int) -> np.ndarray:
    """delta/|delta| with delta from independent N(0,1) re/im parts.

    Box-Muller on a Philox counter stream: reproducible across platforms.
    """
    gen = np.random.Generator(np.random.Philox(seed))
    u1 = 1.0 - gen.random(shape)
    u2 = gen.random(shape)
    radius = np.sqrt(-2.0 * np.log(u1))
    delta = radius * np.exp(2j * np.pi * u2)
    return delta / np.abs(delta)


def add_noise(ff: FarFieldMatrix, kind: str, level: float, seed: int) -> FarFieldMatrix:
    """Perturb the samples per the published formulas (naming kept verbatim)."""
    if kind not in _NOISE_KINDS:
        raise ValueError(f"noise kind must be one of {_NOISE_KINDS}, got {kind!r}")
    if level < 0:
        raise ValueError(f"noise level must be nonnegative, got {level}")
    unit = _unit_complex_noise(ff.data.shape, seed)
    if kind == "additive":
        data = ff.data + level * unit * np.abs(ff.data)
    else:
        data = ff.data + level * unit
    prov = Provenance(kind="noisy", noise_kind=kind, level=float(level), seed=int(seed))
    return replace(ff, data=data, provenance=prov)


def apply_operator(ff: FarFieldMatrix, g: np.ndarray) -> np.ndarray:
    """(2 pi / N_d) U g : densities over incident directions to receiver values."""
    g = np.asarray(g)
    if g.shape[0] != ff.dirs.n:
        raise ValueError(f"density length {g.shape[0]} != {ff.dirs.n} directions")
    return (2 * np.pi / ff.dirs.n) * (ff.data @ g)


def apply_adjoint(ff: FarFieldMatrix, h: np.ndarray) -> np.ndarray:
    """Adjoint with respect to the weighted discrete inner products."""
    h = np.asarray(h)
    if h.shape[0] != ff.recv.n:
        raise ValueError(f"value length {h.shape[0]} != {ff.recv.n} receivers")
    return (2 * np.pi / ff.recv.n) * (ff.data.conj().T @ h)


# --- file formats ----------------------------------------------------------

_MAGIC = b"BHFF"
_VERSION = 1


def save_bhff(ff: FarFieldMatrix, path) -> None:
    """Binary little-endian far-field matrix file."""
    noisy = ff.provenance.kind == "noisy"
    header = struct.pack("<4sIII", _MAGIC, _VERSION, ff.recv.n, ff.dirs.n)
    header += struct.pack("<dd", ff.k, ff.nu)
    header += struct.pack("<I", 1 if noisy else 0)
    if noisy:
        kind_code = _NOISE_KINDS.index(ff.provenance.noise_kind)
        header += struct.pack("<IdQ", kind_code, ff.provenance.level,
                              ff.provenance.seed)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(ff.data, dtype="<c16").tobytes())


def load_bhff(path) -> FarFieldMatrix:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, n_r, n_d = struct.unpack_from("<4sIII", raw, 0)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a BHFF far-field matrix file")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported BHFF version {version}")
    off = 16
    k, nu = struct.unpack_from("<dd", raw, off)
    off += 16
    (prov_tag,) = struct.unpack_from("<I", raw, off)
    off += 4
    if prov_tag == 1:
        kind_code, level, seed = struct.unpack_from("<IdQ", raw, off)
        off += 20
        prov = Provenance(kind="noisy", noise_kind=_NOISE_KINDS[kind_code],
                          level=level, seed=seed)
    else:
        prov = Provenance()
    data = np.frombuffer(raw[off:], dtype="<c16").reshape(n_r, n_d).copy()
    return FarFieldMatrix(
        data=data, k=k, nu=nu,
        dirs=DirectionSet.uniform(n_d), recv=DirectionSet.uniform(n_r),
        provenance=prov,
    )


def save_csv(ff: FarFieldMatrix, path) -> None:
    """Plain-text export: receiver index, incident index, re, im."""
    with open(path, "w") as fh:
        fh.write("l,j,re,im\n")
        for ell in range(ff.recv.n):
            row = ff.data[ell]
            for j in range(ff.dirs.n):
                fh.write(f"{ell},{j},{float(row[j].real)!r},{float(row[j].imag)!r}\n")
