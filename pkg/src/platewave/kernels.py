"""Special functions, the plate-wave fundamental solution, and its derivatives.

The radial profile is

    phi(r) = (i/(8 k^2)) (H0^(1)(k r) + (2i/pi) K0(k r)),

where the modified-Bessel term is the H0^(1)(i k r) branch rewritten through
K0 for numerical stability at large argument.  The logarithmic content of
phi is tracked separately: phi(r) = phi_log(r) * ln(r) + smooth, with

    phi_log(r) = -(1/(4 pi k^2)) (J0(k r) - I0(k r)),

an entire function.  Both profiles, and the iterated radial operator
G_j = ((1/r) d/dr)^j applied to them, are evaluated from closed-form
polynomial recurrences in 1/(k r); no finite differences are involved.

Mixed directional derivatives up to total order five expand over the
perfect matchings of the direction list:

    D^m phi(|v|)[e_1..e_m] =
        sum over matchings  G_{m-#pairs}(|v|)
            * prod_pairs (e_i . e_j) * prod_singles (e_i . v),

with one sign flip per direction taken with respect to the source point.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import special as sf

__all__ = [
    "RadialDerivTable",
    "bessel_suite",
    "phi",
    "phi_derivs",
    "phi_log_derivs",
    "radial_g_table",
    "directional_derivative",
    "farfield_constant",
    "phi_farfield",
]

MAX_ORDER = 5


def bessel_suite(x):
    """(J0, J1, Y0, Y1, K0, K1) at x >= 0 in double precision.

    J0 and J1 are defined at x = 0; the Y and K members diverge there and
    are returned as signed infinities.  Negative arguments are a domain
    error for the Y and K members and are rejected outright.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("Y and K Bessel functions require x >= 0")
    with np.errstate(divide="ignore"):
        return sf.j0(x), sf.j1(x), sf.y0(x), sf.y1(x), sf.k0(x), sf.k1(x)


# --- polynomial recurrences in u = 1/z, z = k r ---------------------------
#
# Oscillatory parts (H0(z), J0(z)) satisfy F'' = -(1/z) F' - F  (sign -1);
# modified parts (K0(z), I0(z)) satisfy   F'' = -(1/z) F' + F  (sign +1).


def _polyder(c):
    return npoly.polyder(c) if len(c) > 1 else np.zeros(1)


def _shift(c, m):
    """Multiply a coefficient array by u^m."""
    return np.concatenate([np.zeros(m), c])


@lru_cache(maxsize=None)
def _deriv_rep(sign: int, max_order: int):
    """(p_j, q_j) with F^(j)(z) = p_j(u) F + q_j(u) F', u = 1/z."""
    p, q = np.array([1.0]), np.array([0.0])
    reps = [(p, q)]
    for _ in range(max_order):
        p_next = npoly.polyadd(_shift(-_polyder(p), 2), sign * q)
        q_next = npoly.polyadd(npoly.polyadd(p, _shift(-_polyder(q), 2)), _shift(-q, 1))
        p, q = p_next, q_next
        reps.append((p, q))
    return tuple(reps)


@lru_cache(maxsize=None)
def _g_rep(sign: int, max_order: int):
    """(P_j, Q_j) with ((1/z) d/dz)^j F = P_j(u) F + Q_j(u) F'."""
    p, q = np.array([1.0]), np.array([0.0])
    reps = [(p, q)]
    for _ in range(max_order):
        p_next = npoly.polyadd(_shift(-_polyder(p), 3), sign * _shift(q, 1))
        q_next = npoly.polyadd(
            npoly.polyadd(_shift(p, 1), _shift(-_polyder(q), 3)), _shift(-q, 2)
        )
        p, q = p_next, q_next
        reps.append((p, q))
    return tuple(reps)


def _combine(reps, u, f, fp):
    return [npoly.polyval(u, p) * f + npoly.polyval(u, q) * fp for p, q in reps]


def _hk_values(z):
    """H0^(1), dH0/dz, K0, dK0/dz at z (complex for H, real decaying for K)."""
    h0 = sf.hankel1(0, z)
    h1 = sf.hankel1(1, z)
    with np.errstate(under="ignore"):
        k0 = sf.k0(z)
        k1 = sf.k1(z)
    return h0, -h1, k0, -k1


def _ji_values(z):
    """J0, dJ0/dz, I0, dI0/dz at z."""
    return sf.j0(z), -sf.j1(z), sf.i0(z), sf.i1(z)


def _stack_orders(r, k, max_order, part, rep_builder):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("radial derivatives are singular at r = 0; need r > 0")
    if k <= 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    if not 0 <= max_order <= MAX_ORDER:
        raise ValueError(f"derivative order must lie in [0, {MAX_ORDER}]")
    z = k * r
    u = 1.0 / z
    if part == "full":
        h0, dh0, k0, dk0 = _hk_values(z)
        osc = _combine(rep_builder(-1, max_order), u, h0, dh0)
        mod = _combine(rep_builder(+1, max_order), u, k0, dk0)
        c = 1j / (8 * k * k)
        vals = [c * (a + (2j / np.pi) * b) for a, b in zip(osc, mod)]
    elif part == "log":
        j0, dj0, i0, di0 = _ji_values(z)
        osc = _combine(rep_builder(-1, max_order), u, j0, dj0)
        mod = _combine(rep_builder(+1, max_order), u, i0, di0)
        c = -1.0 / (4 * np.pi * k * k)
        vals = [(c * (a - b)).astype(complex) for a, b in zip(osc, mod)]
    else:
        raise ValueError(f"unknown part {part!r}")
    return np.stack(vals)


@dataclass(frozen=True)
class RadialDerivTable:
    """phi^(0)..phi^(max_order) at a single distance r > 0 (or r = 0, order 0)."""

    r: float
    k: float
    values: np.ndarray

    @property
    def max_order(self) -> int:
        return self.values.shape[0] - 1


def phi(r, k):
    """Radial profile of the fundamental solution; continuous limit at r = 0.

    The H0 and K0 logarithms cancel as r -> 0+, leaving i/(8 k^2).
    """
    if k <= 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    if np.any(r < 0.0):
        raise ValueError("distance must be nonnegative")
    out = np.empty(r.shape, dtype=complex)
    pos = r > 0.0
    if np.any(pos):
        out[pos] = _stack_orders(r[pos], k, 0, "full", _deriv_rep)[0]
    out[~pos] = 1j / (8 * k * k)
    return out[0] if scalar else out


def phi_derivs(r, k, max_order: int = MAX_ORDER) -> RadialDerivTable:
    """Radial derivatives phi^(j), j <= max_order, via Bessel recurrences."""
    if r == 0.0:
        if max_order >= 1:
            raise ValueError("radial derivatives are singular at r = 0")
        return RadialDerivTable(r=0.0, k=k, values=np.array([phi(0.0, k)]))
    scale = np.array([k ** j for j in range(max_order + 1)])
    vals = _stack_orders(r, k, max_order, "full", _deriv_rep)
    return RadialDerivTable(r=float(r), k=float(k), values=scale * vals)


def phi_log_derivs(r, k, max_order: int = MAX_ORDER) -> RadialDerivTable:
    """Derivatives of the logarithmic-content profile phi_log (entire part)."""
    scale = np.array([k ** j for j in range(max_order + 1)])
    vals = _stack_orders(r, k, max_order, "log", _deriv_rep)
    return RadialDerivTable(r=float(r), k=float(k), values=scale * vals)


def radial_g_table(r, k, max_order: int = MAX_ORDER, part: str = "full"):
    """G_j = ((1/r) d/dr)^j applied to phi (or phi_log), vectorized over r.

    Returns an array of shape (max_order+1,) + r.shape.  These are the radial
    factors in the matching expansion of mixed directional derivatives.
    """
    vals = _stack_orders(r, k, max_order, part, _g_rep)
    scale = np.array([k ** (2 * j) for j in range(max_order + 1)])
    return vals * scale.reshape((-1,) + (1,) * (vals.ndim - 1))


def _matchings(m: int):
    """Partial pairings of {0..m-1}: tuples (pairs, singles)."""
    return _matchings_of(tuple(range(m)))


@lru_cache(maxsize=None)
def _matchings_of(indices: tuple):
    if not indices:
        return (((), ()),)
    first, rest = indices[0], indices[1:]
    out = []
    for pairs, singles in _matchings_of(rest):
        out.append((pairs, (first,) + singles))
    for j in rest:
        remaining = tuple(i for i in rest if i != j)
        for pairs, singles in _matchings_of(remaining):
            out.append((((first, j),) + pairs, singles))
    return tuple(out)


def _g_from_table(table: RadialDerivTable, order: int):
    """G_0..G_order from plain radial derivatives, G_j = sum c_ji u^(2j-i) phi^(i)."""
    u = 1.0 / table.r
    g = [table.values[0]]
    row = {0: 1.0}
    for j in range(order):
        nxt = {}
        for i, c in row.items():
            nxt[i] = nxt.get(i, 0.0) + (i - 2 * j) * c
            nxt[i + 1] = nxt.get(i + 1, 0.0) + c
        row = {i: c for i, c in nxt.items() if c != 0.0}
        g.append(sum(c * u ** (2 * (j + 1) - i) * table.values[i] for i, c in row.items()))
    return g


def directional_derivative(table: RadialDerivTable, delta, directions):
    """Mixed directional derivative of phi(x - y) at x - y = delta.

    directions is a sequence of (unit_vector, tag) with tag 'x' or 'y';
    each 'y' direction differentiates with respect to the source point and
    contributes one sign flip.  At most five directions are supported.
    """
    m = len(directions)
    if m > MAX_ORDER:
        raise ValueError(f"at most {MAX_ORDER} directional derivatives are supported")
    if m > table.max_order:
        raise ValueError("table holds too few radial derivatives for this order")
    if table.r <= 0.0 and m >= 1:
        raise ValueError("directional derivatives are singular at coincident points")
    delta = np.asarray(delta, dtype=float)
    vecs = [np.asarray(v, dtype=float) for v, _ in directions]
    sign = (-1) ** sum(1 for _, tag in directions if tag == "y")
    g = _g_from_table(table, m)
    total = 0.0 + 0.0j
    for pairs, singles in _matchings(m):
        term = g[m - len(pairs)]
        for i, j in pairs:
            term = term * np.dot(vecs[i], vecs[j])
        for i in singles:
            term = term * np.dot(vecs[i], delta)
        total += term
    return sign * total


def farfield_constant(k: float) -> complex:
    """Far-field normalization of the fundamental solution.

    Fixed by the large-argument form of H0^(1): the point source radiates
    e^{ikr}/sqrt(r) times this constant times e^{-ik xhat.y}.  The overall
    sign is pinned by direct comparison against the field itself at large
    radius; it cancels from every sampling indicator.
    """
    return (1.0 / (2 * k * k)) * np.exp(1j * np.pi / 4) / np.sqrt(8 * np.pi * k)


def phi_farfield(xhat, y, k):
    """Far-field pattern of a point source at y observed in direction xhat."""
    xhat = np.asarray(xhat, dtype=float)
    y = np.asarray(y, dtype=float)
    return farfield_constant(k) * np.exp(-1j * k * (xhat * y).sum(axis=-1))
