"""Global product quadrature for periodic log-singular kernels.

Kernels restricted to an analytic closed curve split as

    K(t, s) = A(t, s) * ln(4 sin^2((t - s)/2)) + B(t, s)

with A, B smooth and biperiodic.  The log factor is integrated exactly on
trigonometric polynomials by the spectral weight vector below; the smooth
remainder uses the plain trapezoid weight.  Diagonal values of A and B are
obtained by symmetric Richardson extrapolation in the parameter offset,
never evaluating the kernel at coincident points.
"""

import numpy as np

__all__ = ["log_weights", "log_factor", "richardson_even"]


def log_weights(n: int) -> np.ndarray:
    """Weights R_j with sum_j R_{i-j} f(t_j) ~ int_0^2pi ln(4 sin^2((t_i-s)/2)) f(s) ds.

    Exact for trigonometric polynomials of degree < n/2; spectrally accurate
    for smooth periodic f.  Requires even n.
    """
    if n % 2 != 0:
        raise ValueError(f"log quadrature needs an even node count, got {n}")
    multiplier = np.zeros(n)
    m = np.arange(1, n // 2)
    multiplier[m] = -2 * np.pi / m
    multiplier[-m] = -2 * np.pi / m
    multiplier[n // 2] = -4 * np.pi / n
    return np.fft.ifft(multiplier).real


def log_factor(dt):
    """ln(4 sin^2(dt/2)) for parameter offsets dt (nonzero mod 2pi)."""
    return np.log(4.0 * np.sin(np.asarray(dt) / 2.0) ** 2)


def richardson_even(samples):
    """Limit at 0 of an even smooth function sampled at delta0 / 2^j.

    samples[j] is the (array of) symmetric averages at offset delta0/2^j,
    j = 0..levels-1.  Classic Richardson tableau for a series in delta^2.
    """
    tableau = [np.asarray(s) for s in samples]
    levels = len(tableau)
    for m in range(1, levels):
        factor = 4.0 ** m
        tableau = [
            (factor * tableau[i + 1] - tableau[i]) / (factor - 1.0)
            for i in range(levels - m)
        ]
    return tableau[0]
