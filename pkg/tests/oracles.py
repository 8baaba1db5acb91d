"""Independent test oracles, written directly against the definitions and
kept free of the implementation paths they check."""

from functools import lru_cache

import numpy as np
from scipy.integrate import quad

# -- tree counting -------------------------------------------------------------
#
# The grammar has two leaf productions, one unary and five binary operators;
# every node costs one unit of length.


@lru_cache(maxsize=None)
def trees_exact(n: int) -> int:
    """Number of complete derivations with exactly n nodes."""
    if n < 1:
        return 0
    total = 2 if n == 1 else 0
    total += trees_exact(n - 1)  # unary
    total += 5 * sum(trees_exact(i) * trees_exact(n - 1 - i)
                     for i in range(1, n - 1))
    return total


def trees_cumulative(max_len: int) -> int:
    return sum(trees_exact(n) for n in range(1, max_len + 1))


# -- finite differences -----------------------------------------------------------

def central_difference(f, x: float, h: float = 1e-6) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)


# -- marginal-likelihood quadrature ----------------------------------------------
#
# Per-point marginalization of the generative model with the model linearized
# at the observed x: true t ~ N(mu, omega^2), x_i ~ N(t, sigma_x^2),
# y_i ~ N(A t + B, sigma_y^2 + sigma_int^2).  Integrated in log space around
# every relevant peak so narrow factors are resolved and underflow cannot
# bite.  Adds back n log 2pi to match the dropped-constant convention.


def mnr_quadrature(A, B, data, mu: float, omega: float,
                   sigma_int: float) -> float:
    total = 0.0
    n = len(data.x)
    for i in range(n):
        xi, yi = data.x[i], data.y[i]
        sx = data.sigma_x[i]
        s2 = data.sigma_y[i] ** 2 + sigma_int ** 2
        a, b = A[i], B[i]

        def logf(t):
            return (-(xi - t) ** 2 / (2 * sx ** 2)
                    - np.log(2 * np.pi * sx ** 2) / 2
                    - (yi - a * t - b) ** 2 / (2 * s2)
                    - np.log(2 * np.pi * s2) / 2
                    - (t - mu) ** 2 / (2 * omega ** 2)
                    - np.log(2 * np.pi * omega ** 2) / 2)

        # the log-integrand is an exact downward parabola in t, so all the
        # mass sits within a few widths of the precision-weighted mean
        prec = 1 / sx ** 2 + a * a / s2 + 1 / omega ** 2
        peak = (xi / sx ** 2 + a * (yi - b) / s2 + mu / omega ** 2) / prec
        width = 1 / np.sqrt(prec)
        shift = logf(peak)
        val, _ = quad(lambda t: np.exp(logf(t) - shift),
                      peak - 40 * width, peak + 40 * width,
                      points=[peak - width, peak, peak + width],
                      limit=300, epsabs=1e-14, epsrel=1e-11)
        total += np.log(val) + shift
    return total + n * np.log(2 * np.pi)
