"""Pointwise kernels of -Laplace + 1 on the half space, for N in {1, 2, 3}.

The free-space fundamental solution is

    N = 1:  E(r) = exp(-r)/2
    N = 2:  E(r) = K0(r)/(2 pi)
    N = 3:  E(r) = exp(-r)/(4 pi r)

The half-space Dirichlet kernel is the reflection difference
G(x, y) = E(|x - y|) - E(|x* - y|) with x* the mirror image of x across the
boundary, and the boundary-reproducing kernel is the boundary normal
derivative of G, which evaluates in closed form to

    P(x, z) = 2 x_N |E'(rho)| / rho,    rho = |(x' - z, x_N)|.

(Differentiate E(|x - (z, s)|) - E(|x* - (z, s)|) in s at s = 0: both
distances equal rho there and the chain-rule factors add up to -2 x_N / rho.)
For N = 1 this collapses to P(x) = exp(-x); for N = 3 to
x_N (1 + rho) exp(-rho) / (2 pi rho^3).

K0/K1 are implemented here from the classical series and asymptotic
expansions (split at r = 9, where both sides are accurate to a few 1e-9
relative) rather than taken from a library, and are unit-tested against an
independent reference implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HalfSpacePoint:
    """Interior point of the half space: lateral part x' and height x_N > 0."""

    lateral: tuple[float, ...]
    height: float

    def __post_init__(self):
        if self.height <= 0.0:
            raise ValueError("interior points need positive height")

    @property
    def coords(self) -> np.ndarray:
        return np.array((*self.lateral, self.height), dtype=float)

    def reflected(self) -> np.ndarray:
        return np.array((*self.lateral, -self.height), dtype=float)

_EULER_GAMMA = 0.5772156649015328606

_SERIES_ASYMPTOTIC_SPLIT = 9.0
_SERIES_TERMS = 44


def _k01_series(x):
    """K0 and K1 for 0 < x <= 9 from the ascending series.

    K0 = -(log(x/2) + gamma) I0 + sum_{k>=1} H_k (x^2/4)^k / (k!)^2
    K1 = 1/x + (log(x/2) + gamma) I1 - (x/4) sum_{k>=0} (H_k + H_{k+1}) t^k / (k! (k+1)!)

    Evaluated in extended precision: the two halves cancel to ~exp(-2x) of
    their size, which would cost ~8 digits at the upper end of the range.
    """
    x = x.astype(np.longdouble)
    t = 0.25 * x * x
    i0 = np.ones_like(x)
    i1 = np.ones_like(x)          # I1 = (x/2) * i1
    s0 = np.zeros_like(x)
    s1 = np.ones_like(x)          # k = 0 term of the K1 sum: H_0 + H_1 = 1
    term0 = np.ones_like(x)       # t^k / (k!)^2
    term1 = np.ones_like(x)       # t^k / (k! (k+1)!)
    h = 0.0
    for k in range(1, _SERIES_TERMS):
        term0 = term0 * t / (k * k)
        term1 = term1 * t / (k * (k + 1))
        h += 1.0 / k
        i0 += term0
        i1 += term1
        s0 += h * term0
        s1 += (2.0 * h + 1.0 / (k + 1)) * term1
    lg = np.log(0.5 * x) + np.longdouble("0.577215664901532860606512090082")
    k0 = -lg * i0 + s0
    k1 = 1.0 / x + lg * (0.5 * x * i1) - 0.25 * x * s1
    return k0.astype(float), k1.astype(float)


def _k01_asymptotic(x):
    """K0 and K1 for x >= 9, sqrt(pi/2x) e^{-x} sum_k a_k(nu)/x^k.

    The divergent series is summed to its smallest term per element.
    """
    k0 = np.ones_like(x)
    k1 = np.ones_like(x)
    term0 = np.ones_like(x)
    term1 = np.ones_like(x)
    active0 = np.ones_like(x, dtype=bool)
    active1 = np.ones_like(x, dtype=bool)
    for k in range(1, 40):
        m = 2 * k - 1
        factor0 = -(m * m) / (8.0 * k * x)
        factor1 = (4.0 - m * m) / (8.0 * k * x)
        new0 = term0 * factor0
        new1 = term1 * factor1
        active0 &= np.abs(new0) < np.abs(term0)
        active1 &= np.abs(new1) < np.abs(term1)
        k0 = np.where(active0, k0 + new0, k0)
        k1 = np.where(active1, k1 + new1, k1)
        term0, term1 = new0, new1
        if not (active0.any() or active1.any()):
            break
    front = np.sqrt(np.pi / (2.0 * x)) * np.exp(-x)
    return front * k0, front * k1


def _k01(x):
    x = np.asarray(x, dtype=float)
    small = x <= _SERIES_ASYMPTOTIC_SPLIT
    k0 = np.empty_like(x)
    k1 = np.empty_like(x)
    if small.any():
        k0[small], k1[small] = _k01_series(x[small])
    big = ~small
    if big.any():
        k0[big], k1[big] = _k01_asymptotic(x[big])
    return k0, k1


def bessel_k0(x):
    """Modified Bessel function K0, elementwise, for x > 0."""
    return _k01(x)[0]


def bessel_k1(x):
    """Modified Bessel function K1, elementwise, for x > 0."""
    return _k01(x)[1]


_TWO_PI = 2.0 * np.pi
_FOUR_PI = 4.0 * np.pi


def _check_dimension(N):
    if N not in (1, 2, 3):
        raise ValueError(f"unsupported dimension N={N!r}; kernels cover N in {{1, 2, 3}}")


def _check_radius(r):
    if np.any(np.asarray(r) <= 0.0):
        raise ValueError("kernel radius must be positive")


def fundamental_E(N: int, r):
    """Free-space fundamental solution E(r), elementwise; strictly decreasing."""
    _check_dimension(N)
    _check_radius(r)
    r = np.asarray(r, dtype=float)
    if N == 1:
        out = 0.5 * np.exp(-r)
    elif N == 2:
        out = bessel_k0(r) / _TWO_PI
    else:
        out = np.exp(-r) / (_FOUR_PI * r)
    return out if out.ndim else float(out)


def fundamental_dE(N: int, r):
    """Derivative E'(r), elementwise; negative for all r > 0."""
    _check_dimension(N)
    _check_radius(r)
    r = np.asarray(r, dtype=float)
    if N == 1:
        out = -0.5 * np.exp(-r)
    elif N == 2:
        out = -bessel_k1(r) / _TWO_PI
    else:
        out = -np.exp(-r) * (1.0 + r) / (_FOUR_PI * r * r)
    return out if out.ndim else float(out)


MIN_SEPARATION = 1e-12


def _as_points(N, x):
    x = np.asarray(x, dtype=float)
    if N == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != N:
        raise ValueError(f"points must have {N} coordinates, got shape {x.shape}")
    return x


def green_G(N: int, x, y):
    """Half-space Dirichlet kernel G(x, y) = E(|x - y|) - E(|x* - y|).

    x, y: arrays of shape (..., N) with positive last coordinate.  Raises on
    separations below MIN_SEPARATION; the discretization layer owns the
    diagonal treatment.
    """
    _check_dimension(N)
    x = _as_points(N, x)
    y = _as_points(N, y)
    if np.any(x[..., -1] <= 0.0) or np.any(y[..., -1] <= 0.0):
        raise ValueError("green_G needs interior points (positive height)")
    direct = np.linalg.norm(x - y, axis=-1)
    if np.any(direct < MIN_SEPARATION):
        raise ValueError("green_G evaluated at (near-)coincident points; "
                         "handle the quadrature diagonal separately")
    xr = x.copy()
    xr[..., -1] = -xr[..., -1]
    mirrored = np.linalg.norm(xr - y, axis=-1)
    out = fundamental_E(N, direct) - fundamental_E(N, mirrored)
    return out if np.ndim(out) else float(out)


def poisson_P(N: int, x, z=None):
    """Boundary kernel P(x, z) = 2 x_N |E'(rho)| / rho with rho = |(x' - z, x_N)|.

    x: array (..., N) of interior points; z: array (..., N-1) of boundary
    points (ignored for N = 1, where the boundary is a single point and
    P(x) = exp(-x)).
    """
    _check_dimension(N)
    x = _as_points(N, x)
    if np.any(x[..., -1] <= 0.0):
        raise ValueError("poisson_P needs positive height")
    height = x[..., -1]
    if N == 1:
        out = np.exp(-height)
        return out if np.ndim(out) else float(out)
    z = np.zeros(N - 1) if z is None else np.asarray(z, dtype=float)
    if z.ndim == 0:
        z = z[None]
    if z.shape[-1] != N - 1:
        raise ValueError(f"boundary points must have {N - 1} coordinates")
    lateral = x[..., :-1] - z
    rho = np.sqrt(np.sum(lateral * lateral, axis=-1) + height * height)
    out = 2.0 * height * (-fundamental_dE(N, rho)) / rho
    return out if np.ndim(out) else float(out)
