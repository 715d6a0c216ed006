"""Bessel function J0, its zeros, and the radial Dirichlet eigenbasis.

The eigenvalue problem  -u'' - u'/y = lam u  on [0, 1] with u(1) = 0 and
u'(0) = 0 has eigenvalues lam_j = r_j^2 where r_j is the j-th positive zero
of J0, and normalized eigenfunctions

    eta_j(y) = sqrt(2) J0(y r_j) / |J0'(r_j)|,

orthonormal in the radial L2 inner product with weight y.

J0 and J1 are evaluated in two regimes with minimax rational coefficients
(Cephes Math Library, Stephen L. Moshier, public domain): a zero-factored
rational fit on [0, 5] and the Hankel trigonometric form with rational P, Q
beyond.  Peak error is a few ulp over [0, 50], comfortably inside the 1e-13
relative contract away from the zeros.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence
from .weighted import GridFunction, RadialGrid

_SQ2OPI = 7.9788456080286535587989e-1  # sqrt(2/pi)
_PIO4 = 7.85398163397448309616e-1
_THPIO4 = 2.35619449019234492885

# -- J0, interval [0, 5]: (w - r1^2)(w - r2^2) P3(w)/Q8(w), w = x^2
_DR1 = 5.78318596294678452118e0
_DR2 = 3.04712623436620863991e1
_RP = np.array([
    -4.79443220978201773821e9,
    1.95617491946556577543e12,
    -2.49248344360967716204e14,
    9.70862251047306323952e15,
])
_RQ = np.array([  # leading coefficient 1.0
    4.99563147152651017219e2,
    1.73785401676374683123e5,
    4.84409658339962045305e7,
    1.11855537045356834862e10,
    2.11277520115489217587e12,
    3.10518229857422583814e14,
    3.18121955943204943306e16,
    1.71086294081043136091e18,
])
# -- J0, interval (5, inf): Hankel form with rational P, Q in (5/x)^2
_PP = np.array([
    7.96936729297347051624e-4,
    8.28352392107440799803e-2,
    1.23953371646414299388e0,
    5.44725003058768775090e0,
    8.74716500199817011941e0,
    5.30324038235394892183e0,
    9.99999999999999997821e-1,
])
_PQ = np.array([
    9.24408810558863637013e-4,
    8.56288474354474431428e-2,
    1.25352743901058953537e0,
    5.47097740330417105182e0,
    8.76190883237069594232e0,
    5.30605288235394617618e0,
    1.00000000000000000218e0,
])
_QP = np.array([
    -1.13663838898469149931e-2,
    -1.28252718670509318512e0,
    -1.95539544257735972385e1,
    -9.32060152123768231369e1,
    -1.77681167980488050595e2,
    -1.47077505154951170175e2,
    -5.14105326766599330220e1,
    -6.05014350600728481186e0,
])
_QQ = np.array([  # leading coefficient 1.0
    6.43178256118178023184e1,
    8.56430025976980587198e2,
    3.88240183605401609683e3,
    7.24046774195652478189e3,
    5.93072701187316984827e3,
    2.06209331660327847417e3,
    2.42005740240291393179e2,
])

# -- J1, interval [0, 5]: x (w - z1)(w - z2) P3(w)/Q8(w)
_Z1 = 1.46819706421238932572e1
_Z2 = 4.92184563216946036703e1
_RP1 = np.array([
    -8.99971225705559398224e8,
    4.52228297998194034323e11,
    -7.27494245221818276015e13,
    3.68295732863852883286e15,
])
_RQ1 = np.array([  # leading coefficient 1.0
    6.20836478118054335476e2,
    2.56987256757748830383e5,
    8.35146791431949253037e7,
    2.21511595479792499675e10,
    4.74914122079991414898e12,
    7.84369607876235854894e14,
    8.95222336184627338078e16,
    5.32278620332680085395e18,
])
_PP1 = np.array([
    7.62125616208173112003e-4,
    7.31397056940917570436e-2,
    1.12719608129684925192e0,
    5.11207951146807644818e0,
    8.42404590141772420927e0,
    5.21451598682361504063e0,
    1.00000000000000000254e0,
])
_PQ1 = np.array([
    5.71323128072548699714e-4,
    6.88455908754495404082e-2,
    1.10514232634061696926e0,
    5.07386386128601488557e0,
    8.39985554327604159757e0,
    5.20982848682361821619e0,
    9.99999999999999997461e-1,
])
_QP1 = np.array([
    5.10862594750176621635e-2,
    4.98213872951233449420e0,
    7.58238284132545283818e1,
    3.66779609360150777800e2,
    7.10856304998926107277e2,
    5.97489612400613639965e2,
    2.11688757100572135698e2,
    2.52070205858023719784e1,
])
_QQ1 = np.array([  # leading coefficient 1.0
    7.42373277035675149943e1,
    1.05644886038262816351e3,
    4.98641058337653607651e3,
    9.56231892404756170795e3,
    7.99704160447350683650e3,
    2.82619278517639096600e3,
    3.36093607810698293419e2,
])


def _polevl(x, coef):
    ans = np.full_like(x, coef[0])
    for c in coef[1:]:
        ans = ans * x + c
    return ans


def _p1evl(x, coef):
    ans = x + coef[0]
    for c in coef[1:]:
        ans = ans * x + c
    return ans


def j0(x):
    """Bessel function of the first kind of order zero, x >= 0.

    Accepts scalars or arrays; a scalar input returns a float.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0):
        raise ValueError("j0 is defined here for x >= 0")
    out = np.empty_like(xa)

    small = xa <= 5.0
    if np.any(small):
        xs = xa[small]
        z = xs * xs
        tiny = xs < 1.0e-5
        r = (z - _DR1) * (z - _DR2) * _polevl(z, _RP) / _p1evl(z, _RQ)
        out[small] = np.where(tiny, 1.0 - 0.25 * z, r)
    large = ~small
    if np.any(large):
        xl = xa[large]
        w = 5.0 / xl
        q = w * w
        p = _polevl(q, _PP) / _polevl(q, _PQ)
        qq = _polevl(q, _QP) / _p1evl(q, _QQ)
        xn = xl - _PIO4
        out[large] = _SQ2OPI * (p * np.cos(xn) - w * qq * np.sin(xn)) / np.sqrt(xl)
    return float(out[0]) if scalar else out


def j1(x):
    """Bessel function of the first kind of order one, x >= 0."""
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0):
        raise ValueError("j1 is defined here for x >= 0")
    out = np.empty_like(xa)

    small = xa <= 5.0
    if np.any(small):
        xs = xa[small]
        z = xs * xs
        w = _polevl(z, _RP1) / _p1evl(z, _RQ1)
        out[small] = w * xs * (z - _Z1) * (z - _Z2)
    large = ~small
    if np.any(large):
        xl = xa[large]
        w = 5.0 / xl
        z = w * w
        p = _polevl(z, _PP1) / _polevl(z, _PQ1)
        q = _polevl(z, _QP1) / _p1evl(z, _QQ1)
        xn = xl - _THPIO4
        out[large] = _SQ2OPI * (p * np.cos(xn) - w * q * np.sin(xn)) / np.sqrt(xl)
    return float(out[0]) if scalar else out


def j0_prime(x):
    """d/dx J0(x) = -J1(x)."""
    xa = np.asarray(x, dtype=float)
    res = -j1(xa)
    return float(res) if xa.ndim == 0 else res


@dataclass(frozen=True)
class BesselZero:
    """The j-th positive zero r_j of J0 and the eigenvalue lam_j = r_j^2."""

    index: int
    r: float
    lam: float


def _mcmahon_guess(j: int) -> float:
    # McMahon expansion of the j-th J0 zero
    beta = (j - 0.25) * math.pi
    b8 = 8.0 * beta
    return beta + 1.0 / b8 - 124.0 / (3.0 * b8**3) + 120928.0 / (15.0 * b8**5)


def _bisect_zero(j: int) -> float:
    lo = (j - 0.75) * math.pi
    hi = (j + 0.25) * math.pi
    flo = j0(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = j0(mid)
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


def j0_zeros(count: int) -> list[BesselZero]:
    """First ``count`` positive zeros of J0, Newton-refined from McMahon guesses.

    Falls back to bisection on [(j - 3/4) pi, (j + 1/4) pi] if Newton leaves
    its bracket, and raises :class:`NonConvergence` after 100 iterations
    (which would signal a defective j0).
    """
    if not 1 <= count <= 64:
        raise ValueError("count must be in [1, 64]")
    zeros = []
    for j in range(1, count + 1):
        x = _mcmahon_guess(j)
        lo, hi = (j - 0.75) * math.pi, (j + 0.25) * math.pi
        converged = False
        for _ in range(100):
            f = j0(x)
            fp = j0_prime(x)
            dx = f / fp
            x_new = x - dx
            if not lo < x_new < hi:
                x_new = _bisect_zero(j)
            if abs(x_new - x) <= 1e-15 * x:
                x = x_new
                converged = True
                break
            x = x_new
        else:
            pass
        if not converged and abs(j0(x)) > 1e-12:
            raise NonConvergence(f"Newton failed for J0 zero #{j}")
        zeros.append(BesselZero(index=j, r=x, lam=x * x))
    return zeros


@dataclass
class Eigenfunction:
    """Normalized radial Dirichlet eigenfunction sampled on a grid.

    ``boundary_slope`` is the analytic value (-1)^j sqrt(2 lam_j) of the
    derivative at y = 1; the sampled boundary value is pinned to exactly 0.
    """

    index: int
    lam: float
    gridfunction: GridFunction

    @property
    def boundary_slope(self) -> float:
        return (-1.0) ** self.index * math.sqrt(2.0 * self.lam)

    @property
    def values(self) -> np.ndarray:
        return self.gridfunction.values


def eta(j: int, grid: RadialGrid, zeros: list[BesselZero] | None = None) -> Eigenfunction:
    """Sample eta_j(y) = sqrt(2) J0(y r_j) / |J0'(r_j)| on ``grid``."""
    if zeros is None:
        zeros = j0_zeros(j)
    if j < 1 or j > len(zeros):
        raise IndexError(f"eigenfunction index {j} outside precomputed zeros")
    z = zeros[j - 1]
    vals = math.sqrt(2.0) * j0(grid.y * z.r) / abs(j1(z.r))
    vals[-1] = 0.0
    return Eigenfunction(index=j, lam=z.lam, gridfunction=GridFunction(grid, vals))


def eta_deriv(j: int, grid: RadialGrid, zeros: list[BesselZero] | None = None) -> GridFunction:
    """Analytic derivative of eta_j: sqrt(2) r_j J0'(y r_j) / |J0'(r_j)|."""
    if zeros is None:
        zeros = j0_zeros(j)
    if j < 1 or j > len(zeros):
        raise IndexError(f"eigenfunction index {j} outside precomputed zeros")
    z = zeros[j - 1]
    vals = math.sqrt(2.0) * z.r * j0_prime(grid.y * z.r) / abs(j1(z.r))
    return GridFunction(grid, vals, dirichlet=False)


def scaling_coefficient(k: int, j: int, grid: RadialGrid,
                        zeros: list[BesselZero] | None = None) -> float:
    """Quadrature value of <y eta_k', eta_j>_0 (Simpson, analytic derivative).

    Equals -1 for j = k; for j != k it feeds the coupling coefficients of the
    reduced mode system.
    """
    if zeros is None:
        zeros = j0_zeros(max(k, j))
    ek_d = eta_deriv(k, grid, zeros)
    ej = eta(j, grid, zeros)
    w = grid.simpson
    return float(np.sum(w * grid.y * ek_d.values * ej.values * grid.y))


def zeros_to_csv(path, zeros: list[BesselZero]):
    """Dump (j, r_j, lam_j, boundary_slope) rows for documentation tables."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["j", "r_j", "lambda_j", "boundary_slope"])
        for z in zeros:
            slope = (-1.0) ** z.index * math.sqrt(2.0 * z.lam)
            wr.writerow([z.index, repr(z.r), repr(z.lam), repr(slope)])
