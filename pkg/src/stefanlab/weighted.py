"""Gaussian-weighted radial geometry on the unit disk.

Carries the uniform radial grid, the drift weight rho_b(y) = exp(-b y^2 / 2),
the weighted inner product <f, g>_b = int_0^1 f g rho_b y dy, the associated
L2/H1 norms, and the scaling operator  f -> y f'(y).

All quadrature is composite Simpson on the grid nodes (O(h^4) on smooth
integrands); derivatives use 4th-order stencils so that quadrature error,
not differentiation, dominates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch

#: hard cap on the drift parameter accepted by library entry points
B_CAP = 0.2
#: above this the perturbative expansions are no longer comfortably valid
B_WARN = 0.05


class RadialGrid:
    """Uniform, endpoint-inclusive grid y_i = i/n on [0, 1].

    ``n`` must be even (composite Simpson) and at least 8.
    """

    __slots__ = ("n", "h", "y", "simpson")

    def __init__(self, n: int):
        if n < 8 or n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 8, got {n}")
        self.n = int(n)
        self.h = 1.0 / self.n
        self.y = np.linspace(0.0, 1.0, self.n + 1)
        w = np.ones(self.n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        self.simpson = w * (self.h / 3.0)

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and other.n == self.n

    def __hash__(self):
        return hash(("RadialGrid", self.n))

    def __repr__(self):
        return f"RadialGrid(n={self.n})"


@dataclass(frozen=True)
class WeightParam:
    """Drift/weight parameter b with the validity cap |b| < 0.2.

    A warning is emitted above |b| = 0.05 where the expansions are only
    marginally accurate.
    """

    b: float

    def __post_init__(self):
        if not np.isfinite(self.b) or abs(self.b) >= B_CAP:
            raise ValueError(f"|b| must be < {B_CAP}, got {self.b}")
        if abs(self.b) > B_WARN:
            warnings.warn(
                f"drift parameter |b|={abs(self.b):.3g} > {B_WARN}; "
                "expansions degrade in this range",
                stacklevel=2,
            )

    def rho(self, y: np.ndarray) -> np.ndarray:
        """Weight rho_b(y) = exp(-b y^2 / 2)."""
        return np.exp(-0.5 * self.b * np.asarray(y) ** 2)


@dataclass
class GridFunction:
    """Sampled radial profile on a :class:`RadialGrid`.

    Dirichlet-tagged functions must vanish exactly at y = 1.
    """

    grid: RadialGrid
    values: np.ndarray
    dirichlet: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n + 1,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.n + 1} nodes)"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function has non-finite values")
        if self.dirichlet and self.values[-1] != 0.0:
            raise ValueError("Dirichlet-tagged function must vanish at y=1")

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy(), self.dirichlet)


def _check_same_grid(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise GridMismatch(f"{f.grid} vs {g.grid}")


def inner_b(f: GridFunction, g: GridFunction, w: WeightParam) -> float:
    """Simpson approximation of int_0^1 f g rho_b y dy."""
    _check_same_grid(f, g)
    grid = f.grid
    return float(np.sum(grid.simpson * f.values * g.values * w.rho(grid.y) * grid.y))


def norm_b(f: GridFunction, w: WeightParam) -> float:
    """Weighted L2 norm."""
    return float(np.sqrt(max(inner_b(f, f, w), 0.0)))


def deriv(f: GridFunction) -> GridFunction:
    """4th-order first derivative (5-point one-sided stencils at the ends)."""
    v = f.values
    h = f.grid.h
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    d[0] = c @ v[:5]
    d[1] = c @ v[1:6]
    cr = -c[::-1]
    d[-1] = cr @ v[-5:]
    d[-2] = cr @ v[-6:-1]
    return GridFunction(f.grid, d, dirichlet=False)


def lambda_op(f: GridFunction) -> GridFunction:
    """Scaling operator y d/dy applied to f; exactly zero at the origin."""
    d = deriv(f)
    return GridFunction(f.grid, f.grid.y * d.values, dirichlet=False)


def h1b_norm(f: GridFunction, w: WeightParam) -> float:
    """sqrt(||f'||_{L2_b}^2 + ||f||_{L2_b}^2) for a Dirichlet grid function."""
    if not f.dirichlet:
        raise ValueError("h1b_norm expects a Dirichlet-tagged grid function")
    df = deriv(f)
    return float(np.sqrt(inner_b(df, df, w) + inner_b(f, f, w)))
