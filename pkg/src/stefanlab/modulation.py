"""Mode decomposition and diagnostics along a renormalized run.

A profile v(s) is split as v = sum_j b_j psi_{b,j} + eps with eps weighted-
orthogonal to the first k eigenfunctions of the drifted Laplacian.  For the
ground-mode regime (k = 1) the basis parameter equals the coefficient itself
and is found by a fixed-point iteration; for k > 1 the basis rides a fixed
adiabatic schedule

    b(s) = A e^{-lam_k s} / (s + 1),

with eigenpairs refreshed whenever b drifts by more than 10% (relative)
since the last assembly and linearly interpolated in b between refreshes.

Tracked per record: the coefficients b_j, the remainder eps, the second-order
energy E = ||H_b eps||^2 (weighted), the rescaled trap variables
V_j = b_j e^{(lam_k + gap_k) s}, and the leading-order mode-equation
residuals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import bessel, spectrum
from .errors import InsufficientHistory, NonConvergence, SingularGram
from .solver import SimState, TimeSeries
from .weighted import GridFunction, RadialGrid, WeightParam, inner_b, lambda_op

#: default amplitude of the adiabatic basis schedule for k > 1
ADIABATIC_AMPLITUDE = 0.02
#: below this the basis is frozen at b = 0 (eigenpairs are numerically static)
B_FREEZE = 1e-9
#: Gram conditioning cap
GRAM_COND_CAP = 1e8


def gap_exponent(k: int, zeros=None) -> float:
    """Trap-variable exponent shift: a quarter of the gap to the next-lower
    eigenvalue (any value in the open half-gap works; the midpoint is used)."""
    if k < 2:
        return 0.0
    if zeros is None:
        zeros = bessel.j0_zeros(k)
    return 0.25 * (zeros[k - 1].lam - zeros[k - 2].lam)


def adiabatic_b(s: float, k: int, amplitude: float = ADIABATIC_AMPLITUDE,
                zeros=None) -> float:
    """Adiabatic basis parameter A e^{-lam_k s} / (s + 1)."""
    if zeros is None:
        zeros = bessel.j0_zeros(k)
    lam_k = zeros[k - 1].lam
    return amplitude * math.exp(-lam_k * s) / (s + 1.0)


def adiabatic_b_deriv(s: float, k: int, amplitude: float = ADIABATIC_AMPLITUDE,
                      zeros=None) -> float:
    if zeros is None:
        zeros = bessel.j0_zeros(k)
    lam_k = zeros[k - 1].lam
    return -amplitude * math.exp(-lam_k * s) * (lam_k / (s + 1.0)
                                                + 1.0 / (s + 1.0) ** 2)


@dataclass
class Basis:
    """Eigenbasis of H_b used for one decomposition: values, eigenvalues."""

    b: float
    psis: np.ndarray          # (n+1, k) columns are psi_{b,j}
    lams: np.ndarray          # (k,)
    grid: RadialGrid

    @classmethod
    def solve(cls, grid: RadialGrid, b: float, k: int) -> "Basis":
        pairs = spectrum.eigenpairs(grid, WeightParam(b), k)
        psis = np.column_stack([p.psi.values for p in pairs])
        lams = np.array([p.lam for p in pairs])
        return cls(b=b, psis=psis, lams=lams, grid=grid)


@dataclass
class ModulationState:
    """Decomposition snapshot at one record time."""

    s: float
    k: int
    b: float
    coeffs: np.ndarray
    eps: GridFunction
    energy: float
    V: np.ndarray
    a: float
    ortho_defect: float


@dataclass
class ModDiagnostics:
    """Finite-differenced residuals of the leading mode laws.

    All quantities are reported, not asserted: the implicit constants of the
    remainder bounds are unknown.  ``ratios`` normalizes the residual by the
    predicted remainder scale (|b_1|^{5/2} for k = 1, b |b_k| for k > 1).
    """

    s: np.ndarray
    residuals: np.ndarray     # (n_interior, k)
    ratios: np.ndarray        # (n_interior,)
    psi_proj: np.ndarray      # (n_interior, k)
    phi: np.ndarray           # (n_interior,)


def _weighted_gram(psis: np.ndarray, grid: RadialGrid, w: WeightParam) -> np.ndarray:
    wv = grid.simpson * w.rho(grid.y) * grid.y
    return psis.T @ (wv[:, None] * psis)


def decompose(v: GridFunction, s: float, k: int, w: WeightParam,
              basis: Basis | None = None, zeros=None,
              compute_energy: bool = True,
              eta_k_gap: float | None = None) -> ModulationState:
    """Split v into k basis modes plus a weighted-orthogonal remainder.

    Solves the k x k Gram system for the coefficients; raises
    :class:`SingularGram` when the basis conditioning exceeds 1e8 (a sign
    that the parameter b is outside its range).
    """
    if basis is None:
        basis = Basis.solve(v.grid, w.b, k)
    gram = _weighted_gram(basis.psis, v.grid, w)
    if np.linalg.cond(gram) > GRAM_COND_CAP:
        raise SingularGram(f"Gram conditioning {np.linalg.cond(gram):.2e}")
    wv = v.grid.simpson * w.rho(v.grid.y) * v.grid.y
    rhs = basis.psis.T @ (wv * v.values)
    coeffs = np.linalg.solve(gram, rhs)
    eps_vals = v.values - basis.psis @ coeffs
    eps_vals[-1] = 0.0
    eps = GridFunction(v.grid, eps_vals)
    defect = float(np.max(np.abs(basis.psis.T @ (wv * eps_vals))))
    if zeros is None:
        zeros = bessel.j0_zeros(k)
    if eta_k_gap is None:
        eta_k_gap = gap_exponent(k, zeros)
    if k > 1:
        growth = (zeros[k - 1].lam + eta_k_gap) * s
        V = coeffs[: k - 1] * math.exp(growth)
    else:
        V = np.zeros(0)
    e_val = energy_of(eps, w) if compute_energy else float("nan")
    return ModulationState(s=s, k=k, b=w.b, coeffs=coeffs, eps=eps,
                           energy=e_val, V=V, a=float("nan"),
                           ortho_defect=defect)


def energy_of(eps: GridFunction, w: WeightParam,
              operator: spectrum.DriftOperator | None = None) -> float:
    """Second-order energy ||H_b eps||^2 in the weighted norm."""
    op = operator if operator is not None else spectrum.assemble_hb(eps.grid, w)
    e2 = op.apply(eps.values)
    gf = GridFunction(eps.grid, e2, dirichlet=False)
    return inner_b(gf, gf, w)


def energy(ms: ModulationState, w: WeightParam) -> float:
    """Energy of a decomposition snapshot (recomputed from its remainder)."""
    return energy_of(ms.eps, w)


def self_consistent_b1(v: GridFunction, tol: float = 1e-12,
                       max_iter: int = 50, initial: float | None = None,
                       return_basis: bool = False):
    """Ground-mode coefficient with the basis parameter equal to itself.

    Fixed-point iteration b <- <v, psi_{b,1}>_b / <psi_{b,1}, psi_{b,1}>_b,
    stopped at |increment| < tol; raises :class:`NonConvergence` after
    ``max_iter`` iterations.
    """
    grid = v.grid
    b = 0.0 if initial is None else float(initial)
    basis = None
    for _ in range(max_iter):
        bb = 0.0 if abs(b) < B_FREEZE else b
        basis = Basis.solve(grid, bb, 1)
        w = WeightParam(bb)
        psi = GridFunction(grid, basis.psis[:, 0])
        b_new = inner_b(v, psi, w) / inner_b(psi, psi, w)
        if abs(b_new - b) < tol:
            if return_basis:
                if abs(b_new - bb) >= B_FREEZE:
                    basis = Basis.solve(grid, b_new, 1)
                return b_new, basis
            return b_new
        b = b_new
    raise NonConvergence("self-consistent ground-mode parameter did not settle")


def build_profile(grid: RadialGrid, w: WeightParam, coeffs) -> GridFunction:
    """Leading profile sum_j coeffs[j] psi_{w.b, j+1} as initial data."""
    coeffs = np.asarray(coeffs, dtype=float)
    basis = Basis.solve(grid, w.b, len(coeffs))
    vals = basis.psis @ coeffs
    vals[-1] = 0.0
    return GridFunction(grid, vals)


def boundary_law_defect(a: float, ms: ModulationState, zeros=None) -> float:
    """|a - leading boundary law| for the tracked mode.

    Ground mode: a = -sqrt(2 lam_1) b_1 (defect expected O(|b_1|^{3/2}));
    higher modes: a = (-1)^k sqrt(2 lam_k) b_k (defect expected O(b))."""
    k = ms.k
    if zeros is None:
        zeros = bessel.j0_zeros(k)
    lam_k = zeros[k - 1].lam
    b_k = ms.coeffs[k - 1]
    law = (-1.0) ** k * math.sqrt(2.0 * lam_k) * b_k
    return abs(a - law)


def boundary_law_check(state: SimState, ms: ModulationState) -> float:
    """Boundary-law defect evaluated at a solver state (consistent times)."""
    return boundary_law_defect(state.a, ms)


def modulation_residual(states: list[ModulationState], dt_s: float,
                        zeros=None) -> ModDiagnostics:
    """Centered-difference residuals of the leading mode laws.

    Needs at least 3 consecutive states recorded at uniform spacing
    ``dt_s``.  For the ground mode the residual is
    |(b_1)_s + lam_1 b_1 + sqrt(2 lam_1) b_1^2| and the ratio divides by
    |b_1|^{5/2}; for k > 1 each lower mode includes the forced quadratic
    term with its coupling coefficient and the ratio divides by b |b_k|.
    The ``psi_proj`` column reports the profile-error projection proxy.
    """
    if len(states) < 3:
        raise InsufficientHistory("need >= 3 states for centered differences")
    k = states[0].k
    if zeros is None:
        zeros = bessel.j0_zeros(max(k, 2))
    diag = _residuals_only(states, dt_s, zeros)
    diag.psi_proj = _profile_error_projection(states, dt_s)
    return diag


def _profile_error_projection(states, dt_s):
    """|<profile-error, psi_j>_b| proxy from the remainder equation.

    Projects  d_s eps + H_b eps + (a - b) Lambda eps + Mod_j psi_j  onto the
    basis at the recorded cadence; everything is finite-differenced in s.
    """
    k = states[0].k
    grid = states[0].eps.grid
    B = np.vstack([st.coeffs for st in states])
    dB = (B[2:] - B[:-2]) / (2.0 * dt_s)
    out = np.empty((len(states) - 2, k))
    for i in range(1, len(states) - 1):
        st = states[i]
        w = WeightParam(st.b)
        basis = Basis.solve(grid, st.b if abs(st.b) >= B_FREEZE else 0.0, k)
        wv = grid.simpson * w.rho(grid.y) * grid.y
        deps = (states[i + 1].eps.values - states[i - 1].eps.values) / (2.0 * dt_s)
        op = spectrum.assemble_hb(grid, w)
        heps = op.apply(st.eps.values)
        leps = lambda_op(st.eps).values
        resid_field = deps + heps + (st.a - st.b) * leps
        proj = basis.psis.T @ (wv * resid_field)
        gram_diag = np.array([
            float(np.sum(wv * basis.psis[:, j] ** 2)) for j in range(k)
        ])
        coupling = np.empty(k)
        b_k = st.coeffs[k - 1]
        if k == 1:
            lpsi = lambda_op(GridFunction(grid, basis.psis[:, 0])).values
            ratio = float(np.sum(wv * lpsi * basis.psis[:, 0])) / gram_diag[0]
            coupling[0] = (st.a - st.b) * st.coeffs[0] * ratio
        else:
            lpsi_k = lambda_op(GridFunction(grid, basis.psis[:, k - 1])).values
            for j in range(k):
                ratio = float(np.sum(wv * lpsi_k * basis.psis[:, j])) / gram_diag[j]
                coupling[j] = st.a * b_k * ratio
        mod = dB[i - 1] + st.coeffs * basis.lams + coupling
        out[i - 1] = np.abs(proj + mod * gram_diag)
    return out


@dataclass
class TrackResult:
    """Per-record decompositions of a run plus summary diagnostics."""

    k: int
    states: list[ModulationState]
    diagnostics: ModDiagnostics | None
    record_ds: float
    n_basis_refreshes: int
    basis_curvature: float

    def coeff_array(self) -> np.ndarray:
        return np.vstack([st.coeffs for st in self.states])

    def to_csv(self, path):
        k = self.k
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            head = (["s", "b"] + [f"b_{j}" for j in range(1, k + 1)]
                    + ["E"] + [f"V_{j}" for j in range(1, k)]
                    + [f"residual_{j}" for j in range(1, k + 1)])
            wr.writerow(head)
            res_by_s = {}
            if self.diagnostics is not None:
                for i, s in enumerate(self.diagnostics.s):
                    res_by_s[round(float(s), 12)] = self.diagnostics.residuals[i]
            for st in self.states:
                res = res_by_s.get(round(st.s, 12))
                res_cols = (list(res) if res is not None else [float("nan")] * k)
                row = ([st.s, st.b] + list(st.coeffs) + [st.energy]
                       + list(st.V) + res_cols)
                wr.writerow([repr(float(x)) for x in row])


def track_run(series: TimeSeries, k: int,
              amplitude: float = ADIABATIC_AMPLITUDE,
              anchor_cache: dict | None = None,
              with_residuals: bool = True,
              with_projections: bool = False) -> TrackResult:
    """Decompose every snapshot of a completed run.

    For k = 1 the basis parameter is re-solved self-consistently per record
    (warm-started from the previous record).  For k > 1 the basis follows the
    adiabatic schedule with 10%-drift anchor refreshes; ``anchor_cache`` maps
    anchor b values to solved bases and can be shared across runs of the same
    family (the schedule does not depend on the data).
    """
    if not series.snapshots:
        raise ValueError("run was recorded without snapshots")
    grid = series.grid
    zeros = bessel.j0_zeros(max(k, 2))
    eta_gap = gap_exponent(k, zeros)
    states: list[ModulationState] = []
    n_refresh = 0
    curvature = 0.0

    if k == 1:
        b_prev = None
        for i, s in enumerate(np.asarray(series.s)):
            v = GridFunction(grid, series.snapshots[i])
            b1, basis = self_consistent_b1(v, initial=b_prev, return_basis=True)
            b_prev = b1
            bb = 0.0 if abs(b1) < B_FREEZE else b1
            ms = decompose(v, float(s), 1, WeightParam(bb), basis=basis,
                           zeros=zeros, eta_k_gap=eta_gap)
            ms.a = float(series.a[i])
            states.append(ms)
            n_refresh += 1
    else:
        cache = anchor_cache if anchor_cache is not None else {}
        b_sched = np.array([adiabatic_b(float(s), k, amplitude, zeros)
                            for s in series.s])
        # anchor layout: first record, then every >10% relative drift,
        # frozen at b = 0 below the numeric floor
        anchors: list[float] = []
        last = None
        for b in b_sched:
            key = 0.0 if b < B_FREEZE else b
            if last is None or (last > 0.0 and key > 0.0
                                and abs(key - last) > 0.1 * last) \
                    or (key == 0.0 and last != 0.0):
                anchors.append(key)
                last = key
        anchor_bases = {}
        for key in anchors:
            if key not in cache:
                cache[key] = Basis.solve(grid, key, k)
                n_refresh += 1
            anchor_bases[key] = cache[key]
        anchor_vals = sorted(anchor_bases.keys())
        # basis interpolation curvature: second difference across anchor triples
        av = anchor_vals
        for i in range(1, len(av) - 1):
            t = (av[i] - av[i - 1]) / (av[i + 1] - av[i - 1])
            mix = ((1 - t) * anchor_bases[av[i - 1]].psis
                   + t * anchor_bases[av[i + 1]].psis)
            curvature = max(curvature, float(np.max(np.abs(
                mix - anchor_bases[av[i]].psis))))

        def basis_at(b: float) -> Basis:
            key = 0.0 if b < B_FREEZE else b
            if key <= av[0]:
                lo = hi = av[0]
            elif key >= av[-1]:
                lo = hi = av[-1]
            else:
                idx = np.searchsorted(av, key)
                lo, hi = av[idx - 1], av[idx]
            if lo == hi:
                base = anchor_bases[lo]
                return Basis(b=key, psis=base.psis, lams=base.lams, grid=grid)
            t = (key - lo) / (hi - lo)
            blo, bhi = anchor_bases[lo], anchor_bases[hi]
            return Basis(b=key,
                         psis=(1 - t) * blo.psis + t * bhi.psis,
                         lams=(1 - t) * blo.lams + t * bhi.lams,
                         grid=grid)

        for i, s in enumerate(np.asarray(series.s)):
            v = GridFunction(grid, series.snapshots[i])
            b = float(b_sched[i])
            bb = 0.0 if b < B_FREEZE else b
            ms = decompose(v, float(s), k, WeightParam(bb),
                           basis=basis_at(bb), zeros=zeros, eta_k_gap=eta_gap)
            ms.b = bb
            ms.a = float(series.a[i])
            states.append(ms)

    diagnostics = None
    if with_residuals and len(states) >= 3:
        dt = float(series.s[1] - series.s[0])
        if with_projections:
            diagnostics = modulation_residual(states, dt, zeros=zeros)
        else:
            diagnostics = _residuals_only(states, dt, zeros)
    return TrackResult(k=k, states=states, diagnostics=diagnostics,
                       record_ds=float(series.s[1] - series.s[0])
                       if len(series.s) > 1 else float("nan"),
                       n_basis_refreshes=n_refresh,
                       basis_curvature=curvature)


def _residuals_only(states, dt_s, zeros) -> ModDiagnostics:
    """Residual/ratio/phi diagnostics without the costly projection pass."""
    k = states[0].k
    lam = np.array([z.lam for z in zeros])
    grid = states[0].eps.grid
    gcoef = (np.array([bessel.scaling_coefficient(k, j, grid, zeros)
                       for j in range(1, k)]) if k > 1 else np.zeros(0))
    B = np.vstack([st.coeffs for st in states])
    bpar = np.array([st.b for st in states])
    a_arr = np.array([st.a for st in states])
    s_arr = np.array([st.s for st in states])
    dB = (B[2:] - B[:-2]) / (2.0 * dt_s)
    dbpar = (bpar[2:] - bpar[:-2]) / (2.0 * dt_s)
    mid = slice(1, -1)
    Bm = B[mid]
    res = np.empty_like(dB)
    c_k = math.sqrt(2.0 * lam[k - 1])
    res[:, k - 1] = np.abs(dB[:, k - 1] + lam[k - 1] * Bm[:, k - 1]
                           + (-1.0) ** (k + 1) * c_k * Bm[:, k - 1] ** 2)
    for j in range(1, k):
        res[:, j - 1] = np.abs(dB[:, j - 1] + lam[j - 1] * Bm[:, j - 1]
                               + (-1.0) ** k * c_k * Bm[:, k - 1] ** 2
                               * gcoef[j - 1])
    if k == 1:
        ratios = res[:, 0] / np.maximum(np.abs(Bm[:, 0]) ** 2.5, 1e-300)
    else:
        ratios = res.sum(axis=1) / np.maximum(
            np.abs(bpar[mid]) * np.abs(Bm[:, k - 1]), 1e-300)
    phi = dbpar + 2.0 * bpar[mid] * (a_arr[mid] - bpar[mid])
    return ModDiagnostics(s=s_arr[mid], residuals=res, ratios=ratios,
                          psi_proj=np.full((len(s_arr) - 2, k), np.nan),
                          phi=phi)
