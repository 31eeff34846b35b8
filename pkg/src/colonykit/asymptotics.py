"""Weakly nonlinear expansion of steady states near a bifurcation point.

Near the bifurcation value sigma0_j the steady state is expanded in a small
amplitude eps:

    u = 1 + eps * a * cos(s x) + eps**2 * (d1 + d2 * cos(2 s x)) + ...
    v = 1 + eps *     cos(s x) + eps**2 * (d3 + d4 * cos(2 s x)) + ...
    sigma = sigma0 + eps**2 * sigma2 + ...            (s = sqrt(lambda_j))

The first correction to sigma vanishes by solvability; the second-order
coefficients come from projecting the quadratic forcing onto the adjoint
kernel.  sigma2 < 0 means the branch bends backward (exists for
sigma < sigma0).  The admissible-mode branch is stable exactly when the
constant eta below is positive; branches of any other mode are unstable
regardless.

Two independent routes to eta are provided: the closed form, and a
quadrature of the adjoint projection of the second-order eigenvalue
forcing assembled term by term (``eta_by_quadrature``).  They must agree
to rounding; the quadrature is the oracle for the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import simpson

from .errors import BranchSideError, NonpositiveSigma0Error, ResonantDenominatorError
from .linear_analysis import (
    BifurcationSummary,
    ModelParams,
    bifurcation_sigma,
    eigenvalue_lambda,
    scan_modes,
)
from .motility import MotilityModel

__all__ = [
    "BranchVerdict",
    "Expansion",
    "expansion_coefficients",
    "eta",
    "eta_by_quadrature",
    "adjoint_projection_first_order",
    "evaluate_approximate_steady_state",
    "epsilon_for_sigma",
    "amplitude_prediction",
    "branch_stability",
]


class BranchVerdict(Enum):
    UNSTABLE_WRONG_MODE = "unstable_wrong_mode"
    STABLE_ADMISSIBLE = "stable_admissible"
    UNSTABLE_ADMISSIBLE = "unstable_admissible"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Expansion:
    """All second-order expansion data for one mode j.

    eta and gamma2 are populated only for the admissible mode (j == i_a);
    they quantify the slow eigenvalue gamma ~ eps**2 * gamma2 that decides
    the stability of the admissible branch.
    """

    j: int
    lambda_j: float
    l: float
    sigma0: float
    sigma1: float
    sigma2: float
    a: float
    c: float
    d1: float
    d2: float
    d3: float
    d4: float
    eta: float | None
    gamma2: float | None
    verdict: BranchVerdict

    @property
    def wavenumber(self) -> float:
        return math.sqrt(self.lambda_j)


def _taylor_data(m: MotilityModel):
    return tuple(float(m.evaluate(1.0, k)) for k in range(4))


def _second_order_coefficients(lam, sigma0, a, r1, rp1, rpp1, rppp1, D):
    """d1..d4 and sigma2 from the solvability algebra at one mode."""
    d1 = -0.5 * a * a
    d3 = d1
    harmonic = lam * rpp1 + 2.0 * lam * rp1 * a + 0.5 * sigma0 * a * a
    denom = -4.0 * rp1 * lam + (-4.0 * r1 * lam - sigma0) * (1.0 + 4.0 * D * lam)
    scale = max(1.0, abs(4.0 * rp1 * lam), abs((4.0 * r1 * lam + sigma0) * (1.0 + 4.0 * D * lam)))
    if abs(denom) < 1e-10 * scale:
        raise ResonantDenominatorError(
            f"second-harmonic denominator {denom:.3e} is resonant at this mode"
        )
    d4 = harmonic / denom
    d2 = (1.0 + 4.0 * D * lam) * d4
    sigma2 = (
        -rpp1 * lam * (0.375 + d3 / a + d4 / (2.0 * a))
        - rp1 * lam * (d1 / a + d2 / (2.0 * a) + d4 / 2.0 + d3)
        - 2.0 * sigma0 * (d1 + 0.5 * d2)
        - rppp1 * lam / (8.0 * a)
    )
    return d1, d2, d3, d4, sigma2


def _eta_closed_form(lam, sigma0, sigma2, a, d1, d2, d3, d4, rp1, rpp1, rppp1):
    return (
        0.25 * rp1 * lam * (6.0 * d1 + 3.0 * d2 + (6.0 * d3 + 3.0 * d4) * a)
        + rpp1 * lam * (24.0 * d3 + 12.0 * d4 + 9.0 * a) / 16.0
        + 3.0 * rppp1 * lam / 16.0
        + 3.0 * sigma0 * a * (d1 + 0.5 * d2)
        + 0.5 * sigma2 * a
    )


def expansion_coefficients(
    j: int,
    p: ModelParams,
    m: MotilityModel,
    summary: BifurcationSummary | None = None,
) -> Expansion:
    """Closed-form expansion data for mode j.

    Requires sigma0_j > 0 (a bifurcation point exists) and a nonresonant
    second harmonic.  Pass a precomputed mode scan to avoid rescanning.
    """
    if summary is None:
        summary = scan_modes(p, m)
    lam = eigenvalue_lambda(j, p.l)
    sigma0 = bifurcation_sigma(j, p, m)
    if sigma0 <= 0:
        raise NonpositiveSigma0Error(
            f"mode {j} has bifurcation value {sigma0:.6g} <= 0; no branch emanates there"
        )
    r1, rp1, rpp1, rppp1 = _taylor_data(m)
    a = 1.0 + p.D * lam
    c = p.D * a / rp1
    d1, d2, d3, d4, sigma2 = _second_order_coefficients(lam, sigma0, a, r1, rp1, rpp1, rppp1, p.D)

    eta_val = None
    gamma2_val = None
    if j == summary.i_a:
        eta_val = _eta_closed_form(lam, sigma0, sigma2, a, d1, d2, d3, d4, rp1, rpp1, rppp1)
        # the adjoint normalization integral is negative whenever r'(1) < 0
        denom = 0.5 * p.l * (p.D * a * a / rp1 - p.D * lam)
        gamma2_val = -c * p.l * eta_val / denom
        if eta_val > 0:
            verdict = BranchVerdict.STABLE_ADMISSIBLE
        elif eta_val < 0:
            verdict = BranchVerdict.UNSTABLE_ADMISSIBLE
        else:
            verdict = BranchVerdict.INDETERMINATE
    else:
        verdict = BranchVerdict.UNSTABLE_WRONG_MODE

    return Expansion(
        j=j,
        lambda_j=lam,
        l=p.l,
        sigma0=sigma0,
        sigma1=0.0,
        sigma2=sigma2,
        a=a,
        c=c,
        d1=d1,
        d2=d2,
        d3=d3,
        d4=d4,
        eta=eta_val,
        gamma2=gamma2_val,
        verdict=verdict,
    )


def eta(p: ModelParams, m: MotilityModel, summary: BifurcationSummary) -> float:
    """Stability constant of the admissible-mode branch (closed form)."""
    return expansion_coefficients(summary.i_a, p, m, summary).eta


def branch_stability(j: int, summary: BifurcationSummary, e: Expansion) -> BranchVerdict:
    """Stability verdict for the mode-j branch near onset.

    Any branch with j != i_a is unstable; the admissible branch is stable
    exactly when eta > 0.
    """
    if j != summary.i_a:
        return BranchVerdict.UNSTABLE_WRONG_MODE
    if e.eta is None:
        raise ValueError("expansion lacks eta; compute it with the matching mode scan")
    if e.eta > 0:
        return BranchVerdict.STABLE_ADMISSIBLE
    if e.eta < 0:
        return BranchVerdict.UNSTABLE_ADMISSIBLE
    return BranchVerdict.INDETERMINATE


# ---------------------------------------------------------------------------
# quadrature oracle for the solvability projections
# ---------------------------------------------------------------------------


class _PerturbationFields:
    """Ingredient fields of the eigenvalue perturbation hierarchy on a grid.

    Steady-state corrections (u1, v1), (u2, v2), the kernel eigenfunction
    pair (phi0, psi0), its first correction (phi1, psi1) with coefficients
    twice the d's, and the adjoint kernel component ubar = c * cos(s x).
    """

    def __init__(self, e: Expansion, x: np.ndarray):
        s = e.wavenumber
        cos1 = np.cos(s * x)
        sin1 = np.sin(s * x)
        cos2 = np.cos(2.0 * s * x)
        sin2 = np.sin(2.0 * s * x)
        lam = e.lambda_j

        self.v1 = cos1
        self.v1_x = -s * sin1
        self.v1_xx = -lam * cos1
        self.u1 = e.a * cos1
        self.u1_x = -e.a * s * sin1
        self.u1_xx = -e.a * lam * cos1

        self.u2 = e.d1 + e.d2 * cos2
        self.u2_x = -2.0 * s * e.d2 * sin2
        self.u2_xx = -4.0 * lam * e.d2 * cos2
        self.v2 = e.d3 + e.d4 * cos2
        self.v2_x = -2.0 * s * e.d4 * sin2
        self.v2_xx = -4.0 * lam * e.d4 * cos2

        self.phi0 = e.a * cos1
        self.phi0_x = -e.a * s * sin1
        self.phi0_xx = -e.a * lam * cos1
        self.psi0 = cos1
        self.psi0_x = -s * sin1
        self.psi0_xx = -lam * cos1

        self.phi1 = 2.0 * self.u2
        self.phi1_x = 2.0 * self.u2_x
        self.phi1_xx = 2.0 * self.u2_xx
        self.psi1 = 2.0 * self.v2
        self.psi1_x = 2.0 * self.v2_x
        self.psi1_xx = 2.0 * self.v2_xx

        self.ubar = e.c * cos1


def _first_order_eigen_forcing(e: Expansion, m: MotilityModel, f: _PerturbationFields):
    _, rp1, rpp1, _ = _taylor_data(m)
    s0 = e.sigma0
    return (
        -rp1 * f.v1 * f.phi0_xx
        - rp1 * f.u1 * f.psi0_xx
        - rpp1 * f.v1 * f.psi0_xx
        - 2.0 * rp1 * f.v1_x * f.phi0_x
        - 2.0 * rpp1 * f.v1_x * f.psi0_x
        - 2.0 * rp1 * f.u1_x * f.psi0_x
        - rpp1 * f.v1_xx * f.psi0
        - rp1 * f.u1_xx * f.psi0
        - rp1 * f.v1_xx * f.phi0
        + e.sigma1 * f.phi0
        + 2.0 * s0 * f.u1 * f.phi0
    )


def _second_order_eigen_forcing(e: Expansion, m: MotilityModel, f: _PerturbationFields):
    _, rp1, rpp1, rppp1 = _taylor_data(m)
    s0 = e.sigma0
    return (
        -rp1 * f.v1 * f.phi1_xx
        - rp1 * f.v2 * f.phi0_xx
        - 0.5 * rpp1 * f.v1 ** 2 * f.phi0_xx
        - rp1 * f.u1 * f.psi1_xx
        - rp1 * f.u2 * f.psi0_xx
        - rpp1 * f.v1 * f.psi1_xx
        - rpp1 * f.v1 * f.u1 * f.psi0_xx
        - rpp1 * f.v2 * f.psi0_xx
        - 0.5 * rppp1 * f.v1 ** 2 * f.psi0_xx
        - 2.0 * rp1 * f.v1_x * f.phi1_x
        - 2.0 * rp1 * f.v2_x * f.phi0_x
        - 2.0 * rpp1 * f.v1 * f.v1_x * f.phi0_x
        - 2.0 * rpp1 * f.v1_x * f.psi1_x
        - 2.0 * rpp1 * f.v1_x * f.u1 * f.psi0_x
        - 2.0 * rpp1 * f.v2_x * f.psi0_x
        - 2.0 * rppp1 * f.v1_x * f.v1 * f.psi0_x
        - 2.0 * rp1 * f.u1_x * f.psi1_x
        - 2.0 * rp1 * f.u2_x * f.psi0_x
        - 2.0 * rpp1 * f.u1_x * f.v1 * f.psi0_x
        - rppp1 * f.v1_x ** 2 * f.psi0
        - rpp1 * f.v1_xx * f.psi1
        - rpp1 * f.v1_xx * f.u1 * f.psi0
        - rpp1 * f.v2_xx * f.psi0
        - rppp1 * f.v1_xx * f.v1 * f.psi0
        - 2.0 * rpp1 * f.v1_x * f.u1_x * f.psi0
        - rp1 * f.u1_xx * f.psi1
        - rp1 * f.u2_xx * f.psi0
        - rpp1 * f.u1_xx * f.v1 * f.psi0
        - rpp1 * f.v1_x ** 2 * f.phi0
        - rp1 * f.v1_xx * f.phi1
        - rp1 * f.v2_xx * f.phi0
        - rpp1 * f.v1_xx * f.v1 * f.phi0
        + 2.0 * s0 * f.u1 * f.phi1
        + 2.0 * s0 * f.u2 * f.phi0
        + e.sigma2 * f.phi0
    )


def _quadrature_grid(l: float, n_points: int) -> np.ndarray:
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError("composite Simpson needs an odd point count >= 3")
    return np.linspace(0.0, l, n_points)


def adjoint_projection_first_order(
    p: ModelParams, m: MotilityModel, summary: BifurcationSummary, n_points: int = 4097
) -> float:
    """Quadrature of the first-order forcing against the adjoint kernel.

    This integral is the numerator of the first eigenvalue correction; the
    expansion machinery relies on it vanishing identically.
    """
    e = expansion_coefficients(summary.i_a, p, m, summary)
    x = _quadrature_grid(p.l, n_points)
    f = _PerturbationFields(e, x)
    g = _first_order_eigen_forcing(e, m, f)
    return float(simpson(g * f.ubar, x=x))


def eta_by_quadrature(
    p: ModelParams, m: MotilityModel, summary: BifurcationSummary, n_points: int = 4097
) -> float:
    """Independent route to eta: Simpson quadrature of the adjoint projection
    of the second-order eigenvalue forcing, divided by c * l.

    The integrand is a trigonometric polynomial of low degree, so composite
    Simpson on thousands of points is exact to rounding.
    """
    e = expansion_coefficients(summary.i_a, p, m, summary)
    x = _quadrature_grid(p.l, n_points)
    f = _PerturbationFields(e, x)
    g = _second_order_eigen_forcing(e, m, f)
    return float(simpson(g * f.ubar, x=x) / (e.c * p.l))


# ---------------------------------------------------------------------------
# approximate steady states and the amplitude law
# ---------------------------------------------------------------------------


def second_order_profiles(
    e: Expansion, epsilon: float, x: np.ndarray, u1_scale: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """(u, v) arrays of the second-order approximate steady state on x.

    u1_scale rescales only the leading u-amplitude; simulation protocols
    use it to seed off-branch initial data.
    """
    s = e.wavenumber
    cos1 = np.cos(s * np.asarray(x, dtype=float))
    cos2 = np.cos(2.0 * s * np.asarray(x, dtype=float))
    u = 1.0 + epsilon * u1_scale * e.a * cos1 + epsilon ** 2 * (e.d1 + e.d2 * cos2)
    v = 1.0 + epsilon * cos1 + epsilon ** 2 * (e.d3 + e.d4 * cos2)
    return u, v


def evaluate_approximate_steady_state(e: Expansion, epsilon: float, grid: np.ndarray):
    """Second-order approximate steady state as a Field on a uniform grid.

    The grid must span [0, l] uniformly (Neumann cosine modes are only
    meaningful there).  The sign of epsilon selects the pattern phase.
    """
    from .pde_solver import Field  # local import to avoid a cycle

    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("grid must be a 1-D array with at least two nodes")
    h = np.diff(x)
    if not (np.allclose(h, h[0], rtol=1e-12, atol=1e-12) and abs(x[0]) < 1e-12):
        raise ValueError("grid must be uniform and start at 0")
    if abs(x[-1] - e.l) > 1e-9 * max(1.0, e.l):
        raise ValueError(f"grid must end at the domain length {e.l}, got {x[-1]}")
    u, v = second_order_profiles(e, epsilon, x)
    return Field(u=u, v=v, l=e.l)


def epsilon_for_sigma(e: Expansion, sigma: float) -> float:
    """Invert sigma = sigma0 + eps**2 * sigma2 for the positive amplitude.

    Raises BranchSideError when sigma lies on the side of sigma0 where the
    branch does not exist (sigma2 < 0 means the branch bends backward).
    """
    ratio = (sigma - e.sigma0) / e.sigma2
    if ratio < 0:
        side = "below" if e.sigma2 < 0 else "above"
        raise BranchSideError(
            f"mode {e.j} branch exists only {side} sigma0={e.sigma0:.6g}; got sigma={sigma:.6g}"
        )
    return math.sqrt(ratio)


def amplitude_prediction(e: Expansion, sigma: float) -> float:
    """Squared leading-mode amplitude of u - 1 predicted at growth rate sigma.

    Norm convention: the amplitude of the leading cosine mode, (eps * a)**2,
    which makes the prediction an identity for the truncated expansion.
    """
    eps = epsilon_for_sigma(e, sigma)
    return (eps * e.a) ** 2
