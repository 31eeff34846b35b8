"""Linear stability of the uniform state and the bifurcation-value structure.

Perturbing the uniform steady state (u, v) = (1, 1) with a Neumann cosine
mode of eigenvalue lam gives a quadratic dispersion relation for the growth
rate rho:

    rho**2 + [(D + r(1)) lam + 1 + sigma] rho
           + [sigma + r(1) lam] (1 + D lam) + r'(1) lam = 0.

The constant coefficient vanishes exactly at the bifurcation value

    sigma_j = -[r'(1) / (1 + D lam_j) + r(1)] lam_j,    lam_j = (pi j / l)**2,

where a steady-state branch of mode j emanates from the trivial branch.
Treating lam as a continuous variable, sigma(lam) attains its maximum
sigma_c at lam_star; the grid maximum sigma_a = sigma_{i_a} defines the
admissible wave mode i_a, the only candidate for a stable small pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NoInstabilityWindowError, NoPositiveModesError, ScanWindowError
from .motility import MotilityModel

__all__ = [
    "ModelParams",
    "ModeInfo",
    "BifurcationSummary",
    "StabilityKind",
    "UniformStateClassification",
    "eigenvalue_lambda",
    "bifurcation_sigma",
    "dispersion_roots",
    "critical_sigma",
    "default_mode_limit",
    "scan_modes",
    "classify_uniform_state",
]


@dataclass(frozen=True)
class ModelParams:
    """Scalar parameters: signal diffusivity D, growth rate sigma, length l."""

    D: float = 1.0
    sigma: float = 0.3
    l: float = 20.0

    def __post_init__(self):
        if self.D <= 0:
            raise ValueError(f"D must be > 0, got {self.D}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.l <= 0:
            raise ValueError(f"l must be > 0, got {self.l}")


@dataclass(frozen=True)
class ModeInfo:
    """Spectral data for one cosine mode at the current parameters."""

    j: int
    lambda_j: float
    sigma_j: float
    a_j: float  # kernel u-amplitude 1 + D * lambda_j
    rho_pair: tuple[complex, complex]  # dispersion roots at params.sigma

    @property
    def max_growth_rate(self) -> float:
        return self.rho_pair[0].real


@dataclass(frozen=True)
class BifurcationSummary:
    """Aggregate critical quantities from a scan over grid modes."""

    modes: tuple[ModeInfo, ...]
    i_c: int            # largest j with sigma_j > 0
    i_a: int            # argmax of sigma_j (smallest j on ties)
    sigma_a: float      # sigma_{i_a}
    sigma_c: float      # continuum envelope maximum of sigma(lam)
    lambda_star: float  # maximizing eigenvalue of the envelope
    ordering: tuple[int, ...]  # mode indices sorted by ascending sigma_j

    def mode(self, j: int) -> ModeInfo:
        if not 1 <= j <= len(self.modes):
            raise ValueError(f"mode {j} outside scanned range 1..{len(self.modes)}")
        return self.modes[j - 1]


def eigenvalue_lambda(j: int, l: float) -> float:
    """Neumann Laplacian eigenvalue (pi j / l)**2 on an interval of length l."""
    if j < 0:
        raise ValueError(f"mode index must be >= 0, got {j}")
    if l <= 0:
        raise ValueError(f"l must be > 0, got {l}")
    return (math.pi * j / l) ** 2


def bifurcation_sigma(j: int, p: ModelParams, m: MotilityModel) -> float:
    """Growth rate at which mode j's dispersion root crosses zero."""
    if j < 1:
        raise ValueError(f"mode index must be >= 1, got {j}")
    lam = eigenvalue_lambda(j, p.l)
    r1 = m.evaluate(1.0, 0)
    rp1 = m.evaluate(1.0, 1)
    return -(rp1 / (1.0 + p.D * lam) + r1) * lam


def dispersion_roots(lam: float, p: ModelParams, m: MotilityModel) -> tuple[complex, complex]:
    """Both growth-rate roots for eigenvalue lam, ordered by descending real part.

    Real roots are returned with exactly zero imaginary part.
    """
    if lam < 0:
        raise ValueError(f"eigenvalue must be >= 0, got {lam}")
    r1 = m.evaluate(1.0, 0)
    rp1 = m.evaluate(1.0, 1)
    b = (p.D + r1) * lam + 1.0 + p.sigma
    c = (p.sigma + r1 * lam) * (1.0 + p.D * lam) + rp1 * lam
    disc = b * b - 4.0 * c
    if disc >= 0.0:
        # avoid cancellation: compute the large-magnitude root first
        s = math.sqrt(disc)
        q = -0.5 * (b + math.copysign(s, b)) if b != 0 else 0.5 * s
        if q == 0.0:  # b == 0 and disc == 0
            roots = (complex(0.0), complex(0.0))
        else:
            roots = (complex(q), complex(c / q))
    else:
        s = math.sqrt(-disc)
        roots = (complex(-0.5 * b, 0.5 * s), complex(-0.5 * b, -0.5 * s))
    return tuple(sorted(roots, key=lambda z: -z.real))


def critical_sigma(p: ModelParams, m: MotilityModel) -> tuple[float, float]:
    """Envelope maximum (sigma_c, lambda_star) of sigma(lam) over real lam.

    Requires r'(1) + r(1) < 0; otherwise no eigenvalue destabilizes the
    uniform state and NoInstabilityWindowError is raised.
    """
    r1 = m.evaluate(1.0, 0)
    rp1 = m.evaluate(1.0, 1)
    if rp1 + r1 > 0:
        raise NoInstabilityWindowError(
            f"r'(1) + r(1) = {rp1 + r1:.6g} > 0: uniform state stable for every growth rate"
        )
    # the balanced case r'(1) = -r(1) is the boundary: an empty window at 0
    lambda_star = (math.sqrt(-rp1 / r1) - 1.0) / p.D
    sigma_c = (math.sqrt(-rp1) - math.sqrt(r1)) ** 2 / p.D
    return sigma_c, lambda_star


def default_mode_limit(p: ModelParams, m: MotilityModel) -> int:
    """Scan window covering the unstable band with margin.

    sigma_j < 0 once lam_j exceeds a few multiples of lambda_star, so four
    times the mode count reaching lambda_star is a safe ceiling.  Falls back
    to a small fixed window when no instability band exists.
    """
    r1 = m.evaluate(1.0, 0)
    rp1 = m.evaluate(1.0, 1)
    if rp1 + r1 >= 0:
        return max(16, 2 * math.ceil(p.l / math.pi))
    _, lambda_star = critical_sigma(p, m)
    return max(4, 4 * math.ceil(p.l * math.sqrt(lambda_star) / math.pi))


def scan_modes(p: ModelParams, m: MotilityModel, j_max: int | None = None) -> BifurcationSummary:
    """Compute per-mode bifurcation data for j = 1..j_max and the aggregates.

    Raises ScanWindowError if sigma_{j_max} is still positive (cannot
    bracket i_c) and NoPositiveModesError if no grid mode has a positive
    bifurcation value.
    """
    sigma_c, lambda_star = critical_sigma(p, m)  # also enforces the window precondition
    if j_max is None:
        j_max = default_mode_limit(p, m)
    if j_max < 1:
        raise ValueError(f"j_max must be >= 1, got {j_max}")

    modes = []
    for j in range(1, j_max + 1):
        lam = eigenvalue_lambda(j, p.l)
        sig = bifurcation_sigma(j, p, m)
        modes.append(
            ModeInfo(
                j=j,
                lambda_j=lam,
                sigma_j=sig,
                a_j=1.0 + p.D * lam,
                rho_pair=dispersion_roots(lam, p, m),
            )
        )

    sigmas = np.array([mi.sigma_j for mi in modes])
    if sigmas[-1] > 0:
        raise ScanWindowError(
            f"sigma_j still positive at j_max={j_max}; enlarge the scan window"
        )
    positive = np.flatnonzero(sigmas > 0)
    if positive.size == 0:
        raise NoPositiveModesError("no grid mode has a positive bifurcation value")
    i_c = int(positive[-1]) + 1
    i_a = int(np.argmax(sigmas)) + 1  # argmax returns the first (smallest j) on ties
    ordering = tuple(int(k) + 1 for k in np.argsort(sigmas, kind="stable"))
    return BifurcationSummary(
        modes=tuple(modes),
        i_c=i_c,
        i_a=i_a,
        sigma_a=float(sigmas[i_a - 1]),
        sigma_c=sigma_c,
        lambda_star=lambda_star,
        ordering=ordering,
    )


class StabilityKind(Enum):
    STABLE_BY_MONOTONICITY = "stable_by_monotonicity"
    STABLE_BY_LARGE_SIGMA = "stable_by_large_sigma"
    UNSTABLE = "unstable"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class UniformStateClassification:
    kind: StabilityKind
    unstable_modes: tuple[int, ...]
    max_growth_rate: float


def classify_uniform_state(
    p: ModelParams, m: MotilityModel, j_max: int | None = None
) -> UniformStateClassification:
    """Classify the uniform state (1, 1) at the current growth rate.

    Sufficient stability conditions are tried first (monotone motility
    balance, then large growth rate); otherwise grid modes with positive
    growth are listed.  A growth rate between the grid maximum sigma_a and
    the envelope maximum sigma_c can leave no grid mode unstable while no
    stability criterion applies; that window reports INDETERMINATE.
    """
    r1 = m.evaluate(1.0, 0)
    rp1 = m.evaluate(1.0, 1)
    if j_max is None:
        j_max = default_mode_limit(p, m)

    rates = {}
    for j in range(0, j_max + 1):
        lam = eigenvalue_lambda(j, p.l)
        rates[j] = dispersion_roots(lam, p, m)[0].real
    max_rate = max(rates.values())
    unstable = tuple(j for j in range(1, j_max + 1) if rates[j] > 0)

    if rp1 + r1 >= 0:
        kind = StabilityKind.STABLE_BY_MONOTONICITY
    elif p.sigma * p.D > -(rp1 + r1) or p.sigma > critical_sigma(p, m)[0]:
        kind = StabilityKind.STABLE_BY_LARGE_SIGMA
    elif unstable:
        kind = StabilityKind.UNSTABLE
    else:
        kind = StabilityKind.INDETERMINATE
    return UniformStateClassification(kind=kind, unstable_modes=unstable, max_growth_rate=max_rate)
