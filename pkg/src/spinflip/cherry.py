"""Cherry Hamiltonian and its single-cluster tridiagonal model.

H_cherry = (p1^2 + q1^2)/2 - w (p2^2 + q2^2)/2 + mu p1 p2

Quantized on M oscillator levels each, the uncoupled levels
E = n1 - w n2 + (1 - w)/2 group into clusters alpha = n1 - n2.  One cluster
(alpha = 0) is modelled by the M x M matrix with diagonal -Delta m and
off-diagonal mu m / 2 between m - 1 and m, m = 1..M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

TAIL_WINDOW = (1e-12, 0.1)
FIT_RESIDUAL_LIMIT = 0.5
MATCH_WEIGHT_LIMIT = 0.5


@dataclass(frozen=True)
class CherryParams:
    M: int
    w: float
    mu: float = 0.0

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if not self.w > 0:
            raise ValueError("w must be positive")


@dataclass(frozen=True)
class ClusterParams:
    M: int
    Delta: float
    mu: float = 0.0

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if self.Delta < 0:
            raise ValueError("Delta must be non-negative")


@dataclass(frozen=True)
class GersgorinBound:
    row: int
    center: float
    radius: float

    @property
    def interval(self) -> tuple[float, float]:
        return self.center - self.radius, self.center + self.radius


class GersgorinReport(NamedTuple):
    bounds: list[GersgorinBound]
    upper_envelope: float
    lower_envelope: float

    def contains(self, value: float) -> bool:
        return any(b.center - b.radius <= value <= b.center + b.radius for b in self.bounds)


class BoundCrossing(NamedTuple):
    mu_star: float
    first_row_upper: Callable[[float], float]
    last_row_upper: Callable[[float], float]
    mu_claimed: float


class ClusterComparison(NamedTuple):
    deviation: float
    cherry_levels: np.ndarray
    cluster_levels: np.ndarray
    min_weight: float
    ambiguous: bool


class LocalizationFit(NamedTuple):
    length: float
    profile: np.ndarray
    residual: float
    flagged: bool
    participation: float


def cherry_critical_mu(w: float) -> float:
    """(1 - w^2) / (2 sqrt(w)); the equilibrium turns complex unstable past |mu_crit|."""
    if not w > 0:
        raise ValueError("w must be positive")
    return (1 - w * w) / (2 * math.sqrt(w))


def _ladder(M: int):
    a = np.diag(np.sqrt(np.arange(1, M, dtype=float)), 1)
    n = np.diag(np.arange(M, dtype=float))
    return a, n


def build_cherry_hamiltonian(p: CherryParams) -> np.ndarray:
    """Truncated bosonic quantization; p = i (a^dag - a)/sqrt(2) so p x p is real."""
    a, n = _ladder(p.M)
    eye = np.eye(p.M)
    # i (a^T - a) / sqrt 2, kept as the real factor; i * i = -1 in the product
    mom = (a.T - a) / math.sqrt(2)
    return (
        np.kron(n + eye / 2, eye)
        - p.w * np.kron(eye, n + eye / 2)
        - p.mu * np.kron(mom, mom)
    )


def uncoupled_level(n1: int, n2: int, w: float) -> float:
    return n1 - w * n2 + 0.5 - w / 2


def cluster_labels(M: int, w: float) -> list[tuple[int, int, float, int]]:
    """Every uncoupled level as (n1, n2, E, alpha), in product-basis order."""
    return [(n1, n2, uncoupled_level(n1, n2, w), n1 - n2) for n1 in range(M) for n2 in range(M)]


def cluster_diagonals(p: ClusterParams) -> tuple[np.ndarray, np.ndarray]:
    m = np.arange(1, p.M + 1, dtype=float)
    return -p.Delta * m, p.mu * m[1:] / 2


def build_cluster_hamiltonian(p: ClusterParams) -> np.ndarray:
    diag, off = cluster_diagonals(p)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def cluster_spectrum(p: ClusterParams) -> tuple[np.ndarray, np.ndarray]:
    diag, off = cluster_diagonals(p)
    if p.mu == 0:
        order = np.argsort(diag)
        return diag[order], np.eye(p.M)[:, order]
    return scipy.linalg.eigh_tridiagonal(diag, off)


def cluster_vs_cherry_check(M: int, w: float, mu: float) -> ClusterComparison:
    """Largest gap between the cluster model and the alpha = 0 Cherry levels.

    The Cherry levels are those M eigenstates with the most weight on
    |n, n>.  The cluster spectrum is shifted onto the uncoupled ladder
    -Delta n + (1 - w)/2, n = 0..M-1.  Needs w >= 1 so the ladder descends.
    """
    if w < 1:
        raise ValueError("cluster comparison needs w >= 1")
    delta = w - 1
    energies, vectors = np.linalg.eigh(build_cherry_hamiltonian(CherryParams(M, w, mu)))
    diag_idx = np.arange(M) * (M + 1)
    weight = np.sum(np.abs(vectors[diag_idx, :]) ** 2, axis=0)
    picked = np.sort(np.argsort(-weight, kind="stable")[:M])
    cherry = np.sort(energies[picked])
    cluster = cluster_spectrum(ClusterParams(M, delta, mu))[0] + (1 - w) / 2 + delta
    min_weight = float(weight[picked].min())
    return ClusterComparison(
        float(np.max(np.abs(cherry - np.sort(cluster)))),
        cherry,
        np.sort(cluster),
        min_weight,
        min_weight < MATCH_WEIGHT_LIMIT,
    )


def gersgorin_bounds(H: np.ndarray) -> GersgorinReport:
    H = np.asarray(H)
    centers = np.real(np.diag(H))
    radii = np.sum(np.abs(H), axis=1) - np.abs(np.diag(H))
    bounds = [GersgorinBound(i + 1, float(c), float(r)) for i, (c, r) in enumerate(zip(centers, radii))]
    return GersgorinReport(bounds, float(np.max(centers + radii)), float(np.min(centers - radii)))


def bound_crossing(M: int, Delta: float) -> BoundCrossing:
    """Coupling at which the upper Gersgorin edges of rows 1 and M meet.

    Row 1: -Delta + mu;  row M: -M Delta + mu M / 2.
    """
    if M < 3:
        raise ValueError("bound crossing needs M >= 3")

    def first(mu):
        return -Delta + mu

    def last(mu):
        return -M * Delta + mu * M / 2

    mu_star = Delta * (M - 1) / (M / 2 - 1)
    if not mu_star > 0:
        mu_star = math.nan
    return BoundCrossing(mu_star, first, last, Delta)


def participation_ratio(v: np.ndarray) -> float:
    prob = np.abs(v) ** 2
    prob /= prob.sum()
    return float(1.0 / np.sum(prob**2))


def top_eigenvector(p: ClusterParams) -> np.ndarray:
    """Eigenvector of the largest eigenvalue, largest component positive."""
    _, vectors = cluster_spectrum(p)
    v = vectors[:, -1]
    return v * np.sign(v[np.argmax(np.abs(v))])


def ground_state_localization(p: ClusterParams) -> LocalizationFit:
    """Exponential tail length of the top eigenvector, from a log-linear fit."""
    v = top_eigenvector(p)
    amp = np.abs(v)
    lo, hi = TAIL_WINDOW
    m = np.arange(1, p.M + 1)
    mask = (amp >= lo) & (amp <= hi * amp.max())
    pr = participation_ratio(v)
    if mask.sum() < 3:
        # a state on a single site has no tail
        return LocalizationFit(0.0, v, 0.0, mask.sum() > 0, pr)
    coef, res, *_ = np.polyfit(m[mask], np.log(amp[mask]), 1, full=True)
    slope = coef[0]
    residual = float(math.sqrt(res[0] / mask.sum())) if res.size else 0.0
    if slope >= 0:
        return LocalizationFit(math.inf, v, residual, True, pr)
    return LocalizationFit(-1.0 / slope, v, residual, residual > FIT_RESIDUAL_LIMIT, pr)


def analytic_localization_length(Delta: float, mu: float) -> float:
    """1 / ln(r + sqrt(r^2 - 1)) with r = Delta / mu; mu must lie in (0, Delta)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    if mu >= Delta:
        raise ValueError(f"delocalized regime: mu={mu} >= Delta={Delta}")
    r = Delta / mu
    return 1.0 / math.log(r + math.sqrt(r * r - 1))
