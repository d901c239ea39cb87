"""Mean-field (j -> infinity) dynamics of the coupled spins.

Each spin is a unit vector (x, y, z) on its Bloch sphere, and the pair
evolves under

    x1' = -k1 y1 z1 - eps y1 z2        x2' = -k2 y2 z2 - eps y2 z1
    y1' = -z1 + k1 x1 z1 + eps x1 z2   y2' = -z2 + k2 x2 z2 + eps x2 z1
    z1' = y1                           z2' = y2

which is the flow of H_cl = x1 + k1 z1^2/2 + x2 + k2 z2^2/2 + eps z1 z2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate as spi

from .integrator import Event, EventRecord, IntegrationError, integrate_batch
from .quantum import SpinParams

EULER_GAMMA = 0.5772156649015329
ZERO_MODE_TOL = 1e-8
# a defective quartet at threshold splits by ~sqrt(machine eps)
CLASS_TOL = 1e-6
CENSOR_FACTOR = 50.0


class EllipticRegimeError(ValueError):
    """Quantity only defined for a complex unstable equilibrium."""


@dataclass(frozen=True)
class ClassicalState:
    r1: tuple[float, float, float]
    r2: tuple[float, float, float]

    @classmethod
    def from_vector(cls, y) -> "ClassicalState":
        y = np.asarray(y, dtype=float)
        return cls(tuple(y[:3]), tuple(y[3:6]))

    def as_vector(self) -> np.ndarray:
        return np.array([*self.r1, *self.r2], dtype=float)

    def swapped(self) -> "ClassicalState":
        return ClassicalState(self.r2, self.r1)


@dataclass(frozen=True)
class StabilityReport:
    jac_eigenvalues: np.ndarray
    quartet: np.ndarray
    stability_class: str
    c1: float
    c2: float


@dataclass(frozen=True)
class EnsembleSpec:
    delta: float
    count: int = 500
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.delta < math.pi / 2:
            raise ValueError(f"delta must lie in (0, pi/2), got {self.delta}")
        if self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass(frozen=True)
class EnsembleResult:
    mean: float
    stddev: float | None
    censored_fraction: float
    count: int
    times: np.ndarray


class GrowthRates(NamedTuple):
    c1: float
    c2: float

    @property
    def elliptic(self) -> bool:
        return self.c1 == 0.0


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    events: list[EventRecord]


def classical_energy(s, p: SpinParams) -> float:
    y = s.as_vector() if isinstance(s, ClassicalState) else np.asarray(s, dtype=float)
    x1, _, z1, x2, _, z2 = y[..., 0], y[..., 1], y[..., 2], y[..., 3], y[..., 4], y[..., 5]
    return x1 + 0.5 * p.k1 * z1**2 + x2 + 0.5 * p.k2 * z2**2 + p.epsilon * z1 * z2


def vector_field(s, p: SpinParams) -> np.ndarray:
    """Right-hand side for a state vector or a stack of them (shape (..., 6))."""
    y = s.as_vector() if isinstance(s, ClassicalState) else np.asarray(s, dtype=float)
    return _rhs(y, p.k1, p.k2, p.epsilon)


def _rhs(y, k1, k2, eps):
    x1, y1, z1, x2, y2, z2 = (y[..., i] for i in range(6))
    out = np.empty_like(y)
    out[..., 0] = -k1 * y1 * z1 - eps * y1 * z2
    out[..., 1] = -z1 + k1 * x1 * z1 + eps * x1 * z2
    out[..., 2] = y1
    out[..., 3] = -k2 * y2 * z2 - eps * y2 * z1
    out[..., 4] = -z2 + k2 * x2 * z2 + eps * x2 * z1
    out[..., 5] = y2
    return out


def renormalize(y: np.ndarray) -> np.ndarray:
    out = np.empty_like(y)
    for sl in (slice(0, 3), slice(3, 6)):
        r = y[..., sl]
        norm = np.sqrt(r[..., 0] * r[..., 0] + r[..., 1] * r[..., 1] + r[..., 2] * r[..., 2])
        out[..., sl] = r / norm[..., None]
    return out


def _rhs_for(p: SpinParams):
    k1, k2, eps = p.k1, p.k2, p.epsilon
    return lambda y: _rhs(y, k1, k2, eps)


def integrate(
    s0: ClassicalState,
    p: SpinParams,
    t_end: float,
    tol: float = 1e-10,
    events: Sequence[Event] = (),
) -> Trajectory:
    """Single orbit with every accepted step recorded."""
    res = integrate_batch(
        _rhs_for(p), s0.as_vector()[None, :], t_end, tol, events, project=renormalize, record=True
    )
    t, states = res.trajectory[0]
    return Trajectory(t, states, res.events)


def equilibria(p: SpinParams) -> tuple[ClassicalState, ClassicalState]:
    """(|+x,-x>, |-x,+x>) equilibrium points."""
    a = ClassicalState((1.0, 0.0, 0.0), (-1.0, 0.0, 0.0))
    b = a.swapped()
    for s in (a, b):
        if np.max(np.abs(vector_field(s, p))) != 0.0:
            raise AssertionError("bit-state points are not equilibria")
    return a, b


def jacobian(p: SpinParams, s: ClassicalState) -> np.ndarray:
    x1, y1, z1, x2, y2, z2 = s.as_vector()
    k1, k2, e = p.k1, p.k2, p.epsilon
    return np.array([
        [0.0, -k1 * z1 - e * z2, -k1 * y1, 0.0, 0.0, -e * y1],
        [k1 * z1 + e * z2, 0.0, -1 + k1 * x1, 0.0, 0.0, e * x1],
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, -e * y2, 0.0, -k2 * z2 - e * z1, -k2 * y2],
        [0.0, 0.0, e * x2, k2 * z2 + e * z1, 0.0, -1 + k2 * x2],
        [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    ])


def classify_quartet(quartet: np.ndarray, tol: float = CLASS_TOL) -> str:
    re, im = np.abs(quartet.real), np.abs(quartet.imag)
    if np.all(re <= tol) and np.all(im > tol):
        return "EE"
    if np.all(re > tol) and np.all(im > tol):
        return "CU"
    n_real = int(np.sum((re > tol) & (im <= tol)))
    n_imag = int(np.sum((re <= tol) & (im > tol)))
    if n_real == 2 and n_imag == 2:
        return "EH"
    if n_real == 4:
        return "HH"
    return "degenerate"


def stability(p: SpinParams, equilibrium: int = 0) -> StabilityReport:
    """Linear stability of an equilibrium (0: |+x,-x>, 1: |-x,+x>).

    The two zero modes tangent to the sphere normals are dropped; the
    remaining four eigenvalues are classified.
    """
    point = equilibria(p)[equilibrium]
    eig = np.linalg.eigvals(jacobian(p, point))
    eig = eig[np.lexsort((eig.imag, eig.real))]
    zero = np.abs(eig) < ZERO_MODE_TOL
    if zero.sum() != 2:
        return StabilityReport(eig, eig[~zero], "degenerate", math.nan, math.nan)
    quartet = eig[~zero]
    cls = classify_quartet(quartet)
    if cls == "CU":
        c1 = float(np.mean(np.abs(quartet.real)))
        c2 = float(np.mean(np.abs(quartet.imag)))
    elif cls == "EE":
        c1 = 0.0
        c2 = float(np.max(np.abs(quartet.imag)))
    else:
        c1 = float(np.max(np.abs(quartet.real)))
        c2 = float(np.max(np.abs(quartet.imag)))
    return StabilityReport(eig, quartet, cls, c1, c2)


def is_complex_unstable(p: SpinParams) -> bool:
    return abs(p.epsilon) > abs(p.k1 + p.k2) / 2


def growth_rates(p: SpinParams) -> GrowthRates:
    """Expansion and rotation rates (c1, c2) of the complex unstable quartet.

    The closed form is the quartet of the |-x,+x> point; with k1 = k2 both
    bit-state points share it, otherwise swap k1 and k2 to get the |+x,-x>
    rates.  c1 is 0 when the equilibrium is elliptic.
    """
    k1, k2, e = p.k1, p.k2, p.epsilon
    outer = e * e + k1 - k2 - k1 * k2 + 1
    shift = (2 + k1 - k2) / 4
    root = math.sqrt(max(outer, 0.0)) / 2
    c1_sq = root - shift
    c2_sq = root + shift
    c1 = math.sqrt(c1_sq) if c1_sq > 0 and is_complex_unstable(p) else 0.0
    c2 = math.sqrt(c2_sq) if c2_sq > 0 else 0.0
    return GrowthRates(c1, c2)


def _require_cu(p: SpinParams) -> GrowthRates:
    rates = growth_rates(p)
    if rates.elliptic:
        raise EllipticRegimeError(f"no classical transfer: eps={p.epsilon} <= eps_crit={p.eps_crit}")
    return rates


def analytic_transfer_time(delta: float, p: SpinParams) -> float:
    """Time to reach the equator from distance delta: ln(pi / (2 delta)) / (c1 c2)."""
    if not 0 < delta <= math.pi / 2:
        raise ValueError(f"delta must lie in (0, pi/2], got {delta}")
    c1, c2 = _require_cu(p)
    return math.log(math.pi / (2 * delta)) / (c1 * c2)


def coherent_variance(N: int) -> float:
    return 2.0 / N


def averaged_transfer_time(p: SpinParams, N: int) -> float:
    """Transfer time averaged over a Gaussian spread of variance 2/N per spin."""
    c1, c2 = _require_cu(p)
    sigma2 = coherent_variance(N)
    return (math.log(math.pi**2 / (8 * sigma2)) + EULER_GAMMA - 1) / (c1 * c2)


def averaged_transfer_time_quadrature(p: SpinParams, N: int) -> float:
    """Direct numerical double integral over the two radial displacements."""
    c1, c2 = _require_cu(p)
    sigma2 = coherent_variance(N)
    sigma = math.sqrt(sigma2)

    # in units of sigma: r = sigma * u
    def inner(u1):
        def f(u2):
            rho = sigma * math.hypot(u1, u2)
            return 2 * u1 * u2 * math.log(math.pi / (2 * rho)) * math.exp(-(u1 * u1 + u2 * u2) / 2)

        return spi.quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)[0]

    value = spi.quad(inner, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return value / (c1 * c2)


def rescale_time(t, p: SpinParams, N: int):
    """tau = t / t_cl."""
    t_cl = averaged_transfer_time(p, N)
    return np.asarray(t) / t_cl if np.ndim(t) else t / t_cl


def sample_initial_states(delta: float, count: int, seed: int, base: ClassicalState) -> np.ndarray:
    """Points at total geodesic distance ``delta`` from ``base``.

    The displacement direction is uniform on the unit 3-sphere of the
    4-dimensional product tangent space; member i draws from its own stream
    seeded by (seed, i).
    """
    y0 = base.as_vector()
    e1, e2 = y0[:3], y0[3:]
    out = np.empty((count, 6))
    for i in range(count):
        u = np.random.default_rng([seed, i]).standard_normal(4)
        u *= delta / math.sqrt(math.fsum(u * u))
        out[i, :3] = _geodesic(e1, u[:2])
        out[i, 3:] = _geodesic(e2, u[2:])
    return out


def _geodesic(point, tangent_yz):
    """Move from an x-axis pole along the tangent (0, ty, tz) by its length."""
    d = math.hypot(*tangent_yz)
    if d == 0.0:
        return point.copy()
    direction = np.array([0.0, tangent_yz[0] / d, tangent_yz[1] / d])
    return math.cos(d) * point + math.sin(d) * direction


def geodesic_distance(y, target) -> float:
    y = np.asarray(y, dtype=float)
    target = np.asarray(target, dtype=float)
    d1 = math.acos(max(-1.0, min(1.0, float(np.dot(y[:3], target[:3])))))
    d2 = math.acos(max(-1.0, min(1.0, float(np.dot(y[3:], target[3:])))))
    return math.hypot(d1, d2)


EQUATOR_EVENT = Event("equator", lambda y: y[..., 0], direction=-1, terminal=True)


def ensemble_equator_time(p: SpinParams, spec: EnsembleSpec, tol: float = 1e-10) -> EnsembleResult:
    """Mean first time at which x1 crosses zero, over an ensemble at distance delta."""
    horizon = CENSOR_FACTOR * analytic_transfer_time(spec.delta, p)
    y0 = sample_initial_states(spec.delta, spec.count, spec.seed, equilibria(p)[0])
    try:
        res = integrate_batch(_rhs_for(p), y0, horizon, tol, [EQUATOR_EVENT], project=renormalize)
    except IntegrationError as exc:
        raise IntegrationError(f"ensemble eps={p.epsilon} delta={spec.delta}: {exc}") from exc
    times = res.stop_time
    arrived = times[~np.isnan(times)]
    censored = 1.0 - arrived.size / spec.count
    if arrived.size == 0:
        return EnsembleResult(math.nan, None, censored, spec.count, times)
    mean = math.fsum(arrived) / arrived.size
    stddev = None
    if arrived.size > 1:
        stddev = math.sqrt(math.fsum((arrived - mean) ** 2) / (arrived.size - 1))
    return EnsembleResult(mean, stddev, censored, spec.count, times)
