"""Spin-j matrices, SU(2) coherent states and product states of two spins.

Basis convention (shared by the whole package): |j, m> ordered with m
descending, m = j, j-1, ..., -j.  For product states the component
(m1, m2) sits at index (j - m1) * N + (j - m2).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class SpinJ:
    """Spin quantum number j (integer or half-integer)."""

    j: float

    def __post_init__(self):
        twice = Fraction(self.j).limit_denominator(8) * 2
        if twice.denominator != 1 or abs(float(twice) - 2 * self.j) > 1e-12 or twice < 1:
            raise ValueError(f"spin j must be a positive (half-)integer, got {self.j!r}")
        object.__setattr__(self, "j", float(twice) / 2)

    @property
    def N(self) -> int:
        return int(round(2 * self.j)) + 1

    @property
    def m(self) -> np.ndarray:
        return self.j - np.arange(self.N)


@dataclass(frozen=True)
class SpinOperators:
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    def as_tuple(self):
        return self.jx, self.jy, self.jz


@dataclass(frozen=True)
class CoherentDirection:
    """Bloch direction: polar angle from +z and azimuth, in radians."""

    theta: float
    phi: float = 0.0

    @property
    def unit_vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


PLUS_X = CoherentDirection(np.pi / 2, 0.0)
MINUS_X = CoherentDirection(np.pi / 2, np.pi)


def _as_spin(spin) -> SpinJ:
    return spin if isinstance(spin, SpinJ) else SpinJ(spin)


def build_spin_operators(spin) -> SpinOperators:
    """Return jx, jy, jz in the jz-diagonal basis with m descending.

    jx is real and jy purely imaginary; hbar = 1.
    """
    spin = _as_spin(spin)
    j, m = spin.j, spin.m
    # <m+1|J+|m> sits just above the diagonal since m descends along the index
    ladder = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    jplus = np.diag(ladder, 1).astype(complex)
    jminus = jplus.conj().T
    jx = (jplus + jminus) / 2
    jy = (jplus - jminus) / 2j
    jz = np.diag(m).astype(complex)
    return SpinOperators(jx, jy, jz)


def coherent_state(spin, direction: CoherentDirection) -> np.ndarray:
    """SU(2) coherent state |theta, phi> = R(theta, phi)|j, j>.

    Amplitude on |j, m>:
    sqrt(C(2j, j+m)) cos(theta/2)^(j+m) sin(theta/2)^(j-m) exp(i (j-m) phi),
    which puts <J> at j times the unit vector of (theta, phi).
    """
    spin = _as_spin(spin)
    j, m = spin.j, spin.m
    up = np.rint(j + m)
    down = np.rint(j - m)
    c = np.cos(direction.theta / 2)
    s = np.sin(direction.theta / 2)
    log_binom = 0.5 * (gammaln(2 * j + 1) - gammaln(up + 1) - gammaln(down + 1))
    # 0**0 must be 1 at the poles
    with np.errstate(divide="ignore"):
        mag = np.exp(log_binom) * np.power(c, up) * np.power(s, down)
    psi = mag * np.exp(1j * down * direction.phi)
    return psi / np.linalg.norm(psi)


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"tensor_product expects two vectors of equal length, got {a.shape} and {b.shape}")
    out = np.kron(a, b)
    return out / np.linalg.norm(out)


def swap_operator(N: int) -> np.ndarray:
    """Permutation matrix exchanging the two subsystems of an N x N product space."""
    idx = np.arange(N * N).reshape(N, N).T.ravel()
    S = np.zeros((N * N, N * N))
    S[np.arange(N * N), idx] = 1.0
    return S


def bit_states(spin) -> tuple[np.ndarray, np.ndarray]:
    """Anti-parallel bit states (|+x>|-x>, |-x>|+x>)."""
    spin = _as_spin(spin)
    px = coherent_state(spin, PLUS_X)
    mx = coherent_state(spin, MINUS_X)
    return tensor_product(px, mx), tensor_product(mx, px)


def expectation(op: np.ndarray, psi: np.ndarray) -> complex:
    return np.vdot(psi, op @ psi)
