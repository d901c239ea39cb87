"""Exact quantum dynamics of two coupled spins.

H = Jx1 + k1/(2j) Jz1^2 + Jx2 + k2/(2j) Jz2^2 + eps/j Jz1 Jz2

States are evolved through a full spectral decomposition, which is then
reused for every time point.  Fidelity is |<flipped| U(t) |initial>|^2 with
the initial state |+x,-x> and the target |-x,+x>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .spin_algebra import SpinJ, bit_states, build_spin_operators

DEFAULT_THRESHOLD = 0.1
DEFAULT_POINTS = 2000


class NoTransferDetected(Exception):
    """No local fidelity maximum above threshold in the sampled window."""


@dataclass(frozen=True)
class SpinParams:
    j: float
    k1: float = 1.0
    k2: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "j", SpinJ(self.j).j)
        for name in ("k1", "k2", "epsilon"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @property
    def N(self) -> int:
        return SpinJ(self.j).N

    @property
    def eps_crit(self) -> float:
        return (self.k1 + self.k2) / 2

    @property
    def symmetric(self) -> bool:
        return self.k1 == self.k2

    def replace(self, **changes) -> "SpinParams":
        values = dict(j=self.j, k1=self.k1, k2=self.k2, epsilon=self.epsilon)
        values.update(changes)
        return SpinParams(**values)


@dataclass(frozen=True)
class SpectralDecomposition:
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.size

    def coefficients(self, psi: np.ndarray) -> np.ndarray:
        """Expansion coefficients <Psi_n|psi>."""
        psi = np.asarray(psi)
        if psi.shape != (self.dim,):
            raise ValueError(f"state of shape {psi.shape} does not match dimension {self.dim}")
        return self.vectors.conj().T @ psi


@dataclass(frozen=True)
class FidelityCurve:
    times: np.ndarray
    values: np.ndarray
    params: SpinParams | None = field(default=None, compare=False)


def subsystem_hamiltonian(j: float, k: float) -> np.ndarray:
    ops = build_spin_operators(j)
    return (ops.jx + (k / (2 * j)) * ops.jz @ ops.jz).real


def build_hamiltonian(p: SpinParams) -> np.ndarray:
    """Real symmetric N^2 x N^2 matrix (jy never enters)."""
    ops = build_spin_operators(p.j)
    jz = ops.jz.real
    eye = np.eye(p.N)
    h1 = subsystem_hamiltonian(p.j, p.k1)
    h2 = subsystem_hamiltonian(p.j, p.k2)
    return np.kron(h1, eye) + np.kron(eye, h2) + (p.epsilon / p.j) * np.kron(jz, jz)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    cols = np.arange(vectors.shape[1])
    pivot = vectors[np.argmax(np.abs(vectors), axis=0), cols]
    phase = pivot / np.abs(pivot)
    return vectors * phase.conj() if np.iscomplexobj(vectors) else vectors * np.sign(pivot)


def diagonalize(H: np.ndarray, hermitian_tol: float = 1e-12) -> SpectralDecomposition:
    """Full eigendecomposition of a Hermitian matrix.

    Eigenvalues ascend; each eigenvector is scaled so its largest-magnitude
    component is real and positive.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if np.max(np.abs(H - H.conj().T), initial=0.0) > hermitian_tol * scale:
        raise ValueError("matrix is not Hermitian")
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real
    energies, vectors = scipy.linalg.eigh(H, driver="evd")
    return SpectralDecomposition(energies, _fix_phases(vectors))


def evolve(spec: SpectralDecomposition, psi0: np.ndarray, t: float) -> np.ndarray:
    c = spec.coefficients(psi0)
    return spec.vectors @ (np.exp(-1j * spec.energies * t) * c)


def transition_amplitudes(spec: SpectralDecomposition, initial, target, times, chunk=256):
    """<target| U(t) |initial> for every t, without forming U."""
    weights = spec.coefficients(target).conj() * spec.coefficients(initial)
    times = np.asarray(times, dtype=float)
    out = np.empty(times.size, dtype=complex)
    for start in range(0, times.size, chunk):
        block = times[start:start + chunk]
        out[start:start + chunk] = np.exp(-1j * np.outer(block, spec.energies)) @ weights
    return out


def fidelity_from_spectrum(spec, initial, target, times) -> np.ndarray:
    amp = transition_amplitudes(spec, initial, target, times)
    return np.clip(np.abs(amp) ** 2, 0.0, 1.0)


def fidelity_curve(p: SpinParams, t_grid, spec: SpectralDecomposition | None = None) -> FidelityCurve:
    """Fidelity of the evolved |+x,-x> with the flipped state |-x,+x>."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or (t_grid.size > 1 and np.any(np.diff(t_grid) <= 0)):
        raise ValueError("time grid must be a strictly increasing 1-d array")
    if spec is None:
        spec = diagonalize(build_hamiltonian(p))
    initial, flipped = bit_states(p.j)
    values = fidelity_from_spectrum(spec, initial, flipped, t_grid)
    return FidelityCurve(t_grid, values, p)


def transfer_time(curve: FidelityCurve, threshold: float = DEFAULT_THRESHOLD) -> tuple[float, float]:
    """Time and height of the first local fidelity maximum above ``threshold``.

    The discrete peak is refined with a parabola through its two neighbours.
    Raises NoTransferDetected when there is none in the window.
    """
    t, F = np.asarray(curve.times), np.asarray(curve.values)
    if t.size < 3:
        raise NoTransferDetected("curve too short")
    inner = (F[1:-1] > F[:-2]) & (F[1:-1] >= F[2:]) & (F[1:-1] > threshold)
    hits = np.flatnonzero(inner)
    if hits.size == 0:
        raise NoTransferDetected(f"no fidelity maximum above {threshold} in [0, {t[-1]:.6g}]")
    i = hits[0] + 1
    t0, t1, t2 = t[i - 1:i + 2]
    f0, f1, f2 = F[i - 1:i + 2]
    # vertex of the interpolating parabola (non-uniform spacing allowed)
    d01 = (f1 - f0) / (t1 - t0)
    d12 = (f2 - f1) / (t2 - t1)
    curv = (d12 - d01) / (t2 - t0)
    if curv >= 0:
        return float(t1), float(f1)
    t_peak = 0.5 * (t0 + t1) - d01 / (2 * curv)
    t_peak = min(max(t_peak, t0), t2)
    f_peak = f0 + d01 * (t_peak - t0) + curv * (t_peak - t0) * (t_peak - t1)
    return float(t_peak), float(min(f_peak, 1.0))


def max_overlap_levels(spec: SpectralDecomposition, state, count: int = 1):
    """The ``count`` eigenpairs with largest |<Psi_n|state>|^2.

    Returns (index, energy, overlap) tuples, largest overlap first; ties go to
    the lower index.
    """
    overlaps = np.abs(spec.coefficients(state)) ** 2
    count = max(0, min(int(count), spec.dim))
    order = np.lexsort((np.arange(spec.dim), -overlaps))[:count]
    return [(int(n), float(spec.energies[n]), float(overlaps[n])) for n in order]


def parity_pair(j: float):
    """(|Psi+>, |Psi->) = (|+x,-x> +/- |-x,+x>) / sqrt(2)."""
    a, b = bit_states(j)
    return (a + b) / np.sqrt(2), (a - b) / np.sqrt(2)


def tunneling_splitting(p: SpinParams, spec: SpectralDecomposition | None = None) -> tuple[int, int, float]:
    if spec is None:
        spec = diagonalize(build_hamiltonian(p))
    plus, minus = parity_pair(p.j)
    (ip, ep, _), = max_overlap_levels(spec, plus, 1)
    (im, em, _), = max_overlap_levels(spec, minus, 1)
    return ip, im, abs(ep - em)


def tunneling_time(p: SpinParams, spec: SpectralDecomposition | None = None) -> float:
    """2 pi / |E+ - E-| for the doublet overlapping most with |Psi+->.

    Returns inf when the splitting underflows (pair exceeds any horizon).
    """
    _, _, gap = tunneling_splitting(p, spec)
    if gap < 1e-300:
        return math.inf
    return 2 * math.pi / gap


def default_window(p: SpinParams, tau_max: float = 3.0, fallback: float = 50.0) -> float:
    """Length of the default fidelity window: tau_max * t_cl in the CU regime."""
    from .classical import averaged_transfer_time, is_complex_unstable

    if is_complex_unstable(p):
        return tau_max * averaged_transfer_time(p, p.N)
    return fallback


def find_transfer(
    p: SpinParams,
    spec: SpectralDecomposition | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    points: int = DEFAULT_POINTS,
    window: float | None = None,
    extensions: int = 3,
) -> tuple[float, float]:
    """Transfer time on the default grid, doubling the window when no peak shows."""
    if spec is None:
        spec = diagonalize(build_hamiltonian(p))
    t_max = default_window(p) if window is None else window
    for attempt in range(extensions + 1):
        grid = np.linspace(0.0, t_max, points)
        try:
            return transfer_time(fidelity_curve(p, grid, spec), threshold)
        except NoTransferDetected:
            if attempt == extensions:
                raise
            t_max *= 2
            points *= 2
    raise AssertionError("unreachable")


def level_sweep(p_base: SpinParams, eps_grid, threshold: float = DEFAULT_THRESHOLD, keep_spectrum: bool = False):
    """Per-coupling diagnostics of the spectrum and of the bit-state dynamics.

    Returns one dict per epsilon.  Undefined quantities are None and the
    reason is stored under ``status``.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.size > 1 and np.any(np.diff(eps_grid) <= 0):
        raise ValueError("epsilon grid must be strictly ascending")
    return [level_row(p_base.replace(epsilon=float(eps)), threshold, keep_spectrum) for eps in eps_grid]


def level_row(p: SpinParams, threshold: float = DEFAULT_THRESHOLD, keep_spectrum: bool = False) -> dict:
    spec = diagonalize(build_hamiltonian(p))
    initial, flipped = bit_states(p.j)
    plus, minus = parity_pair(p.j)
    row = {"epsilon": p.epsilon, "levels": spec.dim}
    status = []
    for label, state in (("initial", initial), ("flipped", flipped), ("plus", plus), ("minus", minus)):
        top = max_overlap_levels(spec, state, 2)
        row[f"{label}_index"], row[f"{label}_energy"], row[f"{label}_overlap"] = top[0]
        if label == "initial":
            row["initial_top2"] = sum(o for _, _, o in top)
    gap = abs(row["plus_energy"] - row["minus_energy"])
    if row["plus_index"] == row["minus_index"] or gap < 1e-300:
        row["t_dyn"] = None
        status.append("degenerate doublet")
    else:
        row["t_dyn"] = 2 * math.pi / gap
    try:
        row["t_trans"], row["F_trans"] = find_transfer(p, spec, threshold)
    except NoTransferDetected:
        row["t_trans"] = row["F_trans"] = None
        status.append("no transfer detected")
    row["status"] = "; ".join(status) or "ok"
    if keep_spectrum:
        row["spectrum"] = spec.energies.copy()
    return row
