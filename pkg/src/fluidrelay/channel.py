"""Fluid-antenna port geometry, spatial correlation, and channel sampling.

A fluid antenna exposes ``N = n1 * n2`` candidate ports on a rectangular
aperture of ``w1 x w2`` wavelengths.  Ports are numbered 1..N through the
row-major mapping ``port_index``.  The instantaneous gain at each port is
a unit-variance circularly symmetric complex Gaussian; gains at different
ports are coupled through the isotropic-scattering kernel ``j0(2*pi*d)``
where ``d`` is the port separation in wavelengths and ``j0`` is the
spherical Bessel function of the first kind, ``sin(x)/x``.

The antenna always operates on its best port, so the quantity consumed
downstream is ``best_gain_sq = max_l |h_l|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

# Diagonal jitter ladder used when the Bessel kernel comes out numerically
# semidefinite: add eps, renormalize to unit diagonal, retry.
_JITTER_LADDER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
_FACTOR_TOL = 1e-10
_ENTRY_TOL = 1e-12


@dataclass(frozen=True)
class PortGrid:
    """Rectangular port layout: n1 x n2 ports on a w1 x w2 wavelength aperture.

    A dimension with a single port has no spatial extent, so its spacing
    term is defined as 0 regardless of the aperture length.
    """

    n1: int
    n2: int
    w1: float
    w2: float

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"port counts must be >= 1, got {self.n1} x {self.n2}")
        if self.w1 < 0 or self.w2 < 0:
            raise ValueError(f"aperture lengths must be >= 0, got {self.w1} x {self.w2}")

    @property
    def num_ports(self) -> int:
        return self.n1 * self.n2


@dataclass(frozen=True)
class CorrelationMatrix:
    """Port correlation matrix together with a lower-triangular factor.

    ``factor @ factor.T`` reproduces ``entries`` (after any regularization
    applied at build time) to within 1e-10 entrywise; the factor drives
    both correlated sampling and the Gaussian-copula CDF.
    """

    dim: int
    entries: np.ndarray
    factor: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        factor = np.array(self.factor, dtype=float)
        if entries.shape != (self.dim, self.dim):
            raise ValueError(f"correlation matrix must be {self.dim}x{self.dim}, got {entries.shape}")
        if factor.shape != (self.dim, self.dim):
            raise ValueError(f"factor must be {self.dim}x{self.dim}, got {factor.shape}")
        if not np.all(entries.diagonal() == 1.0):
            raise ValueError("correlation invariant violated: diagonal entries must be exactly 1")
        if not np.array_equal(entries, entries.T):
            raise ValueError("correlation invariant violated: matrix must be symmetric")
        if np.max(np.abs(entries)) > 1.0 + _ENTRY_TOL:
            raise ValueError("correlation invariant violated: entries must lie in [-1, 1]")
        if np.any(np.triu(factor, k=1) != 0.0):
            raise ValueError("factor must be lower-triangular")
        if np.max(np.abs(factor @ factor.T - entries)) > _FACTOR_TOL:
            raise ValueError("factor invariant violated: L@L.T must reproduce the matrix to 1e-10")
        entries.setflags(write=False)
        factor.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "factor", factor)

    @classmethod
    def identity(cls, dim: int) -> "CorrelationMatrix":
        return cls(dim=dim, entries=np.eye(dim), factor=np.eye(dim))


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all port gains plus the selected best port.

    ``best_port`` is the 0-based index into ``port_gains`` (the 1-based
    port number of the grid mapping is ``best_port + 1``); ties go to the
    smallest index.
    """

    port_gains: np.ndarray
    best_port: int
    best_gain_sq: float

    def __post_init__(self):
        gains = np.array(self.port_gains, dtype=complex)
        power = np.abs(gains) ** 2
        if not 0 <= self.best_port < gains.size:
            raise ValueError(f"best_port {self.best_port} out of range for {gains.size} ports")
        if self.best_port != int(np.argmax(power)):
            raise ValueError("best_port must be the smallest index attaining the maximum gain")
        if self.best_gain_sq != power[self.best_port]:
            raise ValueError("best_gain_sq must equal |port_gains[best_port]|^2")
        gains.setflags(write=False)
        object.__setattr__(self, "port_gains", gains)


def _j0(x: np.ndarray | float):
    """Spherical Bessel function of the first kind, j0(x) = sin(x)/x, j0(0) = 1."""
    return np.sinc(np.asarray(x) / np.pi)


def port_index(n1_idx: int, n2_idx: int, grid: PortGrid) -> int:
    """Map 2-D port coordinates (1-based) to the 1-based linear port number."""
    if not 1 <= n1_idx <= grid.n1:
        raise ValueError(f"n1 index {n1_idx} outside [1, {grid.n1}]")
    if not 1 <= n2_idx <= grid.n2:
        raise ValueError(f"n2 index {n2_idx} outside [1, {grid.n2}]")
    return (n1_idx - 1) * grid.n2 + n2_idx


def port_coords(index: int, grid: PortGrid) -> tuple[int, int]:
    """Inverse of :func:`port_index`."""
    if not 1 <= index <= grid.num_ports:
        raise ValueError(f"port number {index} outside [1, {grid.num_ports}]")
    return (index - 1) // grid.n2 + 1, (index - 1) % grid.n2 + 1


def spatial_correlation(port_a: tuple[int, int], port_b: tuple[int, int], grid: PortGrid) -> float:
    """Correlation between two ports given as (n1, n2) coordinate pairs.

    The per-dimension offset is ``|n_i - m_i| * w_i / (n_i_total - 1)``,
    or 0 for a single-port dimension; the correlation is j0 of 2*pi times
    the Euclidean offset.
    """
    port_index(port_a[0], port_a[1], grid)
    port_index(port_b[0], port_b[1], grid)
    d1 = abs(port_a[0] - port_b[0]) * grid.w1 / (grid.n1 - 1) if grid.n1 > 1 else 0.0
    d2 = abs(port_a[1] - port_b[1]) * grid.w2 / (grid.n2 - 1) if grid.n2 > 1 else 0.0
    return float(_j0(2.0 * np.pi * np.hypot(d1, d2)))


def regularized_cholesky(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Cholesky-factor a unit-diagonal correlation matrix, jittering if needed.

    Returns ``(regularized_matrix, factor, eps)``.  Each ladder step adds
    ``eps`` to the diagonal and rescales by ``1/(1+eps)`` so the diagonal
    stays exactly 1.

    Raises:
        NumericalError: if factorization fails at every ladder step.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    for eps in _JITTER_LADDER:
        reg = matrix if eps == 0.0 else (matrix + eps * np.eye(n)) / (1.0 + eps)
        try:
            factor = np.linalg.cholesky(reg)
        except np.linalg.LinAlgError:
            continue
        if np.max(np.abs(factor @ factor.T - reg)) <= _FACTOR_TOL:
            return reg, factor, eps
    min_eig = float(np.linalg.eigvalsh(matrix).min())
    raise NumericalError(
        f"correlation factorization failed even with diagonal jitter up to "
        f"{_JITTER_LADDER[-1]:g} (min eigenvalue {min_eig:.3e})"
    )


def build_correlation(grid: PortGrid) -> CorrelationMatrix:
    """Build the spatial correlation matrix of all ports of ``grid``."""
    n = grid.num_ports
    idx = np.arange(n)
    c1 = idx // grid.n2  # 0-based coordinate along dimension 1
    c2 = idx % grid.n2
    s1 = grid.w1 / (grid.n1 - 1) if grid.n1 > 1 else 0.0
    s2 = grid.w2 / (grid.n2 - 1) if grid.n2 > 1 else 0.0
    d1 = np.abs(c1[:, None] - c1[None, :]) * s1
    d2 = np.abs(c2[:, None] - c2[None, :]) * s2
    entries = _j0(2.0 * np.pi * np.hypot(d1, d2))
    np.fill_diagonal(entries, 1.0)
    reg, factor, _ = regularized_cholesky(entries)
    return CorrelationMatrix(dim=n, entries=reg, factor=factor)


def sample_gains(corr: CorrelationMatrix, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` correlated gain vectors, shape (count, N) complex.

    Each realization consumes exactly ``2 * N`` normal draws in a fixed
    (re, im) interleaved order, so the first port's gain for a given
    stream does not depend on how many ports the grid has.
    """
    draws = rng.standard_normal((count, 2 * corr.dim))
    white = (draws[:, 0::2] + 1j * draws[:, 1::2]) / np.sqrt(2.0)
    return white @ corr.factor.T


def sample_realization(corr: CorrelationMatrix, rng: np.random.Generator) -> ChannelRealization:
    """Draw one correlated realization and select the best port."""
    gains = sample_gains(corr, rng, 1)[0]
    power = np.abs(gains) ** 2
    best = int(np.argmax(power))
    return ChannelRealization(port_gains=gains, best_port=best, best_gain_sq=float(power[best]))
