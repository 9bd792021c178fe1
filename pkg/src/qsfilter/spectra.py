"""Blackbody spectral-energy laws and the discrete-quanta averaging.

Everything reduces to the single ratio x = hbar*omega / (k*tau); with the
default units hbar = k = 1 the quantum law interpolates the classical
constant k*tau (x -> 0) and the exponential tail (x -> infinity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LAWS = ("planck", "rayleigh", "wien", "classical")
OVERFLOW_X = 700.0


@dataclass(frozen=True)
class SpectralPoint:
    omega: float
    tau: float
    hbar: float = 1.0
    k: float = 1.0

    def __post_init__(self):
        if self.omega <= 0 or self.tau <= 0 or self.hbar <= 0 or self.k <= 0:
            raise ValueError("omega, tau, hbar and k must be positive")

    @property
    def x(self) -> float:
        return self.hbar * self.omega / (self.k * self.tau)


def spectral_energy(point: SpectralPoint, law: str = "planck") -> float:
    """Spectral energy at the point for the selected law:
    planck   hbar*omega / (exp(x) - 1)
    rayleigh k*tau - hbar*omega/2
    wien     hbar*omega * exp(-x)
    classical k*tau
    """
    x = point.x
    e_quantum = point.hbar * point.omega
    if law == "classical":
        return point.k * point.tau
    if law == "rayleigh":
        return point.k * point.tau - 0.5 * e_quantum
    if law == "wien":
        return e_quantum * math.exp(-x)
    if law == "planck":
        if x > OVERFLOW_X:
            return e_quantum * math.exp(-x)  # asymptotic tail, overflow-safe
        return e_quantum / math.expm1(x)
    raise ValueError(f"unknown law {law!r}; expected one of {LAWS}")


def mean_quanta(point: SpectralPoint) -> float:
    """Mean occupation N = 1/(exp(x) - 1)."""
    x = point.x
    if x > OVERFLOW_X:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def boltzmann_weights(point: SpectralPoint, n_max: int) -> np.ndarray:
    """Geometric level weights p_n = (1 - z) z^n, z = exp(-x), n <= n_max."""
    z = math.exp(-point.x)
    n = np.arange(n_max + 1)
    return (1.0 - z) * z ** n


def mean_quanta_series(point: SpectralPoint, n_max: int) -> tuple[float, float]:
    """Truncated average sum n p_n and a bound on the dropped tail.

    Tail: sum_{n > m} n p_n = z^{m+1} ((m+1)(1-z) + z) / (1-z).
    """
    z = math.exp(-point.x)
    p = boltzmann_weights(point, n_max)
    value = float(np.arange(n_max + 1) @ p)
    m = n_max
    tail = z ** (m + 1) * ((m + 1) * (1.0 - z) + z) / (1.0 - z)
    return value, float(tail)


def spectral_table(x_values) -> dict[str, np.ndarray]:
    """All four laws over a grid of x, at hbar = k = tau = 1 (omega = x)."""
    x_values = np.asarray(x_values, dtype=float)
    cols: dict[str, np.ndarray] = {"x": x_values}
    for law in ("classical", "rayleigh", "wien", "planck"):
        cols[law] = np.array([
            spectral_energy(SpectralPoint(omega=float(x), tau=1.0), law)
            for x in x_values])
    return cols
