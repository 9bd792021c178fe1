"""Instantaneous-measurement models on a quantum bit coupled to a classical bit.

The pointer interaction U[psi (x) phi](s, t) = psi(s) phi(t XOR s) turns an
atomic superposition into a classically correlated pair state; conditioning
on the pointer value reproduces the projection postulates, and the diagonal
pointer observables commute with every system observable on the interaction
range, which is the nondemolition property checked here.

All algebra works on numpy arrays of complex128 *or* of exact objects
(ExactComplex / Fraction entries), so the decoherence, Bayes and entropy
identities can be asserted with exact arithmetic on rational amplitudes.
Basis order for the pair space is system-major: index = 2*sigma + tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import ExactComplex
from .statespace import dag, is_hermitian, shannon_entropy

PROJECTOR_ATOL = 1e-12
FAMILY_ATOL = 1e-10
OFF_BLOCK_ATOL = 1e-10
ZERO_BRANCH = 1e-14


def _is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


def _conj(x):
    if isinstance(x, ExactComplex):
        return x.conjugate()
    if isinstance(x, Fraction):
        return x
    return np.conjugate(x)


def _abs2(x):
    """|x|^2, exact for ExactComplex/Fraction entries."""
    if isinstance(x, ExactComplex):
        return (x * x.conjugate()).re
    if isinstance(x, Fraction):
        return x * x
    return (x * np.conjugate(x)).real


def _as_float_scalar(x) -> float:
    if isinstance(x, ExactComplex):
        return float(x.re)
    return float(x)


def norm_sq(psi: np.ndarray):
    return sum(_abs2(a) for a in psi.ravel())


def interact(psi: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Pair amplitude chi(s, t) = psi(s) phi(t XOR s); exactly unitary."""
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    if psi.shape != (2,) or phi.shape != (2,):
        raise ValueError("interact expects two bit amplitudes of shape (2,)")
    exact = _is_exact(psi) or _is_exact(phi)
    chi = np.empty((2, 2), dtype=object if exact else complex)
    for s in range(2):
        for t in range(2):
            chi[s, t] = psi[s] * phi[t ^ s]
    return chi


def _delta_projector(tau: int, exact: bool) -> np.ndarray:
    one = Fraction(1) if exact else 1.0 + 0.0j
    zero = Fraction(0) if exact else 0.0 + 0.0j
    P = np.full((2, 2), zero, dtype=object if exact else complex)
    P[tau, tau] = one
    return P


def compound_weights(chi: np.ndarray) -> list:
    """Classical weights pi(tau) = |chi(tau, tau)|^2 of a cat pair state."""
    return [_abs2(chi[0, 0]), _abs2(chi[1, 1])]


def compound_density(chi: np.ndarray) -> np.ndarray:
    """Block-diagonal pair density sum_tau pi(tau) P_tau (x) P_tau.

    Rejects amplitudes with off-correlation mass (chi(s,t) != 0 for s != t),
    which signals use outside the pointer scenario.
    """
    chi = np.asarray(chi)
    if chi.shape != (2, 2):
        raise ValueError("compound_density expects a pair amplitude (2, 2)")
    off = _abs2(chi[0, 1]) + _abs2(chi[1, 0])
    exact = _is_exact(chi)
    if (exact and off != 0) or (not exact and float(off) > OFF_BLOCK_ATOL):
        raise ValueError(f"pair amplitude is not classically correlated (off mass {float(off):.3e})")
    out = np.full((4, 4), Fraction(0) if exact else 0.0 + 0.0j,
                  dtype=object if exact else complex)
    # system-major kron(P_tau, P_tau): entry ((s,t),(s',t')) = P[s,s'] P[t,t']
    for tau, w in enumerate(compound_weights(chi)):
        P = _delta_projector(tau, exact)
        for s in range(2):
            for sp in range(2):
                for t in range(2):
                    for tp in range(2):
                        out[2 * s + t, 2 * sp + tp] = out[2 * s + t, 2 * sp + tp] \
                            + w * P[s, sp] * P[t, tp]
    return out


def partial_trace_system(rho_hat: np.ndarray) -> np.ndarray:
    """Trace out the classical (pointer) factor: rho[s,s'] = sum_t rho_hat[(s,t),(s',t)]."""
    rho_hat = np.asarray(rho_hat)
    if rho_hat.shape != (4, 4):
        raise ValueError("expected a 4x4 pair density matrix")
    exact = _is_exact(rho_hat)
    rho = np.full((2, 2), Fraction(0) if exact else 0.0 + 0.0j,
                  dtype=object if exact else complex)
    for s in range(2):
        for sp in range(2):
            acc = rho_hat[2 * s + 0, 2 * sp + 0] + rho_hat[2 * s + 1, 2 * sp + 1]
            rho[s, sp] = acc
    return rho


def classical_block(rho_hat: np.ndarray, tau: int) -> np.ndarray:
    """Unnormalized system block of pointer outcome tau."""
    if tau not in (0, 1):
        raise ValueError("tau must be 0 or 1")
    rho_hat = np.asarray(rho_hat)
    exact = _is_exact(rho_hat)
    blk = np.empty((2, 2), dtype=object if exact else complex)
    for s in range(2):
        for sp in range(2):
            blk[s, sp] = rho_hat[2 * s + tau, 2 * sp + tau]
    return blk


def bayes_condition(rho_hat: np.ndarray, tau: int) -> np.ndarray:
    """Normalized conditional state rho_tau = block(tau)/pi(tau)."""
    blk = classical_block(rho_hat, tau)
    pi = blk[0, 0] + blk[1, 1]
    if _as_float_scalar(pi if not isinstance(pi, ExactComplex) else pi) <= ZERO_BRANCH:
        raise ValueError(f"outcome tau={tau} has zero probability")
    out = np.empty((2, 2), dtype=blk.dtype)
    for s in range(2):
        for sp in range(2):
            out[s, sp] = blk[s, sp] / pi
    return out


def exact_entropy_bits(matrix_or_weights) -> float:
    """Entropy (bits) from exact weights, or from an exactly diagonal matrix.

    The pointer-scenario compound and reduced states are diagonal with the
    classical weights as spectrum, so both entropies are the same Shannon
    sum and the identity S(reduced) = S(compound) holds exactly.
    """
    arr = np.asarray(matrix_or_weights, dtype=object)
    if arr.ndim == 1:
        probs = [Fraction(w) if not isinstance(w, Fraction) else w for w in arr]
    elif arr.ndim == 2:
        n = arr.shape[0]
        for i in range(n):
            for j in range(n):
                if i != j and not (arr[i, j] == 0 or arr[i, j] == Fraction(0)):
                    raise ValueError("exact entropy needs an exactly diagonal matrix")
        probs = []
        for i in range(n):
            d = arr[i, i]
            probs.append(d.re if isinstance(d, ExactComplex) else Fraction(d))
    else:
        raise ValueError("expected weights or a square matrix")
    return shannon_entropy([float(p) for p in probs], base=2.0)


# -- projection postulates -------------------------------------------------------

@dataclass
class ProjectionResult:
    mixed: np.ndarray
    prob_true: float      # |E psi|^2
    prob_false: float     # |F psi|^2 with F = I - E


def projection_postulate(psi: np.ndarray, E: np.ndarray) -> ProjectionResult:
    """Pre-measurement decoherence of the event E: P_psi -> E P E + F P F
    with branch weights |E psi|^2 and |F psi|^2."""
    psi = np.asarray(psi, dtype=complex)
    E = np.asarray(E, dtype=complex)
    if not is_hermitian(E, PROJECTOR_ATOL) or np.max(np.abs(E @ E - E)) > PROJECTOR_ATOL:
        raise ValueError("E must be an orthoprojector to 1e-12")
    F = np.eye(E.shape[0]) - E
    Epsi = E @ psi
    Fpsi = F @ psi
    lam = float(np.vdot(Epsi, Epsi).real)
    mu = float(np.vdot(Fpsi, Fpsi).real)
    mixed = np.outer(Epsi, Epsi.conj()) + np.outer(Fpsi, Fpsi.conj())
    return ProjectionResult(mixed=mixed, prob_true=lam, prob_false=mu)


def luders_project(psi: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Verified-event update psi -> E psi / |E psi|."""
    psi = np.asarray(psi, dtype=complex)
    E = np.asarray(E, dtype=complex)
    Epsi = E @ psi
    nrm = np.linalg.norm(Epsi)
    if nrm <= ZERO_BRANCH:
        raise ValueError("event has zero probability on this state")
    return Epsi / nrm


# -- generalized reductions --------------------------------------------------------

@dataclass(frozen=True)
class ReductionFamily:
    """Finite outcome family {V(y)} with base weights mu(y) > 0 satisfying
    sum_y mu(y) V(y)' V(y) = I."""

    labels: tuple
    operators: tuple
    weights: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(V, dtype=complex) for V in self.operators)
        if len(ops) != len(self.labels) or len(ops) != len(self.weights):
            raise ValueError("labels, operators and weights must align")
        if not ops:
            raise ValueError("family must be nonempty")
        dim = ops[0].shape[0]
        if any(w <= 0 for w in self.weights):
            raise ValueError("base weights must be positive")
        total = sum(w * (dag(V) @ V) for w, V in zip(self.weights, ops))
        if np.max(np.abs(total - np.eye(dim))) > FAMILY_ATOL:
            raise ValueError("family is not normalized: sum mu V'V != I to 1e-10")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @classmethod
    def from_projectors(cls, projectors) -> "ReductionFamily":
        return cls(labels=tuple(range(len(projectors))),
                   operators=tuple(projectors),
                   weights=tuple(1.0 for _ in projectors))


@dataclass
class ReductionOutcome:
    labels: tuple
    probabilities: np.ndarray
    posteriors: list


def reduction_apply(family: ReductionFamily, psi: np.ndarray) -> ReductionOutcome:
    """Outcome distribution f(y) mu(y) = |V(y) psi|^2 mu(y) and the
    normalized posterior states V(y) psi / |V(y) psi|."""
    psi = np.asarray(psi, dtype=complex)
    probs = np.empty(len(family.operators))
    posteriors = []
    for i, (V, w) in enumerate(zip(family.operators, family.weights)):
        Vpsi = V @ psi
        f = float(np.vdot(Vpsi, Vpsi).real)
        probs[i] = f * w
        posteriors.append(Vpsi / math.sqrt(f) if f > ZERO_BRANCH else None)
    total = probs.sum()
    if abs(total - float(np.vdot(psi, psi).real)) > FAMILY_ATOL:
        raise RuntimeError(f"outcome probabilities sum to {total}, not 1")
    return ReductionOutcome(labels=family.labels, probabilities=probs,
                            posteriors=posteriors)


# -- nondemolition -----------------------------------------------------------------

@dataclass
class NondemolitionReport:
    commutator_on_initial: float
    full_commutator: float
    reduced_commutator: float


def pointer_observable(g) -> np.ndarray:
    """Heisenberg pointer observable G = diag over (s,t) of g(s XOR t)."""
    g = [complex(v) for v in g]
    if len(g) != 2:
        raise ValueError("g must assign a value to each pointer outcome")
    diagonal = [g[(s + t) % 2] for s in range(2) for t in range(2)]
    return np.diag(diagonal).astype(complex)


def nondemolition_check(F: np.ndarray, g, psi: np.ndarray) -> NondemolitionReport:
    """Commutation of the system observable F (x) I with the pointer
    observable G on the interaction range chi0 = psi (x) delta_0, versus the
    full operator commutator, versus the reduced pair
    X0 = sum_tau E(tau) F E(tau), Y0 = sum_tau g(tau) E(tau)."""
    F = np.asarray(F, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if F.shape != (2, 2) or psi.shape != (2,):
        raise ValueError("F must be 2x2 and psi a bit amplitude")
    G = pointer_observable(g)
    Fhat = np.kron(F, np.eye(2))
    comm = Fhat @ G - G @ Fhat
    chi0 = np.kron(psi, np.array([1.0, 0.0]))
    on_initial = float(np.linalg.norm(comm @ chi0))
    full = float(np.linalg.norm(comm, ord=2))
    X0 = np.diag(np.diag(F))
    Y0 = np.diag([complex(g[0]), complex(g[1])])
    reduced = float(np.linalg.norm(X0 @ Y0 - Y0 @ X0, ord=2))
    return NondemolitionReport(commutator_on_initial=on_initial,
                               full_commutator=full,
                               reduced_commutator=reduced)
