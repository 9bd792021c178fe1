"""Integrators for stochastic decoherence and filtering dynamics.

Covers the deterministic mean flows (Lindblad-form and counting master
equations, classical RK4), the linear unnormalized stochastic equations
driven by Wiener or Poisson input noise, and their nonlinear posterior
counterparts.  The nonlinear diffusive scheme is *defined* as the per-step
normalization of the linear Euler-Maruyama update with the drift re-centered
by the current estimate, so the linear/nonlinear path-wise equivalence on
shared increments is exact by construction.  Counting trajectories walk
exact event times: homogeneous Poisson sampling for the input-measure linear
equation and Ogata thinning at the conditional intensity nu*|C psi|^2 for the
posterior equation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels
from .noise import NoisePath, TimeGrid, draw_jump_times, stream_generator
from .statespace import dag, is_hermitian

TRACE_DRIFT_LIMIT = 1e-6
POSITIVITY_FLOOR = 1e-8
DEGENERATE_NORM = 1e-14
DEFAULT_CHUNK = 1024


# -- models -------------------------------------------------------------------

@dataclass(frozen=True)
class DiffusionModel:
    """Wiener-observation model: Hamiltonian H (Hermitian) and coupling L.

    The contraction generator is K = L'L/2 + iH/hbar, so K + K' = L'L.
    """

    H: np.ndarray
    L: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        L = np.asarray(self.L, dtype=complex)
        if H.shape != L.shape or H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("H and L must be square matrices of equal dim")
        if not is_hermitian(H):
            raise ValueError("H must be Hermitian to 1e-12")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "L", L)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def K(self) -> np.ndarray:
        return 0.5 * dag(self.L) @ self.L + (1j / self.hbar) * self.H


@dataclass(frozen=True)
class JumpModel:
    """Counting-observation model: collapse C, energy E, intensity nu."""

    C: np.ndarray
    E: np.ndarray
    nu: float
    hbar: float = 1.0

    def __post_init__(self):
        C = np.asarray(self.C, dtype=complex)
        E = np.asarray(self.E, dtype=complex)
        if C.shape != E.shape or C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("C and E must be square matrices of equal dim")
        if not is_hermitian(E):
            raise ValueError("E must be Hermitian to 1e-12")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "E", E)

    @property
    def dim(self) -> int:
        return self.C.shape[0]

    @property
    def G(self) -> np.ndarray:
        return 0.5 * self.nu * dag(self.C) @ self.C + (1j / self.hbar) * self.E

    @property
    def flow_generator(self) -> np.ndarray:
        """Inter-jump generator A = nu/2 * I - G of the linear equation."""
        return 0.5 * self.nu * np.eye(self.dim) - self.G

    def thinning_bound(self) -> float:
        smax = np.linalg.svd(self.C, compute_uv=False)[0]
        return self.nu * smax * smax


def jump_to_diffusion_embedding(L: np.ndarray, H: np.ndarray, nu: float,
                                hbar: float = 1.0) -> JumpModel:
    """Embed a diffusive pair (L, H) as a counting model at intensity nu:
    C = I + nu^{-1/2} L and E = H + nu^{1/2}/(2i) (L - L'); for L = L', E = H."""
    L = np.asarray(L, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if nu <= 0:
        raise ValueError("nu must be positive")
    C = np.eye(L.shape[0]) + L / math.sqrt(nu)
    E = H - 0.5j * math.sqrt(nu) * (L - dag(L))
    return JumpModel(C=C, E=E, nu=nu, hbar=hbar)


# -- records ------------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    """One simulated path on a grid.

    states[k] is the state at times[k]: a complex vector (dim,) or density
    matrix (dim, dim).  weights[k] is the likelihood density pi(t_k)
    (squared norm / trace of the companion unnormalized solution).
    observations[k-1] and innovations[k-1] are increments over step k
    (observation: the driving y/w increment or the jump count; innovation:
    the output-measure martingale increment).
    """

    grid: TimeGrid
    states: np.ndarray
    weights: np.ndarray
    observations: np.ndarray
    innovations: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def normalized_states(self) -> np.ndarray:
        if self.states.ndim == 2:
            norms = np.linalg.norm(self.states, axis=1, keepdims=True)
            return self.states / norms
        traces = np.trace(self.states, axis1=1, axis2=2).real
        return self.states / traces[:, None, None]

    def projector_path(self) -> np.ndarray:
        """P_psi (or the normalized density) at each grid time."""
        if self.states.ndim == 2:
            s = self.normalized_states()
            return np.einsum("ti,tj->tij", s, s.conj())
        return self.normalized_states()

    def raw_density_path(self) -> np.ndarray:
        """Unnormalized chi chi+ (or rho) at each grid time."""
        if self.states.ndim == 2:
            return np.einsum("ti,tj->tij", self.states, self.states.conj())
        return self.states

    def to_csv(self, path, bloch: bool = False) -> None:
        from .artifacts import write_csv  # local import avoids a cycle

        times = self.grid.times()
        cols: dict[str, np.ndarray] = {"t": times}
        if bloch:
            if self.dim != 2:
                raise ValueError("bloch export requires a qubit record")
            rho = self.projector_path()
            cols["bloch_x"] = 2.0 * rho[:, 0, 1].real
            cols["bloch_y"] = -2.0 * rho[:, 0, 1].imag
            cols["bloch_z"] = (rho[:, 0, 0] - rho[:, 1, 1]).real
        elif self.states.ndim == 2:
            for i in range(self.dim):
                cols[f"re_{i}"] = self.states[:, i].real
                cols[f"im_{i}"] = self.states[:, i].imag
        else:
            for i in range(self.dim):
                for j in range(self.dim):
                    cols[f"re_{i}{j}"] = self.states[:, i, j].real
                    cols[f"im_{i}{j}"] = self.states[:, i, j].imag
        cols["weight"] = self.weights
        pad = np.zeros(1)
        cols["obs_increment"] = np.concatenate([pad, self.observations])
        cols["innovation"] = np.concatenate([pad, self.innovations])
        for name, arr in self.extras.items():
            if arr.shape == times.shape:
                cols[name] = arr
        write_csv(path, cols)


# -- deterministic mean flows ---------------------------------------------------

def _rk4_path(f, y0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    dt = grid.dt
    out = np.empty((grid.n_steps + 1,) + y0.shape, dtype=complex)
    out[0] = y0
    y = y0.astype(complex)
    for k in range(grid.n_steps):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = y
    return out


def _check_master_path(path: np.ndarray, what: str) -> None:
    traces = np.trace(path, axis1=1, axis2=2).real
    drift = np.max(np.abs(traces - traces[0]))
    if drift > TRACE_DRIFT_LIMIT:
        raise RuntimeError(
            f"{what}: trace drifted by {drift:.3e} > {TRACE_DRIFT_LIMIT:.0e}; reduce dt")
    eigs = np.linalg.eigvalsh(path)
    if eigs.min() < -POSITIVITY_FLOOR:
        raise RuntimeError(f"{what}: positivity violated ({eigs.min():.3e})")


def integrate_lindblad(model: DiffusionModel, rho0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Mean flow d rho/dt = -(K rho + rho K') + L rho L', classical RK4."""
    K, L, Ld = model.K, model.L, dag(model.L)

    def f(rho):
        return -(K @ rho + rho @ dag(K)) + L @ rho @ Ld

    path = _rk4_path(f, np.asarray(rho0, dtype=complex), grid)
    _check_master_path(path, "integrate_lindblad")
    return path


def integrate_jump_master(model: JumpModel, rho0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Mean counting flow d rho/dt = -(G rho + rho G') + nu C rho C'."""
    G, C, Cd, nu = model.G, model.C, dag(model.C), model.nu

    def f(rho):
        return -(G @ rho + rho @ dag(G)) + nu * (C @ rho @ Cd)

    path = _rk4_path(f, np.asarray(rho0, dtype=complex), grid)
    _check_master_path(path, "integrate_jump_master")
    return path


# -- diffusive trajectories -----------------------------------------------------

def _require_wiener(noise: NoisePath, grid: TimeGrid) -> np.ndarray:
    if noise.kind != "wiener":
        raise ValueError("diffusive simulation needs a wiener NoisePath")
    if noise.grid != grid:
        raise ValueError("noise grid does not match the simulation grid")
    return noise.increments


def simulate_linear_diffusive(model: DiffusionModel, state0: np.ndarray,
                              grid: TimeGrid, noise: NoisePath) -> TrajectoryRecord:
    """Euler-Maruyama path of the unnormalized equation
    d chi + K chi dt = L chi dy under the input Wiener measure.

    Accepts a state vector chi0 or a density matrix rho0 (then the matching
    unnormalized density-matrix equation
    d rho = -(K rho + rho K' - L rho L') dt + (L rho + rho L') dy is stepped).
    """
    dW = _require_wiener(noise, grid)
    K, L = model.K, model.L
    dt = grid.dt
    S = grid.n_steps
    state0 = np.asarray(state0, dtype=complex)
    innovations = np.empty(S)
    weights = np.empty(S + 1)

    if state0.ndim == 1:
        states = np.empty((S + 1, model.dim), dtype=complex)
        chi = state0.copy()
        states[0] = chi
        weights[0] = np.vdot(chi, chi).real
        for k in range(S):
            Lchi = L @ chi
            n2 = np.vdot(chi, chi).real
            ell = 2.0 * np.vdot(chi, Lchi).real / n2
            innovations[k] = dW[k] - ell * dt
            chi = chi - dt * (K @ chi) + dW[k] * Lchi
            if not np.all(np.isfinite(chi)):
                raise RuntimeError(f"linear diffusive state non-finite at step {k + 1}")
            states[k + 1] = chi
            weights[k + 1] = np.vdot(chi, chi).real
        kind = "linear-diffusive"
    elif state0.ndim == 2:
        states = np.empty((S + 1, model.dim, model.dim), dtype=complex)
        rho = state0.copy()
        Kd, Ld = dag(K), dag(L)
        states[0] = rho
        weights[0] = np.trace(rho).real
        for k in range(S):
            tr = np.trace(rho).real
            ell = np.trace((L + Ld) @ rho).real / tr
            innovations[k] = dW[k] - ell * dt
            rho = rho - dt * (K @ rho + rho @ Kd - L @ rho @ Ld) + dW[k] * (L @ rho + rho @ Ld)
            if not np.all(np.isfinite(rho)):
                raise RuntimeError(f"linear diffusive state non-finite at step {k + 1}")
            states[k + 1] = rho
            weights[k + 1] = np.trace(rho).real
        kind = "linear-diffusive-density"
    else:
        raise ValueError("state0 must be a vector or a square matrix")

    return TrajectoryRecord(grid=grid, states=states, weights=weights,
                            observations=dW.copy(), innovations=innovations,
                            kind=kind, meta={"measure": "input"})


def simulate_nonlinear_diffusive(model: DiffusionModel, psi0: np.ndarray,
                                 grid: TimeGrid, noise: NoisePath,
                                 noise_role: str = "observation") -> TrajectoryRecord:
    """Normalized posterior path of the diffusive filtering equation.

    The scheme is the normalized linear update: with observation increment
    dy, psi' = normalize((I - K dt + L dy) psi) and the innovation is
    dw~ = dy - 2 Re<psi|L psi> dt.  ``noise_role`` selects what the given
    increments mean: "observation" treats them as dy (the input noise, for
    shared-path comparisons with the linear equation); "innovation" treats
    them as dw~ (direct sampling under the output measure).
    """
    if noise_role not in ("observation", "innovation"):
        raise ValueError("noise_role must be 'observation' or 'innovation'")
    dX = _require_wiener(noise, grid)
    K, L = model.K, model.L
    dt = grid.dt
    S = grid.n_steps
    psi = np.asarray(psi0, dtype=complex).copy()
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalized")
    psi = psi / nrm
    states = np.empty((S + 1, model.dim), dtype=complex)
    weights = np.empty(S + 1)
    observations = np.empty(S)
    innovations = np.empty(S)
    amp = 1.0  # companion linear amplitude: chi = amp * psi on the shared path
    states[0] = psi
    weights[0] = 1.0
    for k in range(S):
        Lpsi = L @ psi
        ell = 2.0 * np.vdot(psi, Lpsi).real
        if noise_role == "observation":
            dy = dX[k]
            innovations[k] = dy - ell * dt
        else:
            dy = dX[k] + ell * dt
            innovations[k] = dX[k]
        observations[k] = dy
        chi = psi - dt * (K @ psi) + dy * Lpsi
        nrm = np.linalg.norm(chi)
        if not np.isfinite(nrm) or nrm < DEGENERATE_NORM:
            raise RuntimeError(f"nonlinear diffusive state degenerate at step {k + 1}")
        psi = chi / nrm
        amp *= nrm
        states[k + 1] = psi
        weights[k + 1] = amp * amp
    return TrajectoryRecord(grid=grid, states=states, weights=weights,
                            observations=observations, innovations=innovations,
                            kind="nonlinear-diffusive",
                            meta={"measure": "input" if noise_role == "observation" else "output"})


# -- counting trajectories ------------------------------------------------------

class _FlowPropagator:
    """Exact exponential flow exp(A t) through an eigendecomposition."""

    def __init__(self, A: np.ndarray):
        self.A = np.asarray(A, dtype=complex)
        lam, V = np.linalg.eig(self.A)
        try:
            Vinv = np.linalg.inv(V)
            recon = (V * lam) @ Vinv
            ok = np.max(np.abs(recon - self.A)) <= 1e-12 * max(1.0, np.max(np.abs(self.A)))
        except np.linalg.LinAlgError:
            ok = False
        self.diagonalizable = ok
        self.lam = lam
        self.V = np.ascontiguousarray(V)
        self.Vinv = np.ascontiguousarray(Vinv) if ok else None

    def matrix(self, t: float) -> np.ndarray:
        if self.diagonalizable:
            return (self.V * np.exp(self.lam * t)) @ self.Vinv
        return scipy.linalg.expm(self.A * t)

    def apply(self, x: np.ndarray, t: float) -> np.ndarray:
        if self.diagonalizable:
            return self.V @ (np.exp(self.lam * t) * (self.Vinv @ x))
        return scipy.linalg.expm(self.A * t) @ x


def _linear_jump_python(prop: _FlowPropagator, C: np.ndarray, chi0: np.ndarray,
                        jump_times: np.ndarray, times: np.ndarray, nu: float):
    """Pure-python twin of the linear counting kernel (defective-generator path)."""
    S = times.size - 1
    dim = chi0.size
    states = np.empty((S + 1, dim), dtype=complex)
    weights = np.empty(S + 1)
    obs = np.zeros(S)
    innov = np.zeros(S)
    intens = np.empty(S + 1)
    sqrt_nu = math.sqrt(nu)
    chi = chi0.astype(complex)
    t = times[0]
    j = 0
    n = np.linalg.norm(chi)
    g = sqrt_nu * np.linalg.norm(C @ chi) / n
    states[0] = chi
    weights[0] = n * n
    intens[0] = g * g
    for k in range(1, S + 1):
        tk = times[k]
        while j < jump_times.size and jump_times[j] <= tk:
            seg = jump_times[j] - t
            chi = prop.apply(chi, seg)
            n = np.linalg.norm(chi)
            if not np.isfinite(n) or n <= 0.0:
                raise RuntimeError("linear jump state non-finite")
            cn = np.linalg.norm(C @ chi) / n
            innov[k - 1] -= 0.5 * (g + sqrt_nu * cn) * seg
            if cn < DEGENERATE_NORM:
                raise RuntimeError("degenerate |C psi| at a jump time")
            innov[k - 1] += 1.0 / (sqrt_nu * cn)
            obs[k - 1] += 1.0
            chi = C @ chi
            g = sqrt_nu * np.linalg.norm(C @ chi) / np.linalg.norm(chi)
            t = jump_times[j]
            j += 1
        seg = tk - t
        chi = prop.apply(chi, seg)
        n = np.linalg.norm(chi)
        if not np.isfinite(n) or n <= 0.0:
            raise RuntimeError("linear jump state non-finite")
        g_new = sqrt_nu * np.linalg.norm(C @ chi) / n
        innov[k - 1] -= 0.5 * (g + g_new) * seg
        g = g_new
        t = tk
        states[k] = chi
        weights[k] = n * n
        intens[k] = g * g
    return states, weights, obs, innov, intens


def _run_linear_jump(model: JumpModel, chi0: np.ndarray, jump_times: np.ndarray,
                     grid: TimeGrid):
    prop = _FlowPropagator(model.flow_generator)
    times = grid.times()
    if prop.diagonalizable and _kernels.HAVE_NUMBA:
        S = grid.n_steps
        states = np.empty((S + 1, model.dim), dtype=complex)
        weights = np.empty(S + 1)
        obs = np.zeros(S)
        innov = np.zeros(S)
        intens = np.empty(S + 1)
        status = _kernels.linear_jump_kernel(
            prop.V, prop.lam, prop.Vinv, model.C, chi0.astype(complex),
            np.asarray(jump_times, dtype=float), times, model.nu,
            states, weights, obs, innov, intens)
        if status == _kernels.STATUS_DEGENERATE:
            raise RuntimeError("degenerate |C psi| at a jump time")
        if status != _kernels.STATUS_OK:
            raise RuntimeError(f"linear jump kernel failed with status {status}")
        return states, weights, obs, innov, intens
    return _linear_jump_python(prop, model.C, chi0, np.asarray(jump_times, dtype=float),
                               times, model.nu)


def simulate_linear_jump(model: JumpModel, state0: np.ndarray, grid: TimeGrid,
                         noise: NoisePath) -> TrajectoryRecord:
    """Unnormalized counting path: deterministic contraction flow between the
    input-measure Poisson events and chi -> C chi at each event."""
    if noise.kind != "poisson" or noise.jump_times is None:
        raise ValueError("jump simulation needs a poisson NoisePath with jump times")
    if noise.grid != grid:
        raise ValueError("noise grid does not match the simulation grid")
    state0 = np.asarray(state0, dtype=complex)
    if state0.ndim == 1:
        states, weights, obs, innov, intens = _run_linear_jump(model, state0, noise.jump_times, grid)
        return TrajectoryRecord(grid=grid, states=states, weights=weights,
                                observations=obs, innovations=innov, kind="linear-jump",
                                meta={"measure": "input"},
                                extras={"intensity": intens})
    if state0.ndim == 2:
        prop = _FlowPropagator(model.flow_generator)
        S = grid.n_steps
        times = grid.times()
        states = np.empty((S + 1, model.dim, model.dim), dtype=complex)
        weights = np.empty(S + 1)
        obs = np.zeros(S)
        rho = state0.copy()
        states[0] = rho
        weights[0] = np.trace(rho).real
        t = 0.0
        j = 0
        jt = noise.jump_times
        for k in range(1, S + 1):
            tk = times[k]
            while j < jt.size and jt[j] <= tk:
                P = prop.matrix(jt[j] - t)
                rho = P @ rho @ dag(P)
                rho = model.C @ rho @ dag(model.C)
                obs[k - 1] += 1.0
                t = jt[j]
                j += 1
            P = prop.matrix(tk - t)
            rho = P @ rho @ dag(P)
            t = tk
            states[k] = rho
            weights[k] = np.trace(rho).real
        return TrajectoryRecord(grid=grid, states=states, weights=weights,
                                observations=obs, innovations=np.zeros(S),
                                kind="linear-jump-density", meta={"measure": "input"})
    raise ValueError("state0 must be a vector or a square matrix")


def _thinning_randoms(rng: np.random.Generator, n: int):
    arr = rng.random(size=(n, 2))
    exps = -np.log1p(-arr[:, 0])
    return exps, arr[:, 1].copy()


def simulate_nonlinear_jump(model: JumpModel, psi0: np.ndarray, grid: TimeGrid,
                            seed: int | None = None, stream: int = 0,
                            jump_times: np.ndarray | None = None) -> TrajectoryRecord:
    """Normalized posterior counting path.

    With ``jump_times`` given, the posterior is evaluated along that shared
    (input-measure) record: the normalized linear solution.  Otherwise the
    output counting process is sampled by Ogata thinning with upper bound
    nu * smax(C)^2 under the stream (seed, stream).
    """
    psi0 = np.asarray(psi0, dtype=complex)
    nrm = np.linalg.norm(psi0)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalized")
    psi0 = psi0 / nrm

    if jump_times is not None:
        states, weights, obs, innov, intens = _run_linear_jump(model, psi0, jump_times, grid)
        norms = np.linalg.norm(states, axis=1, keepdims=True)
        return TrajectoryRecord(grid=grid, states=states / norms, weights=weights,
                                observations=obs, innovations=innov,
                                kind="nonlinear-jump", meta={"measure": "input"},
                                extras={"intensity": intens})

    if seed is None:
        raise ValueError("either jump_times or a seed is required")
    prop = _FlowPropagator(model.flow_generator)
    if not (prop.diagonalizable and _kernels.HAVE_NUMBA):
        raise RuntimeError("thinned sampling requires a diagonalizable flow generator")
    lam_bar = model.thinning_bound()
    times = grid.times()
    S = grid.n_steps
    n_guess = int(lam_bar * grid.T + 10.0 * math.sqrt(lam_bar * grid.T) + 64)
    for attempt in range(4):
        rng = stream_generator(seed, stream)
        exps, unis = _thinning_randoms(rng, n_guess)
        states = np.empty((S + 1, model.dim), dtype=complex)
        weights = np.empty(S + 1)
        obs = np.zeros(S)
        innov = np.zeros(S)
        intens = np.empty(S + 1)
        jt_out = np.empty(max(16, int(lam_bar * grid.T * 1.5) + 64))
        status, _, njumps = _kernels.thinned_jump_kernel(
            prop.V, prop.lam, prop.Vinv, model.C, model.nu, lam_bar, psi0,
            exps, unis, times, states, weights, obs, innov, intens, jt_out)
        if status == _kernels.STATUS_OK:
            return TrajectoryRecord(grid=grid, states=states, weights=weights,
                                    observations=obs, innovations=innov,
                                    kind="nonlinear-jump", meta={"measure": "output"},
                                    extras={"intensity": intens,
                                            "jump_times": jt_out[:njumps].copy()})
        if status in (_kernels.STATUS_RAND_EXHAUSTED, _kernels.STATUS_JUMP_CAPACITY):
            n_guess *= 2
            continue
        if status == _kernels.STATUS_DEGENERATE:
            raise RuntimeError("degenerate |C psi| at a jump time")
        raise RuntimeError(f"thinned jump kernel failed with status {status}")
    raise RuntimeError("thinning bound exceeded: proposal budget exhausted after retries")


# -- ensemble reduction -----------------------------------------------------------

class KahanAccumulator:
    """Compensated summation in a fixed fold order."""

    def __init__(self, shape, dtype=float):
        self.total = np.zeros(shape, dtype=dtype)
        self._comp = np.zeros(shape, dtype=dtype)

    def add(self, value) -> None:
        y = value - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t


def ensemble_average(records: list[TrajectoryRecord], mode: str = "input-measure") -> np.ndarray:
    """Average a list of records into a normalized density path.

    input-measure: unweighted mean of the unnormalized chi chi+ (or rho),
    normalized by its trace at the end.  weighted-posterior: self-normalized
    likelihood-weighted mean of the posterior projectors; output-measure
    records (already posterior-law samples) enter with unit weight.
    """
    if mode not in ("input-measure", "weighted-posterior"):
        raise ValueError(f"unknown mode {mode!r}")
    if not records:
        raise ValueError("need at least one record")
    grid = records[0].grid
    dim = records[0].dim
    for r in records:
        if r.grid != grid:
            raise ValueError("records do not share a grid")
    S = grid.n_steps
    num = KahanAccumulator((S + 1, dim, dim), dtype=complex)
    den = KahanAccumulator(S + 1)
    for r in records:
        proj = r.projector_path()
        if mode == "input-measure":
            w = r.weights
        else:
            w = np.ones(S + 1) if r.meta.get("measure") == "output" else r.weights
        num.add(w[:, None, None] * proj)
        den.add(w)
    return num.total / den.total[:, None, None]


# -- streaming ensembles -----------------------------------------------------------

@dataclass
class EnsembleSummary:
    """Reduced statistics of an ensemble, averaged in trajectory order."""

    grid: TimeGrid
    n_traj: int
    mode: str
    mean_rho: np.ndarray          # (S+1, dim, dim), trace-normalized mean state
    raw_mean_rho: np.ndarray      # same, before trace normalization
    mean_weight: np.ndarray       # (S+1,)
    weight_final: np.ndarray      # (n_traj,)
    innovation_final: np.ndarray  # (n_traj,)
    observation_final: np.ndarray
    n_jumps: np.ndarray | None = None
    mean_intensity: np.ndarray | None = None

    def bloch_path(self) -> np.ndarray:
        rho = self.mean_rho
        if rho.shape[1] != 2:
            raise ValueError("bloch path requires a qubit ensemble")
        return np.stack([2.0 * rho[:, 0, 1].real,
                         -2.0 * rho[:, 0, 1].imag,
                         (rho[:, 0, 0] - rho[:, 1, 1]).real], axis=1)


def _diffusive_chunk(model: DiffusionModel, psi0: np.ndarray, grid: TimeGrid,
                     seed: int, streams: np.ndarray, nonlinear: bool):
    S, dt = grid.n_steps, grid.dt
    dim = model.dim
    n = streams.size
    dW = np.empty((n, S))
    sq = math.sqrt(dt)
    for i, s in enumerate(streams):
        dW[i] = stream_generator(seed, int(s)).standard_normal(S) * sq
    Kt = model.K.T.copy()
    Lt = model.L.T.copy()
    rho_sum = np.zeros((S + 1, dim, dim), dtype=complex)
    w_sum = np.zeros(S + 1)
    innov = np.zeros(n)
    obs = np.zeros(n)
    chi = np.tile(psi0.astype(complex), (n, 1))
    if nonlinear:
        amp = np.ones(n)
        rho_sum[0] = n * np.outer(psi0, psi0.conj())
        w_sum[0] = n
        for k in range(S):
            Lchi = chi @ Lt
            ell = 2.0 * np.einsum("ni,ni->n", chi.conj(), Lchi).real
            dy = dW[:, k] + ell * dt
            innov += dW[:, k]
            obs += dy
            chi = chi - dt * (chi @ Kt) + dy[:, None] * Lchi
            nrm = np.linalg.norm(chi, axis=1)
            chi /= nrm[:, None]
            amp *= nrm
            rho_sum[k + 1] = np.einsum("ni,nj->ij", chi, chi.conj())
            w_sum[k + 1] = np.sum(amp * amp)
        w_final = amp * amp
    else:
        rho_sum[0] = n * np.outer(psi0, psi0.conj())
        w_sum[0] = n
        for k in range(S):
            Lchi = chi @ Lt
            n2 = np.einsum("ni,ni->n", chi.conj(), chi).real
            ell = 2.0 * np.einsum("ni,ni->n", chi.conj(), Lchi).real / n2
            innov += dW[:, k] - ell * dt
            obs += dW[:, k]
            chi = chi - dt * (chi @ Kt) + dW[:, k, None] * Lchi
            rho_sum[k + 1] = np.einsum("ni,nj->ij", chi, chi.conj())
            w_sum[k + 1] = np.einsum("ni,ni->", chi.conj(), chi).real
        w_final = np.einsum("ni,ni->n", chi.conj(), chi).real
    if not np.all(np.isfinite(w_final)):
        raise RuntimeError("diffusive ensemble produced a non-finite trajectory")
    return rho_sum, w_sum, w_final, innov, obs


def diffusive_ensemble(model: DiffusionModel, psi0: np.ndarray, grid: TimeGrid,
                       n_traj: int, seed: int, nonlinear: bool = False,
                       stream_offset: int = 0, chunk: int = DEFAULT_CHUNK,
                       workers: int = 1) -> EnsembleSummary:
    """Chunk-vectorized ensemble of diffusive trajectories.

    Linear mode averages chi chi+ under the input measure; nonlinear mode
    samples posteriors directly under the output measure (the drawn noise is
    the innovation) and averages the projectors.  Chunk boundaries are fixed
    by ``chunk`` alone, and the chunk fold is ordered, so results do not
    depend on the worker count.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    S = grid.n_steps
    dim = model.dim
    starts = list(range(0, n_traj, chunk))
    jobs = [np.arange(a + stream_offset, min(a + chunk, n_traj) + stream_offset)
            for a in starts]

    def run(streams):
        return _diffusive_chunk(model, psi0, grid, seed, streams, nonlinear)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    rho_acc = KahanAccumulator((S + 1, dim, dim), dtype=complex)
    w_acc = KahanAccumulator(S + 1)
    w_final = np.empty(n_traj)
    innov = np.empty(n_traj)
    obs = np.empty(n_traj)
    for (a, job), (rs, ws, wf, iv, ob) in zip(zip(starts, jobs), results):
        rho_acc.add(rs)
        w_acc.add(ws)
        sl = slice(a, a + job.size)
        w_final[sl] = wf
        innov[sl] = iv
        obs[sl] = ob
    raw = rho_acc.total / n_traj
    traces = np.trace(raw, axis1=1, axis2=2).real
    return EnsembleSummary(grid=grid, n_traj=n_traj,
                           mode="output-posterior" if nonlinear else "input-linear",
                           mean_rho=raw / traces[:, None, None], raw_mean_rho=raw,
                           mean_weight=w_acc.total / n_traj, weight_final=w_final,
                           innovation_final=innov, observation_final=obs)


def jump_ensemble(model: JumpModel, psi0: np.ndarray, grid: TimeGrid,
                  n_traj: int, seed: int, posterior: bool = False,
                  stream_offset: int = 0, workers: int = 1) -> EnsembleSummary:
    """Ensemble of counting trajectories (linear input-measure, or thinned
    posterior when ``posterior`` is true), reduced in trajectory order."""
    psi0 = np.asarray(psi0, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    S = grid.n_steps
    dim = model.dim

    def one(i: int):
        if posterior:
            rec = simulate_nonlinear_jump(model, psi0, grid, seed=seed,
                                          stream=stream_offset + i)
        else:
            rng = stream_generator(seed, stream_offset + i)
            jt = draw_jump_times(rng, model.nu, grid.T)
            states, weights, obs, innov, intens = _run_linear_jump(model, psi0, jt, grid)
            rec = TrajectoryRecord(grid=grid, states=states, weights=weights,
                                   observations=obs, innovations=innov,
                                   kind="linear-jump", meta={"measure": "input"},
                                   extras={"intensity": intens})
        if posterior:
            rho = rec.projector_path()
        else:
            rho = rec.raw_density_path()
        return (rho, rec.weights, rec.weights[-1], rec.innovations.sum(),
                rec.observations.sum(), rec.observations.sum(), rec.extras["intensity"])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n_traj)))
    else:
        results = [one(i) for i in range(n_traj)]

    rho_acc = KahanAccumulator((S + 1, dim, dim), dtype=complex)
    w_acc = KahanAccumulator(S + 1)
    intens_acc = KahanAccumulator(S + 1)
    w_final = np.empty(n_traj)
    innov = np.empty(n_traj)
    obs = np.empty(n_traj)
    njumps = np.empty(n_traj)
    for i, (rho, wpath, wf, iv, ob, nj, intens) in enumerate(results):
        rho_acc.add(rho)
        w_acc.add(wpath)
        intens_acc.add(intens)
        w_final[i] = wf
        innov[i] = iv
        obs[i] = ob
        njumps[i] = nj
    raw = rho_acc.total / n_traj
    traces = np.trace(raw, axis1=1, axis2=2).real
    return EnsembleSummary(grid=grid, n_traj=n_traj,
                           mode="output-posterior" if posterior else "input-linear",
                           mean_rho=raw / traces[:, None, None], raw_mean_rho=raw,
                           mean_weight=w_acc.total / n_traj, weight_final=w_final,
                           innovation_final=innov, observation_final=obs,
                           n_jumps=njumps, mean_intensity=intens_acc.total / n_traj)
