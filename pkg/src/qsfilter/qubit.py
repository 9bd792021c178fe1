"""Open-qubit scenario: counting filter, linear (pi, p) systems, diffusive
limit, Bloch master flow, colinear closed form and localization statistics.

Conventions: the qubit couples through L = sigma(l) (Hermitian) and
precesses at k = 2 h / hbar.  The unnormalized state is
rho = (sigma(p) + pi I)/2 with likelihood pi and polarization p; the
posterior polarization is r = p / pi.  The colinear closed form and the
exponential scheme assume the measurement axis along e_z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .noise import NoisePath, TimeGrid, draw_jump_times, stream_generator
from .trajectories import _FlowPropagator, KahanAccumulator

COLINEAR_TOL = 1e-10
INTENSITY_FLOOR = 1e-12
LOCALIZATION_CUT = 0.99
SIGN_EXCLUSION = 1e-12


def _vec3(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be a finite real 3-vector")
    return v


@dataclass(frozen=True)
class QubitScenario:
    """Counting-observation qubit: coupling l, precession k, intensity nu."""

    l: np.ndarray
    k: np.ndarray
    nu: float
    r0: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "l", _vec3(self.l, "l"))
        object.__setattr__(self, "k", _vec3(self.k, "k"))
        object.__setattr__(self, "r0", _vec3(self.r0, "r0"))
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if np.linalg.norm(self.r0) > 1.0 + 1e-10:
            raise ValueError("|r0| must not exceed 1")

    @classmethod
    def from_h(cls, l, h, nu, r0, hbar: float = 1.0) -> "QubitScenario":
        """Build with a Hamiltonian direction h; k = 2 h / hbar."""
        h = _vec3(h, "h")
        return cls(l=l, k=2.0 * h / hbar, nu=nu, r0=r0, hbar=hbar)

    def intensity(self, r: np.ndarray) -> float:
        """Conditional counting intensity nu + 2 sqrt(nu) l.r + l.l."""
        return self.nu + 2.0 * math.sqrt(self.nu) * float(self.l @ r) + float(self.l @ self.l)


@dataclass
class PiPPath:
    """Unnormalized (pi, p) trajectory on a grid."""

    grid: TimeGrid
    pi: np.ndarray          # (S+1,)
    p: np.ndarray           # (S+1, 3)
    intensity: np.ndarray | None = None

    def r(self) -> np.ndarray:
        return self.p / self.pi[:, None]


# -- linear (pi, p) counting system ---------------------------------------------

def _pi_p_generator(l: np.ndarray, k: np.ndarray, nu: float) -> np.ndarray:
    """Between-jump generator of u = (pi, p) for the counting system,
    obtained by substituting dy = -sqrt(nu) dt into the linear equations."""
    sq = math.sqrt(nu)
    ll = float(l @ l)
    M = np.zeros((4, 4))
    M[0, 0] = -ll
    M[0, 1:] = -2.0 * sq * l
    M[1:, 0] = -2.0 * sq * l
    M[1:, 1:] = _cross_matrix(k) - ll * np.eye(3)
    return M


def _pi_p_jump(l: np.ndarray, nu: float) -> np.ndarray:
    """Jump map of u = (pi, p) for dy = nu^{-1/2} at an event."""
    sq = math.sqrt(nu)
    ll = float(l @ l)
    J = np.eye(4)
    J[0, 0] += ll / nu
    J[0, 1:] = 2.0 * l / sq
    J[1:, 0] = 2.0 * l / sq
    J[1:, 1:] += (2.0 * np.outer(l, l) - ll * np.eye(3)) / nu
    return J


def _cross_matrix(k: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -k[2], k[1]],
                     [k[2], 0.0, -k[0]],
                     [-k[1], k[0], 0.0]])


def _as_jump_times(noise, grid: TimeGrid) -> np.ndarray:
    if isinstance(noise, NoisePath):
        if noise.kind != "poisson" or noise.jump_times is None:
            raise ValueError("counting system needs a poisson NoisePath")
        if noise.grid != grid:
            raise ValueError("noise grid does not match the simulation grid")
        return noise.jump_times
    jt = np.asarray(noise, dtype=float)
    if jt.ndim != 1 or (jt.size and (jt.min() < 0 or jt.max() > grid.T)):
        raise ValueError("jump times must lie in [0, T]")
    return jt


def linear_pi_p_counting(scenario: QubitScenario, noise, grid: TimeGrid) -> PiPPath:
    """Exact-flow solution of the linear counting system along a given
    Poisson record (y_t = nu^{-1/2} n_t - nu^{1/2} t): matrix-exponential
    drift between events and the linear jump map at events."""
    jt = _as_jump_times(noise, grid)
    prop = _FlowPropagator(_pi_p_generator(scenario.l, scenario.k, scenario.nu))
    J = _pi_p_jump(scenario.l, scenario.nu)
    times = grid.times()
    S = grid.n_steps
    pi = np.empty(S + 1)
    p = np.empty((S + 1, 3))
    intens = np.empty(S + 1)
    u = np.concatenate([[1.0], scenario.r0])
    pi[0], p[0] = u[0], u[1:]
    intens[0] = scenario.intensity(scenario.r0)
    t = 0.0
    j = 0
    for kdx in range(1, S + 1):
        tk = times[kdx]
        while j < jt.size and jt[j] <= tk:
            u = prop.apply(u, jt[j] - t).real
            u = J @ u
            t = jt[j]
            j += 1
        u = prop.apply(u, tk - t).real
        t = tk
        if u[0] <= 0.0 or not np.all(np.isfinite(u)):
            raise RuntimeError(f"likelihood pi degenerated at t = {tk}")
        pi[kdx], p[kdx] = u[0], u[1:]
        intens[kdx] = scenario.intensity(u[1:] / u[0])
    return PiPPath(grid=grid, pi=pi, p=p, intensity=intens)


# -- nonlinear counting filter ----------------------------------------------------

def _filter_drift(r: np.ndarray, l: np.ndarray, k: np.ndarray, sq: float) -> np.ndarray:
    return -2.0 * sq * l - np.cross(r, k) + 2.0 * sq * float(l @ r) * r


def _filter_jump(r: np.ndarray, scenario: QubitScenario) -> np.ndarray:
    l, sq = scenario.l, math.sqrt(scenario.nu)
    den = scenario.intensity(r)
    if den < INTENSITY_FLOOR:
        raise RuntimeError("conditional intensity degenerated at a jump")
    lr = float(l @ r)
    num = sq * (l - lr * r) + lr * l - float(l @ l) * r
    return r + 2.0 * num / den


def _rk4_segment(r: np.ndarray, seg: float, n_sub: int, l, k, sq) -> np.ndarray:
    h = seg / n_sub
    for _ in range(n_sub):
        k1 = _filter_drift(r, l, k, sq)
        k2 = _filter_drift(r + 0.5 * h * k1, l, k, sq)
        k3 = _filter_drift(r + 0.5 * h * k2, l, k, sq)
        k4 = _filter_drift(r + h * k3, l, k, sq)
        r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return r


def bloch_counting_filter(scenario: QubitScenario, noise, grid: TimeGrid,
                          max_substep: float | None = None):
    """Posterior polarization along a counting record: RK4 on the nonlinear
    drift between events, exact rational jump map at events.  Returns
    (r_path (S+1, 3), intensity_path (S+1,))."""
    jt = _as_jump_times(noise, grid)
    l, k, nu = scenario.l, scenario.k, scenario.nu
    sq = math.sqrt(nu)
    rate = 2.0 * sq * np.linalg.norm(l) + np.linalg.norm(k) + 2.0 * float(l @ l) + 1.0
    if max_substep is None:
        max_substep = min(grid.dt, 0.1 / rate)
    times = grid.times()
    S = grid.n_steps
    r_path = np.empty((S + 1, 3))
    intens = np.empty(S + 1)
    r = scenario.r0.copy()
    r_path[0] = r
    intens[0] = scenario.intensity(r)
    t = 0.0
    j = 0

    def advance(r, seg):
        if seg <= 0.0:
            return r
        return _rk4_segment(r, seg, max(1, math.ceil(seg / max_substep)), l, k, sq)

    for kdx in range(1, S + 1):
        tk = times[kdx]
        while j < jt.size and jt[j] <= tk:
            r = advance(r, jt[j] - t)
            r = _filter_jump(r, scenario)
            t = jt[j]
            j += 1
        r = advance(r, tk - t)
        t = tk
        nr = np.linalg.norm(r)
        if nr > 1.0 + 1e-8:
            raise RuntimeError(f"posterior polarization left the unit ball (|r| = {nr})")
        r_path[kdx] = r
        intens[kdx] = scenario.intensity(r)
    return r_path, intens


def sample_counting_record(scenario: QubitScenario, grid: TimeGrid, seed: int,
                           stream: int = 0) -> np.ndarray:
    """Output-law counting record via thinning at the Bloch level with bound
    (sqrt(nu) + |l|)^2 >= nu + 2 sqrt(nu) l.r + l.l."""
    l, k, nu = scenario.l, scenario.k, scenario.nu
    sq = math.sqrt(nu)
    lam_bar = (sq + np.linalg.norm(l)) ** 2
    rate = 2.0 * sq * np.linalg.norm(l) + np.linalg.norm(k) + 2.0 * float(l @ l) + 1.0
    max_substep = min(grid.dt, 0.1 / rate)
    rng = stream_generator(seed, stream)
    r = scenario.r0.copy()
    t = 0.0
    out = []
    while True:
        t_next = t + rng.exponential(1.0 / lam_bar)
        if t_next > grid.T:
            break
        seg = t_next - t
        r = _rk4_segment(r, seg, max(1, math.ceil(seg / max_substep)), l, k, sq)
        t = t_next
        if rng.random() * lam_bar <= scenario.intensity(r):
            r = _filter_jump(r, scenario)
            out.append(t)
    return np.array(out)


def counting_ensemble(scenario: QubitScenario, grid: TimeGrid, n_traj: int,
                      seed: int, stream_offset: int = 0):
    """Input-measure ensemble of the linear counting system.

    Returns (mean_pi path, mean_p path, pi_final (n,), weighted r mean path),
    the weighted mean being sum(p) / sum(pi), the posterior-mean estimate.
    """
    S = grid.n_steps
    pi_acc = KahanAccumulator(S + 1)
    p_acc = KahanAccumulator((S + 1, 3))
    pi_final = np.empty(n_traj)
    for i in range(n_traj):
        rng = stream_generator(seed, stream_offset + i)
        jt = draw_jump_times(rng, scenario.nu, grid.T)
        path = linear_pi_p_counting(scenario, jt, grid)
        pi_acc.add(path.pi)
        p_acc.add(path.p)
        pi_final[i] = path.pi[-1]
    mean_pi = pi_acc.total / n_traj
    mean_p = p_acc.total / n_traj
    weighted_r = p_acc.total / pi_acc.total[:, None]
    return mean_pi, mean_p, pi_final, weighted_r


# -- diffusive (pi, p) system -----------------------------------------------------

def _require_z_axis(l: np.ndarray, k: np.ndarray) -> tuple[float, float]:
    """Colinearity gate: l and k along e_z within COLINEAR_TOL radians."""
    l_norm = float(np.linalg.norm(l))
    k_signed = float(k[2])
    ez = np.array([0.0, 0.0, 1.0])
    if l_norm > 0.0:
        sine = np.linalg.norm(np.cross(l / l_norm, ez))
        if sine > COLINEAR_TOL:
            raise ValueError("closed-form/exponential path requires l along e_z")
    kn = float(np.linalg.norm(k))
    if kn > 0.0:
        sine = np.linalg.norm(np.cross(k / kn, ez))
        if sine > COLINEAR_TOL:
            raise ValueError("closed-form/exponential path requires k parallel to l (e_z)")
    return l_norm, k_signed


def diffusive_pi_p(l, k, r0, noise: NoisePath, scheme: str = "euler") -> PiPPath:
    """Wiener-driven (pi, p) system d pi = 2 l.p dw,
    dp + (p x k + 2(l.l) p - 2(l.p) l) dt = 2 l pi dw.

    scheme="euler" steps any (l, k); scheme="exponential" requires the
    colinear z-axis case and multiplies the decoupled pi_+/- components by
    the exact factors exp(+-2|l| dw - 2|l|^2 dt), with the deterministic
    spiral for the transverse part.
    """
    l = _vec3(l, "l")
    k = _vec3(k, "k")
    r0 = _vec3(r0, "r0")
    if noise.kind != "wiener":
        raise ValueError("diffusive system needs a wiener NoisePath")
    grid = noise.grid
    dW = noise.increments
    S = grid.n_steps
    dt = grid.dt
    pi = np.empty(S + 1)
    p = np.empty((S + 1, 3))
    pi[0], p[0] = 1.0, r0

    if scheme == "euler":
        ll = float(l @ l)
        cur_pi, cur_p = 1.0, r0.copy()
        for kdx in range(S):
            lp = float(l @ cur_p)
            dpi = 2.0 * lp * dW[kdx]
            dp = (-(np.cross(cur_p, k)) - 2.0 * ll * cur_p + 2.0 * lp * l) * dt \
                + 2.0 * l * cur_pi * dW[kdx]
            cur_pi = cur_pi + dpi
            cur_p = cur_p + dp
            if cur_pi <= 0.0 or not np.isfinite(cur_pi):
                raise RuntimeError(f"likelihood pi degenerated at step {kdx + 1}: scheme too coarse")
            pi[kdx + 1], p[kdx + 1] = cur_pi, cur_p
    elif scheme == "exponential":
        l_norm, k_rate = _require_z_axis(l, k)
        x, y, z = r0
        pi_pm = np.array([0.5 * (1.0 + z), 0.5 * (1.0 - z)])
        times = grid.times()
        decay = np.exp(-2.0 * l_norm ** 2 * times)
        cos_kt, sin_kt = np.cos(k_rate * times), np.sin(k_rate * times)
        p[:, 0] = (x * cos_kt - y * sin_kt) * decay
        p[:, 1] = (y * cos_kt + x * sin_kt) * decay
        damp = math.exp(-2.0 * l_norm ** 2 * dt)
        for kdx in range(S):
            up = math.exp(2.0 * l_norm * dW[kdx]) * damp
            down = math.exp(-2.0 * l_norm * dW[kdx]) * damp
            pi_pm = pi_pm * np.array([up, down])
            pi[kdx + 1] = pi_pm.sum()
            p[kdx + 1, 2] = pi_pm[0] - pi_pm[1]
        pi[0] = 1.0
        p[0, 2] = z
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return PiPPath(grid=grid, pi=pi, p=p)


def diffusive_pi_p_ensemble(l, k, r0, grid: TimeGrid, n_traj: int, seed: int,
                            stream_offset: int = 0, chunk: int = 1024):
    """Vectorized Euler ensemble of the diffusive (pi, p) system.

    Returns (mean_pi path, mean_p path, pi_final, weighted r mean path).
    """
    l = _vec3(l, "l")
    k = _vec3(k, "k")
    r0 = _vec3(r0, "r0")
    S, dt = grid.n_steps, grid.dt
    ll = float(l @ l)
    pi_acc = KahanAccumulator(S + 1)
    p_acc = KahanAccumulator((S + 1, 3))
    pi_final = np.empty(n_traj)
    sq = math.sqrt(dt)
    for a in range(0, n_traj, chunk):
        ids = range(a + stream_offset, min(a + chunk, n_traj) + stream_offset)
        n = len(ids)
        dW = np.empty((n, S))
        for row, s in enumerate(ids):
            dW[row] = stream_generator(seed, int(s)).standard_normal(S) * sq
        pi = np.ones(n)
        p = np.tile(r0, (n, 1))
        pi_path = np.empty((S + 1, n))
        p_path = np.empty((S + 1, n, 3))
        pi_path[0] = pi
        p_path[0] = p
        for kdx in range(S):
            lp = p @ l
            dpi = 2.0 * lp * dW[:, kdx]
            drift = -(np.cross(p, k)) - 2.0 * ll * p + 2.0 * lp[:, None] * l
            p = p + drift * dt + 2.0 * np.outer(pi * dW[:, kdx], l)
            pi = pi + dpi
            pi_path[kdx + 1] = pi
            p_path[kdx + 1] = p
        if np.any(pi_path <= 0.0):
            raise RuntimeError("likelihood pi degenerated: scheme too coarse")
        pi_acc.add(pi_path.sum(axis=1))
        p_acc.add(p_path.sum(axis=1))
        pi_final[a:a + n] = pi
    return (pi_acc.total / n_traj, p_acc.total / n_traj, pi_final,
            p_acc.total / pi_acc.total[:, None])


# -- colinear closed form -----------------------------------------------------------

@dataclass
class ColinearSolution:
    """Closed-form colinear solution evaluated at (w, t) (broadcastable)."""

    pi_plus: np.ndarray
    pi_minus: np.ndarray
    pi: np.ndarray
    p_x: np.ndarray
    p_y: np.ndarray
    p_z: np.ndarray
    r_perp_x: np.ndarray
    r_perp_y: np.ndarray
    z_omega: np.ndarray


def closed_form_colinear(l_norm: float, k_rate: float, r0, w, t) -> ColinearSolution:
    """Evaluate pi_+- = (1 +- z)/2 exp(+-2|l| w - 2|l|^2 t) and the derived
    likelihood, polarization and posterior components at Wiener value(s) w
    and time(s) t.  Measurement axis along e_z; k colinear by assumption."""
    r0 = _vec3(r0, "r0")
    x, y, z = r0
    w = np.asarray(w, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    a = 2.0 * l_norm * w
    decay = np.exp(-2.0 * l_norm ** 2 * t)
    pi_plus = 0.5 * (1.0 + z) * np.exp(a) * decay
    pi_minus = 0.5 * (1.0 - z) * np.exp(-a) * decay
    pi = pi_plus + pi_minus
    p_z = pi_plus - pi_minus
    rx0 = x * np.cos(k_rate * t) - y * np.sin(k_rate * t)
    ry0 = y * np.cos(k_rate * t) + x * np.sin(k_rate * t)
    p_x = rx0 * decay
    p_y = ry0 * decay
    denom = np.cosh(a) + z * np.sinh(a)
    th = np.tanh(a)
    z_omega = (th + z) / (1.0 + z * th)
    return ColinearSolution(pi_plus=pi_plus, pi_minus=pi_minus, pi=pi,
                            p_x=p_x, p_y=p_y, p_z=p_z,
                            r_perp_x=rx0 / denom, r_perp_y=ry0 / denom,
                            z_omega=z_omega)


def closed_form_from_vectors(l, k, r0, w, t) -> ColinearSolution:
    """Vector-argument entry point; rejects non-colinear (l, k) or an
    off-axis measurement direction."""
    l = _vec3(l, "l")
    k = _vec3(k, "k")
    l_norm, k_rate = _require_z_axis(l, k)
    return closed_form_colinear(l_norm, k_rate, r0, w, t)


# -- Bloch master flow ---------------------------------------------------------------

def bloch_master_solve(k, l, r0, grid: TimeGrid) -> np.ndarray:
    """RK4 path of dr/dt + r x k + 2 (l.l) r = 2 (l.r) l."""
    k = _vec3(k, "k")
    l = _vec3(l, "l")
    r0 = _vec3(r0, "r0")
    if np.linalg.norm(r0) > 1.0 + 1e-10:
        raise ValueError("|r0| must not exceed 1")
    ll = float(l @ l)

    def f(r):
        return -np.cross(r, k) - 2.0 * ll * r + 2.0 * float(l @ r) * l

    dt = grid.dt
    out = np.empty((grid.n_steps + 1, 3))
    out[0] = r0
    r = r0.copy()
    for kdx in range(grid.n_steps):
        k1 = f(r)
        k2 = f(r + 0.5 * dt * k1)
        k3 = f(r + 0.5 * dt * k2)
        k4 = f(r + dt * k3)
        r = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[kdx + 1] = r
    return out


# -- localization ---------------------------------------------------------------------

@dataclass
class LocalizationStats:
    mean_z: float
    mean_z_sq: float
    frac_localized: float
    posterior_mean_z: float
    n_samples: int
    n_excluded: int


def localization_statistic(l_norm: float, t: float, z: float, n: int,
                           seed: int, stream: int = 0) -> LocalizationStats:
    """Sample w_t ~ Normal(0, t) and evaluate the closed-form posterior
    z-component.  mean_z/mean_z_sq are plain input-measure sample moments
    (the quadrature oracle's target); posterior_mean_z is the
    likelihood-weighted mean, whose expectation is exactly z.  Samples with
    |w_t| < 1e-12 are excluded from the localized-fraction count only.
    """
    rng = stream_generator(seed, stream)
    w = rng.standard_normal(n) * math.sqrt(t)
    sol = closed_form_colinear(l_norm, 0.0, np.array([0.0, 0.0, z]), w, t)
    zs = sol.z_omega
    keep = np.abs(w) >= SIGN_EXCLUSION
    frac = float(np.mean(np.abs(zs[keep]) > LOCALIZATION_CUT)) if keep.any() else 0.0
    pi_total = float(np.sum(sol.pi))
    post = float(np.sum(sol.p_z) / pi_total) if pi_total > 0 else math.nan
    return LocalizationStats(mean_z=float(np.mean(zs)), mean_z_sq=float(np.mean(zs ** 2)),
                             frac_localized=frac, posterior_mean_z=post,
                             n_samples=n, n_excluded=int(n - keep.sum()))


def localization_second_moment_quadrature(l_norm: float, t: float, z: float) -> float:
    """Gaussian-weighted quadrature of z_omega(w)^2 (input-measure second
    moment), the independent oracle for the sampled statistic."""
    sd = math.sqrt(t)

    def f(w):
        th = math.tanh(2.0 * l_norm * w)
        zo = (th + z) / (1.0 + z * th)
        return zo * zo * math.exp(-w * w / (2.0 * t)) / (sd * math.sqrt(2.0 * math.pi))

    lo, hi = -10.0 * sd, 10.0 * sd
    width = 1.0 / max(2.0 * l_norm, 1.0 / sd)
    pts = [p for p in (-5.0 * width, 0.0, 5.0 * width) if lo < p < hi]
    val, _ = scipy.integrate.quad(f, lo, hi, points=pts, limit=400)
    return val
