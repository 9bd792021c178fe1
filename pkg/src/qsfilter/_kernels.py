"""Event-driven jump-trajectory kernels.

Inter-jump flows of the linear/nonlinear counting equations are exact
exponentials of a constant generator, applied through a precomputed
eigendecomposition A = V diag(lam) Vinv.  The kernels walk exact event
times, record states at grid points, and accumulate the counting
observation and the compensated innovation per grid step.  Compiled with
numba for the high-intensity ensembles; a pure-python twin (used when the
generator is defective and as a cross-check) lives in trajectories.py.
"""

from __future__ import annotations

import numpy as np

try:
    import numba as nb

    HAVE_NUMBA = True
    _jit = nb.njit(cache=True, nogil=True)
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def _jit(f):
        return f

STATUS_OK = 0
STATUS_RAND_EXHAUSTED = 1
STATUS_JUMP_CAPACITY = 2
STATUS_DEGENERATE = 3
STATUS_NONFINITE = 4

DEGENERATE_NORM = 1e-14


@_jit
def _apply_prop(V, lam, Vinv, x, dt):
    y = Vinv @ x
    y = y * np.exp(lam * dt)
    return V @ y


@_jit
def _norm(x):
    s = 0.0
    for i in range(x.size):
        s += x[i].real * x[i].real + x[i].imag * x[i].imag
    return np.sqrt(s)


@_jit
def linear_jump_kernel(V, lam, Vinv, C, chi0, jump_times, times, nu,
                       states, weights, obs, innov, intens):
    """Unnormalized counting trajectory along given input-Poisson jump times.

    states[k] is chi at times[k]; obs[k-1] counts jumps in step k; innov[k-1]
    accumulates nu^{-1/2}/|C psi^-| at jumps minus the trapezoid of
    nu^{1/2}|C psi| dt, with psi the normalized state.
    """
    S = times.size - 1
    chi = chi0.astype(np.complex128)
    t = times[0]
    sqrt_nu = np.sqrt(nu)
    j = 0
    n = _norm(chi)
    if n <= 0.0:
        return STATUS_DEGENERATE
    g = sqrt_nu * _norm(C @ chi) / n
    states[0] = chi
    weights[0] = n * n
    intens[0] = g * g
    for k in range(1, S + 1):
        tk = times[k]
        while j < jump_times.size and jump_times[j] <= tk:
            seg = jump_times[j] - t
            chi = _apply_prop(V, lam, Vinv, chi, seg)
            n = _norm(chi)
            if not np.isfinite(n) or n <= 0.0:
                return STATUS_NONFINITE
            cn = _norm(C @ chi) / n
            innov[k - 1] -= 0.5 * (g + sqrt_nu * cn) * seg
            if cn < DEGENERATE_NORM:
                return STATUS_DEGENERATE
            innov[k - 1] += 1.0 / (sqrt_nu * cn)
            obs[k - 1] += 1.0
            chi = C @ chi
            n = _norm(chi)
            if not np.isfinite(n) or n <= 0.0:
                return STATUS_NONFINITE
            g = sqrt_nu * _norm(C @ chi) / n
            t = jump_times[j]
            j += 1
        seg = tk - t
        chi = _apply_prop(V, lam, Vinv, chi, seg)
        n = _norm(chi)
        if not np.isfinite(n) or n <= 0.0:
            return STATUS_NONFINITE
        g_new = sqrt_nu * _norm(C @ chi) / n
        innov[k - 1] -= 0.5 * (g + g_new) * seg
        g = g_new
        t = tk
        states[k] = chi
        weights[k] = n * n
        intens[k] = g * g
    return STATUS_OK


@_jit
def thinned_jump_kernel(V, lam, Vinv, C, nu, lam_bar, psi0, exps, unis, times,
                        states, weights, obs, innov, intens, jump_times_out):
    """Posterior counting trajectory sampled by thinning at bound lam_bar.

    The normalized posterior follows the normalized exponential flow between
    jumps and psi -> C psi/|C psi| at jumps accepted with probability
    nu |C psi|^2 / lam_bar.  A companion unnormalized solution provides the
    likelihood weights along the sampled record.  Returns
    (status, randoms_used, n_jumps).
    """
    S = times.size - 1
    psi = psi0.astype(np.complex128)
    n0 = _norm(psi)
    if n0 <= 0.0:
        return STATUS_DEGENERATE, 0, 0
    psi = psi / n0
    chi = psi.copy()
    t = times[0]
    sqrt_nu = np.sqrt(nu)
    j = 0
    njumps = 0
    kg = 1
    cn = _norm(C @ psi)
    g = sqrt_nu * cn
    states[0] = psi
    weights[0] = 1.0
    intens[0] = nu * cn * cn
    while kg <= S:
        if j >= exps.size:
            return STATUS_RAND_EXHAUSTED, j, njumps
        tau = exps[j] / lam_bar
        u = unis[j]
        j += 1
        t_next = t + tau
        while kg <= S and times[kg] <= t_next:
            seg = times[kg] - t
            psi = _apply_prop(V, lam, Vinv, psi, seg)
            n = _norm(psi)
            if not np.isfinite(n) or n <= 0.0:
                return STATUS_NONFINITE, j, njumps
            psi = psi / n
            chi = _apply_prop(V, lam, Vinv, chi, seg)
            cn = _norm(C @ psi)
            g_new = sqrt_nu * cn
            innov[kg - 1] -= 0.5 * (g + g_new) * seg
            g = g_new
            t = times[kg]
            states[kg] = psi
            w = _norm(chi)
            weights[kg] = w * w
            intens[kg] = nu * cn * cn
            kg += 1
        if kg > S:
            break
        seg = t_next - t
        psi = _apply_prop(V, lam, Vinv, psi, seg)
        n = _norm(psi)
        if not np.isfinite(n) or n <= 0.0:
            return STATUS_NONFINITE, j, njumps
        psi = psi / n
        chi = _apply_prop(V, lam, Vinv, chi, seg)
        cn = _norm(C @ psi)
        g_new = sqrt_nu * cn
        innov[kg - 1] -= 0.5 * (g + g_new) * seg
        g = g_new
        t = t_next
        if u * lam_bar <= nu * cn * cn:
            if cn < DEGENERATE_NORM:
                return STATUS_DEGENERATE, j, njumps
            if njumps >= jump_times_out.size:
                return STATUS_JUMP_CAPACITY, j, njumps
            innov[kg - 1] += 1.0 / (sqrt_nu * cn)
            obs[kg - 1] += 1.0
            psi = (C @ psi) / cn
            chi = C @ chi
            jump_times_out[njumps] = t
            njumps += 1
            cn = _norm(C @ psi)
            g = sqrt_nu * cn
    return STATUS_OK, j, njumps
