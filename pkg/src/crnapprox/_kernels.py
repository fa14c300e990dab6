"""Inner loops for mass-action rates, SSA and Euler-Maruyama.

The functions only touch numpy arrays and scalars so they compile under
``numba.njit`` when numba is installed (see ``requirements-perf.txt``). Without
numba they run as plain Python with identical arithmetic and draw order.
"""

from __future__ import annotations

import logging
import math

import numpy as np

LOGGER = logging.getLogger(__name__)

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - depends on the environment
    _njit = None

JIT_ENABLED = _njit is not None

# ssa_advance status codes
PAUSED = 0
HORIZON_REACHED = 1
ABSORBED = 2

# em_advance status codes
EM_OK = 0
EM_NONFINITE = 1


def _jit(func):
    if _njit is None:
        return func
    return _njit(cache=True, nogil=True)(func)


@_jit
def density_propensities(x, factors, reactant_matrix, out):
    """Fill ``out[k]`` with ``factors[k] * prod_i x_i ** c_ki``."""
    n_reactions, n_species = reactant_matrix.shape
    for k in range(n_reactions):
        value = factors[k]
        for i in range(n_species):
            for _ in range(reactant_matrix[k, i]):
                value *= x[i]
        out[k] = value
    return out


@_jit
def count_propensities(counts, factors, reactant_matrix, use_binomial, out):
    """Fill ``out[k]`` with the exact CTMC rate of reaction k at integer ``counts``.

    ``factors[k]`` already carries ``lambda_k * V ** (1 - <c_k>)``; the
    remaining term is ``prod_i s_i ** c_ki`` (absorbed convention) or
    ``prod_i binom(s_i, c_ki)`` (factorial convention).
    """
    n_reactions, n_species = reactant_matrix.shape
    for k in range(n_reactions):
        value = factors[k]
        for i in range(n_species):
            c = reactant_matrix[k, i]
            if c == 0:
                continue
            s = counts[i]
            if use_binomial:
                if s < c:
                    value = 0.0
                    break
                term = 1.0
                for r in range(c):
                    term = term * (s - r) / (r + 1)
                value *= term
            else:
                for _ in range(c):
                    value *= s
        out[k] = value
    return out


@_jit
def ssa_advance(
    counts,
    t,
    horizon,
    uniforms,
    factors,
    reactant_matrix,
    jumps,
    use_binomial,
    max_events,
    record,
    times_out,
    states_out,
    rates,
):
    """Run Gillespie direct-method events until a stop condition.

    Consumes ``uniforms`` in pairs (waiting time first, then channel). Stops
    when the horizon is passed, the total rate vanishes, ``max_events`` events
    were fired or fewer than two uniforms remain.

    Returns ``(t, uniforms_used, events_fired, status)``.
    """
    n_reactions, n_species = jumps.shape
    used = 0
    events = 0
    n_uniforms = uniforms.shape[0]
    while True:
        if events >= max_events or used + 2 > n_uniforms:
            return t, used, events, PAUSED
        count_propensities(counts, factors, reactant_matrix, use_binomial, rates)
        total = 0.0
        for k in range(n_reactions):
            total += rates[k]
        if total <= 0.0:
            return t, used, events, ABSORBED
        wait = -math.log1p(-uniforms[used]) / total
        target = uniforms[used + 1] * total
        used += 2
        if t + wait > horizon:
            return t, used, events, HORIZON_REACHED
        t += wait

        chosen = -1
        acc = 0.0
        for k in range(n_reactions):
            acc += rates[k]
            if rates[k] > 0.0 and target < acc:
                chosen = k
                break
        if chosen < 0:
            # rounding left target == total: take the last live channel
            for k in range(n_reactions - 1, -1, -1):
                if rates[k] > 0.0:
                    chosen = k
                    break

        for i in range(n_species):
            counts[i] += jumps[chosen, i]
        if record:
            times_out[events] = t
            for i in range(n_species):
                states_out[events, i] = counts[i]
        events += 1


@_jit
def em_advance(
    x,
    dts,
    normals,
    factors,
    reactant_matrix,
    jumps,
    inv_sqrt_volume,
    absorb,
    threshold,
    record,
    states_out,
    rates,
):
    """Euler-Maruyama steps over ``dts`` with pre-drawn ``normals[j, k]``.

    Rates are evaluated at ``max(x, 0)`` componentwise and clamped at zero
    before they enter drift and diffusion; the state itself is not projected. With
    ``absorb`` set, negative components snap to 0 after each step and the
    state freezes at the origin once every component is below ``threshold``.

    Returns ``(steps_done, status)``.
    """
    n_reactions, n_species = jumps.shape
    n_steps = dts.shape[0]
    clipped = np.empty(n_species)
    frozen = False
    for j in range(n_steps):
        if not frozen:
            for i in range(n_species):
                clipped[i] = x[i] if x[i] > 0.0 else 0.0
            density_propensities(clipped, factors, reactant_matrix, rates)
            dt = dts[j]
            sqrt_dt = math.sqrt(dt)
            for k in range(n_reactions):
                if rates[k] < 0.0:
                    rates[k] = 0.0
            for i in range(n_species):
                increment = 0.0
                for k in range(n_reactions):
                    change = jumps[k, i]
                    if change != 0.0:
                        increment += change * (
                            dt * rates[k]
                            + inv_sqrt_volume * math.sqrt(rates[k]) * sqrt_dt * normals[j, k]
                        )
                x[i] += increment
            for i in range(n_species):
                if not math.isfinite(x[i]):
                    return j + 1, EM_NONFINITE
            if absorb:
                below = True
                for i in range(n_species):
                    if x[i] < 0.0:
                        x[i] = 0.0
                    if x[i] >= threshold:
                        below = False
                if below:
                    for i in range(n_species):
                        x[i] = 0.0
                    frozen = True
        if record:
            for i in range(n_species):
                states_out[j, i] = x[i]
    return n_steps, EM_OK
