"""Exact event-driven dynamics: flow, waiting times, avalanches, return map.

Between firings every potential relaxes toward beta along

    flow_i(v, t) = (v_i - beta) * exp(-gamma t) + beta,

so the first neuron to reach theta is the one with the largest potential and
its firing time has the closed form t_i = ln((beta - v_i)/(beta - theta))/gamma.
The state of the network at that instant is evaluated in ratio form (see
state_at_threshold), which bypasses the exp/log round trip entirely; the
logarithm is only ever used to report the waiting time itself.

A firing instant triggers an instantaneous avalanche: spikes add their
positive jumps to not-yet-fired neurons, possibly driving them over theta in
synchronous rounds (fired neurons can neither refire nor receive at the same
instant).  The return map resets the fired set to 0 and applies the jumps of
both signs to everyone else, floored at alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import PreconditionFailed
from .params import NetworkParams

__all__ = [
    "flow", "spontaneous_time", "state_at_threshold", "avalanche",
    "return_map", "orbit", "sample_trajectory", "antiphase_state",
    "ReturnStep", "OrbitStep", "as_state",
]


def as_state(params: NetworkParams, v) -> np.ndarray:
    """Coerce and range-check a section-box state (alpha <= v_i <= theta)."""
    arr = np.array(v, dtype=np.float64, copy=True).reshape(-1)
    if arr.shape != (params.n,):
        raise PreconditionFailed(f"state must have length {params.n}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionFailed("state contains non-finite entries")
    if np.any(arr > params.theta):
        raise PreconditionFailed("state has a coordinate above threshold")
    if np.any(arr < params.alpha):
        raise PreconditionFailed("state has a coordinate below the floor alpha")
    return arr


def flow(params: NetworkParams, v, t: float) -> np.ndarray:
    """Sub-threshold time-t map, componentwise (v_i - beta) e^{-gamma t} + beta."""
    arr = np.asarray(v, dtype=np.float64)
    if t == 0.0:
        return arr.copy()  # exact identity, not the one-ulp add/subtract round trip
    return (arr - params.beta) * math.exp(-params.gamma * t) + params.beta


def spontaneous_time(params: NetworkParams, v) -> tuple[float, np.ndarray]:
    """Waiting time before the first spontaneous firing and the set that fires.

    Returns (t_bar, j0) with j0 the sorted indices whose potential ties the
    maximum within the tie tolerance (t_i is monotone in v_i, so time-ties and
    potential-ties coincide).
    """
    arr = as_state(params, v)
    vmax = float(arr.max())
    j0 = np.flatnonzero(arr >= vmax - params.tie_tol())
    t_bar = math.log((params.beta - vmax) / (params.beta - params.theta)) / params.gamma
    return max(t_bar, 0.0), j0


def state_at_threshold(params: NetworkParams, v, i: int) -> np.ndarray:
    """Network state at the instant neuron i reaches theta, in ratio form.

    Component i is assigned theta exactly; every other component k is
    beta - (beta - v_k)(beta - theta)/(beta - v_i).
    """
    arr = as_state(params, v)
    vmax = float(arr.max())
    if arr[i] < vmax - params.tie_tol():
        raise PreconditionFailed(f"neuron {i} does not attain the minimal firing time")
    out = params.beta - (params.beta - arr) * ((params.beta - params.theta) / (params.beta - arr[i]))
    out[i] = params.theta
    return out


def _step_raw(params: NetworkParams, arr: np.ndarray):
    n = params.n
    out = np.empty(n, np.float64)
    fired = np.zeros(n, np.bool_)
    j0 = np.zeros(n, np.bool_)
    scratch = np.zeros(n, np.bool_)
    t_bar, rounds = _kernels.step(
        arr, params.H, params.beta, params.theta, params.alpha, params.gamma,
        params.tie_tol(), out, fired, j0, scratch,
    )
    return out, fired, j0, t_bar, rounds


def avalanche(params: NetworkParams, v) -> tuple[np.ndarray, int]:
    """Full firing set J(v) and the number of recruitment rounds.

    Only positive interactions count toward the firing decision; rounds is 0
    when nobody beyond the spontaneous set fires.
    """
    arr = as_state(params, v)
    _, fired, _, _, rounds = _step_raw(params, arr)
    return np.flatnonzero(fired), int(rounds)


@dataclass
class ReturnStep:
    """One application of the return map."""

    state: np.ndarray       # post-firing state, back on the section
    fired: np.ndarray       # sorted indices of the full firing set J
    t_bar: float            # waiting time before the firing instant
    spontaneous: np.ndarray  # sorted indices of J0, the spontaneous firers
    rounds: int             # avalanche depth


def return_map(params: NetworkParams, v) -> ReturnStep:
    arr = as_state(params, v)
    out, fired, j0, t_bar, rounds = _step_raw(params, arr)
    return ReturnStep(
        state=out, fired=np.flatnonzero(fired), t_bar=t_bar,
        spontaneous=np.flatnonzero(j0), rounds=int(rounds),
    )


@dataclass
class OrbitStep:
    state: np.ndarray
    fired: np.ndarray
    t_bar: float
    cum_time: float


def orbit(params: NetworkParams, v0, n_steps: int) -> list[OrbitStep]:
    """n_steps successive return-map applications with running spike times."""
    arr = as_state(params, v0)
    states, fired, t_bars, _ = _kernels.run_orbit(
        arr, params.H, params.beta, params.theta, params.alpha, params.gamma,
        params.tie_tol(), int(n_steps),
    )
    cum = np.cumsum(t_bars)
    return [
        OrbitStep(state=states[k], fired=np.flatnonzero(fired[k]), t_bar=float(t_bars[k]), cum_time=float(cum[k]))
        for k in range(int(n_steps))
    ]


def sample_trajectory(params: NetworkParams, v0, dt: float, t_total: float):
    """Piecewise reconstruction of the continuous trajectory on a dt grid.

    Returns (times, values, post_spike).  Within each inter-spike interval the
    rows follow the flow from the last post-firing state; each firing instant
    contributes two rows, the left limit (post_spike=0, firing coordinates at
    theta) followed by the right limit (post_spike=1, the reset state), so the
    discontinuity is explicit in the output.
    """
    if dt <= 0:
        raise PreconditionFailed("dt must be positive")
    cur = as_state(params, v0)
    times, rows, post = [0.0], [cur.copy()], [0]
    t_event = 0.0
    next_grid = dt
    while t_event < t_total:
        step = return_map(params, cur)
        t_fire = t_event + step.t_bar
        while next_grid < t_fire - 1e-15 and next_grid <= t_total + 1e-15:
            times.append(next_grid)
            rows.append(flow(params, cur, next_grid - t_event))
            post.append(0)
            next_grid += dt
        if t_fire > t_total:
            break
        # left limit: spontaneous firers sit exactly at theta, recruited
        # neurons are still at their flowed value just before the jumps
        left = state_at_threshold(params, cur, int(step.spontaneous[0]))
        for i in step.spontaneous:
            left[i] = params.theta
        times.append(t_fire)
        rows.append(left)
        post.append(0)
        times.append(t_fire)
        rows.append(step.state.copy())
        post.append(1)
        while next_grid <= t_fire + 1e-15:
            next_grid += dt  # grid points consumed by the event rows
        cur = step.state
        t_event = t_fire
    return np.array(times), np.array(rows), np.array(post, dtype=np.int8)


def antiphase_state(params: NetworkParams) -> tuple[np.ndarray, float]:
    """Closed-form anti-phase period-2 state of uniform excitatory networks.

    For n = 2k neurons all coupled with the same weight w > 0, the state with
    half the potentials at beta - x and half at 0, where

        x = (sqrt(Hagg^2 + 4 beta (beta - theta)) - Hagg)/2,   Hagg = k*w,

    is periodic of period two provided Hagg < theta.  Returns (state, x).
    """
    n = params.n
    if n % 2 != 0:
        raise PreconditionFailed("anti-phase state needs an even number of neurons")
    off = params.H[~np.eye(n, dtype=bool)]
    w = float(off[0]) if off.size else 0.0
    if w <= 0 or not np.all(off == w):
        raise PreconditionFailed("anti-phase state needs uniform positive coupling")
    h_agg = w * (n // 2)
    if h_agg >= params.theta:
        raise PreconditionFailed("aggregate coupling must stay below theta")
    beta, theta = params.beta, params.theta
    x = 0.5 * (math.sqrt(h_agg * h_agg + 4.0 * beta * (beta - theta)) - h_agg)
    v = np.zeros(n)
    v[: n // 2] = beta - x
    return v, x
