"""Contraction and expansion diagnostics for the return map.

The zone C_c = {v on the section : alpha <= v_i <= c} carries a sup-norm
Lipschitz bound for pairs sharing a firing set:

    lambda_c = (beta-theta)/(beta-c) * (1 + (beta-alpha)/(beta-c))   for c > 0,
    lambda_0 = (beta-theta)/beta                                     at  c = 0,

with lambda_c < 1 exactly for c < c_bar and lambda_{c_bar} = 1.  Outside small
zones the map expands: on the rays Gamma_i (all coordinates 0 except the i-th,
which lies in (c_star, theta)) the per-coordinate stretch between two states is
exactly beta(beta-theta)/((beta-v_i)(beta-w_i)) > 1.  When two neurons i, j
satisfy the openness conditions (O1)-(O3), the one-coordinate transfer map

    g_j(x) = beta - beta(beta-theta)/(beta-x) + sum_{l != j} H[l, j]

carries Gamma_i into Gamma_j and the composition g_i(g_j(.)) has a repelling
fixed point whose two-step multiplier exceeds 1.

Under (H3)/(H4) with at least one inhibitory neuron, every orbit is absorbed
into the image zone of C_{c_bar} within p0 + 1 returns and never leaves, which
supports the adapted metric

    d(v, w) = sum_{i<n0} ||rho^i v - rho^i w|| / mu_tilde^i

in which the map contracts at rate mu_tilde on pairs sharing a long enough
itinerary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from ._sampling import rng_stream, sample_on_section
from .dynamics import as_state, return_map
from .errors import (
    HypothesisViolated,
    InsufficientSamples,
    NoFixedPoint,
    PreconditionFailed,
)
from .params import NetworkParams, NeuronKind, classify_neurons, derived_constants

__all__ = [
    "lambda_for_zone", "in_zone", "verify_contraction", "expansion_witness",
    "check_O_conditions", "repeller", "absorption_check", "jvac_check",
    "adapted_distance", "estimate_lipschitz_c",
    "ContractionReport", "ExpansionWitness", "RepellerReport",
    "AbsorptionReport", "MetricEstimate",
]


def lambda_for_zone(params: NetworkParams, c: float) -> float:
    """Lipschitz factor of the zone C_c (the c = 0 zone has its own sharper rate)."""
    if c < 0 or c > params.theta:
        raise PreconditionFailed(f"zone level must lie in [0, theta], got {c}")
    beta, theta, alpha = params.beta, params.theta, params.alpha
    if c == 0.0:
        return (beta - theta) / beta
    return (beta - theta) / (beta - c) * (1.0 + (beta - alpha) / (beta - c))


def in_zone(params: NetworkParams, v, c: float) -> bool:
    """True iff every coordinate lies in [alpha, c] and v is on the section."""
    if c < 0 or c > params.theta:
        raise PreconditionFailed(f"zone level must lie in [0, theta], got {c}")
    arr = as_state(params, v)
    return bool(np.all(arr <= c)) and bool(np.any(arr == 0.0))


def _zone_after_return(params: NetworkParams) -> float:
    """Level of the sharpest zone containing the image of C_{c_bar}."""
    dc = derived_constants(params)
    if dc.min_abs_H is None:
        return dc.c_bar
    return max(0.0, params.theta - dc.min_abs_H)


@dataclass(frozen=True)
class ContractionReport:
    c: float
    lambda_c: float
    max_ratio: float
    pairs: int
    violations: list


def verify_contraction(params: NetworkParams, c: float, sample_count: int, seed: int) -> ContractionReport:
    """Monte-Carlo check of the zone inequality ||rho V - rho W|| <= lambda_c ||V - W||.

    Pairs are drawn uniformly on the section within C_c and kept only when both
    members produce the same firing set (membership in a common atom); rejected
    pairs are resampled up to a fixed budget.
    """
    dc = derived_constants(params)
    if not (0.0 <= c < dc.c_bar):
        raise PreconditionFailed(f"need 0 <= c < c_bar = {dc.c_bar}, got {c}")
    lam = lambda_for_zone(params, c)
    rng = rng_stream(seed, 0)
    kept = 0
    attempts = 0
    max_ratio = 0.0
    violations: list = []
    budget = max(10 * sample_count, 1000)
    batch = max(1024, min(sample_count, 1 << 16))
    while kept < sample_count and attempts < budget:
        V = sample_on_section(rng, params.n, params.alpha, c, batch)
        W = sample_on_section(rng, params.n, params.alpha, c, batch)
        valid, ratio = _kernels.pair_ratios(
            V, W, params.H, params.beta, params.theta, params.alpha,
            params.gamma, params.tie_tol(),
        )
        attempts += batch
        take = min(int(valid.sum()), sample_count - kept)
        idx = np.flatnonzero(valid)[:take]
        if idx.size:
            r = ratio[idx]
            max_ratio = max(max_ratio, float(r.max()))
            bad = idx[r > lam + 1e-9]
            for b in bad:
                violations.append((V[b].copy(), W[b].copy(), float(ratio[b])))
            kept += idx.size
    if kept < sample_count:
        raise InsufficientSamples(
            f"only {kept}/{sample_count} pairs landed in a common atom after {attempts} draws"
        )
    return ContractionReport(c=c, lambda_c=lam, max_ratio=max_ratio, pairs=kept, violations=violations)


def _gamma_coordinate(params: NetworkParams, v: np.ndarray, i: int) -> float:
    dc = derived_constants(params)
    arr = as_state(params, v)
    for k in range(params.n):
        if k != i and arr[k] != 0.0:
            raise PreconditionFailed(f"state is not on Gamma_{i}: coordinate {k} nonzero")
    if not (dc.c_star < arr[i] < params.theta):
        raise PreconditionFailed(
            f"coordinate {i} must lie in (c_star, theta) = ({dc.c_star}, {params.theta})"
        )
    return float(arr[i])


@dataclass(frozen=True)
class ExpansionWitness:
    ratios: np.ndarray   # per-coordinate stretch for non-fired, non-clamped k
    ratio: float         # the smallest of them
    expanded: bool       # all ratios > 1
    lower_bound: float   # beta(beta-theta)/((beta-v_i)(beta-w_i))


def expansion_witness(params: NetworkParams, i: int, v, w) -> ExpansionWitness:
    """Measured stretch of the return map between two Gamma_i states.

    Both states must share their firing set, and coordinates clamped at alpha
    are excluded from the comparison (the expansion statement assumes images
    above the floor).
    """
    vi = _gamma_coordinate(params, v, i)
    wi = _gamma_coordinate(params, w, i)
    if vi == wi:
        raise PreconditionFailed("degenerate pair: identical Gamma_i coordinates")
    sv = return_map(params, v)
    sw = return_map(params, w)
    if not np.array_equal(sv.fired, sw.fired):
        raise PreconditionFailed("states fall in different atoms (firing sets differ)")
    beta, theta, alpha = params.beta, params.theta, params.alpha
    ratios = []
    for k in range(params.n):
        if k in sv.fired:
            continue
        if sv.state[k] == alpha or sw.state[k] == alpha:
            continue  # floor clamp active; excluded from the expansion claim
        ratios.append(abs(sv.state[k] - sw.state[k]) / abs(vi - wi))
    if not ratios:
        raise PreconditionFailed("no unclamped non-firing coordinate to compare")
    ratios = np.array(ratios)
    bound = beta * (beta - theta) / ((beta - vi) * (beta - wi))
    return ExpansionWitness(
        ratios=ratios, ratio=float(ratios.min()),
        expanded=bool(np.all(ratios > 1.0)), lower_bound=bound,
    )


def check_O_conditions(params: NetworkParams, i: int, j: int) -> tuple[bool, bool, bool]:
    """The three openness conditions making (i, j) a repeller pair.

    O1: neither i nor j can be strongly excited by the rest of the network
        (incoming positive jumps sum below theta - c_star);
    O2: a spike from i or j strongly excites every third neuron (jump > theta;
        vacuously true when n = 2);
    O3: the net incoming interaction of i and of j is positive.
    """
    if i == j:
        raise PreconditionFailed("repeller pair needs two distinct neurons")
    dc = derived_constants(params)
    H = params.H
    n = params.n
    gap = params.theta - dc.c_star
    o1 = True
    o3 = True
    for s in (i, j):
        col = np.delete(H[:, s], s)
        o1 = o1 and float(col[col > 0].sum()) < gap
        o3 = o3 and float(col.sum()) > 0
    o2 = all(
        H[s, k] > params.theta
        for s in (i, j)
        for k in range(n)
        if k not in (i, j)
    )
    return bool(o1), bool(o2), bool(o3)


def _transfer(params: NetworkParams, j: int):
    """g_j and its derivative: the Gamma-to-Gamma coordinate transfer map."""
    beta, theta = params.beta, params.theta
    s = float(np.delete(params.H[:, j], j).sum())

    def g(x: float) -> float:
        return beta - beta * (beta - theta) / (beta - x) + s

    def gprime(x: float) -> float:
        return -beta * (beta - theta) / (beta - x) ** 2

    def ginv(y: float) -> float:
        return beta - beta * (beta - theta) / (beta + s - y)

    return g, gprime, ginv


@dataclass(frozen=True)
class RepellerReport:
    pair: tuple[int, int]
    interval: tuple[float, float]
    fixed_point: float
    multiplier: float
    conditions: tuple[bool, bool, bool]


def repeller(params: NetworkParams, i: int, j: int) -> RepellerReport:
    """Repelling period-2 seed on Gamma_i for an (O1)-(O3) pair.

    The admissible bracket (a, b) is the closed-form preimage of
    (c_star, theta) under the strictly decreasing g_j, intersected with
    (c_star, theta); the fixed point of g_i(g_j(.)) is then bisected to 1e-13
    and its two-step multiplier |g_i'(g_j(x*)) g_j'(x*)| reported.
    """
    conds = check_O_conditions(params, i, j)
    if not all(conds):
        raise PreconditionFailed(f"conditions (O1)-(O3) not satisfied for pair {(i, j)}: {conds}")
    dc = derived_constants(params)
    g_j, gp_j, ginv_j = _transfer(params, j)
    g_i, gp_i, _ = _transfer(params, i)
    a = max(dc.c_star, ginv_j(params.theta))
    b = min(params.theta, ginv_j(dc.c_star))
    if not a < b:
        raise NoFixedPoint(f"empty admissible bracket for pair {(i, j)}")

    def G(x: float) -> float:
        return g_i(g_j(x)) - x

    fa, fb = G(a), G(b)
    if fa == 0.0:
        x_star = a
    elif fb == 0.0:
        x_star = b
    elif fa * fb > 0:
        raise NoFixedPoint(f"no sign change of the two-step map on ({a}, {b})")
    else:
        lo, hi = a, b
        while hi - lo > 1e-13:
            mid = 0.5 * (lo + hi)
            fm = G(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0) == (fa > 0):
                lo = mid
            else:
                hi = mid
        x_star = 0.5 * (lo + hi)
    multiplier = abs(gp_i(g_j(x_star)) * gp_j(x_star))
    return RepellerReport(
        pair=(i, j), interval=(a, b), fixed_point=x_star,
        multiplier=multiplier, conditions=conds,
    )


def _require_h3_h4_inhibitory(params: NetworkParams) -> None:
    from .params import check_hypotheses

    rep = check_hypotheses(params)
    kinds = classify_neurons(params)
    if not (rep.h3 and rep.h4):
        raise HypothesisViolated(f"operation requires H3 and H4 (h3={rep.h3}, h4={rep.h4})")
    if not any(k is NeuronKind.INHIBITORY for k in kinds):
        raise HypothesisViolated("network has no inhibitory neuron")


@dataclass(frozen=True)
class AbsorptionReport:
    max_steps_outside: int
    bound_p0_plus_1: int
    post_entry_bound: float
    ok: bool


def absorption_check(params: NetworkParams, sample_count: int, seed: int, horizon: int = 20) -> AbsorptionReport:
    """Check that every sampled orbit enters C_{c_bar} within p0 + 1 returns
    and that each later image keeps all coordinates below
    max(0, theta - min|H|) < c_bar."""
    _require_h3_h4_inhibitory(params)
    dc = derived_constants(params)
    post_bound = _zone_after_return(params)
    p0 = dc.p0
    assert p0 is not None  # H3 guarantees a nonzero interaction
    rng = rng_stream(seed, 0)
    starts = sample_on_section(rng, params.n, params.alpha, params.theta, sample_count)
    worst = 0
    ok = True
    for row in starts:
        enter, stayed = _kernels.absorb_run(
            row, params.H, params.beta, params.theta, params.alpha, params.gamma,
            params.tie_tol(), dc.c_bar, post_bound + 1e-12, p0 + 1, horizon,
        )
        if enter < 0 or not stayed:
            ok = False
            worst = max(worst, p0 + 2)
        else:
            worst = max(worst, int(enter))
    return AbsorptionReport(
        max_steps_outside=worst, bound_p0_plus_1=p0 + 1, post_entry_bound=post_bound, ok=ok,
    )


def jvac_check(params: NetworkParams, v) -> bool:
    """Inside C_{c_bar}: a spontaneous excitatory firer forces the whole
    network to fire together (the implication is vacuous otherwise)."""
    _require_h3_h4_inhibitory(params)
    dc = derived_constants(params)
    if not in_zone(params, v, dc.c_bar):
        raise PreconditionFailed("state is outside C_{c_bar}")
    step = return_map(params, v)
    kinds = classify_neurons(params)
    spont_excit = any(kinds[int(s)] is NeuronKind.EXCITATORY for s in step.spontaneous)
    if not spont_excit:
        return True
    return step.fired.size == params.n


def adapted_distance(params: NetworkParams, v, w, n0: int, mu_tilde: float) -> float:
    """d(v, w) = sum_{i<n0} ||rho^i v - rho^i w|| / mu_tilde^i (sup norms)."""
    if n0 < 1:
        raise PreconditionFailed("n0 must be at least 1")
    if not (0.0 < mu_tilde < 1.0):
        raise PreconditionFailed("mu_tilde must lie in (0, 1)")
    a = as_state(params, v)
    b = as_state(params, w)
    total = 0.0
    weight = 1.0
    for _ in range(n0):
        total += float(np.max(np.abs(a - b))) * weight
        weight /= mu_tilde
        a = return_map(params, a).state
        b = return_map(params, b).state
    return total


def _perturbed_pairs(rng, params: NetworkParams, count: int):
    """Section states paired with same-face perturbations of random magnitude."""
    n = params.n
    V = sample_on_section(rng, n, params.alpha, params.theta, count)
    scale = np.exp(rng.uniform(np.log(1e-6), np.log(0.25 * (params.theta - params.alpha)), size=count))
    W = V + rng.uniform(-1.0, 1.0, size=V.shape) * scale[:, None]
    W = np.clip(W, params.alpha, params.theta)
    zero = np.argmax(V == 0.0, axis=1)
    W[np.arange(count), zero] = 0.0
    return V, W


@dataclass(frozen=True)
class MetricEstimate:
    c_hat: float
    n0: int
    mu_tilde: float
    lam: float
    pairs: int


def estimate_lipschitz_c(params: NetworkParams, sample_count: int, seed: int) -> MetricEstimate:
    """Empirical transient-stretch constant and an adapted-metric recipe.

    Samples same-itinerary pairs, measures max_k ||rho^k V - rho^k W|| /
    (lambda^k ||V - W||) for k up to p0, doubles the observed maximum as a
    safety margin, picks mu_tilde as the midpoint of (lambda, 1) and the
    smallest n0 with c_hat (lambda/mu_tilde)^{n0} < 1.
    """
    dc = derived_constants(params)
    _require_h3_h4_inhibitory(params)
    lam = lambda_for_zone(params, _zone_after_return(params))
    if lam >= 1.0:
        raise PreconditionFailed("contraction factor of the absorbed zone is not below 1")
    p0 = dc.p0 or 1
    rng = rng_stream(seed, 0)
    used = 0
    c_raw = 1.0
    attempts = 0
    budget = 20 * sample_count
    while used < sample_count and attempts < budget:
        V, W = _perturbed_pairs(rng, params, min(sample_count, 4096))
        for v, w in zip(V, W):
            attempts += 1
            d0 = float(np.max(np.abs(v - w)))
            if d0 == 0.0:
                continue
            dists, n_common = _kernels.track_pair(
                v, w, params.H, params.beta, params.theta, params.alpha,
                params.gamma, params.tie_tol(), p0,
            )
            if n_common < 1:
                continue
            used += 1
            for k in range(1, n_common + 1):
                c_raw = max(c_raw, dists[k] / (lam ** k * d0))
            if used >= sample_count:
                break
    if used < max(1, sample_count // 10):
        raise InsufficientSamples(f"only {used} same-itinerary pairs out of {attempts} draws")
    c_hat = 2.0 * c_raw
    mu_tilde = 0.5 * (lam + 1.0)
    if c_hat <= 1.0:
        n0 = 1
    else:
        n0 = max(1, math.floor(math.log(c_hat) / math.log(mu_tilde / lam)) + 1)
    return MetricEstimate(c_hat=c_hat, n0=n0, mu_tilde=mu_tilde, lam=lam, pairs=used)
