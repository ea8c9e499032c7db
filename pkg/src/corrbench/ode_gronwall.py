"""Numerical check of a second-order Gronwall-type comparison principle.

If ``p: [0, inf) -> [0, 1]`` satisfies ``p'' >= -p' - K p log(e/p)`` with
``p(0) in (0, 1)``, then ``p(t) >= p(0)/2`` for

    t <= min(1 / (4 sqrt(K log(2e/p(0)))), p(0) / (4 |p'(0)|)).

The binding case is the equality ODE, integrated here with classical RK4
(vectorised over many parameter tuples). Trajectories are checked against
the hypothesis with discrete derivatives of the sampled values only, so the
checker is independent of the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

P_FLOOR = 1e-12
HYP_TOL = 1e-6
CONCLUSION_TOL = 1e-8
HORIZON_FACTOR = 4.0


def horizon(K: float, p0: float, dp0: float) -> float:
    first = 1.0 / (4.0 * math.sqrt(K * math.log(2 * math.e / p0))) if K > 0 else math.inf
    second = p0 / (4.0 * abs(dp0)) if dp0 != 0 else math.inf
    return min(first, second)


def _rhs(p, q, K, t, amp, omega):
    pc = np.maximum(p, P_FLOOR)
    return q, -q - K * pc * np.log(math.e / pc) + amp * np.sin(omega * t) ** 2


@dataclass
class Trajectory:
    """Sampled solution on ``t_j = j * dt``.

    Perturbed trajectories solve the equation with a non-negative forcing
    term and carry ``provenance == "perturbed"``.
    """

    K: float
    p0: float
    dp0: float
    dt: float
    t: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    provenance: str = "extremal-ODE"
    truncated: bool = False
    params: dict = field(default_factory=dict)


def integrate_batch(K, p0, dp0, dt: float, t_end, amplitude=0.0, omega=0.0) -> list[Trajectory]:
    """RK4 for ``p'' = -p' - K p log(e/p) + amplitude sin(omega t)^2``.

    All arguments except ``dt`` broadcast over a batch of parameter tuples.
    Each trajectory runs to its own ``t_end`` or until ``p <= 1e-12``,
    whichever comes first. A non-zero amplitude marks it as perturbed.
    """
    K = np.atleast_1d(np.asarray(K, dtype=float))
    p0 = np.broadcast_to(np.asarray(p0, dtype=float), K.shape).copy()
    dp0 = np.broadcast_to(np.asarray(dp0, dtype=float), K.shape).copy()
    t_end = np.broadcast_to(np.asarray(t_end, dtype=float), K.shape)
    amp = np.broadcast_to(np.asarray(amplitude, dtype=float), K.shape)
    om = np.broadcast_to(np.asarray(omega, dtype=float), K.shape)
    if np.any(amp < 0):
        raise ValueError("forcing amplitude must be non-negative")
    if np.any((p0 <= 0) | (p0 >= 1)):
        raise ValueError("p0 must lie in (0, 1)")
    steps = np.ceil(t_end / dt - 1e-9).astype(int)
    total = int(steps.max())
    P = np.full((total + 1, K.size), np.nan)
    Q = np.full((total + 1, K.size), np.nan)
    P[0], Q[0] = p0, dp0
    p, q = p0.copy(), dp0.copy()
    alive = np.ones(K.size, dtype=bool)
    last = steps.copy()
    for j in range(1, total + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        pa, qa, args = p[idx], q[idx], (K[idx], amp[idx], om[idx])
        t0 = (j - 1) * dt
        k1p, k1q = _rhs(pa, qa, args[0], t0, *args[1:])
        k2p, k2q = _rhs(pa + 0.5 * dt * k1p, qa + 0.5 * dt * k1q, args[0], t0 + 0.5 * dt, *args[1:])
        k3p, k3q = _rhs(pa + 0.5 * dt * k2p, qa + 0.5 * dt * k2q, args[0], t0 + 0.5 * dt, *args[1:])
        k4p, k4q = _rhs(pa + dt * k3p, qa + dt * k3q, args[0], t0 + dt, *args[1:])
        p[idx] = pa + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        q[idx] = qa + dt / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        P[j, idx], Q[j, idx] = p[idx], q[idx]
        floor = idx[p[idx] <= P_FLOOR]
        last[floor] = j
        done = idx[(j >= steps[idx]) | (p[idx] <= P_FLOOR)]
        alive[done] = False
    out = []
    for b in range(K.size):
        n = int(last[b]) + 1
        hit = bool(P[n - 1, b] <= P_FLOOR)
        if hit:
            # drop the step that overshot the floor; its stages used the clipped drift
            n -= 1
        forced = amp[b] > 0
        out.append(Trajectory(
            float(K[b]), float(p0[b]), float(dp0[b]), dt, dt * np.arange(n),
            P[:n, b].copy(), Q[:n, b].copy(),
            provenance="perturbed" if forced else "extremal-ODE", truncated=hit,
            params={"amplitude": float(amp[b]), "omega": float(om[b])} if forced else {},
        ))
    return out


def integrate_extremal(K: float, p0: float, dp0: float, dt: float = 1e-4, T: float = 1.0) -> Trajectory:
    """Integrate the equality case on ``[0, T]``."""
    return integrate_batch(K, p0, dp0, dt, T)[0]


def forcing_amplitude(K: float, p0: float, dp0: float, rel: float = 0.01) -> float:
    """Forcing size relative to the initial scale of ``p''``, so perturbations stay near-extremal."""
    return rel * (K * p0 * math.log(math.e / p0) + abs(dp0) + p0)


# -- verification ---------------------------------------------------------------


@dataclass
class ConclusionReport:
    K: float
    p0: float
    dp0: float
    horizon: float
    hypothesis_ok: bool
    hypothesis_margin: float
    in_range: bool
    covered: bool
    worst_margin: float
    crossing_time: float | None
    provenance: str
    truncated: bool
    params: dict = field(default_factory=dict)

    @property
    def asserted(self) -> bool:
        """Whether the comparison applies and the trajectory covers the horizon.

        Hitting the floor after the horizon does not affect the conclusion, so
        only trajectories clipped before it are excluded.
        """
        return self.hypothesis_ok and self.in_range and self.covered

    @property
    def violated(self) -> bool:
        return self.asserted and self.worst_margin < -CONCLUSION_TOL

    @property
    def horizon_ratio(self) -> float:
        if self.crossing_time is None:
            return math.inf
        return self.crossing_time / self.horizon

    def to_json(self) -> dict:
        return {
            "K": self.K, "p0": self.p0, "dp0": self.dp0, "horizon": self.horizon,
            "hypothesis_ok": self.hypothesis_ok, "hypothesis_margin": self.hypothesis_margin,
            "in_range": self.in_range, "worst_margin": self.worst_margin,
            "crossing_time": self.crossing_time, "provenance": self.provenance,
            "truncated": self.truncated, "violated": self.violated, **self.params,
        }


def hypothesis_margins(traj: Trajectory) -> np.ndarray:
    """Relative margin of ``p'' + p' + K p log(e/p) >= 0`` at interior points.

    Derivatives come from fourth-order central differences of the sampled
    values; the margin is divided by ``max(|p''|, |p'|, K p log(e/p), 1)``.
    """
    p, h = traj.p, traj.dt
    if p.size < 5:
        return np.zeros(0)
    c = p[2:-2]
    d1 = (p[:-4] - 8 * p[1:-3] + 8 * p[3:-1] - p[4:]) / (12 * h)
    d2 = (-p[:-4] + 16 * p[1:-3] - 30 * c + 16 * p[3:-1] - p[4:]) / (12 * h * h)
    pc = np.maximum(c, P_FLOOR)
    drift = traj.K * pc * np.log(math.e / pc)
    scale = np.maximum.reduce([np.abs(d2), np.abs(d1), drift, np.ones_like(c)])
    return (d2 + d1 + drift) / scale


def verify_conclusion(traj: Trajectory, K: float | None = None, p0: float | None = None,
                      dp0: float | None = None) -> ConclusionReport:
    """Check the hypothesis first, then ``p >= p0/2`` up to the comparison horizon.

    Both checks use ``[0, H]``; the first downward crossing of ``p0/2`` is
    reported over the whole trajectory.
    """
    K = traj.K if K is None else K
    p0 = traj.p0 if p0 is None else p0
    dp0 = traj.dp0 if dp0 is None else dp0
    H = horizon(K, p0, dp0)
    # the conclusion at t only depends on [0, t]; beyond the horizon the
    # trajectory may approach 0 where the drift is not smooth
    margins = hypothesis_margins(traj)[: max(int(H / traj.dt) + 1, 0)] if math.isfinite(H) else hypothesis_margins(traj)
    hyp_margin = float(margins.min()) if margins.size else 0.0
    hyp_ok = hyp_margin >= -HYP_TOL
    in_range = bool(np.all((traj.p >= 0) & (traj.p <= 1)))
    within = traj.t <= H * (1 + 1e-12)
    worst = float(np.min(traj.p[within] - p0 / 2))
    below = np.flatnonzero(traj.p < p0 / 2)
    crossing = None
    if below.size:
        j = int(below[0])
        a, b = traj.p[j - 1] - p0 / 2, traj.p[j] - p0 / 2
        crossing = float(traj.t[j - 1] + traj.dt * a / (a - b))
    covered = math.isinf(H) or traj.t[-1] + traj.dt > H
    return ConclusionReport(K, p0, dp0, H, hyp_ok, hyp_margin, in_range, covered, worst,
                            crossing, traj.provenance, traj.truncated, dict(traj.params))


# -- sweeps ---------------------------------------------------------------------------


GRID_K = (0.1, 1.0, 10.0, math.exp(8))
GRID_P0 = (0.9, 0.5, 0.1, 0.01)
GRID_DP0 = (0.0, -1.0, -10.0)  # multiples of p0


def sweep_tuples(count: int = 1000, seed: int = 0) -> list[tuple[float, float, float]]:
    """The fixed grid followed by random tuples up to ``count``."""
    tuples = [(K, p0, r * p0) for K in GRID_K for p0 in GRID_P0 for r in GRID_DP0]
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    while len(tuples) < count:
        K = math.exp(rng.uniform(math.log(1e-2), 8.0))
        p0 = math.exp(rng.uniform(math.log(1e-3), math.log(0.99)))
        kind = rng.random()
        if kind < 0.2:
            dp0 = 0.0
        elif kind < 0.85:
            dp0 = -p0 * math.exp(rng.uniform(math.log(1e-2), math.log(1e2)))
        else:
            dp0 = p0 * math.exp(rng.uniform(math.log(1e-2), math.log(1.0)))
        tuples.append((K, p0, dp0))
    return tuples[:max(count, 0)] if count >= len(tuples) else tuples


def _horizon_end(K, p0, dp0, cap: float = 10.0) -> float:
    H = horizon(K, p0, dp0)
    return min(HORIZON_FACTOR * H, cap) if math.isfinite(H) else cap


@dataclass
class SweepReport:
    dt: float
    reports: list[ConclusionReport]
    richardson_ratio: float | None = None

    @property
    def asserted(self) -> int:
        return sum(r.asserted for r in self.reports)

    @property
    def violations(self) -> list[ConclusionReport]:
        return [r for r in self.reports if r.violated]

    @property
    def rejected(self) -> int:
        return sum(not r.hypothesis_ok for r in self.reports)

    def extremal_hypothesis_margin(self) -> float:
        vals = [abs(r.hypothesis_margin) for r in self.reports if r.provenance == "extremal-ODE"]
        return max(vals, default=0.0)

    def min_horizon_ratio(self) -> float:
        return min((r.horizon_ratio for r in self.reports if r.asserted), default=math.inf)

    @property
    def passed(self) -> bool:
        order_ok = self.richardson_ratio is None or 12 <= self.richardson_ratio <= 20
        return not self.violations and order_ok

    def rows(self):
        for r in self.reports:
            yield (r.provenance, r.K, r.p0, r.dp0, r.params.get("omega", ""), r.horizon,
                   r.worst_margin, r.crossing_time if r.crossing_time is not None else "",
                   r.hypothesis_ok, r.asserted, r.violated)

    def to_json(self) -> dict:
        ratio = self.min_horizon_ratio()
        return {
            "dt": self.dt,
            "tuples": len(self.reports),
            "asserted": int(self.asserted),
            "rejected": int(self.rejected),
            "violations": [r.to_json() for r in self.violations],
            "max_extremal_hypothesis_residual": self.extremal_hypothesis_margin(),
            "min_horizon_ratio": ratio if math.isfinite(ratio) else None,
            "richardson_ratio": None if self.richardson_ratio is None else float(self.richardson_ratio),
            "passed": bool(self.passed),
        }


def run_sweep(tuples, dt: float = 1e-4, perturbations: int = 0, seed: int = 0,
              chunk: int = 64) -> SweepReport:
    """Integrate every tuple to four horizons and verify, then add perturbed runs.

    Perturbation ``i`` picks a tuple and ``omega`` (log-uniform in
    ``[0.1, 1000]``) from ``SeedSequence(seed, spawn_key=(1, i))`` and solves
    the equation with the non-negative forcing
    ``forcing_amplitude(K, p0, dp0) sin(omega t)^2`` from the same initial
    data. Such trajectories satisfy the hypothesis strictly wherever the
    forcing is positive.
    """
    tuples = list(tuples)
    jobs = [(tuples[i], 0.0, 0.0) for i in range(len(tuples))]
    for i in range(perturbations):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, i)))
        K, p0, dp0 = tuples[int(rng.integers(len(tuples)))]
        omega = math.exp(rng.uniform(math.log(0.1), math.log(1000.0)))
        jobs.append(((K, p0, dp0), forcing_amplitude(K, p0, dp0), omega))
    # batching trajectories of similar length keeps the vectorised loop dense
    order = sorted(range(len(jobs)), key=lambda i: _horizon_end(*jobs[i][0]))
    reports: list[ConclusionReport | None] = [None] * len(jobs)
    for start in range(0, len(order), chunk):
        block = order[start:start + chunk]
        arr = np.array([jobs[i][0] for i in block])
        ends = [_horizon_end(*jobs[i][0]) for i in block]
        amps = [jobs[i][1] for i in block]
        omegas = [jobs[i][2] for i in block]
        for i, traj in zip(block, integrate_batch(arr[:, 0], arr[:, 1], arr[:, 2], dt, ends, amps, omegas)):
            reports[i] = verify_conclusion(traj)
    return SweepReport(dt, reports, richardson_check())


def richardson_check(K: float = 1.0, p0: float = 0.5, dp0: float = 0.0, T: float = 0.5,
                     dt: float = 0.05) -> float:
    """``|p_h - p_{h/2}| / |p_{h/2} - p_{h/4}|`` at ``t = T``; close to 16 for RK4."""
    vals = [integrate_extremal(K, p0, dp0, dt / 2 ** m, T).p[-1] for m in range(3)]
    return float(abs(vals[0] - vals[1]) / abs(vals[1] - vals[2]))
