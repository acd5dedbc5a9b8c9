"""Statistical verification against models with known kernels.

Everything here needs the true transition probabilities along a sample, which
is why simulated samples travel as :class:`~rcx.models.Trajectory` objects
carrying their prehistory and per-step kernels.

Replicated campaigns derive one RNG stream per replicate from a master seed
via ``SeedSequence(seed, spawn_key=...)`` so results do not depend on the
order, or the process, in which replicates run.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import EMPTY, Alphabet, Distribution, FiniteString, Past, d_tv
from .counts import CountIndex, Sample
from .estimator import FittedEstimator, fit
from .errors import ParameterError
from .models import ArrivalDistribution, ContextTreeModel, RenewalModel, Trajectory

SIGMAS = 3.0


def binomial_slack(p: float, reps: int, sigmas: float = SIGMAS) -> float:
    """``sigmas`` standard deviations of a frequency with success probability p."""
    p = min(max(p, 0.0), 1.0)
    return sigmas * math.sqrt(p * (1 - p) / reps)


def replicate_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def run_jobs(fn: Callable, jobs_args: Sequence[tuple], jobs: int = 1) -> list:
    """Map ``fn`` over argument tuples, in processes when jobs > 1.

    Results come back in the order of ``jobs_args`` regardless of which
    worker finishes first.
    """
    if jobs <= 1 or len(jobs_args) <= 1:
        return [fn(*args) for args in jobs_args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*jobs_args)))


# --------------------------------------------------------------------------
# trajectories for arbitrary samples
# --------------------------------------------------------------------------


def with_prehistory(model, sample: Sample, prehistory: Sequence[int] = EMPTY) -> Trajectory:
    """Attach true kernels to a given sample by querying ``model.true_p``."""
    prehistory = tuple(prehistory)
    full = prehistory + sample.data
    start = len(prehistory)
    rows = [model.true_p(full[: start + i]).probs for i in range(sample.n + 1)]
    return Trajectory(sample, prehistory, np.array(rows))


def simulate_many(model, n: int, count: int, rng: np.random.Generator) -> list[Trajectory]:
    """``count`` independent stationary trajectories of length n."""
    if isinstance(model, RenewalModel):
        x, ages = model.simulate_batch(n, count, rng)
        h = model.batch_hazards(x, ages)
        out = []
        for r in range(count):
            kern = np.stack([1.0 - h[r], h[r]], axis=1)
            pre = (1,) + (0,) * (int(ages[r]) - 1)
            out.append(Trajectory(Sample(model.alphabet, x[r].tolist()), pre, kern))
        return out
    return [model.simulate(n, rng) for _ in range(count)]


# --------------------------------------------------------------------------
# semi-empirical probabilities and the Good event
# --------------------------------------------------------------------------


def semi_empirical(traj: Trajectory, w: Sequence[int], a: int) -> float:
    """p̄(a|w): average true kernel over the occurrences of w in X_1^{n-1}.

    Direct scan over positions; :func:`semi_empirical_table` computes the same
    numbers for every class of a count index at once.
    """
    w = tuple(w)
    data = traj.sample.data
    n = len(data)
    lw = len(w)
    total = 0.0
    hits = 0
    for i in range(lw + 1, n + 1):  # predicting X_i from X^{i-1}_{i-|w|}
        if data[i - 1 - lw:i - 1] == w:
            total += traj.kernels[i - 1, a]
            hits += 1
    if hits == 0:
        return 1.0 / traj.sample.alphabet.size
    return total / hits


def semi_empirical_table(traj: Trajectory, index: CountIndex) -> np.ndarray:
    """p̄(·|w) for every class of ``index`` (rows indexed by state)."""
    sums = index.aggregate(traj.kernels[: index.n])
    return sums / index.occurrences[:, None]


@dataclass
class GoodReport:
    checked_pairs: int
    violations: list[tuple[FiniteString, int, float, float]] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def good_event_check(traj: Trajectory, est: FittedEstimator, tol: float = 1e-12) -> GoodReport:
    """Check |p̄(a|w) − p̂(a|w)| <= conf(w, a) for every occurring w and a.

    Non-occurring strings satisfy it trivially (both sides are 1/|A| and the
    radius is 1).  Since p̄, p̂ and conf are constant on index classes, each
    class is checked once; a violation is reported with the class's shortest
    string.  ``tol`` absorbs float rounding in the kernel sums.
    """
    idx = est.index
    if traj.sample.data != idx.sample.data:
        raise ParameterError("trajectory and estimator were built on different samples")
    pbar = semi_empirical_table(traj, idx)
    gap = np.abs(pbar - est._p_hat)
    bad = np.argwhere(gap > est._conf + tol)
    violations = [(idx.representative(int(v)), int(a), float(gap[v, a]), float(est._conf[v, a]))
                  for v, a in bad]
    return GoodReport(idx.distinct_substrings() * idx.alphabet.size, violations)


# --------------------------------------------------------------------------
# loss and the oracle inequality
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LossEstimate:
    mean: float
    stderr: float
    values: np.ndarray


def loss(model, predictor, m_pasts: int, rng: np.random.Generator,
         past_length: int | None = None) -> LossEstimate:
    """Monte Carlo E[d_TV(p(·|X̃), q(·|X̃))] over independent stationary pasts.

    ``predictor`` is a fitted estimator or any callable mapping a Past to a
    Distribution.  Each past is a fresh trajectory of ``past_length`` symbols
    (default 2n for an estimator fitted on n symbols).
    """
    if isinstance(predictor, FittedEstimator):
        past_length = past_length or 2 * predictor.n
        predict = predictor.predict
    else:
        predict = predictor
    if not past_length:
        raise ParameterError("past_length is required for a bare predictor")
    if m_pasts < 1:
        raise ParameterError("m_pasts must be >= 1")
    vals = np.empty(m_pasts)
    for i, traj in enumerate(simulate_many(model, past_length, m_pasts, rng)):
        vals[i] = d_tv(traj.next_kernel, predict(traj.past))
    se = float(vals.std(ddof=1) / math.sqrt(m_pasts)) if m_pasts > 1 else float("nan")
    return LossEstimate(float(vals.mean()), se, vals)


@dataclass(frozen=True)
class OracleReport:
    L_grid: tuple[int, ...]
    lhs: np.ndarray          # (pasts,)
    rhs: np.ndarray          # (pasts, len(L_grid))
    p_minus_sums: np.ndarray
    counts: np.ndarray

    @property
    def margins(self) -> np.ndarray:
        return self.lhs[:, None] - self.rhs

    @property
    def holds(self) -> bool:
        return bool(np.all(self.margins <= 0))


def oracle_inequality_check(model, est: FittedEstimator, pasts: Sequence[Trajectory],
                            L_grid: Iterable[int]) -> OracleReport:
    """Compare d_TV(p(·|x), P̂(·|x)) with the pastwise bound at each depth L."""
    L_grid = tuple(int(L) for L in L_grid)
    P, nL = len(pasts), len(L_grid)
    lhs = np.empty(P)
    rhs = np.empty((P, nL))
    sums = np.empty((P, nL))
    counts = np.empty((P, nL), dtype=np.int64)
    for i, traj in enumerate(pasts):
        x = traj.past
        lhs[i] = d_tv(traj.next_kernel, est.predict(x))
        for j, L in enumerate(L_grid):
            w = x.suffix(L)
            sums[i, j] = float(model.p_minus(w).sum())
            counts[i, j] = est.index.count(w, est.n - 1)
            rhs[i, j] = est.oracle_bound(sums[i, j], int(counts[i, j]))
    return OracleReport(L_grid, lhs, rhs, sums, counts)


def adaptivity_margins(model, est: FittedEstimator, pasts: Sequence[Trajectory],
                       depths: Iterable[int]) -> np.ndarray:
    """d_TV − [(1 − Σ p₋(·|x_k)) + 2 Σ_a conf(x_k, a)] for each past and depth.

    Nonpositive everywhere whenever the Good event holds.
    """
    depths = tuple(depths)
    out = np.empty((len(pasts), len(depths)))
    k = est.alphabet.size
    for i, traj in enumerate(pasts):
        x = traj.past
        lhs = d_tv(traj.next_kernel, est.predict(x))
        for j, d in enumerate(depths):
            w = x.suffix(d)
            radius = sum(est.conf(w, a) for a in range(k))
            out[i, j] = lhs - ((1 - model.p_minus(w).sum()) + 2 * radius)
    return out


# --------------------------------------------------------------------------
# replicated Good-event / oracle campaign
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicateOutcome:
    rep: int
    good: bool
    good_violations: int
    checked_pairs: int
    oracle_holds: bool
    worst_margin: float
    adaptivity_holds: bool
    mean_h_hat: float


def _good_oracle_replicate(model, n: int, delta: float, probes: int, L_grid: tuple[int, ...],
                           seed: int, rep: int) -> ReplicateOutcome:
    rng = replicate_rng(seed, rep)
    traj = model.simulate(n, rng)
    est = fit(traj.sample, delta)
    report = good_event_check(traj, est)
    pasts = simulate_many(model, 2 * n, probes, rng)
    orc = oracle_inequality_check(model, est, pasts, L_grid)
    finite = orc.margins[np.isfinite(orc.margins)]
    worst = float(finite.max()) if finite.size else -math.inf
    adapt = adaptivity_margins(model, est, pasts, L_grid)
    hs = [est.h_hat(p.past) for p in pasts]
    return ReplicateOutcome(rep, report.holds, len(report.violations), report.checked_pairs,
                            orc.holds, worst, bool(np.all(adapt <= 1e-12)),
                            float(np.mean(hs)))


@dataclass
class CampaignResult:
    config: dict
    outcomes: list[ReplicateOutcome]

    @property
    def reps(self) -> int:
        return len(self.outcomes)

    @property
    def good_failure_rate(self) -> float:
        return sum(not o.good for o in self.outcomes) / self.reps

    @property
    def oracle_failure_rate(self) -> float:
        return sum(not o.oracle_holds for o in self.outcomes) / self.reps

    def threshold(self) -> float:
        delta = self.config["delta"]
        return delta + binomial_slack(delta, self.reps)

    @property
    def adaptivity_holds_on_good(self) -> bool:
        return all(o.adaptivity_holds for o in self.outcomes if o.good)


def good_oracle_campaign(model, n: int, delta: float, reps: int, seed: int,
                         probes: int = 50, L_grid: Iterable[int] = range(17),
                         jobs: int = 1) -> CampaignResult:
    L_grid = tuple(L_grid)
    args = [(model, n, delta, probes, L_grid, seed, r) for r in range(reps)]
    outcomes = run_jobs(_good_oracle_replicate, args, jobs)
    outcomes.sort(key=lambda o: o.rep)
    config = dict(n=n, delta=delta, reps=reps, seed=seed, probes=probes, L_grid=list(L_grid))
    return CampaignResult(config, outcomes)


# --------------------------------------------------------------------------
# minimax experiment for renewal processes
# --------------------------------------------------------------------------


def k_star(arrival: ArrivalDistribution, n: int, c2: float = 1.0) -> int:
    """Largest k with μ_≥(k) >= c2 ln n / n (0 if none)."""
    thr = c2 * math.log(n) / n
    k = 0
    while arrival.survival(k + 1) >= thr:
        k += 1
        if k > 10 * n:
            break
    return k


def moment_radius(arrival: ArrivalDistribution, gamma: float) -> float:
    """Γ with E[gap^(2+γ)] = Γ^(2+γ)."""
    if gamma <= 0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    m = arrival.moment(2 + gamma)
    if not math.isfinite(m):
        raise ParameterError(f"arrival has no finite moment of order {2 + gamma}")
    return m ** (1 / (2 + gamma))


@dataclass(frozen=True)
class MinimaxRow:
    n: int
    rep: int
    delta: float
    loss: float
    loss_se: float
    k_star: int
    event_E: bool
    min_context_ratio: float  # min over k <= k_* of N_{n-1}(10^{k-1}) / threshold
    seed_key: tuple[int, ...]


def _minimax_replicate(arrival: ArrivalDistribution, n: int, gamma: float, Gamma: float,
                       c2: float, m_pasts: int, seed: int, ni: int, rep: int) -> MinimaxRow:
    rng = replicate_rng(seed, ni, rep)
    model = RenewalModel(arrival)
    sample = model.sample_stationary(n, rng)
    delta = n ** -(1 + gamma / 2)
    est = fit(sample, delta)
    est_loss = loss(model, est, m_pasts, rng)
    ks = k_star(arrival, n, c2)
    ratio = math.inf
    for k in range(1, ks + 1):
        thr = arrival.survival(k) * (n - 1) / (8 * Gamma)
        ratio = min(ratio, est.index.count((1,) + (0,) * (k - 1), n - 1) / thr)
    return MinimaxRow(n, rep, delta, est_loss.mean, est_loss.stderr, ks, ratio >= 1, ratio,
                      (seed, ni, rep))


@dataclass
class ExperimentResult:
    config: dict
    rows: list
    aggregates: list[dict]
    diagnostics: dict


def log_log_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y on log x; NaN when some y is not positive."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(x <= 0):
        return math.nan
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def minimax_experiment(arrival: ArrivalDistribution, gamma: float, n_grid: Sequence[int],
                       reps: int, seed: int, m_pasts: int = 100, c2: float = 1.0,
                       jobs: int = 1) -> ExperimentResult:
    """Loss of the estimator with δ = n^-(1+γ/2) across sample sizes."""
    Gamma = moment_radius(arrival, gamma)
    n_grid = [int(n) for n in n_grid]
    args = [(arrival, n, gamma, Gamma, c2, m_pasts, seed, ni, r)
            for ni, n in enumerate(n_grid) for r in range(reps)]
    rows = run_jobs(_minimax_replicate, args, jobs)
    rows.sort(key=lambda r: (r.n, r.rep))
    aggregates = []
    for n in n_grid:
        sub = [r for r in rows if r.n == n]
        losses = np.array([r.loss for r in sub])
        aggregates.append(dict(
            n=n,
            median_loss=float(np.median(losses)),
            mean_loss=float(losses.mean()),
            reference=math.sqrt(math.log(n) / n),
            event_E_rate=float(np.mean([r.event_E for r in sub])),
            k_star=sub[0].k_star,
        ))
    slope = log_log_slope([a["reference"] for a in aggregates], [a["median_loss"] for a in aggregates])
    config = dict(arrival_table=list(arrival.table), arrival_success=arrival.success, gamma=gamma,
                  Gamma=Gamma, n_grid=n_grid, reps=reps, seed=seed, m_pasts=m_pasts, c2=c2)
    return ExperimentResult(config, rows, aggregates, dict(slope=slope))


# --------------------------------------------------------------------------
# Freedman inequality Monte Carlo
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetricWalk:
    """M_j = Σ ±step with fair signs."""

    step: float = 1.0

    def __post_init__(self):
        if not 0 <= self.step <= 1:
            raise ParameterError(f"walk increments must be bounded by 1, got step {self.step}")


@dataclass(frozen=True)
class CountingMartingale:
    """M_j(w, a) = Σ_i (1{X_i = a} − p(a|past)) 1{X^{i-1}_{i-|w|} = w}."""

    model: RenewalModel | ContextTreeModel
    w: FiniteString
    a: int


@dataclass(frozen=True)
class MartingalePaths:
    """Terminal values over independent paths.

    ``m`` is M_n, ``v`` the predictable quadratic variation V_n and
    ``kernel_mass`` Σ_i p(a|past_i) 1{context matches}, which equals
    p̄(a|w) N_{n-1}(w) for the counting martingale and bounds V_n.
    """

    m: np.ndarray
    v: np.ndarray
    kernel_mass: np.ndarray


def martingale_paths(walk, n: int, reps: int, rng: np.random.Generator) -> MartingalePaths:
    if isinstance(walk, SymmetricWalk):
        signs = rng.integers(0, 2, size=(reps, n), dtype=np.int8) * 2 - 1
        m = walk.step * signs.sum(axis=1, dtype=np.int64)
        v = np.full(reps, n * walk.step ** 2, dtype=float)
        return MartingalePaths(m.astype(float), v, v.copy())
    if isinstance(walk, CountingMartingale):
        model, w, a = walk.model, tuple(walk.w), walk.a
        if isinstance(model, RenewalModel):
            x, ages = model.simulate_batch(n, reps, rng)
            h = model.batch_hazards(x, ages)[:, :n]  # law of X_1..X_n
            pa = h if a == 1 else 1.0 - h
        else:
            trajs = [model.simulate(n, rng) for _ in range(reps)]
            x = np.array([t.sample.data for t in trajs], dtype=np.int8)
            pa = np.array([t.kernels[:n, a] for t in trajs])
        ind = counting_indicator(x, w)
        m = (((x == a) - pa) * ind).sum(axis=1)
        v = (pa * (1 - pa) * ind).sum(axis=1)
        return MartingalePaths(m, v, (pa * ind).sum(axis=1))
    raise ParameterError(f"unknown walk specification {walk!r}")


def counting_indicator(x: np.ndarray, w: Sequence[int]) -> np.ndarray:
    """ind[r, i-1] = 1{X^{i-1}_{i-|w|} = w} for i = 1..n (0 when i <= |w|)."""
    reps, n = x.shape
    lw = len(w)
    ind = np.zeros((reps, n), dtype=bool)
    if lw == 0:
        ind[:] = True
        return ind
    if lw >= n:
        return ind
    match = np.ones((reps, n - lw), dtype=bool)
    for k, s in enumerate(w):
        # window for predicting X_i (0-based column i-1 >= lw) covers columns i-1-lw..i-2
        match &= x[:, k:n - lw + k] == s
    ind[:, lw:] = match
    return ind


@dataclass(frozen=True)
class FreedmanRow:
    n: int
    t: float
    side: str
    reps: int
    empirical: float
    p_v_positive: float
    bound: float
    slack: float
    fixed_v: tuple[tuple[float, float, float], ...]  # (v, empirical, bound)

    @property
    def holds(self) -> bool:
        ok = self.empirical <= self.bound + self.slack
        for _, emp, bnd in self.fixed_v:
            ok = ok and emp <= bnd + binomial_slack(bnd, self.reps)
        return bool(ok)


def freedman_mc(walk, n: int, t_grid: Sequence[float], reps: int, rng: np.random.Generator,
                v_grid: Sequence[float] | None = None, chunk: int = 20000) -> list[FreedmanRow]:
    """Empirical tails of M_n against the empirical Freedman bounds.

    Checks Pr{M_n >= 2√(V_n t) + t} <= (7 + log₂ n) e^{-t} Pr{V_n > 0} for each
    t, and the fixed-v form Pr{M_n >= √(2tv) + 2t/3, V_n <= v} <= e^{-t}
    Pr{V_n > 0} on ``v_grid`` (default n/8, n/4, n/2, n), for M and −M.
    """
    if v_grid is None:
        v_grid = (n / 8, n / 4, n / 2, float(n))
    ms, vs = [], []
    done = 0
    while done < reps:
        size = min(chunk, reps - done)
        paths = martingale_paths(walk, n, size, rng)
        ms.append(paths.m)
        vs.append(paths.v)
        done += size
    m = np.concatenate(ms)
    v = np.concatenate(vs)
    p_pos = float(np.mean(v > 0))
    rows = []
    for side, sgn in (("+", 1.0), ("-", -1.0)):
        mm = sgn * m
        for t in t_grid:
            emp = float(np.mean(mm >= 2 * np.sqrt(v * t) + t))
            bound = (7 + math.log2(n)) * math.exp(-t) * p_pos
            fixed = []
            for vv in v_grid:
                e = float(np.mean((mm >= math.sqrt(2 * t * vv) + 2 * t / 3) & (v <= vv)))
                fixed.append((float(vv), e, math.exp(-t) * p_pos))
            rows.append(FreedmanRow(n, float(t), side, reps, emp, p_pos, bound,
                                    binomial_slack(bound, reps), tuple(fixed)))
    return rows
