"""Acceptance criteria at full scale; each test prints one PASS/FAIL line."""

import itertools
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from rcx.core import EMPTY, Alphabet
from rcx.counts import CountIndex, Sample, brute_force_count
from rcx.estimator import fit
from rcx.eval import (
    CountingMartingale,
    SymmetricWalk,
    freedman_mc,
    good_oracle_campaign,
    minimax_experiment,
)
from rcx.models import ArrivalDistribution, ContextTreeModel, RenewalModel, minimal_rcr

SEED = 20250101
U12 = RenewalModel(ArrivalDistribution.uniform(2))


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_counting_exactness():
    rng = np.random.default_rng(SEED)
    queries = mismatches = 0
    for _ in range(100):
        k = int(rng.integers(2, 4))
        n = int(rng.integers(1, 501))
        data = tuple(int(s) for s in rng.integers(0, k, n))
        idx = CountIndex(Sample(Alphabet.of("abc"[:k]), data))
        words = [tuple(int(s) for s in rng.integers(0, k, int(rng.integers(0, 8)))) for _ in range(20)]
        for _ in range(20):
            i = int(rng.integers(0, n))
            words.append(data[i:i + int(rng.integers(1, 40))])
        for w in words:
            for h in (n - 1, n):
                queries += 1
                mismatches += idx.count(w, h) != brute_force_count(data, w, h)
        # Σ_a N_n(wa) = N_{n-1}(w) on every occurring class, and on the sampled words
        mismatches += int(np.any(idx.next_counts.sum(axis=1) != idx.occurrences))
        for w in words:
            if idx.occurs(w):
                total = sum(brute_force_count(data, w + (a,), n) for a in range(k))
                mismatches += total != brute_force_count(data, w, n - 1)
    report(1, mismatches == 0, f"{queries} count queries on 100 samples, {mismatches} mismatches")


def test_criterion_2_estimator_identity():
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    simplex_ok = True
    triples = 0
    while triples < 10 ** 4:
        k = int(rng.integers(2, 4))
        n = int(rng.integers(1, 80))
        data = tuple(int(s) for s in rng.integers(0, k, n))
        idx = CountIndex(Sample(Alphabet.of("abc"[:k]), data))
        for _ in range(10):
            est = fit(idx, float(rng.uniform(1e-6, 0.99)))
            head = tuple(int(s) for s in rng.integers(0, k, n + int(rng.integers(0, 5))))
            past = head + data[: int(rng.integers(0, n + 1))]
            p, q = est.predict_rcr(past).probs, est.predict_alt(past).probs
            worst = max(worst, float(np.max(np.abs(p - q))))
            simplex_ok &= bool(abs(p.sum() - 1) <= 1e-12 and p.min() >= -1e-12)
            triples += 1
    stop_ok = True
    for _ in range(10 ** 3):
        k = int(rng.integers(2, 4))
        n = int(rng.integers(2, 120))
        data = tuple(int(s) for s in rng.integers(0, k, n))
        est = fit(Sample(Alphabet.of("abc"[:k]), data), float(rng.uniform(1e-6, 0.99)))
        x = tuple(int(s) for s in rng.integers(0, k, n)) + data[: int(rng.integers(0, n + 1))]
        h = est.h_hat(x)
        y = tuple(int(s) for s in rng.integers(0, k, n)) + (x[len(x) - h:] if h else EMPTY)
        stop_ok &= est.h_hat(y) == h and np.array_equal(est.predict_probs(x), est.predict_probs(y))
    ok = worst <= 1e-12 and simplex_ok and stop_ok
    report(2, ok, f"{triples} triples, max |rcr - alt| = {worst:.2e}, simplex {simplex_ok}, "
                  f"stopping-time on 1000 pairs {stop_ok}")


def test_criterion_3_hand_fixture():
    ab = Alphabet.of("ab")
    est = fit(Sample.from_text(ab, "aabab"), 0.5)
    x = ab.encode("ababa")
    vals = [
        (est.p_hat(ab.encode("a"), 1), 2 / 3),
        (est.p_hat_min(EMPTY, 0), 1.0),
        (est.p_hat_min(EMPTY, 1), 1.0),
        (est.predict(x)[0], 0.5),
        (est.predict(x)[1], 0.5),
    ]
    ok = all(abs(a - b) <= 1e-12 for a, b in vals) and est.h_hat(x) == 0
    report(3, ok, f"p_hat(b|a)={vals[0][0]!r}, minorants at root={vals[1][0]!r},{vals[2][0]!r}, "
                  f"h_hat={est.h_hat(x)}, prediction=({vals[3][0]}, {vals[4][0]})")


def _random_trees(rng, count):
    out = []
    while len(out) < count:
        k = int(rng.integers(2, 4))
        cap = 6 if k == 2 else 4
        leaves = [EMPTY]
        for _ in range(int(rng.integers(0, 8))):
            split = [c for c in leaves if len(c) < cap]
            if not split:
                break
            c = split[int(rng.integers(0, len(split)))]
            leaves.remove(c)
            leaves.extend((a,) + c for a in range(k))
        contexts = {}
        for c in leaves:
            raw = rng.integers(0, 4, k).astype(float)
            if raw.sum() == 0:
                raw[int(rng.integers(0, k))] = 1
            contexts[c] = raw / raw.sum()
        try:
            out.append(ContextTreeModel(Alphabet.of("abc"[:k]), contexts))
        except Exception:
            continue
    # the deepest admissible binary tree: every context of length 6 with strictly mixed kernels
    full = {w: [0.3, 0.7] if w[-1] else [0.6, 0.4] for w in itertools.product((0, 1), repeat=6)}
    out.append(ContextTreeModel(Alphabet.binary(), full))
    return out


def test_criterion_4_minimal_rcr_fixtures():
    geo = RenewalModel(ArrivalDistribution.geometric(0.5))
    lam_geo = minimal_rcr(geo, 8).weight(EMPTY)
    rcr = minimal_rcr(U12, 8)
    lam = (rcr.weight(EMPTY), rcr.weight((0,)), rcr.weight((1,)))
    recon = 0.0
    for model, r in ((geo, minimal_rcr(geo, 8)), (U12, rcr)):
        for w in itertools.product((0, 1), repeat=8):
            if model.positive(w):
                recon = max(recon, float(np.abs(r.true_p(w).probs - model.true_p(w).probs).max()))
    trees = _random_trees(np.random.default_rng(SEED + 4), 60)
    pm_gap = 0.0
    for tree in trees:
        k = tree.alphabet.size
        for L in range(tree.depth + 2):
            for w in itertools.product(range(k), repeat=L):
                pm_gap = max(pm_gap, float(np.abs(tree.p_minus(w) - tree.p_minus_bruteforce(w)).max()))
    ok = (abs(lam_geo - 1) <= 1e-12 and all(abs(v - 0.5) <= 1e-12 for v in lam)
          and recon <= 1e-12 and pm_gap <= 1e-12)
    report(4, ok, f"geometric lambda_0={lam_geo!r}, uniform{{1,2}} lambdas={lam}, reconstruction "
                  f"error {recon:.1e} to depth 8, p_minus oracle gap {pm_gap:.1e} on {len(trees)} trees")


@pytest.fixture(scope="module")
def campaign():
    return good_oracle_campaign(U12, 4096, 0.1, 200, seed=SEED + 5, probes=50, L_grid=range(17))


def test_criterion_5_good_event(campaign):
    rate, thr = campaign.good_failure_rate, campaign.threshold()
    report(5, rate <= thr and campaign.adaptivity_holds_on_good,
           f"Good violations in {rate:.3f} of 200 replicates (threshold {thr:.3f}); "
           f"adaptivity bound held on every Good replicate: {campaign.adaptivity_holds_on_good}")


def test_criterion_6_oracle_inequality(campaign):
    rate, thr = campaign.oracle_failure_rate, campaign.threshold()
    worst = max(o.worst_margin for o in campaign.outcomes)
    report(6, rate <= thr, f"bound violated in {rate:.3f} of 200 replicates (threshold {thr:.3f}), "
                           f"largest finite margin {worst:.3f}")


def test_criterion_7_minimax_rate():
    grid = [2 ** k for k in range(10, 15)]
    parts = []
    ok = True
    for name, arrival in (("geometric(1/2)", ArrivalDistribution.geometric(0.5)),
                          ("power-law k^-4 on 1..64", ArrivalDistribution.power_law(4.0, 64))):
        res = minimax_experiment(arrival, 1.0, grid, reps=50, seed=SEED + 7, m_pasts=100)
        med = [a["median_loss"] for a in res.aggregates]
        slope = res.diagnostics["slope"]
        good = 0.7 <= slope <= 1.3 and med[-1] < med[0]
        ok &= good
        e_rate = res.aggregates[-1]["event_E_rate"]
        parts.append(f"{name}: slope {slope:.3f}, median loss {med[0]:.4g} -> {med[-1]:.4g}, "
                     f"E at 2^14 {e_rate:.2f} [{'ok' if good else 'out of window'}]")
    report(7, ok, "; ".join(parts))


def test_criterion_8_freedman():
    rng = np.random.default_rng(SEED + 8)
    rows = []
    for walk in (SymmetricWalk(), CountingMartingale(U12, (1,), 1)):
        for n in (64, 256):
            rows.extend(freedman_mc(walk, n, [1.0, 2.0, 3.0, 5.0], 10 ** 5, rng))
    bad = [r for r in rows if not r.holds]
    worst = max(r.empirical - r.bound for r in rows)
    report(8, not bad, f"{len(rows) - len(bad)}/{len(rows)} (walk, n, t, side) points within the "
                       f"empirical and fixed-v bounds at 1e5 replicates, max tail - bound {worst:.3f}")


def test_criterion_9_performance():
    rng = np.random.default_rng(SEED + 9)
    geo = RenewalModel(ArrivalDistribution.geometric(0.5))
    start = time.perf_counter()
    sample = U12.sample_stationary(10 ** 4, rng)
    est = fit(sample, 0.1)
    for _ in range(100):
        est.predict(tuple(int(s) for s in rng.integers(0, 2, 2 * 10 ** 4)))
    est2 = fit(geo.sample_stationary(10 ** 4, rng), 0.1)
    est2.predict(sample.data)
    elapsed = time.perf_counter() - start
    report(9, elapsed <= 60, f"two fits at n=1e4 plus 101 queries in {elapsed:.2f}s (limit 60s)")
