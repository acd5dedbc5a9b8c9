"""Command-line front end: ``rcx simulate | fit | experiment ...``.

Exit status: 0 success, 2 parameter or parse error, 3 statistical acceptance
failure, 4 internal invariant violation.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .core import Past
from .errors import ContextExhausted, InvariantViolation, RCXError
from .estimator import fit
from .eval import (
    CountingMartingale,
    SymmetricWalk,
    freedman_mc,
    good_oracle_campaign,
    minimax_experiment,
)
from .formats import format_sample, format_table, load_model_spec, load_sample
from .models import RenewalModel

EXIT_PARAM = 2
EXIT_STAT = 3
EXIT_INVARIANT = 4
SLOPE_WINDOW = (0.7, 1.3)


class AcceptanceFailure(Exception):
    pass


class _Group(click.Group):
    """Maps package exceptions onto exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except AcceptanceFailure as exc:
            click.echo(f"acceptance failure: {exc}", err=True)
            ctx.exit(EXIT_STAT)
        except InvariantViolation as exc:
            click.echo(f"internal invariant violated: {exc}", err=True)
            ctx.exit(EXIT_INVARIANT)
        except ContextExhausted as exc:
            click.echo(f"error: {exc} (need {exc.required - exc.depth} more symbols)", err=True)
            ctx.exit(EXIT_PARAM)
        except (RCXError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_PARAM)


def _int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}") from None


def _float_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}") from None


def _write(text: str, out: str | None, default_name: str | None = None) -> Path | None:
    if out is None:
        click.echo(text, nl=False)
        return None
    path = Path(out)
    if default_name is not None:
        path.mkdir(parents=True, exist_ok=True)
        path = path / default_name
    path.write_text(text)
    return path


def _header(command: str, config: dict) -> dict:
    return {"rcx": __version__, "command": command, "config": config}


seed_option = click.option("--seed", type=int, envvar="RCX_SEED", default=0, show_default=True,
                           help="Master seed (also read from RCX_SEED).")
jobs_option = click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
                           help="Worker processes for replicates.")


@click.group(cls=_Group)
@click.version_option(__version__, prog_name="rcx")
def main():
    """Random-context estimation of transition probabilities."""


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--n", type=click.IntRange(min=1), required=True, help="Sample length.")
@seed_option
@click.option("--out", type=click.Path(dir_okay=False), help="Output file (default stdout).")
def simulate(model_path, n, seed, out):
    """Draw a stationary sample of length n from a model spec."""
    model = load_model_spec(model_path)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    sample = model.sample_stationary(n, rng)
    header = {"rcx": __version__, "command": "simulate", "model": Path(model_path).name,
              "n": n, "seed": seed}
    _write(format_sample(sample, header), out)


@main.command("fit")
@click.option("--sample", "sample_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--delta", type=float, required=True, help="Confidence parameter in (0, 1).")
@click.option("--context", help="Query past, most recent symbol last.")
@click.option("--context-file", type=click.Path(exists=True, dir_okay=False),
              help="Read the query past from a sample-format file.")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              help="Model spec; adds per-depth oracle-bound values.")
@click.option("--L-grid", "l_grid", callback=_int_list, help="Depths for oracle-bound values.")
def fit_cmd(sample_path, delta, context, context_file, model_path, l_grid):
    """Fit on a sample file and print the prediction record for one past as JSON."""
    sample, _ = load_sample(sample_path)
    if (context is None) == (context_file is None):
        raise click.UsageError("give exactly one of --context or --context-file")
    if context_file is not None:
        ctx_sample, _ = load_sample(context_file, sample.alphabet)
        buffer = ctx_sample.data
    else:
        buffer = sample.alphabet.encode(context)
    past = Past(buffer)
    est = fit(sample, delta)
    syms = sample.alphabet.symbols
    comps = est.rcr_components(past)
    record = {
        "n": sample.n,
        "delta": delta,
        "h_hat": est.h_hat(past),
        "prediction": dict(zip(syms, est.predict_probs(past).tolist())),
        "components": [
            {"k": c.k, "suffix": sample.alphabet.decode(past.suffix(c.k)), "weight": c.weight,
             "kernel": dict(zip(syms, c.kernel.probs.tolist()))}
            for c in comps
        ],
    }
    if model_path is not None:
        model = load_model_spec(model_path)
        grid = l_grid if l_grid is not None else list(range(min(past.depth, 16) + 1))
        rows = []
        for L in grid:
            w = past.suffix(L)
            s = float(model.p_minus(w).sum())
            c = est.index.count(w, est.n - 1)
            rhs = est.oracle_bound(s, c)
            rows.append({"L": L, "p_minus_sum": s, "count": c,
                         "rhs": rhs if math.isfinite(rhs) else None})
        record["oracle_bound"] = rows
    click.echo(json.dumps(record, indent=2))


@main.group()
def experiment():
    """Replicated campaigns writing CSV results."""


def _renewal(model_path) -> RenewalModel:
    model = load_model_spec(model_path)
    if not isinstance(model, RenewalModel):
        raise click.BadParameter("this campaign needs a renewal model spec", param_hint="--model")
    return model


@experiment.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gamma", type=float, required=True, help="Moment exponent; δ = n^-(1+γ/2).")
@click.option("--n-grid", callback=_int_list, default="1024,2048,4096,8192,16384", show_default=True)
@click.option("--reps", type=click.IntRange(min=1), default=50, show_default=True)
@click.option("--probes", type=click.IntRange(min=2), default=100, show_default=True,
              help="Independent pasts per loss estimate.")
@click.option("--c2", type=float, default=1.0, show_default=True)
@seed_option
@jobs_option
@click.option("--out", type=click.Path(file_okay=False), required=True)
def minimax(model_path, gamma, n_grid, reps, probes, c2, seed, jobs, out):
    """Loss against n with the rate-tuned δ; fits the log-log slope."""
    model = _renewal(model_path)
    res = minimax_experiment(model.arrival, gamma, n_grid, reps, seed, m_pasts=probes, c2=c2, jobs=jobs)
    config = dict(res.config, model=Path(model_path).name)
    cols = ["record", "n", "rep", "delta", "loss", "loss_se", "k_star", "event_E", "min_context_ratio",
            "median_loss", "mean_loss", "reference", "event_E_rate", "slope"]
    rows = [dict(record="replicate", **{k: getattr(r, k) for k in cols[1:9]}) for r in res.rows]
    rows += [dict(record="aggregate", delta=a["n"] ** -(1 + gamma / 2), **a) for a in res.aggregates]
    rows.append(dict(record="slope", slope=res.diagnostics["slope"]))
    _write(format_table(_header("experiment minimax", config), cols, rows), out, "minimax.csv")
    plot = [dict(n=a["n"], median_loss=a["median_loss"], reference=a["reference"]) for a in res.aggregates]
    _write(format_table(_header("experiment minimax (plot data)", config),
                        ["n", "median_loss", "reference"], plot), out, "minimax_plot.csv")
    slope = res.diagnostics["slope"]
    click.echo(f"slope {slope:.4f}")
    if not SLOPE_WINDOW[0] <= slope <= SLOPE_WINDOW[1]:
        raise AcceptanceFailure(f"slope {slope:.4f} outside {SLOPE_WINDOW}")


def _campaign(model_path, n, delta, reps, probes, l_grid, seed, jobs):
    model = load_model_spec(model_path)
    grid = l_grid if l_grid is not None else list(range(17))
    camp = good_oracle_campaign(model, n, delta, reps, seed, probes=probes, L_grid=grid, jobs=jobs)
    config = dict(camp.config, model=Path(model_path).name)
    return camp, config


_campaign_options = [
    click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False)),
    click.option("--n", type=click.IntRange(min=1), default=4096, show_default=True),
    click.option("--delta", type=float, default=0.1, show_default=True),
    click.option("--reps", type=click.IntRange(min=1), default=200, show_default=True),
    click.option("--probes", type=click.IntRange(min=1), default=50, show_default=True),
    click.option("--L-grid", "l_grid", callback=_int_list),
    seed_option,
    jobs_option,
    click.option("--out", type=click.Path(file_okay=False), required=True),
]


def campaign_options(fn):
    for opt in reversed(_campaign_options):
        fn = opt(fn)
    return fn


@experiment.command("good-event")
@campaign_options
def good_event(model_path, n, delta, reps, probes, l_grid, seed, jobs, out):
    """Frequency of Good-event violations across replicates."""
    camp, config = _campaign(model_path, n, delta, reps, probes, l_grid, seed, jobs)
    cols = ["record", "rep", "good", "violations", "checked_pairs", "failure_rate", "threshold"]
    rows = [dict(record="replicate", rep=o.rep, good=o.good, violations=o.good_violations,
                 checked_pairs=o.checked_pairs) for o in camp.outcomes]
    rate, thr = camp.good_failure_rate, camp.threshold()
    rows.append(dict(record="aggregate", failure_rate=rate, threshold=thr))
    _write(format_table(_header("experiment good-event", config), cols, rows), out, "good_event.csv")
    click.echo(f"violation frequency {rate:.4f} (threshold {thr:.4f})")
    if rate > thr:
        raise AcceptanceFailure(f"violation frequency {rate} above {thr}")


@experiment.command()
@campaign_options
def oracle(model_path, n, delta, reps, probes, l_grid, seed, jobs, out):
    """Frequency of pastwise oracle-bound violations across replicates."""
    camp, config = _campaign(model_path, n, delta, reps, probes, l_grid, seed, jobs)
    cols = ["record", "rep", "holds", "worst_margin", "good", "mean_h_hat", "failure_rate", "threshold"]
    rows = [dict(record="replicate", rep=o.rep, holds=o.oracle_holds, worst_margin=o.worst_margin,
                 good=o.good, mean_h_hat=o.mean_h_hat) for o in camp.outcomes]
    rate, thr = camp.oracle_failure_rate, camp.threshold()
    rows.append(dict(record="aggregate", failure_rate=rate, threshold=thr))
    _write(format_table(_header("experiment oracle", config), cols, rows), out, "oracle.csv")
    click.echo(f"bound violation frequency {rate:.4f} (threshold {thr:.4f})")
    if rate > thr:
        raise AcceptanceFailure(f"bound violation frequency {rate} above {thr}")


@experiment.command()
@click.option("--walk", type=click.Choice(["pm1", "counting"]), default="pm1", show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              help="Model spec for the counting martingale.")
@click.option("--word", default="1", show_default=True, help="Context w of the counting martingale.")
@click.option("--symbol", default="1", show_default=True, help="Symbol a of the counting martingale.")
@click.option("--n-grid", callback=_int_list, default="64,256", show_default=True)
@click.option("--t-grid", callback=_float_list, default="1,2,3,5", show_default=True)
@click.option("--reps", type=click.IntRange(min=1), default=100000, show_default=True)
@seed_option
@click.option("--out", type=click.Path(file_okay=False), required=True)
def freedman(walk, model_path, word, symbol, n_grid, t_grid, reps, seed, out):
    """Empirical martingale tails against the Freedman-type bounds."""
    if walk == "pm1":
        spec = SymmetricWalk()
        config_walk = {"walk": "pm1"}
    else:
        if model_path is None:
            raise click.UsageError("--walk counting needs --model")
        model = load_model_spec(model_path)
        alpha = model.alphabet
        spec = CountingMartingale(model, alpha.encode(word), alpha.index(symbol))
        config_walk = {"walk": "counting", "model": Path(model_path).name, "word": word, "symbol": symbol}
    config = dict(config_walk, n_grid=n_grid, t_grid=t_grid, reps=reps, seed=seed)
    cols = ["n", "t", "side", "empirical", "p_v_positive", "bound", "slack", "fixed_v", "holds"]
    rows = []
    for ni, n in enumerate(n_grid):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ni,)))
        for r in freedman_mc(spec, n, t_grid, reps, rng):
            rows.append(dict(n=r.n, t=r.t, side=r.side, empirical=r.empirical,
                             p_v_positive=r.p_v_positive, bound=r.bound, slack=r.slack,
                             fixed_v=";".join(f"{v!r}:{e!r}:{b!r}" for v, e, b in r.fixed_v),
                             holds=r.holds))
    _write(format_table(_header("experiment freedman", config), cols, rows), out, "freedman.csv")
    bad = [r for r in rows if not r["holds"]]
    click.echo(f"{len(rows) - len(bad)}/{len(rows)} grid points within bounds")
    if bad:
        raise AcceptanceFailure(f"{len(bad)} grid points exceed their bounds")


if __name__ == "__main__":
    sys.exit(main())
