#!/usr/bin/env python3
"""
Experiment drivers behind the command-line subcommands.

Every driver draws from streams keyed by (seed, experiment, grid index, rep), so results do not
depend on the number of workers. Each writes its CSV/JSON/SVG artifacts through ReportGenerator
and returns one Verdict per acceptance check.
"""

import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import special
from scipy import stats as sps

from analytic import (ModelParams, C_ab, K_ab, G, V_log, h, log_tail_nu_bar, marginal_exponent,
                      normalizers, pi_variation, psi, psi_tilde, psi_tilde_exceeding, r_m, scrL, tail_nu_bar,
                      truncated_sum_tail_mc, cvx_bound, V1_log)
from capacity import capacity_exact, capacity_ratio, c_infty_series, estimate_c_infty
from database import ExperimentDatabase
from limit import (sample_limit, eval_M, truncation_bound_for, marginal_cdf, time_changed_gumbel_prob,
                   time_changed_gumbel_increments, joint_increment_prob, convexity_gap,
                   counterexample_check)
from process import (STREAM_PROCESS, ProcessRealization, simulate_process, sup_measure, running_max,
                     decomposed_maxima, normalized_max_sample, sample_marginal, _time_range)
from report import ReportGenerator, RunLog
from renewal import StepLaw
from stats import (EmpiricalDistribution, Verdict, geometric_gof, ks_threshold, ks_threshold_two_sample,
                   trend_test, with_retry)
from subordinator import (sample_stable, sample_subordinator_path, first_passage, sample_shift_start,
                          sample_inverse_at_one, sample_regenerative, sample_J_points,
                          mittag_leffler_moment, ml_fractional_moment)
from utils import (ConfigError, DegeneratePath, load_config, retry_seed, stream_rng, format_estimate,
                   format_verdict)
from zeroset import (cardinality_tail_check, sample_zero_sets, find_intersections, estimate_p_bar,
                     joint_sample)

STREAM_SCHEME = "seedsequence-v1"
DEFAULT_SEED = 20240531

# First key of every stream; the process stream id lives in process.py
STREAM_CINF = 1
STREAM_SUBORDINATOR = 2
STREAM_ZEROSET = 3
STREAM_JOINT = 4
STREAM_LIMIT = 5
STREAM_MARGINAL = 6
STREAM_INCREMENTS = 7
STREAM_COUNTEREXAMPLE = 9
STREAM_LEMMA = 10

DEFAULT_REPS = {
    'stable': 100000,
    'laplace': 1000000,
    'first_passage': 100000,
    'shift_start': 100000,
    'ml_moment': 1000000,
    'regenerative': 2000,
    'initial_position': 100000,
    'gap_sets': 20000,
    'cardinality': 10000,
    'intersections': 2000,
    'geometric': 10000,
    'p_bar_sets': 20,
    'p_bar_direct': 2000,
    'set_scaling': 2000,
    'joint': 2000,
    'reference': 100000,
    'limit': 100000,
    'limit_points': 20000,
    'joint_paths': 5000,
    'counterexample': 50000,
    'process': 2000,
    'process_invariants': 1000,
    'marginal_tail': 1000000,
    'lemma_mc': 100000,
}

HIT_INTERVALS = [(0.05, 0.1), (0.3, 0.35), (0.7, 0.75), (0.9, 0.95)]
METRIC_HEADER = ('check', 'case', 'value', 'reference', 'se')


# Configuration

@dataclass
class ExperimentConfig:
    """Validated run configuration; see config_example.json for the file layout."""
    params: ModelParams = field(default_factory=ModelParams)
    n_grid: List[int] = field(default_factory=lambda: [1000, 10000, 100000])
    reps: Dict[str, int] = field(default_factory=lambda: dict(DEFAULT_REPS))
    seed: int = DEFAULT_SEED
    stream_scheme: str = STREAM_SCHEME
    truncation: Tuple[int, int] = (60, 60)
    c_inf_n: int = 100000
    c_inf_reps: int = 100000
    joint_K: int = 1
    joint_m: int = 1
    output_dir: str = "results"
    db_path: str = "evt_cache.db"
    threads: Optional[int] = None

    def summary(self) -> Dict[str, Any]:
        """The parts of the configuration that determine results, for JSON summaries."""
        return {
            'params': self.params.to_dict(),
            'n_grid': list(self.n_grid),
            'reps': dict(sorted(self.reps.items())),
            'seed': self.seed,
            'stream_scheme': self.stream_scheme,
            'truncation': list(self.truncation),
            'c_inf_n': self.c_inf_n,
            'c_inf_reps': self.c_inf_reps,
            'joint_K': self.joint_K,
            'joint_m': self.joint_m,
        }


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _int_field(raw: Dict[str, Any], key: str, minimum: int, default: int) -> int:
    value = raw.get(key, default)
    if not _is_int(value) or value < minimum:
        raise ConfigError(key, f"expected an integer >= {minimum}, got {value!r}")
    return value


def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
    """
    Validate a raw configuration dict.

    Raises:
        ConfigError: naming the offending field path, e.g. 'reps.joint' or 'params'
    """
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")

    params_raw = raw.get('params', {})
    if not isinstance(params_raw, dict):
        raise ConfigError("params", "expected an object")
    unknown = sorted(set(params_raw) - set(ModelParams.__dataclass_fields__))
    if unknown:
        raise ConfigError(f"params.{unknown[0]}", "unknown parameter")
    try:
        params = ModelParams.from_dict(params_raw)
    except (ValueError, TypeError) as e:
        raise ConfigError("params", str(e))

    n_grid = raw.get('n_grid', [1000, 10000, 100000])
    if not isinstance(n_grid, list) or not n_grid or not all(_is_int(n) and n >= 1 for n in n_grid):
        raise ConfigError("n_grid", "expected a nonempty list of positive integers")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigError("n_grid", "must be strictly increasing")

    reps_raw = raw.get('reps', {})
    if not isinstance(reps_raw, dict):
        raise ConfigError("reps", "expected an object")
    reps = dict(DEFAULT_REPS)
    for name, value in reps_raw.items():
        if name not in DEFAULT_REPS:
            raise ConfigError(f"reps.{name}", "unknown replicate count")
        if not _is_int(value) or value < 1:
            raise ConfigError(f"reps.{name}", f"expected an integer >= 1, got {value!r}")
        reps[name] = value

    scheme = raw.get('stream_scheme', STREAM_SCHEME)
    if scheme != STREAM_SCHEME:
        raise ConfigError("stream_scheme", f"only {STREAM_SCHEME!r} is supported, got {scheme!r}")

    truncation = raw.get('truncation', [60, 60])
    if (not isinstance(truncation, (list, tuple)) or len(truncation) != 2
            or not all(_is_int(v) and v >= 1 for v in truncation)):
        raise ConfigError("truncation", "expected two positive integers [K, I]")

    for key in ('output_dir', 'db_path'):
        if key in raw and not isinstance(raw[key], str):
            raise ConfigError(key, "expected a string")
    threads = raw.get('threads')
    if threads is not None and (not _is_int(threads) or threads < 1):
        raise ConfigError("threads", f"expected an integer >= 1, got {threads!r}")

    return ExperimentConfig(
        params=params,
        n_grid=list(n_grid),
        reps=reps,
        seed=_int_field(raw, 'seed', 0, DEFAULT_SEED),
        stream_scheme=scheme,
        truncation=(int(truncation[0]), int(truncation[1])),
        c_inf_n=_int_field(raw, 'c_inf_n', 1000, 100000),
        c_inf_reps=_int_field(raw, 'c_inf_reps', 1, 100000),
        joint_K=_int_field(raw, 'joint_K', 1, 1),
        joint_m=_int_field(raw, 'joint_m', 1, 1),
        output_dir=raw.get('output_dir', "results"),
        db_path=raw.get('db_path', "evt_cache.db"),
        threads=threads,
    )


def load_experiment_config(path: str) -> ExperimentConfig:
    """Read and validate a configuration file; a missing file gives the defaults."""
    return parse_config(load_config(path))


def default_config() -> ExperimentConfig:
    return parse_config({})


# Parallel execution

@dataclass
class RunContext:
    """Everything an experiment driver needs besides its own parameters."""
    config: ExperimentConfig
    reporter: ReportGenerator
    log: RunLog
    db: ExperimentDatabase
    threads: int = 1
    law: Optional[StepLaw] = None
    cache: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.law is None:
            self.law = StepLaw.from_params(self.config.params)

    def say(self, message: str):
        self.log.log(message)

    def c_inf(self) -> float:
        """Pooled cached c_∞ for the configured law; CacheMiss when estimate-cinf never ran."""
        p = self.config.params
        return float(self.db.require_c_infty(p.beta, p.L_kind, p.L_value)['value'])

    def reps(self, name: str) -> int:
        return self.config.reps[name]


def _chunks(total: int, threads: int) -> List[Tuple[int, int]]:
    """(start, count) pieces of range(total), about four per worker."""
    size = max(1, math.ceil(total / (4 * max(1, threads))))
    return [(start, min(size, total - start)) for start in range(0, total, size)]


def _run_parallel(worker: Callable, jobs: List[tuple], threads: int, label: str) -> List[Any]:
    """Run worker over jobs, in a process pool when threads > 1; results keep job order."""
    if threads <= 1 or len(jobs) <= 1:
        results = []
        for i, job in enumerate(jobs, 1):
            results.append(worker(job))
            print(f"  {label}: chunk {i}/{len(jobs)}")
        return results
    results: List[Any] = [None] * len(jobs)
    with ProcessPoolExecutor(max_workers=threads) as executor:
        futures = {executor.submit(worker, job): index for index, job in enumerate(jobs)}
        for i, future in enumerate(as_completed(futures), 1):
            results[futures[future]] = future.result()
            print(f"  {label}: chunk {i}/{len(jobs)}")
    return results


def first_passage_worker(args):
    """Worker: Z^←(levels) on one unshifted path per rep."""
    beta, seed, start, count, levels, dt = args
    levels = np.asarray(levels, dtype=float)
    out = np.empty((count, levels.size))
    for i, rep in enumerate(range(start, start + count)):
        rng = stream_rng(seed, STREAM_SUBORDINATOR, 1, rep)
        path = sample_subordinator_path(beta, float(levels.max()), rng, dt=dt)
        out[i] = first_passage(path, levels)
    return out


def regenerative_worker(args):
    """
    Worker: shifted regenerative sets, their interval hits, two J points each and the
    sup-distance between the J law of a path and its η.
    """
    beta, seed, key, start, count, epsilon, dt, intervals, eta_checks = args
    starts = np.empty(count)
    hits = np.zeros((count, len(intervals)), dtype=bool)
    j_pairs = np.full((count, 2), np.nan)
    violations = 0
    eta_devs = []
    grid = np.linspace(0.0, 1.0, 201)
    for i, rep in enumerate(range(start, start + count)):
        rng = stream_rng(seed, STREAM_SUBORDINATOR, key, rep)
        s = sample_regenerative(beta, epsilon, True, rng, dt=dt)
        starts[i] = s.shift
        for c, (a, b) in enumerate(intervals):
            hits[i, c] = bool(np.any((s.hits >= a) & (s.hits <= b)))
        try:
            j = sample_J_points(s, 2, rng)
        except DegeneratePath:
            continue
        j_pairs[i] = j
        idx = np.searchsorted(s.hits, j)
        left = s.hits[np.clip(idx - 1, 0, s.hits.size - 1)]
        right = s.hits[np.clip(idx, 0, s.hits.size - 1)]
        if np.max(np.minimum(np.abs(j - left), np.abs(j - right))) > epsilon:
            violations += 1
        if rep < eta_checks:
            draws = np.sort(sample_J_points(s, 20000, rng))
            ecdf = np.searchsorted(draws, grid, side='right') / draws.size
            eta_devs.append(float(np.max(np.abs(ecdf - s.eta(grid)))))
    return starts, hits, j_pairs, violations, eta_devs


def intersection_worker(args):
    """Worker: size and diameter of I_{1,1;n} and the index j_{1,1}, per rep."""
    n, beta, L_value, seed, grid_index, start, count = args
    law = StepLaw(beta, L_value)
    rows = []
    for rep in range(start, start + count):
        rng = stream_rng(seed, STREAM_ZEROSET, 10 + grid_index, rep)
        k_set = sample_zero_sets(n, law, 1, rng)[0]
        found = find_intersections(k_set, law=law, rng=rng, k=1)
        if found.partial:
            rows.append((rep, -1, -1, -1))
            continue
        common = found.common_sets[0]
        rows.append((rep, int(common.size), int(common[-1] - common[0]), found.j_indices[0]))
    return rows


def joint_worker(args):
    """Worker: joint_sample records per rep."""
    n, beta, L_value, K, m, seed, grid_index, start, count = args
    law = StepLaw(beta, L_value)
    return [joint_sample(n, law, K, m, stream_rng(seed, STREAM_JOINT, grid_index, rep))
            for rep in range(start, start + count)]


def limit_worker(args):
    """Worker: 𝓜 and its truncation bound over each requested set, per limit sample."""
    params, K, I, seed, key, start, count, with_points, evals, epsilon, dt = args
    p = ModelParams.from_dict(params)
    values = np.empty((count, len(evals)))
    bounds = np.empty((count, len(evals)))
    for i, rep in enumerate(range(start, start + count)):
        rng = stream_rng(seed, STREAM_LIMIT, key, rep)
        s = sample_limit(p, K, I, rng, with_points=with_points, epsilon=epsilon, dt=dt)
        for c, B in enumerate(evals):
            values[i, c] = eval_M(s, B)
            bounds[i, c] = truncation_bound_for(s, B)
    return values, bounds


def process_worker(args):
    """Worker: normalised maxima of process realizations; returns samples and CSV rows."""
    n, params, seed, c_inf, grid_index, start, count, intervals = args
    p = ModelParams.from_dict(params)
    rows: list = []
    dists = normalized_max_sample(n, p, count, intervals, seed, c_inf, rep_offset=start,
                                  grid_index=grid_index, rows=rows)
    return {B: d.sorted_sample for B, d in dists.items()}, rows


# Helpers shared by the drivers

def _ks_tolerance(n: int, floor: float, alpha: float = 0.01) -> float:
    """The larger of a fixed tolerance and the Kolmogorov critical value at level alpha."""
    return max(floor, ks_threshold(n, alpha))


def _mean_se(values) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    se = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), se


def _freq_se(flags) -> Tuple[float, float]:
    flags = np.asarray(flags, dtype=bool)
    p = float(flags.mean())
    return p, float(np.sqrt(p * (1.0 - p) / flags.size))


def _finish(ctx: RunContext, name: str, verdicts: List[Verdict], rows: List[tuple],
            extra: Optional[Dict[str, Any]] = None) -> List[Verdict]:
    ctx.reporter.write_csv(f"{name}.csv", METRIC_HEADER, rows)
    ctx.reporter.write_summary(name, verdicts, ctx.config.summary(), extra)
    for v in verdicts:
        ctx.say(f"  {format_verdict(v.passed)} {v.name}")
    return verdicts


def _regenerative_hits(ctx: RunContext, key: int, reps: int, epsilon: float, dt: float,
                       eta_checks: int = 0):
    cfg = ctx.config
    jobs = [(cfg.params.beta, cfg.seed, key, start, count, epsilon, dt, HIT_INTERVALS, eta_checks)
            for start, count in _chunks(reps, ctx.threads)]
    parts = _run_parallel(regenerative_worker, jobs, ctx.threads, "regenerative sets")
    starts = np.concatenate([part[0] for part in parts])
    hits = np.concatenate([part[1] for part in parts])
    j_pairs = np.concatenate([part[2] for part in parts])
    violations = sum(part[3] for part in parts)
    eta_devs = [d for part in parts for d in part[4]]
    return starts, hits, j_pairs, violations, eta_devs


def _oracle_K(p: ModelParams) -> float:
    return K_ab(p, mittag_leffler_moment(p.beta, 1.0 / C_ab(p)))


# estimate-cinf

def run_estimate_cinf(ctx: RunContext) -> List[Verdict]:
    """Estimate c_∞ by both routes, cache the result and check the routes against the series."""
    cfg, p, law = ctx.config, ctx.config.params, ctx.law
    ctx.say(f"🔢 Estimating c_∞ (β={p.beta}, n={cfg.c_inf_n}, reps={cfg.c_inf_reps})")
    est = estimate_c_infty(law, cfg.c_inf_n, cfg.c_inf_reps, stream_rng(cfg.seed, STREAM_CINF, 0))
    a, b = est.intersection, est.capacity_ratio
    ctx.db.save_c_infty(p.beta, p.L_kind, p.L_value, cfg.c_inf_n, cfg.c_inf_reps, cfg.seed,
                        a.value, a.se, b.value, b.se, est.series)
    entry = ctx.db.get_c_infty(p.beta, p.L_kind, p.L_value, cfg.c_inf_n, cfg.c_inf_reps, cfg.seed)
    pooled = entry['value']
    ctx.say(f"  route (a): {format_estimate(a.value, a.se)}, route (b): {format_estimate(b.value, b.se)}, "
            f"series: {est.series:.5f}")

    rows = [('c_infty', 'intersection', a.value, est.series, a.se),
            ('c_infty', 'capacity_ratio', b.value, est.series, b.se),
            ('c_infty', 'pooled', pooled, est.series, 1.0 / math.hypot(1.0 / a.se, 1.0 / b.se) if a.se and b.se else 0.0)]

    # cap(A₀(0,n))/n along n/10, n/2, n
    sizes = sorted({max(1000, cfg.c_inf_n // 10), max(1000, cfg.c_inf_n // 2), cfg.c_inf_n})
    ratios = []
    for g, n in enumerate(sizes):
        if n == cfg.c_inf_n:
            ratios.append(b)
        else:
            ratios.append(capacity_ratio(law, n, max(1000, cfg.c_inf_reps // 4),
                                         stream_rng(cfg.seed, STREAM_CINF, 1, g)))
        rows.append(('capacity_ratio', f"n={n}", ratios[-1].value, est.series, ratios[-1].se))
    diffs = [abs(r2.value - r1.value) for r1, r2 in zip(ratios, ratios[1:])]
    slack = [3.0 * math.hypot(r1.se, r2.se) for r1, r2 in zip(ratios, ratios[1:])]
    settles = all(d <= s for d, s in zip(diffs, slack)) or all(d2 <= d1 for d1, d2 in zip(diffs, diffs[1:]))

    verdicts = [
        Verdict('cinf_routes_agree', est.routes_agree(3.0),
                {'intersection': a.value, 'intersection_se': a.se,
                 'capacity_ratio': b.value, 'capacity_ratio_se': b.se}, [cfg.seed]),
        Verdict('cinf_in_unit_interval',
                all(0.0 < r.interval()[0] and r.interval()[1] < 1.0 for r in (a, b)),
                {'pooled': pooled}, [cfg.seed]),
        Verdict('cinf_matches_series',
                all(abs(r.value - est.series) <= 3.0 * r.se for r in (a, b)),
                {'series': est.series, 'pooled': pooled}, [cfg.seed]),
        Verdict('cinf_ratio_settles', settles, {'differences': diffs, 'slack': slack}, [cfg.seed]),
    ]
    return _finish(ctx, 'estimate-cinf', verdicts, rows)


# simulate-subordinator

def run_simulate_subordinator(ctx: RunContext) -> List[Verdict]:
    """Stable sampler, first-passage times, shifted start, Mittag-Leffler moments, regenerative sets."""
    cfg, p = ctx.config, ctx.config.params
    beta, seed = p.beta, cfg.seed
    verdicts, rows = [], []
    ctx.say(f"🎲 Subordinator checks (β={beta})")

    # β = 1/2 against 1/(2G²)
    n = ctx.reps('stable')
    half = EmpiricalDistribution(sample_stable(0.5, 1.0, stream_rng(seed, STREAM_SUBORDINATOR, 10), n))
    ks = half.ks_distance(lambda s: special.erfc(1.0 / (2.0 * np.sqrt(s))))
    rows.append(('stable_half_ks', f"n={n}", ks, 0.0, 0.0))
    verdicts.append(Verdict('stable_half_ks', ks < _ks_tolerance(n, 0.005), {'ks': ks, 'n': n}, [seed]))

    # Laplace transform and scale additivity
    n_lap = ctx.reps('laplace')
    laplace_ok = True
    for c, (b, scale) in enumerate([(0.25, 1.0), (0.4, 2.0)]):
        draws = sample_stable(b, scale, stream_rng(seed, STREAM_SUBORDINATOR, 11, c), n_lap)
        for theta in (0.5, 1.0, 2.0):
            mean, se = _mean_se(np.exp(-theta * draws))
            oracle = math.exp(-scale * theta ** b)
            laplace_ok &= abs(mean - oracle) <= 3.0 * se
            rows.append(('laplace', f"beta={b},scale={scale},theta={theta}", mean, oracle, se))
    verdicts.append(Verdict('stable_laplace', laplace_ok, {'draws': n_lap}, [seed]))

    rng = stream_rng(seed, STREAM_SUBORDINATOR, 12)
    summed = EmpiricalDistribution(sample_stable(beta, 1.0, rng, n) + sample_stable(beta, 1.0, rng, n))
    doubled = EmpiricalDistribution(sample_stable(beta, 2.0, rng, n))
    ks_add = summed.ks_two_sample(doubled)
    verdicts.append(Verdict('stable_scale_additivity', ks_add <= ks_threshold_two_sample(n, n, 0.01),
                            {'ks': ks_add}, [seed]))

    # First-passage times on simulated paths
    levels = [0.5, 1.0, 2.0, 4.0]
    n_paths = ctx.reps('first_passage')
    jobs = [(beta, seed, start, count, levels, 1e-4) for start, count in _chunks(n_paths, ctx.threads)]
    z = np.concatenate(_run_parallel(first_passage_worker, jobs, ctx.threads, "subordinator paths"))
    means = []
    for c, level in enumerate(levels):
        mean, se = _mean_se(z[:, c])
        means.append(mean)
        rows.append(('inverse_mean', f"t={level}", mean, level ** beta / special.gamma(1.0 + beta), se))
    mean1, se1 = _mean_se(z[:, 1])
    oracle1 = 1.0 / special.gamma(1.0 + beta)
    verdicts.append(Verdict('inverse_mean_at_one', abs(mean1 - oracle1) <= 3.0 * se1,
                            {'mean': mean1, 'se': se1, 'oracle': oracle1}, [seed]))
    slope = float(np.polyfit(np.log(levels), np.log(means), 1)[0])
    verdicts.append(Verdict('inverse_exponent_fit', abs(slope - beta) <= 0.01, {'slope': slope}, [seed]))

    paths_at_one = EmpiricalDistribution(z[:, 1])
    exact = EmpiricalDistribution(sample_inverse_at_one(beta, stream_rng(seed, STREAM_SUBORDINATOR, 13), n_paths))
    ks_exact = paths_at_one.ks_two_sample(exact)
    ks_self = EmpiricalDistribution(z[:, 2] / 2.0 ** beta).ks_two_sample(exact)
    threshold = ks_threshold_two_sample(n_paths, n_paths, 0.01)
    verdicts.append(Verdict('inverse_matches_exact_sampler', ks_exact <= threshold, {'ks': ks_exact}, [seed]))
    verdicts.append(Verdict('inverse_self_similarity', ks_self <= threshold, {'ks': ks_self}, [seed]))
    ctx.reporter.plot_ecdf('inverse_at_one.svg', {'paths': paths_at_one, 'exact S^-β': exact},
                           title=f"Z^←(1), β={beta}")

    # Shifted start
    n_shift = ctx.reps('shift_start')
    shift = EmpiricalDistribution(sample_shift_start(beta, stream_rng(seed, STREAM_SUBORDINATOR, 14), n_shift))
    ks_shift = shift.ks_distance(lambda x: np.clip(x, 0.0, 1.0) ** (1.0 - beta))
    verdicts.append(Verdict('shift_start_law', ks_shift < _ks_tolerance(n_shift, 0.005), {'ks': ks_shift}, [seed]))

    # Mittag-Leffler moments
    moment_ok = True
    for c, q in enumerate((1.0 / C_ab(p), 1.0)):
        est = ml_fractional_moment(beta, q, ctx.reps('ml_moment'), stream_rng(seed, STREAM_SUBORDINATOR, 15, c))
        moment_ok &= est.within(3.0)
        rows.append(('ml_moment', f"q={q:.6g}", est.value, est.oracle, est.se))
    verdicts.append(Verdict('ml_moments', moment_ok, {}, [seed]))

    # Regenerative sets
    epsilon = 1e-3
    n_reg = ctx.reps('regenerative')
    starts, hits, j_pairs, violations, eta_devs = _regenerative_hits(ctx, 2, n_reg, epsilon, 1e-4, eta_checks=20)
    ks_min = EmpiricalDistribution(starts).ks_distance(lambda x: np.clip(x, 0.0, 1.0) ** (1.0 - beta))
    verdicts.append(Verdict('regenerative_min_law', ks_min <= ks_threshold(n_reg, 0.01), {'ks': ks_min}, [seed]))
    verdicts.append(Verdict('J_within_epsilon', violations == 0, {'violations': violations}, [seed]))
    ok = ~np.isnan(j_pairs[:, 0])
    ks_j = EmpiricalDistribution(j_pairs[ok, 0]).ks_two_sample(EmpiricalDistribution(j_pairs[ok, 1]))
    verdicts.append(Verdict('J_exchangeable', ks_j <= ks_threshold_two_sample(ok.sum(), ok.sum(), 0.01),
                            {'ks': ks_j}, [seed]))
    eta_dev = max(eta_devs) if eta_devs else 0.0
    verdicts.append(Verdict('J_law_is_eta', eta_dev <= 2 * epsilon + ks_threshold(20000, 0.01),
                            {'max_deviation': eta_dev}, [seed]))
    for c, (a, b) in enumerate(HIT_INTERVALS):
        freq, se = _freq_se(hits[:, c])
        rows.append(('regenerative_hit', f"[{a},{b}]", freq, float('nan'), se))
    return _finish(ctx, 'simulate-subordinator', verdicts, rows)


# simulate-zerosets

def run_simulate_zerosets(ctx: RunContext) -> List[Verdict]:
    """Gap law, first point, cardinalities, intersections, waiting times and set scaling."""
    cfg, p, law = ctx.config, ctx.config.params, ctx.law
    beta, seed = p.beta, cfg.seed
    c_inf = ctx.c_inf()
    grid = cfg.n_grid
    n_mid, n_max = grid[min(1, len(grid) - 1)], grid[-1]
    verdicts, rows = [], []
    ctx.say(f"🔗 Zero-set checks (β={beta}, n ∈ {grid})")

    # First point of I_{0;n}/n
    n_init = ctx.reps('initial_position')
    first = law.sample_initial(n_max, stream_rng(seed, STREAM_ZEROSET, 1), n_init) / float(n_max)
    ks_first = EmpiricalDistribution(first).ks_distance(lambda x: np.clip(x, 0.0, 1.0) ** (1.0 - beta))
    verdicts.append(Verdict('first_point_law', ks_first < _ks_tolerance(n_init, 0.01), {'ks': ks_first}, [seed]))

    # Gap law, with the last step of each set censored by the horizon
    sets = sample_zero_sets(n_mid, law, ctx.reps('gap_sets'), stream_rng(seed, STREAM_ZEROSET, 2))
    observed = np.concatenate([z.gaps() for z in sets])
    censored = np.array([n_mid - z.points[-1] for z in sets], dtype=float)
    censored = censored[censored > 0]
    km = sps.ecdf(sps.CensoredData(uncensored=observed.astype(float), right=censored))
    ks_grid = np.arange(1, int(np.quantile(observed, 0.9)) + 1)
    gap_dev = float(np.max(np.abs(km.sf.evaluate(ks_grid) - law.tail(ks_grid))))
    verdicts.append(Verdict('gap_law', gap_dev < 0.01, {'max_deviation': gap_dev, 'steps': observed.size}, [seed]))

    # Cardinality of I_{0;n}
    band, card_ok, tail_ok = [], True, True
    for g, n in enumerate(grid):
        rng = stream_rng(seed, STREAM_ZEROSET, 3, g)
        counts = np.array([len(z) for z in sample_zero_sets(n, law, ctx.reps('cardinality'), rng)])
        mean, se = _mean_se(counts)
        exact = (n + 1) / law.wandering_rate(n)
        card_ok &= abs(mean - exact) <= 3.0 * se
        band.append(mean * float(law.tail(n)) / (1.0 - beta))
        rows.append(('cardinality_mean', f"n={n}", mean, exact, se))
        tail = cardinality_tail_check(counts, law, n)
        tail_ok &= tail.ok
        for x, freq, bound in zip(tail.levels, tail.frequencies, tail.bounds):
            rows.append(('cardinality_tail', f"n={n},x={x}", freq, bound, math.sqrt(bound * (1.0 - bound) / counts.size)))
    verdicts.append(Verdict('cardinality_mean', card_ok, {}, [seed]))
    verdicts.append(Verdict('cardinality_band', all(0.8 <= v <= 1.25 for v in band), {'scaled': band}, [seed]))
    verdicts.append(Verdict('cardinality_tail', tail_ok, {}, [seed]))

    # First intersection I_{1,1;n}
    card_bound_ok, concentration, concentration_se = True, [], []
    for g, n in enumerate(grid):
        jobs = [(n, beta, p.L_value, seed, g, start, count)
                for start, count in _chunks(ctx.reps('intersections'), ctx.threads)]
        found = np.array([row for part in _run_parallel(intersection_worker, jobs, ctx.threads, f"intersections n={n}")
                          for row in part])
        complete = found[found[:, 1] >= 1]
        sizes, diameters = complete[:, 1], complete[:, 2]
        for m in range(1, 11):
            freq, se = _freq_se(sizes >= m)
            bound = (1.0 - c_inf) ** (m - 1)
            card_bound_ok &= freq <= bound + 3.0 * se
            rows.append(('intersection_size_tail', f"n={n},m={m}", freq, bound, se))
        freq, se = _freq_se(diameters / float(n) > 0.05)
        concentration.append(freq)
        concentration_se.append(se)
        rows.append(('intersection_spread', f"n={n}", freq, 0.0, se))
        rows.append(('intersection_partial', f"n={n}", 1.0 - complete.shape[0] / found.shape[0], 0.0, 0.0))
    verdicts.append(Verdict('intersection_size_geometric', card_bound_ok, {'c_inf': c_inf}, [seed]))
    slack = [3.0 * math.hypot(a, b) for a, b in zip(concentration_se, concentration_se[1:])]
    verdicts.append(Verdict('intersection_concentrates',
                            all(b <= a + s for a, b, s in zip(concentration, concentration[1:], slack)),
                            {'spread_frequency': concentration}, [seed]))

    # Waiting time j_{k,1} − k for a frozen I_k
    n = grid[0]
    rng = stream_rng(seed, STREAM_ZEROSET, 4)
    k_set = sample_zero_sets(n, law, 1, rng)[0]
    p_bar = capacity_exact(k_set.points, law) / law.wandering_rate(n)
    mask = np.zeros(n + 1, dtype=bool)
    mask[k_set.points] = True
    target = ctx.reps('geometric')
    success_index, scanned = [], 0
    while len(success_index) < target and scanned < 1000 * target:
        batch = sample_zero_sets(n, law, 4096, rng)
        flags = np.array([mask[z.points].any() for z in batch])
        success_index.extend((scanned + np.flatnonzero(flags) + 1).tolist())
        scanned += len(batch)
    waits = np.diff(np.concatenate(([0], success_index[:target])))
    gof = geometric_gof(waits, p_bar)
    verdicts.append(Verdict('waiting_time_geometric', gof.pvalue > 1e-3,
                            {'p_bar': p_bar, 'chi2': float(gof.statistic), 'p_value': float(gof.pvalue)}, [seed]))
    rows.append(('waiting_time_mean', f"n={n}", float(waits.mean()), 1.0 / p_bar, float(waits.std(ddof=1) / math.sqrt(waits.size))))

    # p̄ directly and through the capacity
    disagreements = 0
    for c in range(ctx.reps('p_bar_sets')):
        rng = stream_rng(seed, STREAM_ZEROSET, 5, c)
        frozen = sample_zero_sets(n_mid, law, 1, rng)[0]
        est = estimate_p_bar(frozen, law, ctx.reps('p_bar_direct'), rng)
        if abs(est.direct - est.via_capacity) > 3.0 * math.hypot(est.direct_se, est.via_capacity_se):
            disagreements += 1
        rows.append(('p_bar_direct', f"set={c}", est.direct, est.exact, est.direct_se))
        rows.append(('p_bar_capacity', f"set={c}", est.via_capacity, est.exact, est.via_capacity_se))
    verdicts.append(Verdict('p_bar_routes_agree', disagreements <= 1, {'disagreements': disagreements}, [seed]))

    # Disjointified intersections partition the common points
    rng = stream_rng(seed, STREAM_ZEROSET, 6)
    partition_ok = True
    for _ in range(50):
        k_set = sample_zero_sets(grid[0], law, 1, rng)[0]
        record = find_intersections(k_set, law=law, rng=rng, max_i=5, k=1)
        union = np.unique(np.concatenate(record.common_sets)) if record.common_sets else np.empty(0)
        parts = np.concatenate(record.disjointified) if record.disjointified else np.empty(0)
        partition_ok &= parts.size == union.size and np.array_equal(np.sort(parts), union)
    verdicts.append(Verdict('disjointification_partitions', bool(partition_ok), {}, [seed]))

    # I_{1;n}/n against the shifted regenerative set
    n_scale = ctx.reps('set_scaling')
    sets = sample_zero_sets(n_max, law, n_scale, stream_rng(seed, STREAM_ZEROSET, 7))
    _, limit_hits, _, _, _ = _regenerative_hits(ctx, 3, n_scale, 1e-3, 1e-4)
    scaling_ok = True
    for c, (a, b) in enumerate(HIT_INTERVALS):
        f_n, se_n = _freq_se([z.hits(a, b) for z in sets])
        f_lim, se_lim = _freq_se(limit_hits[:, c])
        scaling_ok &= abs(f_n - f_lim) <= 0.02 + 3.0 * math.hypot(se_n, se_lim)
        rows.append(('set_scaling_hits', f"[{a},{b}]", f_n, f_lim, math.hypot(se_n, se_lim)))
    verdicts.append(Verdict('set_scaling', scaling_ok, {'n': n_max}, [seed]))

    # Doney's condition for the step law
    doney = float(np.max(law.doney_ratio(np.arange(1, 10 ** 6 + 1))))
    verdicts.append(Verdict('doney_ratio_bounded', doney <= beta + 0.1, {'max_ratio': doney}, [seed]))
    return _finish(ctx, 'simulate-zerosets', verdicts, rows)


# theorem-4joint

def run_theorem_4joint(ctx: RunContext) -> List[Verdict]:
    """Joint law of scaled p̄, scaled waiting times, scaled sets and intersection locations."""
    cfg, p = ctx.config, ctx.config.params
    K, m, seed = cfg.joint_K, cfg.joint_m, cfg.seed
    c_inf = ctx.c_inf()
    ctx.say(f"🧩 Joint convergence (K={K}, m={m}, n ∈ {cfg.n_grid})")
    reference = EmpiricalDistribution(
        c_inf * sample_inverse_at_one(p.beta, stream_rng(seed, STREAM_JOINT, 1000), ctx.reps('reference'), shifted=True))
    _, limit_hits, _, _, _ = _regenerative_hits(ctx, 4, ctx.reps('set_scaling'), 1e-3, 1e-4)
    limit_freq = limit_hits.mean(axis=0)

    table, rows = [], []
    ks_groups, ks_final, wait_ks, partial_rates = [], [], [], []
    ecdfs = {}
    for g, n in enumerate(cfg.n_grid):
        jobs = [(n, p.beta, p.L_value, K, m, seed, g, start, count)
                for start, count in _chunks(ctx.reps('joint'), ctx.threads)]
        draws = [records for part in _run_parallel(joint_worker, jobs, ctx.threads, f"joint n={n}") for records in part]
        partial_rates.append(float(np.mean([r.partial for records in draws for r in records])))
        for k in range(1, K + 1):
            rows_k = [records[k - 1] for records in draws]
            scaled = EmpiricalDistribution([r.scaled_p_bar for r in rows_k])
            ks = scaled.ks_two_sample(reference)
            table.append((n, k, 'p_bar_scaled', scaled.median(), reference.median(), ks))
            if k == 1:
                ks_final.append(ks)
                ecdfs[f"n={n}"] = scaled
                batches = np.array_split(np.array([r.scaled_p_bar for r in rows_k]), 10)
                ks_groups.append([EmpiricalDistribution(b).ks_two_sample(reference) for b in batches if b.size])
            for i in range(1, m + 1):
                waits = [r.waits[i - 1] for r in rows_k if len(r.waits) >= i]
                if not waits:
                    continue
                dist = EmpiricalDistribution(waits)
                ks_wait = dist.ks_distance(lambda x, i=i: sps.gamma.cdf(x, i))
                table.append((n, k, f"wait_{i}", dist.median(), float(sps.gamma.median(i)), ks_wait))
                if k == 1 and i == 1:
                    wait_ks.append(ks_wait)
            hit_freq = np.array([[np.any((r.set_scaled >= a) & (r.set_scaled <= b)) for a, b in HIT_INTERVALS]
                                 for r in rows_k]).mean(axis=0)
            table.append((n, k, 'set_hits', float(np.max(np.abs(hit_freq - limit_freq))), 0.0, float('nan')))
            for i in range(1, m + 1):
                spreads = [float(np.ptp(r.common_scaled[i - 1])) for r in rows_k if len(r.common_scaled) >= i]
                if spreads:
                    table.append((n, k, f"common_{i}_spread", float(np.mean(spreads)), 0.0, float('nan')))
    ctx.reporter.write_csv('theorem-4joint_table.csv', ('n', 'k', 'component', 'empirical', 'limit', 'statistic'), table)
    ctx.reporter.plot_ecdf('p_bar_scaled.svg', dict(ecdfs, limit=reference),
                           title=f"(w_n/ϑ_n)·p̄ vs c_∞Z*^←(1)")
    ctx.reporter.plot_trend('p_bar_ks.svg', cfg.n_grid, ks_final, title="KS of scaled p̄", ylabel="KS")

    for n, ks in zip(cfg.n_grid, ks_final):
        rows.append(('p_bar_ks', f"n={n}", ks, 0.0, 0.0))
    final_threshold = ks_threshold_two_sample(ctx.reps('joint'), ctx.reps('reference'), 0.01)
    verdicts = [
        p_bar_trend_verdict(ks_groups, ks_final, final_threshold, seed),
        Verdict('wait_exponential', bool(wait_ks and wait_ks[-1] < 0.03), {'ks': wait_ks}, [seed]),
        Verdict('scan_complete', partial_rates[-1] <= 0.01, {'partial_rate': partial_rates}, [seed]),
    ]
    return _finish(ctx, 'theorem-4joint', verdicts, rows)


def p_bar_trend_verdict(ks_groups: List[List[float]], ks_final: List[float], final_threshold: float,
                        seed: int) -> Verdict:
    """
    KS distances of the scaled p̄ must fall along the n-grid (Kendall tau < 0, p < 0.05).

    Whether the last distance is under the two-sample threshold is reported, not required.
    """
    trend = trend_test(ks_groups) if len(ks_groups) >= 2 else None
    return Verdict('p_bar_ks_trend', bool(trend is not None and trend.decreasing),
                   {'ks': ks_final, 'tau': None if trend is None else trend.tau,
                    'p_value': None if trend is None else trend.p_value,
                    'final_ks_threshold': final_threshold,
                    'final_below_threshold': bool(ks_final[-1] <= final_threshold),
                    'grid_points': len(ks_groups)}, [seed])


# simulate-process

def run_simulate_process(ctx: RunContext) -> List[Verdict]:
    """Normalised maxima against the limit marginal plus pathwise invariants of X."""
    cfg, p, law = ctx.config, ctx.config.params, ctx.law
    seed = cfg.seed
    c_inf = ctx.c_inf()
    K_value = _oracle_K(p)
    intervals = [(0.0, 1.0), (0.0, 0.5)]
    params_key = ctx.db.generate_key(sorted(p.to_dict().items()))
    reps = ctx.reps('process')
    ctx.say(f"📈 Process maxima (n ∈ {cfg.n_grid}, reps={reps}, c_∞={c_inf:.5f})")

    verdicts, rows, maxima_rows = [], [], []
    ks_values, medians, ecdfs = [], [], {}
    order_violations = 0
    for g, n in enumerate(cfg.n_grid):
        ctx.db.save_normalizers(params_key, normalizers(n, c_inf, p, law))
        jobs = [(n, p.to_dict(), seed, c_inf, g, start, count, intervals)
                for start, count in _chunks(reps, ctx.threads)]
        parts = _run_parallel(process_worker, jobs, ctx.threads, f"process n={n}")
        whole = EmpiricalDistribution(np.concatenate([part[0][intervals[0]] for part in parts]), {'n': n})
        chunk_rows = [row for part in parts for row in part[1]]
        maxima_rows.extend(chunk_rows)
        raw = {}
        for row in chunk_rows:
            raw.setdefault(row[2], {})[row[3]] = row[4]
        order_violations += sum(1 for r in raw.values() if r['[0.0,1.0]'] < r['[0.0,0.5]'])
        ks = whole.ks_distance(lambda x: marginal_cdf(1.0, x, p, K_value))
        ks_values.append(ks)
        medians.append(whole.median())
        ecdfs[f"n={n}"] = whole
        rows.append(('normalized_max_ks', f"n={n}", ks, 0.0, 0.0))
        rows.append(('normalized_max_median', f"n={n}", whole.median(),
                     -math.log(-math.log(0.5) / K_value), 0.0))
    ctx.reporter.write_csv('process_maxima.csv', ('n', 'seed', 'rep', 'interval', 'raw', 'normalized'), maxima_rows)
    ctx.reporter.plot_ecdf('process_maxima.svg', ecdfs, cdf=lambda x: marginal_cdf(1.0, x, p, K_value),
                           title="(𝓜_n([0,1]) − b_n)/a_n")
    ctx.reporter.plot_trend('process_ks.svg', cfg.n_grid, ks_values, title="KS to the limit marginal", ylabel="KS")
    slack = ks_threshold(reps, 0.05)
    verdicts.append(Verdict('process_ks_nonincreasing',
                            all(b <= a + slack for a, b in zip(ks_values, ks_values[1:])),
                            {'ks': ks_values, 'slack': slack}, [seed]))
    verdicts.append(Verdict('process_median_band', float(np.ptp(medians)) <= 2.0, {'medians': medians}, [seed]))
    verdicts.append(Verdict('interval_monotone', order_violations == 0, {'violations': order_violations}, [seed]))

    verdicts.extend(_process_invariants(ctx, rows))

    # Marginal tail through the exact thinning sampler
    draws = sample_marginal(p, ctx.reps('marginal_tail'), stream_rng(seed, STREAM_MARGINAL, 1))
    ratios, ratio_ses = [], []
    for q in (0.99, 0.999, 0.9999):
        x = float(np.quantile(draws, q))
        freq, se = _freq_se(draws > x)
        nu = float(tail_nu_bar(max(x, p.x0), p))
        ratios.append(freq / nu)
        ratio_ses.append(se / nu)
        rows.append(('marginal_tail_ratio', f"q={q}", freq / nu, 1.0, se / nu))
    nonincreasing = all(b <= a + 3.0 * math.hypot(sa, sb)
                        for a, b, sa, sb in zip(ratios, ratios[1:], ratio_ses, ratio_ses[1:]))
    verdicts.append(Verdict('marginal_tail_ratio', nonincreasing and ratios[-1] >= 0.7, {'ratios': ratios}, [seed]))
    return _finish(ctx, 'simulate-process', verdicts, rows)


def _process_invariants(ctx: RunContext, rows: List[tuple]) -> List[Verdict]:
    """Pathwise identities on realizations at the smallest n, each counted in violations."""
    cfg, p, law = ctx.config, ctx.config.params, ctx.law
    n, seed = cfg.n_grid[0], cfg.seed
    table = normalizers(n, ctx.c_inf(), p, law)
    violations = {name: 0 for name in ('sparse_dense', 'positivity', 'sup_additive', 'running_max',
                                       'series_order', 'truncation', 'decomposition')}
    K_levels = (1, 2, 5, 10, 20)
    attained = np.zeros(len(K_levels))
    values_at = {0: [], n // 2: [], n: []}
    reps = ctx.reps('process_invariants')
    for rep in range(reps):
        rng = stream_rng(seed, STREAM_PROCESS, 100, rep)
        r = simulate_process(n, law, p, rng)
        dense = r.dense_values()
        for t in values_at:
            values_at[t].append(r.value_at(t))

        in_support = np.zeros(n + 1, dtype=bool)
        in_support[r.support] = True
        violations['positivity'] += int(np.any(dense < 0.0) or np.any((dense > 0.0) != in_support))
        for B in ((0.0, 1.0), (0.2, 0.7), (0.5, 0.5)):
            first, last = _time_range(n, B)
            violations['sparse_dense'] += int(sup_measure(r, B) != dense[first:last + 1].max())
        joined = sup_measure(r, (0.0, 0.7))
        violations['sup_additive'] += int(joined != max(sup_measure(r, (0.0, 0.4)), sup_measure(r, (0.4, 0.7))))
        t_grid = np.linspace(0.0, 1.0, 21)
        run = running_max(r, t_grid)
        violations['running_max'] += int(np.any(np.diff(run) < 0.0)
                                         or not np.array_equal(run, [sup_measure(r, (0.0, t)) for t in t_grid]))

        if not r.degenerate:
            perm = rng.permutation(len(r.zero_sets))
            shuffled = ProcessRealization(n=n, w_n=r.w_n, gammas=r.gammas[perm], heights=r.heights[perm],
                                          zero_sets=[r.zero_sets[i] for i in perm])
            violations['series_order'] += int(not np.array_equal(shuffled.support, r.support)
                                              or not np.allclose(shuffled.support_values, r.support_values,
                                                                 rtol=1e-12, atol=0.0))
        beyond = math.exp(math.log(r.w_n) + float(log_tail_nu_bar(p.x0, p))) * np.array([1.0001, 2.0, 10.0])
        violations['truncation'] += int(np.any(V1_log(math.log(r.w_n) - np.log(beyond), p) != 0.0))

        record = decomposed_maxima(r, (0.0, 1.0), K=max(K_levels), I=3, table=table)
        per_ki = [v for v in record.per_ki.values() if np.isfinite(v)]
        bad = record.upto_K > record.raw or any(v > record.raw for v in per_ki)
        if len(r.zero_sets) <= max(K_levels) and not r.degenerate:
            bad |= record.upto_K != record.raw
        violations['decomposition'] += int(bad)
        prefix = np.maximum.accumulate(record.per_k)
        attained += [prefix[k - 1] == record.raw for k in K_levels]

    frequencies = attained / reps
    for k, f in zip(K_levels, frequencies):
        rows.append(('max_attained_by_K', f"K={k}", float(f), 1.0, 0.0))
    for name, count in violations.items():
        rows.append(('invariant_violations', name, count, 0, 0.0))

    stationarity = [EmpiricalDistribution(values_at[a]).ks_two_sample(EmpiricalDistribution(values_at[b]))
                    for a, b in ((0, n // 2), (0, n), (n // 2, n))]
    X0_full = EmpiricalDistribution(values_at[0])
    X0_exact = EmpiricalDistribution(sample_marginal(p, 100000, stream_rng(seed, STREAM_MARGINAL, 2)))
    ks_marginal = X0_full.ks_two_sample(X0_exact)
    return [
        Verdict('process_invariants', sum(violations.values()) == 0, dict(violations), [seed]),
        Verdict('max_attained_nondecreasing_in_K', bool(np.all(np.diff(frequencies) >= 0.0)),
                {'frequencies': frequencies.tolist()}, [seed]),
        Verdict('process_stationary', max(stationarity) <= ks_threshold_two_sample(reps, reps, 0.01),
                {'ks': stationarity}, [seed]),
        Verdict('marginal_sampler_agrees', ks_marginal <= ks_threshold_two_sample(reps, X0_exact.n, 0.01),
                {'ks': ks_marginal}, [seed]),
    ]


# sample-limit, compare-marginal, joint-increments, counterexample

LIMIT_EVALS = [1.0, 0.01, (0.0, 0.3), (0.3, 0.6), (0.6, 0.9), (0.0, 0.5), (0.5, 1.0)]


def _limit_pool(ctx: RunContext) -> Tuple[np.ndarray, np.ndarray]:
    """Limit samples with locations, shared by sample-limit and joint-increments within a run."""
    if 'limit_pool' not in ctx.cache:
        cfg = ctx.config
        K, I = cfg.truncation
        jobs = [(cfg.params.to_dict(), K, I, cfg.seed, 1, start, count, True, LIMIT_EVALS, 1e-3, 1e-3)
                for start, count in _chunks(ctx.reps('limit_points'), ctx.threads)]
        parts = _run_parallel(limit_worker, jobs, ctx.threads, "limit samples")
        ctx.cache['limit_pool'] = (np.concatenate([v for v, _ in parts]), np.concatenate([b for _, b in parts]))
    return ctx.cache['limit_pool']


def run_sample_limit(ctx: RunContext) -> List[Verdict]:
    """Stationarity, truncation bounds and small-t behaviour of the sampled limit."""
    cfg, p = ctx.config, ctx.config.params
    K, I = cfg.truncation
    seed = cfg.seed
    C = C_ab(p)
    ctx.say(f"🌌 Limit sampler (K={K}, I={I})")
    values, bounds = _limit_pool(ctx)
    n = values.shape[0]
    verdicts, rows = [], []

    windows = [2, 3, 4]
    tolerance = max(0.01, ks_threshold_two_sample(n, n, 0.01)) + float(bounds[:, windows].mean(axis=0).max())
    stationarity = [EmpiricalDistribution(values[:, a]).ks_two_sample(EmpiricalDistribution(values[:, b]))
                    for a, b in ((2, 3), (2, 4), (3, 4))]
    for (a, b), ks in zip(((2, 3), (2, 4), (3, 4)), stationarity):
        rows.append(('stationarity_ks', f"{LIMIT_EVALS[a]} vs {LIMIT_EVALS[b]}", ks, 0.0, 0.0))
    verdicts.append(Verdict('limit_stationary', max(stationarity) <= tolerance,
                            {'ks': stationarity, 'tolerance': tolerance}, [seed]))

    K_value = _oracle_K(p)
    freq, se = _freq_se(values[:, 1] <= -3.0)
    predicted = float(marginal_cdf(0.01, -3.0, p, K_value))
    rows.append(('small_t_frequency', 't=0.01,x=-3', freq, predicted, se))
    verdicts.append(Verdict('small_t_frequency', freq >= predicted - 3.0 * se,
                            {'frequency': freq, 'predicted': predicted}, [seed]))

    monotone, identity, nested = True, True, True
    for rep in range(200):
        s = sample_limit(p, 2 * K, 2 * I, stream_rng(seed, STREAM_LIMIT, 2, rep), with_points=False)
        smaller = s.truncate(K, I)
        monotone &= smaller.truncation_bound >= s.truncation_bound
        nested &= eval_M(smaller, 1.0) <= eval_M(s, 1.0)
        identity &= np.allclose(s.lambdas, -np.log(s.gamma_k)[:, None]
                                + (-np.log(s.gamma_ki) + np.log(s.z_inv_1)[:, None]) / C, rtol=1e-12, atol=0.0)
    verdicts.append(Verdict('truncation_bound_monotone', bool(monotone and nested), {}, [seed]))
    verdicts.append(Verdict('level_identity', bool(identity), {}, [seed]))
    rows.append(('truncation_bound_mean', f"K={K},I={I}", float(bounds[:, 0].mean()), 0.0,
                 float(bounds[:, 0].std(ddof=1) / math.sqrt(n))))
    return _finish(ctx, 'sample-limit', verdicts, rows)


def run_compare_marginal(ctx: RunContext) -> List[Verdict]:
    """𝕄(1) from the sampler against exp(−K e^{−x}), with K from a Monte Carlo moment."""
    cfg, p = ctx.config, ctx.config.params
    K, I = cfg.truncation
    seed = cfg.seed
    C = C_ab(p)
    ctx.say("📐 Limit marginal")
    moment = ml_fractional_moment(p.beta, 1.0 / C, ctx.reps('ml_moment'), stream_rng(seed, STREAM_MARGINAL, 3))
    K_mc, K_oracle = K_ab(p, moment.value), K_ab(p, moment.oracle)

    jobs = [(p.to_dict(), K, I, seed, 3, start, count, False, [1.0], 1e-3, 1e-3)
            for start, count in _chunks(ctx.reps('limit'), ctx.threads)]
    parts = _run_parallel(limit_worker, jobs, ctx.threads, "limit marginal")
    values = np.concatenate([v for v, _ in parts])[:, 0]
    bound = float(np.concatenate([b for _, b in parts])[:, 0].mean())
    dist = EmpiricalDistribution(values)
    ks = dist.ks_distance(lambda x: marginal_cdf(1.0, x, p, K_mc))
    ctx.reporter.plot_ecdf('limit_marginal.svg', {'sampler': dist}, cdf=lambda x: marginal_cdf(1.0, x, p, K_mc),
                           title="𝕄(1)", cdf_label="exp(−K e^{−x})")

    rho = marginal_exponent(p)
    xs = np.linspace(-3.0, 5.0, 33)
    affine_err = max(float(np.max(np.abs(marginal_cdf(t, xs, p, K_oracle)
                                         - marginal_cdf(1.0, xs - rho * math.log(t), p, K_oracle))))
                     for t in (0.1, 0.5, 2.0))
    gumbel_err = max(abs(time_changed_gumbel_prob(0.4, 1.0, x, x, p, K_oracle) - float(marginal_cdf(1.0, x, p, K_oracle)))
                     for x in xs)
    rows = [('marginal_ks', 't=1', ks, 0.0, 0.0),
            ('K_ab', 'monte_carlo', K_mc, K_oracle, K_ab(p, moment.value + moment.se) - K_mc),
            ('self_affinity_error', 't in {0.1,0.5,2}', affine_err, 0.0, 0.0),
            ('gumbel_reduction_error', 'x1=x2', gumbel_err, 0.0, 0.0)]
    verdicts = [
        Verdict('marginal_ks', ks < 0.01 + bound, {'ks': ks, 'truncation_bound': bound}, [seed]),
        Verdict('K_moment', moment.within(3.0) and K_mc > 0.0, {'K_mc': K_mc, 'K_oracle': K_oracle}, [seed]),
        Verdict('self_affinity', affine_err <= 1e-12, {'error': affine_err}, [seed]),
        Verdict('gumbel_reduction', gumbel_err <= 1e-12, {'error': gumbel_err}, [seed]),
    ]
    return _finish(ctx, 'compare-marginal', verdicts, rows)


def run_joint_increments(ctx: RunContext) -> List[Verdict]:
    """Joint law of 𝓜 over consecutive intervals: reductions, sampler check, Gumbel comparison."""
    cfg, p = ctx.config, ctx.config.params
    seed = cfg.seed
    K_value = _oracle_K(p)
    paths = ctx.reps('joint_paths')
    ctx.say("🧮 Joint increments")
    verdicts, rows = [], []

    reduction_ok = True
    for c, x in enumerate((0.0, 1.0)):
        est = joint_increment_prob([1.0], [x], p, paths, stream_rng(seed, STREAM_INCREMENTS, 1, c))
        closed = float(marginal_cdf(1.0, x, p, K_value))
        reduction_ok &= abs(est.value - closed) <= 3.0 * est.se + 0.002
        rows.append(('single_interval', f"x={x}", est.value, closed, est.se))
    verdicts.append(Verdict('single_interval_reduction', bool(reduction_ok), {}, [seed]))

    infinite = joint_increment_prob([0.5, 1.0], [np.inf, np.inf], p, paths, stream_rng(seed, STREAM_INCREMENTS, 2))
    verdicts.append(Verdict('infinite_levels', infinite.value == 1.0, {'value': infinite.value}, [seed]))

    x1, x2 = 0.0, 1.0
    formula = joint_increment_prob([0.5, 1.0], [x1, x2], p, paths, stream_rng(seed, STREAM_INCREMENTS, 3))
    values, bounds = _limit_pool(ctx)
    freq, se = _freq_se((values[:, 5] <= x1) & (values[:, 6] <= x2))
    bound = float(np.maximum(bounds[:, 5], bounds[:, 6]).mean())
    rows.append(('two_intervals', f"x=({x1},{x2})", freq, formula.value, math.hypot(se, formula.se)))
    verdicts.append(Verdict('two_interval_sampler', abs(freq - formula.value) <= 3.0 * math.hypot(se, formula.se) + bound,
                            {'sampler': freq, 'formula': formula.value, 'truncation_bound': bound}, [seed]))

    gumbel = time_changed_gumbel_increments([0.5, 1.0], [x1, x2], p, K_value)
    rows.append(('gumbel_increments', f"x=({x1},{x2})", gumbel, formula.value, formula.se))
    verdicts.append(Verdict('not_time_changed_gumbel', formula.value - gumbel >= 3.0 * formula.se,
                            {'formula': formula.value, 'gumbel': gumbel}, [seed]))
    return _finish(ctx, 'joint-increments', verdicts, rows)


def run_counterexample(ctx: RunContext) -> List[Verdict]:
    """The increment law is not that of a time-changed Gumbel extremal process."""
    cfg, p = ctx.config, ctx.config.params
    seed = cfg.seed
    ctx.say("⚖️  Counterexample")
    scalar = convexity_gap(1.0, 2.0, 1.5, 3.0)
    linear = convexity_gap(1.0, 2.0, 1.5, 1.0)
    result = counterexample_check(0.5, 1.0, 0.0, 1.0, p, ctx.reps('counterexample'),
                                  stream_rng(seed, STREAM_COUNTEREXAMPLE, 1))
    equal = counterexample_check(0.5, 1.0, 0.5, 0.5, p, 200, stream_rng(seed, STREAM_COUNTEREXAMPLE, 2))
    rows = [('convexity_gap', 'C=3,(1,2,1.5)', scalar, 5.25, 0.0),
            ('convexity_gap', 'C=1,(1,2,1.5)', linear, 0.0, 0.0),
            ('moment_gap', 'x=(0,1)', result.gap, 0.0, result.se),
            ('moment_gap', 'x=(0.5,0.5)', equal.gap, 0.0, equal.se)]
    verdicts = [
        Verdict('convexity_scalar', abs(scalar - 5.25) <= 1e-12 and abs(linear) <= 1e-12 and result.scalar_ok,
                {'gap': scalar}, [seed]),
        Verdict('moment_gap_positive', result.gap >= 3.0 * result.se,
                {'gap': result.gap, 'se': result.se, 'split': result.split, 'joint': result.joint}, [seed]),
        Verdict('moment_gap_vanishes_at_equal_levels', abs(equal.gap) <= 1e-9 * max(1.0, abs(equal.split)),
                {'gap': equal.gap}, [seed]),
    ]
    return _finish(ctx, 'counterexample', verdicts, rows)


# lemma-suite

def run_lemma_suite(ctx: RunContext) -> List[Verdict]:
    """Deterministic properties of the analytic module, plus one Monte Carlo tail bound."""
    cfg, p = ctx.config, ctx.config.params
    seed = cfg.seed
    ctx.say("📚 Analytic identities")
    verdicts, rows = [], []

    variants = {
        'configured': p,
        'alpha0.7_gamma2': replace(p, alpha=0.7, gamma=2.0),
        'logpower': replace(p, L_alpha_kind='logpower', L_alpha_value=0.5),
    }
    worst = 0.0
    for name, q in variants.items():
        x = np.geomspace(q.x0, 1e6, 60)
        back = V_log(-log_tail_nu_bar(x, q), q)
        err = float(np.max(np.abs(back - x) / x))
        worst = max(worst, err)
        rows.append(('V_round_trip', name, err, 0.0, 0.0))
    verdicts.append(Verdict('V_round_trip', worst <= 1e-8, {'max_relative_error': worst}, [seed]))

    x, delta = 100.0, 1e-4
    derivative = float(G(x * math.exp(delta), p) - G(x * math.exp(-delta), p)) / (x * 2.0 * math.sinh(delta))
    reference = float(h(G(x, p), p))
    g_err = abs(x * derivative - reference) / reference
    rows.append(('G_derivative', 'x=100', x * derivative, reference, 0.0))
    verdicts.append(Verdict('G_derivative_identity', g_err <= 1e-6, {'relative_error': g_err}, [seed]))

    pi_cases = [(0.5, 12), (2.0, 12), (10.0, 24)]
    pi_errs = []
    for t, decade in pi_cases:
        err = abs(pi_variation(t, decade * math.log(10.0), p) - math.log(t))
        pi_errs.append(err)
        rows.append(('pi_variation', f"t={t},x=1e{decade}", err, 0.0, 0.0))
    ten = [abs(pi_variation(10.0, d * math.log(10.0), p) - math.log(10.0)) for d in (6, 12, 24)]
    verdicts.append(Verdict('pi_variation', max(pi_errs) <= 0.05 and ten[0] > ten[1] > ten[2],
                            {'errors': pi_errs, 'errors_t10': ten}, [seed]))

    log_x = 12 * math.log(10.0)
    ratio = float(V_log(log_x, p) / (log_x ** (1.0 / p.alpha) * scrL(log_x, p)))
    scr_limit = float(scrL(1e6, p))
    rows.append(('V_asymptotic_ratio', 'x=1e12', ratio, 1.0, 0.0))
    rows.append(('scrL_limit', 'x=1e6', scr_limit, p.alpha ** (1.0 / p.alpha), 0.0))
    verdicts.append(Verdict('V_asymptotic', abs(ratio - 1.0) <= 0.02, {'ratio': ratio}, [seed]))
    if p.L_alpha_kind == 'constant' and p.L_alpha_value == 1.0:
        verdicts.append(Verdict('scrL_limit', abs(scr_limit / p.alpha ** (1.0 / p.alpha) - 1.0) <= 0.01,
                                {'value': scr_limit}, [seed]))

    psi_ok, constants_ok = True, True
    for a in np.linspace(0.1, 0.9, 10):
        for b in np.linspace(0.05, 0.45, 10):
            q = replace(p, alpha=float(a), beta=float(b))
            ms = np.arange(1, 21)
            roots = r_m(ms, q)
            psi_ok &= bool(np.all(roots < ms / (ms + 1.0) - b))
            psi_ok &= bool(np.allclose(psi(roots, q), ms, rtol=1e-8, atol=0.0))
            r = (1.0 - b) * np.linspace(0.0, 0.999, 400)
            psi_ok &= bool(np.all(np.diff(psi(r, q)) > 0.0))
            inner = r[1:]
            psi_ok &= bool(np.all(psi_tilde(inner, q) > inner + b))
            near = (1.0 - b) - np.logspace(-2, -12, 6)
            blowup = psi_tilde(near, q)
            psi_ok &= bool(np.all(np.diff(blowup) > 0.0) and blowup[-1] > 2.0 * blowup[0])
            C = C_ab(q)
            constants_ok &= C > 1.0 and K_ab(q, mittag_leffler_moment(float(b), 1.0 / C)) > 0.0
    r1 = float(r_m(1, p))
    round_trip = abs(float(psi(r1, p)) - 1.0)
    r_big = psi_tilde_exceeding(1e3, p)
    big = float('nan') if r_big is None else float(psi_tilde(r_big, p))
    rows.append(('psi_round_trip', 'm=1', round_trip, 0.0, 0.0))
    rows.append(('psi_tilde_blowup', f"r={r_big}", big, 1e3, 0.0))
    verdicts.append(Verdict('psi_properties', psi_ok and round_trip <= 1e-10, {'r_1': r1}, [seed]))
    if r_big is None:
        # unresolvable in double precision for this alpha; recorded, not asserted
        verdicts.append(Verdict('psi_tilde_unbounded', True, {'skipped': True, 'alpha': p.alpha}, [seed]))
    else:
        verdicts.append(Verdict('psi_tilde_unbounded', big > 1e3, {'r': r_big, 'value': big}, [seed]))
    verdicts.append(Verdict('constants_positive', bool(constants_ok), {}, [seed]))

    # normalizers
    law = ctx.law
    w_ratio = law.wandering_rate(10 ** 6) / ((10 ** 6) ** (1.0 - law.beta) / ((1.0 - law.beta) * law.L(10 ** 6)))
    c_inf = c_infty_series(law)
    tables = [normalizers(10 ** e, c_inf, p, law) for e in range(3, 8)]
    ab = [t.a_n / t.b_n for t in tables]
    for e, value in zip(range(3, 8), ab):
        rows.append(('a_over_b', f"n=1e{e}", value, 0.0, 0.0))
    verdicts.append(Verdict('wandering_rate_asymptotic', 0.98 <= w_ratio <= 1.02, {'ratio': w_ratio}, [seed]))
    verdicts.append(Verdict('a_over_b_decreasing', all(b < a for a, b in zip(ab, ab[1:])), {'ratios': ab}, [seed]))
    doney = float(np.max(law.doney_ratio(np.arange(1, 10 ** 6 + 1))))
    verdicts.append(Verdict('doney_ratio_bounded', doney <= law.beta + 0.1, {'max_ratio': doney}, [seed]))

    # Tail of two truncated jumps
    b_level, y = 10.0, 15.0
    prob, se = truncated_sum_tail_mc(p, b_level, 2, y, ctx.reps('lemma_mc'), stream_rng(seed, STREAM_LEMMA, 1))
    bound = cvx_bound(p, b_level, 1, y)
    rows.append(('truncated_sum_tail', f"b={b_level},y={y}", prob, bound, se))
    verdicts.append(Verdict('truncated_sum_bound', prob <= bound + 3.0 * se, {'mc': prob, 'bound': bound}, [seed]))
    return _finish(ctx, 'lemma-suite', verdicts, rows)


# Registry

EXPERIMENTS: Dict[str, Callable[[RunContext], List[Verdict]]] = {
    'estimate-cinf': run_estimate_cinf,
    'simulate-subordinator': run_simulate_subordinator,
    'simulate-zerosets': run_simulate_zerosets,
    'theorem-4joint': run_theorem_4joint,
    'simulate-process': run_simulate_process,
    'sample-limit': run_sample_limit,
    'compare-marginal': run_compare_marginal,
    'joint-increments': run_joint_increments,
    'counterexample': run_counterexample,
    'lemma-suite': run_lemma_suite,
}

# estimate-cinf precedes every experiment that reads its cached value
ACCEPTANCE_ORDER = [
    'lemma-suite', 'simulate-subordinator', 'estimate-cinf', 'simulate-zerosets', 'theorem-4joint',
    'sample-limit', 'compare-marginal', 'joint-increments', 'counterexample', 'simulate-process',
]


def run_experiment(ctx: RunContext, name: str) -> List[Verdict]:
    """
    Run one experiment under the retry policy.

    A failed check is rerun once on a second fixed seed derived from the configured one.
    The JSON summary is rewritten with the merged verdicts when the retry happened.
    """
    driver = EXPERIMENTS[name]
    seeds_run: List[int] = []

    def attempt(seed: int) -> List[Verdict]:
        seeds_run.append(seed)
        if seed == ctx.config.seed:
            return driver(ctx)
        ctx.say(f"🔁 Retrying {name} with seed {seed}")
        return driver(replace(ctx, config=replace(ctx.config, seed=seed), cache={}))

    verdicts = with_retry(attempt, ctx.config.seed, retry_seed(ctx.config.seed))
    if len(seeds_run) > 1:
        ctx.reporter.write_summary(name, verdicts, ctx.config.summary(), {'retry_seed': seeds_run[1]})
        for v in verdicts:
            ctx.say(f"  {format_verdict(v.passed)} {v.name}")
    return verdicts


def run_acceptance(ctx: RunContext) -> Dict[str, List[Verdict]]:
    """
    Run every experiment in ACCEPTANCE_ORDER.

    An experiment that raises is recorded as one failed verdict and the run continues.
    """
    results: Dict[str, List[Verdict]] = {}
    for name in ACCEPTANCE_ORDER:
        ctx.say(f"\n▶️  {name}")
        try:
            results[name] = run_experiment(ctx, name)
        except Exception as e:
            ctx.say(f"❌ {name} failed: {e}")
            results[name] = [Verdict(f"{name}_completed", False, {'error': str(e)}, [ctx.config.seed])]
    report = ctx.reporter.generate_report(results, ctx.config.summary())
    path = ctx.reporter.save_report(report)
    ctx.reporter.print_report(report)
    ctx.say(f"📄 Report saved to: {path}")
    return results
