"""Simulation scenarios, oracle prediction errors and MSE grids.

Three data-generating scenarios are provided:

``isotonic``
    ``n = 100`` covariates ``U(0, 1)``, responses ``N(f(x), 1)`` with the
    step function ``f(x) = 2 ceil(5x) - 6``; learner: isotonic regression.
``logistic``
    ``n = 100`` rows of 4 standard normal features and 2 three-level
    categorical features (levels drawn with probabilities 0.1, 0.1, 0.8,
    one-hot encoded); Bernoulli responses; learner: ridge-penalized
    logistic regression.
``friedman``
    ``n = 1000`` covariates ``U[0, 1]^10``, responses ``N(f(x), 1)`` with
    the Friedman #1 function; any learner can be plugged in (ridge
    regression by default).

Covariates are drawn once per scenario seed and held fixed; each
replication redraws the responses only.  Replication ``r`` draws from
stream ``r + 1`` of the run seed, so results do not depend on how the
replications are spread over worker processes.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .errors import UnsupportedOperation
from .estimators import NormalMeansData, cb_alpha, cv_alpha, kfold_cv, sure
from .glm import (LogisticLearner, LogisticModel, MonteCarloValue, cv_glm,
                  kfold_cv_logistic, oracle_pe_glm, plugin_H)
from .predictors import (IsotonicLearner, IsotonicPredictor, LearnerPredictor,
                         RidgeLearner, as_predictor)
from .rng import RngSpec, as_generator

__all__ = [
    "Scenario",
    "ScenarioSpec",
    "MethodSpec",
    "MseReport",
    "isotonic_truth",
    "friedman1",
    "gen_isotonic",
    "gen_logistic",
    "gen_friedman1",
    "build_problem",
    "NormalProblem",
    "LogisticProblem",
    "oracle_pe_normal",
    "oracle_pe",
    "run_mse_grid",
    "paired_gap",
    "write_csv",
    "CSV_HEADER",
]

log = logging.getLogger(__name__)

CSV_HEADER = ("scenario", "method", "alpha", "k", "replications", "mse", "stderr", "dropped")

LOGISTIC_BETA = np.array([1.0, -1.0, 1.0, -1.0])
LOGISTIC_GAMMA = np.array([0.5, -0.5, 0.0])
LOGISTIC_LEVEL_PROBS = (0.1, 0.1, 0.8)


class Scenario(str, enum.Enum):
    ISOTONIC = "isotonic"
    LOGISTIC = "logistic"
    FRIEDMAN = "friedman"


_DEFAULT_N = {Scenario.ISOTONIC: 100, Scenario.LOGISTIC: 100, Scenario.FRIEDMAN: 1000}


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: Scenario
    n: Optional[int] = None
    sigma2: float = 1.0
    seed: RngSpec = RngSpec(0)

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.n is None:
            object.__setattr__(self, "n", _DEFAULT_N[self.scenario])
        if not isinstance(self.seed, RngSpec):
            object.__setattr__(self, "seed", RngSpec(int(self.seed)))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def isotonic_truth(x):
    return 2.0 * np.ceil(5.0 * np.asarray(x, dtype=float)) - 6.0


def friedman1(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return (10.0 * np.sin(np.pi * X[:, 0] * X[:, 1]) + 20.0 * (X[:, 2] - 0.5) ** 2
            + 10.0 * X[:, 3] + 5.0 * X[:, 4])


def _covariate_rng(spec):
    return spec.seed.generator(0)


def _response_rng(spec, rng):
    return spec.seed.generator(1) if rng is None else as_generator(rng)


def _isotonic_covariates(spec):
    x = _covariate_rng(spec).uniform(0.0, 1.0, spec.n)
    return x, isotonic_truth(x)


def _logistic_covariates(spec):
    gen = _covariate_rng(spec)
    cts = gen.standard_normal((spec.n, 4))
    levels = [gen.choice(3, size=spec.n, p=LOGISTIC_LEVEL_PROBS) for _ in range(2)]
    onehot = [np.eye(3)[lv] for lv in levels]
    eta = cts @ LOGISTIC_BETA + sum(LOGISTIC_GAMMA[lv] for lv in levels)
    return np.hstack([cts] + onehot), eta


def _friedman_covariates(spec):
    X = _covariate_rng(spec).uniform(0.0, 1.0, (spec.n, 10))
    return X, friedman1(X)


def gen_isotonic(spec: ScenarioSpec, rng=None):
    """Return ``(x, y, truth)`` for the isotonic scenario."""
    x, truth = _isotonic_covariates(spec)
    y = truth + np.sqrt(spec.sigma2) * _response_rng(spec, rng).standard_normal(spec.n)
    return x, y, truth


def gen_logistic(spec: ScenarioSpec, rng=None):
    """Return ``(design, y, eta)``: 10-column design (4 continuous, 2x3
    one-hot), Bernoulli responses and the true linear predictor."""
    X, eta = _logistic_covariates(spec)
    y = (_response_rng(spec, rng).random(spec.n) < expit(eta)).astype(float)
    return X, y, eta


def gen_friedman1(spec: ScenarioSpec, rng=None):
    """Return ``(design, y, truth)`` for the Friedman #1 scenario; columns
    6-10 of the design are pure noise."""
    X, truth = _friedman_covariates(spec)
    y = truth + np.sqrt(spec.sigma2) * _response_rng(spec, rng).standard_normal(spec.n)
    return X, y, truth


# ---------------------------------------------------------------------------
# Problems: fixed covariates plus the learners used on them
# ---------------------------------------------------------------------------

@dataclass
class NormalProblem:
    spec: ScenarioSpec
    design: np.ndarray
    truth: np.ndarray
    predictor: object
    learner: object

    @property
    def sigma2(self):
        return self.spec.sigma2

    def draw(self, gen):
        return self.truth + np.sqrt(self.sigma2) * gen.standard_normal(self.truth.size)


@dataclass
class LogisticProblem:
    spec: ScenarioSpec
    design: np.ndarray
    eta: np.ndarray
    learner: LogisticLearner
    model: LogisticModel = field(init=False)

    def __post_init__(self):
        self.model = LogisticModel(self.design)

    def draw(self, gen):
        return (gen.random(self.eta.size) < expit(self.eta)).astype(float)


def build_problem(spec: ScenarioSpec, learner=None, ridge: float = 1.0):
    """Fix the covariates of a scenario and attach its learner."""
    if spec.scenario is Scenario.ISOTONIC:
        x, truth = _isotonic_covariates(spec)
        return NormalProblem(spec, x, truth, IsotonicPredictor(x), learner or IsotonicLearner())
    if spec.scenario is Scenario.FRIEDMAN:
        X, truth = _friedman_covariates(spec)
        learner = learner or RidgeLearner(1.0)
        return NormalProblem(spec, X, truth, LearnerPredictor(learner, X), learner)
    X, eta = _logistic_covariates(spec)
    return LogisticProblem(spec, X, eta, learner or LogisticLearner(X, ridge=ridge))


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def _mc_value(vals):
    vals = np.asarray(vals, dtype=float)
    se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return MonteCarloValue(float(vals.mean()), se, vals.size)


def oracle_pe_normal(g, problem, n_mc: int, rng, integrate_test: bool = True) -> MonteCarloValue:
    """Monte Carlo estimate of ``PE(g) = E ||g(Y) - Y~||^2``.

    ``g`` is a response map, or a learner (refit on every draw of ``Y``).
    With ``integrate_test`` the independent copy ``Y~`` is integrated out
    exactly (``||g(Y) - truth||^2 + n sigma2``); otherwise it is sampled.
    """
    if isinstance(problem, ScenarioSpec):
        problem = build_problem(problem)
    if hasattr(g, "fit") and not hasattr(g, "evaluate"):
        g = LearnerPredictor(g, problem.design)
    g = as_predictor(g)
    gen = as_generator(rng)
    n = problem.truth.size
    vals = np.empty(n_mc)
    for i in range(n_mc):
        fit = g.evaluate(problem.draw(gen))
        if integrate_test:
            r = fit - problem.truth
            vals[i] = r @ r + n * problem.sigma2
        else:
            r = fit - problem.draw(gen)
            vals[i] = r @ r
    return _mc_value(vals)


def oracle_pe(problem, n_mc: int, rng) -> MonteCarloValue:
    """Oracle prediction error of the scenario's own learner."""
    if isinstance(problem, LogisticProblem):
        mean_s = problem.model.mean_suff_stat(problem.eta)
        return oracle_pe_glm(problem.model, problem.learner, problem.draw, n_mc, rng,
                             test_mean_suff_stat=mean_s)
    return oracle_pe_normal(problem.predictor, problem, n_mc, rng)


# ---------------------------------------------------------------------------
# MSE grids
# ---------------------------------------------------------------------------

_NORMAL_METHODS = {"antithetic", "cb", "kfold", "sure"}
_LOGISTIC_METHODS = {"antithetic", "independent", "kfold"}


@dataclass(frozen=True)
class MethodSpec:
    method: str
    alpha: float = 0.0
    k: int = 0

    def __post_init__(self):
        m = str(getattr(self.method, "value", self.method))
        object.__setattr__(self, "method", m)
        if m not in _NORMAL_METHODS | _LOGISTIC_METHODS:
            raise ValueError(f"unknown method {m!r}")
        if m in ("antithetic", "cb", "independent") and not self.alpha > 0:
            raise ValueError(f"alpha must be positive for {m}, got {self.alpha}")
        if m in ("antithetic", "kfold") and self.k < 2:
            raise ValueError(f"k must be >= 2 for {m}, got {self.k}")
        if m in ("cb", "independent") and self.k < 1:
            raise ValueError(f"k must be >= 1 for {m}, got {self.k}")


@dataclass(frozen=True)
class MseReport:
    """Mean squared error of one estimator against the oracle PE.

    ``squared_errors`` keeps the per-replication values (NaN where the
    estimator failed) for paired comparisons.
    """

    scenario: str
    method: str
    alpha: float
    k: int
    replications: int
    mse: float
    mc_stderr: float
    dropped: int
    squared_errors: np.ndarray = field(repr=False, compare=False, default=None)

    def __eq__(self, other):
        if not isinstance(other, MseReport):
            return NotImplemented
        return (self.csv_row() == other.csv_row()
                and np.array_equal(self.squared_errors, other.squared_errors, equal_nan=True))

    def csv_row(self):
        return (self.scenario, self.method, repr(float(self.alpha)), str(int(self.k)),
                str(self.replications), repr(float(self.mse)), repr(float(self.mc_stderr)),
                str(self.dropped))


def _estimate_normal(problem, y, m, rng):
    data = NormalMeansData(y, problem.sigma2)
    if m.method == "antithetic":
        return cv_alpha(data, problem.predictor, m.alpha, m.k, rng).value
    if m.method == "cb":
        return cb_alpha(data, problem.predictor, m.alpha, m.k, rng).value
    if m.method == "kfold":
        return kfold_cv(problem.design, y, problem.learner, m.k, rng).value
    if m.method == "sure":
        return sure(data, problem.predictor)
    raise UnsupportedOperation(f"method {m.method!r} does not apply to Gaussian responses")


def _estimate_logistic(problem, y, m, rng, cache):
    if m.method == "kfold":
        return kfold_cv_logistic(problem.design, y, problem.learner, m.k, rng).value
    if m.method not in ("antithetic", "independent"):
        raise UnsupportedOperation(f"method {m.method!r} does not apply to logistic responses")
    if "scaling" not in cache:
        theta = problem.learner.estimate(problem.model.suff_stat(y))
        cache["scaling"] = plugin_H(problem.design, theta)
    return cv_glm(problem.model, y, problem.learner, cache["scaling"], m.alpha, m.k, rng,
                  independent=m.method == "independent").value


def replicate(problem, methods: Sequence[MethodSpec], seed: int, rep: int) -> np.ndarray:
    """Estimates of every method on replication ``rep`` (NaN on failure)."""
    stream = RngSpec(seed, rep + 1)
    y = problem.draw(stream.generator(0))
    out = np.full(len(methods), np.nan)
    cache = {}
    for j, m in enumerate(methods):
        gen = stream.generator(j + 1)
        try:
            if isinstance(problem, LogisticProblem):
                out[j] = _estimate_logistic(problem, y, m, gen, cache)
            else:
                out[j] = _estimate_normal(problem, y, m, gen)
        except Exception as exc:  # failure policy: drop and count
            log.warning("replication %d, %s(alpha=%g, k=%d) failed: %s",
                        rep, m.method, m.alpha, m.k, exc)
    return out


_WORKER_STATE = {}


def _init_worker(problem, methods, seed):
    _WORKER_STATE["args"] = (problem, methods, seed)


def _worker(rep):
    problem, methods, seed = _WORKER_STATE["args"]
    return replicate(problem, methods, seed, rep)


def _stable_mean(values):
    return math.fsum(values) / len(values)


def run_mse_grid(scenario, methods: Sequence, replications: int, rng=0, workers: int = 1,
                 oracle: Optional[float] = None, oracle_mc: int = 20000,
                 problem=None) -> list:
    """Estimate the MSE of each method against the oracle prediction error.

    Parameters
    ----------
    scenario : ScenarioSpec or Scenario name
    methods : sequence of MethodSpec or (method, alpha, k) tuples
    replications : int
        Number of fresh response vectors, ``>= 2``.
    rng : RngSpec or int
        Seed for the replications.  The oracle and covariates use the
        scenario's own seed.
    workers : int
        Worker processes; results are identical for any value.
    oracle : float, optional
        Known prediction error; computed by Monte Carlo when omitted.
    oracle_mc : int
        Monte Carlo size for the oracle.
    problem : NormalProblem or LogisticProblem, optional
        Pre-built problem (e.g. to plug in a custom learner).

    Returns
    -------
    list of MseReport
    """
    if replications < 2:
        raise ValueError(f"replications must be >= 2, got {replications}")
    spec = scenario if isinstance(scenario, ScenarioSpec) else ScenarioSpec(Scenario(scenario))
    methods = [m if isinstance(m, MethodSpec) else MethodSpec(*m) for m in methods]
    allowed = _LOGISTIC_METHODS if spec.scenario is Scenario.LOGISTIC else _NORMAL_METHODS
    for m in methods:
        if m.method not in allowed:
            raise ValueError(f"method {m.method!r} is not available for scenario {spec.scenario.value}")
    seed = rng.seed if isinstance(rng, RngSpec) else int(rng)
    if problem is None:
        problem = build_problem(spec)
    if oracle is None:
        oracle = oracle_pe(problem, oracle_mc, spec.seed.generator(2)).value

    reps = range(replications)
    if workers <= 1:
        rows = [replicate(problem, methods, seed, r) for r in reps]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(problem, methods, seed)) as pool:
            rows = list(pool.map(_worker, reps, chunksize=max(1, replications // (4 * workers))))
    est = np.vstack(rows)

    reports = []
    for j, m in enumerate(methods):
        sq = (est[:, j] - oracle) ** 2
        ok = sq[np.isfinite(sq)]
        dropped = int(replications - ok.size)
        if ok.size:
            mse = _stable_mean(ok.tolist())
            var = _stable_mean(((ok - mse) ** 2).tolist()) * ok.size / max(ok.size - 1, 1)
            se = math.sqrt(var / ok.size)
        else:
            mse = se = float("nan")
        reports.append(MseReport(spec.scenario.value, m.method, float(m.alpha), int(m.k),
                                 int(ok.size), mse, se, dropped, sq))
    return reports


def paired_gap(worse: MseReport, better: MseReport):
    """Mean and standard error of the per-replication difference of squared
    errors ``worse - better`` over replications where both succeeded."""
    d = worse.squared_errors - better.squared_errors
    d = d[np.isfinite(d)]
    return float(d.mean()), float(d.std(ddof=1) / np.sqrt(d.size))


def write_csv(reports: Sequence[MseReport], out=None) -> str:
    """Write reports as CSV to a path or file object; also return the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.csv_row())
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w", newline="") as fh:
                fh.write(text)
    return text
