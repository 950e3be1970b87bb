"""Command-line front end.

    antithetic-cv run --config grid.json [--seed N] [--workers N] [--out results.csv]
    antithetic-cv verify {sampler,stein,variance,sure,glm,zograd}

A run config is a JSON object::

    {
      "schema": 1,
      "scenario": "isotonic",
      "methods": [
        {"method": "antithetic", "alpha": 0.01, "k": 2},
        {"method": "kfold", "k": [2, 100]}
      ],
      "replications": 1000,
      "seed": 0
    }

``alpha`` and ``k`` may be numbers or lists; lists expand to their
product.  Exit status is 0 on success, 1 on a runtime failure and 2 on a
usage or configuration error.  ``ANTITHETIC_CV_WORKERS`` sets the default
number of worker processes.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional

from .harness import MethodSpec, Scenario, ScenarioSpec, build_problem, run_mse_grid, write_csv
from .rng import RngSpec
from .verify import SUITES, run_suite

__all__ = ["RunConfig", "ConfigError", "load_config", "cmd_run", "cmd_verify", "main"]

SCHEMA_VERSION = 1
WORKERS_ENV = "ANTITHETIC_CV_WORKERS"


class ConfigError(ValueError):
    def __init__(self, field_name, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field_name}: {message}")
        self.field = field_name
        self.line = line


_METHOD_KEYS = {"method", "alpha", "k"}


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _number(name, v, kind=float, positive=False, minimum=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, f"expected a number, got {v!r}")
    if kind is int and int(v) != v:
        raise ConfigError(name, f"expected an integer, got {v!r}")
    v = kind(v)
    if positive and not v > 0:
        raise ConfigError(name, f"must be positive, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {v!r}")
    return v


@dataclass
class RunConfig:
    scenario: str
    methods: list
    replications: int = 1000
    seed: int = 0
    workers: Optional[int] = None
    output: Optional[str] = None
    n: Optional[int] = None
    sigma2: float = 1.0
    oracle_mc: int = 20000
    ridge: float = 1.0
    schema: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown key")
        if d.get("schema", None) != SCHEMA_VERSION:
            raise ConfigError("schema", f"expected {SCHEMA_VERSION}, got {d.get('schema')!r}")
        for req in ("scenario", "methods"):
            if req not in d:
                raise ConfigError(req, "missing required key")
        try:
            scenario = Scenario(d["scenario"]).value
        except ValueError:
            choices = ", ".join(s.value for s in Scenario)
            raise ConfigError("scenario", f"must be one of {choices}, got {d['scenario']!r}") from None
        methods = d["methods"]
        if not isinstance(methods, list) or not methods:
            raise ConfigError("methods", "must be a nonempty list")
        clean = []
        for i, m in enumerate(methods):
            where = f"methods[{i}]"
            if not isinstance(m, dict):
                raise ConfigError(where, "must be an object")
            extra = sorted(set(m) - _METHOD_KEYS)
            if extra:
                raise ConfigError(f"{where}.{extra[0]}", "unknown key")
            if "method" not in m:
                raise ConfigError(f"{where}.method", "missing required key")
            entry = {"method": m["method"]}
            if "alpha" in m:
                entry["alpha"] = [_number(f"{where}.alpha", a, positive=True) for a in _as_list(m["alpha"])]
                if not isinstance(m["alpha"], list):
                    entry["alpha"] = entry["alpha"][0]
            if "k" in m:
                entry["k"] = [_number(f"{where}.k", k, int, minimum=1) for k in _as_list(m["k"])]
                if not isinstance(m["k"], list):
                    entry["k"] = entry["k"][0]
            clean.append(entry)
        cfg = cls(
            scenario=scenario,
            methods=clean,
            replications=_number("replications", d.get("replications", 1000), int, minimum=2),
            seed=_number("seed", d.get("seed", 0), int, minimum=0),
            workers=None if d.get("workers") is None else _number("workers", d["workers"], int, minimum=1),
            output=d.get("output"),
            n=None if d.get("n") is None else _number("n", d["n"], int, minimum=1),
            sigma2=_number("sigma2", d.get("sigma2", 1.0), positive=True),
            oracle_mc=_number("oracle_mc", d.get("oracle_mc", 20000), int, minimum=2),
            ridge=_number("ridge", d.get("ridge", 1.0), minimum=0.0),
        )
        if cfg.output is not None and not isinstance(cfg.output, str):
            raise ConfigError("output", "must be a string path")
        for method, alpha, k, i in cfg.method_specs_raw():
            try:
                MethodSpec(method, alpha, k)
            except ValueError as exc:
                raise ConfigError(f"methods[{i}]", str(exc)) from None
        return cfg

    def method_specs_raw(self):
        for i, m in enumerate(self.methods):
            alphas = _as_list(m.get("alpha", 0.0))
            ks = _as_list(m.get("k", 0))
            for a, k in itertools.product(alphas, ks):
                yield m["method"], float(a), int(k), i

    def method_specs(self):
        return [MethodSpec(m, a, k) for m, a, k, _ in self.method_specs_raw()]

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None}


def load_config(path) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", exc.msg, line=exc.lineno) from None
    return RunConfig.from_dict(raw)


def _default_workers():
    v = os.environ.get(WORKERS_ENV)
    try:
        return max(1, int(v)) if v else 1
    except ValueError:
        return 1


def _summary(reports) -> str:
    rows = sorted(reports, key=lambda r: r.mse)
    out = [f"{'rank':>4}  {'method':<12}{'alpha':>8}{'k':>5}{'mse':>14}{'stderr':>12}{'reps':>7}"]
    for i, r in enumerate(rows, 1):
        out.append(f"{i:>4}  {r.method:<12}{r.alpha:>8.4g}{r.k:>5d}{r.mse:>14.6g}"
                   f"{r.mc_stderr:>12.4g}{r.replications:>7d}")
    return "\n".join(out)


def cmd_run(config_path, seed=None, workers=None, out=None) -> int:
    try:
        cfg = load_config(config_path)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if seed is not None:
        cfg.seed = seed
    if workers is not None:
        cfg.workers = workers
    if out is not None:
        cfg.output = out
    try:
        spec = ScenarioSpec(Scenario(cfg.scenario), cfg.n, cfg.sigma2, RngSpec(cfg.seed))
        problem = build_problem(spec, ridge=cfg.ridge)
        reports = run_mse_grid(spec, cfg.method_specs(), cfg.replications, rng=cfg.seed,
                               workers=cfg.workers or _default_workers(),
                               oracle_mc=cfg.oracle_mc, problem=problem)
        if cfg.output:
            write_csv(reports, cfg.output)
            print(_summary(reports))
        else:
            write_csv(reports, sys.stdout)
            print(_summary(reports), file=sys.stderr)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_verify(suite: str, seed: int = 0) -> int:
    if suite not in SUITES:
        print(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return 2
    try:
        checks = run_suite(suite, seed=seed)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for c in checks:
        print(c.line())
    return 0 if all(c.passed for c in checks) else 1


def _build_parser():
    p = argparse.ArgumentParser(prog="antithetic-cv",
                                description="Antithetic cross-validation experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an MSE grid from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--out")
    v = sub.add_parser("verify", help="run a fixed-seed property suite")
    v.add_argument("suite")
    v.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.seed, args.workers, args.out)
    return cmd_verify(args.suite, args.seed)


if __name__ == "__main__":
    sys.exit(main())
