"""Command-line front end.

Subcommands:

    distance      distance between two rewards
    matrix        pairwise distances over a list of rewards
    regret-suite  check the regret bound on random MDPs
    suite         run one of the built-in property suites or experiments

Environments (``--env``): ``gridworld[:NxN][:slippery]``, ``pointmass``,
``npec-counterexample`` or a path to an MDP JSON file. Settings may also come
from a JSON file given with ``--config``; explicit flags take precedence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import re
import sys
from typing import Callable, Dict, List, Optional

import numpy as np

from reward_distance import __version__, suites
from reward_distance.core import CoverageDistribution, TabularMdp, TabularReward, TabularSampler, check_reward_table
from reward_distance.distances import (
    DistanceEstimate,
    ddsr_distance,
    direct_distance_lp,
    epic_exact,
    epic_sampled,
    erc_from_returns,
)
from reward_distance.environments import gridworld, pointmass
from reward_distance.environments.tabular import (
    effective_horizon,
    npec_counterexample,
    rollout_coverage,
    tabular_episode_returns,
)
from reward_distance.errors import RewardDistanceError, ValidationError
from reward_distance.mdp_io import load_mdp
from reward_distance.npec import NpecConfig, npec_approx_gradient, npec_normalized
from reward_distance.stats import BootstrapConfig

METHODS = ("epic", "npec", "erc", "ddsr", "direct")
SYMMETRIC = ("epic", "erc", "ddsr", "direct")
TABULAR_ONLY = ("ddsr", "direct")
QUICK_SAMPLES = 4096
QUICK_EPISODES = 4096
ROLLOUT_HORIZON = 100

DEFAULTS = dict(
    method="epic",
    env="gridworld:3x3",
    a=None,
    b=None,
    rewards=None,
    coverage=None,
    discount=None,
    nv=32768,
    nm=32768,
    seeds=None,
    episodes=131072,
    p=2.0,
    quick=False,
    sampled=False,
    horizon=None,
    seed=0,
    resamples=10000,
    out=None,
    format="json",
)
DEFAULT_SEEDS = {"epic": 30, "npec": 3}


@dataclasses.dataclass
class Environment:
    kind: str  # "tabular" or "pointmass"
    rewards: Dict[str, object]
    discount: float
    mdp: Optional[TabularMdp] = None
    coverage: Optional[CoverageDistribution] = None
    pointmass_config: Optional[pointmass.PointMassConfig] = None


def _with_discount(mdp: TabularMdp, discount: Optional[float]) -> TabularMdp:
    if discount is None or discount == mdp.discount:
        return mdp
    return TabularMdp(mdp.transition, mdp.initial_dist, discount)


def resolve_env(spec: str, discount: Optional[float] = None) -> Environment:
    """Builds an environment from a built-in name or an MDP file path."""
    match = re.fullmatch(r"gridworld(?::(\d+)x(\d+))?(:slippery)?", spec)
    if match:
        rows, cols, slippery = match.groups()
        side = int(rows or 3)
        if cols is not None and int(cols) != side:
            raise ValidationError("gridworlds are square; use NxN with equal sides")
        g = 0.99 if discount is None else discount
        mdp = gridworld.gridworld_mdp(side, bool(slippery), discount=g)
        return Environment("tabular", gridworld.all_rewards(side, g), g, mdp=mdp)
    if spec == "pointmass":
        config = pointmass.PointMassConfig()
        if discount is not None:
            config = dataclasses.replace(config, discount=discount)
        return Environment("pointmass", pointmass.all_rewards(config), config.discount, pointmass_config=config)
    if spec == "npec-counterexample":
        mdp, rewards, cov = npec_counterexample()
        mdp = _with_discount(mdp, discount)
        return Environment("tabular", rewards, mdp.discount, mdp=mdp, coverage=cov)
    if os.path.exists(spec):
        mdp, rewards, cov = load_mdp(spec)
        mdp = _with_discount(mdp, discount)
        return Environment("tabular", rewards, mdp.discount, mdp=mdp, coverage=cov)
    raise ValidationError(
        f"unknown environment {spec!r}: expected gridworld[:NxN][:slippery], pointmass, "
        "npec-counterexample or an MDP JSON file"
    )


def resolve_reward(env: Environment, name: str):
    if name in env.rewards:
        return env.rewards[name]
    # built-ins may carry their family prefix, e.g. gridworld:cliff_walk
    family, _, bare = name.partition(":")
    if bare in env.rewards and family in ("gridworld", "pointmass"):
        return env.rewards[bare]
    if env.kind == "tabular" and os.path.exists(name):
        if name.endswith(".npy"):
            values = np.load(name)
        else:
            with open(name) as f:
                values = json.load(f)
        return check_reward_table(values, env.mdp, name=name)
    raise ValidationError(f"unknown reward {name!r}; available: {', '.join(sorted(env.rewards))}")


def _load_coverage_file(path: str) -> CoverageDistribution:
    if path.endswith(".npy"):
        return CoverageDistribution.from_joint(np.load(path))
    with open(path) as f:
        doc = json.load(f)
    if isinstance(doc, dict):
        return CoverageDistribution.from_joint(doc["joint"], doc.get("state_dist"), doc.get("action_dist"))
    return CoverageDistribution.from_joint(doc)


def resolve_coverage(env: Environment, spec: Optional[str], settings: dict):
    """A `CoverageDistribution` for tabular environments, a sampler for the point mass."""
    if env.kind == "pointmass":
        if spec not in (None, "random-policy-rollouts"):
            raise ValidationError("pointmass supports only --coverage random-policy-rollouts")
        return pointmass.RolloutSampler(env.pointmass_config)
    if spec is None:
        return env.coverage if env.coverage is not None else CoverageDistribution.uniform_state_actions(env.mdp)
    if spec == "uniform":
        return CoverageDistribution.uniform_state_actions(env.mdp)
    if spec == "random-policy-rollouts":
        rng = np.random.default_rng(settings["seed"])
        return rollout_coverage(env.mdp, settings["episodes"], settings["horizon"] or ROLLOUT_HORIZON, rng)
    if spec.startswith("file:"):
        cov = _load_coverage_file(spec[len("file:") :])
        if cov.joint.shape != env.mdp.reward_shape:
            raise ValidationError("coverage file does not match the MDP shape")
        return cov
    raise ValidationError(f"unknown coverage {spec!r}: expected uniform, random-policy-rollouts or file:PATH")


def _exact(value: float, method: str, **metadata) -> DistanceEstimate:
    return DistanceEstimate(value, value, value, 1, method, dict(exact=True, **metadata))


def compute_distance(env: Environment, coverage, a, b, settings: dict) -> DistanceEstimate:
    """One distance under resolved settings; raises RewardDistanceError on failure."""
    method = settings["method"]
    boot = BootstrapConfig(n_resamples=settings["resamples"], seed=settings["seed"])
    seeds = settings["seeds"] or DEFAULT_SEEDS.get(method, 1)
    tabular = env.kind == "tabular"
    if method in TABULAR_ONLY and not tabular:
        raise ValidationError(f"method {method} needs a tabular environment")
    wrap = TabularReward if tabular else (lambda r: r)
    sampler = TabularSampler(coverage) if tabular else coverage
    sampled = settings["sampled"] or not tabular

    if method == "epic":
        if not sampled:
            return _exact(epic_exact(a, b, coverage, env.discount), "epic")
        return epic_sampled(
            wrap(a), wrap(b), sampler, env.discount, n_v=settings["nv"], n_m=settings["nm"],
            n_seeds=seeds, seed=settings["seed"], bootstrap=boot,
        )
    if method == "ddsr":
        return _exact(ddsr_distance(a, b, coverage, env.discount, p=settings["p"]), "ddsr", p=settings["p"])
    if method == "direct":
        return _exact(direct_distance_lp(a, b, coverage, p=settings["p"]), "direct", p=settings["p"])
    if method == "npec":
        if not sampled:
            return _exact(npec_normalized(a, b, coverage, env.discount, p=settings["p"]), "npec", p=settings["p"])
        config = NpecConfig(p=settings["p"], n_seeds=seeds, seed=settings["seed"])
        return npec_approx_gradient(wrap(a), wrap(b), sampler, env.discount, config, boot)
    if method == "erc":
        rng = np.random.default_rng(settings["seed"])
        if tabular:
            horizon = settings["horizon"] or effective_horizon(env.discount)
            returns = tabular_episode_returns(env.mdp, [a, b], settings["episodes"], horizon, rng)
        else:
            config = env.pointmass_config
            if settings["horizon"]:
                config = dataclasses.replace(config, horizon=settings["horizon"])
            horizon = config.horizon
            returns = pointmass.episode_returns(config, [a, b], settings["episodes"], rng)
        return erc_from_returns(returns[0], returns[1], boot, discount=env.discount, horizon=horizon)
    raise ValidationError(f"unknown method {method!r}; choose from {METHODS}")


def _clean(obj):
    """Recursively converts numpy scalars and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(doc: dict) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as f:
            f.write(text)


def _csv_text(rows: List[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(value) -> str:
    return "" if value is None or not math.isfinite(value) else repr(float(value))


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merges flags over the --config file over built-in defaults."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            config = json.load(f)
        if not isinstance(config, dict):
            raise ValidationError("--config must contain a JSON object")
        unknown = set(config) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown keys in --config: {', '.join(sorted(unknown))}")
    settings = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        settings[key] = flag if flag not in (None, False) else config.get(key, default)
    if settings["method"] not in METHODS:
        raise ValidationError(f"unknown method {settings['method']!r}; choose from {METHODS}")
    if settings["format"] not in ("csv", "json"):
        raise ValidationError("format must be csv or json")
    if settings["quick"]:
        settings["nv"] = settings["nm"] = QUICK_SAMPLES
        settings["episodes"] = min(settings["episodes"], QUICK_EPISODES)
    return settings


def _settings_record(settings: dict, env: Environment) -> dict:
    keep = {k: v for k, v in settings.items() if k not in ("out", "format", "a", "b", "rewards")}
    keep["discount"] = env.discount
    return keep


def cmd_distance(args) -> int:
    settings = resolve_settings(args)
    for key in ("a", "b"):
        if not settings[key]:
            raise ValidationError(f"missing --{key}: name of a reward of the environment or a reward file")
    env = resolve_env(settings["env"], settings["discount"])
    a, b = resolve_reward(env, settings["a"]), resolve_reward(env, settings["b"])
    coverage = resolve_coverage(env, settings["coverage"], settings)
    est = compute_distance(env, coverage, a, b, settings)
    if settings["format"] == "csv":
        text = _csv_text(
            [
                ["method", "a", "b", "value", "ci_lower", "ci_upper", "n_seeds"],
                [est.method, settings["a"], settings["b"], _fmt(est.value), _fmt(est.ci_lower), _fmt(est.ci_upper), est.n_seeds],
            ]
        )
    else:
        text = dump_json(
            {
                "command": "distance",
                "version": __version__,
                "a": settings["a"],
                "b": settings["b"],
                "settings": _settings_record(settings, env),
                "result": est.to_dict(),
            }
        )
    _write(text, settings["out"])
    return 0


def _reward_list(settings: dict, env: Environment) -> List[str]:
    spec = settings["rewards"]
    if not spec:
        raise ValidationError("missing --rewards: comma-separated reward names, or 'all'")
    names = sorted(env.rewards) if spec == "all" else [n.strip() for n in spec.split(",") if n.strip()]
    if len(names) < 2:
        raise ValidationError("a distance matrix needs at least 2 rewards")
    return names


def cmd_matrix(args) -> int:
    settings = resolve_settings(args)
    env = resolve_env(settings["env"], settings["discount"])
    names = _reward_list(settings, env)
    rewards = [resolve_reward(env, n) for n in names]
    coverage = resolve_coverage(env, settings["coverage"], settings)
    n = len(names)
    cells: List[List[Optional[dict]]] = [[None] * n for _ in range(n)]
    errors = {}
    symmetric = settings["method"] in SYMMETRIC
    for i in range(n):
        for j in range(n):
            if symmetric and j < i:
                cells[i][j] = cells[j][i]
                continue
            try:
                cells[i][j] = compute_distance(env, coverage, rewards[i], rewards[j], settings).to_dict()
            except RewardDistanceError as e:
                cells[i][j] = {"value": None, "reason": str(e)}
                errors[f"{names[i]}/{names[j]}"] = str(e)
    values = [[cell["value"] for cell in row] for row in cells]
    for pair, reason in errors.items():
        print(f"warning: {pair}: {reason}", file=sys.stderr)
    if settings["format"] == "csv":
        rows = [[""] + names] + [[names[i]] + [_fmt(v) for v in values[i]] for i in range(n)]
        text = _csv_text(rows)
    else:
        text = dump_json(
            {
                "command": "matrix",
                "version": __version__,
                "rewards": names,
                "symmetric": symmetric,
                "settings": _settings_record(settings, env),
                "matrix": values,
                "cells": cells,
                "errors": errors,
            }
        )
    _write(text, settings["out"])
    return 0


def cmd_regret_suite(args) -> int:
    report = suites.regret_suite(
        n=args.n, max_states=args.max_states, max_actions=args.max_actions,
        discount=args.discount, seed=args.seed, equivalent=args.equivalent,
    )
    if args.format == "csv":
        cols = ["instance", "n_states", "n_actions", "epic", "lhs", "rhs", "holds"]
        rows = [cols] + [[r[c] if c in ("instance", "n_states", "n_actions", "holds") else _fmt(r[c]) for c in cols] for r in report["instances"]]
        text = _csv_text(rows)
    else:
        text = dump_json({"command": "regret-suite", "version": __version__, **report})
    _write(text, args.out)
    print(f"regret bound held in {report['n_hold']}/{report['n']} instances", file=sys.stderr)
    return 0 if report["passed"] else 1


QUICK_SUITE_KWARGS = {
    "sampled-convergence": dict(n_seeds=5),
    "pointmass": dict(n_seeds=5),
}


def cmd_suite(args) -> int:
    names = list(suites.SUITES) if args.name == "all" else [args.name]
    reports = []
    for name in names:
        kwargs = dict(QUICK_SUITE_KWARGS.get(name, {})) if args.quick else {}
        report = suites.SUITES[name](**kwargs)
        reports.append(report)
        print(f"{name}: {'PASS' if report['passed'] else 'FAIL'}", file=sys.stderr)
    _write(dump_json({"command": "suite", "version": __version__, "reports": reports}), args.out)
    return 0 if all(r["passed"] for r in reports) else 1


def _add_distance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHODS, help="distance method (default epic)")
    p.add_argument("--env", help="gridworld[:NxN][:slippery], pointmass, npec-counterexample or MDP JSON path")
    p.add_argument("--coverage", help="uniform, random-policy-rollouts or file:PATH")
    p.add_argument("--discount", type=float, help="override the environment's discount")
    p.add_argument("--nv", type=int, help="sampled EPIC transition batch size (default 32768)")
    p.add_argument("--nm", type=int, help="sampled EPIC mean batch size (default 32768)")
    p.add_argument("--seeds", type=int, help="independent seeds (default 30 for EPIC, 3 for NPEC)")
    p.add_argument("--episodes", type=int, help="ERC episodes / coverage rollouts (default 131072)")
    p.add_argument("--p", type=float, help="norm exponent for npec, ddsr and direct (default 2)")
    p.add_argument("--quick", action="store_true", help="use 4096 samples and at most 4096 episodes")
    p.add_argument("--sampled", action="store_true", help="use the sample-based path on tabular environments")
    p.add_argument("--horizon", type=int, help="episode length for rollouts")
    p.add_argument("--seed", type=int, help="root random seed (default 0)")
    p.add_argument("--resamples", type=int, help="bootstrap resamples (default 10000)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default json)")
    p.add_argument("--config", help="JSON file of default settings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reward-distance", description="Compare reward functions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", help="distance between two rewards")
    p.add_argument("--a", help="first reward: name or table file")
    p.add_argument("--b", help="second reward: name or table file")
    _add_distance_flags(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("matrix", help="pairwise distance matrix")
    p.add_argument("--rewards", help="comma-separated reward names, or 'all'")
    _add_distance_flags(p)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("regret-suite", help="check the regret bound on random MDPs")
    p.add_argument("--n", type=int, default=100, help="number of random MDPs")
    p.add_argument("--max-states", type=int, default=8)
    p.add_argument("--max-actions", type=int, default=4)
    p.add_argument("--discount", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--equivalent", action="store_true", help="make R_B an equivalent transform of R_A")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_regret_suite)

    p = sub.add_parser("suite", help="run a built-in property suite or experiment")
    p.add_argument("name", choices=sorted(suites.SUITES) + ["all"])
    p.add_argument("--quick", action="store_true", help="fewer seeds for the sampled experiments")
    p.add_argument("--out")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RewardDistanceError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
