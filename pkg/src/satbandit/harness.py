"""Experiment orchestration: seeded simulations, warmup, multi-run
aggregation, and result emission (CSV + metadata + a static SVG chart).

A batch runs ``runs`` independent simulations per policy with seeds
``base_seed + run_index``; runs are embarrassingly parallel and merged
deterministically by run index.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .core import (OraclePolicy, Policy, RandomPolicy, RegretTrace, RSPolicy)
from .envs import (ArtificialConfig, BanditDataset, env_step,
                   generate_artificial, load_shuttle)
from .linear import LinGreedy, LinTS, LinUCB, RegLinRS
from .neural import NeuralRS, NeuralTS, NeuralUCB
from .numeric import TrainingDiverged
from .reliability import (CentroidBank, KmeansEstimator, KnnEstimator,
                          TrialRatioEstimator, XeEstimator)
from .linear import EpisodicMemory

POLICY_NAMES = ("neuralrs", "reglinrs", "rs", "lingreedy", "linucb", "lints",
                "neuralucb", "neuralts", "oracle", "random")
RELIABILITY_NAMES = ("knn", "kmeans", "xe", "trial_ratio")


class ConfigError(Exception):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    env: str = "artificial"
    policies: list = field(default_factory=lambda: ["neuralrs"])
    steps: int = 10000
    runs: int = 10
    base_seed: int = 0
    aleph: float = 0.65
    reliability: str = "knn"
    out_dir: str = "results"
    shuttle_path: str | None = None
    include_warmup_regret: bool = True
    workers: int = 1
    keep_traces: bool = False
    # shared learning hyperparameters
    warmup_pulls: int = 10
    width: int = 128
    depth: int = 2
    learning_rate: float = 1e-3
    batch_size: int = 1024
    init_scale: float = 0.02
    linear_solve_every: int = 20
    # satisficing reliability
    centroid_mult: int = 2          # centroids per action = centroid_mult * K
    gamma: float = 0.99
    centroid_init_std: float = 1.0
    centroid_eps: float = 1e-8
    memory_size: int = 10000
    knn_k: int = 50
    knn_eps: float = 1e-4
    # baselines
    nu: float = 0.1
    lam_neural: float = 1e-5
    linucb_alpha: float = 0.1
    lints_lambda: float = 0.25
    lints_alpha: float = 6.0
    lints_beta: float = 6.0
    # artificial environment
    art_dim: int = 64
    art_actions: int = 4
    art_top_mean: float = 0.7
    art_noise_std: float = 0.001
    art_points: int = 10000
    art_pool_size: int = 20
    art_pool_spread: float = 1.0
    env_seed: int = 12345

    def validate(self) -> None:
        if self.env not in ("artificial", "shuttle"):
            raise ConfigError(f"unknown env {self.env!r}")
        if self.steps < 1 or self.runs < 1:
            raise ConfigError("steps and runs must be >= 1")
        if self.reliability not in RELIABILITY_NAMES:
            raise ConfigError(f"unknown reliability {self.reliability!r}")
        for spec in self.policies:
            name = spec["name"] if isinstance(spec, dict) else spec
            if name not in POLICY_NAMES:
                raise ConfigError(f"unknown policy {name!r}")
        if self.env == "shuttle" and not self.shuttle_path:
            raise ConfigError("shuttle env requires shuttle_path")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def policy_specs(cfg: ExperimentConfig) -> list[tuple[str, dict]]:
    """Normalize cfg.policies into (name, overrides) pairs."""
    out = []
    for spec in cfg.policies:
        if isinstance(spec, dict):
            spec = dict(spec)
            out.append((spec.pop("name"), spec))
        else:
            out.append((spec, {}))
    return out


def build_dataset(cfg: ExperimentConfig) -> BanditDataset:
    if cfg.env == "artificial":
        return generate_artificial(ArtificialConfig(
            dim=cfg.art_dim, num_actions=cfg.art_actions,
            target_top_mean=cfg.art_top_mean, num_points=cfg.art_points,
            pool_size=cfg.art_pool_size, pool_spread=cfg.art_pool_spread,
            context_noise_std=cfg.art_noise_std, seed=cfg.env_seed))
    return load_shuttle(cfg.shuttle_path, seed=cfg.env_seed)


def make_policy(name: str, cfg: ExperimentConfig, dim: int, num_actions: int,
                rng: np.random.Generator, overrides: dict | None = None) -> Policy:
    o = dict(overrides or {})
    aleph = float(o.pop("aleph", cfg.aleph))
    if name == "neuralrs":
        reliability = str(o.pop("reliability", cfg.reliability))
        est = _make_estimator(reliability, cfg, dim, num_actions, rng)
        policy = NeuralRS(num_actions, dim, rng, est, aleph=aleph,
                          width=cfg.width, depth=cfg.depth,
                          learning_rate=cfg.learning_rate,
                          batch_size=cfg.batch_size,
                          init_scale=cfg.init_scale)
    elif name == "neuralucb":
        policy = NeuralUCB(num_actions, dim, rng,
                           nu=float(o.pop("nu", cfg.nu)),
                           lam=float(o.pop("lam", cfg.lam_neural)),
                           width=cfg.width, depth=cfg.depth,
                           learning_rate=cfg.learning_rate,
                           batch_size=cfg.batch_size,
                           init_scale=cfg.init_scale)
    elif name == "neuralts":
        policy = NeuralTS(num_actions, dim, rng,
                          nu=float(o.pop("nu", cfg.nu)),
                          lam=float(o.pop("lam", cfg.lam_neural)),
                          width=cfg.width, depth=cfg.depth,
                          learning_rate=cfg.learning_rate,
                          batch_size=cfg.batch_size,
                          init_scale=cfg.init_scale)
    elif name == "reglinrs":
        policy = RegLinRS(num_actions, dim, aleph=aleph,
                          k=int(o.pop("k", cfg.knn_k)),
                          memory_size=int(o.pop("memory_size", cfg.memory_size)),
                          eps=cfg.knn_eps, solve_every=cfg.linear_solve_every)
    elif name == "rs":
        policy = RSPolicy(num_actions, aleph)
    elif name == "lingreedy":
        policy = LinGreedy(num_actions, dim, solve_every=cfg.linear_solve_every)
    elif name == "linucb":
        policy = LinUCB(num_actions, dim,
                        alpha=float(o.pop("alpha", cfg.linucb_alpha)),
                        solve_every=cfg.linear_solve_every)
    elif name == "lints":
        policy = LinTS(num_actions, dim, rng,
                       lam=float(o.pop("lam", cfg.lints_lambda)),
                       alpha_prior=cfg.lints_alpha, beta_prior=cfg.lints_beta,
                       solve_every=cfg.linear_solve_every)
    elif name == "oracle":
        policy = OraclePolicy(num_actions)
    elif name == "random":
        policy = RandomPolicy(num_actions, rng)
    else:
        raise ConfigError(f"unknown policy {name!r}")
    if o:
        raise ConfigError(f"unknown overrides for {name}: {sorted(o)}")
    return policy


def _make_estimator(kind: str, cfg: ExperimentConfig, dim: int, num_actions: int,
                    rng: np.random.Generator):
    if kind == "kmeans":
        bank = CentroidBank(num_actions, cfg.width, cfg.centroid_mult * num_actions,
                            rng, gamma=cfg.gamma, init_std=cfg.centroid_init_std,
                            eps=cfg.centroid_eps)
        return KmeansEstimator(bank)
    if kind == "knn":
        return KnnEstimator(EpisodicMemory(cfg.memory_size, dim, num_actions),
                            k=cfg.knn_k, eps=cfg.knn_eps)
    if kind == "xe":
        return XeEstimator()
    if kind == "trial_ratio":
        return TrialRatioEstimator()
    raise ConfigError(f"unknown reliability {kind!r}")


def run_simulation(cfg: ExperimentConfig, ds: BanditDataset, policy_name: str,
                   seed: int, overrides: dict | None = None) -> RegretTrace:
    """One seeded simulation: round-robin warmup, then select/update loop."""
    ss = np.random.SeedSequence(seed)
    policy_rng, env_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    policy = make_policy(policy_name, cfg, ds.dim, ds.num_actions, policy_rng,
                         overrides)
    # per-run serving order over dataset rows
    order = env_rng.permutation(len(ds))

    trace = RegretTrace()
    warmup_steps = min(cfg.steps, cfg.warmup_pulls * ds.num_actions)
    for t in range(cfg.steps):
        row = int(order[t % len(ds)])
        x, _ = ds.row(row)
        if t < warmup_steps:
            action = t % ds.num_actions
        elif policy.uses_oracle:
            action = policy.select(x, ds.row(row)[1])
        else:
            action = policy.select(x)
        outcome = env_step(ds, row, action, env_rng)
        outcome.step = t
        policy.update(x, action, outcome.observed_reward)
        trace.append(outcome)
        if t == warmup_steps - 1 and hasattr(policy, "refresh"):
            policy.refresh()
    if not cfg.include_warmup_regret and warmup_steps > 0:
        base = trace.cumulative_regret[warmup_steps - 1]
        trace.cumulative_regret = [
            0.0 if t < warmup_steps else r - base
            for t, r in enumerate(trace.cumulative_regret)]
    return trace


@dataclass
class AggregatedResult:
    policy: str
    mean_regret: np.ndarray
    stderr_regret: np.ndarray
    mean_reward: np.ndarray
    mean_accuracy: np.ndarray
    n_runs: int
    failures: list = field(default_factory=list)
    traces: list | None = None

    @property
    def final_regret(self) -> float:
        return float(self.mean_regret[-1])

    @property
    def final_accuracy(self) -> float:
        return float(self.mean_accuracy[-1])


def _one_run(args):
    cfg_dict, policy_name, overrides, seed = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    ds = build_dataset(cfg)
    try:
        trace = run_simulation(cfg, ds, policy_name, seed, overrides)
        return seed, trace, None
    except TrainingDiverged as exc:
        return seed, None, str(exc)


def aggregate(traces: list[RegretTrace], policy: str,
              failures: list, keep: bool) -> AggregatedResult:
    R = np.array([t.cumulative_regret for t in traces])
    W = np.array([t.cumulative_reward for t in traces])
    A = np.array([t.correct_rate for t in traces])
    n = len(traces)
    stderr = R.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(R.shape[1])
    return AggregatedResult(
        policy=policy,
        mean_regret=R.mean(axis=0),
        stderr_regret=stderr,
        mean_reward=W.mean(axis=0),
        mean_accuracy=A.mean(axis=0),
        n_runs=n,
        failures=failures,
        traces=traces if keep else None,
    )


class AllRunsFailed(Exception):
    """Every run of a policy raised a training failure."""


def run_batch(cfg: ExperimentConfig, ds: BanditDataset | None = None,
              log=None) -> dict[str, AggregatedResult]:
    """Run the full policy suite; returns per-policy aggregates keyed by label."""
    cfg.validate()
    if ds is None:
        ds = build_dataset(cfg)
    results: dict[str, AggregatedResult] = {}
    for name, overrides in policy_specs(cfg):
        label = overrides.get("label", name)
        overrides = {k: v for k, v in overrides.items() if k != "label"}
        jobs = [(cfg.to_dict(), name, overrides, cfg.base_seed + i)
                for i in range(cfg.runs)]
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                outcomes = list(pool.map(_one_run, jobs))
        else:
            outcomes = []
            for job in jobs:
                _, pname, ov, seed = job
                try:
                    outcomes.append((seed, run_simulation(cfg, ds, pname, seed, ov), None))
                except TrainingDiverged as exc:
                    outcomes.append((seed, None, str(exc)))
        outcomes.sort(key=lambda o: o[0])
        traces = [t for _, t, err in outcomes if err is None]
        failures = [(seed, err) for seed, _, err in outcomes if err is not None]
        if not traces:
            raise AllRunsFailed(f"all {cfg.runs} runs of {label} failed: {failures}")
        results[label] = aggregate(traces, label, failures, cfg.keep_traces)
        if log:
            r = results[label]
            log(f"{label}: final regret {r.final_regret:.2f}, "
                f"accuracy {r.final_accuracy:.4f} ({r.n_runs} runs)")
    return results


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


DESIGN_FLAGS = {
    "linear_batch_means_solve_cadence": True,
    "centroid_decay_applies_to_all_actions": True,
    "neural_confidence_diagonal_approximation": True,
    "knn_k_clipped_to_memory_size": True,
}


def write_results(results: dict[str, AggregatedResult], cfg: ExperimentConfig,
                  out_dir: str) -> list[str]:
    """Emit per-policy CSVs, a combined long-format CSV, metadata, and an SVG."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for label, res in results.items():
        path = os.path.join(out_dir, f"{label}.csv")
        with open(path, "w") as fh:
            fh.write("step,mean_regret,stderr_regret,mean_reward,mean_accuracy\n")
            for t in range(len(res.mean_regret)):
                fh.write(f"{t},{res.mean_regret[t]:.10g},{res.stderr_regret[t]:.10g},"
                         f"{res.mean_reward[t]:.10g},{res.mean_accuracy[t]:.10g}\n")
        written.append(path)

    combined = os.path.join(out_dir, "combined_long.csv")
    with open(combined, "w") as fh:
        fh.write("policy,step,metric,value\n")
        for label, res in results.items():
            series = (("mean_regret", res.mean_regret),
                      ("stderr_regret", res.stderr_regret),
                      ("mean_reward", res.mean_reward),
                      ("mean_accuracy", res.mean_accuracy))
            for metric, values in series:
                for t, v in enumerate(values):
                    fh.write(f"{label},{t},{metric},{v:.10g}\n")
    written.append(combined)

    meta = os.path.join(out_dir, "run_metadata.json")
    with open(meta, "w") as fh:
        flags = dict(DESIGN_FLAGS,
                     warmup_counted_in_regret=cfg.include_warmup_regret)
        json.dump({"config": cfg.to_dict(),
                   "config_hash": config_hash(cfg),
                   "design_flags": flags,
                   "results": {label: {"final_regret": res.final_regret,
                                       "final_accuracy": res.final_accuracy,
                                       "runs": res.n_runs,
                                       "failures": res.failures}
                               for label, res in results.items()}},
                  fh, indent=2, sort_keys=True)
    written.append(meta)

    svg = os.path.join(out_dir, "regret.svg")
    write_regret_svg(results, svg)
    written.append(svg)
    return written


_SVG_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def write_regret_svg(results: dict[str, AggregatedResult], path: str,
                     width: int = 720, height: int = 480) -> None:
    """Minimal static line chart of mean cumulative regret per policy."""
    ml, mr, mt, mb = 60, 160, 20, 40
    pw, ph = width - ml - mr, height - mt - mb
    max_t = max(len(r.mean_regret) for r in results.values())
    max_y = max(float(r.mean_regret[-1]) for r in results.values()) or 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
             f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
             f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle" font-size="12">step</text>',
             f'<text x="14" y="{mt + ph / 2}" font-size="12" transform="rotate(-90 14 {mt + ph / 2})" text-anchor="middle">cumulative regret</text>']
    stride = max(1, max_t // 400)
    for ci, (label, res) in enumerate(results.items()):
        color = _SVG_COLORS[ci % len(_SVG_COLORS)]
        pts = []
        for t in range(0, len(res.mean_regret), stride):
            px = ml + pw * t / max(max_t - 1, 1)
            py = mt + ph * (1 - res.mean_regret[t] / max_y)
            pts.append(f"{px:.1f},{py:.1f}")
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        ly = mt + 16 + 16 * ci
        parts.append(f'<line x1="{ml + pw + 8}" y1="{ly - 4}" x2="{ml + pw + 28}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{ml + pw + 34}" y="{ly}" font-size="11">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
