"""Experiment configuration, evaluation protocol, aggregation, and outputs.

A run follows the intermittent-evaluation protocol: after every training
iteration, with probability eval_probability the best agent's current
parameters are evaluated without perturbation noise and appended to the
evaluation history; the run stops when that history plateaus (its moving
average stops changing) or the iteration cap is reached. The final metric
of a run is the maximum over its evaluation entries.

All randomness derives from the run's seed via purpose-keyed streams, so
(config, seed) determines every output byte.
"""
from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import diagnostics, objectives, topology
from .objectives import Objective, ObjectiveKind
from .optimizer import AgentPopulation, ESHyperparams, step
from .seeding import EVAL, INIT, TOPOLOGY, derive_rng, derive_seed
from .topology import GraphFamily


class ConfigError(ValueError):
    """Invalid or unparseable experiment configuration."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class PlateauConfig:
    window: int = 50
    threshold: float = 0.05


@dataclass
class InitConfig:
    mode: str = "distinct"  # "distinct" | "shared"
    scale: float = 0.05     # variance of the initial parameter draw


@dataclass
class TopologySpec:
    family: GraphFamily = GraphFamily.ERDOS_RENYI
    density: float = 0.5
    params: dict = field(default_factory=dict)  # family params; derived from density if empty
    edge_list_path: str | None = None
    max_attempts: int = 100

    def resolved_params(self, n: int) -> dict:
        if self.params:
            return dict(self.params)
        return topology.params_for_density(self.family, n, self.density)


@dataclass
class ExperimentConfig:
    name: str
    objective: Objective
    topology: TopologySpec
    agents: int
    hyperparams: ESHyperparams
    iterations: int
    seeds: list[int]
    eval_probability: float = 0.08
    eval_episodes: int = 1
    plateau: PlateauConfig = field(default_factory=PlateauConfig)
    init: InitConfig = field(default_factory=InitConfig)
    diagnostics: bool = False
    output_dir: str = "out"

    def to_json_dict(self) -> dict:
        """Fully resolved configuration for provenance echo."""
        obj = {
            "kind": self.objective.kind.value,
            "dim": self.objective.dim,
        }
        if self.objective.kind is ObjectiveKind.POINT_MASS:
            obj["episode_length"] = self.objective.episode_length
            obj["task_seed"] = self.objective.task_seed
            obj["hidden_sizes"] = list(self.objective.hidden_sizes)
        topo = {
            "family": self.topology.family.value,
            "density": self.topology.density,
            "params": self.topology.resolved_params(self.agents),
            "max_attempts": self.topology.max_attempts,
        }
        if self.topology.edge_list_path:
            topo["edge_list_path"] = self.topology.edge_list_path
        return {
            "name": self.name,
            "objective": obj,
            "topology": topo,
            "agents": self.agents,
            "hyperparams": {
                "alpha": self.hyperparams.alpha,
                "sigma": self.hyperparams.sigma,
                "broadcast_prob": self.hyperparams.broadcast_prob,
                "weight_decay": self.hyperparams.weight_decay,
                "degree_normalize": self.hyperparams.degree_normalize,
            },
            "iterations": self.iterations,
            "eval_probability": self.eval_probability,
            "eval_episodes": self.eval_episodes,
            "plateau": {
                "window": self.plateau.window,
                "threshold": self.plateau.threshold,
            },
            "init": {"mode": self.init.mode, "scale": self.init.scale},
            "diagnostics": self.diagnostics,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
        }


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"{where}: unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}"
        )


def _parse_objective(section: dict) -> Objective:
    _check_keys(
        section,
        {"kind", "dim", "episode_length", "task_seed", "hidden_sizes"},
        "objective",
    )
    kind_raw = section.get("kind", "sphere")
    try:
        kind = ObjectiveKind(kind_raw)
    except ValueError:
        raise ConfigError(
            f"objective.kind: unknown kind {kind_raw!r}; valid kinds: "
            f"{[k.value for k in ObjectiveKind]}"
        ) from None
    if kind is ObjectiveKind.POINT_MASS:
        hidden = tuple(section.get("hidden_sizes", (16, 16)))
        obj = objectives.make_point_mass(
            hidden_sizes=hidden,
            episode_length=int(section.get("episode_length", 100)),
            task_seed=int(section.get("task_seed", 0)),
        )
        if "dim" in section and int(section["dim"]) != obj.dim:
            raise ConfigError(
                f"objective.dim: point-mass policy has {obj.dim} parameters, "
                f"got {section['dim']}"
            )
        return obj
    for key in ("episode_length", "task_seed", "hidden_sizes"):
        if key in section:
            raise ConfigError(f"objective.{key}: only valid for point_mass")
    if "dim" not in section:
        raise ConfigError("objective.dim: required for synthetic objectives")
    dim = int(section["dim"])
    if dim < 1:
        raise ConfigError(f"objective.dim: must be at least 1, got {dim}")
    return Objective(kind, dim)


_FAMILY_PARAM_KEYS = {
    GraphFamily.COMPLETE: set(),
    GraphFamily.EDGELESS: set(),
    GraphFamily.ERDOS_RENYI: {"p"},
    GraphFamily.SMALL_WORLD: {"k", "beta"},
    GraphFamily.SCALE_FREE: {"m"},
}


def _parse_topology(section: dict) -> TopologySpec:
    allowed = {"family", "density", "edge_list_path", "max_attempts", "p", "k", "beta", "m"}
    _check_keys(section, allowed, "topology")
    family_raw = section.get("family", "erdos_renyi")
    try:
        family = GraphFamily(family_raw)
    except ValueError:
        raise ConfigError(
            f"topology.family: unknown family {family_raw!r}; valid families: "
            f"{[f.value for f in GraphFamily]}"
        ) from None
    param_keys = _FAMILY_PARAM_KEYS[family]
    params = {}
    for key in ("p", "k", "beta", "m"):
        if key in section:
            if key not in param_keys:
                raise ConfigError(
                    f"topology.{key}: not a parameter of family {family.value}"
                )
            params[key] = section[key]
    density = float(section.get("density", 0.5))
    if not 0.0 < density <= 1.0:
        raise ConfigError(f"topology.density: must be in (0, 1], got {density}")
    max_attempts = int(section.get("max_attempts", 100))
    if max_attempts < 1:
        raise ConfigError(
            f"topology.max_attempts: must be at least 1, got {max_attempts}"
        )
    return TopologySpec(
        family=family,
        density=density,
        params=params,
        edge_list_path=section.get("edge_list_path"),
        max_attempts=max_attempts,
    )


def parse_config(data: dict, name: str = "experiment") -> ExperimentConfig:
    """Validate a configuration dictionary, filling documented defaults."""
    if not isinstance(data, dict):
        raise ConfigError(f"configuration must be a JSON object, got {type(data)}")
    allowed = {
        "name", "objective", "topology", "agents", "hyperparams", "iterations",
        "eval_probability", "eval_episodes", "plateau", "seeds", "init",
        "diagnostics", "output_dir",
    }
    _check_keys(data, allowed, "config")

    objective = _parse_objective(data.get("objective", {"kind": "sphere", "dim": 20}))
    topo = _parse_topology(data.get("topology", {}))

    if "agents" not in data:
        raise ConfigError("agents: required")
    agents = int(data["agents"])
    if agents < 2:
        raise ConfigError(f"agents: must be at least 2, got {agents}")
    if agents % 2 != 0:
        raise ConfigError(f"agents: must be even for mirrored sampling, got {agents}")

    hp_section = dict(data.get("hyperparams", {}))
    _check_keys(
        hp_section,
        {"alpha", "sigma", "broadcast_prob", "weight_decay", "degree_normalize"},
        "hyperparams",
    )
    try:
        hyperparams = ESHyperparams(**hp_section)
    except ValueError as exc:
        raise ConfigError(f"hyperparams: {exc}") from None

    if "iterations" not in data:
        raise ConfigError("iterations: required")
    iterations = int(data["iterations"])
    if iterations < 1:
        raise ConfigError(f"iterations: must be at least 1, got {iterations}")

    eval_probability = float(data.get("eval_probability", 0.08))
    if not 0.0 <= eval_probability <= 1.0:
        raise ConfigError(
            f"eval_probability: must be in [0, 1], got {eval_probability}"
        )
    eval_episodes = int(data.get("eval_episodes", 1))
    if eval_episodes < 1:
        raise ConfigError(f"eval_episodes: must be at least 1, got {eval_episodes}")

    plateau_section = dict(data.get("plateau", {}))
    _check_keys(plateau_section, {"window", "threshold"}, "plateau")
    plateau = PlateauConfig(
        window=int(plateau_section.get("window", 50)),
        threshold=float(plateau_section.get("threshold", 0.05)),
    )
    if plateau.window < 1:
        raise ConfigError(f"plateau.window: must be at least 1, got {plateau.window}")
    if plateau.threshold < 0:
        raise ConfigError(
            f"plateau.threshold: must be non-negative, got {plateau.threshold}"
        )

    seeds = data.get("seeds")
    if not seeds:
        raise ConfigError("seeds: required and non-empty")
    seeds = [int(s) for s in seeds]
    if any(s < 0 for s in seeds):
        raise ConfigError(f"seeds: must be non-negative, got {seeds}")
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"seeds: duplicates are not allowed, got {seeds}")

    init_section = dict(data.get("init", {}))
    _check_keys(init_section, {"mode", "scale"}, "init")
    init = InitConfig(
        mode=init_section.get("mode", "distinct"),
        scale=float(init_section.get("scale", 0.05)),
    )
    if init.mode not in ("distinct", "shared"):
        raise ConfigError(
            f"init.mode: must be 'distinct' or 'shared', got {init.mode!r}"
        )
    if init.scale < 0:
        raise ConfigError(f"init.scale: must be non-negative, got {init.scale}")

    diag = bool(data.get("diagnostics", False))
    if diag and topo.family is GraphFamily.EDGELESS:
        raise ConfigError("diagnostics: undefined on the edgeless topology")

    return ExperimentConfig(
        name=str(data.get("name", name)),
        objective=objective,
        topology=topo,
        agents=agents,
        hyperparams=hyperparams,
        iterations=iterations,
        seeds=seeds,
        eval_probability=eval_probability,
        eval_episodes=eval_episodes,
        plateau=plateau,
        init=init,
        diagnostics=diag,
        output_dir=str(data.get("output_dir", "out")),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a JSON experiment file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return parse_config(data, name=path.stem)


# ---------------------------------------------------------------------------
# Ablation presets
# ---------------------------------------------------------------------------

PRESETS = (
    "broadcast-only",
    "shared-init-no-broadcast",
    "shared-init-broadcast",
    "distinct-init-no-broadcast",
    "distinct-init-broadcast",
)


def apply_preset(config: ExperimentConfig, preset: str) -> ExperimentConfig:
    """Control-run overlays: broadcast-only keeps agents edgeless, the four
    init/broadcast controls all run on the complete graph."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; valid presets: {list(PRESETS)}")
    cfg = dataclasses.replace(config, name=f"{config.name}-{preset}")
    if preset == "broadcast-only":
        return dataclasses.replace(
            cfg,
            topology=TopologySpec(family=GraphFamily.EDGELESS),
            diagnostics=False,
        )
    shared = preset.startswith("shared-init")
    broadcast = preset.endswith("-broadcast") and not preset.endswith("no-broadcast")
    hp = dataclasses.replace(
        config.hyperparams,
        broadcast_prob=config.hyperparams.broadcast_prob if broadcast else 0.0,
    )
    return dataclasses.replace(
        cfg,
        topology=TopologySpec(family=GraphFamily.COMPLETE),
        hyperparams=hp,
        init=dataclasses.replace(
            config.init, mode="shared" if shared else "distinct"
        ),
    )


# ---------------------------------------------------------------------------
# Protocol pieces
# ---------------------------------------------------------------------------

def evaluate_policy(
    best_theta: np.ndarray, objective: Objective, episodes: int = 1
) -> float:
    """Mean return of noise-free evaluations of one parameter vector."""
    if episodes < 1:
        raise ValueError(f"episodes must be at least 1, got {episodes}")
    returns = [objectives.evaluate(objective, best_theta) for _ in range(episodes)]
    return float(np.mean(returns))


def detect_plateau(
    eval_history: list[float], window: int = 50, threshold: float = 0.05
) -> bool:
    """True when the moving average of evaluations stopped changing.

    Compares the mean of the last `window` entries against the mean of the
    `window` before it; histories shorter than 2*window never plateau.
    A zero reference average falls back to an absolute 1e-8 comparison.
    """
    if len(eval_history) < 2 * window:
        return False
    now = float(np.mean(eval_history[-window:]))
    before = float(np.mean(eval_history[-2 * window : -window]))
    if before == 0.0:
        return abs(now - before) <= 1e-8
    return abs(now - before) <= threshold * abs(before)


@dataclass
class IterationRecord:
    iteration: int
    best_raw_reward: float
    mean_raw_reward: float
    broadcast: bool
    eval_reward: float | None = None
    update_variance: float | None = None
    bound_rhs: float | None = None
    bound_holds: bool | None = None


@dataclass
class RunResult:
    seed: int
    records: list[IterationRecord] = field(default_factory=list)
    final_metric: float | None = None
    stopped_at_plateau: bool = False
    error: str | None = None


@dataclass
class Summary:
    name: str
    run_count: int
    mean_final: float
    ci95_half_width: float | None  # None when a single run leaves the CI undefined


def _initial_population(config: ExperimentConfig, seed: int) -> AgentPopulation:
    n, d = config.agents, config.objective.dim
    std = math.sqrt(config.init.scale)
    if config.init.mode == "shared":
        row = derive_rng(seed, INIT, 0).normal(0.0, std, size=d)
        return AgentPopulation(np.tile(row, (n, 1)))
    theta = np.empty((n, d))
    for i in range(n):
        theta[i] = derive_rng(seed, INIT, i).normal(0.0, std, size=d)
    return AgentPopulation(theta)


def _build_graph(config: ExperimentConfig, seed: int) -> topology.Graph:
    spec = config.topology
    if spec.edge_list_path:
        g = topology.load_edge_list(spec.edge_list_path)
        if g.n != config.agents:
            raise ConfigError(
                f"topology.edge_list_path: graph has {g.n} nodes, config has "
                f"{config.agents} agents"
            )
        return g
    if spec.family is GraphFamily.EDGELESS:
        return topology.generate_edgeless(config.agents)
    if spec.family is GraphFamily.COMPLETE:
        return topology.generate_complete(config.agents)
    return topology.sample_connected(
        spec.family,
        config.agents,
        spec.resolved_params(config.agents),
        derive_seed(seed, TOPOLOGY),
        spec.max_attempts,
    )


def run_single(config: ExperimentConfig, seed: int) -> RunResult:
    """One seeded run of the full protocol."""
    result = RunResult(seed=seed)
    try:
        graph = _build_graph(config, seed)
        pop = _initial_population(config, seed)
        evals: list[float] = []
        for t in range(config.iterations):
            prev_pop = pop
            pop, st = step(
                pop, graph, config.hyperparams,
                config.objective.evaluate_batch, seed,
            )
            rec = IterationRecord(
                iteration=t,
                best_raw_reward=st.best_reward,
                mean_raw_reward=float(st.raw_rewards.mean()),
                broadcast=st.broadcast,
            )
            if st.updates is not None:
                rec.update_variance = diagnostics.update_variance(st.updates)
                if config.diagnostics:
                    report = diagnostics.variance_bound_report(
                        prev_pop, st.perturbations, st.shaped, graph,
                        config.hyperparams.sigma,
                        max_agents=max(
                            diagnostics.DEFAULT_SPREAD_CAP, config.agents
                        ),
                    )
                    rec.bound_rhs = report.rhs_bound
                    rec.bound_holds = report.holds
            if float(derive_rng(seed, EVAL, t).uniform()) < config.eval_probability:
                rec.eval_reward = evaluate_policy(
                    pop.theta[st.best_agent], config.objective, config.eval_episodes
                )
                evals.append(rec.eval_reward)
            result.records.append(rec)
            if rec.eval_reward is not None and detect_plateau(
                evals, config.plateau.window, config.plateau.threshold
            ):
                result.stopped_at_plateau = True
                break
        result.final_metric = max(evals) if evals else None
    except Exception as exc:  # recorded, other seeds continue
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def run_experiment(config: ExperimentConfig, threads: int = 1) -> list[RunResult]:
    """All seeds of one configuration; failures are recorded per seed."""
    if threads <= 1 or len(config.seeds) == 1:
        return [run_single(config, seed) for seed in config.seeds]
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run_single, config, seed) for seed in config.seeds]
        return [f.result() for f in futures]


def aggregate_runs(results: list[RunResult], name: str = "experiment") -> Summary:
    """Mean of final metrics with a t-distribution 95% half-width."""
    finals = [
        r.final_metric
        for r in results
        if r.error is None and r.final_metric is not None
    ]
    if not finals:
        raise ValueError("no successful runs with evaluation entries to aggregate")
    mean = float(np.mean(finals))
    if len(finals) == 1:
        return Summary(name, 1, mean, None)
    sem = float(np.std(finals, ddof=1)) / math.sqrt(len(finals))
    half = float(stats.t.ppf(0.975, len(finals) - 1)) * sem
    return Summary(name, len(finals), mean, half)


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------

def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


RUN_CSV_COLUMNS = (
    "iteration", "best_raw_reward", "mean_raw_reward", "broadcast",
    "eval_reward", "update_variance", "bound_rhs", "bound_holds",
)


def run_csv_bytes(result: RunResult) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(RUN_CSV_COLUMNS)
    for rec in result.records:
        writer.writerow(
            [
                rec.iteration,
                _format(rec.best_raw_reward),
                _format(rec.mean_raw_reward),
                _format(rec.broadcast),
                _format(rec.eval_reward),
                _format(rec.update_variance),
                _format(rec.bound_rhs),
                _format(rec.bound_holds),
            ]
        )
    return buf.getvalue().encode()


def _plot_training_curves(
    config: ExperimentConfig, results: list[RunResult], path: Path
) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ok = [r for r in results if r.error is None and r.records]
    if not ok:
        return
    horizon = max(len(r.records) for r in ok)
    curves = np.full((len(ok), horizon), np.nan)
    for i, r in enumerate(ok):
        best = [rec.best_raw_reward for rec in r.records]
        curves[i, : len(best)] = np.maximum.accumulate(best)
        curves[i, len(best) :] = curves[i, len(best) - 1]
    mean = curves.mean(axis=0)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = np.arange(horizon)
    ax.plot(xs, mean, label=f"{config.name} (n={len(ok)})")
    if len(ok) > 1:
        sem = curves.std(axis=0, ddof=1) / math.sqrt(len(ok))
        half = stats.t.ppf(0.975, len(ok) - 1) * sem
        ax.fill_between(xs, mean - half, mean + half, alpha=0.25)
    ax.set_xlabel("iteration")
    ax.set_ylabel("running best raw reward")
    ax.legend()
    fig.tight_layout()
    tmp = path.with_name(path.name + ".tmp")
    fig.savefig(tmp, dpi=120, format="png")
    plt.close(fig)
    os.replace(tmp, path)


def emit_outputs(
    batches: list[tuple[ExperimentConfig, list[RunResult]]],
    outdir: str | Path,
) -> list[Path]:
    """Per-run iteration CSVs, one summary row per configuration, and a
    training-curve plot per configuration. Writes are atomic
    (temp-then-rename), so reruns overwrite cleanly."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    summary_rows = []
    for config, results in batches:
        run_dir = outdir / config.name
        run_dir.mkdir(parents=True, exist_ok=True)
        cfg_path = run_dir / "config.json"
        _atomic_write(
            cfg_path, json.dumps(config.to_json_dict(), indent=2).encode() + b"\n"
        )
        written.append(cfg_path)
        for result in results:
            run_path = run_dir / f"seed_{result.seed}.csv"
            _atomic_write(run_path, run_csv_bytes(result))
            written.append(run_path)
            if result.error is not None:
                err_path = run_dir / f"seed_{result.seed}.error.txt"
                _atomic_write(err_path, (result.error + "\n").encode())
                written.append(err_path)
        try:
            summary = aggregate_runs(results, config.name)
            summary_rows.append(summary)
        except ValueError:
            summary_rows.append(Summary(config.name, 0, math.nan, None))
        plot_path = outdir / f"{config.name}_curve.png"
        _plot_training_curves(config, results, plot_path)
        if plot_path.exists():
            written.append(plot_path)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["config", "runs", "mean_final_metric", "ci95_half_width"])
    for row in summary_rows:
        writer.writerow(
            [row.name, row.run_count, _format(row.mean_final), _format(row.ci95_half_width)]
        )
    summary_path = outdir / "summary.csv"
    _atomic_write(summary_path, buf.getvalue().encode())
    written.append(summary_path)
    return written
