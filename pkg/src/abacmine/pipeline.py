"""End-to-end experiment orchestration behind the CLI.

Every stage reads and writes plain files, so any stage can be re-run in
isolation; a run manifest records the config snapshot, stage timings,
artifact paths, and the metric summary.  All randomness flows from the
master seed through named substreams, and artifacts are written in
canonical form, so identical configs reproduce byte-identical outputs.
"""

from __future__ import annotations

import csv
import dataclasses
import io as _io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as aio
from .builtin import BUILTIN_NAMES, builtin_policy
from .enhance import RefinementConfig, enhance
from .errors import ConfigError, DataError, EmptyLogError
from .metrics import LogEvaluator, WscWeights
from .mining import (
    MiningConfig,
    Thresholds,
    default_grid,
    extract_policy,
    tune_thresholds,
)
from .model import AccessLog, Policy
from .preprocess import Discretizer, discretize, impute_missing
from .seeds import derive_seed
from .synth import (
    DEFAULT_TUPLE_CAP,
    RandomPolicySpec,
    UniverseSpec,
    add_noise,
    build_universe,
    generate_complete_log,
    generate_random_policy,
    sparsify,
)


@dataclass
class PolicySourceCfg:
    builtin: str | None = None
    file: str | None = None
    random_rules: int | None = None
    random_filters_min: int = 1
    random_filters_max: int = 3
    random_relations_min: int = 0
    random_relations_max: int = 1
    random_negative_fraction: float = 0.0
    schema_file: str | None = None      # schema source for random policies


@dataclass
class UniverseCfg:
    n_users: int | None = None
    n_objects: int | None = None
    n_sessions: int | None = None


@dataclass
class LogCfg:
    sparsify: float | None = None
    noise: float | None = None
    cap: int = DEFAULT_TUPLE_CAP


@dataclass
class MiningCfg:
    k: int | None = None                # fixed k; None = auto in [k_min, k_max]
    k_min: int = 10
    k_max: int = 20
    t_pos: float = 0.25
    t_neg: float = 0.25
    theta_pos: float = 0.25
    theta_neg: float = 0.25
    tune: bool = False
    tune_folds: int = 3
    n_restarts: int = 3
    max_iter: int = 100
    baseline: str = "all"


@dataclass
class EnhanceCfg:
    enabled: bool = True
    max_iterations: int = 10
    similarity_threshold: float = 0.5
    quality_epsilon: float = 0.0
    sub_k: int | None = None
    sub_k_min: int = 1
    sub_k_max: int = 5


@dataclass
class EvalCfg:
    mode: str = "full"                  # full | holdout
    holdout_fraction: float = 0.2


@dataclass
class ExperimentConfig:
    seed: int | None = None
    outdir: str = "out"
    policy: PolicySourceCfg = field(default_factory=PolicySourceCfg)
    universe: UniverseCfg = field(default_factory=UniverseCfg)
    log: LogCfg = field(default_factory=LogCfg)
    mining: MiningCfg = field(default_factory=MiningCfg)
    enhance: EnhanceCfg = field(default_factory=EnhanceCfg)
    evaluation: EvalCfg = field(default_factory=EvalCfg)

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigError("a master seed is required (set seed=...)")
        for name in ("sparsify", "noise"):
            v = getattr(self.log, name)
            if v is not None and not 0.0 < v <= 1.0:
                raise ConfigError(f"log.{name} must be in (0, 1], got {v}")
        if self.evaluation.mode not in ("full", "holdout"):
            raise ConfigError(f"evaluation.mode must be full/holdout, "
                              f"got {self.evaluation.mode!r}")
        if not 0.0 < self.evaluation.holdout_fraction < 1.0:
            raise ConfigError("evaluation.holdout_fraction must be in (0, 1)")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        cfg = cls()
        sections = {f.name: f for f in dataclasses.fields(cls)}
        for key, value in doc.items():
            if key not in sections:
                raise ConfigError(f"unknown config key {key!r}")
            current = getattr(cfg, key)
            if dataclasses.is_dataclass(current):
                if not isinstance(value, dict):
                    raise ConfigError(f"config section {key!r} must be a mapping")
                subfields = {sf.name for sf in dataclasses.fields(current)}
                for sk, sv in value.items():
                    if sk not in subfields:
                        raise ConfigError(f"unknown config key {key}.{sk}")
                    setattr(current, sk, sv)
            else:
                setattr(cfg, key, value)
        return cfg

    def apply_override(self, dotted: str, raw: str) -> None:
        """Set a config field by its dotted name, coercing from the flag string."""
        parts = dotted.split(".")
        target = self
        for part in parts[:-1]:
            if not hasattr(target, part):
                raise ConfigError(f"unknown config key {dotted!r}")
            target = getattr(target, part)
        leaf = parts[-1]
        if not hasattr(target, leaf):
            raise ConfigError(f"unknown config key {dotted!r}")
        current = getattr(target, leaf)
        setattr(target, leaf, _coerce(raw, current))


def _coerce(raw: str, current):
    if raw == "null":
        return None
    if isinstance(current, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if current is None:
        # Unset optionals: guess int, then float, else string.
        for cast in (int, float):
            try:
                return cast(raw)
            except ValueError:
                pass
    return raw


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]   # accept a run manifest as the config source
    return ExperimentConfig.from_dict(doc)


def mining_config(cfg: ExperimentConfig) -> MiningConfig:
    m = cfg.mining
    return MiningConfig(
        k=m.k, k_range=(m.k_min, m.k_max),
        thresholds=Thresholds(m.t_pos, m.t_neg, m.theta_pos, m.theta_neg),
        n_restarts=m.n_restarts, max_iter=m.max_iter,
        seed=derive_seed(cfg.seed, "cluster"), baseline=m.baseline,
    )


def refinement_config(cfg: ExperimentConfig, mc: MiningConfig) -> RefinementConfig:
    e = cfg.enhance
    return RefinementConfig(
        max_iterations=e.max_iterations,
        similarity_threshold=e.similarity_threshold,
        quality_epsilon=e.quality_epsilon,
        sub_k_range=(e.sub_k_min, e.sub_k_max),
        sub_k=e.sub_k,
        mining=mc,
    )


class Manifest:
    """Collects config, timings, artifacts, and metrics for one stage run."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.doc = {
            "command": command,
            "config": cfg.to_dict(),
            "timings": {},
            "artifacts": {},
            "metrics": {},
        }
        self._starts: dict[str, float] = {}

    def start(self, stage: str) -> None:
        self._starts[stage] = time.perf_counter()

    def stop(self, stage: str) -> None:
        self.doc["timings"][stage] = round(
            time.perf_counter() - self._starts.pop(stage), 6)

    def artifact(self, name: str, path: Path) -> None:
        self.doc["artifacts"][name] = str(path)

    def metric(self, name: str, value) -> None:
        self.doc["metrics"][name] = value

    def save(self, path: Path) -> None:
        path.write_text(json.dumps(self.doc, indent=2, sort_keys=True) + "\n")


def _ground_truth_policy(cfg: ExperimentConfig) -> Policy:
    src = cfg.policy
    chosen = [x for x in (src.builtin, src.file, src.random_rules) if x is not None]
    if len(chosen) != 1:
        raise ConfigError(
            "exactly one of policy.builtin, policy.file, policy.random_rules "
            "must be set"
        )
    if src.builtin is not None:
        if src.builtin not in BUILTIN_NAMES:
            raise ConfigError(f"unknown builtin {src.builtin!r}; "
                              f"choose from {BUILTIN_NAMES}")
        policy = builtin_policy(src.builtin,
                                seed=derive_seed(cfg.seed, "universe"))
    elif src.file is not None:
        policy = aio.load_policy(src.file)
    else:
        if src.schema_file is None:
            raise ConfigError("policy.schema_file is required for random policies")
        schema = aio.schema_from_dict(
            json.loads(Path(src.schema_file).read_text()))
        spec = RandomPolicySpec(
            n_rules=src.random_rules,
            filters_per_rule=(src.random_filters_min, src.random_filters_max),
            relations_per_rule=(src.random_relations_min, src.random_relations_max),
            negative_fraction=src.random_negative_fraction,
            seed=derive_seed(cfg.seed, "random-policy"),
        )
        policy = generate_random_policy(schema, spec)
    u = cfg.universe
    if any(v is not None for v in (u.n_users, u.n_objects, u.n_sessions)) \
            or not policy.entities:
        spec = UniverseSpec(
            schema=policy.schema,
            n_users=u.n_users or 50, n_objects=u.n_objects or 50,
            n_sessions=u.n_sessions or 2,
            seed=derive_seed(cfg.seed, "universe"),
        )
        policy = Policy(policy.schema, policy.rules, build_universe(spec))
    return policy


def run_generate(cfg: ExperimentConfig, outdir: Path | None = None) -> Manifest:
    """Write the ground-truth policy and its (transformed) complete log."""
    cfg.validate()
    outdir = Path(outdir or cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, "generate")

    manifest.start("policy")
    policy = _ground_truth_policy(cfg)
    manifest.stop("policy")

    manifest.start("enumerate")
    log = generate_complete_log(policy, cap=cfg.log.cap)
    manifest.stop("enumerate")

    manifest.start("transform")
    if cfg.log.sparsify is not None:
        log = sparsify(log, cfg.log.sparsify, derive_seed(cfg.seed, "sparsify"))
    if cfg.log.noise is not None:
        log, flipped = add_noise(log, cfg.log.noise,
                                 derive_seed(cfg.seed, "noise"))
        manifest.metric("noise_flips", len(flipped))
    manifest.stop("transform")

    policy_path = outdir / "policy.json"
    log_path = outdir / "log.csv"
    aio.save_policy(policy, policy_path)
    aio.save_log_csv(log, log_path)
    manifest.artifact("policy", policy_path)
    manifest.artifact("log", log_path)
    n_pos = len(log.positive)
    manifest.metric("log_size", len(log))
    manifest.metric("log_positive", n_pos)
    manifest.metric("log_negative", len(log) - n_pos)
    manifest.save(outdir / "manifest-generate.json")
    return manifest


def _holdout_split(log: AccessLog, fraction: float,
                   seed: int) -> tuple[AccessLog, AccessLog]:
    """Stratified train/test split preserving log order inside each part."""
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "holdout")))
    flags = np.array([t.permitted for t in log.tuples], dtype=bool)
    test_idx: list[np.ndarray] = []
    for mask in (flags, ~flags):
        idx = np.flatnonzero(mask)
        n_test = max(1, int(round(fraction * len(idx)))) if len(idx) else 0
        if n_test:
            test_idx.append(rng.choice(idx, size=n_test, replace=False))
    chosen = set(int(i) for i in np.concatenate(test_idx)) if test_idx else set()
    train = log.replace(t for i, t in enumerate(log.tuples) if i not in chosen)
    test = log.replace(t for i, t in enumerate(log.tuples) if i in chosen)
    return train, test


def run_mine(cfg: ExperimentConfig, log_path: str | Path,
             schema_path: str | Path | None = None,
             outdir: Path | None = None,
             discretizer_path: str | Path | None = None) -> Manifest:
    """Preprocess, cluster, extract, enhance, and score one log file."""
    cfg.validate()
    outdir = Path(outdir or cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, "mine")

    manifest.start("load")
    schema = None
    if schema_path is not None:
        doc = json.loads(Path(schema_path).read_text())
        schema = aio.schema_from_dict(doc.get("schema", doc))
    log = aio.load_log_csv(log_path, schema)
    manifest.stop("load")

    manifest.start("preprocess")
    if discretizer_path is not None:
        log = discretize(log, Discretizer.load(discretizer_path))
    log = impute_missing(log)
    manifest.stop("preprocess")

    if not log.positive:
        raise EmptyLogError("the log contains no permitted requests to mine from")

    if cfg.evaluation.mode == "holdout":
        train, test = _holdout_split(log, cfg.evaluation.holdout_fraction,
                                     cfg.seed)
    else:
        train = test = log

    mc = mining_config(cfg)
    if cfg.mining.tune:
        manifest.start("tune")
        tuned = tune_thresholds(train, default_grid(), cfg.mining.tune_folds,
                                mc, seed=derive_seed(cfg.seed, "tune"))
        mc = dataclasses.replace(mc, thresholds=tuned.thresholds)
        manifest.metric("tuned_thresholds", dataclasses.asdict(tuned.thresholds))
        manifest.stop("tune")

    manifest.start("cluster-extract")
    result = extract_policy(train, mc)
    manifest.stop("cluster-extract")
    manifest.metric("optimal_k", result.k)
    manifest.metric("rules_extracted", len(result.policy.rules))

    mined = result.policy
    if cfg.enhance.enabled:
        manifest.start("enhance")
        enhanced = enhance(mined, train, refinement_config(cfg, mc))
        mined = enhanced.policy
        (outdir / "trace.csv").write_text(enhanced.trace_csv())
        manifest.artifact("trace", outdir / "trace.csv")
        manifest.stop("enhance")
    manifest.metric("rules_mined", len(mined.rules))

    manifest.start("evaluate")
    report = LogEvaluator(test).report(mined)
    manifest.stop("evaluate")

    mined_path = outdir / "mined.json"
    aio.save_policy(mined, mined_path, include_entities=False)
    manifest.artifact("mined", mined_path)

    clusters_csv = _io.StringIO()
    w = csv.writer(clusters_csv, lineterminator="\n")
    w.writerow(["record_index", "cluster_index"])
    for i, c in enumerate(result.labels):
        w.writerow([i, int(c)])
    (outdir / "clusters.csv").write_text(clusters_csv.getvalue())
    manifest.artifact("clusters", outdir / "clusters.csv")

    modes_csv = _io.StringIO()
    w = csv.writer(modes_csv, lineterminator="\n")
    enc = result.records.encoder
    w.writerow(["cluster"] + list(enc.feature_names))
    for c in sorted(set(int(c) for c in result.labels)):
        part = result.records.subset(result.labels == c)
        mode_values = [
            enc.value(f, int(np.argmax(np.bincount(part.codes[:, f],
                                                   weights=part.weights))))
            for f in range(enc.n_features)
        ]
        w.writerow([c] + mode_values)
    (outdir / "modes.csv").write_text(modes_csv.getvalue())
    manifest.artifact("modes", outdir / "modes.csv")

    (outdir / "diagnostics.csv").write_text(result.diagnostics_csv())
    manifest.artifact("diagnostics", outdir / "diagnostics.csv")

    report_path = outdir / "report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2,
                                      sort_keys=True) + "\n")
    manifest.artifact("report", report_path)
    for key in ("accuracy", "f_score", "wsc", "quality"):
        manifest.metric(key, report.to_dict()[key])
    manifest.save(outdir / "manifest-mine.json")
    return manifest


def run_evaluate(policy_path: str | Path, log_path: str | Path,
                 outdir: Path | None = None) -> dict:
    """Score a policy file against a log file."""
    policy = aio.load_policy(policy_path)
    log = impute_missing(aio.load_log_csv(log_path))
    report = LogEvaluator(log, WscWeights()).report(policy)
    doc = report.to_dict()
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def run_tune(cfg: ExperimentConfig, log_path: str | Path,
             outdir: Path | None = None) -> Manifest:
    """Grid-search thresholds on a log and write the selection table."""
    cfg.validate()
    outdir = Path(outdir or cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, "tune")
    log = impute_missing(aio.load_log_csv(log_path))
    manifest.start("tune")
    result = tune_thresholds(log, default_grid(), cfg.mining.tune_folds,
                             mining_config(cfg),
                             seed=derive_seed(cfg.seed, "tune"))
    manifest.stop("tune")
    doc = {
        "thresholds": dataclasses.asdict(result.thresholds),
        "table": [
            {"thresholds": dataclasses.asdict(t), "mean_f_score": f, "folds": n}
            for t, f, n in result.table
        ],
    }
    (outdir / "thresholds.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n")
    manifest.artifact("thresholds", outdir / "thresholds.json")
    manifest.metric("tuned_thresholds", dataclasses.asdict(result.thresholds))
    manifest.save(outdir / "manifest-tune.json")
    return manifest


REPORT_COLUMNS = ["dataset", "running_time_s", "optimal_k", "rules_mined",
                  "accuracy", "f_score", "wsc", "quality"]


def run_report(manifest_paths: list[str | Path], out_path: str | Path) -> str:
    """Merge mine manifests into one comparison table."""
    rows = []
    for p in manifest_paths:
        try:
            doc = json.loads(Path(p).read_text())
            metrics = doc["metrics"]
            rows.append({
                "dataset": Path(p).parent.name,
                "running_time_s": round(sum(doc["timings"].values()), 3),
                "optimal_k": metrics["optimal_k"],
                "rules_mined": metrics["rules_mined"],
                "accuracy": metrics["accuracy"],
                "f_score": metrics["f_score"],
                "wsc": metrics["wsc"],
                "quality": metrics["quality"],
            })
        except (json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"{p}: not a mine manifest ({exc})") from exc
    rows.sort(key=lambda r: r["dataset"])
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    Path(out_path).write_text(text)
    return text
