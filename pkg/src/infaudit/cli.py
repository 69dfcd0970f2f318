"""Command line entry point.

    infaudit synth --synth binary:m=600,n=12000,k=20,spread=0.44 --out data.csv
    infaudit mi --data data.csv --label label --attack conf --out mi.json
    infaudit aai --data data.csv --label label --features mrmr:15 --alpha random-guess --out aai.json

Every flag mirrors a RunConfig field; `--config run.json` supplies a base
configuration that flags override. The resolved configuration is embedded
in the report, and a run is a pure function of it.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import json
import re
import sys
from pathlib import Path

import numpy as np

from infaudit import __version__
from infaudit.attacks import ATTACK_NAMES, DEFAULT_ATTACK_CFG, make_scorer, train_shadow_attack
from infaudit.datasets import DatasetSpec, LabeledDataset, load_table, synth_dataset
from infaudit.experiments.attribute import attribute_inference
from infaudit.experiments.membership import (
    decision_region_volumes,
    mi_experiment,
    per_class_stratified_auc,
    smi_experiment,
)
from infaudit.experiments.metrics import auc
from infaudit.experiments.mrmr import mrmr_select
from infaudit.experiments.report import ExperimentReport
from infaudit.experiments.sweep import overfitting_sweep
from infaudit.experiments.synthesis import synthesize_batch
from infaudit.metricspace import DomainKind, Metric, expected_random_guess_distance
from infaudit.models import MlpConfig, load_model, save_model, train_mlp
from infaudit.seeding import derive_rng, derive_seed
from infaudit.separation import sample_spread_codewords, theorem1_experiment

COMMANDS = ("train", "mi", "smi", "ai", "aai", "sweep", "theorem1", "synth", "dr")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - every failure is reported with its stage
        raise StageError(name, exc) from exc


@dataclasses.dataclass
class RunConfig:
    experiment: str = "mi"
    seed: int = 0
    # data: a CSV (data/label/kind) or a synthetic fixture "kind:m=..,n=..,k=..,spread=.."
    data: str | None = None
    label: str = "label"
    kind: str = "binary"
    normalize: bool = True
    synth: str | None = None
    split: tuple[float, float] = (0.25, 0.25)  # train, test; the rest is the shadow pool
    # target model
    hidden: tuple[int, ...] = (128,)
    epochs: int = 60
    batch_size: int = 64
    learning_rate: float = 1e-3
    activation: str = "tanh"
    model: str | None = None  # load instead of training
    # attacks
    attack: str = "conf"
    n_shadows: int = 2
    trials: int = 2000
    # membership
    r: float = 1.0
    metric: str | None = None
    distances: tuple[float, ...] = ()
    bases: int = 100
    per_distance: int = 3
    per_class: bool = False
    # attribute inference
    features: str = "mrmr:15"
    bins: int = 2
    alpha: str = "random-guess"
    challenges: int = 500
    sizes: tuple[int, ...] = (500, 1000, 2000, 4000)
    # separation
    code_m: int = 64
    code_N: int = 1000
    code_r: int = 1
    code_k: int = 4
    code_n: int = 100
    # decision regions
    samples: int = 1_000_000

    def mlp(self, seed_label: str) -> MlpConfig:
        return MlpConfig(
            hidden_layers=tuple(self.hidden),
            activation=self.activation,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=derive_seed(self.seed, seed_label) % 2**31,
        )

    def snapshot(self) -> dict:
        return json.loads(json.dumps(dataclasses.asdict(self)))


_SYNTH = re.compile(r"^(binary|continuous):(.*)$")


def _parse_synth(text: str) -> dict:
    m = _SYNTH.match(text)
    if not m:
        raise ValueError(f"bad --synth {text!r}; expected kind:m=..,n=..,k=..,spread=..")
    params = dict(kv.split("=", 1) for kv in m.group(2).split(",") if kv)
    return {
        "kind": m.group(1),
        "m": int(params["m"]),
        "n": int(params["n"]),
        "k": int(params["k"]),
        "cluster_spread": float(params.get("spread", 0.0)),
        "imbalance": float(params.get("imbalance", 0.0)),
    }


def load_full(cfg: RunConfig) -> LabeledDataset:
    if cfg.synth:
        p = _parse_synth(cfg.synth)
        return synth_dataset(seed=derive_seed(cfg.seed, "data") % 2**31, **p)
    if not cfg.data:
        raise ValueError("give --data or --synth")
    spec = DatasetSpec(cfg.data, cfg.label, cfg.kind, tuple(cfg.split), cfg.normalize)
    return load_table(spec, cfg.seed)[0]


def split_data(cfg: RunConfig, full: LabeledDataset) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    train_n = int(round(cfg.split[0] * len(full)))
    test_n = int(round(cfg.split[1] * len(full)))
    return tuple(full.take([train_n, test_n, len(full) - train_n - test_n], derive_rng(cfg.seed, "split")))


def resolve_features(cfg: RunConfig, full: LabeledDataset) -> list[int]:
    if cfg.features.startswith("mrmr:"):
        return mrmr_select(full, int(cfg.features[5:]), bins=10)
    return [int(i) for i in cfg.features.split(",")]


def resolve_alpha(cfg: RunConfig, metric: Metric, n_unknown: int) -> float:
    if cfg.alpha == "random-guess":
        return expected_random_guess_distance(metric, n_unknown)
    return float(cfg.alpha)


def _metric(cfg: RunConfig, data: LabeledDataset) -> Metric:
    return Metric(cfg.metric) if cfg.metric else data.domain.default_metric


def _target(cfg: RunConfig, train, test):
    if cfg.model:
        model = load_model(cfg.model)
        return model, None
    return train_mlp(train, train.k, cfg.mlp("model"), test=test)


def _scorer(cfg: RunConfig, model, pool, name=None):
    name = name or cfg.attack
    shadow = None
    if name == "shadow":
        with stage("shadow"):
            shadow = train_shadow_attack(
                pool, cfg.n_shadows, cfg.mlp("shadow-models"),
                dataclasses.replace(DEFAULT_ATTACK_CFG, seed=derive_seed(cfg.seed, "attack") % 2**31),
                seed=derive_seed(cfg.seed, "shadow") % 2**31, k=model.k,
            )
    return make_scorer(name, model, shadow)


def _train_metrics(rep) -> dict:
    if rep is None:
        return {}
    return {k: v for k, v in rep.as_dict().items() if k != "loss_history"}


def run(cfg: RunConfig) -> tuple[ExperimentReport | None, dict]:
    """Executes one configured experiment; returns the report and side files."""
    kind = cfg.experiment
    if kind not in COMMANDS:
        raise StageError("config", ValueError(f"unknown experiment {kind!r}"))
    if kind == "theorem1":
        with stage("theorem1"):
            code = sample_spread_codewords(cfg.code_m, cfg.code_N, cfg.code_r, cfg.code_k,
                                           seed=derive_seed(cfg.seed, "code") % 2**31)
            res = theorem1_experiment(code, cfg.code_n, cfg.trials, derive_seed(cfg.seed, "games") % 2**31)
        report = ExperimentReport(
            kind="theorem1", seed=cfg.seed, config=cfg.snapshot(), advantage=res.mi_advantage,
            trials=cfg.trials,
            metrics={"mi_advantage": res.mi_advantage, "smi_advantage": res.smi_advantage,
                     "sigma_mi": res.sigma_mi, "sigma_smi": res.sigma_smi, "bound": res.bound},
        )
        return report, {"code": code.to_json()}

    with stage("load"):
        full = load_full(cfg)
    if kind == "synth":
        return None, {"csv": _to_csv(full)}
    with stage("split"):
        train, test, pool = split_data(cfg, full)
    if kind == "sweep":
        with stage("sweep"):
            S = resolve_features(cfg, full)
            metric = _metric(cfg, full)
            alpha = resolve_alpha(cfg, metric, len(S))
            res = overfitting_sweep(full, list(cfg.sizes), cfg.attack, S, alpha,
                                    derive_seed(cfg.seed, "sweep") % 2**31, cfg.mlp("model"),
                                    n_shadows=cfg.n_shadows, n_challenges=cfg.challenges, bins=cfg.bins)
        report = ExperimentReport(
            kind="sweep", seed=cfg.seed, config={**cfg.snapshot(), "resolved_features": S},
            metrics={"rows": [dataclasses.asdict(r) for r in res.rows], "alpha": res.alpha,
                     "spearman_gen_error_aai": res.spearman()},
        )
        return report, {}

    with stage("train"):
        model, rep = _target(cfg, train, test)
    if kind == "train":
        report = ExperimentReport(kind="train", seed=cfg.seed, config=cfg.snapshot(), metrics=_train_metrics(rep))
        return report, {"model": model}
    if kind == "dr":
        with stage("dr"):
            prof = decision_region_volumes(model, full.domain, cfg.samples, derive_seed(cfg.seed, "dr") % 2**31)
        report = ExperimentReport(
            kind="dr", seed=cfg.seed, config=cfg.snapshot(), trials=cfg.samples,
            metrics={"volumes": prof.volumes, "counts": prof.counts, "most_dominant": prof.most_dominant,
                     "least_dominant": prof.least_dominant, **_train_metrics(rep)},
        )
        return report, {}

    scorer = _scorer(cfg, model, pool)
    if kind == "mi":
        with stage("mi"):
            report = mi_experiment(model, train, test, scorer, cfg.trials, derive_seed(cfg.seed, "mi") % 2**31)
            if cfg.distances:
                _add_distance_breakdown(cfg, report, model, train, scorer)
    elif kind == "smi":
        with stage("smi"):
            report = smi_experiment(model, train, cfg.r, _metric(cfg, train), scorer, trials=cfg.trials,
                                    seed=derive_seed(cfg.seed, "smi") % 2**31, population=test)
    else:
        with stage(kind):
            S = resolve_features(cfg, full)
            metric = _metric(cfg, full)
            alpha = resolve_alpha(cfg, metric, len(S))
            res = attribute_inference(model, [scorer], train, test, S, cfg.bins, alpha, metric,
                                      derive_seed(cfg.seed, "ai") % 2**31, cfg.challenges)
            report = res[scorer.name].report(kind, cfg.seed, {"resolved_features": S})
    report.seed = cfg.seed
    report.config = {**cfg.snapshot(), **report.config}
    report.metrics.update(_train_metrics(rep))
    return report, {}


def _add_distance_breakdown(cfg, report, model, train, scorer) -> None:
    rng = derive_rng(cfg.seed, "synthesis")
    metric = _metric(cfg, train)
    members = train.subset(np.sort(rng.choice(len(train), size=min(1000, len(train)), replace=False)))
    bases = rng.choice(len(train), size=min(cfg.bases, len(train)), replace=False)
    batch = synthesize_batch(train.X[bases], train.y[bases], train, cfg.distances, cfg.per_distance, rng,
                             metric, strict=False)
    if not len(batch):
        raise ValueError("no synthetic non-member survived the filters")
    cand = LabeledDataset(batch.X, batch.y, train.domain, train.k)
    pc = per_class_stratified_auc(members, cand, train, scorer, metric) if cfg.per_class else None
    pos = scorer.score(members.X, members.y)
    neg = scorer.score(cand.X, cand.y)
    keys = batch.target
    report.auc_by_distance = {float(t): auc(pos, neg[keys == t]) for t in sorted(set(keys.tolist()))}
    if pc is not None:
        report.auc_by_class = pc.table
    report.metrics["unreachable_targets"] = sorted({float(t) for _, t in batch.unreachable})


def _to_csv(data: LabeledDataset) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"f{i}" for i in range(data.m)] + ["label"])
    fmt = (lambda v: str(int(v))) if data.domain.kind is DomainKind.BINARY else (lambda v: repr(float(v)))
    for x, y in zip(data.X, data.y):
        w.writerow([fmt(v) for v in x] + [int(y)])
    return buf.getvalue()


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infaudit", description="Membership and attribute inference audits.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON RunConfig used as defaults")
    common.add_argument("--out", help="report path (JSON); the synth command writes CSV here")
    common.add_argument("--seed", type=int)
    common.add_argument("--data")
    common.add_argument("--label")
    common.add_argument("--kind", choices=[k.value for k in DomainKind])
    common.add_argument("--no-normalize", dest="normalize", action="store_false", default=None)
    common.add_argument("--synth", help="kind:m=..,n=..,k=..,spread=..[,imbalance=..]")
    common.add_argument("--split", type=_floats, help="train,test fractions")
    common.add_argument("--hidden", type=_ints)
    common.add_argument("--epochs", type=int)
    common.add_argument("--batch-size", type=int)
    common.add_argument("--learning-rate", type=float)
    common.add_argument("--activation", choices=["tanh", "relu"])
    common.add_argument("--model", help="load the target model from a checkpoint")
    common.add_argument("--attack", choices=list(ATTACK_NAMES))
    common.add_argument("--n-shadows", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--r", type=float)
    common.add_argument("--metric", choices=[m.value for m in Metric])
    common.add_argument("--distances", type=_floats)
    common.add_argument("--bases", type=int)
    common.add_argument("--per-distance", type=int)
    common.add_argument("--per-class", action="store_true", default=None)
    common.add_argument("--features", help="mrmr:K or comma-separated indices")
    common.add_argument("--bins", type=int)
    common.add_argument("--alpha", help="'random-guess' or a number")
    common.add_argument("--challenges", type=int)
    common.add_argument("--sizes", type=_ints)
    common.add_argument("--code-m", type=int)
    common.add_argument("--code-N", type=int)
    common.add_argument("--code-r", type=int)
    common.add_argument("--code-k", type=int)
    common.add_argument("--code-n", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--model-out", help="train: checkpoint path")
    common.add_argument("--code-out", help="theorem1: spread code path")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
        unknown = set(base) - {f.name for f in dataclasses.fields(RunConfig)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    for key, value in vars(args).items():
        if key in fields and value is not None:
            base[key] = value
    cfg = RunConfig(**base)
    for name in ("split", "hidden", "distances", "sizes"):
        setattr(cfg, name, tuple(getattr(cfg, name)))
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with stage("config"):
            cfg = config_from_args(args)
        report, extras = run(cfg)
        with stage("write"):
            _write(args, cfg, report, extras)
    except StageError as exc:
        print(f"infaudit: error {exc}", file=sys.stderr)
        return 2
    return 0


def _write(args, cfg, report, extras) -> None:
    if "csv" in extras:
        if args.out:
            Path(args.out).write_text(extras["csv"])
        else:
            sys.stdout.write(extras["csv"])
        return
    if "model" in extras and args.model_out:
        save_model(extras["model"], args.model_out)
    if "code" in extras and args.code_out:
        Path(args.code_out).write_text(extras["code"])
    if args.out:
        report.write(args.out)
    else:
        sys.stdout.write(report.to_json())


if __name__ == "__main__":
    raise SystemExit(main())
