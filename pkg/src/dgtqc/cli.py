"""Command-line entry point: ``dgtqc <command> [options]``.

Settings resolve in order: built-in defaults, ``--config`` JSON file, the
``DGTQC_SEED`` environment variable (seed only), then explicit flags.

Exit codes: 0 success, 1 computation error, 2 input or usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from dgtqc import dgt, plotting, reports, synth
from dgtqc.corpus import corpus_summary, load_corpus, snapshot_text
from dgtqc.errors import (
    ArgumentError,
    BoxIndexError,
    ConflictError,
    DegenerateError,
    DgtError,
    InstabilityError,
    InsufficientTailError,
    ParseError,
    SingularityError,
    UnknownReferenceError,
)
from dgtqc.metrics import NORM_MODES, ProfileConfig, build_profiles, worker_profiles
from dgtqc.powerlaw import fit_powerlaw, gof_pvalue
from dgtqc.reference import SWEEP_MODELS
from dgtqc.stats import KS_METHODS

log = logging.getLogger("dgtqc")

SEED_ENV = "DGTQC_SEED"
DATASET_ENV = "DGTQC_DATASET"
# targets for the mode comparison: published R^2 at trusted-set sizes 1..4
MODE_TARGETS = {k: SWEEP_MODELS[k][0] for k in range(1, 5)}

COMPUTATION_ERRORS = (SingularityError, InstabilityError, DegenerateError, InsufficientTailError)
# everything else caused by bad input (parse, reference, index, conflict, usage)
INPUT_ERRORS = (ArgumentError, ParseError, UnknownReferenceError, BoxIndexError, ConflictError,
                FileNotFoundError, NotADirectoryError, json.JSONDecodeError)


class UsageError(ArgumentError):
    pass


@dataclass
class RunConfig:
    corpus: str | None = None
    worker_log: str | None = None
    verification: list[str] = field(default_factory=list)
    completeness: list[str] = field(default_factory=list)
    out: str = "out"
    norm: str = "mean"
    pmethod: str = "asymptotic"
    include_zeros: bool = True
    min_hits: int = 10
    min_elements: int = 100
    k: int | None = None
    k_range: str | None = None
    replicates: int = 1000
    pl_mode: str = "continuous"
    pl_values: str = "raw"
    seed: int = 0
    format: str = "both"
    jobs: int = 1
    figures: bool = True

    def validate(self) -> None:
        if self.norm not in NORM_MODES:
            raise UsageError(f"--norm must be one of {NORM_MODES}")
        if self.pmethod not in KS_METHODS:
            raise UsageError(f"--pmethod must be one of {KS_METHODS}")
        if self.min_hits < 1 or self.min_elements < 1:
            raise UsageError("inclusion thresholds must be positive")
        if self.format not in reports.FORMATS:
            raise UsageError(f"--format must be one of {reports.FORMATS}")
        if self.replicates < 100:
            raise UsageError("--replicates must be at least 100")

    def ks(self) -> dgt.KsConfig:
        return dgt.KsConfig(self.norm, self.pmethod, self.include_zeros, self.seed)

    def rule(self) -> dgt.InclusionRule:
        return dgt.InclusionRule(self.min_hits, self.min_elements)

    def powerlaw(self) -> dgt.PowerLawConfig:
        return dgt.PowerLawConfig(self.pl_mode, self.replicates, self.seed, self.pl_values)

    def echo(self, command: str) -> dict:
        d = dataclasses.asdict(self)
        d["command"] = command
        return d


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def parse_k_range(text: str) -> list[int]:
    """``"1..9"`` -> [1, ..., 9]; a single integer is accepted too."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"bad k range {text!r}; expected A..B") from None
    if lo < 1 or hi < lo:
        raise UsageError(f"bad k range {text!r}")
    return list(range(lo, hi + 1))


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    names = {f.name for f in dataclasses.fields(RunConfig)}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            setattr(cfg, key, value)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer") from None
    for key in names:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------- #
# Inputs
# --------------------------------------------------------------------------- #

def dataset_dir() -> Path:
    """Where the published dataset is expected (override with DGTQC_DATASET)."""
    env = os.environ.get(DATASET_ENV)
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[2] / "data" / "published"


def _existing(path: Path) -> str | None:
    return str(path) if path.exists() else None


def open_corpus(cfg: RunConfig):
    """Load the corpus named by ``cfg.corpus``.

    A file is read as a snapshot. A directory with an ``annotations/``
    subdirectory is a dataset layout (worker_log.jsonl, verification.csv and
    completeness.csv picked up when present); a directory holding only
    ``corpus.jsonl`` is a snapshot; anything else is an annotation root.
    """
    if cfg.corpus is None:
        raise UsageError("--corpus is required")
    root = Path(cfg.corpus)
    if not root.exists():
        raise FileNotFoundError(f"corpus path not found: {root}")
    extra = [*cfg.verification, *cfg.completeness]
    if root.is_file():
        return load_corpus(snapshot=root, verification=extra)
    if (root / "annotations").is_dir():
        defaults = [p for p in (_existing(root / "verification.csv"),
                                _existing(root / "completeness.csv")) if p]
        return load_corpus(
            annotations=root / "annotations",
            worker_log=cfg.worker_log or _existing(root / "worker_log.jsonl"),
            verification=(extra or defaults),
        )
    if (root / "corpus.jsonl").is_file() and cfg.worker_log is None:
        return load_corpus(snapshot=root / "corpus.jsonl", verification=extra)
    return load_corpus(annotations=root, worker_log=cfg.worker_log, verification=extra)


def _ordered_trusted(corpus):
    trusted, workers = build_profiles(corpus, ProfileConfig())
    ordered = dgt.order_trusted(trusted)
    if not ordered:
        raise DegenerateError("no trusted labeler has verified screenshots with completeness")
    return trusted, workers, ordered


def _k_values(cfg: RunConfig, n_trusted: int, default: list[int]) -> list[int]:
    if cfg.k_range is not None:
        ks = parse_k_range(cfg.k_range)
    elif cfg.k is not None:
        ks = [cfg.k]
    else:
        ks = default
    for k in ks:
        if not 1 <= k <= n_trusted:
            raise UsageError(f"trusted set size {k} outside 1..{n_trusted}")
    return ks


def _emit(report, cfg: RunConfig) -> None:
    for path in reports.write_report(report, cfg.out, cfg.format):
        log.info("wrote %s", path)


def _figure(fn, *args) -> None:
    try:
        path = fn(*args)
        log.info("wrote %s", path)
    except Exception as exc:  # a figure must never sink a report
        log.warning("figure %s failed: %s", fn.__name__, exc)


def _print_table(report) -> None:
    print(",".join(report.header))
    for row in report.formatted():
        print(",".join(row))


# --------------------------------------------------------------------------- #
# Commands
# --------------------------------------------------------------------------- #

def cmd_ingest(cfg: RunConfig, args) -> int:
    corpus = open_corpus(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "corpus.jsonl").write_text(snapshot_text(corpus), encoding="utf-8")
    print(json.dumps(corpus_summary(corpus).as_dict(), indent=2))
    return 0


def cmd_verify_report(cfg: RunConfig, args) -> int:
    corpus = open_corpus(cfg)
    _, _, ordered = _ordered_trusted(corpus)
    report = reports.verify_report(ordered, cfg.echo("verify-report"))
    _emit(report, cfg)
    _print_table(report)
    return 0


def cmd_profiles(cfg: RunConfig, args) -> int:
    corpus = open_corpus(cfg)
    pconf = ProfileConfig(include_zeros=True)
    trusted, workers = build_profiles(corpus, pconf)
    conf = cfg.echo("profiles")
    w_report = reports.worker_profile_report(workers, conf)
    t_report = reports.trusted_profile_report(trusted, conf)
    if cfg.format in ("csv", "both"):
        reports.write_csv(w_report, Path(cfg.out) / "profiles.csv")
        reports.write_csv(t_report, Path(cfg.out) / "profiles_trusted.csv")
    if cfg.format in ("json", "both"):
        payload = {"config": conf,
                   "workers": w_report.json_rows(),
                   "trusted": t_report.json_rows()}
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        (Path(cfg.out) / "profiles.json").write_text(json.dumps(payload, indent=2) + "\n",
                                                     encoding="utf-8")
    if cfg.figures:
        rule = cfg.rule()
        _figure(plotting.rank_frequency_figure, trusted,
                [w for w in workers if rule.admits(w)],
                Path(cfg.out) / "figures" / "rank_frequency.png")
    print(f"{len(workers)} workers, {len(trusted)} trusted labelers")
    return 0


def cmd_dgt_score(cfg: RunConfig, args) -> int:
    corpus = open_corpus(cfg)
    _, _, ordered = _ordered_trusted(corpus)
    (k,) = _k_values(cfg, len(ordered), [min(2, len(ordered))])[:1]
    sub = dgt.testing_subset(corpus, ordered, k, cfg.rule())
    scores = [dgt.dgt_score(w, ordered[:k], cfg.ks()) for w in sub.workers]
    report = reports.score_report(scores, sub.trusted_ids, cfg.echo("dgt-score"))
    _emit(report, cfg)
    _print_table(report)
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    corpus = open_corpus(cfg)
    _, _, ordered = _ordered_trusted(corpus)
    ks = _k_values(cfg, len(ordered), list(range(1, len(ordered) + 1)))
    conf = cfg.echo("sweep")
    rows = [dgt.reference_row(corpus, cfg.rule())]
    rows += dgt.sweep(corpus, ordered, ks, cfg.ks(), cfg.rule())
    _emit(reports.sweep_report(rows, conf), cfg)
    if cfg.figures:
        _figure(plotting.sweep_figure, rows, Path(cfg.out) / "figures" / "sweep_r2.png")
    best = reports.best_row(rows)
    if best is None:
        print("no trusted-set size produced a model")
    else:
        m = best.model
        print(f"best k={best.trusted_size} ({' '.join(best.trusted_ids)}): "
              f"R2={m.r_squared:.4f} F({m.df[0]},{m.df[1]})={m.f_statistic:.1f} "
              f"p={m.p_value:.4f} workers={best.workers_in_subset}")
    if args.all_modes:
        results = dgt.compare_modes(corpus, ordered, ks, MODE_TARGETS, cfg.ks(), cfg.rule())
        _emit(reports.modes_report(results, conf), cfg)
        for m in results:
            gap = "n/a" if m.target_gap is None else f"{m.target_gap:.4f}"
            print(f"mode {m.ks_config.label}: mean |R2 - target| = {gap}")
    return 0


def cmd_baselines(cfg: RunConfig, args) -> int:
    if cfg.k is not None and cfg.k < 1:
        raise UsageError("baselines need a trusted set (k >= 1)")
    corpus = open_corpus(cfg)
    _, _, ordered = _ordered_trusted(corpus)
    (k,) = _k_values(cfg, len(ordered), [min(2, len(ordered))])[:1]
    sub = dgt.testing_subset(corpus, ordered, k, cfg.rule())
    modes = dgt.all_modes(cfg.ks()) if args.all_modes else [cfg.ks()]
    for ks_cfg in modes:
        rep = dgt.baseline_compare(sub.workers, ordered[:k], ks_cfg, cfg.powerlaw())
        conf = cfg.echo("baselines")
        conf.update(norm=ks_cfg.norm, include_zeros=ks_cfg.include_zeros, k=k)
        report = reports.baseline_report(rep, conf)
        if args.all_modes:
            report.name = f"baselines_{ks_cfg.norm}_{'zeros' if ks_cfg.include_zeros else 'nozeros'}"
        _emit(report, cfg)
        if cfg.figures:
            _figure(plotting.baseline_figure, rep,
                    Path(cfg.out) / "figures" / f"{report.name}.png")
        if args.all_modes:
            print(f"[{ks_cfg.label}]")
        for line in reports.baseline_summary_lines(rep):
            print(line)
    return 0


def cmd_powerlaw(cfg: RunConfig, args) -> int:
    conf = cfg.echo("powerlaw")
    results = []
    if args.values:
        text = Path(args.values).read_text(encoding="utf-8")
        data = [float(t) for t in text.split()]
        fit = fit_powerlaw(data, cfg.pl_mode)
        results.append((Path(args.values).name,
                        gof_pvalue(data, fit, cfg.replicates, cfg.seed, cfg.jobs)))
    else:
        corpus = open_corpus(cfg)
        rule = cfg.rule()
        workers = [w for w in worker_profiles(corpus.worker_records, corpus.worker_vocabulary)
                   if rule.admits(w)]
        for w in workers:
            try:
                results.append((w.worker_id, dgt.worker_gof(w, cfg.powerlaw())))
            except (InsufficientTailError, DegenerateError) as exc:
                log.warning("worker %s: no power-law fit (%s)", w.worker_id, exc)
                results.append((w.worker_id, None))
    report = reports.powerlaw_report(results, conf)
    _emit(report, cfg)
    _print_table(report)
    return 0


def _synth_spec(args) -> synth.SyntheticSpec:
    overrides = {}
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            overrides = json.load(fh)
        trusted = overrides.pop("trusted", None)
        if trusted is not None:
            overrides["trusted"] = tuple(synth.TrustedArchetype(**t) for t in trusted)
    workers = dict(overrides.pop("workers", synth.SyntheticSpec().workers))
    for name in synth.ARCHETYPES:
        n = getattr(args, name)
        if n is not None:
            workers[name] = n
    overrides["workers"] = workers
    if args.hits is not None:
        overrides["hits_per_worker"] = args.hits
    if args.elements is not None:
        overrides["elements_per_hit"] = args.elements
    if args.screenshots is not None:
        overrides["screenshots"] = args.screenshots
    try:
        return synth.SyntheticSpec(**overrides)
    except TypeError as exc:
        raise UsageError(f"bad synthetic spec: {exc}") from None


def cmd_synth(cfg: RunConfig, args) -> int:
    spec = _synth_spec(args)
    corpus = synth.generate(spec, cfg.seed)
    paths = synth.write_corpus_files(corpus, cfg.out)
    print(json.dumps(corpus_summary(corpus).as_dict(), indent=2))
    log.info("snapshot at %s", paths["snapshot"])
    return 0


COMMANDS = {
    "ingest": (cmd_ingest, "load annotations, worker log and verification into a snapshot"),
    "verify-report": (cmd_verify_report, "trusted-labeler verification table"),
    "profiles": (cmd_profiles, "per-worker and per-trusted-labeler profiles"),
    "dgt-score": (cmd_dgt_score, "DGT scores for the testing subset at one trusted-set size"),
    "sweep": (cmd_sweep, "subset statistics and precision model per trusted-set size"),
    "baselines": (cmd_baselines, "DGT against volume, time and power-law factors"),
    "powerlaw": (cmd_powerlaw, "power-law fit and bootstrap GOF per worker"),
    "synth": (cmd_synth, "generate a seeded synthetic corpus"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", metavar="PATH", help="JSON file of settings")
    g.add_argument("--corpus", metavar="PATH",
                   help="dataset directory, annotation root or snapshot file")
    g.add_argument("--worker-log", metavar="PATH")
    g.add_argument("--verification", metavar="PATH", action="append")
    g.add_argument("--completeness", metavar="PATH", action="append")
    g.add_argument("--out", metavar="DIR")
    g.add_argument("--norm", choices=NORM_MODES)
    g.add_argument("--pmethod", choices=KS_METHODS)
    g.add_argument("--include-zeros", type=_bool, metavar="{true,false}")
    g.add_argument("--min-hits", type=int, metavar="N")
    g.add_argument("--min-elements", type=int, metavar="N")
    g.add_argument("--k", type=int, metavar="N")
    g.add_argument("--k-range", metavar="A..B")
    g.add_argument("--replicates", type=int, metavar="N")
    g.add_argument("--pl-mode", choices=("continuous", "discrete"))
    g.add_argument("--pl-values", choices=NORM_MODES)
    g.add_argument("--seed", type=int, metavar="N")
    g.add_argument("--format", choices=reports.FORMATS)
    g.add_argument("--jobs", type=int, metavar="N")
    g.add_argument("--no-figures", dest="figures", action="store_const", const=False)
    g.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="dgtqc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}
    for name, (_, help_text) in COMMANDS.items():
        parsers[name] = sub.add_parser(name, parents=[common], help=help_text)
    for name in ("sweep", "baselines"):
        parsers[name].add_argument("--all-modes", action="store_true",
                                   help="repeat under every normalization and zero handling")
    parsers["powerlaw"].add_argument("--values", metavar="PATH",
                                     help="whitespace-separated numbers instead of a corpus")
    s = parsers["synth"]
    for name in synth.ARCHETYPES:
        s.add_argument(f"--{name}", type=int, metavar="N", help=f"number of {name} workers")
    s.add_argument("--hits", type=int, metavar="N", help="HITs per worker")
    s.add_argument("--elements", type=float, metavar="X", help="mean elements per HIT")
    s.add_argument("--screenshots", type=int, metavar="N")
    s.add_argument("--spec", metavar="PATH", help="JSON overrides for the synthetic spec")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    func, _ = COMMANDS[args.command]
    try:
        cfg = resolve_config(args)
        return func(cfg, args)
    except COMPUTATION_ERRORS as exc:
        print(f"dgtqc: computation error: {exc}", file=sys.stderr)
        return 1
    except INPUT_ERRORS as exc:
        print(f"dgtqc: input error: {exc}", file=sys.stderr)
        return 2
    except DgtError as exc:
        print(f"dgtqc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
