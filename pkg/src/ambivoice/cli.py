"""Command-line entry point.

Every subcommand reads an optional JSON config (``--config``); explicit
flags override config values. Outputs go to ``--out`` and each file is
written atomically. Exit status: 0 success, 1 usage error, 2 data or
validation error. Set ``AMBIVOICE_LOG`` (e.g. ``INFO``) for progress logs.
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

import numpy as np

from . import io as aio
from .density import KdeConfig, Metric, build_field
from .evaluate import (
    DistanceMetric,
    EvalReport,
    ambiguity_report,
    consistency_matrix,
    fit_linear_classifier,
    pairwise_distance_distribution,
    pca2d_of_dvectors,
    voice_dvectors,
)
from .exceptions import AmbivoiceError, InvalidArgument, IoError, ParseError
from .generator import DEFAULT_INDICES, NEIGHBOR_OFFSET, generate_suite
from .pca import fit_pca, save_pca
from .ridge import export_path, export_samples, extract_ridge
from .stats import Basis, correlation_ratio_profile, export_profile
from .synth import SynthSpec, synth_dvector_corpus, synth_embeddings

log = logging.getLogger("ambivoice")

SUBCOMMANDS = ("analyze", "pca", "density", "ridge", "generate", "evaluate", "synth", "pipeline", "export-plots")


class UsageError(Exception):
    pass


@dataclass
class PipelineConfig:
    embeddings: str | None = None
    embeddings_format: str | None = None
    dvectors: str | None = None
    voices: str | None = None
    bandwidth: float = 0.04
    metric: str = "euclidean"
    coord_scale: float = 1.0
    nx: int = 256
    ny: int = 256
    margin: float = 0.10
    tau: float = 0.05
    smooth_window: int = 5
    n_samples: int = 10
    indices: list = field(default_factory=lambda: list(DEFAULT_INDICES))
    dvector_metric: str = "cosine"
    seed: int = 0
    out: str = "out"
    synth: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidArgument(f"unknown config keys: {unknown}")
        return cls(**data)

    def validate(self):
        try:
            return self._validate()
        except AmbivoiceError:
            raise
        except (TypeError, ValueError) as exc:
            raise InvalidArgument(f"invalid config: {exc}") from None

    def _validate(self):
        KdeConfig(self.bandwidth, self.metric, self.coord_scale)
        if self.embeddings_format not in (None, "csv", "jsonl"):
            raise InvalidArgument("embeddings_format must be csv or jsonl")
        if self.nx < 2 or self.ny < 2:
            raise InvalidArgument("nx and ny must be at least 2")
        if self.margin < 0:
            raise InvalidArgument("margin must be nonnegative")
        if not 0 < self.tau <= 1:
            raise InvalidArgument("tau must lie in (0, 1]")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise InvalidArgument("smooth_window must be a positive odd integer")
        if self.n_samples < 1:
            raise InvalidArgument("n_samples must be at least 1")
        idx = [int(i) for i in self.indices]
        if len(set(idx)) != len(idx):
            raise InvalidArgument("indices must be distinct")
        if any(not 1 <= i <= self.n_samples for i in idx):
            raise InvalidArgument(f"indices must lie in 1..{self.n_samples}")
        DistanceMetric(self.dvector_metric)
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgument("seed must be a 64-bit unsigned integer")
        self.synth_spec()
        return self

    def kde(self) -> KdeConfig:
        return KdeConfig(self.bandwidth, Metric(self.metric), self.coord_scale)

    def synth_spec(self) -> SynthSpec:
        try:
            return SynthSpec(seed=int(self.seed), **self.synth)
        except TypeError as exc:
            raise InvalidArgument(f"bad synth settings: {exc}") from None


# flags shared by all subcommands: (flag, config key, type)
_FLAGS = [
    ("--embeddings", "embeddings", str),
    ("--format", "embeddings_format", str),
    ("--dvectors", "dvectors", str),
    ("--voices", "voices", str),
    ("--bandwidth", "bandwidth", float),
    ("--metric", "metric", str),
    ("--coord-scale", "coord_scale", float),
    ("--nx", "nx", int),
    ("--ny", "ny", int),
    ("--margin", "margin", float),
    ("--tau", "tau", float),
    ("--smooth-window", "smooth_window", int),
    ("--n-samples", "n_samples", int),
    ("--indices", "indices", str),
    ("--dvector-metric", "dvector_metric", str),
    ("--seed", "seed", int),
    ("--out", "out", str),
]
_SYNTH_FLAGS = [
    ("--n-per-gender", "n_per_gender", int),
    ("--dim", "dim", int),
    ("--cluster-std", "cluster_std", float),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ambivoice", description="Generate and evaluate gender-ambiguous speaker embeddings.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "analyze": "correlation-ratio profiles (raw and PCA basis)",
        "pca": "fit and export the PCA model",
        "density": "build and export the male/female/ambiguity density grid",
        "ridge": "extract the ambiguity ridge and its equidistant samples",
        "generate": "generate the voice suite as JSONL",
        "evaluate": "ambiguity, diversity and consistency reports",
        "synth": "write a synthetic embedding and d-vector corpus",
        "pipeline": "run every stage in order",
        "export-plots": "write plot-ready CSVs (grid, path, samples, 2D layouts)",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("--config", help="JSON config file; flags override its values")
        for flag, key, typ in _FLAGS + _SYNTH_FLAGS:
            p.add_argument(flag, dest=key, type=typ, default=None)
    return parser


def resolve_config(args) -> PipelineConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise IoError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ParseError("config must be a JSON object")
    for _, key, _ in _FLAGS:
        value = getattr(args, key)
        if value is None:
            continue
        if key == "indices":
            try:
                value = [int(v) for v in value.split(",") if v.strip()]
            except ValueError:
                raise UsageError(f"--indices expects comma-separated integers, got {value!r}") from None
        data[key] = value
    synth = dict(data.get("synth", {}))
    for _, key, _ in _SYNTH_FLAGS:
        if getattr(args, key) is not None:
            synth[key] = getattr(args, key)
    data["synth"] = synth
    return PipelineConfig.from_mapping(data).validate()


# -- stages ------------------------------------------------------------------


class _Run:
    """Lazily computed pipeline state shared by the stages of one invocation."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self._cache = {}

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def eset(self):
        def load():
            if self.cfg.embeddings is None:
                raise InvalidArgument("no embeddings given (use --embeddings or the config key 'embeddings')")
            return aio.load_embeddings(self.cfg.embeddings, self.cfg.embeddings_format)

        return self._get("eset", load)

    @property
    def pca(self):
        return self._get("pca", lambda: fit_pca(self.eset))

    @property
    def field(self):
        c = self.cfg
        return self._get("field", lambda: build_field(self.eset, self.pca, c.kde(), (c.nx, c.ny, c.margin)))

    @property
    def path(self):
        c = self.cfg
        return self._get("path", lambda: extract_ridge(self.field, c.tau, c.smooth_window).with_samples(c.n_samples))

    @property
    def voices(self):
        def make():
            if self.cfg.voices:
                return aio.load_generated(self.cfg.voices)
            return generate_suite(self.eset, self.pca, self.path, self.cfg.indices)

        return self._get("voices", make)

    def analyze(self):
        export_profile(correlation_ratio_profile(self.eset, Basis.RAW), self.out / "eta_raw.csv")
        export_profile(correlation_ratio_profile(self.eset, Basis.PCA, self.pca), self.out / "eta_pca.csv")

    def fit_pca(self):
        save_pca(self.pca, self.out / "pca_model.json")

    def density(self):
        aio.export_grid(self.field, self.out / "grid.csv")

    def ridge(self):
        export_path(self.path, self.out / "path.csv")
        export_samples(self.path.samples, self.out / "samples.csv")

    def generate(self):
        aio.save_generated(self.voices, self.out / "voices.jsonl")

    def evaluate(self):
        cfg = self.cfg
        clf = fit_linear_classifier(self.eset, self.pca)
        report = EvalReport(
            rows=ambiguity_report(self.voices, self.field, clf, self.pca),
            classifier={
                "weight": clf.coef_.tolist(),
                "bias": clf.intercept_,
                "scale": clf.scale_,
                "training_accuracy": clf.training_accuracy_,
            },
        )
        for method in (aio.Method.ZERO_FILL, aio.Method.NEIGHBOR_INTERP):
            group = [v.embedding for v in self.voices if v.method is method]
            if len(group) >= 2:
                report.distances.update(
                    {f"embedding:{k}": v for k, v in pairwise_distance_distribution({method.value: group}, "euclidean").items()}
                )
        if cfg.dvectors:
            utts = aio.load_dvectors(cfg.dvectors)
            groups = self._dvector_groups(voice_dvectors(utts))
            usable = {k: v for k, v in groups.items() if len(v) >= 2}
            if usable:
                for k, v in pairwise_distance_distribution(
                    {k: [vec for _, vec in items] for k, items in usable.items()}, cfg.dvector_metric
                ).items():
                    report.distances[f"dvector:{k}"] = v
            generated = {str(v.voice_id) for v in self.voices}
            gen_utts = [u for u in utts if u.voice_id in generated]
            pool = gen_utts if len({u.voice_id for u in gen_utts}) >= 2 else utts
            if len({u.voice_id for u in pool}) >= 2:
                report.consistency = consistency_matrix(pool, cfg.dvector_metric)
                report.consistency.to_csv(self.out / "consistency.csv")
        report.save(self.out / "report.json")

    def _dvector_groups(self, per_voice):
        genders = {r.speaker_id: r.gender for r in self.eset}
        generated = {str(v.voice_id) for v in self.voices}
        groups = {"male": [], "female": [], "generated": []}
        for vid, vec in per_voice.items():
            if vid in genders:
                groups["male" if genders[vid] is aio.Gender.MALE else "female"].append((vid, vec))
            elif vid in generated:
                groups["generated"].append((vid, vec))
        return groups

    def export_plots(self):
        aio.export_grid(self.field, self.out / "grid.csv")
        self.ridge()
        pts = self.pca.transform(self.eset.X, n_components=2)
        aio.write_csv(
            self.out / "speakers2d.csv",
            ("speaker_id", "gender", "x", "y"),
            ((r.speaker_id, r.gender.value, float(p[0]), float(p[1])) for r, p in zip(self.eset, pts)),
        )
        vpts = self.pca.transform(np.stack([v.embedding for v in self.voices]), n_components=2)
        aio.write_csv(
            self.out / "voices2d.csv",
            ("voice_id", "method", "x", "y"),
            ((v.voice_id, v.method.value, float(p[0]), float(p[1])) for v, p in zip(self.voices, vpts)),
        )
        clf = fit_linear_classifier(self.eset, self.pca)
        aio.atomic_write_text(
            self.out / "boundary.json",
            json.dumps({"weight": clf.coef_.tolist(), "bias": clf.intercept_, "scale": clf.scale_}) + "\n",
        )
        if self.cfg.dvectors:
            per_voice = voice_dvectors(aio.load_dvectors(self.cfg.dvectors))
            if len(per_voice) >= 3:
                labels = {vid: g for g, items in self._dvector_groups(per_voice).items() for vid, _ in items}
                xy = pca2d_of_dvectors(list(per_voice.values()))
                aio.write_csv(
                    self.out / "dvectors2d.csv",
                    ("voice_id", "group", "x", "y"),
                    ((vid, labels.get(vid, "other"), float(p[0]), float(p[1])) for vid, p in zip(per_voice, xy)),
                )

    def synth(self):
        spec = self.cfg.synth_spec()
        eset = synth_embeddings(spec)
        aio.save_embeddings(eset, self.out / "embeddings.csv")
        males = [r.speaker_id for r in eset if r.gender is aio.Gender.MALE][: spec.n_voices]
        females = [r.speaker_id for r in eset if r.gender is aio.Gender.FEMALE][: spec.n_voices]
        idx = [int(i) for i in self.cfg.indices]
        generated = [0] + sorted(idx + [i + NEIGHBOR_OFFSET for i in idx])
        aio.save_dvectors(synth_dvector_corpus(spec, males, females, generated), self.out / "dvectors.jsonl")
        return eset


def _run(command, cfg: PipelineConfig):
    run = _Run(cfg)
    if command == "synth":
        run.synth()
        return
    if command == "pipeline":
        if cfg.embeddings is None:
            run.synth()
            cfg.embeddings = str(run.out / "embeddings.csv")
            cfg.embeddings_format = "csv"
            if cfg.dvectors is None:
                cfg.dvectors = str(run.out / "dvectors.jsonl")
        for stage in ("analyze", "fit_pca", "density", "ridge", "generate", "evaluate", "export_plots"):
            log.info("stage %s", stage)
            getattr(run, stage)()
        return
    stage = {"pca": "fit_pca", "export-plots": "export_plots"}.get(command, command)
    getattr(run, stage)()


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        cfg = resolve_config(args)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except AmbivoiceError as exc:
        print(f"ambivoice: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    try:
        _run(args.command, cfg)
    except (AmbivoiceError, ValueError, OSError) as exc:
        print(f"ambivoice {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get("AMBIVOICE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    sys.exit(dispatch(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
