"""Run configuration and the analysis stages that write report bundles.

Each stage takes a :class:`RunConfig`, loads the field (from a data file, a
previous run directory, or the synthetic generator) and writes its artifacts
into ``config.out``. :func:`run_analyze` chains every stage and finishes with
``manifest.json``, which lists each artifact with its SHA-256 and the hash
of the analysis-relevant configuration.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_field
from .coherence import PROPERTIES, coherence_report
from .errors import CoherenzaError, DegenerateRow, InputError
from .extremes import (
    phase_given_extremes,
    phase_given_phase_and_extremes,
    year_type_conditionals,
)
from .io import read_field, write_binary
from .phase import agreement_counts, local_transition_probs, national_transition_probs
from .report import (
    dump_json,
    emit_classification_map,
    emit_cluster_outputs,
    emit_histogram,
    write_columns,
    write_conditional_table,
    write_table,
)
from .spectral import SimilarityKind, build_similarity, filter_clusters, pair_normalizer, spectral_cluster
from .synth import config_from_tokens, generate_synthetic_with_meta
from .tables import AGREEMENT_BINS, Bins

FIELD_FILE = "field.bin"
EMIT_FORMATS = ("csv", "geojson", "svg")

CONFORMITY_BINS = Bins((0.0, 0.2, 0.4, 1.0), ("below 20%", "20-40%", ">=40%"), ("blue", "green", "red"))
PHASE_EXTREME_BINS = Bins((0.0, 0.5, 0.7, 1.0), ("below 50%", "50-70%", ">=70%"), ("blue", "green", "red"))

# map name -> (similarity kind, normaliser mode, threshold); "count" thresholds are year counts
CLUSTER_MAPS = (
    ("phase", SimilarityKind.PHASE, "total", 0.7),
    ("phase_extreme_years", SimilarityKind.PHASE_EXTREME_YEARS, "total", 0.7),
    ("pex", SimilarityKind.PEX_CO, "min", 0.5),
    ("pex_spatial", SimilarityKind.PEX_CO_SPATIAL, "count", 3),
    ("nex", SimilarityKind.NEX_CO, "min", 0.4),
    ("nex_spatial", SimilarityKind.NEX_CO_SPATIAL, "count", 3),
)


class ConfigError(CoherenzaError):
    pass


@dataclass(frozen=True)
class RunConfig:
    out: str
    input: str | None = None
    format: str | None = None
    synthetic: tuple = ()
    smooth: str = "off"
    tie: str = "positive"
    sigma: str = "population"
    threshold: float = 1.0
    k: int = 10
    seed: int = 0
    emit: tuple = EMIT_FORMATS
    cluster_smooth: str = "on"
    mccs_mode: str = "per_year"

    def __post_init__(self):
        if self.input is None and not self.synthetic:
            raise ConfigError("either --input or --synthetic is required")
        if self.input is not None and self.synthetic:
            raise ConfigError("--input and --synthetic are mutually exclusive")
        if self.smooth not in ("on", "off") or self.cluster_smooth not in ("on", "off"):
            raise ConfigError("--smooth must be 'on' or 'off'")
        if self.tie not in ("positive", "drop"):
            raise ConfigError("--tie must be 'positive' or 'drop'")
        if self.sigma not in ("population", "sample"):
            raise ConfigError("--sigma must be 'population' or 'sample'")
        if not self.threshold > 0:
            raise ConfigError("--threshold must be positive")
        if self.k < 2:
            raise ConfigError("--k must be at least 2")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
        bad = set(self.emit) - set(EMIT_FORMATS)
        if bad:
            raise ConfigError(f"unknown --emit format(s): {sorted(bad)}")
        if self.synthetic:
            try:
                config_from_tokens(self.synthetic)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def analysis_fields(self):
        """Everything that can change results; the output location is excluded."""
        d = asdict(self)
        del d["out"]
        d["synthetic"] = sorted(self.synthetic)
        d["emit"] = sorted(set(self.emit))
        return d

    def config_hash(self):
        blob = json.dumps(self.analysis_fields(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def load_field(config):
    """Field named by the config: synthetic, a run directory, or a data file."""
    if config.synthetic:
        field, _ = generate_synthetic_with_meta(config_from_tokens(config.synthetic))
        return field
    path = Path(config.input)
    if path.is_dir():
        path = path / FIELD_FILE
        if not path.exists():
            raise InputError(f"{config.input} is a directory without {FIELD_FILE}")
        return read_field(path, "bin")
    if not path.exists():
        raise InputError(f"input file {path} does not exist")
    return read_field(path, config.format)


@dataclass
class Stage:
    """Collects artifacts written by one run."""

    out: Path
    config: RunConfig
    written: list = field(default_factory=list)

    def path(self, name):
        p = self.out / name
        self.written.append(p)
        return p

    def wants(self, fmt):
        return fmt in self.config.emit


def _prepare(config):
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return Stage(out, config)


def _map(stage, name, grid, values, bins, title):
    gj = stage.path(f"{name}.geojson") if stage.wants("geojson") else None
    svg = stage.path(f"{name}.svg") if stage.wants("svg") else None
    if gj or svg:
        emit_classification_map(grid, values, bins, gj, svg, title)


def stage_ingest(stage, field):
    write_binary(field, stage.path(FIELD_FILE))
    if stage.wants("csv"):
        aimr = field.values.mean(axis=1)
        write_columns(stage.path("aimr.csv"), ["year", "aimr_mm"], [field.years, aimr])
    return {"n_locations": field.n_locations, "n_years": field.n_years, "first_year": field.first_year}


def _analyses(field, config, smooth):
    return analyze_field(field, smooth=smooth, tie=config.tie, sigma=config.sigma, k=config.threshold)


def stage_phase(stage, field):
    """Agreement maps for the raw and smoothed field, transition tables for the configured one."""
    cfg = stage.config
    grid = field.grid
    summary = {}
    for suffix, smooth in (("", False), ("_smoothed", True)):
        an = _analyses(field, cfg, smooth)
        ac = agreement_counts(an.phase, an.national_phase)
        rel = ac.relative
        labels = [AGREEMENT_BINS.labels[i] if i >= 0 else None for i in AGREEMENT_BINS.assign(rel)]
        if stage.wants("csv"):
            write_columns(
                stage.path(f"phase_agreement{suffix}.csv"),
                ["location_id", "lat", "lon", "pc", "n_valid", "relative", "bin"],
                [np.arange(grid.n_locations), grid.lats, grid.lons, ac.pc, ac.n_valid, rel, labels],
            )
            emit_histogram(rel, 0.1, stage.path(f"phase_histogram{suffix}.csv"))
        _map(stage, f"phase_agreement{suffix}", grid, rel, AGREEMENT_BINS, "Agreement with national phase")
        summary[f"agreement{suffix}"] = {
            "mean_pc": ac.mean_pc,
            "n_phase_years": ac.n_phase_years,
            "mean_relative": float(np.nanmean(rel)),
            "agreement_bins": dict(zip(AGREEMENT_BINS.labels, ac.histogram.tolist())),
        }

    an = _analyses(field, cfg, cfg.smooth == "on")
    nat = national_transition_probs(an.national_phase)
    loc = local_transition_probs(an.phase, an.national_phase)
    if stage.wants("csv"):
        write_conditional_table(stage.path("national_transitions.csv"), nat)
        write_conditional_table(stage.path("local_transitions.csv"), loc, grid)
    summary["smoothed_tables"] = an.smoothed
    summary["national_transitions"] = dict(zip(nat.keys, nat.prob()[0].tolist()))
    summary["local_transitions"] = loc.summary
    dump_json(summary, stage.path("phase_summary.json"))
    return summary


def stage_extremes(stage, field):
    cfg = stage.config
    an = _analyses(field, cfg, cfg.smooth == "on")
    cl = an.classes
    grid = field.grid
    if stage.wants("csv"):
        write_columns(
            stage.path("year_types.csv"),
            ["year", "aimr_mm", "spatial_type", "locational_type", "nf", "nd"],
            [cl.years, an.aimr.values, cl.spatial, cl.locational, cl.nf, cl.nd],
        )
    yt_loc = year_type_conditionals(cl, "locational")
    yt_sp = year_type_conditionals(cl, "spatial")
    pge = phase_given_extremes(an.phase, cl, "spatial")
    pgpe = phase_given_phase_and_extremes(an.phase, an.national_phase, cl, "spatial")
    if stage.wants("csv"):
        write_conditional_table(stage.path("year_type_conditionals.csv"), yt_loc, grid)
        write_conditional_table(stage.path("year_type_conditionals_spatial.csv"), yt_sp, grid)
        write_conditional_table(stage.path("phase_given_extremes.csv"), pge, grid)
        write_conditional_table(stage.path("phase_given_phase_extremes.csv"), pgpe, grid)
    _map(stage, "nex_given_spatial_nex", grid, yt_sp.prob("3|3"), CONFORMITY_BINS, "Local NEX in spatial NEX years")
    _map(stage, "pex_given_spatial_pex", grid, yt_sp.prob("2|2"), CONFORMITY_BINS, "Local PEX in spatial PEX years")
    _map(stage, "down_given_spatial_nex", grid, pge.prob("-1|T=3"), PHASE_EXTREME_BINS, "Negative phase in spatial NEX years")
    _map(stage, "up_given_spatial_pex", grid, pge.prob("+1|T=2"), PHASE_EXTREME_BINS, "Positive phase in spatial PEX years")
    summary = {
        "smoothed": an.smoothed,
        "nf_mean": cl.nf_mean,
        "nf_sd": cl.nf_sd,
        "nd_mean": cl.nd_mean,
        "nd_sd": cl.nd_sd,
        "mean_nf_by_locational_type": cl.mean_nf_by_locational_type(),
        "n_spatial_pex_years": int((cl.spatial == 2).sum()),
        "n_spatial_nex_years": int((cl.spatial == 3).sum()),
        "n_locational_pex_years": int((cl.locational == 2).sum()),
        "n_locational_nex_years": int((cl.locational == 3).sum()),
        "n_mixed_years": int((cl.locational == 4).sum()),
        "n_degenerate_locations": int(cl.degenerate.sum()),
        "year_type_given_locational": yt_loc.summary,
        "year_type_given_spatial": yt_sp.summary,
        "phase_given_spatial_extremes": pge.summary,
        "phase_given_phase_and_spatial_extremes": pgpe.summary,
    }
    dump_json(summary, stage.path("extremes_summary.json"))
    return summary


def stage_coherence(stage, field):
    cfg = stage.config
    an = _analyses(field, cfg, cfg.smooth == "on")
    rep = coherence_report(an, mccs_mode=cfg.mccs_mode)
    header, rows = rep.table()
    if stage.wants("csv"):
        write_table(stage.path("coherence_table.csv"), header, rows)
        detail = []
        for p in PROPERTIES:
            e = rep[p]
            detail.append([p.label, e.years.size, int(e.holders.sum()), e.mean_fraction_holding, e.mnn, e.mccs])
        write_table(
            stage.path("coherence_detail.csv"),
            ["property", "n_years", "holding_pairs", "mean_fraction_holding", "mnn", "mccs"],
            detail,
        )
    summary = {
        "mccs_mode": cfg.mccs_mode,
        "smoothed": an.smoothed,
        "MNN": {p.label: rep[p].mnn for p in PROPERTIES},
        "MCCS": {p.label: rep[p].mccs for p in PROPERTIES},
    }
    dump_json(summary, stage.path("coherence_summary.json"))
    return summary


def stage_cluster(stage, field):
    cfg = stage.config
    an = _analyses(field, cfg, cfg.cluster_smooth == "on")
    n = field.n_locations
    if cfg.k > n:
        raise ConfigError(f"--k {cfg.k} exceeds the {n} locations")
    summary = {"k": cfg.k, "seed": cfg.seed, "smoothed": an.smoothed, "maps": {}}
    for name, kind, mode, threshold in CLUSTER_MAPS:
        sim = build_similarity(kind, an)
        entry = {"kind": kind.value, "normalizer": mode, "threshold": threshold, "n_years": sim.n_years}
        try:
            assignment = spectral_cluster(sim, cfg.k, cfg.seed)
        except DegenerateRow as exc:
            entry["skipped"] = str(exc)
            summary["maps"][name] = entry
            continue
        norm = pair_normalizer(sim, mode)
        assignment = filter_clusters(assignment, sim, norm, threshold)
        emit_cluster_outputs(
            field.grid,
            assignment,
            stage.path(f"clusters_{name}.csv") if stage.wants("csv") else None,
            stage.path(f"clusters_{name}.geojson") if stage.wants("geojson") else None,
            stage.path(f"clusters_{name}.svg") if stage.wants("svg") else None,
            title=name,
        )
        entry.update(
            {
                "n_selected": int(assignment.selected.sum()),
                "cluster_sizes": np.bincount(assignment.labels, minlength=cfg.k).tolist(),
                "min_similarity": assignment.min_similarity,
                "mean_similarity": assignment.mean_similarity,
                "selected": assignment.selected,
                "n_degenerate": int(assignment.degenerate.sum()),
            }
        )
        summary["maps"][name] = entry
    dump_json(summary, stage.path("cluster_summary.json"))
    return summary


SUMMARY_FILES = {
    "phase": "phase_summary.json",
    "extremes": "extremes_summary.json",
    "coherence": "coherence_summary.json",
    "cluster": "cluster_summary.json",
}


def stage_report(stage, results):
    dump_json(results, stage.path("summary.json"))


def write_manifest(stage, input_digest):
    files = sorted(set(stage.written), key=lambda p: p.as_posix())
    entries = [
        {"path": p.relative_to(stage.out).as_posix(), "sha256": sha256_file(p), "bytes": p.stat().st_size}
        for p in files
    ]
    manifest = {
        "tool": "coherenza",
        "version": __version__,
        "config": stage.config.analysis_fields(),
        "config_hash": stage.config.config_hash(),
        "input_sha256": input_digest,
        "artifacts": entries,
    }
    dump_json(manifest, stage.out / "manifest.json")
    return manifest


def _input_digest(config, field):
    if config.input is None:
        return None
    p = Path(config.input)
    return sha256_file(p / FIELD_FILE if p.is_dir() else p)


def run_stage(name, config):
    """Run one named stage (``ingest``, ``phase``, ...) and return its summary."""
    stage = _prepare(config)
    field = load_field(config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if name == "ingest":
            return stage_ingest(stage, field)
        if name == "phase":
            return stage_phase(stage, field)
        if name == "extremes":
            return stage_extremes(stage, field)
        if name == "coherence":
            return stage_coherence(stage, field)
        if name == "cluster":
            return stage_cluster(stage, field)
    raise ValueError(f"unknown stage {name!r}")


def run_report(config):
    """Collect stage summaries found in the run directory into ``summary.json``
    and write a manifest covering every file in it."""
    stage = _prepare(config)
    results = {}
    for name, fname in SUMMARY_FILES.items():
        p = stage.out / fname
        if p.exists():
            results[name] = json.loads(p.read_text(encoding="utf-8"))
    if not results:
        raise InputError(f"no stage summaries found in {stage.out}")
    stage_report(stage, results)
    stage.written.extend(p for p in stage.out.iterdir() if p.is_file() and p.name != "manifest.json")
    field_path = stage.out / FIELD_FILE
    return write_manifest(stage, sha256_file(field_path) if field_path.exists() else None)


def run_analyze(config):
    """Full pipeline; returns the manifest dictionary."""
    stage = _prepare(config)
    field = load_field(config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        results = {
            "ingest": stage_ingest(stage, field),
            "phase": stage_phase(stage, field),
            "extremes": stage_extremes(stage, field),
            "coherence": stage_coherence(stage, field),
            "cluster": stage_cluster(stage, field),
        }
        stage_report(stage, results)
    return write_manifest(stage, _input_digest(config, field))
