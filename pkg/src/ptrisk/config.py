"""Experiment configuration: flat INI file with sections, one source of
truth for every protocol constant.

The defaults reproduce the evaluation protocol exactly (k=5, seed=42,
threshold=0.5, B=1000, alpha=0.05) and the default schema maps every
feature to a column of the same name, which is the layout the synthetic
generator writes.  Environment variables override nothing.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .curation import (
    CurationSettings,
    DEFAULT_BINARY_FALSE,
    DEFAULT_BINARY_TRUE,
    DEFAULT_F1_FEATURES,
    DEFAULT_F2_FEATURES,
    DEFAULT_GENDER_MAP,
    FeatureGroups,
    GROUP_TAGS,
)
from .errors import ConfigError
from .models import MODEL_KINDS
from .parsers import DEFAULT_VALID_FLAGS, Schema
from .synth import SynthConfig

_LIST_SEP = "|"


def _split_list(text: str) -> tuple:
    return tuple(part.strip() for part in text.split(_LIST_SEP) if part.strip())


def _parse_proxy_rules(text: str) -> tuple:
    """"target:src1+src2 ; other:a+b" -> ((target, (src1, src2)), ...)."""
    rules = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ConfigError(f"malformed proxy rule {item!r}; expected target:src1+src2")
        target, _, sources = item.partition(":")
        source_names = tuple(s.strip() for s in sources.split("+") if s.strip())
        if not target.strip() or not source_names:
            raise ConfigError(f"malformed proxy rule {item!r}")
        rules.append((target.strip(), source_names))
    return tuple(rules)


@dataclass(frozen=True)
class ExperimentConfig:
    input_path: str = "cohort.csv"
    schema: Schema = None
    groups: FeatureGroups = FeatureGroups()
    run_groups: tuple = GROUP_TAGS
    curation: CurationSettings = CurationSettings()
    valid_flags: frozenset = DEFAULT_VALID_FLAGS
    k: int = 5
    seed: int = 42
    threshold: float = 0.5
    bootstrap_samples: int = 1000
    alpha: float = 0.05
    run_models: tuple = MODEL_KINDS
    gbt_row_subsample: float = 0.8
    gbt_col_subsample: float = 0.8
    synth: SynthConfig = SynthConfig()
    out_dir: str = "out"

    def __post_init__(self):
        if self.schema is None:
            object.__setattr__(self, "schema", default_schema(self.groups))

    def validate(self) -> None:
        if self.k < 2:
            raise ConfigError("protocol k must be at least 2")
        if self.bootstrap_samples < 1:
            raise ConfigError("bootstrap_samples must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be within (0, 1)")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must be within [0, 1]")
        unknown = set(self.run_models) - set(MODEL_KINDS)
        if unknown:
            raise ConfigError(f"unknown model kinds: {sorted(unknown)}")
        if not self.run_models:
            raise ConfigError("at least one model kind must be selected")
        bad_tags = set(self.run_groups) - set(GROUP_TAGS)
        if bad_tags:
            raise ConfigError(f"unknown feature groups: {sorted(bad_tags)}")
        if not self.run_groups:
            raise ConfigError("at least one feature group must be selected")
        if not 0.0 <= self.curation.max_missing_fraction <= 1.0:
            raise ConfigError("max_missing_fraction must be within [0, 1]")
        for frac in (self.gbt_row_subsample, self.gbt_col_subsample):
            if not 0.0 < frac <= 1.0:
                raise ConfigError("GBT subsample fractions must be within (0, 1]")
        self.synth.validate()

    def to_dict(self) -> dict:
        """Canonical dict of every effective setting, used for hashing
        and for the config echo embedded in reports."""
        return {
            "input_path": str(self.input_path),
            "schema": {
                "record_id": self.schema.record_id,
                "qc_flag": self.schema.qc_flag,
                "pcr_result": self.schema.pcr_result,
                "source_cohort": self.schema.source_cohort,
                "visual_text": self.schema.visual_text,
                "questionnaire": dict(self.schema.questionnaire),
                "biomarkers": dict(self.schema.biomarkers),
                "pcr_positive": sorted(self.schema.pcr_positive),
                "pcr_negative": sorted(self.schema.pcr_negative),
            },
            "groups": {"f1": list(self.groups.f1), "f2": list(self.groups.f2)},
            "run_groups": list(self.run_groups),
            "curation": {
                "valid_flags": sorted(self.valid_flags),
                "max_missing_fraction": self.curation.max_missing_fraction,
                "drop_zero_variance": self.curation.drop_zero_variance,
                "blocklist": list(self.curation.blocklist),
                "proxy_rules": [[t, list(s)] for t, s in self.curation.proxy_rules],
                "binary_true": sorted(self.curation.binary_true),
                "binary_false": sorted(self.curation.binary_false),
                "gender_map": dict(sorted(self.curation.gender_map.items())),
                "age_bin_width": self.curation.age_bin_width,
            },
            "protocol": {
                "k": self.k,
                "seed": self.seed,
                "threshold": self.threshold,
                "bootstrap_samples": self.bootstrap_samples,
                "alpha": self.alpha,
            },
            "models": {
                "run": list(self.run_models),
                "gbt_row_subsample": self.gbt_row_subsample,
                "gbt_col_subsample": self.gbt_col_subsample,
            },
            "synth": {
                "n": self.synth.n,
                "prevalence": self.synth.prevalence,
                "biomarker_signal": self.synth.biomarker_signal,
                "reported_signal": self.synth.reported_signal,
                "missing_rate": self.synth.missing_rate,
                "semiquant_rate": self.synth.semiquant_rate,
                "seed": self.synth.seed,
                "signal_biomarkers": list(self.synth.signal_biomarkers),
                "signal_reported": list(self.synth.signal_reported),
            },
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def default_schema(groups: FeatureGroups = FeatureGroups()) -> Schema:
    return Schema(
        questionnaire={name: name for name in groups.f1},
        biomarkers={name: name for name in groups.f2},
    )


def _read_ini(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # column names are case-sensitive
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    return parser


def _get(parser, section, key, fallback):
    if parser.has_option(section, key):
        return parser.get(section, key)
    return fallback


def _get_typed(parser, section, key, fallback, convert, description):
    raw = _get(parser, section, key, None)
    if raw is None:
        return fallback
    try:
        return convert(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for [{section}] {key}: expected {description}") from exc


def _get_bool(parser, section, key, fallback):
    raw = _get(parser, section, key, None)
    if raw is None:
        return fallback
    norm = raw.strip().lower()
    if norm in ("true", "1", "yes", "on"):
        return True
    if norm in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"bad value for [{section}] {key}: expected a boolean")


def load_config(path=None) -> ExperimentConfig:
    """Build the effective configuration; ``path=None`` means defaults."""
    defaults = ExperimentConfig()
    if path is None:
        defaults.validate()
        return defaults
    parser = _read_ini(path)

    f1 = _split_list(_get(parser, "groups", "f1", _LIST_SEP.join(DEFAULT_F1_FEATURES)))
    f2 = _split_list(_get(parser, "groups", "f2", _LIST_SEP.join(DEFAULT_F2_FEATURES)))
    groups = FeatureGroups(f1=f1, f2=f2)

    questionnaire = (
        dict(parser.items("schema.questionnaire"))
        if parser.has_section("schema.questionnaire")
        else {name: name for name in groups.f1}
    )
    biomarkers = (
        dict(parser.items("schema.biomarkers"))
        if parser.has_section("schema.biomarkers")
        else {name: name for name in groups.f2}
    )
    schema = Schema(
        record_id=_get(parser, "schema", "record_id", "record_id"),
        qc_flag=_get(parser, "schema", "qc_flag", "qc_flag"),
        pcr_result=_get(parser, "schema", "pcr_result", "pcr_result"),
        source_cohort=_get(parser, "schema", "source_cohort", "source_cohort"),
        visual_text=_get(parser, "schema", "visual_text", "visual_text"),
        questionnaire=questionnaire,
        biomarkers=biomarkers,
        pcr_positive=frozenset(
            v.lower()
            for v in _split_list(
                _get(parser, "schema.pcr_values", "positive", "pos|positive|1|true|yes|+")
            )
        ),
        pcr_negative=frozenset(
            v.lower()
            for v in _split_list(
                _get(parser, "schema.pcr_values", "negative", "neg|negative|0|false|no|-")
            )
        ),
    )

    gender_map = {}
    for token in _split_list(_get(parser, "curation", "gender_male", "male|m")):
        gender_map[token.lower()] = 1.0
    for token in _split_list(_get(parser, "curation", "gender_female", "female|f")):
        gender_map[token.lower()] = 0.0
    curation = CurationSettings(
        binary_true=frozenset(
            v.lower()
            for v in _split_list(
                _get(parser, "curation", "binary_true", _LIST_SEP.join(sorted(DEFAULT_BINARY_TRUE)))
            )
        ),
        binary_false=frozenset(
            v.lower()
            for v in _split_list(
                _get(parser, "curation", "binary_false", _LIST_SEP.join(sorted(DEFAULT_BINARY_FALSE)))
            )
        ),
        gender_map=gender_map or dict(DEFAULT_GENDER_MAP),
        max_missing_fraction=_get_typed(
            parser, "curation", "max_missing_fraction", 0.30, float, "a number"
        ),
        drop_zero_variance=_get_bool(parser, "curation", "drop_zero_variance", True),
        blocklist=_split_list(_get(parser, "curation", "blocklist", "")),
        proxy_rules=_parse_proxy_rules(_get(parser, "curation", "proxy_rules", "")),
        age_bin_width=_get_typed(parser, "curation", "age_bin_width", 5, int, "an integer"),
    )

    synth = SynthConfig(
        n=_get_typed(parser, "synth", "n", defaults.synth.n, int, "an integer"),
        prevalence=_get_typed(
            parser, "synth", "prevalence", defaults.synth.prevalence, float, "a number"
        ),
        biomarker_signal=_get_typed(
            parser, "synth", "biomarker_signal", 0.0, float, "a number"
        ),
        reported_signal=_get_typed(
            parser, "synth", "reported_signal", 0.0, float, "a number"
        ),
        missing_rate=_get_typed(parser, "synth", "missing_rate", 0.0, float, "a number"),
        semiquant_rate=_get_typed(parser, "synth", "semiquant_rate", 0.0, float, "a number"),
        seed=_get_typed(parser, "synth", "seed", defaults.synth.seed, int, "an integer"),
        signal_biomarkers=_split_list(
            _get(parser, "synth", "signal_biomarkers", _LIST_SEP.join(defaults.synth.signal_biomarkers))
        ),
        signal_reported=_split_list(
            _get(parser, "synth", "signal_reported", _LIST_SEP.join(defaults.synth.signal_reported))
        ),
    )

    config = ExperimentConfig(
        input_path=_get(parser, "input", "path", "cohort.csv"),
        schema=schema,
        groups=groups,
        run_groups=_split_list(_get(parser, "groups", "run", _LIST_SEP.join(GROUP_TAGS))),
        curation=curation,
        valid_flags=frozenset(
            _split_list(_get(parser, "curation", "valid_flags", _LIST_SEP.join(sorted(DEFAULT_VALID_FLAGS))))
        ),
        k=_get_typed(parser, "protocol", "k", 5, int, "an integer"),
        seed=_get_typed(parser, "protocol", "seed", 42, int, "an integer"),
        threshold=_get_typed(parser, "protocol", "threshold", 0.5, float, "a number"),
        bootstrap_samples=_get_typed(
            parser, "protocol", "bootstrap_samples", 1000, int, "an integer"
        ),
        alpha=_get_typed(parser, "protocol", "alpha", 0.05, float, "a number"),
        run_models=_split_list(_get(parser, "models", "run", _LIST_SEP.join(MODEL_KINDS))),
        gbt_row_subsample=_get_typed(
            parser, "models", "gbt_row_subsample", 0.8, float, "a number"
        ),
        gbt_col_subsample=_get_typed(
            parser, "models", "gbt_col_subsample", 0.8, float, "a number"
        ),
        synth=synth,
        out_dir=_get(parser, "output", "dir", "out"),
    )
    config.validate()
    return config


def with_out_dir(config: ExperimentConfig, out_dir) -> ExperimentConfig:
    return replace(config, out_dir=str(out_dir))


def with_synth_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(config, synth=replace(config.synth, seed=seed))
