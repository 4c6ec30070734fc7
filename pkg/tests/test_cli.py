import hashlib
import json
from pathlib import Path

import pytest

from ptrisk.cli import main
from ptrisk.config import load_config
from ptrisk.report import _fmt


def write_ini(path: Path, out_dir: Path, **overrides) -> Path:
    sections = {
        "input": {"path": str(out_dir / "cohort.csv")},
        "synth": {"n": "60", "prevalence": "0.7", "biomarker_signal": "0.9", "seed": "7"},
        "protocol": {"bootstrap_samples": "50"},
        "models": {"run": "RF"},
        "groups": {"run": "F2"},
        "output": {"dir": str(out_dir)},
    }
    for section, values in overrides.items():
        sections.setdefault(section, {}).update(values)
    lines = []
    for section, values in sections.items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in values.items())
    path.write_text("\n".join(lines) + "\n")
    return path


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_synth_default_demo(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path)]) == 0
    cohort = (tmp_path / "cohort.csv").read_text().splitlines()
    assert len(cohort) == 94  # header + 93 rows
    assert sum(1 for line in cohort[1:] if line.endswith("POS")) == 74
    sidecar = json.loads((tmp_path / "cohort_sidecar.json").read_text())
    assert sidecar["n_positive"] == 74


def test_synth_seed_changes_digest(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["synth", "--out", str(a), "--seed", "1"]) == 0
    assert main(["synth", "--out", str(b), "--seed", "2"]) == 0
    assert digest(a / "cohort.csv") != digest(b / "cohort.csv")


def test_synth_invalid_prevalence_exit_1(tmp_path, capsys):
    ini = write_ini(tmp_path / "cfg.ini", tmp_path, synth={"prevalence": "1.5"})
    assert main(["synth", "--config", str(ini)]) == 1
    assert "prevalence" in capsys.readouterr().err


def test_run_restricted_grid(tmp_path, capsys):
    ini = write_ini(tmp_path / "cfg.ini", tmp_path)
    assert main(["synth", "--config", str(ini)]) == 0
    assert main(["run", "--config", str(ini)]) == 0
    assert (tmp_path / "metrics_F2_RF.json").exists()
    assert (tmp_path / "oof_F2_RF.csv").exists()
    payload = json.loads((tmp_path / "metrics_F2_RF.json").read_text())
    assert payload["protocol"] == {
        "k": 5,
        "seed": 42,
        "threshold": 0.5,
        "bootstrap_samples": 50,
        "alpha": 0.05,
    }
    assert payload["n"] == 60
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["complete"] is True
    assert set(manifest["files"]) == {
        "curation_report.json",
        "cohort_summary.json",
        "metrics_F2_RF.json",
        "oof_F2_RF.csv",
        "table_F2.csv",
        "table_F2_extended.csv",
        "plot_auc_ci.csv",
        "plot_sens_spec.csv",
        "plot_age_hist.csv",
    }


def test_run_missing_input_exit_2(tmp_path, capsys):
    ini = write_ini(tmp_path / "cfg.ini", tmp_path)
    assert main(["run", "--config", str(ini)]) == 2
    err = capsys.readouterr().err
    assert "ingest" in err
    # partial outputs are removed on failure
    assert not (tmp_path / "manifest.json").exists()


def test_run_internal_error_exit_3(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr("ptrisk.cli.run_experiment", lambda config: 1 / 0)
    ini = write_ini(tmp_path / "cfg.ini", tmp_path)
    assert main(["run", "--config", str(ini)]) == 3


def test_oof_file_shape(tmp_path):
    ini = write_ini(tmp_path / "cfg.ini", tmp_path)
    main(["synth", "--config", str(ini)])
    main(["run", "--config", str(ini)])
    lines = (tmp_path / "oof_F2_RF.csv").read_text().splitlines()
    assert lines[0] == "record_id,fold,y,p_hat"
    assert len(lines) == 61
    record_id, fold, y, p_hat = lines[1].split(",")
    assert record_id.startswith("S")
    assert int(fold) in range(5)
    assert int(y) in (0, 1)
    assert 0.0 <= float(p_hat) <= 1.0


def test_full_grid_cardinality_and_tables(tmp_path):
    ini = write_ini(
        tmp_path / "cfg.ini",
        tmp_path,
        models={"run": "LR|DT|RF|GBT|KNN"},
        groups={"run": "F1|F2|F3"},
        synth={"n": "50", "prevalence": "0.6", "biomarker_signal": "0.9", "seed": "3"},
        protocol={"bootstrap_samples": "25"},
    )
    assert main(["synth", "--config", str(ini)]) == 0
    assert main(["run", "--config", str(ini)]) == 0
    metrics = list(tmp_path.glob("metrics_*.json"))
    assert len(metrics) == 15
    table = (tmp_path / "table_F1.csv").read_text().splitlines()
    assert table[0] == "model,auc_95ci,precision_95ci,f1_95ci"
    assert [line.split(",")[0] for line in table[1:6]] == ["LR", "DT", "RF", "XGB", "KNN"]
    assert table[6].startswith("#")  # XGB footnote
    auc_rows = (tmp_path / "plot_auc_ci.csv").read_text().splitlines()
    assert auc_rows[1].startswith("reference,,,0.5")
    assert len(auc_rows) == 2 + 15  # header + reference + grid
    hist_rows = (tmp_path / "plot_age_hist.csv").read_text().splitlines()[1:]
    assert sum(int(r.split(",")[2]) for r in hist_rows) == 50


def test_rerun_reproduces_digests(tmp_path):
    ini = write_ini(tmp_path / "cfg.ini", tmp_path)
    main(["synth", "--config", str(ini)])
    assert main(["run", "--config", str(ini)]) == 0
    first = json.loads((tmp_path / "manifest.json").read_text())
    assert main(["run", "--config", str(ini)]) == 0
    second = json.loads((tmp_path / "manifest.json").read_text())
    assert first == second


def test_tables_and_plotdata_regenerate(tmp_path):
    ini = write_ini(tmp_path / "cfg.ini", tmp_path)
    main(["synth", "--config", str(ini)])
    main(["run", "--config", str(ini)])
    before = digest(tmp_path / "table_F2.csv")
    (tmp_path / "table_F2.csv").unlink()
    assert main(["tables", "--config", str(ini)]) == 0
    assert digest(tmp_path / "table_F2.csv") == before
    before_plot = digest(tmp_path / "plot_auc_ci.csv")
    assert main(["plotdata", "--config", str(ini)]) == 0
    assert digest(tmp_path / "plot_auc_ci.csv") == before_plot


def test_tables_on_incomplete_bundle_exit_2(tmp_path, capsys):
    ini = write_ini(tmp_path / "cfg.ini", tmp_path)
    main(["synth", "--config", str(ini)])
    main(["run", "--config", str(ini)])
    (tmp_path / "metrics_F2_RF.json").unlink()
    assert main(["tables", "--config", str(ini)]) == 2
    assert "F2/RF" in capsys.readouterr().err


def test_fmt_rendering():
    assert _fmt(0.672649, 0.5557, 0.7923, 4) == "0.6726 [0.5557, 0.7923]"
    assert _fmt(0.5, 0.25, 0.75, 3) == "0.500 [0.250, 0.750]"
    assert _fmt(None, None, None, 4) == "NA(single-class)"
    assert _fmt(0.25, None, None, 3) == "0.250 [NA, NA]"


def test_load_config_defaults_match_protocol(tmp_path):
    config = load_config(None)
    assert (config.k, config.seed, config.threshold) == (5, 42, 0.5)
    assert (config.bootstrap_samples, config.alpha) == (1000, 0.05)
    assert config.run_models == ("LR", "DT", "RF", "GBT", "KNN")
    assert config.run_groups == ("F1", "F2", "F3")
    assert len(config.groups.f1) == 13 and len(config.groups.f2) == 9


def test_load_config_parses_sections(tmp_path):
    ini = tmp_path / "cfg.ini"
    ini.write_text(
        "\n".join(
            [
                "[protocol]",
                "k = 4",
                "seed = 9",
                "[models]",
                "run = LR|KNN",
                "gbt_row_subsample = 0.5",
                "[curation]",
                "max_missing_fraction = 0.2",
                "blocklist = lab_result_code",
                "proxy_rules = irritation:genital_irritation+dysuria",
                "[schema]",
                "record_id = SampleID",
            ]
        )
    )
    config = load_config(ini)
    assert config.k == 4 and config.seed == 9
    assert config.run_models == ("LR", "KNN")
    assert config.gbt_row_subsample == 0.5
    assert config.curation.max_missing_fraction == 0.2
    assert config.curation.blocklist == ("lab_result_code",)
    assert config.curation.proxy_rules == (("irritation", ("genital_irritation", "dysuria")),)
    assert config.schema.record_id == "SampleID"


def test_load_config_rejects_bad_values(tmp_path):
    from ptrisk.errors import ConfigError

    ini = tmp_path / "bad.ini"
    ini.write_text("[protocol]\nk = covfefe\n")
    with pytest.raises(ConfigError):
        load_config(ini)
    ini.write_text("[models]\nrun = SVM\n")
    with pytest.raises(ConfigError):
        load_config(ini)
