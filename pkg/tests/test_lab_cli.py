import json
import math
import subprocess
import sys

import pytest

from isoheight.cli import main
from isoheight.errors import CertificateViolation
from isoheight.lab import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    TrialRecord,
    fit_exponent,
    read_csv,
    records_to_csv,
    run_experiment,
)
from isoheight import lab


def cfg(**kw):
    return ExperimentConfig(**kw)


def test_config_validation():
    for bad in (dict(experiment="nope"), dict(experiment="endred", trials=0),
                dict(experiment="endred", size_schedule=[]),
                dict(experiment="endred", size_schedule=[10, 5]),
                dict(experiment="endred", size_schedule=[10, 10]),
                dict(experiment="sympl-bound", g=0)):
        with pytest.raises(ConfigError):
            cfg(**bad)


def test_config_from_dict_aliases():
    c = ExperimentConfig.from_dict({"experiment": "endred", "sizes": "10,100",
                                    "ring": {"kind": "quadratic", "D": 8}, "out": "x.csv"})
    assert c.size_schedule == [10, 100] and c.out_path == "x.csv" and c.ring.D == 8
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "endred", "bogus": 1})


def test_sympl_trivial_record():
    recs = run_experiment(cfg(experiment="sympl-bound", g=1, trials=1, seed=0, size_schedule=[1]))
    assert len(recs) == 1
    assert recs[0].observed_height == 1


def test_isogeny_g1_degrees():
    recs = run_experiment(cfg(experiment="isogeny-pipeline", g=1, trials=10, seed=3,
                              size_schedule=[2, 4, 8]))
    assert len(recs) == 30
    assert all(r.observed_height <= r.certified_bound for r in recs)
    assert [r.size for r in recs] == sorted(r.size for r in recs)


@pytest.mark.parametrize("ring", [None, {"kind": "quadratic", "D": 8}, {"kind": "quadratic", "D": -4},
                                  {"kind": "matrix", "n": 3}])
def test_endred_experiment(ring):
    c = ExperimentConfig.from_dict({"experiment": "endred", "trials": 5, "sizes": [10, 1000],
                                    "ring": ring})
    recs = run_experiment(c)
    assert all(r.observed_height <= r.certified_bound for r in recs)


def test_siegel_experiment():
    recs = run_experiment(cfg(experiment="siegel-reduce", g=2, trials=3, size_schedule=[2, 4]))
    assert all(r.observed_height <= r.certified_bound for r in recs)


def test_seed_derivation():
    recs = run_experiment(cfg(experiment="sympl-bound", g=2, trials=4, seed=100, size_schedule=[5, 50]))
    assert [r.seed for r in recs] == [100, 101, 102, 103] * 2


def test_csv_format_and_roundtrip(tmp_path):
    path = tmp_path / "out.csv"
    recs = run_experiment(cfg(experiment="sympl-bound", g=3, trials=3, size_schedule=[10**4],
                              out_path=str(path)))
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    # big heights are plain decimal strings
    assert all(row.split(",")[5].isdigit() for row in text.splitlines()[1:])
    back = read_csv(str(path))
    assert [(r.size, r.observed_height, r.certified_bound) for r in back] == \
        [(r.size, r.observed_height, r.certified_bound) for r in recs]
    assert all(r.wall_time_ms is None for r in back)


def test_timing_flag_fills_wall_time():
    recs = run_experiment(cfg(experiment="sympl-bound", trials=2, size_schedule=[10], timing=True))
    assert all(r.wall_time_ms is not None and r.wall_time_ms >= 0 for r in recs)


def test_determinism_across_workers():
    base = dict(experiment="sympl-bound", g=2, trials=100, seed=7, size_schedule=[10])
    a = records_to_csv(run_experiment(cfg(**base)))
    b = records_to_csv(run_experiment(cfg(**base)))
    c = records_to_csv(run_experiment(cfg(**base, workers=8)))
    assert a == b == c


def test_violation_aborts_with_reproduction(monkeypatch):
    def bad(cfg, size, seed):
        return 10, 1

    monkeypatch.setitem(lab._TRIALS, "sympl-bound", bad)
    with pytest.raises(CertificateViolation, match="reproduce"):
        run_experiment(cfg(experiment="sympl-bound", size_schedule=[3]))


# -- fit ---------------------------------------------------------------------------------

def test_fit_power_law():
    slope, intercept = fit_exponent([(10, 100), (100, 10000)])
    assert abs(slope - 2.0) < 1e-10 and abs(intercept) < 1e-10


def test_fit_constant():
    slope, _ = fit_exponent([(10, 10), (100, 10)])
    assert abs(slope) < 1e-12


def test_fit_uses_max_per_size():
    slope, intercept = fit_exponent([(10, 1), (10, 1000), (100, 10**6), (100, 5)])
    assert abs(slope - 3.0) < 1e-10


def test_fit_synthetic_recovers_exponent():
    for k in (1, 2, 4, 12, 62):
        data = [(n, 3 * n ** k) for n in (2, 4, 8, 16, 32)]
        slope, intercept = fit_exponent(data)
        assert abs(slope - k) < 1e-10 and abs(intercept - math.log(3)) < 1e-10
    # half-integer exponent on perfect squares: size m^2, height m^5
    data = [(m * m, m ** 5) for m in (3, 10, 31, 100)]
    slope, _ = fit_exponent(data)
    assert abs(slope - 2.5) < 1e-10


def test_fit_degenerate():
    with pytest.raises(ValueError):
        fit_exponent([(10, 5), (10, 7)])


def test_fit_sympl_g2_below_budget():
    recs = run_experiment(cfg(experiment="sympl-bound", g=2, trials=10, seed=1,
                              size_schedule=[10, 100, 1000, 10000]))
    slope, _ = fit_exponent(recs)
    assert slope <= 12


# -- CLI --------------------------------------------------------------------------------

def test_cli_stdout(capsys):
    assert main(["sympl-bound", "--g", "1", "--trials", "1", "--seed", "0", "--sizes", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == ",".join(CSV_HEADER)
    assert out[1].startswith("sympl-bound,1,0,1,1,")


def test_cli_file_and_fit(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["isogeny-pipeline", "--g", "1", "--trials", "5", "--sizes", "2,4,8",
                 "--out", str(out)]) == 0
    assert out.exists()
    assert main(["fit", str(out)]) == 0
    assert "slope=" in capsys.readouterr().out


def test_cli_config_file_and_override(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"g": 2, "trials": 2, "sizes": [10, 20], "seed": 5,
                                "out": str(tmp_path / "a.csv")}))
    assert main(["sympl-bound", "--config", str(conf), "--trials", "3"]) == 0
    rows = (tmp_path / "a.csv").read_text().splitlines()[1:]
    assert len(rows) == 6
    assert all(r.split(",")[1] == "2" for r in rows)


def test_cli_ring_flag(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["endred", "--ring", '{"kind":"quadratic","D":8}', "--sizes", "10,100",
                 "--trials", "3", "--out", str(out)]) == 0


@pytest.mark.parametrize("argv", [
    ["sympl-bound", "--trials", "0"],
    ["sympl-bound", "--sizes", "10,5"],
    ["sympl-bound", "--sizes", "a,b"],
    ["endred", "--ring", "{not json"],
    ["endred", "--ring", '{"kind":"quadratic","D":9}'],
    ["nosuch"],
    ["sympl-bound", "--g", "x"],
])
def test_cli_bad_config_exit_3(argv):
    assert main(argv) == 3


def test_cli_io_errors(tmp_path):
    assert main(["sympl-bound", "--out", str(tmp_path / "missing" / "x.csv")]) == 4
    assert main(["sympl-bound", "--config", str(tmp_path / "nope.json")]) == 4
    assert main(["fit", str(tmp_path / "nope.csv")]) == 4


def test_cli_violation_exit_2(monkeypatch, capsys):
    monkeypatch.setitem(lab._TRIALS, "sympl-bound", lambda c, s, seed: (5, 1))
    assert main(["sympl-bound", "--sizes", "3", "--seed", "9"]) == 2
    err = capsys.readouterr().err
    assert "--seed 9" in err and "index 0" in err


def test_cli_precision_env(monkeypatch, tmp_path):
    monkeypatch.setenv("SIEGEL_PRECISION_BITS", "160")
    from isoheight.cli import _config_from_args, build_parser
    args = build_parser().parse_args(["siegel-reduce"])
    assert _config_from_args(args).precision_bits == 160
    args = build_parser().parse_args(["siegel-reduce", "--precision-bits", "96"])
    assert _config_from_args(args).precision_bits == 96


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "isoheight.cli", "sympl-bound", "--sizes", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("experiment,")


def test_record_row_formatting():
    r = TrialRecord("endred", 1, 0, 10, 10**30, 10**31, 0.1)
    row = r.row()
    assert row[4] == str(10**30) and row[7] == ""
