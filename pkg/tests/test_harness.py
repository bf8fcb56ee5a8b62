import math
import subprocess
import sys

import numpy as np
import pytest

from sgd_volterra.criticality import gamma_star
from sgd_volterra.harness.cli import main
from sgd_volterra.harness.compare import compare, sup_deviation
from sgd_volterra.harness.config import ConfigError, ExperimentConfig, parse_text, serialize
from sgd_volterra.harness.plots import PlotError, emit_plot_script
from sgd_volterra.harness.sweep import rate_sweep, write_sweep
from sgd_volterra.spectral import mp_measure
from sgd_volterra.traces import Trace
from sgd_volterra.volterra import VolterraGrid, VolterraSolution, solve

SMALL = """\
model = isotropic
n = 40
r = 0.5
gamma_frac = 0.5
R = 1
R_tilde = 1
epochs = 1
record_every = 0.25
repeats = 2
outputs = sgd, sde, volterra, criticality
volterra.dt = 0.01
diffusion.dt = 0.01
"""


def test_parse_and_defaults():
    cfg = parse_text(SMALL)
    assert cfg.n == 40 and cfg.d == 20 and cfg.r_eff == 0.5
    assert cfg["gamma_frac"] == (0.5,)
    assert cfg.outputs == ("sgd", "sde", "volterra", "criticality")
    assert cfg["sgd.beta"] == 1 and cfg.seeds == [0, 1]
    assert cfg.measure_kind() == "mp"


def test_serialize_roundtrip():
    cfg = parse_text(SMALL + "model.widths = 30, 20\nseed = 7\n")
    again = parse_text(serialize(cfg))
    assert again.values == cfg.values


def test_d_rounds_up():
    cfg = parse_text("n = 10\nr = 0.25\n")
    assert cfg.d == 3 and cfg.r_eff == 0.3


@pytest.mark.parametrize("text,msg", [
    ("n = 10\nbogus = 1\n", "line 2: unknown config key: bogus"),
    ("n = ten\n", "bad value for n"),
    ("n 10\n", "expected 'key = value'"),
    ("gamma = 1\ngamma_frac = 0.5\n", "only one of"),
    ("outputs = sgd, magic\n", "unknown output"),
    ("model = resnet\n", "model must be one of"),
    ("n = 4\nsgd.beta = 5\n", "sgd.beta"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_text(text)


def test_resolve_gammas():
    mu = mp_measure(0.5)
    cfg = parse_text("gamma_frac = 0.1, 0.9\n")
    assert [f for _, f in cfg.resolve_gammas(mu, 0.5)] == [0.1, 0.9]
    assert cfg.resolve_gammas(mu, 0.5)[1][0] == pytest.approx(0.9 * 4.0)
    assert parse_text("gamma = 0.3\n").resolve_gammas(mu, 0.5) == [(0.3, None)]


def _write(tmp_path, text=SMALL):
    p = tmp_path / "exp.cfg"
    p.write_text(text)
    return p


def test_cli_unknown_key_exits_2(tmp_path, capsys):
    assert main(["run", "--config", str(_write(tmp_path, "wat = 1\n")), "--out", str(tmp_path / "o")]) == 2
    assert "unknown config key: wat" in capsys.readouterr().err


def test_cli_requires_config(tmp_path):
    assert main(["simulate", "--out", str(tmp_path)]) == 2


def test_cli_bad_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["fly"])
    assert exc.value.code == 2


def test_cli_run_writes_everything(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(_write(tmp_path)), "--out", str(out)]) == 0
    for name in ("traces/sgd.csv", "traces/sde.csv", "volterra.csv", "criticality.txt", "comparison.csv",
                 "comparison_traces.csv", "run.log"):
        assert (out / name).is_file(), name
    vol = np.loadtxt(out / "volterra.csv", delimiter=",", skiprows=1)
    assert vol[0, 1] == pytest.approx(0.5 + 0.5, abs=1e-12)  # R/2 + R_tilde/2
    crit = (out / "criticality.txt").read_text()
    assert "g0.regime = subcritical" in crit
    assert "gamma = " in (out / "run.log").read_text()
    assert main(["plot", "--out", str(out)]) == 0
    assert (out / "volterra.gp").is_file() and (out / "comparison.gp").is_file()


def test_cli_is_deterministic(tmp_path):
    cfg = _write(tmp_path)
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d), "--threads", "2"]) == 0
    for name in ("sgd.csv", "sde.csv"):
        assert (tmp_path / "a/traces" / name).read_bytes() == (tmp_path / "b/traces" / name).read_bytes()


def test_cli_seed_override(tmp_path):
    cfg = _write(tmp_path, SMALL.replace("repeats = 2", "repeats = 1"))
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "9"])
    assert ",9," in (tmp_path / "a/traces/sgd.csv").read_text().splitlines()[1]


def test_cli_multiple_gammas_and_closed_form(tmp_path):
    text = SMALL.replace("gamma_frac = 0.5", "gamma_frac = 0.2, 0.6").replace(
        "outputs = sgd, sde, volterra, criticality", "outputs = volterra, closed_form")
    out = tmp_path / "o"
    assert main(["run", "--config", str(_write(tmp_path, text)), "--out", str(out)]) == 0
    for k in (0, 1):
        v = np.loadtxt(out / f"volterra_g{k}.csv", delimiter=",", skiprows=1)
        cf = np.loadtxt(out / f"closed_form_g{k}.csv", delimiter=",", skiprows=1)
        np.testing.assert_allclose(cf[:, 1], v[:, 1], rtol=1e-3)


def test_cli_divergent_gamma_is_not_an_error(tmp_path):
    text = SMALL.replace("gamma_frac = 0.5", "gamma_frac = 1.1")
    out = tmp_path / "o"
    assert main(["run", "--config", str(_write(tmp_path, text)), "--out", str(out)]) == 0
    assert "divergent" in (out / "criticality.txt").read_text()


def test_plot_without_csvs_exits_1(tmp_path):
    assert main(["plot", "--out", str(tmp_path / "empty")]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sgd_volterra", "plot", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 1


def test_emit_plot_script_missing_csv(tmp_path):
    with pytest.raises(PlotError):
        emit_plot_script([tmp_path / "nope.csv"], "volterra", tmp_path / "x.gp")


def _trace(model, seed, values, gamma=0.5):
    return Trace(times=np.array([0.0, 0.5, 1.0]), values=np.asarray(values, float), n=10, d=5,
                 gamma=gamma, beta=1, seed=seed, model=model)


def test_compare_by_hand():
    t = np.linspace(0, 1, 11)
    ref = VolterraSolution(grid=VolterraGrid(1.0, 0.1), psi=1.0 - 0.5 * t, psi_inf=0.0, params={})
    res = compare([_trace("sgd", 0, [1.0, 0.8, 0.5]), _trace("sgd", 1, [1.0, 0.7, 0.5]),
                   _trace("sde", 0, [1.0, 0.75, 0.4])], ref)
    # reference at 0.5 is 0.75; the sgd mean there is 0.75
    assert res.deviation("sgd") == pytest.approx(0.0, abs=1e-15)
    assert res.deviation("sde", normalized=False) == pytest.approx(0.1)
    assert res.get("sgd").n_seeds == 2
    assert sup_deviation([1, 2], [1.5, 2]) == 0.5


def test_compare_trims_past_horizon():
    ref = VolterraSolution(grid=VolterraGrid(0.5, 0.1), psi=np.ones(6), psi_inf=1.0, params={})
    with pytest.warns(UserWarning, match="horizon"):
        res = compare([_trace("sgd", 0, [1.0, 1.0, 1.0])], ref)
    assert res.get("sgd").times.tolist() == [0.0, 0.5]


def test_rate_sweep_examples(tmp_path):
    r = 4.0
    gs = gamma_star(mp_measure(r), r)
    rows = rate_sweep(r, [0.2, 0.45, 0.55])
    assert [row.regime for row in rows] == ["subcritical", "supercritical", "divergent"]
    for row in rows[:2]:
        assert row.fitted == pytest.approx(row.predicted, rel=1e-2)
    assert math.isnan(rows[2].fitted) and rows[2].flag
    p = write_sweep(rows, tmp_path / "rate_sweep.csv", gamma_star=gs)
    lines = p.read_text().splitlines()
    assert lines[0].startswith("# gamma_star = 0.333333")
    assert lines[1] == "gamma,fitted_rate,predicted_rate,regime,flag"
    emit_plot_script([p], "rate_sweep", tmp_path / "r.gp")
    assert "0.333333" in (tmp_path / "r.gp").read_text()


def test_solver_and_harness_share_time_grid(tmp_path):
    sol = solve(mp_measure(1.0), 1, 0, 1, 1.0, VolterraGrid(1.0, 0.25))
    assert sol.t.tolist() == [0, 0.25, 0.5, 0.75, 1.0]
