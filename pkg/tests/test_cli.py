import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from qep.cli import EXIT_INVALID, EXIT_OK, Grid, UsageError, main
from qep.core import Params
from qep.entanglement import concurrence_10, first_max_10, first_max_11, tau_xy_closed_form


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_evolve_columns_and_values(capsys):
    code, out, _ = run(capsys, "evolve", "--gamma", "1", "--kappa", "1", "--tau-max", "2", "--dt-sample", "0.5")
    assert code == EXIT_OK
    table = rows(out)
    assert list(table[0]) == ["tau", "a", "b", "c", "d", "re_m", "im_m", "re_h", "im_h", "C", "corr_xy"]
    assert [float(r["tau"]) for r in table] == [0.0, 0.5, 1.0, 1.5, 2.0]
    for r in table:
        assert float(r["C"]) == pytest.approx(concurrence_10(Params(1.0, 1.0), float(r["tau"])), abs=1e-11)
        total = sum(float(r[k]) for k in "abcd")
        assert total == pytest.approx(1.0, abs=1e-11)


def test_evolve_oracle_check(capsys):
    code, out, _ = run(capsys, "evolve", "--gamma", "1.02", "--kappa", "gamma", "--init", "11", "--tau-max", "3",
                       "--oracle-check")
    assert code == EXIT_OK
    devs = [float(r["max_dev"]) for r in rows(out)]
    assert len(devs) == 151
    assert max(devs) <= 1e-7


def test_evolve_mixed_start(capsys):
    code, out, _ = run(capsys, "evolve", "--alpha", "0.25", "--gamma", "1", "--tau-max", "0.1")
    assert code == EXIT_OK
    first = rows(out)[0]
    assert (float(first["a"]), float(first["b"])) == (0.75, 0.25)


@pytest.mark.parametrize(
    "argv",
    [
        ("evolve", "--gamma", "0.5", "--kappa", "0.8"),
        ("evolve", "--gamma", "-1"),
        ("evolve", "--alpha", "1.5"),
        ("evolve", "--kappa", "lots"),
        ("evolve", "--tau-max", "0"),
        ("sweep-max", "--grid", "1:2"),
        ("fig",),
    ],
)
def test_invalid_input_exits_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_INVALID
    assert out == ""
    assert err.startswith("qep: error:")


def test_reruns_are_byte_identical(capsys):
    argv = ("evolve", "--gamma", "0.7", "--kappa", "-0.3", "--tau-max", "5")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sample run\ngamma = 2.0\nkappa = 0.5\ntau-max = 1.0\ndt_sample = 0.25\n")
    _, from_file, _ = run(capsys, "evolve", "--config", str(cfg))
    assert [float(r["tau"]) for r in rows(from_file)] == [0.0, 0.25, 0.5, 0.75, 1.0]
    _, overridden, _ = run(capsys, "evolve", "--config", str(cfg), "--kappa", "-0.5")
    r = rows(overridden)[-1]
    assert float(r["C"]) == pytest.approx(concurrence_10(Params(2.0, -0.5), 1.0), abs=1e-11)
    cfg.write_text("colour = blue\n")
    assert run(capsys, "evolve", "--config", str(cfg))[0] == EXIT_INVALID


def test_out_file_and_gnuplot(capsys, tmp_path):
    path = tmp_path / "c.csv"
    code, out, _ = run(capsys, "fig", "--fig", "5a", "--grid", "0.5:1.5:3", "--out", str(path), "--gnuplot")
    assert code == EXIT_OK and out == ""
    assert path.read_text().splitlines()[0] == "gamma,kappa,c_max"
    assert "plot" in (tmp_path / "c.csv.gp").read_text()


def test_sweep_max_rows(capsys):
    code, out, _ = run(capsys, "sweep-max", "--init", "11", "--grid", "0.98:1.06:5")
    assert code == EXIT_OK
    table = rows(out)
    assert len(table) == 5
    mid = table[2]
    assert float(mid["gamma"]) == pytest.approx(1.02)
    assert float(mid["c_max"]) == pytest.approx(first_max_11(Params(1.02, 1.02)).value, abs=1e-12)


def test_sweep_max_without_entanglement_gives_nan(capsys):
    _, out, _ = run(capsys, "sweep-max", "--init", "11", "--kappa", "0", "--grid", "0.5:1:2")
    for r in rows(out):
        assert r["tau_star"] == "nan" and float(r["c_max"]) == 0.0


def test_sweep_max_alpha_list(capsys):
    _, out, _ = run(capsys, "sweep-max", "--alpha", "1,0.5", "--grid", "1:2:3")
    table = rows(out)
    assert [float(r["alpha"]) for r in table] == [1.0, 1.0, 1.0, 0.5, 0.5, 0.5]


def test_spectrum_symmetric(capsys):
    _, out, _ = run(capsys, "spectrum", "--gamma", "2", "--kappa", "0")
    r = rows(out)[0]
    assert r["phase"] == "PTSymmetric" and r["ep_order"] == "0"
    eigs = [complex(float(r[f"re_l{i}"]), float(r[f"im_l{i}"])) for i in range(5)]
    np.testing.assert_allclose(eigs, [-4, -2 - 1j, -2, -2 + 1j, 0], atol=1e-11)


def test_spectrum_at_ep(capsys):
    _, out, _ = run(capsys, "spectrum", "--gamma", "1", "--kappa", "1")
    r = rows(out)[0]
    assert r["phase"] == "Critical" and r["ep_order"] == "3" and r["jordan_blocks"] == "3"


def test_pt_phase_flip(capsys):
    _, out, _ = run(capsys, "pt-phase", "--grid", "0.9:1.1:3")
    table = rows(out)
    assert [r["phase"] for r in table] == ["PTSymmetric", "Critical", "Broken"]
    assert [r["all_real"] for r in table] == ["1", "1", "0"]
    assert float(table[2]["spectral_radius"]) == pytest.approx(math.exp(math.sqrt(0.21)), rel=1e-10)


def test_fig_2a_curves(capsys):
    _, out, _ = run(capsys, "fig", "--fig", "2a", "--gammas", "0.5,2", "--tau-max", "1")
    table = rows(out)
    assert len(table) == 2 * 51
    for r in table:
        assert float(r["kappa"]) == float(r["gamma"])
        p = Params(float(r["gamma"]), float(r["kappa"]))
        assert float(r["C"]) == pytest.approx(concurrence_10(p, float(r["tau"])), abs=1e-11)


def test_fig_5b_durations(capsys):
    _, out, _ = run(capsys, "fig", "--fig", "5b", "--grid", "1.02:1.02:1")
    r = rows(out)[0]
    assert list(r) == ["gamma", "kappa", "tau_star"]
    assert float(r["tau_star"]) == pytest.approx(first_max_11(Params(1.02, 1.02)).tau_star, abs=1e-10)


def test_fig_7b_durations(capsys):
    _, out, _ = run(capsys, "fig", "--fig", "7b", "--grid", "1:3:3")
    for r in rows(out):
        g = float(r["gamma"])
        assert float(r["tau_star"]) == pytest.approx(tau_xy_closed_form(Params(g, g)), abs=1e-10)


def test_grid_parse():
    assert Grid.parse("0.2:5:241").values()[-1] == 5.0
    with pytest.raises(UsageError):
        Grid.parse("0:1:0")


def _cli(env_threads):
    env = {"QEP_THREADS": env_threads, "PATH": "/usr/bin:/bin"}
    return subprocess.run(
        [sys.executable, "-m", "qep", "sweep-max", "--init", "11", "--grid", "0.5:3:40"],
        capture_output=True, text=True, env=env,
    )


def test_thread_count_does_not_change_output():
    serial, pooled = _cli("1"), _cli("4")
    assert serial.returncode == pooled.returncode == 0
    assert serial.stdout == pooled.stdout


def test_bad_thread_count():
    res = _cli("zero")
    assert res.returncode == EXIT_INVALID
    assert "QEP_THREADS" in res.stderr


def test_sweep_max_single_excitation_durations(capsys):
    _, out, _ = run(capsys, "sweep-max", "--init", "10", "--grid", "0.1:10:100")
    taus = [float(r["tau_star"]) for r in rows(out)]
    assert all(b < a for a, b in zip(taus, taus[1:]))
    assert max(taus) < math.pi / 2


def test_evolve_peak_matches_first_maximum(capsys):
    _, out, _ = run(capsys, "evolve", "--init", "10", "--gamma", "0.1", "--kappa", "0.1", "--tau-max", "10",
                    "--dt-sample", "0.01")
    table = rows(out)
    c = [float(r["C"]) for r in table]
    i = next(j for j in range(1, len(c) - 1) if c[j - 1] < c[j] >= c[j + 1])
    assert float(table[i]["tau"]) == pytest.approx(first_max_10(Params(0.1, 0.1)).tau_star, abs=0.01)
