import csv
import json
import math

import numpy as np
import pytest

from easer_sim.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    rows = list(csv.reader(lines[1:]))
    return rows[0], rows[1:]


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_distribution_at_zero_tau(tmp_path):
    code, out = run(tmp_path, "distribution", "--tau", "0")
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["n", "P"]
    assert rows == [["0", "1"]]


def test_distribution_sums_to_one(tmp_path):
    code, out = run(tmp_path, "distribution", "--tau", "0.5", "--cutoff", "30")
    assert code == EXIT_OK
    _, rows = read_csv(out)
    assert sum(float(p) for _, p in rows) == pytest.approx(1, abs=1e-10)


def test_amplify_table(tmp_path):
    code, out = run(tmp_path, "amplify")
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["term", "ideal_ratio", "measured_ref", "measured_err"]
    table = {r[0]: [float(x) for x in r[1:]] for r in rows}
    assert table["|1,0;0,1>"] == pytest.approx([2.0, 1.95, 0.10])
    assert table["|1,1;1,1>"] == pytest.approx([4.0, 4.1, 0.3])
    assert table["|2,0;0,2>"] == pytest.approx([16 / 3, 5.3, 0.6])
    assert table["second_pass_4fold"] == pytest.approx([16.0, 17.0, 2.0])


def test_fringe_scan_order_four(tmp_path):
    code, out = run(tmp_path, "fringe-scan", "--config", str(write_ini(tmp_path, "[scan]\norder = 4\nsteps = 41\n")))
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["theta_rad", "value"]
    theta = np.array([float(r[0]) for r in rows])
    value = np.array([float(r[1]) for r in rows])
    mask = np.abs(1 + np.cos(theta)) > 1e-3
    ratio = value[mask] / (1 + np.cos(theta[mask])) ** 2
    assert np.allclose(ratio, ratio[0], rtol=1e-12)


def test_delay_scan_columns(tmp_path):
    ini = write_ini(tmp_path, "[scan]\nstart = -1500\nstop = 1500\nsteps = 11\nterm = |1,1;1,1>\n")
    code, out = run(tmp_path, "delay-scan", "--config", str(ini))
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["delay_um", "rate_max", "rate_min", "rate_at_theta"]
    arr = np.array(rows, dtype=float)
    assert np.all(arr[:, 1] >= arr[:, 3]) and np.all(arr[:, 3] >= arr[:, 2])
    assert arr[5, 1] / arr[0, 1] == pytest.approx(4.0, rel=1e-6)


def test_project_report(tmp_path):
    code, out = run(tmp_path, "project")
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert header == ["component", "amplitude_re", "amplitude_im"]
    table = {r[0]: float(r[1]) for r in rows}
    assert table["|1,0;0,2>"] == pytest.approx(1 / math.sqrt(2))
    assert table["|0,1;1,1>"] == pytest.approx(-1 / math.sqrt(2))
    assert table["schmidt_0"] == pytest.approx(1 / math.sqrt(2))
    assert table["schmidt_1"] == pytest.approx(1 / math.sqrt(2))


def test_montecarlo_reproducible(tmp_path):
    code1, out1 = run(tmp_path, "montecarlo", "--seed", "5", "--tau", "0.2", name="a.csv")
    code2, out2 = run(tmp_path, "montecarlo", "--seed", "5", "--tau", "0.2", name="b.csv")
    assert code1 == code2 == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    header, rows = read_csv(out1)
    assert header == ["pattern", "analytic_p", "sampled_count", "pulses"]
    for _, p, count, pulses in rows:
        p, count, pulses = float(p), int(count), int(pulses)
        assert abs(count - p * pulses) <= 4 * math.sqrt(p * (1 - p) * pulses) + 1


@pytest.mark.parametrize("scenario", ["distribution", "amplify", "fringe-scan", "project"])
def test_json_output(tmp_path, scenario):
    code, out = run(tmp_path, scenario, "--format", "json", name="out.json")
    assert code == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["scenario"] == scenario
    assert all(len(r) == len(payload["columns"]) for r in payload["rows"])


@pytest.mark.parametrize("scenario", ["distribution", "delay-scan", "fringe-scan", "amplify", "project", "montecarlo"])
def test_byte_identical_reruns(tmp_path, scenario):
    ini = write_ini(tmp_path, "[scan]\nsteps = 21\n[montecarlo]\npulses = 10000\n")
    _, a = run(tmp_path, scenario, "--config", str(ini), name="a.csv")
    _, b = run(tmp_path, scenario, "--config", str(ini), name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    ini = write_ini(tmp_path, "[pdc]\ntau = 0.3\ncutoff = 15\n")
    _, a = run(tmp_path, "distribution", "--config", str(ini), name="a.csv")
    _, b = run(tmp_path, "distribution", "--config", str(ini), "--tau", "0", name="b.csv")
    assert len(read_csv(a)[1]) > 1
    assert read_csv(b)[1] == [["0", "1"]]


def test_mean_pairs_option(tmp_path):
    ini = write_ini(tmp_path, "[pdc]\nmean_pairs = 1.0\ncutoff = 60\n")
    _, out = run(tmp_path, "distribution", "--config", str(ini))
    _, rows = read_csv(out)
    mean = sum(int(n) * float(p) for n, p in rows)
    assert mean == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize(
    "body, field",
    [
        ("[pdc]\ntau = abc\n", "pdc.tau"),
        ("[scan]\nsteps = 1\n", "scan.steps"),
        ("[double_pass]\noverlap = 2\n", "double_pass"),
        ("[output]\nformat = xml\n", "output.format"),
        ("[pdc]\nbogus = 1\n", "pdc.bogus"),
        ("[detection]\nbasis = sideways\n", "detection.basis"),
    ],
)
def test_config_errors_name_field(tmp_path, capsys, body, field):
    ini = write_ini(tmp_path, body)
    code = main(["amplify", "--config", str(ini)])
    assert code == EXIT_CONFIG
    assert field in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["amplify", "--config", str(tmp_path / "nope.ini")]) == EXIT_CONFIG


def test_unknown_scenario():
    assert main(["bogus"]) == EXIT_CONFIG


def test_numeric_failure_exit_code(tmp_path, capsys):
    # tau beyond the perturbative range
    code = main(["amplify", "--tau", "0.5", "--cutoff", "40", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_NUMERIC
    assert "amplify" in capsys.readouterr().err


def test_stdout_when_no_out(capsys):
    assert main(["distribution", "--tau", "0"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[1:] == ["n,P", "0,1"]


def test_help_mentions_delay_units(capsys):
    with pytest.raises(SystemExit):
        from easer_sim.cli import make_parser

        make_parser().parse_args(["--help"])
    assert "optical path" in capsys.readouterr().out


def write_ini(tmp_path, body):
    path = tmp_path / "run.ini"
    path.write_text(body)
    return path


def test_inline_comments_and_term_semicolon(tmp_path):
    ini = write_ini(tmp_path, "[pdc]\ntau = 0   ; no pairs\n[scan]\nterm = |1,1;1,1>\nsteps = 5\n")
    _, a = run(tmp_path, "distribution", "--config", str(ini), name="a.csv")
    assert read_csv(a)[1] == [["0", "1"]]
    code, b = run(tmp_path, "delay-scan", "--config", str(ini), name="b.csv")
    assert code == EXIT_OK
    assert "|1,1;1,1>" in b.read_text().splitlines()[0]
