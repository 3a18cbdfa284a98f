import json

import pytest

from fsqkd.cli import EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_presets_lists_everything(capsys):
    code, out, _ = run(capsys, "presets")
    assert code == EXIT_OK
    for name in ("NIR800", "NIR1550", "MIR_UPCONV", "MIR_REALISTIC", "MIR_OPTIMIZED",
                 "CLEAR", "CLEAR_TURB", "RAIN", "RAIN_TURB", "FOG", "FOG_TURB"):
        assert name in out


def test_budget(capsys):
    code, out, _ = run(capsys, "budget", "--distance", "100")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["trace"] == "NIR1550" and data["weather"] == "CLEAR"
    assert data["total_db"] == pytest.approx(11.086822478581301, rel=1e-9)


def test_budget_bad_preset_exits_1(capsys):
    code, _, err = run(capsys, "budget", "--distance", "1", "--preset", "HAIL")
    assert code == EXIT_INVALID
    assert "HAIL" in err


def test_budget_negative_distance_exits_1(capsys):
    code, _, err = run(capsys, "budget", "--distance", "-1")
    assert code == EXIT_INVALID and err.startswith("error:")


def test_missing_scenario_file_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--scenario", str(tmp_path / "nope.ini"))
    assert code == EXIT_INVALID
    assert "nope.ini" in err


def _scenario(tmp_path, body):
    path = tmp_path / "s.ini"
    path.write_text(body)
    return str(path)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_sweep_to_file(capsys, tmp_path, fmt):
    sc = _scenario(tmp_path, "[weather]\npreset = FOG\n[sweep]\nd_end = 4\nd_step = 2\n")
    out = tmp_path / f"rows.{fmt}"
    code, stdout, _ = run(capsys, "sweep", "--scenario", sc, "--out", str(out), "--format", fmt)
    assert code == EXIT_OK and stdout == ""
    text = out.read_text()
    if fmt == "json":
        payload = json.loads(text)
        assert len(payload["rows"]) == 3
        assert payload["metadata"]["weather_name"] == "FOG"
    else:
        data = [l for l in text.splitlines() if not l.startswith("#")]
        assert len(data) == 4


def test_sweep_reruns_are_byte_identical(capsys, tmp_path):
    sc = _scenario(tmp_path, "[weather]\npreset = RAIN\n[sweep]\nd_end = 30\nd_step = 3\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "sweep", "--scenario", sc, "--out", str(a))[0] == EXIT_OK
    assert run(capsys, "sweep", "--scenario", sc, "--out", str(b), "--workers", "3")[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_sweep_infeasible_everywhere_exits_2(capsys, tmp_path):
    sc = _scenario(tmp_path, "[weather]\npreset = FOG\n[sweep]\nd_start = 100\nd_end = 200\n")
    code, out, err = run(capsys, "sweep", "--scenario", sc)
    assert code == EXIT_INFEASIBLE
    assert "infeasible" in err or "no feasible" in err
    assert out.count("\n") > 1  # rows are still emitted


def test_flags_override_scenario(capsys, tmp_path):
    sc = _scenario(tmp_path, "[link]\ntrace = NIR800\n[weather]\npreset = FOG\n")
    code, out, _ = run(capsys, "budget", "--scenario", sc, "--distance", "5",
                       "--trace", "MIR_UPCONV", "--preset", "RAIN")
    data = json.loads(out)
    assert code == EXIT_OK
    assert (data["trace"], data["weather"]) == ("MIR_UPCONV", "RAIN")


def test_mc(capsys):
    code, out, _ = run(capsys, "mc", "--tau", "0.1", "--n-pulses", "20000", "--seed", "3")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["seed"] == 3 and len(data["cells"]) == 4
    assert sum(c["detections"] for c in data["cells"]) > 0


def test_mc_rejects_bad_tau(capsys):
    assert run(capsys, "mc", "--tau", "1.5", "--n-pulses", "10")[0] == EXIT_INVALID


def test_blackbody(capsys):
    code, out, _ = run(capsys, "blackbody", "--points", "5")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "wavelength_um,radiance_5778K,radiance_288K"
    assert len([l for l in lines if not l.startswith("#")]) == 6
    assert any("wien_peak_um[5778K]" in l for l in lines)
