import csv
import io
import json

import pytest

from liouville_verify.campaigns import CAMPAIGNS, CampaignConfig, run_campaign
from liouville_verify.cli import main
from liouville_verify.errors import UsageError


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_alpha(capsys):
    code, out, _ = _run(capsys, "alpha", "--solution", "gamma:0.75", "--tol", "1e-8")
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["computed"]) == pytest.approx(-1.5, abs=1e-6)
    assert "panels=" in row["note"]


def test_total_curvature_and_avr(capsys):
    code, out, _ = _run(capsys, "total-curvature", "--metric", "gamma:0.75", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and rows[0]["computed"] == pytest.approx(3.14159265, rel=1e-6)
    code, out, _ = _run(capsys, "avr", "--metric", "gamma:0.6")
    assert code == 0 and "HLT.gap[gamma:0.6]" in out
    code, _, err = _run(capsys, "avr", "--metric", "spherical")
    assert code == 1 and "CompletenessError" in err


def test_distance_slope_and_residual(capsys):
    assert _run(capsys, "distance-slope", "--metric", "gamma:0.9")[0] == 0
    code, out = _run(capsys, "distance-slope", "--metric", "gamma:0.75", "--method", "eikonal", "--grid", "256")[:2]
    assert code == 0 and "method=eikonal" in out
    code, out, _ = _run(capsys, "residual", "--solution", "cylinder:1:0.5")
    assert code == 0 and "T1.richardson" in out


def test_usage_errors(capsys):
    code, _, err = _run(capsys, "alpha", "--solution", "torus")
    assert code == 2 and "valid names" in err
    assert _run(capsys, "alpha")[0] == 2
    with pytest.raises(SystemExit):
        main(["campaign", "nope"])


def test_scan_table(capsys, tmp_path):
    out_file = tmp_path / "scan.csv"
    code, _, err = _run(capsys, "isoperimetric-scan", "--solution", "spherical", "--thresholds", "4", "--grid", "128", "--out", str(out_file))
    assert code == 0 and "Brendle.ratio_min" in err
    rows = list(csv.DictReader(out_file.open()))
    assert len(rows) == 4
    assert set(rows[0]) == {"t", "area", "length", "F", "flux", "ratio", "margin"}


def test_env_output_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("LIOUVILLE_VERIFY_OUT", str(tmp_path))
    code, out, _ = _run(capsys, "slopes", "--solution", "gamma:0.75", "--against", "euclid")
    assert code == 0 and out == ""
    text = (tmp_path / "slopes.csv").read_text()
    assert text.startswith("abscissa,ordinate,fit,slope")


def test_f_profile_cylinder(capsys):
    code, out, _ = _run(capsys, "f-profile", "--solution", "cylinder:0:0", "--thresholds", "6", "--grid", "128")
    assert code == 0
    assert "vacuous" in out


def test_config_file(tmp_path):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("# sample\ncampaign = sharpness\nsolution = gamma:0.9\nthresholds = 10\nformats = csv, json\n")
    cfg = CampaignConfig.from_file(cfg_file, resolution=128)
    assert cfg.campaign == "sharpness" and cfg.thresholds == 10 and cfg.resolution == 128
    assert cfg.formats == ("csv", "json")
    cfg_file.write_text("colour = blue\n")
    with pytest.raises(UsageError):
        CampaignConfig.from_file(cfg_file)


def test_config_invariants():
    with pytest.raises(UsageError, match="theorem2-equality"):
        CampaignConfig(campaign="everything")
    with pytest.raises(UsageError):
        CampaignConfig(resolution=32)
    with pytest.raises(UsageError):
        CampaignConfig(tol=0.0)
    assert set(CAMPAIGNS) == {"theorem2-equality", "sharpness", "cylinder", "full"}


def test_sharpness_campaign_rows(tmp_path):
    cfg = CampaignConfig(campaign="sharpness", thresholds=8, resolution=128, out=str(tmp_path / "s"), formats=("csv", "json", "svg"))
    rows = {r.claim_id: r for r in run_campaign(cfg)}
    assert rows["Sharp.slope_intrinsic[gamma:0.75]"].computed == pytest.approx(-3.0, rel=0.05)
    assert rows["T2.alpha[gamma:0.75]"].computed == pytest.approx(-1.5, abs=0.01)
    assert rows["PropUpper.alpha_le_m2beta[gamma:0.75]"].computed == pytest.approx(0.5, abs=0.03)
    assert not any(r.failed for r in rows.values())
    for ext in ("csv", "json", "svg"):
        assert (tmp_path / f"s.{ext}").stat().st_size > 0
    with pytest.raises(UsageError):
        run_campaign(CampaignConfig(campaign="sharpness", solution="spherical"))
