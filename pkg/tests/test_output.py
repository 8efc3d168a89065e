import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hwdd.decoupling_analysis import ScalingRun, scaling_fit
from hwdd.output import CSV_HEADER, emit_outputs, emit_scaling, fmt, line_plot, read_result_csv
from hwdd.simulator import Curve, ExperimentResult

SVG = "{http://www.w3.org/2000/svg}"


def bell_like_result(n=5):
    times = np.linspace(0, 2, n)
    rng = np.random.default_rng(0)
    curves = [
        Curve("No DD", "none", rng.uniform(size=n), rng.uniform(0, 0.01, size=n)),
        Curve("ckdd", "ckdd", np.ones(n), np.zeros(n)),
    ]
    rho = np.eye(9) / 9 + 0.01j * np.eye(9)
    return ExperimentResult("bell", 3, 123, times, curves, {"version": 1, "experiment": "bell"}, {"final_rho": {"No DD": rho}})


def test_csv_round_trip(tmp_path):
    res = bell_like_result()
    paths = emit_outputs(res, tmp_path)
    rows = read_result_csv(paths["csv"])
    assert len(rows) == 2 * len(res.times)
    assert tuple(paths["csv"].read_text().splitlines()[0].split(",")) == CSV_HEADER
    for c in res.curves:
        mine = [r for r in rows if r["label"] == c.label]
        assert [r["fidelity_mean"] for r in mine] == list(c.mean)
        assert [r["fidelity_stderr"] for r in mine] == list(c.stderr)
        assert [r["time_us"] for r in mine] == list(res.times)
        assert all(r["seed"] == 123 and r["d"] == 3 for r in mine)


def test_fmt_is_exact():
    for x in (0.1, 1 / 3, 2 * np.pi * 0.112, 1e-300, 0.9999999999999999):
        assert float(fmt(x)) == x


def test_json_provenance(tmp_path):
    doc = json.loads(emit_outputs(bell_like_result(), tmp_path)["json"].read_text())
    assert doc["seed"] == 123
    assert doc["config"]["experiment"] == "bell"
    assert doc["provenance"]["version"]
    rho = doc["extras"]["final_rho"]["No DD"]
    assert np.allclose(np.array(rho["real"]), np.eye(9) / 9) and np.allclose(np.array(rho["imag"]), 0.01 * np.eye(9))


def test_svg_has_series_and_legend(tmp_path):
    svg = emit_outputs(bell_like_result(), tmp_path)["svg"].read_text()
    root = ET.fromstring(svg)
    assert len(root.findall(f"{SVG}polyline")) == 2
    texts = [t.text for t in root.iter(f"{SVG}text")]
    assert "No DD" in texts and "ckdd" in texts


def test_empty_grid_rejected(tmp_path):
    res = ExperimentResult("bell", 3, 0, np.array([]), [Curve("a", "none", np.array([]), np.array([]))])
    with pytest.raises(ValueError, match="empty"):
        emit_outputs(res, tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_unwritable_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match=str(blocker)):
        emit_outputs(bell_like_result(), blocker / "sub")


def test_scaling_outputs(tmp_path):
    taus = np.logspace(-3, -1, 6)
    runs = [ScalingRun(3, "universal", scaling_fit([(t, 5 * t**4) for t in taus])),
            ScalingRun(3, "none", scaling_fit([(t, 2 * t**2) for t in taus]))]
    paths = emit_scaling(runs, tmp_path, seed=7, config={"experiment": "scaling"})
    lines = paths["csv"].read_text().splitlines()
    assert lines[0] == "tau_us,infidelity,d,sequence,seed" and len(lines) == 13
    svg = paths["svg"].read_text()
    assert "slope 4.00" in svg and "slope 2.00" in svg
    # log-log axes: decade tick labels
    assert "1e-3" in svg and "1e-1" in svg
    doc = json.loads(paths["json"].read_text())
    assert doc["results"][0]["slope"] == pytest.approx(4.0)


def test_line_plot_drops_nonpositive_on_log_axes():
    svg = line_plot([("a", [0.0, 1.0, 10.0], [1.0, 0.0, 2.0])], "x", "y", logx=True, logy=True)
    root = ET.fromstring(svg)
    (poly,) = root.findall(f"{SVG}polyline")
    assert len(poly.get("points").split()) == 1 or len(root.findall(f"{SVG}circle")) == 1
