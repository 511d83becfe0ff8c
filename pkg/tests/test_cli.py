import csv
import math

import numpy as np
import pytest

from sfion import cache
from sfion.analysis import fit_function
from sfion.cli import main
from sfion.laser import make_pulse
from sfion.sweep import read_csv

TINY_BASIS = """
[basis]
cutoff = 3
ell_max = 2
radial_box = 40
radial_splines = 40
radial_order = 6
radial_geometric_count = 10
box = 20
n_xi = 16
order_xi = 6
geometric_count = 4
n_eta = 8
order_eta = 5
lambda_max = 2

[propagation]
rel_tol = 1e-8
abs_tol = 1e-12
"""


def write_cfg(path, system="two_center", r="1.2, 1.4, 1.6", intensity="1e13, 2e13, 3e13, 4e13",
              orientation="parallel", n_cycles="2", extra=""):
    path.write_text(f"[system]\nkind = {system}\n{extra}\n[grid]\nr = {r}\nintensity = {intensity}\n"
                    f"orientation = {orientation}\nn_cycles = {n_cycles}\nwavelength = 400\n" + TINY_BASIS)
    return path


@pytest.fixture(autouse=True)
def no_env_cache(monkeypatch):
    monkeypatch.delenv("SFION_CACHE", raising=False)


def rows_of(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_one_point(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", r="1.4", intensity="2e13")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "yields.csv")
    assert len(rows) == 1
    assert 0 < rows[0].yield_ion < 1 and rows[0].norm_defect < 1e-8


def test_resume_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", orientation="parallel, perpendicular")
    full, part, para = tmp_path / "full", tmp_path / "part", tmp_path / "para"
    assert main(["sweep", "--config", str(cfg), "--out", str(full)]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(part), "--stop-after", "7"]) == 3
    assert not (part / "yields.csv").exists()
    assert main(["sweep", "--config", str(cfg), "--out", str(part), "--resume"]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(para), "--workers", "2"]) == 0
    ref = (full / "yields.csv").read_bytes()
    assert (part / "yields.csv").read_bytes() == ref
    assert (para / "yields.csv").read_bytes() == ref
    assert len(ref.decode().splitlines()) == 1 + 24


def test_resume_counts(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.ini")
    out = tmp_path / "o"
    main(["sweep", "--config", str(cfg), "--out", str(out), "--stop-after", "5"])
    capsys.readouterr()
    main(["sweep", "--config", str(cfg), "--out", str(out), "--resume"])
    assert "computed 7, reused 5" in capsys.readouterr().out
    main(["sweep", "--config", str(cfg), "--out", str(out), "--resume"])
    assert "computed 0, reused 12" in capsys.readouterr().out


def test_resume_rejects_changed_config(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", r="1.4", intensity="1e13, 2e13")
    out = tmp_path / "o"
    main(["sweep", "--config", str(cfg), "--out", str(out), "--stop-after", "1"])
    write_cfg(cfg, r="1.5", intensity="1e13, 2e13")
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--resume"]) == 1


def test_failed_point_recorded(tmp_path):
    # R = 5 lies outside the shipped Ip table, so that point fails and the rest continue
    cfg = write_cfg(tmp_path / "c.ini", system="model_atom", r="1.4, 5.0", intensity="2e13")
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 1
    rows = read_csv(out / "yields.csv")
    assert len(rows) == 2
    assert rows[0].yield_ion > 0 and math.isnan(rows[1].yield_ion)
    fails = rows_of(out / "failures.csv")
    assert len(fails) == 1 and "outside" in fails[0]["reason"]


def test_basis_cache_idempotent_and_repair(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.ini", r="1.4, 1.6", orientation="parallel")
    out = tmp_path / "o"
    assert main(["basis", "--config", str(cfg), "--out", str(out)]) == 0
    assert "performed: 4" in capsys.readouterr().out
    files = sorted((out / "cache").glob("*.bin"))
    assert len(files) == 4 and len({f.name.split("_")[1] for f in files}) == 2
    main(["basis", "--config", str(cfg), "--out", str(out)])
    assert "performed: 0" in capsys.readouterr().out
    data = files[0].read_bytes()
    files[0].write_bytes(data[: len(data) // 2])
    main(["basis", "--config", str(cfg), "--out", str(out)])
    assert "performed: 1" in capsys.readouterr().out
    assert cache.load(files[0]) is not None


def test_cache_root_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SFION_CACHE", str(tmp_path / "shared"))
    cfg = write_cfg(tmp_path / "c.ini", r="1.4")
    main(["basis", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert len(list((tmp_path / "shared").glob("*.bin"))) == 2
    assert not (tmp_path / "o" / "cache").exists()


def synthetic_yields(path, values, r_grid=np.round(np.arange(1.0, 2.2001, 0.05), 10), intensities=(1e13, 2e13)):
    lines = ["R_bohr,orientation,intensity_Wcm2,n_cycles,yield,norm_defect"]
    for r in r_grid:
        for i in intensities:
            lines.append(f"{float(r)!r},parallel,{i!r},20,{float(values(r, i))!r},0.0")
    path.write_text("\n".join(lines) + "\n")
    return path


def test_vibav_constant(tmp_path):
    y = synthetic_yields(tmp_path / "y.csv", lambda r, i: 0.01 if i == 1e13 else 0.02)
    assert main(["vibav", str(y), "--out", str(tmp_path), "--curves"]) == 0
    out = rows_of(tmp_path / "vibav_H2.csv")
    assert [float(r["integrated_yield"]) for r in out] == pytest.approx([0.01, 0.02], abs=1e-10)
    assert len(list((tmp_path / "curves").glob("*.csv"))) == 2


def test_vibav_isotopes_differ(tmp_path):
    y = synthetic_yields(tmp_path / "y.csv", lambda r, i: 0.01 * math.exp(2 * (r - 1.4)))
    main(["vibav", str(y), "--out", str(tmp_path), "--isotope", "H2"])
    main(["vibav", str(y), "--out", str(tmp_path), "--isotope", "D2"])
    h = float(rows_of(tmp_path / "vibav_H2.csv")[0]["integrated_yield"])
    d = float(rows_of(tmp_path / "vibav_D2.csv")[0]["integrated_yield"])
    assert h != d and h > d


def test_vibav_missing_rows(tmp_path, capsys):
    y = synthetic_yields(tmp_path / "y.csv", lambda r, i: 0.01)
    lines = y.read_text().splitlines()
    y.write_text("\n".join(lines[:6] + lines[7:]) + "\n")
    assert main(["vibav", str(y), "--out", str(tmp_path)]) == 2
    assert "lacks R" in capsys.readouterr().err


def test_analyze_synthetic(tmp_path):
    t = make_pulse(400.0, 0.0, 20).fwhm
    intens = np.geomspace(1e13, 1e14, 6)
    lines = ["R_bohr,orientation,intensity_Wcm2,n_cycles,yield,norm_defect"]
    for o in ("parallel", "perpendicular"):
        for i in intens:
            lines.append(f"1.4,{o},{float(i)!r},20,{float(fit_function(i, t, 1.55e6, 4.17))!r},0.0")
    (tmp_path / "y.csv").write_text("\n".join(lines) + "\n")
    assert main(["analyze", str(tmp_path / "y.csv"), "--out", str(tmp_path / "a")]) == 0
    report = (tmp_path / "a" / "fit_report.txt").read_text()
    fit_line = [ln for ln in report.splitlines() if "orientation=parallel" in ln][0]
    omega = float(fit_line.split("Omega = ")[1].split()[0])
    k = float(fit_line.split("k_s = ")[1].split()[0])
    assert omega == pytest.approx(1.55e6, rel=1e-10) and k == pytest.approx(4.17, rel=1e-10)
    ratios = rows_of(tmp_path / "a" / "ratio.csv")
    assert len(ratios) == 6 and all(float(r["ratio"]) == 1.0 for r in ratios)
    scaled = rows_of(tmp_path / "a" / "scaled.csv")
    assert all(float(r["scaled_yield"]) == pytest.approx(1.0, rel=1e-10) for r in scaled)


def test_analyze_single_intensity(tmp_path):
    lines = ["R_bohr,orientation,intensity_Wcm2,n_cycles,yield,norm_defect",
             "1.4,parallel,1e13,20,0.01,0.0", "1.4,perpendicular,1e13,20,0.005,0.0"]
    (tmp_path / "y.csv").write_text("\n".join(lines) + "\n")
    assert main(["analyze", str(tmp_path / "y.csv"), "--out", str(tmp_path / "a")]) == 2
    assert "fit error" in (tmp_path / "a" / "fit_report.txt").read_text()
    assert float(rows_of(tmp_path / "a" / "ratio.csv")[0]["ratio"]) == 2.0


def test_predict(tmp_path, capsys):
    exc = tmp_path / "exc.dat"
    exc.write_text("# R dE\n1.0 0.54\n1.4 0.55\n2.0 0.56\n")
    code = main(["predict", "--out", str(tmp_path), "--excitation", f"B={exc}", "--photons", "5",
                 "--shift", "affine:0.9,-0.002", "--calibrate", "407@5e12", "--intensities", "5e12,7e13"])
    assert code == 0
    rows = rows_of(tmp_path / "predict_R.csv")
    assert {r["state"] for r in rows} >= {"threshold", "B"}
    wl = rows_of(tmp_path / "predict_wavelength.csv")
    assert float(wl[0]["wavelength_nm"]) == pytest.approx(407.0, abs=1e-9)
    assert float(wl[1]["wavelength_nm"]) == pytest.approx(387.0, abs=2.0)


def test_spectrum(tmp_path):
    cfg = write_cfg(tmp_path / "c.ini", system="model_atom", r="1.4", intensity="5e13", n_cycles="4")
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    (f,) = tmp_path.glob("spectrum_*.csv")
    rows = rows_of(f)
    assert list(rows[0]) == ["energy_hartree", "density"] and len(rows) > 3
