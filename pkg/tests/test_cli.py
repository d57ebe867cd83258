import json

import pytest

from hemifol import cli
from hemifol import graph_surface as gs


def _surface_file(tmp_path, a):
    params = gs.gallery_params(a)
    path = tmp_path / f"gallery-{a}.surf"
    path.write_text(
        f"name = gallery-a-{a}\n"
        "u = a*x + a*y + x*y - c1*x^3 - c2*y^3\n"
        f"params: a={a!r}, c1={params.c1!r}, c2={params.c2!r}\n")
    return path


def _family_file(tmp_path, v, shift="0.3", lam_max=0.05):
    path = tmp_path / f"family-{v}.fam"
    path.write_text(
        f"v = {v}\nf1 = {shift}\nf2 = 0\nf3 = 0\nlambda_max = {lam_max}\n")
    return path


class TestMoments:
    def test_max_degree_4_contains_quarter_pi(self, tmp_path, capsys):
        assert cli.main(["moments", "--max-degree", "4"]) == 0
        out = capsys.readouterr().out
        rows = [line.split(",") for line in out.strip().splitlines()[1:]]
        assert len(rows) == 35
        table = {(r[0], r[1], r[2]): (r[3], r[4]) for r in rows}
        assert table[("2", "0", "1")] == ("1", "4")

    def test_max_degree_0(self, capsys):
        assert cli.main(["moments", "--max-degree", "0"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 2
        assert out[1].split(",") == ["0", "0", "0", "2", "1"]

    def test_boundary(self, capsys):
        assert cli.main(["moments", "--boundary", "--max-degree", "2"]) == 0
        out = capsys.readouterr().out
        rows = {tuple(r.split(",")[:2]): r.split(",")[2:]
                for r in out.strip().splitlines()[1:]}
        assert rows[("2", "0")] == ["1", "1"]

    def test_byte_identical_reruns(self, capsys):
        cli.main(["moments", "--max-degree", "6"])
        first = capsys.readouterr().out
        cli.main(["moments", "--max-degree", "6"])
        second = capsys.readouterr().out
        assert first == second


class TestAnalyze:
    def test_gallery_a0_foliates(self, tmp_path, capsys):
        code = cli.main(["analyze", str(_surface_file(tmp_path, 0.0)),
                         "--case", "willmore"])
        out = capsys.readouterr().out
        assert code == 0
        assert "verdict: Foliates" in out

    def test_gallery_near_root_does_not_foliate(self, tmp_path, capsys):
        code = cli.main(["analyze", str(_surface_file(tmp_path, 0.51)),
                         "--case", "cmc"])
        out = capsys.readouterr().out
        assert code == 1
        assert "verdict: DoesNotFoliate" in out

    def test_gallery_a03_cmc(self, tmp_path, capsys):
        code = cli.main(["analyze", str(_surface_file(tmp_path, 0.3)),
                         "--case", "cmc"])
        out = capsys.readouterr().out
        assert code == 0
        # 1/3 of the closed-form norm
        want = gs.gallery_v0_norm(0.3) / 3
        line = [l for l in out.splitlines() if "bracket" in l][0]
        lower = float(line.split("[")[1].split(",")[0])
        assert lower == pytest.approx(want, rel=1e-9)


class TestGallery:
    def test_csv_columns_and_verdicts(self, capsys):
        assert cli.main(["gallery", "--a", "0", "0.3", "0.51",
                         "--case", "willmore"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out[0] == "a,v0x,v0y,v0norm,verdict"
        rows = [line.split(",") for line in out[1:]]
        assert rows[0][4] == "Foliates"
        assert rows[2][4] == "DoesNotFoliate"

    def test_deterministic(self, capsys):
        cli.main(["gallery", "--a", "0.2", "0.4"])
        first = capsys.readouterr().out
        cli.main(["gallery", "--a", "0.2", "0.4"])
        assert capsys.readouterr().out == first


class TestLinearized:
    def test_cmc_report(self, capsys):
        assert cli.main(["linearized", "--case", "cmc",
                         "--k1", "1", "--k2", "0"]) == 0
        records = [json.loads(line)
                   for line in capsys.readouterr().out.strip().splitlines()]
        by_field = {r["field"]: r for r in records}
        assert by_field["interior_pde"]["residual"] < 1e-10
        assert by_field["neumann"]["residual"] < 1e-10
        assert by_field["third_order"]["residual"] is None
        assert by_field["alpha_prime"]["value"] == pytest.approx(-0.375)
        assert max(abs(x) for x in by_field["beta_prime"]["value"]) < 1e-10

    def test_willmore_dump(self, tmp_path, capsys):
        csv_path = tmp_path / "u.csv"
        assert cli.main(["linearized", "--case", "willmore",
                         "--k1", "1", "--k2", "1",
                         "--dump-csv", str(csv_path)]) == 0
        records = [json.loads(line)
                   for line in capsys.readouterr().out.strip().splitlines()]
        by_field = {r["field"]: r for r in records}
        assert by_field["third_order"]["residual"] < 1e-10
        assert by_field["alpha_prime"]["value"] == pytest.approx(0.5)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "t,phi,u_prime"
        assert len(lines) > 100


class TestFoliate:
    def test_foliating_family(self, tmp_path, capsys):
        fam = _family_file(tmp_path, 0.5)
        code = cli.main(["foliate", str(fam), "--n-lambda", "6"])
        records = [json.loads(line)
                   for line in capsys.readouterr().out.strip().splitlines()]
        assert code == 0
        assert records[-1]["verdict"] == "Foliates"

    def test_overlapping_family(self, tmp_path, capsys):
        fam = _family_file(tmp_path, 1.5)
        code = cli.main(["foliate", str(fam), "--n-lambda", "6"])
        records = [json.loads(line)
                   for line in capsys.readouterr().out.strip().splitlines()]
        assert code == 1
        assert records[-1]["verdict"] == "Overlaps"
        l1, l2 = records[-1]["witness_pair"]
        assert l2 / l1 == pytest.approx(3.0, rel=1e-9)

    def test_rays_csv(self, tmp_path, capsys):
        fam = _family_file(tmp_path, 0.5)
        rays = tmp_path / "rays.csv"
        cli.main(["foliate", str(fam), "--n-lambda", "4",
                  "--rays-csv", str(rays)])
        capsys.readouterr()
        lines = rays.read_text().strip().splitlines()
        assert lines[0] == "lambda,theta0_x,theta0_y,theta0_z,t"
        assert len(lines) > 4


class TestVerifyExpansions:
    def test_willmore_all_pass(self, capsys):
        code = cli.main(["--n-polar", "32", "--n-azimuthal", "64",
                         "verify-expansions", "--case", "willmore"])
        out = capsys.readouterr().out
        assert code == 0
        rows = out.strip().splitlines()[1:]
        assert len(rows) == 6
        assert all(r.endswith("PASS") for r in rows)

    def test_detectability_of_mismatch(self, capsys, monkeypatch):
        # a wrong pinned value must surface as a flagged FAIL row and a
        # nonzero exit, never as a silent pass
        from fractions import Fraction
        import copy
        bad = copy.deepcopy(cli._REFERENCE_TERMS)
        bad["willmore"]["D2_g2"] = (Fraction(-5, 3), Fraction(0),
                                    Fraction(0), Fraction(0))
        monkeypatch.setattr(cli, "_REFERENCE_TERMS", bad)
        code = cli.main(["--n-polar", "32", "--n-azimuthal", "64",
                         "verify-expansions", "--case", "willmore"])
        out = capsys.readouterr().out
        assert code == 1
        fail_rows = [r for r in out.strip().splitlines() if r.endswith("FAIL")]
        assert any(r.startswith("D2_g2") for r in fail_rows)


class TestConfig:
    def test_config_file_overrides(self, tmp_path, capsys):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("n_polar = 32\nn_azimuthal = 64\nseed = 0\n")
        assert cli.main(["--config", str(cfgfile),
                         "moments", "--max-degree", "2"]) == 0
        capsys.readouterr()

    def test_bad_tolerance_rejected(self):
        with pytest.raises(ValueError):
            cli.RunConfig(tolerance=-1.0)
