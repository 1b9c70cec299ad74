import json

import numpy as np
import pytest

from elastic_herglotz.cli import (EXIT_IO, EXIT_PASS, EXIT_TOLERANCE, EXIT_USAGE,
                                  main)
from elastic_herglotz.kernel3d import CoeffField
from elastic_herglotz.synthesis import FarFieldPattern, coeff_field_to_json


@pytest.fixture()
def field_file(tmp_path, params12):
    u = CoeffField.from_dict(params12, {(1, 0): (1.0, 0, 0), (2, 1): (0, 0.5j, 0.2)})
    path = tmp_path / "field.json"
    path.write_text(json.dumps(coeff_field_to_json(u)))
    return path


@pytest.fixture()
def farfield_file(tmp_path):
    g = FarFieldPattern.from_harmonic(gp={(1, 0): 1.0})
    path = tmp_path / "ff.json"
    path.write_text(json.dumps(g.to_json_obj()))
    return path


@pytest.fixture()
def grid_file(tmp_path, rng):
    path = tmp_path / "grid.csv"
    lines = ["x,y,z"] + [",".join(f"{v:.5f}" for v in rng.normal(size=3))
                         for _ in range(5)]
    path.write_text("\n".join(lines) + "\n")
    return path


class TestUsageErrors:
    def test_conflicting_parameter_groups(self, tmp_path):
        code = main(["verify-gram", "--kp", "1", "--ks", "2", "--mu", "1",
                     "--lambda", "2", "--rho", "1", "--omega", "2",
                     "--out", str(tmp_path)])
        assert code == EXIT_USAGE

    def test_incomplete_wavenumbers(self, tmp_path):
        code = main(["verify-gram", "--kp", "1", "--out", str(tmp_path)])
        assert code == EXIT_USAGE

    def test_unknown_verb(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_missing_field_file(self, tmp_path):
        code = main(["reproduce", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)])
        assert code == EXIT_IO

    def test_malformed_field_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json")
        code = main(["reproduce", str(bad), "--out", str(tmp_path)])
        assert code == EXIT_USAGE
        assert "line" in capsys.readouterr().err


class TestVerifyGram:
    def test_default_passes(self, tmp_path):
        out = tmp_path / "vg"
        assert main(["verify-gram", "--lmax", "3", "--out", str(out)]) == EXIT_PASS
        report = json.loads((out / "verify_gram.json").read_text())
        assert report["pass"] is True
        assert (out / "verify_gram.csv").exists()
        assert (out / "verify_gram.png").exists()

    def test_lmax_zero_only_L_rows(self, tmp_path, capsys):
        out = tmp_path / "vg0"
        assert main(["verify-gram", "--lmax", "0", "--out", str(out)]) == EXIT_PASS
        text = capsys.readouterr().out
        assert "L2:LL" in text

    def test_perturbed_convention_names_identity(self, tmp_path, capsys):
        out = tmp_path / "vgbad"
        code = main(["verify-gram", "--lmax", "2", "--perturb-convention",
                     "--out", str(out)])
        assert code == EXIT_TOLERANCE
        report = json.loads((out / "verify_gram.json").read_text())
        assert report["first_violated"] == "L2:LN"
        assert "L2:LN" in capsys.readouterr().err


class TestKernelVerb:
    def test_diagonal_verified_in_process(self, tmp_path):
        out = tmp_path / "k.json"
        code = main(["kernel", "--x", "0.4,0.2,0.5", "--y", "0.4,0.2,0.5",
                     "--lmax", "3", "--out", str(out)])
        assert code == EXIT_PASS
        obj = json.loads(out.read_text())
        assert obj["hermitian_deviation"] <= 1e-12
        assert obj["min_eigenvalue"] >= -1e-12

    def test_swapped_arguments_conjugate_transpose(self, tmp_path):
        o1, o2 = tmp_path / "k1.json", tmp_path / "k2.json"
        main(["kernel", "--x=0.4,0.1,0.3", "--y=-0.2,0.5,0.6",
              "--lmax", "3", "--out", str(o1)])
        main(["kernel", "--x=-0.2,0.5,0.6", "--y=0.4,0.1,0.3",
              "--lmax", "3", "--out", str(o2)])
        t1 = np.array([[complex(re, im) for re, im in row]
                       for row in json.loads(o1.read_text())["tensor"]])
        t2 = np.array([[complex(re, im) for re, im in row]
                       for row in json.loads(o2.read_text())["tensor"]])
        np.testing.assert_allclose(t2, t1.conj().T, atol=1e-12)

    def test_tail_shrinks_with_lmax(self, tmp_path):
        tails = {}
        for lm in (4, 8):
            out = tmp_path / f"k{lm}.json"
            main(["kernel", "--x", "0.4,0.2,0.5", "--y", "0.1,0.3,-0.2",
                  "--lmax", str(lm), "--out", str(out)])
            tails[lm] = json.loads(out.read_text())["tail_estimate"]
        assert tails[8] <= 0.5 * tails[4]

    def test_dim2_kernel(self, tmp_path, capsys):
        code = main(["kernel", "--dim", "2", "--x", "0.5,0.2", "--y", "0.1,0.4",
                     "--lmax", "3"])
        assert code == EXIT_PASS
        obj = json.loads(capsys.readouterr().out)
        assert len(obj["tensor"]) == 2

    def test_equal_speeds_rejected(self, tmp_path):
        code = main(["kernel", "--x", "0,0,1", "--y", "0,1,0", "--lambda", "-1",
                     "--mu", "1", "--rho", "1", "--omega", "1", "--lmax", "2"])
        assert code == EXIT_USAGE


class TestReproduceVerb:
    def test_basis_field_passes(self, tmp_path, field_file):
        out = tmp_path / "rep"
        code = main(["reproduce", str(field_file), "--lmax", "4",
                     "--probes", "5", "--seed", "1", "--out", str(out)])
        assert code == EXIT_PASS
        rows = (out / "reproduce.csv").read_text().splitlines()
        assert rows[0] == "x,y,z,residual,rel_residual"
        assert len(rows) == 6

    def test_empty_modes_zero_residuals(self, tmp_path, params12):
        u = CoeffField.from_dict(params12, {})
        path = tmp_path / "zero.json"
        path.write_text(json.dumps(coeff_field_to_json(u)))
        out = tmp_path / "rep0"
        code = main(["reproduce", str(path), "--lmax", "3", "--probes", "3",
                     "--out", str(out)])
        assert code == EXIT_PASS
        for line in (out / "reproduce.csv").read_text().splitlines()[1:]:
            assert float(line.split(",")[3]) == 0.0

    def test_support_beyond_lmax_warns_distinct_status(self, tmp_path, field_file,
                                                       capsys):
        out = tmp_path / "repw"
        code = main(["reproduce", str(field_file), "--lmax", "3",
                     "--probes", "2", "--out", str(out)])
        assert code == EXIT_PASS  # warning, not a tolerance failure
        assert "warning" in capsys.readouterr().err.lower()


class TestSynthVerb:
    def test_zero_farfield_zero_field(self, tmp_path, grid_file):
        ff = tmp_path / "zero_ff.json"
        ff.write_text(json.dumps(FarFieldPattern.from_harmonic().to_json_obj()))
        out = tmp_path / "s0"
        assert main(["synth", str(ff), str(grid_file), "--out", str(out)]) == EXIT_PASS
        for line in (out / "synth_field.csv").read_text().splitlines()[1:]:
            assert all(float(v) == 0.0 for v in line.split(",")[3:])

    def test_residual_column(self, tmp_path, farfield_file, grid_file):
        out = tmp_path / "s1"
        code = main(["synth", str(farfield_file), str(grid_file), "--residual",
                     "--out", str(out)])
        assert code == EXIT_PASS
        lines = (out / "synth_field.csv").read_text().splitlines()
        assert lines[0].endswith("navier_residual")
        for line in lines[1:]:
            assert float(line.split(",")[-1]) <= 1e-5

    def test_grid_roundtrip_matches_in_memory(self, tmp_path, farfield_file,
                                              grid_file, params12):
        from elastic_herglotz.synthesis import herglotz_synthesize
        out = tmp_path / "s2"
        main(["synth", str(farfield_file), str(grid_file), "--out", str(out)])
        lines = (out / "synth_field.csv").read_text().splitlines()[1:]
        pts = np.array([[float(v) for v in ln.split(",")[:3]] for ln in lines])
        got = np.array([[complex(float(ln.split(",")[3 + 2 * c]),
                                 float(ln.split(",")[4 + 2 * c]))
                         for c in range(3)] for ln in lines])
        g = FarFieldPattern.from_json_obj(json.loads(farfield_file.read_text()))
        want = herglotz_synthesize(g, params12, pts)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)

    def test_invariant_violation_reported(self, tmp_path, grid_file):
        from elastic_herglotz.inner import SphereQuadrature
        q = SphereQuadrature.build(6, 13)
        bad = {"representation": "grid", "n_theta": 6, "n_phi": 13,
               "g1": [[[1.0, 0.0]] * (6 * 13)] + [[[0.0, 0.0]] * 78] * 2,
               "g2": [[[0.0, 0.0]] * 78] * 3}
        ff = tmp_path / "bad_ff.json"
        ff.write_text(json.dumps(bad))
        out = tmp_path / "s3"
        code = main(["synth", str(ff), str(grid_file), "--out", str(out)])
        assert code == EXIT_USAGE


class TestDeterminism:
    def test_byte_identical_reports(self, tmp_path, field_file):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert main(["verify-gram", "--lmax", "2", "--seed", "11",
                         "--out", str(out / "vg")]) == EXIT_PASS
            assert main(["reproduce", str(field_file), "--lmax", "4",
                         "--probes", "4", "--seed", "11",
                         "--out", str(out / "rep")]) == EXIT_PASS
            outs.append(out)
        for rel in ("vg/verify_gram.csv", "vg/verify_gram.json",
                    "vg/verify_gram.png", "rep/reproduce.csv"):
            b1 = (outs[0] / rel).read_bytes()
            b2 = (outs[1] / rel).read_bytes()
            assert b1 == b2, f"{rel} differs between identical runs"
