import math

import pytest

from canonexp.cli import main
from canonexp.expansion import ExpansionParams, log_Z_canonical
from canonexp.potentials import BoxGeometry, HardCorePotential


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestEnumerate:
    def test_tree_dump(self, capsys):
        code, out = run(capsys, "enumerate", "trees", "4")
        lines = out.strip().splitlines()
        assert code == 0
        assert lines[-1] == "count=16"
        assert len(lines) == 17
        assert all(";" in ln for ln in lines[:-1])

    def test_connected_count(self, capsys):
        _, out = run(capsys, "enumerate", "connected", "4")
        assert out.strip().splitlines()[-1] == "count=38"

    def test_two_connected_count(self, capsys):
        _, out = run(capsys, "enumerate", "two-connected", "4")
        assert out.strip().splitlines()[-1] == "count=10"


class TestCoeffs:
    def test_matches_library(self, capsys):
        code, out = run(capsys, "coeffs")
        assert code == 0
        params = ExpansionParams(N=4, box=BoxGeometry(1, 10.0), beta=1.0, n_max=3, M=8)
        report = log_Z_canonical(params, HardCorePotential(0.1))
        marker = "# log_z_per_volume = %s" % report.log_z_per_volume
        assert marker in out

    def test_records_format(self, capsys):
        code, out = run(capsys, "--format", "records", "coeffs")
        assert code == 0
        assert "certificate_holds=True" in out
        assert "n=1" in out

    def test_config_file_overrides(self, tmp_path, capsys):
        cfgfile = tmp_path / "model.ini"
        cfgfile.write_text("[expansion]\nN = 3\nn_max = 2\nM = 6\n")
        _, out = run(capsys, "--config", str(cfgfile), "coeffs")
        assert "# N = 3" in out
        assert "# M = 6" in out

    def test_missing_config_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--config", "/nonexistent/model.ini", "coeffs"])
        assert exc.value.code == 2


class TestVirial:
    def test_hard_rod_table(self, capsys):
        code, out = run(capsys, "virial")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "m,beta_m,B_m_plus_1,method,error"
        first = lines[1].split(",")
        assert float(first[1]) == pytest.approx(-0.2, rel=1e-8)
        assert float(first[2]) == pytest.approx(0.1, rel=1e-8)
        assert "rho,beta_p" in out

    def test_free_energy_table(self, capsys):
        code, out = run(capsys, "free-energy")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "rho,beta_f"
        rho, bf = (float(x) for x in lines[1].split(","))
        assert rho == 0.1
        assert bf < 0.0


class TestKPCheck:
    def test_default_model_passes(self, capsys):
        code, out = run(capsys, "kp-check")
        assert code == 0
        assert "status=PASS" in out

    def test_dense_model_fails_with_exit_code(self, tmp_path, capsys):
        cfgfile = tmp_path / "dense.ini"
        cfgfile.write_text("[box]\nside = 2.0\n\n[expansion]\nN = 18\n")
        with pytest.raises(SystemExit) as exc:
            raise SystemExit(main(["--config", str(cfgfile), "kp-check"]))
        assert exc.value.code == 1
        assert "status=FAIL" in capsys.readouterr().out


class TestDeterminism:
    def test_sampling_run_is_byte_identical(self, tmp_path):
        cfgfile = tmp_path / "mc.ini"
        cfgfile.write_text(
            "[potential]\nkind = hard_core\nsigma = 0.5\n\n"
            "[box]\ndimension = 3\nside = 5.0\n\n"
            "[run]\nmethod = mc\nsamples = 20000\n"
            "[virial]\nm_max = 2\n"
        )
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        assert main(["--config", str(cfgfile), "--seed", "11", "--out", str(out_a), "virial"]) == 0
        assert main(["--config", str(cfgfile), "--seed", "11", "--out", str(out_b), "virial"]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        out_c = tmp_path / "c.csv"
        assert main(["--config", str(cfgfile), "--seed", "12", "--out", str(out_c), "virial"]) == 0
        assert out_a.read_bytes() != out_c.read_bytes()


class TestValidate:
    def test_cancellation_suite(self, capsys):
        code, out = run(capsys, "validate", "cancellation")
        assert code == 0
        assert "suite=cancellation status=PASS" in out
        assert "overall=PASS" in out

    def test_kp_suite(self, capsys):
        code, out = run(capsys, "validate", "kp")
        assert code == 0
        assert "suite=kp status=PASS" in out

    def test_oracle_suite(self, capsys):
        code, out = run(capsys, "validate", "oracle")
        assert code == 0
        assert "suite=oracle status=PASS" in out
