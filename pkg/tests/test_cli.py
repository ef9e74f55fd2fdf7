import subprocess
import sys

import numpy as np

from lrmor import read_dense, read_grid_csv, read_matrix, write_matrix
from lrmor.cli import main


class TestLyapCommand:
    def test_demo_fd(self, tmp_path, capsys):
        code = main(["lyap", "--demo-fd", "10", "--tol", "1e-10",
                     "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "final relative residual" in out
        final = float(out.split("final relative residual:")[1].split()[0])
        assert final <= 1e-10
        assert (tmp_path / "Z.mtx").exists()
        report = (tmp_path / "lyap_report.txt").read_text()
        assert "relative residual history" in report

    def test_file_inputs(self, tmp_path):
        from lrmor import gen_fd_laplacian
        fd = gen_fd_laplacian(5)
        write_matrix(tmp_path / "A.mtx", fd.a)
        write_matrix(tmp_path / "B.mtx", fd.b)
        write_matrix(tmp_path / "C.mtx", fd.c)
        code = main(["lyap", "--a-file", str(tmp_path / "A.mtx"),
                     "--b-file", str(tmp_path / "B.mtx"),
                     "--c-file", str(tmp_path / "C.mtx"),
                     "--out", str(tmp_path / "run")])
        assert code == 0

    def test_missing_file_exits_1(self, tmp_path):
        code = main(["lyap", "--a-file", "nope.mtx", "--b-file", "b.mtx",
                     "--c-file", "c.mtx", "--out", str(tmp_path)])
        assert code == 1

    def test_numerical_failure_exits_2(self, tmp_path):
        # unstable scalar model: the stable shift hits the eigenvalue
        write_matrix(tmp_path / "A.mtx", np.array([[1.0]]))
        write_matrix(tmp_path / "B.mtx", np.array([[1.0]]))
        write_matrix(tmp_path / "C.mtx", np.array([[1.0]]))
        code = main(["lyap", "--a-file", str(tmp_path / "A.mtx"),
                     "--b-file", str(tmp_path / "B.mtx"),
                     "--c-file", str(tmp_path / "C.mtx"),
                     "--out", str(tmp_path)])
        assert code == 2


class TestUsageErrors:
    def test_unknown_command(self):
        assert main(["bogus"]) == 1

    def test_bad_flag_value(self):
        assert main(["lyap", "--demo-fd", "ten"]) == 1

    def test_bad_range(self):
        assert main(["sigma-grid", "--mu-range", "5"]) == 1

    def test_help_exits_0(self):
        assert main(["--help"]) == 0

    def test_bt_needs_mode(self, tmp_path):
        code = main(["bt", "--demo-fd", "5", "--out", str(tmp_path)])
        assert code == 1


class TestPipelines:
    def test_gen_bench_fd(self, tmp_path):
        assert main(["gen-bench", "--model", "fd", "--grid", "6",
                     "--out", str(tmp_path)]) == 0
        a = read_matrix(tmp_path / "A.mtx")
        assert a.shape == (36, 36)

    def test_gen_bench_thermal(self, tmp_path):
        assert main(["gen-bench", "--model", "thermal", "--grid", "8",
                     "--out", str(tmp_path)]) == 0
        for name in ("A0.mtx", "A1.mtx", "B.mtx", "C.mtx"):
            assert (tmp_path / name).exists()
        assert read_dense(tmp_path / "C.mtx").shape == (4, 64)

    def test_care_demo(self, tmp_path, capsys):
        code = main(["care", "--demo-fd", "7", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "K.mtx").exists()
        final = float(capsys.readouterr().out.split(
            "final relative residual:")[1].split()[0])
        assert final <= 1e-9

    def test_bt_demo(self, tmp_path):
        code = main(["bt", "--demo-fd", "7", "--order", "8",
                     "--out", str(tmp_path)])
        assert code == 0
        assert read_dense(tmp_path / "rom_A.mtx").shape == (8, 8)
        assert (tmp_path / "hsv.mtx").exists()

    def test_irka_demo(self, tmp_path):
        code = main(["irka", "--demo-fd", "7", "--order", "4",
                     "--out", str(tmp_path)])
        assert code == 0
        assert "interpolation points" in \
            (tmp_path / "irka_report.txt").read_text()

    def test_pmor_piecewise(self, tmp_path):
        code = main(["pmor-piecewise", "--grid", "10", "--samples", "4",
                     "--method", "bt-tol", "--tol", "1e-4", "--one-sided",
                     "--trunc-tol", "1e-6", "--grid-points", "6",
                     "--out", str(tmp_path)])
        assert code == 0
        grid = read_grid_csv(tmp_path / "error_grid.csv")
        assert grid.values.shape == (6, 6)
        report = (tmp_path / "pmor_piecewise_report.txt").read_text()
        assert "local order" in report and "rank truncation" in report

    def test_pmor_interp_lagrange(self, tmp_path):
        code = main(["pmor-interp", "--grid", "10", "--samples", "10",
                     "--basis", "lagrange", "--grid-points", "5",
                     "--out", str(tmp_path)])
        assert code == 0
        grid = read_grid_csv(tmp_path / "error_grid.csv")
        assert grid.values.shape == (5, 5)
        assert np.isfinite(grid.values).any()

    def test_sigma_grid_cmd(self, tmp_path):
        code = main(["sigma-grid", "--model", "thermal", "--grid", "8",
                     "--samples", "5", "--out", str(tmp_path)])
        assert code == 0
        grid = read_grid_csv(tmp_path / "sigma_grid.csv")
        assert grid.values.shape == (5, 5)

    def test_pmor_from_affine_files(self, tmp_path):
        bench = tmp_path / "bench"
        assert main(["gen-bench", "--model", "thermal", "--grid", "8",
                     "--out", str(bench)]) == 0
        code = main(["pmor-interp",
                     "--a0-file", str(bench / "A0.mtx"),
                     "--a1-file", str(bench / "A1.mtx"),
                     "--b-file", str(bench / "B.mtx"),
                     "--c-file", str(bench / "C.mtx"),
                     "--samples", "4", "--grid-points", "4",
                     "--out", str(tmp_path / "run")])
        assert code == 0
        grid = read_grid_csv(tmp_path / "run" / "error_grid.csv")
        assert grid.values.shape == (4, 4)

    def test_sigma_grid_from_files(self, tmp_path):
        from lrmor import gen_fd_laplacian
        fd = gen_fd_laplacian(4)
        write_matrix(tmp_path / "A.mtx", fd.a)
        write_matrix(tmp_path / "B.mtx", fd.b)
        write_matrix(tmp_path / "C.mtx", fd.c)
        code = main(["sigma-grid", "--a-file", str(tmp_path / "A.mtx"),
                     "--b-file", str(tmp_path / "B.mtx"),
                     "--c-file", str(tmp_path / "C.mtx"),
                     "--samples", "4", "--out", str(tmp_path / "run")])
        assert code == 0
        grid = read_grid_csv(tmp_path / "run" / "sigma_grid.csv")
        assert grid.values.shape == (1, 4)


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "lrmor.cli", "lyap", "--demo-fd", "5",
         "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "final relative residual" in proc.stdout
