import pytest

import wavesweep.cli as cli
from wavesweep.bench import BenchConfig
from wavesweep.cli import RunConfig, VerifyConfig, main, parse_args
from wavesweep.oracles import VerifyReport, VerifyResult
from wavesweep.parallel import Serial, WorkStealing
from wavesweep.sweep import CellWise, RowWise, Tiled


class TestParseBench:
    def test_matrix_flags(self):
        cfg = parse_args(["bench", "--kernel", "euler", "--sizes", "1024x1024",
                          "--threads", "1,2,4"])
        assert isinstance(cfg, BenchConfig)
        assert cfg.kernels == ("euler",)
        assert cfg.sizes == ((1024, 1024),)
        assert cfg.threads == (1, 2, 4)
        assert len(cfg.strategies) == 3
        assert cfg.backends == ("serial", "static", "workstealing")

    def test_defaults_mirror_full_matrix(self):
        cfg = parse_args(["bench"])
        assert cfg.sizes == ((256, 256), (512, 512), (1024, 1024), (2048, 2048))
        assert len(cfg.kernels) == 4
        assert cfg.steps == 5 and cfg.warmup == 2 and cfg.repetitions == 5
        assert min(cfg.threads) == 1

    def test_tile_flag(self):
        cfg = parse_args(["bench", "--strategy", "tiled", "--tile", "32x16"])
        assert cfg.strategies == (Tiled(32, 16),)

    @pytest.mark.parametrize("argv", [
        ["bench", "--threads", "0"],
        ["bench", "--threads", "1,0"],
        ["bench", "--sizes", "0x32"],
        ["bench", "--sizes", "banana"],
        ["bench", "--kernel", "warp"],
        ["bench", "--backend", "cuda"],
        ["bench", "--steps", "0"],
        ["bench", "--reps", "0"],
        ["bench", "--cfl", "1.5"],
        ["bench", "--tile", "0x4"],
        ["--bogus"],
        [],
    ])
    def test_usage_errors_exit_2(self, argv):
        with pytest.raises(SystemExit) as exc:
            parse_args(argv)
        assert exc.value.code == 2


class TestParseRun:
    def test_single_simulation(self):
        cfg = parse_args(["run", "--kernel", "advection", "--nx", "256",
                          "--ny", "256", "--steps", "10"])
        assert isinstance(cfg, RunConfig)
        assert cfg.sim.kernel == "advection"
        assert cfg.sim.ic == "advection-gaussian"
        assert cfg.sim.spec.nx == 256 and cfg.sim.spec.ny == 256
        assert cfg.sim.num_steps == 10
        assert cfg.sim.backend == Serial()
        assert cfg.sim.strategy == CellWise()

    def test_threaded_backend_and_strategy(self):
        cfg = parse_args(["run", "--kernel", "euler", "--backend", "workstealing",
                          "--threads", "4", "--grain", "2", "--strategy", "rowwise"])
        assert cfg.sim.backend == WorkStealing(4, 2)
        assert cfg.sim.strategy == RowWise()

    def test_t_final_excludes_steps(self):
        cfg = parse_args(["run", "--t-final", "0.5"])
        assert cfg.sim.t_final == 0.5 and cfg.sim.num_steps is None
        with pytest.raises(SystemExit) as exc:
            parse_args(["run", "--steps", "5", "--t-final", "0.5"])
        assert exc.value.code == 2

    def test_cfl_flag_feeds_controller(self):
        cfg = parse_args(["run", "--cfl", "0.5"])
        assert cfg.ctl.cfl_target == 0.5


def test_parse_verify():
    cfg = parse_args(["verify", "--seed", "42"])
    assert cfg == VerifyConfig(seed=42)


class TestMain:
    def test_run_prints_summary(self, capsys):
        code = main(["run", "--kernel", "euler", "--nx", "16", "--ny", "8",
                     "--steps", "3"])
        out = capsys.readouterr().out
        assert code == 0
        assert "steps=3" in out
        assert "kernel=euler" in out

    def test_bench_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "records.csv"
        code = main(["bench", "--kernel", "advection", "--sizes", "16x16",
                     "--steps", "2", "--warmup", "0", "--reps", "1",
                     "--threads", "2", "--backend", "serial,static",
                     "--strategy", "cellwise", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("kernel,nx,ny,")
        assert len(lines) == 3  # header + serial + static x2

    def test_bench_stdout_by_default(self, capsys):
        code = main(["bench", "--kernel", "advection", "--sizes", "8x8",
                     "--steps", "1", "--warmup", "0", "--reps", "1",
                     "--threads", "1", "--backend", "serial",
                     "--strategy", "rowwise"])
        assert code == 0
        assert capsys.readouterr().out.startswith("kernel,nx,ny,")

    def test_bench_guard_failure_exits_1(self, monkeypatch, capsys):
        import wavesweep.bench as bench
        real = bench._measure_cell

        def corrupted(kernel, nx, ny, strategy, backend, *args, **kwargs):
            times, state = real(kernel, nx, ny, strategy, backend, *args, **kwargs)
            if not isinstance(backend, Serial):
                state = state.copy()
                state.flat[-1] *= 1.0000000001
            return times, state

        monkeypatch.setattr(bench, "_measure_cell", corrupted)
        code = main(["bench", "--kernel", "advection", "--sizes", "8x8",
                     "--steps", "1", "--warmup", "0", "--reps", "1",
                     "--threads", "2", "--backend", "static",
                     "--strategy", "cellwise"])
        assert code == 1
        err = capsys.readouterr().err
        assert "bench aborted" in err

    def test_verify_exit_codes(self, monkeypatch, capsys):
        ok = VerifyReport(results=[VerifyResult("x", True, "fine")], seed=0)
        monkeypatch.setattr(cli, "verify_suite", lambda seed: ok)
        assert main(["verify"]) == 0
        assert "PASS x" in capsys.readouterr().out

        bad = VerifyReport(results=[VerifyResult("x", False, "broken")], seed=0)
        monkeypatch.setattr(cli, "verify_suite", lambda seed: bad)
        assert main(["verify", "--seed", "9"]) == 1
        captured = capsys.readouterr()
        assert "FAIL x" in captured.out
        assert "verification failed" in captured.err
