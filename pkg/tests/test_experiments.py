import numpy as np
import pytest

from tubal.experiments import (DiagnosticsConfig, PhaseGridConfig, cell_seed, generate_low_tubal_rank,
                               read_pgm, recovery_pixels, rse_pixels, run_diagnostics_sweep, run_phase_grid)
from tubal.completion import SolverConfig
from tubal.tensor_io import csv_import
from tubal.tsvd import t_svd_reduced, tubal_rank


def test_generator():
    for r in (1, 3):
        assert tubal_rank(generate_low_tubal_rank(12, 10, 6, r, seed=r)) == r
    np.testing.assert_array_equal(generate_low_tubal_rank(8, 8, 4, 2, 5), generate_low_tubal_rank(8, 8, 4, 2, 5))
    G = np.random.default_rng(9).standard_normal((6, 5, 4))
    full = generate_low_tubal_rank(6, 5, 4, 5, seed=9)
    assert np.linalg.norm(full - G) <= 1e-12 * np.linalg.norm(G)
    with pytest.raises(ValueError):
        generate_low_tubal_rank(6, 5, 4, 6)


def test_cell_seed_stable():
    assert cell_seed(0, 1, 2, 3) == cell_seed(0, 1, 2, 3)
    assert cell_seed(0, 1, 2, 3) != cell_seed(0, 1, 2, 4)
    assert cell_seed(0, 1, 2, 3) != cell_seed(1, 1, 2, 3)


def test_config_validation_and_parsing(tmp_path):
    with pytest.raises(ValueError):
        PhaseGridConfig(trials=0)
    with pytest.raises(ValueError):
        PhaseGridConfig(rates=[0.0])
    with pytest.raises(ValueError):
        PhaseGridConfig(n1=5, n2=5, ranks=[6])
    path = tmp_path / "grid.cfg"
    path.write_text("# comment\nn1 = 10\nn2=10\nn3=4\nranks=1:3\nrates=0.3,0.9\ntrials=2\nmax_iters=50\n")
    cfg = PhaseGridConfig.from_file(path, trials="3")
    assert cfg.ranks == [1, 2, 3] and cfg.rates == [0.3, 0.9] and cfg.trials == 3
    assert cfg.solver.max_iters == 50
    path.write_text("bogus=1\n")
    with pytest.raises(ValueError):
        PhaseGridConfig.from_file(path)


def test_degenerate_grid(tmp_path):
    cfg = PhaseGridConfig(n1=6, n2=6, n3=3, ranks=[1], rates=[1.0], trials=1)
    grid = run_phase_grid(cfg, out_dir=tmp_path)
    assert grid.recovery_rate(1, 1.0) == 1.0
    rows = csv_import(tmp_path / "phase_grid.csv")
    assert list(rows[0])[:7] == ["rank", "rate", "trial", "rse", "success", "iterations", "seed"]
    assert read_pgm(tmp_path / "recovery.pgm").min() == 255


def test_grid_replay_is_byte_identical(tmp_path):
    cfg = PhaseGridConfig(n1=10, n2=10, n3=4, ranks=[1, 3], rates=[0.3, 0.8], trials=2, base_seed=5)
    run_phase_grid(cfg, out_dir=tmp_path / "a", threads=1)
    run_phase_grid(cfg, out_dir=tmp_path / "b", threads=2)
    run_phase_grid(cfg, out_dir=tmp_path / "c", threads=1)
    for name in ("phase_grid.csv", "recovery.pgm", "rse.pgm"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()


def test_grid_records_errors(tmp_path):
    # too few observations for the solver: the row carries the error, the run continues
    cfg = PhaseGridConfig(n1=10, n2=10, n3=1, ranks=[1], rates=[0.01, 1.0], trials=1)
    grid = run_phase_grid(cfg)
    assert grid.rows[0]["error"].startswith("EmptyMaskError")
    assert grid.rows[1]["error"] == ""


def test_pixels():
    np.testing.assert_array_equal(recovery_pixels(np.array([[0.0, 0.5, 1.0]])), [[0, 128, 255]])
    np.testing.assert_array_equal(rse_pixels(np.array([[0.0, 1.0, 3.0]])), [[255, 0, 0]])


def test_tubal_mode_grid():
    cfg = PhaseGridConfig(n1=12, n2=12, n3=4, ranks=[1], rates=[0.9], trials=2, mode="tubal")
    grid = run_phase_grid(cfg)
    assert grid.recovery_rate(1, 0.9) == 1.0


def test_diagnostics_sweep(tmp_path):
    cfg = DiagnosticsConfig(n1=10, n2=10, n3=3, rank=1, rates=[1.0], trials=2)
    rows = run_diagnostics_sweep(cfg, tmp_path / "d.csv")
    assert all(r["passed"] for r in rows)
    assert all(r["cond1"] <= 1e-8 for r in rows)
    back = csv_import(tmp_path / "d.csv")
    assert [r["passed"] for r in back] == ["1", "1"]


def test_diagnostics_pass_rate_gap():
    # generous sampling vs sparse sampling with the same batch count
    cfg = DiagnosticsConfig(n1=10, n2=10, n3=2, rank=1, rates=[0.9999, 0.3], trials=4, t0=2)
    rows = run_diagnostics_sweep(cfg)
    high = [r["cond1"] for r in rows if r["rate"] == 0.9999]
    low = [r["cond1"] for r in rows if r["rate"] == 0.3]
    assert max(high) < min(low)
