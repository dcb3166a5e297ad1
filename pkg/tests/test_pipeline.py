import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dbar_dirac.cli import main
from dbar_dirac.config import ConfigError, RunConfig
from dbar_dirac.io import read_table, write_table
from dbar_dirac.pipeline import PLOT_FIELDS, StageError, emit_plots, run_reconstruction

TINY = dict(n=32, n_radial=8, n_theta=8, m=16, n_k=4, scan_n_radial=2, scan_n_theta=4,
            R_max=8.0, R_rec=5.0)


def test_config_round_trip(tmp_path):
    cfg = RunConfig(preset="high_contrast", c=(2.0, 0.5), k0=(1.0, 2.0))
    cfg.dump(tmp_path / "c.yaml")
    assert RunConfig.load(tmp_path / "c.yaml") == cfg


@pytest.mark.parametrize("bad", [dict(n=0), dict(A=-1.0), dict(R_rec=2.0), dict(tol_w=1.5),
                                 dict(path="fem"), dict(schema_version=9),
                                 dict(n_radial=12, per_panel=8)])
def test_config_invariants(bad):
    with pytest.raises(ConfigError):
        RunConfig(**bad)


def test_config_unknown_key(tmp_path):
    (tmp_path / "c.yaml").write_text("presett: bump\n")
    with pytest.raises(ConfigError, match="presett"):
        RunConfig.load(tmp_path / "c.yaml")


def test_table_round_trip_bit_exact(tmp_path):
    a = np.random.default_rng(0).standard_normal((16, 16)) * 1e-7
    back = read_table(write_table(tmp_path / "t.txt", a, "x"))
    assert np.array_equal(back, a)


def test_empty_plots_are_header_only(tmp_path):
    paths = emit_plots(None, None, tmp_path)
    assert sorted(paths) == sorted(PLOT_FIELDS)
    for p in paths.values():
        text = p.read_text()
        assert text.startswith("#") and text.count("\n") == 1


def test_uniform_run(tmp_path):
    out = run_reconstruction(RunConfig(preset="uniform", output=str(tmp_path), **TINY))
    assert out.metrics.gamma_linf < 1e-8 and out.metrics.failures == 0
    tables = {name: read_table(tmp_path / "plots" / f"{name}.txt") for name in PLOT_FIELDS}
    assert {t.shape for t in tables.values()} == {(32, 32)}
    assert np.array_equal(tables["gamma_hat_re"], out.result.gamma_hat.values.real)


def test_stage_error_is_tagged(tmp_path):
    cfg = RunConfig(preset="nope", output=str(tmp_path), **TINY)
    with pytest.raises(StageError) as exc:
        run_reconstruction(cfg, write=False)
    assert exc.value.stage == "phantom"


def test_determinism(tmp_path):
    files = ("metrics.json", "scattering.npz", "reconstruction.npz", "plots/abs_error.txt")
    blobs = []
    for run in ("a", "b"):
        cfg = RunConfig(output=str(tmp_path / run), **TINY)
        run_reconstruction(cfg)
        blobs.append([(tmp_path / run / f).read_bytes() for f in files])
    assert blobs[0] == blobs[1]
    m = json.loads((tmp_path / "a" / "metrics.json").read_text())
    assert m["failures"] == 0 and m["gamma_l2"] >= 0


def test_cli_reconstruct_and_plots(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["reconstruct", "--preset", "uniform", "--n", "32", "--n-radial", "8",
               "--n-theta", "8", "--m", "16", "--scan-n-radial", "2", "--output", str(out)])
    assert rc == 0
    assert main(["plots", str(out), "--out", str(tmp_path / "again")]) == 0
    for name in PLOT_FIELDS:
        assert (out / "plots" / f"{name}.txt").read_bytes() == \
            (tmp_path / "again" / f"{name}.txt").read_bytes()
    assert "gamma rel L2" in capsys.readouterr().out


def test_cli_config_errors(tmp_path):
    (tmp_path / "c.yaml").write_text("unknown_key: 1\n")
    assert main(["reconstruct", "--config", str(tmp_path / "c.yaml")]) == 2
    assert main(["reconstruct", "--A", "-2"]) == 2


def test_cli_consistency_fast_suite(capsys):
    assert main(["consistency", "w-identity"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_numba_can_be_disabled():
    env = dict(os.environ, DBAR_DIRAC_DISABLE_NUMBA="1")
    code = "from dbar_dirac._accel import backend; print(backend())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"


def test_kernel_backends_agree():
    from dbar_dirac import _kernels
    rng = np.random.default_rng(3)
    pts = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    w = rng.standard_normal(50) + 0j
    a = _kernels.cauchy_sum(pts[:7], pts, w, backend="numpy")
    b = _kernels.cauchy_sum(pts[:7], pts, w, backend="numba")
    assert np.allclose(a, b, rtol=1e-13)
    ks = rng.standard_normal(4) + 0j
    dens = rng.standard_normal((50, 4)) + 0j
    assert np.allclose(_kernels.phase_sum(ks, ks, pts, dens, backend="numpy"),
                       _kernels.phase_sum(ks, ks, pts, dens, backend="numba"), rtol=1e-12)
