"""End-to-end orchestration: phantom -> data -> reconstruction -> metrics and artifacts."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dbar import ReconstructionResult, SweepReport, reconstruct
from .forward import PotentialField, SpectralLayout, certify_k0, scan_exceptional
from .io import save_container, save_dtn, save_scattering, write_table
from .phantom import Conductivity, DtNTraceSource, gamma_to_Q, make_phantom
from .scattering import ScatteringData, assemble_scattering, truncate

log = logging.getLogger(__name__)

PLOT_FIELDS = ("gamma_re", "gamma_im", "gamma_hat_re", "gamma_hat_im", "abs_error")


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage


@dataclass
class MetricsReport:
    gamma_l2: float
    gamma_linf: float
    Q_l2: float
    Q_linf: float
    residuals: dict
    failures: int
    n_nodes: int
    timings: dict = field(default_factory=dict)
    layout: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("gamma_l2", "gamma_linf", "Q_l2", "Q_linf"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 <= self.failures <= self.n_nodes:
            raise ValueError("failure count exceeds the number of z nodes")

    def to_dict(self, timings=True):
        d = asdict(self)
        if not timings:
            d.pop("timings")
        return d


@dataclass
class RunOutcome:
    config: RunConfig
    metrics: MetricsReport
    gamma: Conductivity
    Q: PotentialField
    layout: SpectralLayout
    data: ScatteringData
    result: ReconstructionResult
    scan: object = None
    paths: dict = field(default_factory=dict)


class _Stages:
    def __init__(self):
        self.timings = {}

    @contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        log.info("stage %s", name)
        try:
            yield
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = time.perf_counter() - t0


@contextmanager
def _mapper(workers):
    """Order-preserving map over a process pool (``None`` means run inline)."""
    if workers <= 1:
        yield None
        return
    with ProcessPoolExecutor(workers) as pool:
        yield lambda fn, items: pool.map(fn, items, chunksize=16)


def phantom_from_config(cfg: RunConfig) -> Conductivity:
    return make_phantom(cfg.preset, cfg.alpha, cfg.beta, cfg.centre, cfg.radius, cfg.power, cfg.c)


def layout_from_config(cfg: RunConfig, Q: PotentialField):
    """Scan for exceptional points, widen ``A`` if needed, then fix ``k0``."""
    radii = np.linspace(cfg.A / cfg.scan_n_radial, cfg.A, cfg.scan_n_radial)
    angles = 2 * np.pi * np.arange(cfg.scan_n_theta) / cfg.scan_n_theta
    rep = scan_exceptional(Q, radii, angles, flag_ratio=cfg.flag_ratio, margin=cfg.k0_margin)
    A = max(cfg.A, rep.recommended_A)
    if A > cfg.A:
        log.warning("exceptional points flagged up to |k|=%.3g: A raised to %.3g", A - 1, A)
    if cfg.k0 is None:
        k0, _ = certify_k0(Q, A, margin=cfg.k0_margin)
    else:
        k0 = complex(*cfg.k0)
    rep.k0 = k0
    L = SpectralLayout(A=A, k0=k0, R_max=cfg.R_max, R_rec=cfg.R_rec, n_radial=cfg.n_radial,
                       n_theta=cfg.n_theta, m=cfg.m, per_panel=cfg.per_panel)
    return L, rep


def _rel(err, ref):
    nref = np.linalg.norm(ref)
    return float(np.linalg.norm(err) / nref) if nref > 0 else float(np.linalg.norm(err))


def compute_metrics(gamma: Conductivity, Q: PotentialField, result: ReconstructionResult,
                    radius=1.0):
    """Relative L2 (``|g^ - g| / |g - 1|``, ``|Q^ - Q| / |Q|``) and sup errors on ``|z| <= radius``."""
    z = result.gamma_hat.z
    inside = np.abs(z) <= radius
    g = gamma.gamma(z)[inside]
    gh = result.gamma_hat.values[inside]
    dq = np.stack([result.Q_hat.Q12.values - Q.Q12.values,
                   result.Q_hat.Q21.values - Q.Q21.values])[:, inside]
    q = np.stack([Q.Q12.values, Q.Q21.values])[:, inside]
    return dict(gamma_l2=_rel(gh - g, g - 1), gamma_linf=float(np.abs(gh - g).max()),
                Q_l2=_rel(dq, q), Q_linf=float(np.abs(dq).max()))


def run_reconstruction(cfg: RunConfig, write=True, progress=None) -> RunOutcome:
    """Run every stage for ``cfg``; any failure raises :class:`StageError` tagged with the stage."""
    stage = _Stages()
    residuals = {}
    with stage("phantom"):
        gamma = phantom_from_config(cfg)
        Q = gamma_to_Q(gamma, cfg.half_width, cfg.n)
    with stage("layout"):
        layout, scan = layout_from_config(cfg, Q)
        residuals["min_sigma"] = float(scan.sigma.min())
    with stage("data"), _mapper(cfg.workers) as mapper:
        if cfg.path == "volumetric":
            data = assemble_scattering(Q, layout, "volumetric", tol=cfg.tol_mu, mapper=mapper)
            src = None
        else:
            src = DtNTraceSource(gamma, N=cfg.dtn_N, m=cfg.m_outer, n_r=cfg.dtn_n_r,
                                 n_theta=cfg.dtn_n_theta, noise=cfg.noise, seed=cfg.seed)
            residuals["dtn_pde"] = float(max(src.dtn.residual, src.dtn_conj.residual))
            data = assemble_scattering(src, layout, "contour", mapper=mapper)
        if cfg.truncation is not None:
            data = truncate(data, cfg.truncation)
    with stage("reconstruct"):
        result = reconstruct(data, cfg.half_width, cfg.n, cfg.recon_radius, cfg.n_k, cfg.tol_w,
                             progress=progress)
        residuals["w_max"] = float(result.residuals.max()) if result.residuals.size else 0.0
        residuals["diag"] = float(result.diag_residual)
        residuals["crosscheck"] = float(result.crosscheck)
    with stage("metrics"):
        errs = compute_metrics(gamma, Q, result, cfg.recon_radius)
        result.metrics = errs
    metrics = MetricsReport(**errs, residuals=residuals, failures=result.failures,
                            n_nodes=int(result.z_nodes.size), timings=stage.timings,
                            layout=layout.to_dict())
    out = RunOutcome(cfg, metrics, gamma, Q, layout, data, result, scan)
    if write:
        with stage("write"):
            out.paths = write_artifacts(out, src)
        # the timing file is rewritten last so it covers the write stage too
        Path(out.paths["timings"]).write_text(json.dumps(stage.timings, indent=2))
    return out


def write_artifacts(out: RunOutcome, src=None) -> dict:
    """Everything except ``timings.json`` is a deterministic function of the config."""
    root = Path(out.config.output)
    root.mkdir(parents=True, exist_ok=True)
    paths = {"config": root / "config.yaml", "scattering": root / "scattering.npz",
             "reconstruction": root / "reconstruction.npz", "metrics": root / "metrics.json",
             "scan": root / "exceptional_scan.json", "timings": root / "timings.json"}
    out.config.dump(paths["config"])
    save_scattering(paths["scattering"], out.data)
    r = out.result
    save_container(paths["reconstruction"], "reconstruction",
                   {"gamma_hat": r.gamma_hat.values, "Q12_hat": r.Q_hat.Q12.values,
                    "Q21_hat": r.Q_hat.Q21.values, "z_nodes": r.z_nodes,
                    "residuals": r.residuals, "iterations": r.iterations,
                    "converged": r.converged},
                   {"half_width": r.gamma_hat.half_width, "n": r.gamma_hat.n})
    paths["metrics"].write_text(json.dumps(out.metrics.to_dict(timings=False), indent=2,
                                           sort_keys=True))
    if out.scan is not None:
        paths["scan"].write_text(json.dumps(out.scan.to_dict(), indent=2))
    if src is not None:
        paths["dtn"] = save_dtn(root / "dtn.npz", src.dtn)
    paths.update(emit_plots(r, out.gamma, root / "plots"))
    return {k: str(v) for k, v in paths.items()}


def emit_plots(result: ReconstructionResult | None, gamma: Conductivity | None, out_dir,
               sweep: SweepReport | None = None) -> dict:
    """Gridded tables of ``gamma``, ``gamma^`` and ``|gamma - gamma^|`` (plus the sweep map).

    With ``result=None`` every table is written with its header only.
    """
    out_dir = Path(out_dir)
    paths = {}
    if result is None:
        fields = {name: np.zeros((0, 0)) for name in PLOT_FIELDS}
        head = "n=0 half_width=0"
    else:
        gh = result.gamma_hat
        g = gamma.gamma(gh.z) if gamma is not None else np.ones_like(gh.values)
        fields = {"gamma_re": g.real, "gamma_im": g.imag, "gamma_hat_re": gh.values.real,
                  "gamma_hat_im": gh.values.imag, "abs_error": np.abs(gh.values - g)}
        head = f"n={gh.n} half_width={gh.half_width!r}"
    for name in PLOT_FIELDS:
        paths[name] = write_table(out_dir / f"{name}.txt", fields[name], f"{name} {head}")
    if sweep is not None:
        # rows: contrast scale a, then 1/0 solvability per probe point
        table = np.column_stack([sweep.scales, sweep.solvable.astype(float)])
        probes = " ".join(f"{p.real:g}{p.imag:+g}j" for p in sweep.probes)
        paths["solvability"] = write_table(out_dir / "solvability.txt", table,
                                           f"solvability a | probes {probes}")
    return paths


def run_consistency(suite: str, output=None):
    """Run a named self-consistency suite; optionally write its table as JSON."""
    from .consistency import run_suite
    checks = run_suite(suite)
    if output is not None:
        p = Path(output) / f"consistency_{suite}.json"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps([c.to_dict() for c in checks], indent=2))
    return checks
