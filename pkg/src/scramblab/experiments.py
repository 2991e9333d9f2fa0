"""Experiment runner: configuration, seeding, parallel disorder averaging,
and CSV/JSON persistence for every study shipped with the package.

Each experiment is a pure function from (config, realization index) to one or
more labelled curves; the runner fans realizations out to a thread pool and
reduces them in realization-index order, so results are bit-identical for any
thread count.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__ as _code_version
from . import analysis
from .correlators import (
    DecayCurve,
    TimeGrid,
    average_curves,
    coarse_grained_le,
    noise_averaged_le,
    otoc_haar_exact,
    otoc_regularized,
)
from .linalg import BipartitePartition, eig_hermitian, hermitian_part, kron
from .ensembles import (
    RNG_ALGORITHM,
    RngStream,
    haar_average_conjugation,
    sample_haar_unitary,
    sample_random_hermitian,
)
from .iho import IhoParams, iho_le_bch, iho_le_exact, iho_otoc
from .models import build_bipartite, build_syk, deform_syk

SCHEMA_VERSION = 1

EXPERIMENTS = ("rmt_otoc_le", "iho", "syk", "haar_check", "finite_temp")
SWEEPABLE = ("delta", "beta", "g", "d_b", "n_fermions")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    d_b: int = 128
    delta: float = 0.1
    beta: float = 0.0
    n_fermions: int = 10
    g: float = 1.0
    probe_sites: tuple[int, int] = (0, 1)
    m1: float = 1e5
    m2: float = 1.0
    omega1: float = 0.0
    omega2: float = 1.0
    t_max: float = 5.0
    n_points: int = 101
    n_realizations: int = 20
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        if self.d_b < 2:
            raise ConfigError("d_b must be >= 2")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if self.beta < 0:
            raise ConfigError("beta must be nonnegative")
        if not (4 <= self.n_fermions <= 14) and self.experiment == "syk":
            raise ConfigError("n_fermions must be in [4, 14]")
        if not (0 < self.g <= 1):
            raise ConfigError("g must be in (0, 1]")
        if self.t_max <= 0 or self.n_points < 2:
            raise ConfigError("t_max must be positive and n_points >= 2")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.linear(self.t_max, self.n_points)


@dataclass(frozen=True)
class ResultManifest:
    schema_version: int
    experiment: str
    config: dict
    rng_algorithm: str
    code_version: str
    wall_clock_seconds: float
    curves: dict[str, str]  # label -> csv filename
    fits: dict[str, dict]
    extras: dict = field(default_factory=dict)
    sub_runs: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# per-realization kernels


def _rmt_realization(config: ExperimentConfig, k: int):
    """One disorder draw of the coupled random-matrix model: the raw
    (unnormalized) OTOC for a fresh Hermitian operator pair, and the
    coarse-grained echo for a fresh noise pair.

    The identity coupling channel commutes with every subsystem operator, so
    its "noise field" is the deterministic constant 1; it is folded into the
    base Hamiltonian of the echo rather than given a random sign.
    """
    rs = RngStream(config.seed, k)
    m = build_bipartite(config.d_b, config.delta, rs)
    dec = eig_hermitian(m.h_total)
    a = sample_random_hermitian(2, rs.substream(1))
    b = sample_random_hermitian(config.d_b, rs.substream(2))
    raw = otoc_regularized(
        dec, a, b, config.beta, config.grid, part=m.part, normalize=False
    )
    h_echo = hermitian_part(m.h_b + config.delta * m.couplings_b[0])
    le = coarse_grained_le(
        h_echo,
        m.couplings_b[1:],
        config.delta,
        config.beta,
        config.grid,
        rs.substream(3),
    )
    return {"otoc_raw": raw, "le": le}


def _finite_temp_realization(config: ExperimentConfig, k: int):
    """One disorder draw of the 2 (x) d_b model: exact double-Haar OTOC at the
    requested inverse temperature versus the exhaustively noise-averaged echo
    at effective inverse temperature beta/2."""
    rs = RngStream(config.seed, k)
    m = build_bipartite(config.d_b, config.delta, rs)
    dec = eig_hermitian(m.h_total)
    otoc = otoc_haar_exact(dec, m.part, config.beta, config.grid)
    h_echo = hermitian_part(m.h_b + config.delta * m.couplings_b[0])
    le = noise_averaged_le(
        h_echo,
        m.couplings_b[1:],
        config.delta,
        config.beta,
        config.grid,
        n_pairs=1,
        rng=rs.substream(1),
        exhaustive=True,
        use_effective_beta=True,
    )
    return {"otoc": otoc, "le": le.relabel("le")}


def _syk_realization(config: ExperimentConfig, k: int):
    rs = RngStream(config.seed, k)
    m = build_syk(config.n_fermions, 1.0, 1.0, config.probe_sites, rs)
    if config.g < 1.0:
        m = deform_syk(m, config.g)
    dec = eig_hermitian(m.h_total)
    xa, xb = m.probe_operators()
    otoc = otoc_regularized(dec, xa, xb, config.beta, config.grid)
    return {"otoc": otoc}


def _haar_check_realization(config: ExperimentConfig, k: int):
    """Monte Carlo error of the exact subsystem Haar-average formula at
    geometrically growing sample counts; returns the error-vs-N curve."""
    rs = RngStream(config.seed, k)
    d_a, d_b = 2, 4
    part = BipartitePartition(d_a=d_a, d_b=d_b)
    gen = rs.generator
    o = gen.standard_normal((part.dim, part.dim)) + 1j * gen.standard_normal(
        (part.dim, part.dim)
    )
    exact = haar_average_conjugation(o, part)
    counts = np.unique(np.geomspace(8, 4096, config.n_points).astype(int))
    acc = np.zeros_like(o)
    errs = []
    drawn = 0
    eye_b = np.eye(d_b)
    for target in counts:
        while drawn < target:
            u = kron(sample_haar_unitary(d_a, rs.substream(drawn)), eye_b)
            acc = acc + u.conj().T @ o @ u
            drawn += 1
        errs.append(np.max(np.abs(acc / drawn - exact)))
    grid = TimeGrid(counts.astype(float))
    z = np.zeros(len(counts))
    return {
        "haar_error": DecayCurve(
            grid=grid, mean=np.array(errs), stderr=z, n_realizations=1, label="haar_error"
        )
    }


def _run_iho(config: ExperimentConfig):
    """Closed-form coupled-inverted-oscillator growth curves (1 - correlator);
    no disorder average."""
    params = IhoParams(
        m1=config.m1,
        m2=config.m2,
        omega1=config.omega1,
        omega2=config.omega2,
        delta=config.delta,
    )
    grid = config.grid
    otoc = iho_otoc(params, grid)
    _, m1_curve = iho_le_exact(params, grid)
    bch = iho_le_bch(params, grid)

    def deficit(curve: DecayCurve, label: str) -> DecayCurve:
        return DecayCurve(
            grid=curve.grid,
            mean=1.0 - curve.mean,
            stderr=curve.stderr,
            n_realizations=curve.n_realizations,
            label=label,
        )

    return {
        "one_minus_otoc": deficit(otoc, "one_minus_otoc"),
        "one_minus_m1": deficit(m1_curve, "one_minus_m1"),
        "bch_one_minus_m1": deficit(bch, "bch_one_minus_m1"),
    }


_REALIZATION_KERNELS = {
    "rmt_otoc_le": _rmt_realization,
    "finite_temp": _finite_temp_realization,
    "syk": _syk_realization,
    "haar_check": _haar_check_realization,
}


def _disorder_average(config: ExperimentConfig, kernel) -> dict[str, DecayCurve]:
    """Run realizations (possibly in parallel) and reduce in index order."""
    n = config.n_realizations
    if config.threads == 1:
        results = [kernel(config, k) for k in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            futures = [pool.submit(kernel, config, k) for k in range(n)]
            results = [f.result() for f in futures]  # index order, not completion
    labels = results[0].keys()
    return {
        label: average_curves([r[label] for r in results], label=label)
        for label in labels
    }


def _fit_curves(config: ExperimentConfig, curves: dict[str, DecayCurve]) -> dict:
    fits = {}
    if config.experiment == "iho":
        # Stored curves are deficits 1 - correlator; the growth fit expects
        # the correlator itself.
        for label, curve in curves.items():
            correlator = DecayCurve(
                grid=curve.grid,
                mean=1.0 - curve.mean,
                stderr=curve.stderr,
                n_realizations=curve.n_realizations,
                label=label,
            )
            try:
                fit = analysis.fit_early_growth(correlator)
            except analysis.FitError as exc:
                fits[label] = {"error": str(exc)}
                continue
            fits[label] = _fit_summary(fit)
        return fits
    for label, curve in curves.items():
        mean = curve.mean
        if mean[0] != 0 and abs(mean[0]) > 1e-12:
            normalized = DecayCurve(
                grid=curve.grid,
                mean=mean / mean[0],
                stderr=curve.stderr / abs(mean[0]),
                n_realizations=curve.n_realizations,
                label=label,
            )
        else:
            normalized = curve
        try:
            fit = analysis.model_select(normalized)
        except analysis.FitError as exc:
            fits[label] = {"error": str(exc)}
            continue
        fits[label] = _fit_summary(fit)
    return fits


def _fit_summary(fit: analysis.DecayFit) -> dict:
    return {
        "model": fit.model,
        "rate_lambda": fit.rate_lambda,
        "prefactor_epsilon": fit.prefactor_epsilon,
        "plateau": fit.plateau,
        "window": list(fit.window),
        "r_squared": fit.r_squared,
        "residual_sum": fit.residual_sum,
    }


# ---------------------------------------------------------------------------
# persistence


def _config_hash(config: ExperimentConfig) -> str:
    payload = asdict(config)
    payload.pop("threads")  # thread count never changes the numbers
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:10]


def write_curve_csv(path: Path, curve: DecayCurve) -> None:
    lines = ["t,mean,stderr,n"]
    for t, m, s in zip(curve.grid.times, curve.mean, curve.stderr):
        lines.append(f"{t:.17g},{m:.17g},{s:.17g},{curve.n_realizations}")
    path.write_text("\n".join(lines) + "\n")


def read_curve_csv(path: Path) -> DecayCurve:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != "t,mean,stderr,n":
        raise ConfigError(f"{path}: not a curve CSV (missing 't,mean,stderr,n' header)")
    rows = [line.split(",") for line in lines[1:]]
    t = np.array([float(r[0]) for r in rows])
    mean = np.array([float(r[1]) for r in rows])
    stderr = np.array([float(r[2]) for r in rows])
    n = int(rows[0][3]) if rows else 1
    return DecayCurve(
        grid=TimeGrid(t), mean=mean, stderr=stderr, n_realizations=n, label=Path(path).stem
    )


def run_experiment(config: ExperimentConfig, out_dir: str | Path) -> ResultManifest:
    """Run one experiment, write one CSV per curve plus a JSON manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    if config.experiment == "iho":
        curves = _run_iho(config)
    else:
        curves = _disorder_average(config, _REALIZATION_KERNELS[config.experiment])
    if config.experiment == "rmt_otoc_le":
        raw = curves.pop("otoc_raw")
        curves["otoc"] = DecayCurve(
            grid=raw.grid,
            mean=raw.mean / raw.mean[0],
            stderr=raw.stderr / abs(raw.mean[0]),
            n_realizations=raw.n_realizations,
            label="otoc",
        )
    fits = {} if config.experiment == "haar_check" else _fit_curves(config, curves)
    extras = {}
    if config.experiment == "haar_check":
        err = curves["haar_error"]
        slope = np.polyfit(np.log(err.grid.times), np.log(err.mean), 1)[0]
        extras["convergence_slope"] = float(slope)
    tag = _config_hash(config)
    paths = {}
    for label, curve in curves.items():
        name = f"{config.experiment}_{label}_{tag}.csv"
        write_curve_csv(out / name, curve)
        paths[label] = name
    manifest = ResultManifest(
        schema_version=SCHEMA_VERSION,
        experiment=config.experiment,
        config=asdict(config),
        rng_algorithm=RNG_ALGORITHM,
        code_version=_code_version,
        wall_clock_seconds=time.perf_counter() - start,
        curves=paths,
        fits=fits,
        extras=extras,
    )
    (out / f"{config.experiment}_{tag}.json").write_text(manifest.to_json() + "\n")
    return manifest


def sweep(
    config: ExperimentConfig,
    parameter: str,
    values,
    out_dir: str | Path,
) -> ResultManifest:
    """One sub-run per parameter value, sharing the base seed with per-value
    stream offsets; emits an aggregated (value, rate) table for the rate law."""
    if parameter not in SWEEPABLE:
        raise ConfigError(f"parameter {parameter!r} is not sweepable ({SWEEPABLE})")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    sub_manifests = []
    table = []
    for i, value in enumerate(values):
        sub = replace(
            config,
            **{parameter: type(getattr(config, parameter))(value)},
            seed=config.seed + i * 1_000_003,
        )
        man = run_experiment(sub, out)
        sub_manifests.append(asdict(man))
        rate = None
        for label in ("otoc", "le"):
            if label in man.fits and "rate_lambda" in man.fits[label]:
                rate = man.fits[label]["rate_lambda"]
                break
        table.append([float(value), rate])
    extras = {"sweep_parameter": parameter, "rate_table": table}
    rates = [r for _, r in table if r is not None]
    if parameter == "g" and len(rates) == len(values) and len(values) >= 4:
        law = analysis.fit_rate_law([(float(v), r) for v, r in table])
        extras["rate_law"] = {
            "coefficient": law.rate_lambda,
            "r_squared": law.r_squared,
        }
    tag = _config_hash(config) + f"_{parameter}"
    manifest = ResultManifest(
        schema_version=SCHEMA_VERSION,
        experiment=config.experiment,
        config=asdict(config),
        rng_algorithm=RNG_ALGORITHM,
        code_version=_code_version,
        wall_clock_seconds=time.perf_counter() - start,
        curves={},
        fits={},
        extras=extras,
        sub_runs=sub_manifests,
    )
    (out / f"sweep_{config.experiment}_{tag}.json").write_text(manifest.to_json() + "\n")
    return manifest
