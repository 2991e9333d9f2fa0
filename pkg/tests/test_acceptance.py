"""End-to-end acceptance suite.

One test per headline claim of the lab, with pinned seeds, grids and
tolerances. These run the full pipelines (disorder averaging, persistence,
fitting), so several take minutes; the slowest (the coupling-strength sweep
of the fermion model) takes tens of minutes and is marked ``slow``.

Known limitation, kept as a strict xfail rather than a loosened tolerance:
at the desk-scale 2 (x) 8 dimension, the effective-temperature echo
expression and the exactly Haar-averaged correlator develop different
long-time plateaus, and at beta = 0.5 the pointwise gap over the decay
exceeds the 0.05 budget (measured 0.079 on the pinned grid; the gap grows
monotonically with the grid length and reaches 0.13 by t = 3). The same
comparison passes at beta = 0.1.
"""

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from scramblab import analysis
from scramblab.correlators import (
    DecayCurve,
    TimeGrid,
    otoc_haar_exact_a_complex,
    otoc_haar_mc,
    purity_reduced,
)
from scramblab.ensembles import (
    RngStream,
    haar_average_conjugation,
    sample_gue,
    sample_random_hermitian,
)
from scramblab.experiments import (
    ExperimentConfig,
    read_curve_csv,
    run_experiment,
)
from scramblab.iho import (
    GaussianState,
    IhoParams,
    QuadraticHamiltonian,
    as_float,
    evolve_gaussian,
    flow_matrix,
    gaussian_from_width,
    gaussian_overlap,
    iho_le_bch,
    iho_le_exact,
    iho_otoc,
    symplectic_form,
)
from scramblab.linalg import BipartitePartition, eig_hermitian, partial_trace
from scramblab.models import build_bipartite, build_syk, jordan_wigner


def _normalized(curve: DecayCurve) -> DecayCurve:
    return DecayCurve(
        grid=curve.grid,
        mean=curve.mean / curve.mean[0],
        stderr=curve.stderr / abs(curve.mean[0]),
        n_realizations=curve.n_realizations,
        label=curve.label,
    )


def _run(config: ExperimentConfig, tmp_path) -> dict[str, DecayCurve]:
    manifest = run_experiment(config, tmp_path)
    return {k: read_curve_csv(tmp_path / v) for k, v in manifest.curves.items()}


# ---------------------------------------------------------------------------
# 1. Exact subsystem Haar average vs Monte Carlo


def test_subsystem_haar_average_matches_monte_carlo():
    """For 10 random operators on a 2 (x) 4 system, 1e5 Monte Carlo draws of
    the small-factor conjugation average reproduce the closed-form average
    entrywise within 0.02, with errors shrinking like N^-1/2."""
    part = BipartitePartition(2, 4)
    rs = RngStream(960)
    counts = np.unique(np.geomspace(100, 100_000, 7).astype(int))
    slopes = []
    for j in range(10):
        o = sample_random_hermitian(8, rs.substream(j))
        exact = haar_average_conjugation(o, part).reshape(2, 4, 2, 4)
        ot = o.reshape(2, 4, 2, 4)
        gen = rs.substream(100 + j).generator
        acc = np.zeros((2, 4, 2, 4), dtype=complex)
        done = 0
        errs = []
        for n in counts:
            k = int(n) - done
            ginibre = (
                gen.standard_normal((k, 2, 2)) + 1j * gen.standard_normal((k, 2, 2))
            ) / np.sqrt(2)
            q, r = np.linalg.qr(ginibre)
            d = np.einsum("nii->ni", r)
            us = q * (d / np.abs(d))[:, None, :]
            acc += np.einsum("nac,cbdq,npd->abpq", us, ot, us.conj())
            done = int(n)
            errs.append(np.max(np.abs(acc / done - exact)))
        assert errs[-1] <= 0.02
        slopes.append(np.polyfit(np.log(counts), np.log(errs), 1)[0])
    assert np.mean(slopes) == pytest.approx(-0.5, abs=0.1)


# ---------------------------------------------------------------------------
# 2. Correlator-echo correspondence in the exponential regime


def test_otoc_le_exponential_correspondence(tmp_path):
    """Coupled random-matrix model at d_B = 2^7, delta = 0.1, beta = 0: the
    disorder-averaged normalized correlator and the coarse-grained echo agree
    pointwise within 0.05 over the decay window, both fit exponentials with
    r^2 >= 0.98, and the fitted rates agree within 10%."""
    config = ExperimentConfig(
        experiment="rmt_otoc_le",
        d_b=128,
        delta=0.1,
        beta=0.0,
        t_max=5.0,
        n_points=101,
        n_realizations=100,
        seed=900,
        threads=4,
    )
    curves = _run(config, tmp_path)
    oc, le = curves["otoc"], curves["le"]
    plateau = float(np.mean(oc.mean[-10:]))
    decay = (oc.mean >= plateau + 0.05) & (oc.mean <= 0.95)
    assert decay.sum() >= 10
    assert np.max(np.abs(oc.mean[decay] - le.mean[decay])) <= 0.05
    fo = analysis.fit_exponential(oc, window=(0.35, 0.9), subtract_plateau=False)
    fl = analysis.fit_exponential(le, window=(0.35, 0.9), subtract_plateau=False)
    assert fo.r_squared >= 0.98
    assert fl.r_squared >= 0.98
    assert fo.rate_lambda / fl.rate_lambda == pytest.approx(1.0, abs=0.10)


# ---------------------------------------------------------------------------
# 3. Gaussian regime at strong coupling


def test_strong_coupling_gaussian_regime(tmp_path):
    """Same model at delta = 0.5: model selection picks the Gaussian decay
    for both curves, with the Gaussian residual strictly below the
    exponential one."""
    config = ExperimentConfig(
        experiment="rmt_otoc_le",
        d_b=128,
        delta=0.5,
        beta=0.0,
        t_max=0.3,
        n_points=121,
        n_realizations=100,
        seed=901,
        threads=4,
    )
    curves = _run(config, tmp_path)
    for label in ("otoc", "le"):
        curve = curves[label]
        selected = analysis.model_select(curve, window=(0.3, 0.9))
        assert selected.model == "gaussian", label
        fe = analysis.fit_exponential(curve, window=(0.3, 0.9))
        fg = analysis.fit_gaussian(curve, window=(0.3, 0.9))
        assert fg.residual_sum < fe.residual_sum, label


# ---------------------------------------------------------------------------
# 4. Finite temperature


def test_weak_temperature_dependence(tmp_path):
    """beta = 0.1 curves coincide with beta = 0 curves within 0.05
    pointwise for both the correlator and the echo."""
    runs = {}
    for beta in (0.0, 0.1):
        config = ExperimentConfig(
            experiment="rmt_otoc_le",
            d_b=128,
            delta=0.1,
            beta=beta,
            t_max=5.0,
            n_points=51,
            n_realizations=20,
            seed=920,
            threads=4,
        )
        runs[beta] = _run(config, tmp_path / f"beta{beta}")
    for label in ("otoc", "le"):
        gap = np.max(np.abs(runs[0.0][label].mean - runs[0.1][label].mean))
        assert gap <= 0.05, (label, gap)


@pytest.mark.parametrize(
    "beta",
    [
        0.1,
        pytest.param(
            0.5,
            marks=pytest.mark.xfail(
                strict=True,
                reason=(
                    "2 (x) 8 finite-size plateau mismatch: measured pointwise gap "
                    "0.079 on the pinned grid exceeds the 0.05 budget (grows to "
                    "0.13 by t = 3); passes only at weaker beta"
                ),
            ),
        ),
    ],
)
def test_effective_temperature_echo_expression(tmp_path, beta):
    """On a 2 (x) 8 model the thermally regularized Haar-averaged correlator
    matches the halved-temperature echo expression within 0.05 pointwise
    after normalization."""
    config = ExperimentConfig(
        experiment="finite_temp",
        d_b=8,
        delta=0.1,
        beta=beta,
        t_max=1.5,
        n_points=13,
        n_realizations=20,
        seed=930,
        threads=4,
    )
    curves = _run(config, tmp_path)
    oc = curves["otoc"].mean / curves["otoc"].mean[0]
    le = curves["le"].mean / curves["le"].mean[0]
    assert np.max(np.abs(oc - le)) <= 0.05


# ---------------------------------------------------------------------------
# 5. Complex-time boundedness


def test_complex_time_boundedness():
    """On the half-strip |tau| <= beta/4 (10 x 10 grid, 2 (x) 8 model,
    beta = 0.5) the magnitude of the Haar-averaged correlator at t + i tau
    never exceeds its t = 0 value on the same tau line by more than 1e-6."""
    rs = RngStream(940)
    part = BipartitePartition(2, 8)
    model = build_bipartite(8, 0.1, rs)
    hdec = eig_hermitian(model.h_total)
    b = sample_random_hermitian(8, rs.substream(1))
    beta = 0.5
    times = np.linspace(0.0, 2.0, 10)
    for tau in np.linspace(-beta / 4, beta / 4, 10):
        vals = np.abs(
            otoc_haar_exact_a_complex(hdec, b, part, beta, times + 1j * tau)
        )
        assert np.max(vals) <= vals[0] * (1.0 + 1e-6)


# ---------------------------------------------------------------------------
# 6. Continuous-variable model: early growth and echo expansion

IHO_PARAMS = IhoParams(m1=1e5, m2=1.0, omega1=0.0, omega2=1.0, delta=1e-5)
IHO_GRID = TimeGrid.linear(5.75, 47)


@pytest.fixture(scope="module")
def iho_curves():
    otoc = iho_otoc(IHO_PARAMS, IHO_GRID)
    m, m1 = iho_le_exact(IHO_PARAMS, IHO_GRID)
    bch = iho_le_bch(IHO_PARAMS, IHO_GRID)
    return otoc, m, m1, bch


def test_iho_early_growth_rate(iho_curves):
    """The deficit 1 - F grows exponentially at rate 2 (twice the inverted
    frequency), within 5%."""
    otoc, _, _, _ = iho_curves
    fit = analysis.fit_early_growth(otoc)
    assert fit.rate_lambda == pytest.approx(2.0, rel=0.05)


def test_iho_half_prefactor_relation(iho_curves):
    """1 - F = (1 - M_1)/2 within 5% relative while 1 - F <= 0.1."""
    otoc, _, m1, _ = iho_curves
    deficit_f = 1.0 - otoc.mean
    deficit_m1 = 1.0 - m1.mean
    mask = (deficit_f > 1e-12) & (deficit_f <= 0.1)
    assert mask.sum() >= 10
    ratio = deficit_f[mask] / (0.5 * deficit_m1[mask])
    assert np.max(np.abs(ratio - 1.0)) <= 0.05


def test_iho_second_order_form_matches_exact(iho_curves):
    """The closed-form second-order echo matches the exact overlap within 1%
    of the deficit while 1 - M_1 <= 0.01."""
    _, _, m1, bch = iho_curves
    deficit = 1.0 - m1.mean
    mask = (deficit > 1e-12) & (deficit <= 0.01)
    assert mask.sum() >= 10
    rel = np.abs((1.0 - bch.mean[mask]) - deficit[mask]) / deficit[mask]
    assert np.max(rel) <= 0.01


def test_iho_gaussian_machinery_matches_quadrature_oracle():
    """Covariance evolution matches an independent Riccati-equation oracle at
    5 time points within 1e-6 relative, and the overlap formula matches
    direct wavefunction quadrature to the same precision."""
    m_mass, w, width = 1.3, 0.9, 2.1
    ham = QuadraticHamiltonian(
        mass=np.array([[m_mass]]), potential=np.array([[-m_mass * w**2]])
    )

    def rhs(_t, y):
        alpha = y[0] + 1j * y[1]
        d = -(alpha**2) / m_mass - (-m_mass * w**2)
        return [d.real, d.imag]

    for t in (0.25, 0.5, 1.0, 1.5, 2.0):
        evolved = evolve_gaussian(gaussian_from_width(width), ham, t)
        sol = solve_ivp(rhs, (0.0, t), [0.0, 2.0 / width], rtol=1e-12, atol=1e-14)
        a_r, a_i = sol.y[0, -1], sol.y[1, -1]
        oracle = np.array([[1.0, a_r], [a_r, a_r**2 + a_i**2]]) / (2 * a_i)
        err = np.max(np.abs(as_float(evolved.cov) - oracle))
        assert err <= 1e-6 * np.max(np.abs(oracle)), t

    def packet(a, mu, p0):
        norm = (a / np.pi) ** 0.25
        return (
            lambda x: norm * np.exp(-a * (x - mu) ** 2 / 2 + 1j * p0 * x),
            GaussianState(mean=np.array([mu, p0]), cov=np.diag([1 / (2 * a), a / 2])),
        )

    psi1, s1 = packet(1.0, 0.3, -0.4)
    psi2, s2 = packet(2.5, -0.6, 0.9)
    re = quad(lambda x: (np.conj(psi1(x)) * psi2(x)).real, -np.inf, np.inf)[0]
    im = quad(lambda x: (np.conj(psi1(x)) * psi2(x)).imag, -np.inf, np.inf)[0]
    assert gaussian_overlap(s1, s2) == pytest.approx(re**2 + im**2, rel=1e-6)


# ---------------------------------------------------------------------------
# 7. Pure-state purity identity


def test_pure_state_haar_average_equals_reduced_purity():
    """The pure-state-regularized Monte Carlo Haar average on a random
    2 (x) 4 system equals the reduced-state purity within 3 standard errors
    at 10 time points (1e4 sample pairs, initially unentangled state)."""
    rs = RngStream(950)
    part = BipartitePartition(2, 4)
    model = build_bipartite(4, 0.3, rs)
    dec = eig_hermitian(model.h_total)
    gen = rs.substream(1).generator
    psi_a = gen.standard_normal(2) + 1j * gen.standard_normal(2)
    psi_b = gen.standard_normal(4) + 1j * gen.standard_normal(4)
    # The identity requires an initially unentangled (product) state.
    psi = np.kron(psi_a / np.linalg.norm(psi_a), psi_b / np.linalg.norm(psi_b))
    grid = TimeGrid.linear(2.0, 10)
    mc = otoc_haar_mc(
        dec, part, 0.0, grid, 10_000, rs.substream(2), state_vector=psi, normalize=False
    )
    purity = np.empty(len(grid))
    for i, t in enumerate(grid.times):
        psi_t = dec.eigenvectors @ (
            np.exp(-1j * dec.eigenvalues * t) * (dec.eigenvectors.conj().T @ psi)
        )
        purity[i] = purity_reduced(psi_t, part)
    assert np.all(np.abs(mc.mean - purity) <= 3.0 * mc.stderr)


# ---------------------------------------------------------------------------
# 8. Interacting-fermion model


@pytest.mark.slow
def test_fermion_model_gaussian_decay_and_weak_temperature(tmp_path):
    """At N = 10, g = 1 the correlator decays as a Gaussian with rate within
    a factor of 3 of the spectral standard deviation, and beta in {0, 0.5}
    curves differ by <= 0.1 pointwise."""
    normalized = {}
    for beta in (0.0, 0.5):
        config = ExperimentConfig(
            experiment="syk",
            n_fermions=10,
            g=1.0,
            beta=beta,
            t_max=8.0,
            n_points=41,
            n_realizations=10,
            seed=700,
            threads=4,
        )
        curves = _run(config, tmp_path / f"beta{beta}")
        normalized[beta] = _normalized(curves["otoc"])
    gap = np.max(np.abs(normalized[0.0].mean - normalized[0.5].mean))
    assert gap <= 0.1
    fit = analysis.model_select(normalized[0.0], window=(0.3, 0.9))
    assert fit.model == "gaussian"
    stds = []
    for k in range(10):
        model = build_syk(10, 1.0, 1.0, (0, 1), RngStream(700, k))
        stds.append(np.std(eig_hermitian(model.h_total).eigenvalues))
    bandwidth = float(np.mean(stds))
    assert bandwidth / 3 <= fit.rate_lambda <= bandwidth * 3


@pytest.mark.slow
def test_fermion_model_quadratic_rate_law(tmp_path):
    """Sweeping the interaction strength g over {0.02, 0.025, 0.03, 0.035}
    (20 disorder realizations each) yields exponential decays whose rates
    fit lambda = c g^2 with r^2 >= 0.95."""
    points = []
    for g in (0.02, 0.025, 0.03, 0.035):
        config = ExperimentConfig(
            experiment="syk",
            n_fermions=10,
            g=g,
            beta=0.0,
            t_max=1.0 / g**2,
            n_points=41,
            n_realizations=20,
            seed=710,
            threads=4,
        )
        manifest = run_experiment(config, tmp_path / f"g{g}")
        fit = manifest.fits["otoc"]
        assert fit.get("model") == "exponential", (g, fit)
        points.append((g, fit["rate_lambda"]))
    law = analysis.fit_rate_law(points)
    assert law.r_squared >= 0.95


# ---------------------------------------------------------------------------
# 9. Determinism and invariants


def test_determinism_across_thread_counts(tmp_path):
    """Fixed seed produces byte-identical CSVs regardless of thread count."""
    base = dict(
        experiment="rmt_otoc_le",
        d_b=8,
        delta=0.3,
        t_max=2.0,
        n_points=11,
        n_realizations=4,
        seed=7,
    )
    m1 = run_experiment(ExperimentConfig(**base, threads=1), tmp_path / "a")
    m2 = run_experiment(ExperimentConfig(**base, threads=4), tmp_path / "b")
    assert m1.curves == m2.curves
    for name in m1.curves.values():
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()


def test_structural_invariants():
    """Unitarity, Hermiticity, trace preservation, echo range, symplectic
    determinant and fermionic anticommutation on fresh random draws."""
    rs = RngStream(990)
    # Hermiticity of ensemble draws.
    h = sample_gue(16, rs)
    assert np.allclose(h, h.conj().T)
    # Unitarity of the evolution built from its eigendecomposition.
    dec = eig_hermitian(h)
    u = dec.eigenvectors @ np.diag(np.exp(-1j * dec.eigenvalues * 0.7)) @ dec.eigenvectors.conj().T
    assert np.max(np.abs(u @ u.conj().T - np.eye(16))) < 1e-10
    # Trace preservation under partial trace.
    part = BipartitePartition(2, 8)
    rho = u @ np.diag(np.arange(1.0, 17.0)) @ u.conj().T
    assert np.trace(partial_trace(rho, part, "A")) == pytest.approx(np.trace(rho).real)
    # Echo values stay in [0, 1].
    model = build_bipartite(16, 0.4, rs.substream(1))
    from scramblab.correlators import coarse_grained_le
    from scramblab.linalg import hermitian_part

    h_echo = hermitian_part(model.h_b + 0.4 * model.couplings_b[0])
    le = coarse_grained_le(
        h_echo, model.couplings_b[1:], 0.4, 0.0, TimeGrid.linear(3.0, 16), rs.substream(2)
    )
    assert np.all(le.mean >= -1e-12)
    assert np.all(le.mean <= 1.0 + 1e-12)
    # Symplectic flow: det = 1 and form preservation.
    ham = QuadraticHamiltonian(
        mass=np.diag([2.0, 3.0]), potential=np.array([[-1.0, 0.4], [0.4, 2.0]])
    )
    s = as_float(flow_matrix(ham, 0.9))
    omega = symplectic_form(2)
    assert np.linalg.det(s) == pytest.approx(1.0, rel=1e-10)
    assert np.max(np.abs(s @ omega @ s.T - omega)) < 1e-10
    # Fermionic anticommutation.
    modes = [jordan_wigner(4, i)[0] for i in range(4)]
    eye = np.eye(16)
    for i, ci in enumerate(modes):
        for j, cj in enumerate(modes):
            anti_cc = ci @ cj + cj @ ci
            anti_cd = ci @ cj.conj().T + cj.conj().T @ ci
            assert np.max(np.abs(anti_cc)) < 1e-12
            assert np.max(np.abs(anti_cd - (eye if i == j else 0))) < 1e-12


# ---------------------------------------------------------------------------
# 10. Figure-regeneration bundle (consumed by the frontend)

FRONTEND_REFERENCE = "frontend/reference"


def test_reference_bundle_is_complete_and_consistent():
    """The shipped reference manifest and CSVs that the figure renderer
    consumes exist, parse, and carry self-consistent fit parameters.
    The render itself is exercised by the frontend's own test suite."""
    import json
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / FRONTEND_REFERENCE
    manifest_path = root / "manifest.json"
    assert manifest_path.exists(), "reference manifest missing"
    data = json.loads(manifest_path.read_text())
    assert data["schema_version"] >= 1
    assert "PCG64" in data["rng_algorithm"]
    figures = data["figures"]
    assert set(figures) == {"2", "3", "E1", "E2"}
    for fig, spec in figures.items():
        for curve in spec["curves"]:
            csv = root / curve["csv"]
            assert csv.exists(), (fig, curve["csv"])
            parsed = read_curve_csv(csv)
            assert len(parsed.grid) >= 2
        for fit in spec.get("fits", []):
            assert {"model", "rate_lambda", "window"} <= set(fit)
