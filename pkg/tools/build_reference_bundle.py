#!/usr/bin/env python3
"""Build the reference figure bundle consumed by the frontend renderer.

Runs the simulation CLI configurations behind each figure (reusing any
results already present in the cache directory — the output filenames are
deterministic in the config), copies the curve CSVs into
``frontend/reference/`` and writes the figure manifest that maps each of the
four figures to its curves and fit overlays.

Usage:  python3 tools/build_reference_bundle.py [--cache DIR]

A cold run recomputes everything and takes roughly half an hour; with a warm
cache it finishes in seconds.
"""

from __future__ import annotations

import argparse
import json
import shutil
from pathlib import Path

from scramblab.experiments import ExperimentConfig, RNG_ALGORITHM, run_experiment

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "frontend" / "reference"

RUNS = {
    "iho": ExperimentConfig(experiment="iho", delta=1e-5, t_max=5.75, n_points=47),
    "rmt_b0": ExperimentConfig(
        experiment="rmt_otoc_le",
        d_b=128,
        delta=0.1,
        beta=0.0,
        t_max=5.0,
        n_points=101,
        n_realizations=100,
        seed=900,
        threads=4,
    ),
    "rmt_b01": ExperimentConfig(
        experiment="rmt_otoc_le",
        d_b=128,
        delta=0.1,
        beta=0.1,
        t_max=5.0,
        n_points=51,
        n_realizations=20,
        seed=920,
        threads=4,
    ),
    "rmt_gauss": ExperimentConfig(
        experiment="rmt_otoc_le",
        d_b=128,
        delta=0.5,
        beta=0.0,
        t_max=0.3,
        n_points=121,
        n_realizations=100,
        seed=901,
        threads=4,
    ),
    "syk_b0": ExperimentConfig(
        experiment="syk",
        n_fermions=10,
        g=1.0,
        beta=0.0,
        t_max=8.0,
        n_points=41,
        n_realizations=10,
        seed=700,
        threads=4,
    ),
    "syk_b05": ExperimentConfig(
        experiment="syk",
        n_fermions=10,
        g=1.0,
        beta=0.5,
        t_max=8.0,
        n_points=41,
        n_realizations=10,
        seed=700,
        threads=4,
    ),
}
for g in (0.02, 0.025, 0.03, 0.035):
    RUNS[f"syk_g{g}"] = ExperimentConfig(
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


def ensure_run(config: ExperimentConfig, cache: Path) -> dict:
    """Run the experiment unless its manifest is already in the cache."""
    from scramblab.experiments import _config_hash  # deterministic file tag

    tag = _config_hash(config)
    manifest_path = cache / f"{config.experiment}_{tag}.json"
    if manifest_path.exists():
        return json.loads(manifest_path.read_text())
    manifest = run_experiment(config, cache)
    return json.loads(manifest.to_json())


def copy_curve(name: str, cache: Path) -> str:
    shutil.copyfile(cache / name, OUT / name)
    return name


def fit_entry(manifest: dict, curve_label: str, label: str, transform: str = "identity"):
    fit = manifest["fits"].get(curve_label)
    if not fit or "error" in fit:
        return None
    return {
        "label": label,
        "model": fit["model"],
        "rate_lambda": fit["rate_lambda"],
        "prefactor_epsilon": fit["prefactor_epsilon"],
        "plateau": fit["plateau"],
        "window": fit["window"],
        "transform": transform,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cache", type=Path, default=ROOT / ".reference-cache")
    args = parser.parse_args()
    cache = args.cache
    cache.mkdir(parents=True, exist_ok=True)
    OUT.mkdir(parents=True, exist_ok=True)

    manifests = {key: ensure_run(cfg, cache) for key, cfg in RUNS.items()}
    figures: dict = {}

    # Figure 2: continuous-variable early growth, log-scale deficits.
    iho = manifests["iho"]
    curves = [
        {
            "csv": copy_curve(iho["curves"]["one_minus_otoc"], cache),
            "label": "1 - F (correlator deficit)",
            "marker": "circle",
        },
        {
            "csv": copy_curve(iho["curves"]["one_minus_m1"], cache),
            "label": "1 - M1 (echo deficit)",
            "marker": "square",
        },
        {
            "csv": copy_curve(iho["curves"]["bch_one_minus_m1"], cache),
            "label": "second-order closed form",
            "marker": "none",
            "color": "#555555",
        },
    ]
    fits = [
        f
        for f in (
            fit_entry(iho, "one_minus_otoc", "early-growth fit", "one_minus"),
        )
        if f
    ]
    figures["2"] = {
        "title": "Inverted-oscillator early growth",
        "x_label": "t",
        "y_label": "deficit",
        "x_scale": "linear",
        "y_scale": "log",
        "curves": curves,
        "fits": fits,
    }

    # Figure 3: random-matrix correlator vs echo; inset: Gaussian regime.
    b0, b01, gauss = manifests["rmt_b0"], manifests["rmt_b01"], manifests["rmt_gauss"]
    figures["3"] = {
        "title": "Random-matrix model, delta = 0.1",
        "x_label": "t",
        "y_label": "normalized correlator / echo",
        "x_scale": "linear",
        "y_scale": "linear",
        "curves": [
            {
                "csv": copy_curve(b0["curves"]["otoc"], cache),
                "label": "correlator, beta = 0",
                "marker": "triangle",
                "color": "#c0392b",
            },
            {
                "csv": copy_curve(b0["curves"]["le"], cache),
                "label": "echo, beta = 0",
                "marker": "triangle",
                "color": "#2e6da4",
            },
            {
                "csv": copy_curve(b01["curves"]["otoc"], cache),
                "label": "correlator, beta = 0.1",
                "marker": "square",
                "color": "#e67e22",
            },
            {
                "csv": copy_curve(b01["curves"]["le"], cache),
                "label": "echo, beta = 0.1",
                "marker": "square",
                "color": "#16a085",
            },
        ],
        "fits": [
            f
            for f in (
                fit_entry(b0, "otoc", "correlator fit"),
                fit_entry(b0, "le", "echo fit"),
            )
            if f
        ],
        "inset": {
            "x_label": "t",
            "y_label": "",
            "x_scale": "linear",
            "y_scale": "linear",
            "curves": [
                {
                    "csv": copy_curve(gauss["curves"]["otoc"], cache),
                    "label": "delta = 0.5",
                    "marker": "circle",
                    "color": "#c0392b",
                },
                {
                    "csv": copy_curve(gauss["curves"]["le"], cache),
                    "label": "",
                    "marker": "circle",
                    "color": "#2e6da4",
                },
            ],
            "fits": [f for f in (fit_entry(gauss, "otoc", "Gaussian fit"),) if f],
        },
    }

    # Figure E1: fermion model at g = 1, weak temperature dependence.
    s0, s05 = manifests["syk_b0"], manifests["syk_b05"]
    figures["E1"] = {
        "title": "Fermion model, g = 1",
        "x_label": "t",
        "y_label": "normalized correlator",
        "x_scale": "linear",
        "y_scale": "linear",
        "curves": [
            {
                "csv": copy_curve(s0["curves"]["otoc"], cache),
                "label": "beta = 0",
                "marker": "circle",
                "transform": "normalized",
            },
            {
                "csv": copy_curve(s05["curves"]["otoc"], cache),
                "label": "beta = 0.5",
                "marker": "square",
                "transform": "normalized",
            },
        ],
        "fits": [f for f in (fit_entry(s0, "otoc", "Gaussian fit"),) if f],
    }

    # Figure E2: weak-coupling sweep with exponential fits.
    sweep_curves = []
    sweep_fits = []
    for g, color in zip(
        (0.02, 0.025, 0.03, 0.035), ("#c0392b", "#2e6da4", "#27ae60", "#8e44ad")
    ):
        man = manifests[f"syk_g{g}"]
        sweep_curves.append(
            {
                "csv": copy_curve(man["curves"]["otoc"], cache),
                "label": f"g = {g}",
                "marker": "circle",
                "color": color,
                "transform": "normalized",
            }
        )
        entry = fit_entry(man, "otoc", f"exponential fit, g = {g}")
        if entry:
            sweep_fits.append(entry)
    figures["E2"] = {
        "title": "Fermion model, weak-coupling decay",
        "x_label": "t",
        "y_label": "normalized correlator",
        "x_scale": "linear",
        "y_scale": "linear",
        "curves": sweep_curves,
        "fits": sweep_fits,
    }

    bundle = {
        "schema_version": 1,
        "rng_algorithm": RNG_ALGORITHM,
        "code_version": manifests["iho"]["code_version"],
        "figures": figures,
    }
    (OUT / "manifest.json").write_text(json.dumps(bundle, indent=2) + "\n")
    print(f"wrote {OUT / 'manifest.json'} with {len(figures)} figures")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
