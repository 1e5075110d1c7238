"""Experiment drivers behind the CLI subcommands.

Each driver takes a parameter dict (see DEFAULTS), writes binary tensors,
CSVs, a resolved config and a metadata sidecar into its output directory,
and returns the metadata.  All outputs are deterministic functions of the
parameters, so reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import numpy as np

from . import io as tio
from .config import ExperimentConfig
from .diagnostics import hpd_interval, posterior_summary
from .grids import FieldSample, FrequencyBand, SpatialGrid
from .nuts import nuts_sample
from .optimize import OptimizerConfig, map_lbfgs
from .posteriors import DenoisingPosterior, HierarchicalCTPosterior
from .radon import (NoiseModel, RadonGeometry, add_noise, disk_mask,
                    fbp_reconstruct, generate_disk_phantom, radon_forward)
from .samplers import (HierarchicalSpec, LevelSetSpec, fd_reference_1d,
                       high_frequency_energy_fraction,
                       hierarchical_xi_given_sigma, level_set_transform,
                       noise_field, prior_map_matrix, sample_hierarchical_2d)
from .symbols import (SymbolSpec, paper_bump_sigma, parametrix_expand,
                      term_norms)
from .transforms import hermitian_row_synthesis
from .whitenoise import RngSeed, layout_for, sample_white_noise

SIGMA_PROFILES = ("bump", "constant")


def _sigma_spec(params: dict, grid: SpatialGrid) -> SymbolSpec:
    from .symbols import LengthScaleField
    profile = params.get("sigma_profile", "bump")
    if profile == "bump":
        sigma = paper_bump_sigma(grid)
    elif profile == "constant":
        sigma = LengthScaleField.constant(params.get("sigma_value", 1.0), grid)
    else:
        raise ValueError(f"unknown sigma profile {profile!r}")
    return SymbolSpec(params["alpha"], sigma)


def _write_config(name: str, params: dict, out) -> None:
    ExperimentConfig(name, str(out), params).write(out / "config.ini")


def _field_grid(n: int, dim: int) -> SpatialGrid:
    return SpatialGrid(dim, n)


# ---------------------------------------------------------------------------

SAMPLE_PRIOR_DEFAULTS = {
    "nx": 65, "n_eta": 32, "alpha": 2.0, "trunc_order": 3,
    "sigma_profile": "bump", "sigma_value": 1.0, "n_samples": 1, "seed": 0,
}


def run_sample_prior(params: dict, out) -> dict:
    out = tio.ensure_dir(out)
    grid = _field_grid(params["nx"], 1)
    band = FrequencyBand.dim1(params["n_eta"])
    spec = _sigma_spec(params, grid)
    N = params["trunc_order"]
    par = parametrix_expand(spec, grid, band, N)
    norms = term_norms(par)
    for k, s in enumerate(par.summands):
        tio.write_tensor(out / f"parametrix_term_{k}.ipt", s.values)
    tio.write_table_csv(out / "parametrix_norms.csv", ["k", "norm"],
                        [(k, float(v)) for k, v in enumerate(norms)])
    cols = {}
    for j in range(params["n_samples"]):
        noise = sample_white_noise(band, RngSeed(params["seed"], j))
        vals = hermitian_row_synthesis(par.partial_sum.values, noise.coeffs,
                                       band, grid)
        tio.write_tensor(out / f"sample_{j:03d}.ipt", vals)
        cols[f"sample_{j:03d}"] = vals
    tio.write_field_csv(out / "samples.csv", grid, cols)
    meta = {
        "experiment": "sample-prior", "params": dict(params),
        "band": band.metadata(), "rng": RngSeed(params["seed"]).metadata(),
        "term_norms": [float(v) for v in norms],
    }
    _write_config("sample-prior", params, out)
    tio.write_metadata(out / "metadata.json", meta)
    return meta


PARAMETRIX_REPORT_DEFAULTS = {
    "nx": 65, "n_eta": 32, "alpha": 2.0, "trunc_order": 3,
    "sigma_profile": "bump", "sigma_value": 1.0, "seed": 0,
}


def run_parametrix_report(params: dict, out) -> dict:
    out = tio.ensure_dir(out)
    grid = _field_grid(params["nx"], 1)
    band = FrequencyBand.dim1(params["n_eta"])
    spec = _sigma_spec(params, grid)
    par = parametrix_expand(spec, grid, band, params["trunc_order"])
    norms = term_norms(par)
    for k, s in enumerate(par.summands):
        tio.write_tensor(out / f"parametrix_term_{k}.ipt", s.values)
    tio.write_table_csv(out / "parametrix_norms.csv", ["k", "norm"],
                        [(k, float(v)) for k, v in enumerate(norms)])
    meta = {
        "experiment": "parametrix-report", "params": dict(params),
        "band": band.metadata(), "term_norms": [float(v) for v in norms],
    }
    _write_config("parametrix-report", params, out)
    tio.write_metadata(out / "metadata.json", meta)
    return meta


COMPARE_FD_DEFAULTS = {
    "nx": 65, "n_eta": 32, "alpha_low": 1.5, "alpha_high": 2.0,
    "trunc_order": 2, "sigma_profile": "bump", "sigma_value": 1.0,
    "hf_cutoff": 16, "seed": 0,
}


def run_compare_fd(params: dict, out) -> dict:
    out = tio.ensure_dir(out)
    grid = _field_grid(params["nx"], 1)
    band = FrequencyBand.dim1(params["n_eta"])
    noise = sample_white_noise(band, RngSeed(params["seed"], 0))
    psi = noise_field(noise, grid)
    results = {}
    for label in ("alpha_low", "alpha_high"):
        alpha = params[label]
        spec = _sigma_spec({**params, "alpha": alpha}, grid)
        par = parametrix_expand(spec, grid, band, params["trunc_order"])
        cols = {"noise": psi.values}
        for N in range(params["trunc_order"] + 1):
            q = par.partial_sum_up_to(N).values
            vals = hermitian_row_synthesis(q, noise.coeffs, band, grid)
            cols[f"parametrix_n{N}"] = vals
        fd = fd_reference_1d(spec, psi)
        cols["fd"] = fd.values
        tag = format(alpha, "g").replace(".", "p")
        tio.write_field_csv(out / f"compare_alpha_{tag}.csv", grid, cols)
        par_field = FieldSample(grid, cols[f"parametrix_n{params['trunc_order']}"])
        corr = float(np.corrcoef(par_field.values, fd.values)[0, 1])
        results[label] = {
            "alpha": alpha, "correlation": corr,
            "hf_fraction_parametrix": high_frequency_energy_fraction(
                par_field, params["hf_cutoff"]),
            "hf_fraction_fd": high_frequency_energy_fraction(
                fd, params["hf_cutoff"]),
        }
    meta = {"experiment": "compare-fd", "params": dict(params),
            "results": results}
    _write_config("compare-fd", params, out)
    tio.write_metadata(out / "metadata.json", meta)
    return meta


DENOISE_DEFAULTS = {
    "nx": 65, "n_eta": 32, "alpha": 2.0, "trunc_order": 5,
    "sigma_profile": "bump", "sigma_value": 1.0, "noise_rel": 0.01,
    "warmup": 200, "draws": 2000, "seed": 0, "map_only": False,
    "max_iter": 500,
}


def run_denoise(params: dict, out) -> dict:
    out = tio.ensure_dir(out)
    grid = _field_grid(params["nx"], 1)
    band = FrequencyBand.dim1(params["n_eta"])
    spec = _sigma_spec(params, grid)
    par = parametrix_expand(spec, grid, band, params["trunc_order"])
    layout = layout_for(band)
    B = prior_map_matrix(par.partial_sum.values, band, grid)

    truth_seed = RngSeed(params["seed"], 0)
    S_true = truth_seed.generator().standard_normal(layout.n_params)
    xi_true = B @ S_true
    y_clean = xi_true.copy()
    y, bound = add_noise(y_clean, NoiseModel(params["noise_rel"]),
                         RngSeed(params["seed"], 1))
    post = DenoisingPosterior(B, np.arange(grid.n_nodes), y, bound.sigma_noise)

    res = map_lbfgs(post, OptimizerConfig(max_iter=params["max_iter"],
                                          grad_tol=1e-9))
    S_map = res.x
    meta = {
        "experiment": "denoise", "params": dict(params),
        "sigma_noise": bound.sigma_noise,
        "map": {"status": res.status, "iterations": res.n_iter,
                "grad_norm": res.grad_norm, "log_posterior": res.value},
    }
    cols = {"truth": xi_true, "data": y, "map": B @ S_map}
    tio.write_tensor(out / "truth.ipt", xi_true)
    tio.write_tensor(out / "data.ipt", y)
    tio.write_tensor(out / "map.ipt", B @ S_map)

    if not params["map_only"]:
        chain = nuts_sample(post, params["warmup"], params["draws"],
                            RngSeed(params["seed"], 2), init=S_map)
        summ = posterior_summary(chain, post.push_forward, map_point=S_map)
        cols.update({
            "mean": summ.mean_field, "pushforward_of_mean": summ.pushforward_of_mean,
            "variance": summ.variance_field,
            "hpd_lo": summ.hpd_lo, "hpd_hi": summ.hpd_hi,
        })
        coeff_rows = []
        Smean = chain.samples.mean(axis=0)
        for j in range(layout.n_params):
            lo, hi = hpd_interval(chain.samples[:, j])
            coeff_rows.append((j, float(S_true[j]), float(S_map[j]),
                               float(Smean[j]), float(lo), float(hi),
                               float(chain.ess[j])))
        tio.write_table_csv(out / "coefficients.csv",
                            ["index", "truth", "map", "mean",
                             "hpd_lo", "hpd_hi", "ess"], coeff_rows)
        tio.write_tensor(out / "chain.ipt", chain.samples)
        tio.write_table_csv(out / "diagnostics.csv",
                            ["step_size", "divergences", "mean_accept",
                             "min_ess", "max_ess"],
                            [(float(chain.step_size), chain.divergences,
                              float(chain.mean_accept),
                              float(chain.ess.min()), float(chain.ess.max()))])
        meta["nuts"] = {
            "warmup": chain.warmup, "draws": chain.draws,
            "step_size": chain.step_size, "divergences": chain.divergences,
            "mean_accept": chain.mean_accept,
            "min_ess": float(chain.ess.min()),
        }
        hpd_width = float(np.mean(summ.hpd_hi - summ.hpd_lo))
        meta["mean_hpd_width"] = hpd_width
    tio.write_field_csv(out / "summary.csv", grid, cols)
    _write_config("denoise", params, out)
    tio.write_metadata(out / "metadata.json", meta)
    return meta


HIERARCHICAL_DEFAULTS = {
    "n": 64, "n_eta": 32, "a2": 6.25, "a3": 2.5, "levelset_k": 10.0,
    "n_samples": 3, "seed": 0,
}


def run_hierarchical_sample(params: dict, out) -> dict:
    out = tio.ensure_dir(out)
    grid = _field_grid(params["n"], 2)
    band = FrequencyBand.dim2(params["n_eta"])
    hspec = HierarchicalSpec.create(band, grid, params["a2"], params["a3"])
    level = LevelSetSpec(params["levelset_k"])
    first_cols = None
    for j in range(params["n_samples"]):
        s1 = sample_white_noise(band, RngSeed(params["seed"], 2 * j))
        s2 = sample_white_noise(band, RngSeed(params["seed"], 2 * j + 1))
        sigma, xi = sample_hierarchical_2d(hspec, s1, s2, normalize=True)
        xi_raw = hierarchical_xi_given_sigma(hspec, sigma.values, s2.coeffs,
                                             normalize=False)
        ls = level_set_transform(xi, level)
        tio.write_tensor(out / f"sigma_{j}.ipt", sigma.values)
        tio.write_tensor(out / f"xi_{j}.ipt", xi.values)
        tio.write_tensor(out / f"xi_unnormalized_{j}.ipt", xi_raw)
        tio.write_tensor(out / f"levelset_{j}.ipt", ls.values)
        if first_cols is None:
            first_cols = {"sigma": sigma.values, "xi": xi.values,
                          "xi_unnormalized": xi_raw, "levelset": ls.values}
    tio.write_field_csv(out / "sample_0.csv", grid, first_cols)
    meta = {"experiment": "hierarchical-sample", "params": dict(params),
            "a1": hspec.a1, "band": band.metadata()}
    _write_config("hierarchical-sample", params, out)
    tio.write_metadata(out / "metadata.json", meta)
    return meta


CT_DEFAULTS = {
    "n": 64, "n_eta": 32, "a2": 6.25, "a3": 2.5, "levelset_k": 10.0,
    "detectors": 64, "n_angles": 50, "max_angle": float(np.pi / 4),
    "quad_order": 64, "noise_rel": 0.01, "radius_min": 0.04,
    "radius_max": 0.22, "phantom_attempts": 300,
    "warmup": 200, "draws": 2000, "seed": 0, "map_only": False,
    "max_iter": 300, "n_posterior_fields": 4, "progress": False,
}


def run_ct(params: dict, out) -> dict:
    out = tio.ensure_dir(out)
    grid = _field_grid(params["n"], 2)
    band = FrequencyBand.dim2(params["n_eta"])
    hspec = HierarchicalSpec.create(band, grid, params["a2"], params["a3"])
    level = LevelSetSpec(params["levelset_k"])
    geom = RadonGeometry.make(params["n_angles"], params["max_angle"],
                              params["detectors"], params["quad_order"])

    phantom = generate_disk_phantom(
        RngSeed(params["seed"], 0), grid,
        (params["radius_min"], params["radius_max"]),
        params["phantom_attempts"])
    sino_clean = radon_forward(phantom.field(), geom)
    y, bound = add_noise(sino_clean.values.ravel(),
                         NoiseModel(params["noise_rel"]),
                         RngSeed(params["seed"], 1))
    from .radon import Sinogram
    fbp = fbp_reconstruct(Sinogram(geom, y.reshape(geom.shape)), grid)

    mask = disk_mask(grid)
    truth = phantom.values

    def rel_err(recon):
        return float(np.linalg.norm((recon - truth)[mask])
                     / np.linalg.norm(truth[mask]))

    post = HierarchicalCTPosterior(hspec, geom, level, y, bound.sigma_noise)
    res = map_lbfgs(post, OptimizerConfig(max_iter=params["max_iter"],
                                          grad_tol=1e-6))
    fields = post.forward_fields(res.x)
    sigma_map, xi_map, field_map = fields["sigma"], fields["xi"], fields["field"]
    S1_map, S2_map = post.split(res.x)

    err_map = rel_err(field_map)
    err_fbp = rel_err(fbp.values)

    tio.write_tensor(out / "phantom.ipt", truth)
    tio.write_tensor(out / "sinogram.ipt", sino_clean.values)
    tio.write_tensor(out / "sinogram_noisy.ipt", y.reshape(geom.shape))
    tio.write_tensor(out / "fbp.ipt", fbp.values)
    tio.write_tensor(out / "map_field.ipt", field_map)
    tio.write_tensor(out / "map_xi.ipt", xi_map)
    tio.write_tensor(out / "map_sigma.ipt", sigma_map)

    meta = {
        "experiment": "ct", "params": dict(params),
        "sigma_noise": bound.sigma_noise,
        "geometry": geom.metadata(),
        "phantom_disks": [list(d) for d in phantom.disks],
        "map": {"status": res.status, "iterations": res.n_iter,
                "grad_norm": res.grad_norm, "log_posterior": res.value},
        "rel_error_map": err_map, "rel_error_fbp": err_fbp,
    }

    if not params["map_only"]:
        post_fixed = HierarchicalCTPosterior(hspec, geom, level, y,
                                             bound.sigma_noise,
                                             fixed_sigma=sigma_map)
        chain = nuts_sample(post_fixed, params["warmup"], params["draws"],
                            RngSeed(params["seed"], 2), init=S2_map,
                            progress=params.get("progress", False))
        summ = posterior_summary(chain, post_fixed.push_forward,
                                 map_point=S2_map)
        tio.write_tensor(out / "posterior_mean.ipt", summ.mean_field)
        tio.write_tensor(out / "posterior_variance.ipt", summ.variance_field)
        tio.write_tensor(out / "posterior_hpd_lo.ipt", summ.hpd_lo)
        tio.write_tensor(out / "posterior_hpd_hi.ipt", summ.hpd_hi)
        tio.write_tensor(out / "chain.ipt", chain.samples)
        for k in range(min(params["n_posterior_fields"], chain.draws)):
            fld = post_fixed.push_forward(chain.samples[-1 - k])
            tio.write_tensor(out / f"posterior_sample_{k}.ipt", fld)
        tio.write_table_csv(out / "diagnostics.csv",
                            ["coordinate", "ess", "constant_flag"],
                            [(j, float(chain.ess[j]), int(chain.ess_flags[j]))
                             for j in range(chain.samples.shape[1])])
        tio.write_table_csv(out / "nuts_summary.csv",
                            ["step_size", "divergences", "mean_accept",
                             "min_ess"],
                            [(float(chain.step_size), chain.divergences,
                              float(chain.mean_accept), float(chain.ess.min()))])
        meta["nuts"] = {
            "warmup": chain.warmup, "draws": chain.draws,
            "step_size": chain.step_size, "divergences": chain.divergences,
            "mean_accept": chain.mean_accept,
            "min_ess": float(chain.ess.min()),
        }
    _write_config("ct", params, out)
    tio.write_metadata(out / "metadata.json", meta)
    return meta


DRIVERS = {
    "sample-prior": (SAMPLE_PRIOR_DEFAULTS, run_sample_prior),
    "parametrix-report": (PARAMETRIX_REPORT_DEFAULTS, run_parametrix_report),
    "compare-fd": (COMPARE_FD_DEFAULTS, run_compare_fd),
    "denoise": (DENOISE_DEFAULTS, run_denoise),
    "hierarchical-sample": (HIERARCHICAL_DEFAULTS, run_hierarchical_sample),
    "ct": (CT_DEFAULTS, run_ct),
}
