//! One sweep cell per `(λ, trial)` for every experiment.

use num_rational::Rational64;
use num_traits::ToPrimitive;
use paraproduct_core::dyadic::build_cap_family;
use paraproduct_core::engine::{
    bump_window, chained_commutator_bound, decoupling_ratio, diagonal_paraproduct, local_l4_ratio,
    localized_commutator_norm, Cylinder, Propagator, BUMP_GRADIENT_SUP,
};
use paraproduct_core::ledger::{AffineExponent, Rational};
use paraproduct_core::phase::{
    cross_lower_bound, grad_omega, heat_phase, heat_phase_inverse_bound, hessian_rho, norm3, null_symbol,
    sample_resonant_pair, scale3, suppression_ratio, FreqPair,
};
use paraproduct_core::rng::{derive_seed, RngState};
use paraproduct_core::spectral::{make_grid, synth_band_field, NormSpec};
use paraproduct_core::window::{kernel_diff_l2, tile_to_max_check, window_sup_ratio, SampledSignal};

use crate::config::{Experiment, SweepConfig};
use crate::oracles::{averaged_sup_bound_sq, fd_gradient, fd_hessian, TrigPoly};
use crate::record::NamedValue;

/// Measured values of one cell, the exponent they are compared with, and
/// the name of the value that exponent normalizes.
pub struct CellOutput {
    pub values: Vec<NamedValue>,
    pub predicted: AffineExponent,
    pub primary: &'static str,
}

/// Name of the value each experiment fits and normalizes.
pub fn primary_name(cfg: &SweepConfig) -> &'static str {
    match cfg.experiment {
        Experiment::Scaling | Experiment::Decoupling => "ratio",
        Experiment::LocalL4 => "schrodinger_ratio",
        Experiment::Commutator if cfg.chained => "measured",
        Experiment::Commutator => "norm",
        Experiment::Hessian => "min_abs_det",
        Experiment::Angles => "max_suppression_raw",
        Experiment::Window => "sup",
        Experiment::Kernel => "closed_form",
        Experiment::TileMax => "max_lhs_over_rhs",
        Experiment::Ledger => "",
    }
}

fn named(pairs: &[(&str, f64)]) -> Vec<NamedValue> {
    pairs
        .iter()
        .map(|(n, v)| NamedValue {
            name: (*n).to_string(),
            value: *v,
        })
        .collect()
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn delta_f64(d: Rational64) -> f64 {
    d.to_f64().unwrap_or(f64::NAN)
}

/// Exponent each experiment's primary value is predicted to scale with.
pub fn predicted_exponent(cfg: &SweepConfig) -> AffineExponent {
    match cfg.experiment {
        Experiment::Scaling => AffineExponent::from_parts((-2, 1), (3, 1)),
        Experiment::LocalL4 => AffineExponent::from_parts((0, 1), (-1, 4)),
        Experiment::Decoupling => AffineExponent::from_parts((-2, 3), (0, 1)),
        Experiment::Commutator if cfg.chained => AffineExponent::from_parts((-3, 1), (3, 1)),
        Experiment::Commutator => AffineExponent::from_parts((-1, 1), (0, 1)),
        Experiment::Hessian => AffineExponent::from_parts((-2, 1), (1, 1)),
        Experiment::Angles => AffineExponent::from_parts((-2, 1), (3, 1)),
        Experiment::Window => AffineExponent::from_parts((3, 4), (-1, 2)).scale(q(cfg.k as i64, 1)),
        Experiment::Kernel => AffineExponent::from_parts((-3, 4), (1, 2)),
        Experiment::Ledger | Experiment::TileMax => AffineExponent::zero(),
    }
}

pub fn cell_seed(cfg: &SweepConfig, lambda: u64, trial: usize, salt: u64) -> u64 {
    derive_seed(cfg.seed, &[lambda, trial as u64, salt])
}

pub fn run_cell(cfg: &SweepConfig, lambda: u64, trial: usize) -> paraproduct_core::Result<CellOutput> {
    let predicted = predicted_exponent(cfg);
    let primary = primary_name(cfg);
    let out = |values| CellOutput {
        values,
        predicted,
        primary,
    };
    let l = lambda as f64;
    let delta = cfg.delta;
    let d = delta_f64(delta);
    match cfg.experiment {
        Experiment::Scaling => {
            let grid = make_grid(cfg.grid_size(lambda).map_err(to_core)?)?;
            let h1 = NormSpec::sobolev(1, 1);
            let u = synth_band_field(grid, lambda, cell_seed(cfg, lambda, trial, 0), true, h1)?;
            let v = synth_band_field(grid, lambda, cell_seed(cfg, lambda, trial, 1), true, h1)?;
            let p = diagonal_paraproduct(&u, &v, l, delta)?;
            let ratio = p.hminus1;
            Ok(out(
                named(&[
                    ("ratio", ratio),
                    ("bound", l.powf(predicted.eval_f64(d))),
                    ("low_l2", p.low_l2),
                    ("tensor_l2", p.tensor_l2),
                    ("chain_ok", bool_value(p.chain_holds())),
                    ("support_ok", bool_value(p.support_holds())),
                    ("grid", grid.n() as f64),
                ])))
        }
        Experiment::LocalL4 => {
            let grid = make_grid(cfg.grid_size(lambda).map_err(to_core)?)?;
            let cyl = Cylinder::new(l, delta, 0.0, [0.0; 3]);
            let seed = cell_seed(cfg, lambda, trial, 0);
            let s = local_l4_ratio(lambda, delta, grid, seed, &cyl, Propagator::Schrodinger)?;
            let h = local_l4_ratio(lambda, delta, grid, seed, &cyl, Propagator::Heat)?;
            Ok(out(
                named(&[
                    ("schrodinger_ratio", s.ratio),
                    ("schrodinger_normalized", s.normalized),
                    ("heat_ratio", h.ratio),
                    ("heat_normalized", h.normalized),
                    ("time_steps", cyl.time_steps as f64),
                    ("grid", grid.n() as f64),
                ])))
        }
        Experiment::Decoupling => {
            let grid = make_grid(cfg.grid_size(lambda).map_err(to_core)?)?;
            let h1 = NormSpec::sobolev(1, 1);
            let u = synth_band_field(grid, lambda, cell_seed(cfg, lambda, trial, 0), true, h1)?;
            let v = synth_band_field(grid, lambda, cell_seed(cfg, lambda, trial, 1), true, h1)?;
            let caps = build_cap_family(l, q(2, 3))?;
            let r = decoupling_ratio(&u, &v, l, delta, &caps, [0.0, 0.0, 1.0])?;
            Ok(out(
                named(&[
                    ("ratio", r.ratio),
                    ("lhs", r.lhs),
                    ("rhs_l2", r.rhs_l2),
                    ("cap_count", r.cap_count as f64),
                    ("reference", r.reference),
                    ("cauchy_schwarz_ok", bool_value(r.ratio <= (r.cap_count as f64).sqrt() * (1.0 + 1e-12))),
                ])))
        }
        Experiment::Commutator if cfg.chained => {
            let grid = make_grid(cfg.grid_size(lambda).map_err(to_core)?)?;
            let h1 = NormSpec::sobolev(1, 1);
            let u = synth_band_field(grid, lambda, cell_seed(cfg, lambda, trial, 0), true, h1)?;
            let v = synth_band_field(grid, lambda, cell_seed(cfg, lambda, trial, 1), true, h1)?;
            let a = bump_window(grid)?;
            let c = chained_commutator_bound(&u, &v, l, delta, &a)?;
            Ok(out(
                named(&[("measured", c.measured), ("reference", c.reference), ("ratio", c.ratio)])))
        }
        Experiment::Commutator => {
            let grid = make_grid(cfg.grid_size(lambda).map_err(to_core)?)?;
            let a = bump_window(grid)?;
            let n = localized_commutator_norm(l, &a, grid, cfg.iters, cell_seed(cfg, lambda, trial, 0))?;
            Ok(out(
                named(&[
                    ("norm", n.norm),
                    ("norm_times_mu_over_grad", n.norm * l / BUMP_GRADIENT_SUP),
                    ("converged", bool_value(n.converged)),
                    ("iterations", n.iterations as f64),
                    ("grid", grid.n() as f64),
                ])))
        }
        Experiment::Hessian => Ok(out(hessian_cell(l, d, cfg.samples, cell_seed(cfg, lambda, trial, 0))?)),
        Experiment::Angles => Ok(out(angles_cell(l, d, cfg.samples, cell_seed(cfg, lambda, trial, 0))?)),
        Experiment::Window => {
            let r = window_sup_ratio(cfg.k, l, delta)?;
            Ok(out(named(&[("sup", r.sup), ("bound", r.bound), ("ratio", r.ratio)])))
        }
        Experiment::Kernel => {
            let r = kernel_diff_l2(l, delta)?;
            Ok(out(
                named(&[
                    ("quadrature", r.quadrature),
                    ("closed_form", r.closed_form),
                    ("normalized", r.normalized),
                    ("relative_gap", (r.quadrature - r.closed_form).abs() / r.closed_form),
                ])))
        }
        Experiment::TileMax => Ok(out(tile_max_cell(cell_seed(cfg, lambda, trial, 0))?)),
        Experiment::Ledger => Ok(out(Vec::new())),
    }
}

fn to_core(e: crate::error::HarnessError) -> paraproduct_core::Error {
    paraproduct_core::Error::Config(e.to_string())
}

fn bool_value(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// FD samples per Hessian cell.
pub const FD_SAMPLES: usize = 1000;

/// Determinant statistics and analytic-vs-FD agreement for the transverse
/// Hessian.
pub fn hessian_cell(lambda: f64, delta: f64, samples: usize, seed: u64) -> paraproduct_core::Result<Vec<NamedValue>> {
    let mut rng = RngState::new(seed, 0);
    let (mut min_det, mut max_det) = (f64::INFINITY, 0.0f64);
    let mut min_raw = f64::INFINITY;
    let (mut fd_err, mut sym_err, mut det_eig_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut flagged = 0usize;
    let norm_det = lambda.powf(2.0 - delta);
    for i in 0..samples {
        let (pair, next) = sample_resonant_pair(lambda, delta, rng);
        rng = next;
        let h = hessian_rho(&pair)?;
        flagged += h.below_min_angle as usize;
        let nd = h.det.abs() * norm_det;
        min_det = min_det.min(nd);
        min_raw = min_raw.min(h.det.abs());
        max_det = max_det.max(nd);
        det_eig_err = det_eig_err.max((h.det - h.eigs.0 * h.eigs.1).abs() / h.det.abs().max(f64::MIN_POSITIVE));
        if i < FD_SAMPLES {
            let step = 1e-4 * pair.w_norm();
            let fd = fd_hessian(&pair, h.v, step);
            for (a, b) in [(0, 0), (0, 1), (1, 1)] {
                let scale = h.m[0][0].abs().max(h.m[1][1].abs());
                fd_err = fd_err.max((fd[a][b] - h.m[a][b]).abs() / scale);
            }
            // the same directions at equal radii
            let sym = FreqPair {
                xi: scale3(pair.xi, lambda / norm3(pair.xi)),
                eta: scale3(pair.eta, lambda / norm3(pair.eta)),
                lambda,
            };
            let hs = hessian_rho(&sym)?;
            let w = sym.w_norm();
            sym_err = sym_err
                .max((hs.m[0][0] - 2.0 / lambda).abs() / (2.0 / lambda))
                .max((hs.m[1][1] - (2.0 / lambda - 4.0 / w)).abs() / (2.0 / lambda - 4.0 / w).abs());
        }
    }
    Ok(named(&[
        ("min_abs_det", min_raw),
        ("min_det", min_det),
        ("max_det", max_det),
        ("fd_max_rel_error", fd_err),
        ("symmetric_max_rel_error", sym_err),
        ("det_eigen_rel_error", det_eig_err),
        ("below_min_angle", flagged as f64),
        ("samples", samples as f64),
    ]))
}

/// Angle identities, null symbol, suppression and cross-product bounds,
/// heat phase range, and FD gradients over resonant samples.
pub fn angles_cell(lambda: f64, delta: f64, samples: usize, seed: u64) -> paraproduct_core::Result<Vec<NamedValue>> {
    let mut rng = RngState::new(seed, 0);
    let mut angle_res = 0.0f64;
    let mut b_violations = 0usize;
    let (mut sup_max, mut sup_min) = (0.0f64, f64::INFINITY);
    let mut cross_min = f64::INFINITY;
    let (mut phi_min, mut phi_max) = (f64::INFINITY, 0.0f64);
    let mut phi_inv_violations = 0usize;
    let mut grad_err = 0.0f64;
    let mut w_min = f64::INFINITY;
    let mut w_max = 0.0f64;
    for i in 0..samples {
        let (pair, next) = sample_resonant_pair(lambda, delta, rng);
        rng = next;
        let sym = FreqPair {
            xi: scale3(pair.xi, lambda / norm3(pair.xi)),
            eta: scale3(pair.eta, lambda / norm3(pair.eta)),
            lambda,
        };
        let th = sym.theta();
        angle_res = angle_res.max((sym.w_norm() - 2.0 * lambda * (th / 2.0).sin()).abs() / lambda);
        let b = norm3(null_symbol(pair.xi, pair.eta)?);
        if b > norm3(pair.eta) {
            b_violations += 1;
        }
        let s = suppression_ratio(&pair, delta)?;
        sup_max = sup_max.max(s);
        sup_min = sup_min.min(s);
        cross_min = cross_min.min(cross_lower_bound(&pair, delta));
        let phi = heat_phase(pair.xi, pair.eta);
        let pn = phi * lambda.powf(-2.0 * (1.0 - delta));
        phi_min = phi_min.min(pn);
        phi_max = phi_max.max(pn);
        if 1.0 / phi > heat_phase_inverse_bound(lambda, delta) * 10.0 {
            phi_inv_violations += 1;
        }
        let wn = pair.w_norm() / lambda.powf(1.0 - delta);
        w_min = w_min.min(wn);
        w_max = w_max.max(wn);
        if i < FD_SAMPLES {
            let (gx, ge) = grad_omega(pair.xi, pair.eta)?;
            let (fx, fe) = fd_gradient(pair.xi, pair.eta, 1e-5 * pair.w_norm());
            let scale = norm3(gx).max(norm3(ge));
            for c in 0..3 {
                grad_err = grad_err.max((gx[c] - fx[c]).abs() / scale).max((ge[c] - fe[c]).abs() / scale);
            }
        }
    }
    Ok(named(&[
        ("angle_identity_residual", angle_res),
        ("null_symbol_violations", b_violations as f64),
        ("max_suppression_raw", sup_max * lambda.powf(-2.0 + 3.0 * delta)),
        ("max_suppression", sup_max),
        ("min_suppression", sup_min),
        ("min_cross", cross_min),
        ("min_heat_phase", phi_min),
        ("max_heat_phase", phi_max),
        ("heat_inverse_excess", phi_inv_violations as f64),
        ("fd_gradient_rel_error", grad_err),
        ("min_w", w_min),
        ("max_w", w_max),
        ("samples", samples as f64),
    ]))
}

pub const TILE_LENGTHS: [f64; 3] = [0.1, 1.0, 10.0];
pub const TILE_SAMPLES: usize = 4097;
pub const TILE_MAX_DEGREE: i64 = 32;

/// One random trigonometric polynomial checked on three interval lengths.
pub fn tile_max_cell(seed: u64) -> paraproduct_core::Result<Vec<NamedValue>> {
    let mut rng = RngState::new(seed, 0);
    let mut violations = 0usize;
    let mut oracle_violations = 0usize;
    let mut worst = 0.0f64;
    for &len in &TILE_LENGTHS {
        let poly = TrigPoly::random(&mut rng, TILE_MAX_DEGREE, std::f64::consts::PI / len);
        let f = SampledSignal::from_fn(0.0, len, TILE_SAMPLES, |t| poly.eval(t).0)?;
        let df = SampledSignal::from_fn(0.0, len, TILE_SAMPLES, |t| poly.eval(t).1)?;
        let r = tile_to_max_check(&f, &df)?;
        violations += (!r.pass) as usize;
        worst = worst.max(r.lhs / r.rhs);
        let sq = averaged_sup_bound_sq(len, f.l2(), df.l2());
        if r.lhs * r.lhs > sq * (1.0 + 1e-8) {
            oracle_violations += 1;
        }
    }
    Ok(named(&[
        ("violations", violations as f64),
        ("oracle_violations", oracle_violations as f64),
        ("max_lhs_over_rhs", worst),
    ]))
}
