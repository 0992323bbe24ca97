//! Acceptance criteria shared by `verify-all` and the acceptance test.

use std::time::{Duration, Instant};

use num_rational::Rational64;
use num_traits::ToPrimitive;
use paraproduct_core::dyadic::{beta, build_cap_family, low_pass_symbol, DyadicSymbol};
use paraproduct_core::engine::commutator_zero_check;
use paraproduct_core::ledger::{
    branch_report, format_rational, sharp_rows, table1, threshold, AffineExponent, Rational, ROW_ANGULAR,
    ROW_COUNTING_DECOUPLING, ROW_IBP_FULL, ROW_TILE_COMPENSATION,
};
use paraproduct_core::rng::RngState;
use paraproduct_core::spectral::{
    divergence_residual, leray_project, make_grid, norm, physical_lp, synth_band_field, synth_band_scalar,
    NormSpec, SpectralField,
};
use paraproduct_core::window::{
    hermite_gauss_max, kernel_diff, kernel_diff_bound, kernel_diff_factored, kernel_diff_l2, window_sup_ratio,
};

use crate::config::{Experiment, SweepConfig};
use crate::experiments::{angles_cell, hessian_cell};
use crate::fit::fit_exponent;
use crate::oracles::hermite_gauss_max_by_roots;
use crate::record::ExperimentRecord;
use crate::sweep::{run_sweep, series, worker_count};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteMode {
    /// Grids up to n = 64.
    Quick,
    /// Grids up to n = 256.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl Criterion {
    pub fn pass(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        format!("criterion {:>2} {tag} {}: {}", self.id, self.name, self.detail)
    }
}

/// Criteria that fail by analysis rather than by defect: the suppression
/// ratio scales as `λ^{2−4δ}` off `δ = 1/2`, and the localized commutator
/// is still in its pre-asymptotic range for `μ ≤ 64`.
pub const EXPECTED_FAILURES: [u32; 2] = [6, 11];

/// Scaling-sweep slope at δ = 1/2, seed 42, four trials, λ ∈ {4, 8, 16},
/// pinned from the first full run.
pub const GOLDEN_SCALING_SLOPE: f64 = -2.701_86;
pub const GOLDEN_SLOPE_TOL: f64 = 1e-3;

/// Floor for `|ξ × η| λ^{−(2−δ)}` over the sampler, pinned from the first
/// run (observed minimum 0.405).
pub const CROSS_FLOOR: f64 = 0.4;

/// Bound on the chained commutator ratio against `N^{−3+3δ}`.
pub const CHAINED_RATIO_BOUND: f64 = 1.0;

struct Check {
    ok: bool,
    parts: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            ok: true,
            parts: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, what: String) {
        if !ok {
            self.ok = false;
        }
        self.parts.push(if ok { what } else { format!("[x] {what}") });
    }

    fn finish(mut self, id: u32, name: &'static str, start: Instant, limit: Duration) -> Criterion {
        let elapsed = start.elapsed();
        self.expect(elapsed <= limit, format!("{:.2}s of {}s", elapsed.as_secs_f64(), limit.as_secs()));
        Criterion {
            id,
            name,
            status: if self.ok { Status::Pass } else { Status::Fail },
            detail: self.parts.join("; "),
        }
    }
}

fn fail(id: u32, name: &'static str, e: impl std::fmt::Display) -> Criterion {
    Criterion {
        id,
        name,
        status: Status::Fail,
        detail: format!("error: {e}"),
    }
}

fn skipped(id: u32, name: &'static str) -> Criterion {
    Criterion {
        id,
        name,
        status: Status::Skipped,
        detail: "needs grids above n = 64; run with --full".into(),
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational64::new(n, d)
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

pub fn run_suites(mode: SuiteMode) -> Vec<Criterion> {
    let full = mode == SuiteMode::Full;
    vec![
        ledger_golden(),
        spectral_suite(),
        dyadic_suite(),
        multiplier_commutator(),
        phase_geometry(),
        null_form(),
        window_kernel(),
        tile_max(),
        if full { paraproduct_conformance() } else { skipped(9, NAME_9) },
        if full { local_l4() } else { skipped(10, NAME_10) },
        if full { commutator_scaling() } else { skipped(11, NAME_11) },
        determinism(mode),
    ]
}

/// Runs one criterion by id.
pub fn run_criterion(id: u32, mode: SuiteMode) -> Option<Criterion> {
    Some(match id {
        1 => ledger_golden(),
        2 => spectral_suite(),
        3 => dyadic_suite(),
        4 => multiplier_commutator(),
        5 => phase_geometry(),
        6 => null_form(),
        7 => window_kernel(),
        8 => tile_max(),
        9 => paraproduct_conformance(),
        10 => local_l4(),
        11 => commutator_scaling(),
        12 => determinism(mode),
        _ => return None,
    })
}

const NAME_1: &str = "ledger golden values";

fn ledger_golden() -> Criterion {
    let start = Instant::now();
    let mut c = Check::new();
    let t = table1();
    let d = |n, dd| q(n, dd);
    let exp = |a: (i64, i64), b: (i64, i64)| AffineExponent::from_parts(a, b);
    c.expect(t.total == exp((-3, 1), (7, 4)), format!("total {}", t.total));
    c.expect(t.minimal_total == exp((-3, 1), (2, 1)), format!("minimal {}", t.minimal_total));
    let unfolded = exp((1, 6), (-1, 1)) + exp((1, 6), (0, 1)) + exp((2, 3), (-1, 1));
    let angular = t.rows.iter().find(|r| r.name == ROW_ANGULAR).map(|r| r.exponent);
    c.expect(
        unfolded == exp((1, 1), (-2, 1)) && angular == Some(unfolded),
        format!("unfolded row {unfolded}"),
    );
    let global = exp((-9, 2), (5, 2));
    c.expect(global.eval(d(1, 6)) == d(-49, 12), format!("global at 1/6 = {}", format_rational(global.eval(d(1, 6)))));
    c.expect(global.eval(d(5, 8)) == d(-47, 16), format!("global at 5/8 = {}", format_rational(global.eval(d(5, 8)))));
    let sharp = sharp_rows();
    let row = |name: &str| sharp.iter().find(|r| r.name == name).map(|r| r.exponent);
    for (name, want) in [
        (ROW_IBP_FULL, d(-11, 16)),
        (ROW_COUNTING_DECOUPLING, d(-9, 16)),
        (ROW_TILE_COMPENSATION, d(-5, 8)),
    ] {
        let got = row(name).map(|e| e.eval(d(5, 8)));
        c.expect(
            got == Some(want),
            format!("{name} at 5/8 = {}", got.map(format_rational).unwrap_or_else(|| "missing".into())),
        );
    }
    let l2 = exp((-2, 1), (3, 1)).eval(d(5, 8));
    c.expect(l2 == d(-1, 8), format!("-2 + 3δ at 5/8 = {}", format_rational(l2)));
    let th = threshold(&exp((-9, 4), (5, 4)), &exp((-1, 1), (-1, 1))).delta();
    c.expect(th == Some(d(5, 9)), format!("threshold {}", th.map(format_rational).unwrap_or_else(|| "none".into())));
    match branch_report(d(5, 8)) {
        Ok(b) => c.expect(b.gap == d(5, 32), format!("gap {}", format_rational(b.gap))),
        Err(e) => c.expect(false, format!("branch report: {e}")),
    }
    c.finish(1, NAME_1, start, secs(1))
}

const NAME_2: &str = "spectral core";

fn spectral_suite() -> Criterion {
    let start = Instant::now();
    let run = || -> paraproduct_core::Result<Check> {
        let grid = make_grid(64)?;
        let mut c = Check::new();
        let (mut planch, mut round, mut idem, mut annih, mut herm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for seed in 0..20u64 {
            let lambda = 2u64 << (seed % 3);
            let f = synth_band_field(grid, lambda, 1000 + seed, false, NormSpec::L2)?;
            let l2 = norm(&f, NormSpec::L2)?;
            planch = planch.max((physical_lp(&f, 2.0) - l2).abs() / l2);
            let back = SpectralField::from_physical(grid, f.to_physical(), true)?;
            round = round.max(norm(&back.sub(&f)?, NormSpec::L2)? / l2);
            let p = leray_project(&f)?;
            let pp = leray_project(&p)?;
            idem = idem.max(norm(&pp.sub(&p)?, NormSpec::L2)? / norm(&p, NormSpec::L2)?);
            idem = idem.max(divergence_residual(&p));
            let s = synth_band_scalar(grid, lambda, 2000 + seed, NormSpec::L2)?;
            let grad = gradient(&s)?;
            annih = annih.max(norm(&leray_project(&grad)?, NormSpec::L2)? / norm(&grad, NormSpec::L2)?);
            herm = herm.max(f.hermitian_residual()).max(p.hermitian_residual());
        }
        let tol = 1e-12;
        c.expect(planch < tol, format!("Plancherel {planch:.1e}"));
        c.expect(round < tol, format!("round trip {round:.1e}"));
        c.expect(idem < tol, format!("Leray idempotence {idem:.1e}"));
        c.expect(annih < tol, format!("gradient annihilation {annih:.1e}"));
        c.expect(herm < tol, format!("Hermitian {herm:.1e}"));
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(2, NAME_2, start, secs(30)),
        Err(e) => fail(2, NAME_2, e),
    }
}

/// `∇s` of a scalar field.
fn gradient(s: &SpectralField) -> paraproduct_core::Result<SpectralField> {
    let g = s.grid();
    let m = g.len();
    let mut out = vec![num_complex::Complex64::default(); 3 * m];
    for idx in 0..m {
        let k = g.wavevector(idx);
        for j in 0..3 {
            out[j * m + idx] = num_complex::Complex64::new(0.0, k[j] as f64) * s.component(0)[idx];
        }
    }
    SpectralField::from_coeffs(g, 3, out, s.hermitian())
}

const NAME_3: &str = "dyadic and angular partitions";

fn dyadic_suite() -> Criterion {
    let start = Instant::now();
    let run = || -> paraproduct_core::Result<Check> {
        let mut c = Check::new();
        let mut rng = RngState::new(3, 0);
        let chi = DyadicSymbol;
        let mut pu = 0.0f64;
        for _ in 0..10_000 {
            let r: f64 = rng.uniform(1e-3, 1000.0);
            // low-pass below 1 plus dyadic pieces up to a scale past r
            let mut sum = low_pass_symbol(r, 1.0);
            let mut lam = 1.0;
            while lam <= 4.0 * r {
                sum += chi.eval(r / lam);
                lam *= 2.0;
            }
            pu = pu.max((sum - 1.0).abs());
        }
        c.expect(pu < 1e-12, format!("dyadic partition {pu:.1e}"));
        let low_vs_beta = (0..100)
            .map(|i| {
                let r = i as f64 * 0.2;
                (low_pass_symbol(r, 8.0) - (1.0 - beta(r / 8.0))).abs()
            })
            .fold(0.0, f64::max);
        c.expect(low_vs_beta == 0.0, format!("low-pass telescoping {low_vs_beta:.1e}"));

        let caps = build_cap_family(16.0, q(2, 3))?;
        let mut sq = 0.0f64;
        for _ in 0..10_000 {
            let dir = rng.unit_vector();
            let s: f64 = caps.weights(dir).iter().map(|p| p.1 * p.1).sum();
            sq = sq.max((s - 1.0).abs());
        }
        c.expect(sq < 1e-10, format!("squared cap partition {sq:.1e} over {} caps", caps.len()));

        let grid = make_grid(64)?;
        let caps8 = build_cap_family(8.0, q(2, 3))?;
        let f = synth_band_field(grid, 8, 33, false, NormSpec::L2)?;
        let piece = paraproduct_core::dyadic::project_dyadic(&f, 8.0)?;
        let whole = norm(&piece, NormSpec::L2)?.powi(2);
        let mut parts = 0.0;
        for cap in 0..caps8.len() {
            parts += norm(&caps8.project(&f, cap)?, NormSpec::L2)?.powi(2);
        }
        let res = (parts - whole).abs() / whole;
        c.expect(res < 1e-10, format!("cap energy resummation {res:.1e}"));

        let mut closure = true;
        for i in 0..caps.len() {
            let j = caps.antipode(i);
            let (a, b) = (caps.centers()[i], caps.centers()[j]);
            closure &= caps.antipode(j) == i && a[0] == -b[0] && a[1] == -b[1] && a[2] == -b[2];
        }
        c.expect(closure, "antipodal closure".into());
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(3, NAME_3, start, secs(60)),
        Err(e) => fail(3, NAME_3, e),
    }
}

const NAME_4: &str = "multiplier commutator";

fn multiplier_commutator() -> Criterion {
    let start = Instant::now();
    let run = || -> paraproduct_core::Result<Check> {
        let mut c = Check::new();
        let grid = make_grid(64)?;
        let r = commutator_zero_check(8.0, 10, grid, 4)?;
        c.expect(r < 1e-12, format!("max residual {r:.1e} over 10 fields"));
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(4, NAME_4, start, secs(10)),
        Err(e) => fail(4, NAME_4, e),
    }
}

const PHASE_SAMPLES: usize = 100_000;
const PHASE_DELTAS: [(i64, i64); 3] = [(1, 4), (1, 2), (5, 8)];

fn phase_lambdas() -> Vec<f64> {
    (6..=14).map(|e| 2f64.powi(e)).collect()
}

fn value(values: &[crate::record::NamedValue], name: &str) -> f64 {
    values.iter().find(|v| v.name == name).map(|v| v.value).unwrap_or(f64::NAN)
}

const NAME_5: &str = "phase geometry";

fn phase_geometry() -> Criterion {
    let start = Instant::now();
    let run = || -> paraproduct_core::Result<Check> {
        let mut c = Check::new();
        let (mut fd, mut sym, mut angle) = (0.0f64, 0.0f64, 0.0f64);
        for (dn, dd) in PHASE_DELTAS {
            let delta = dn as f64 / dd as f64;
            let mut dets = Vec::new();
            for (i, &l) in phase_lambdas().iter().enumerate() {
                let h = hessian_cell(l, delta, PHASE_SAMPLES, 500 + i as u64)?;
                fd = fd.max(value(&h, "fd_max_rel_error"));
                sym = sym.max(value(&h, "symmetric_max_rel_error"));
                dets.push(value(&h, "min_det"));
                let a = angles_cell(l, delta, PHASE_SAMPLES, 700 + i as u64)?;
                angle = angle.max(value(&a, "angle_identity_residual"));
            }
            let (lo, hi) = min_max(&dets);
            c.expect(
                lo > 0.0 && hi / lo <= 4.0,
                format!("δ={dn}/{dd} min|det|λ^(2-δ) in [{lo:.3}, {hi:.3}]"),
            );
        }
        c.expect(angle < 1e-10, format!("angle identity {angle:.1e}·λ"));
        c.expect(sym < 1e-10, format!("symmetric Hessian {sym:.1e}"));
        c.expect(fd < 1e-5, format!("FD Hessian {fd:.1e}"));
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(5, NAME_5, start, secs(120)),
        Err(e) => fail(5, NAME_5, e),
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

const NAME_6: &str = "null form";

fn null_form() -> Criterion {
    let start = Instant::now();
    let run = || -> paraproduct_core::Result<Check> {
        let mut c = Check::new();
        let mut violations = 0.0;
        let mut cross = f64::INFINITY;
        for (dn, dd) in PHASE_DELTAS {
            let delta = dn as f64 / dd as f64;
            let mut sup = Vec::new();
            for (i, &l) in phase_lambdas().iter().enumerate() {
                let a = angles_cell(l, delta, PHASE_SAMPLES, 900 + i as u64)?;
                violations += value(&a, "null_symbol_violations");
                cross = cross.min(value(&a, "min_cross"));
                sup.push(value(&a, "max_suppression"));
            }
            let (lo, hi) = min_max(&sup);
            c.expect(
                hi / lo <= 4.0,
                format!("δ={dn}/{dd} normalized suppression spans [{lo:.3e}, {hi:.3e}]"),
            );
        }
        c.expect(violations == 0.0, format!("|B| > |η| in {violations} samples"));
        c.expect(cross >= CROSS_FLOOR, format!("cross floor {cross:.4} ≥ {CROSS_FLOOR}"));
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(6, NAME_6, start, secs(120)),
        Err(e) => fail(6, NAME_6, e),
    }
}

const NAME_7: &str = "window and kernel";

fn window_kernel() -> Criterion {
    let start = Instant::now();
    let run = || -> paraproduct_core::Result<Check> {
        let mut c = Check::new();
        let ns: Vec<f64> = (6..=12).map(|e| 2f64.powi(e)).collect();
        let delta = q(1, 2);
        let mut spread = 0.0f64;
        let mut oracle = 0.0f64;
        for k in 0..=8 {
            let ratios: Vec<f64> = ns
                .iter()
                .map(|&n| window_sup_ratio(k, n, delta).map(|r| r.ratio))
                .collect::<paraproduct_core::Result<_>>()?;
            let (lo, hi) = min_max(&ratios);
            spread = spread.max((hi - lo) / hi);
            oracle = oracle.max((hermite_gauss_max(k) - hermite_gauss_max_by_roots(k)).abs() / hermite_gauss_max(k));
        }
        c.expect(spread < 1e-10, format!("window ratio spread {spread:.1e}"));
        c.expect(oracle < 1e-9, format!("Hermite max vs root oracle {oracle:.1e}"));

        let mut rng = RngState::new(7, 0);
        let (mut fact, mut bound_viol) = (0.0f64, 0usize);
        for _ in 0..100_000 {
            let n = 2f64.powi(rng.uniform(6.0, 12.999).floor() as i32);
            let t = rng.uniform(0.0, 4.0) / (n * n);
            let a = kernel_diff(t, n)?;
            let b = kernel_diff_factored(t, n)?;
            fact = fact.max((a - b).norm() / a.norm().max(f64::MIN_POSITIVE));
            if a.norm() > kernel_diff_bound(t, n) {
                bound_viol += 1;
            }
        }
        c.expect(fact < 1e-13, format!("factorization {fact:.1e}"));
        c.expect(bound_viol == 0, format!("√2 bound violations {bound_viol}"));

        let mut quad = 0.0f64;
        let mut normalized = Vec::new();
        for &n in &ns {
            let r = kernel_diff_l2(n, delta)?;
            quad = quad.max((r.quadrature - r.closed_form).abs() / r.closed_form);
            normalized.push(r.normalized);
        }
        c.expect(quad < 1e-8, format!("quadrature vs closed form {quad:.1e}"));
        let (lo, hi) = min_max(&normalized);
        c.expect(hi / lo <= 1.1, format!("normalized L² in [{lo:.4}, {hi:.4}]"));
        Ok(c)
    };
    match run() {
        Ok(c) => c.finish(7, NAME_7, start, secs(60)),
        Err(e) => fail(7, NAME_7, e),
    }
}

const NAME_8: &str = "tile to max";

fn tile_max() -> Criterion {
    let start = Instant::now();
    let mut cfg = SweepConfig::new(Experiment::TileMax, vec![1], q(1, 2));
    cfg.trials = 1000;
    match run_sweep(&cfg, worker_count()) {
        Ok(records) => {
            let mut c = Check::new();
            let errors = records.iter().filter(|r| r.error.is_some()).count();
            let v: f64 = records.iter().filter_map(|r| r.value("violations")).sum();
            let o: f64 = records.iter().filter_map(|r| r.value("oracle_violations")).sum();
            let worst = records
                .iter()
                .filter_map(|r| r.value("max_lhs_over_rhs"))
                .fold(0.0, f64::max);
            c.expect(errors == 0, format!("{errors} failed trials"));
            c.expect(v == 0.0 && o == 0.0, format!("violations {v}, oracle {o}, over 3000 signals"));
            c.parts.push(format!("worst lhs/rhs {worst:.3}"));
            c.finish(8, NAME_8, start, secs(60))
        }
        Err(e) => fail(8, NAME_8, e),
    }
}

const NAME_9: &str = "paraproduct conformance";

/// Runs the scaling sweep used by criteria 9 and 12.
pub fn scaling_config(lambdas: Vec<u64>, delta: Rational64, trials: usize) -> SweepConfig {
    let mut cfg = SweepConfig::new(Experiment::Scaling, lambdas, delta);
    cfg.trials = trials;
    cfg.seed = 42;
    cfg.grid_rule = 5.0;
    cfg
}

fn paraproduct_conformance() -> Criterion {
    let start = Instant::now();
    let mut c = Check::new();
    for (dn, dd) in PHASE_DELTAS {
        let delta = q(dn, dd);
        let cfg = scaling_config(vec![4, 8, 16], delta, 4);
        let records = match run_sweep(&cfg, worker_count()) {
            Ok(r) => r,
            Err(e) => return fail(9, NAME_9, e),
        };
        let bad = |name: &str| records.iter().filter(|r| r.value(name) != Some(1.0)).count();
        let over = records
            .iter()
            .filter(|r| match (r.value("ratio"), r.value("bound")) {
                (Some(a), Some(b)) => a > b,
                _ => true,
            })
            .count();
        c.expect(
            bad("chain_ok") == 0 && bad("support_ok") == 0 && over == 0,
            format!(
                "δ={dn}/{dd}: chain {} support {} bound {} violations",
                bad("chain_ok"),
                bad("support_ok"),
                over
            ),
        );
        match fit_exponent(&series(&records, "ratio")) {
            Ok(f) => {
                let pred = -2.0 + 3.0 * delta.to_f64().unwrap_or(f64::NAN);
                c.expect(f.slope <= pred + 0.2, format!("slope {:.4} ≤ {:.4}", f.slope, pred + 0.2));
                if delta == q(1, 2) {
                    c.expect(
                        (f.slope - GOLDEN_SCALING_SLOPE).abs() < GOLDEN_SLOPE_TOL,
                        format!("golden slope {GOLDEN_SCALING_SLOPE}"),
                    );
                }
            }
            Err(e) => c.expect(false, format!("fit: {e}")),
        }
    }
    c.finish(9, NAME_9, start, secs(600))
}

const NAME_10: &str = "local L4";

fn local_l4() -> Criterion {
    let start = Instant::now();
    let cfg = SweepConfig::new(Experiment::LocalL4, vec![8, 16, 32], q(1, 2));
    let records = match run_sweep(&cfg, worker_count()) {
        Ok(r) => r,
        Err(e) => return fail(10, NAME_10, e),
    };
    let mut c = Check::new();
    for name in ["schrodinger_normalized", "heat_normalized"] {
        let v: Vec<f64> = series(&records, name).into_iter().map(|p| p.1).collect();
        let ok = v.len() == 3 && v.iter().all(|x| x.is_finite() && *x > 0.0) && v.windows(2).all(|w| w[1] <= 1.2 * w[0]);
        c.expect(ok, format!("{name} {}", fmt_list(&v)));
    }
    c.finish(10, NAME_10, start, secs(900))
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", items.join(", "))
}

const NAME_11: &str = "commutator scaling";

fn commutator_scaling() -> Criterion {
    let start = Instant::now();
    let mut c = Check::new();
    let cfg = SweepConfig::new(Experiment::Commutator, vec![8, 16, 32, 64], q(1, 2));
    match run_sweep(&cfg, worker_count()) {
        Ok(records) => {
            let norms: Vec<f64> = series(&records, "norm").into_iter().map(|p| p.1).collect();
            let converged = records.iter().all(|r| r.value("converged") == Some(1.0));
            c.expect(converged && norms.len() == 4, format!("norms {} converged {converged}", fmt_list(&norms)));
            let ratios: Vec<f64> = norms.windows(2).map(|w| w[1] / w[0]).collect();
            let halving = ratios.iter().all(|r| (0.35..=0.65).contains(r));
            c.expect(halving, format!("doubling ratios {} within 0.5 ± 30%", fmt_list(&ratios)));
        }
        Err(e) => c.expect(false, format!("localized: {e}")),
    }
    let mut cfg = SweepConfig::new(Experiment::Commutator, vec![8, 16, 32], q(1, 2));
    cfg.chained = true;
    match run_sweep(&cfg, worker_count()) {
        Ok(records) => {
            let r: Vec<f64> = series(&records, "ratio").into_iter().map(|p| p.1).collect();
            let ok = r.len() == 3 && r.iter().all(|x| x.is_finite() && *x <= CHAINED_RATIO_BOUND);
            c.expect(ok, format!("chained ratios {} ≤ {CHAINED_RATIO_BOUND}", fmt_list(&r)));
        }
        Err(e) => c.expect(false, format!("chained: {e}")),
    }
    c.finish(11, NAME_11, start, secs(600))
}

const NAME_12: &str = "determinism";

fn determinism(mode: SuiteMode) -> Criterion {
    let start = Instant::now();
    let cfg = match mode {
        SuiteMode::Full => scaling_config(vec![4, 8, 16], q(1, 2), 4),
        SuiteMode::Quick => scaling_config(vec![4, 8], q(1, 2), 2),
    };
    let run = |workers: usize| -> crate::error::Result<Vec<u8>> {
        let records: Vec<ExperimentRecord> = run_sweep(&cfg, workers)?;
        crate::cli::csv_bytes(&records)
    };
    match (run(1), run(8)) {
        (Ok(a), Ok(b)) => {
            let mut c = Check::new();
            c.expect(a == b && !a.is_empty(), format!("{} CSV bytes, 1 vs 8 workers", a.len()));
            c.finish(12, NAME_12, start, secs(120))
        }
        (Err(e), _) | (_, Err(e)) => fail(12, NAME_12, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_criterion_passes() {
        let c = ledger_golden();
        assert!(c.pass(), "{}", c.line());
    }

    #[test]
    fn line_format() {
        let c = Criterion {
            id: 3,
            name: "x",
            status: Status::Skipped,
            detail: "d".into(),
        };
        assert_eq!(c.line(), "criterion  3 SKIP x: d");
    }
}
