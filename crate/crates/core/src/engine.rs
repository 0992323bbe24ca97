//! The measured side: the diagonal paraproduct, propagators, local `L⁴`
//! on a tile, decoupling over antipodal caps, and Leray commutators.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::ToPrimitive;

use crate::dyadic::{low_pass_edge, low_pass_symbol, project_dyadic, project_low, CapFamily};
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::rng::RngState;
use crate::spectral::{
    divergence_residual, for_each_product, forward_to_coeffs, leray_project, make_grid, norm,
    synth_band_field, Grid3, NormSpec, SpectralField,
};

fn to_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn next_pow2_above(x: f64) -> usize {
    let mut n = 8usize;
    while n as f64 <= x {
        n *= 2;
    }
    n
}

/// Output radius of `P_{<μ}`: its symbol vanishes from `3M/4` on.
pub fn low_pass_support(mu: f64) -> f64 {
    0.75 * low_pass_edge(mu)
}

/// `P_{<μ} ∇·(a ⊗ b)` together with the norms of the multiplier chain.
#[derive(Clone, Debug)]
pub struct Paraproduct {
    pub field: SpectralField,
    /// `‖P_{<μ} ∇·T‖_{Ḣ^{-1}}`.
    pub hminus1: f64,
    /// `‖P_{<μ} T‖_{L²}`.
    pub low_l2: f64,
    /// `‖T‖_{L²}`.
    pub tensor_l2: f64,
    pub mu: f64,
}

impl Paraproduct {
    /// `‖R‖_{Ḣ^{-1}} ≤ ‖P_{<μ}T‖_{L²} ≤ ‖T‖_{L²}` up to rounding.
    pub fn chain_holds(&self) -> bool {
        let slack = 1e-12 * self.tensor_l2.max(f64::MIN_POSITIVE);
        self.hminus1 <= self.low_l2 + slack && self.low_l2 <= self.tensor_l2 + slack
    }

    /// No coefficient at `|k| ≥ 2μ`.
    pub fn support_holds(&self) -> bool {
        self.field.support_radius() < 2.0 * self.mu
    }
}

/// `P_{<μ} ∇·(a ⊗ b)` for two vector fields already localized in
/// frequency; the product is formed on their common grid.
pub fn resonant_block(a: &SpectralField, b: &SpectralField, mu: f64) -> Result<Paraproduct> {
    if a.components() != 3 || b.components() != 3 {
        return Err(Error::Parameter("paraproduct factors must be vector fields".into()));
    }
    if a.grid() != b.grid() {
        return Err(Error::Parameter("paraproduct factors live on different grids".into()));
    }
    let grid = a.grid();
    let m = grid.len();
    let symbol: Vec<f64> = (0..m).map(|idx| low_pass_symbol(grid.kmag(idx), mu)).collect();
    let mut out = vec![Complex64::default(); 3 * m];
    let (mut low2, mut t2) = (0.0, 0.0);
    for_each_product(a, b, grid, low_pass_support(mu), |i, j, coeffs| {
        let target = &mut out[i * m..(i + 1) * m];
        for idx in 0..m {
            let z = coeffs[idx];
            t2 += z.norm_sqr();
            let s = symbol[idx];
            if s == 0.0 {
                continue;
            }
            let zs = z * s;
            low2 += zs.norm_sqr();
            let kj = grid.wavevector(idx)[j] as f64;
            target[idx] += Complex64::new(0.0, kj) * zs;
        }
    })?;
    let field = SpectralField::from_coeffs(grid, 3, out, a.hermitian() && b.hermitian())?;
    let hminus1 = norm(&field, NormSpec::sobolev(-1, 1))?;
    let p = Paraproduct {
        field,
        hminus1,
        low_l2: low2.sqrt(),
        tensor_l2: t2.sqrt(),
        mu,
    };
    debug_assert!(p.chain_holds());
    Ok(p)
}

/// `R_λ = P_{<λ^{1-δ}} ∇·(P_λ u ⊗ P_λ v)` for divergence-free `u, v`.
pub fn diagonal_paraproduct(u: &SpectralField, v: &SpectralField, lambda: f64, delta: Rational64) -> Result<Paraproduct> {
    for (name, f) in [("u", u), ("v", v)] {
        if f.components() == 3 && divergence_residual(f) > 1e-10 {
            return Err(Error::Parameter(format!("{name} is not divergence-free")));
        }
    }
    let mu = lambda.powf(1.0 - to_f64(delta));
    let ul = project_dyadic(u, lambda)?;
    let vl = project_dyadic(v, lambda)?;
    resonant_block(&ul, &vl, mu)
}

/// Grid for the paraproduct at `λ` under the rule `n ≥ m·λ`.
pub fn grid_for(lambda: f64, multiplier: f64) -> Result<Grid3> {
    let mut n = 8usize;
    while (n as f64) < multiplier * lambda {
        n *= 2;
    }
    make_grid(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Propagator {
    Schrodinger,
    Heat,
}

/// `e^{itΔ} f`, the multiplier `e^{-it|k|²}`.
pub fn schrodinger_evolve(f: &SpectralField, t: f64) -> SpectralField {
    let mut out = f.clone();
    out.apply_complex_multiplier(|_, r| Complex64::from_polar(1.0, -t * r * r), false);
    out
}

/// `e^{tΔ} f` for `t ≥ 0`.
pub fn heat_evolve(f: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("heat evolution needs t ≥ 0, got {t}")));
    }
    let mut out = f.clone();
    out.apply_multiplier(|_, r| (-t * r * r).exp());
    Ok(out)
}

pub fn evolve(f: &SpectralField, t: f64, kind: Propagator) -> Result<SpectralField> {
    match kind {
        Propagator::Schrodinger => Ok(schrodinger_evolve(f, t)),
        Propagator::Heat => heat_evolve(f, t),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Origin {
    pub propagator: Propagator,
    pub seed: u64,
}

/// Fields on a uniform time grid `t0 + j·dt`.
#[derive(Clone, Debug)]
pub struct TimeSeriesField {
    t0: f64,
    dt: f64,
    fields: Vec<SpectralField>,
    pub origin: Origin,
}

impl TimeSeriesField {
    pub fn new(t0: f64, dt: f64, fields: Vec<SpectralField>, origin: Origin) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Parameter("empty time series".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("time step {dt} must be positive")));
        }
        Ok(Self {
            t0,
            dt,
            fields,
            origin,
        })
    }

    /// Samples `kind` applied to `f` at `steps + 1` times over `[t0, t0 + len]`.
    pub fn evolve(f: &SpectralField, kind: Propagator, t0: f64, len: f64, steps: usize, seed: u64) -> Result<Self> {
        let steps = steps.max(1);
        let dt = len / steps as f64;
        let fields = (0..=steps)
            .map(|j| evolve(f, t0 + j as f64 * dt, kind))
            .collect::<Result<Vec<_>>>()?;
        Self::new(t0, dt, fields, Origin { propagator: kind, seed })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.fields.len()).map(|j| self.t0 + j as f64 * self.dt).collect()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeExponent {
    Two,
    Infinity,
}

/// Trapezoid weights; a single sample carries weight `dt`.
fn time_weights(len: usize, dt: f64) -> Vec<f64> {
    if len == 1 {
        return vec![dt];
    }
    let mut w = vec![dt; len];
    w[0] *= 0.5;
    w[len - 1] *= 0.5;
    w
}

/// `L^q_t` of the spatial norm `spec`. A one-sample series has
/// `‖·‖_{L²_t} = √dt · ‖·‖`.
pub fn mixed_norm(series: &TimeSeriesField, q: TimeExponent, spec: NormSpec) -> Result<f64> {
    let values = series
        .fields
        .iter()
        .map(|f| norm(f, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(match q {
        TimeExponent::Infinity => values.iter().copied().fold(0.0, f64::max),
        TimeExponent::Two => time_weights(values.len(), series.dt)
            .iter()
            .zip(&values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt(),
    })
}

/// `(Σ_λ λ^{2s} ‖P_λ ·‖²_{L²_{t,x}})^{1/2}` over the given scales.
pub fn x_norm(series: &TimeSeriesField, lambdas: &[f64], s: f64) -> Result<f64> {
    let weights = time_weights(series.len(), series.dt);
    let mut total = 0.0;
    for &lam in lambdas {
        let mut piece = 0.0;
        for (w, f) in weights.iter().zip(&series.fields) {
            let p = norm(&project_dyadic(f, lam)?, NormSpec::L2)?;
            piece += w * p * p;
        }
        total += lam.powf(2.0 * s) * piece;
    }
    Ok(total.sqrt())
}

/// Space-time tile `I × B_R(center)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Cylinder {
    pub t0: f64,
    pub len: f64,
    pub center: [f64; 3],
    pub radius: f64,
    pub time_steps: usize,
    pub resolved: bool,
}

impl Cylinder {
    /// `|I| = λ^{-3/2+δ}`, `R = λ^{-1/2}`, time step at most `λ^{-2}/4`.
    pub fn new(lambda: f64, delta: Rational64, t0: f64, center: [f64; 3]) -> Self {
        let len = lambda.powf(-1.5 + to_f64(delta));
        let time_steps = (4.0 * len * lambda * lambda).ceil() as usize;
        Self::with_steps(lambda, len, t0, center, time_steps)
    }

    pub fn with_steps(lambda: f64, len: f64, t0: f64, center: [f64; 3], time_steps: usize) -> Self {
        let time_steps = time_steps.max(1);
        Self {
            t0,
            len,
            center,
            radius: lambda.powf(-0.5),
            time_steps,
            resolved: len / time_steps as f64 <= 0.25 / (lambda * lambda) * (1.0 + 1e-12),
        }
    }
}

/// Smallest grid whose spacing puts four cells inside `radius`.
pub fn min_grid_for_radius(radius: f64) -> usize {
    next_pow2_above(4.0 * 2.0 * PI / radius - 1e-9)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LocalL4 {
    pub l4: f64,
    pub l2: f64,
    pub ratio: f64,
    pub normalized: f64,
    pub degenerate: bool,
}

/// Evaluates `kind` applied to `f` on the grid points of a ball at each
/// time sample by a separable partial DFT over the band box, then
/// integrates `|·|⁴` over the tile.
pub fn local_l4_field(f: &SpectralField, lambda: f64, delta: Rational64, cyl: &Cylinder, kind: Propagator) -> Result<LocalL4> {
    let grid = f.grid();
    let h = grid.spacing();
    if cyl.radius < 4.0 * h {
        return Err(Error::Resolution(format!(
            "tile radius {:.4} spans fewer than 4 cells of the n={} grid; minimal grid is n={}",
            cyl.radius,
            grid.n(),
            min_grid_for_radius(cyl.radius)
        )));
    }
    if !cyl.resolved {
        return Err(Error::Resolution(format!(
            "time step {:.3e} exceeds λ^-2/4 = {:.3e}; need at least {} steps",
            cyl.len / cyl.time_steps as f64,
            0.25 / (lambda * lambda),
            (4.0 * cyl.len * lambda * lambda).ceil()
        )));
    }
    let l2 = norm(f, NormSpec::L2)?;
    if l2 == 0.0 {
        return Ok(LocalL4 {
            l4: 0.0,
            l2: 0.0,
            ratio: 0.0,
            normalized: 0.0,
            degenerate: true,
        });
    }
    // band box
    let kmax = f.support_radius().floor() as i64;
    let side = (2 * kmax + 1) as usize;
    let nc = f.components();
    let mut box_coeffs = vec![Complex64::default(); nc * side * side * side];
    for idx in 0..grid.len() {
        let k = grid.wavevector(idx);
        if k.iter().any(|x| x.abs() > kmax) {
            continue;
        }
        let b = (((k[0] + kmax) as usize * side) + (k[1] + kmax) as usize) * side + (k[2] + kmax) as usize;
        for c in 0..nc {
            box_coeffs[c * side.pow(3) + b] = f.component(c)[idx];
        }
    }
    let row_live: Vec<bool> = (0..side * side)
        .map(|r| {
            (0..nc).any(|c| {
                box_coeffs[c * side.pow(3) + r * side..c * side.pow(3) + (r + 1) * side]
                    .iter()
                    .any(|z| *z != Complex64::default())
            })
        })
        .collect();
    // sample points per axis within the ball's bounding box
    let axis_points: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            let lo = ((cyl.center[a] - cyl.radius) / h).ceil() as i64;
            let hi = ((cyl.center[a] + cyl.radius) / h).floor() as i64;
            (lo..=hi).map(|j| j as f64 * h).collect()
        })
        .collect();
    let (s0, s1, s2) = (axis_points[0].len(), axis_points[1].len(), axis_points[2].len());
    let inside: Vec<bool> = (0..s0 * s1 * s2)
        .map(|p| {
            let (i0, i1, i2) = (p / (s1 * s2), (p / s2) % s1, p % s2);
            let d = [
                axis_points[0][i0] - cyl.center[0],
                axis_points[1][i1] - cyl.center[1],
                axis_points[2][i2] - cyl.center[2],
            ];
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= cyl.radius * cyl.radius
        })
        .collect();
    let h3 = h * h * h;
    let scale = (2.0 * PI).powf(-1.5);
    let weights = time_weights(cyl.time_steps + 1, cyl.len / cyl.time_steps as f64);
    let dt = cyl.len / cyl.time_steps as f64;
    let mut total = 0.0;
    let mut stage2 = vec![Complex64::default(); side * s2];
    let mut stage1 = vec![Complex64::default(); side * s1 * s2];
    let mut values = vec![0.0f64; s0 * s1 * s2];
    for (step, w) in weights.iter().enumerate() {
        let t = cyl.t0 + step as f64 * dt;
        // per-axis factors e^{ikx} · m_t(k) with m_t(k) = Π_a m_t(k_a)
        let table = |pts: &[f64]| -> Vec<Complex64> {
            let mut out = Vec::with_capacity(pts.len() * side);
            for &x in pts {
                for kk in -kmax..=kmax {
                    let k = kk as f64;
                    let temporal = match kind {
                        Propagator::Schrodinger => Complex64::from_polar(1.0, -t * k * k),
                        Propagator::Heat => Complex64::new((-t * k * k).exp(), 0.0),
                    };
                    out.push(Complex64::from_polar(1.0, k * x) * temporal);
                }
            }
            out
        };
        let (e0, e1, e2) = (table(&axis_points[0]), table(&axis_points[1]), table(&axis_points[2]));
        values.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..nc {
            let cube = &box_coeffs[c * side.pow(3)..(c + 1) * side.pow(3)];
            // contract k2: [k0][k1][x2]
            let mut rows = vec![Complex64::default(); side * side * s2];
            for r in 0..side * side {
                if !row_live[r] {
                    continue;
                }
                let line = &cube[r * side..(r + 1) * side];
                for x2 in 0..s2 {
                    let e = &e2[x2 * side..(x2 + 1) * side];
                    rows[r * s2 + x2] = line.iter().zip(e).map(|(a, b)| a * b).sum();
                }
            }
            // contract k1: [k0][x1][x2]
            for k0 in 0..side {
                for x1 in 0..s1 {
                    let e = &e1[x1 * side..(x1 + 1) * side];
                    stage2.iter_mut().take(s2).for_each(|z| *z = Complex64::default());
                    for (k1, ev) in e.iter().enumerate() {
                        let r = k0 * side + k1;
                        if !row_live[r] {
                            continue;
                        }
                        for x2 in 0..s2 {
                            stage2[x2] += rows[r * s2 + x2] * ev;
                        }
                    }
                    stage1[(k0 * s1 + x1) * s2..(k0 * s1 + x1 + 1) * s2].copy_from_slice(&stage2[..s2]);
                }
            }
            // contract k0: [x0][x1][x2]
            for x0 in 0..s0 {
                let e = &e0[x0 * side..(x0 + 1) * side];
                for p in 0..s1 * s2 {
                    let mut z = Complex64::default();
                    for (k0, ev) in e.iter().enumerate() {
                        z += stage1[k0 * s1 * s2 + p] * ev;
                    }
                    values[x0 * s1 * s2 + p] += (z * scale).norm_sqr();
                }
            }
        }
        let slab: f64 = values
            .iter()
            .zip(&inside)
            .filter(|(_, &i)| i)
            .map(|(v, _)| v * v)
            .sum();
        total += w * slab * h3;
    }
    let l4 = total.powf(0.25);
    let ratio = l4 / l2;
    Ok(LocalL4 {
        l4,
        l2,
        ratio,
        normalized: ratio / lambda.powf(-to_f64(delta) / 4.0),
        degenerate: false,
    })
}

/// [`local_l4_field`] on a seeded scalar band field with unit `L²` norm.
pub fn local_l4_ratio(lambda: u64, delta: Rational64, grid: Grid3, seed: u64, cyl: &Cylinder, kind: Propagator) -> Result<LocalL4> {
    let f = crate::spectral::synth_band_scalar(grid, lambda, seed, NormSpec::L2)?;
    local_l4_field(&f, lambda as f64, delta, cyl, kind)
}

/// Grid for the local `L⁴` experiment: `n ≥ 8λ` and four cells per radius.
pub fn local_l4_grid(lambda: f64) -> Result<Grid3> {
    let n = next_pow2_above(8.0 * lambda - 1e-9).max(min_grid_for_radius(lambda.powf(-0.5)));
    make_grid(n)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Decoupling {
    pub lhs: f64,
    pub rhs_l2: f64,
    pub ratio: f64,
    pub cap_count: usize,
    /// `λ^{-2/3}`, for trend inspection only.
    pub reference: f64,
}

/// `‖Σ_θ B(u_θ, v_{−θ})‖_{L²}` against `(Σ_θ ‖B(u_θ, v_{−θ})‖²_{L²})^{1/2}`
/// over the caps active around `direction`.
pub fn decoupling_ratio(
    u: &SpectralField,
    v: &SpectralField,
    lambda: f64,
    delta: Rational64,
    caps: &CapFamily,
    direction: [f64; 3],
) -> Result<Decoupling> {
    if caps.lambda() != lambda {
        return Err(Error::Parameter(format!(
            "cap family built for λ = {} used at λ = {lambda}",
            caps.lambda()
        )));
    }
    let mu = lambda.powf(1.0 - to_f64(delta));
    let active = caps.active_caps(delta, direction);
    let mut sum = SpectralField::zeros(u.grid(), 3);
    let mut sq = 0.0;
    for &cap in &active {
        let a = caps.project(u, cap)?;
        let b = caps.project(v, caps.antipode(cap))?;
        let block = resonant_block(&a, &b, mu)?;
        let l2 = norm(&block.field, NormSpec::L2)?;
        sq += l2 * l2;
        sum.add_assign(&block.field)?;
    }
    let lhs = norm(&sum, NormSpec::L2)?;
    let rhs_l2 = sq.sqrt();
    Ok(Decoupling {
        lhs,
        rhs_l2,
        ratio: if rhs_l2 > 0.0 { lhs / rhs_l2 } else { 0.0 },
        cap_count: active.len(),
        reference: lambda.powf(-2.0 / 3.0),
    })
}

/// Seeded vector field filling every shell up to the Nyquist bound.
pub fn broadband_field(grid: Grid3, seed: u64) -> Result<SpectralField> {
    let mut out = SpectralField::zeros(grid, 3);
    let mut lambda = 1u64;
    while 2 * lambda as i64 <= grid.nyquist() {
        let piece = synth_band_field(grid, lambda, seed.wrapping_add(lambda), false, NormSpec::L2)?;
        out.add_assign(&piece)?;
        lambda *= 2;
    }
    Ok(out)
}

/// `max ‖P_{<μ}ℙf − ℙP_{<μ}f‖ / ‖f‖` over seeded broadband fields.
pub fn commutator_zero_check(mu: f64, trials: usize, grid: Grid3, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let f = broadband_field(grid, seed.wrapping_mul(1_000_003).wrapping_add(trial as u64))?;
        let a = project_low(&leray_project(&f)?, mu)?;
        let b = leray_project(&project_low(&f, mu)?)?;
        let r = norm(&a.sub(&b)?, NormSpec::L2)? / norm(&f, NormSpec::L2)?;
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `a(x) = Π_i (1 + cos x_i) / 2`.
pub fn bump_window(grid: Grid3) -> Result<SpectralField> {
    let values = (0..grid.len())
        .map(|idx| {
            let x = grid.point(idx);
            Complex64::new(x.iter().map(|xi| 0.5 * (1.0 + xi.cos())).product(), 0.0)
        })
        .collect();
    SpectralField::from_physical(grid, vec![values], true)
}

/// `‖∇a‖_∞` of [`bump_window`].
pub const BUMP_GRADIENT_SUP: f64 = 0.5;

/// Real-valued multiplier as physical samples on `grid`.
fn multiplier_values(a: &SpectralField, grid: Grid3) -> Result<Vec<f64>> {
    if a.components() != 1 {
        return Err(Error::Parameter("window must be a scalar field".into()));
    }
    if a.grid() == grid {
        return Ok(a.to_physical().remove(0).iter().map(|z| z.re).collect());
    }
    // rounding noise in modes the target grid cannot hold is discarded
    let src = a.grid();
    let scale = a.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for idx in 0..src.len() {
        let z = a.coeffs()[idx];
        match grid.index_of(src.wavevector(idx)) {
            Some(j) => coeffs[j] = z,
            None if z.norm() > 1e-12 * scale => {
                return Err(Error::Geometry(format!(
                    "window mode {:?} does not fit on the n={} grid",
                    src.wavevector(idx),
                    grid.n()
                )))
            }
            None => {}
        }
    }
    let a = SpectralField::from_coeffs(grid, 1, coeffs, true)?;
    Ok(a.to_physical().remove(0).iter().map(|z| z.re).collect())
}

/// `[P_{<μ}, M_a]` on raw coefficient buffers of one grid.
struct Commutator {
    fft: Fft3,
    symbol: Vec<f64>,
    a: Vec<f64>,
    norm: f64,
}

impl Commutator {
    fn new(grid: Grid3, mu: f64, a: Vec<f64>) -> Self {
        let symbol = (0..grid.len()).map(|i| low_pass_symbol(grid.kmag(i), mu)).collect();
        Self {
            fft: Fft3::new(grid.n()),
            symbol,
            a,
            norm: 1.0 / grid.len() as f64,
        }
    }

    fn multiply(&self, coeffs: &mut [Complex64]) {
        self.fft.inverse(coeffs);
        for (z, a) in coeffs.iter_mut().zip(&self.a) {
            *z *= a * self.norm;
        }
        self.fft.forward(coeffs);
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut first = x.to_vec();
        self.multiply(&mut first);
        let mut second: Vec<Complex64> = x.iter().zip(&self.symbol).map(|(z, s)| z * s).collect();
        self.multiply(&mut second);
        first
            .iter()
            .zip(&self.symbol)
            .zip(&second)
            .map(|((p, s), q)| p * s - q)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct OperatorNorm {
    pub norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn l2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Top singular value of `[P_{<μ}, M_a]` on `L²` of `grid` by power
/// iteration on `K*K = −K²` (real `a`).
pub fn localized_commutator_norm(mu: f64, a: &SpectralField, grid: Grid3, iters: usize, seed: u64) -> Result<OperatorNorm> {
    if iters < 20 {
        return Err(Error::Parameter(format!("power iteration needs at least 20 steps, got {iters}")));
    }
    if low_pass_support(mu) > grid.nyquist() as f64 {
        return Err(Error::Geometry(format!(
            "low-pass at μ = {mu} does not fit on the n={} grid",
            grid.n()
        )));
    }
    let k = Commutator::new(grid, mu, multiplier_values(a, grid)?);
    let mut rng = RngState::new(seed, 0);
    let mut x: Vec<Complex64> = (0..grid.len()).map(|_| Complex64::new(rng.normal(), 0.0)).collect();
    forward_to_coeffs(&k.fft, &mut x);
    let n0 = l2(&x);
    x.iter_mut().for_each(|z| *z /= n0);
    let mut history: Vec<f64> = Vec::with_capacity(iters);
    for it in 0..iters {
        let y = k.apply(&k.apply(&x));
        let growth = l2(&y);
        if growth == 0.0 {
            return Ok(OperatorNorm {
                norm: 0.0,
                converged: true,
                iterations: it + 1,
            });
        }
        history.push(growth.sqrt());
        x = y.into_iter().map(|z| -z / growth).collect();
        let h = history.len();
        if h >= 4 && (1..=3).all(|d| (history[h - d] - history[h - d - 1]).abs() < 1e-6 * history[h - d]) {
            return Ok(OperatorNorm {
                norm: history[h - 1],
                converged: true,
                iterations: h,
            });
        }
    }
    Ok(OperatorNorm {
        norm: *history.last().unwrap(),
        converged: false,
        iterations: iters,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ChainedCommutator {
    pub measured: f64,
    pub reference: f64,
    pub ratio: f64,
}

/// `‖[P_{<N^{1-δ}}, M_a] ℙ∇·(u_N ⊗ v_N)‖_{Ḣ^{-1}}` against
/// `N^{-3+3δ} ‖u_N‖_{Ḣ¹} ‖v_N‖_{Ḣ¹}`. The mean of the commutator output
/// is dropped before the `Ḣ^{-1}` norm.
pub fn chained_commutator_bound(
    u: &SpectralField,
    v: &SpectralField,
    n_freq: f64,
    delta: Rational64,
    a: &SpectralField,
) -> Result<ChainedCommutator> {
    let mu = n_freq.powf(1.0 - to_f64(delta));
    let un = project_dyadic(u, n_freq)?;
    let vn = project_dyadic(v, n_freq)?;
    let h1 = NormSpec::sobolev(1, 1);
    let reference = n_freq.powf(-3.0 + 3.0 * to_f64(delta)) * norm(&un, h1)? * norm(&vn, h1)?;
    // the commutator only reads modes within |k_i| ≤ 1 of the low-pass support
    let keep = low_pass_support(mu) + 2.0;
    let work = make_grid(next_pow2_above(un.support_radius() + vn.support_radius() + keep))?;
    let (un, vn) = (un.resample(work)?, vn.resample(work)?);
    let m = work.len();
    let mut g = vec![Complex64::default(); 3 * m];
    for_each_product(&un, &vn, work, keep, |i, j, coeffs| {
        for idx in 0..m {
            if work.kmag(idx) > keep {
                continue;
            }
            let kj = work.wavevector(idx)[j] as f64;
            g[i * m + idx] += Complex64::new(0.0, kj) * coeffs[idx];
        }
    })?;
    let g = leray_project(&SpectralField::from_coeffs(work, 3, g, un.hermitian() && vn.hermitian())?)?;
    let small = make_grid(next_pow2_above(2.0 * (keep + 2.0)).max(16))?;
    let g = g.resample(small)?;
    let k = Commutator::new(small, mu, multiplier_values(a, small)?);
    let ms = small.len();
    let mut out = Vec::with_capacity(3 * ms);
    for c in 0..3 {
        out.extend(k.apply(g.component(c)));
    }
    let out = SpectralField::from_coeffs(small, 3, out, false)?.without_mean();
    let measured = norm(&out, NormSpec::sobolev(-1, 1))?;
    Ok(ChainedCommutator {
        measured,
        reference,
        ratio: if reference > 0.0 { measured / reference } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::build_cap_family;
    use crate::spectral::synth_band_scalar;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn paraproduct_chain_and_support() {
        let g = grid_for(8.0, 5.0).unwrap();
        assert_eq!(g.n(), 64);
        let u = synth_band_field(g, 8, 1, true, NormSpec::sobolev(1, 1)).unwrap();
        let v = synth_band_field(g, 8, 2, true, NormSpec::sobolev(1, 1)).unwrap();
        let p = diagonal_paraproduct(&u, &v, 8.0, r(1, 2)).unwrap();
        assert!(p.chain_holds() && p.support_holds());
        assert_eq!(p.field.mean_magnitude(), 0.0);
        assert!(p.hminus1 > 0.0 && p.hminus1 <= 8f64.powf(-0.5));
    }

    #[test]
    fn paraproduct_of_off_band_input_vanishes() {
        let g = make_grid(64).unwrap();
        let u = synth_band_field(g, 2, 1, true, NormSpec::L2).unwrap();
        let v = synth_band_field(g, 8, 2, true, NormSpec::L2).unwrap();
        let p = diagonal_paraproduct(&u, &v, 8.0, r(1, 2)).unwrap();
        assert_eq!(p.hminus1, 0.0);
    }

    #[test]
    fn propagators() {
        let g = make_grid(32).unwrap();
        let f = synth_band_scalar(g, 4, 3, NormSpec::L2).unwrap();
        assert_eq!(schrodinger_evolve(&f, 0.0).coeffs(), f.coeffs());
        let s = schrodinger_evolve(&f, 0.37);
        assert!((norm(&s, NormSpec::L2).unwrap() - 1.0).abs() < 1e-12);
        assert!(norm(&heat_evolve(&f, 0.01).unwrap(), NormSpec::L2).unwrap() < 1.0);
        assert!(heat_evolve(&f, -1.0).is_err());
    }

    #[test]
    fn mixed_norm_conventions() {
        let g = make_grid(16).unwrap();
        let f = synth_band_scalar(g, 2, 3, NormSpec::L2).unwrap();
        let p = Origin {
            propagator: Propagator::Schrodinger,
            seed: 3,
        };
        let one = TimeSeriesField::new(0.0, 0.25, vec![f.clone()], p).unwrap();
        assert!((mixed_norm(&one, TimeExponent::Two, NormSpec::L2).unwrap() - 0.5).abs() < 1e-12);
        assert!((mixed_norm(&one, TimeExponent::Infinity, NormSpec::L2).unwrap() - 1.0).abs() < 1e-12);
        let flat = TimeSeriesField::new(0.0, 0.5, vec![f.clone(); 5], p).unwrap();
        assert!((mixed_norm(&flat, TimeExponent::Two, NormSpec::L2).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(TimeSeriesField::new(0.0, 0.5, vec![], p).is_err());
    }

    #[test]
    fn cylinder_shape() {
        let c = Cylinder::new(16.0, r(1, 2), 0.0, [0.0; 3]);
        assert!((c.len - 16f64.powf(-1.0)).abs() < 1e-12);
        assert!((c.radius - 0.25).abs() < 1e-12);
        assert!(c.resolved && c.time_steps >= 4 * 16);
        assert!(!Cylinder::with_steps(16.0, c.len, 0.0, [0.0; 3], 3).resolved);
    }

    #[test]
    fn local_l4_refuses_coarse_grid() {
        let g = make_grid(64).unwrap();
        let c = Cylinder::new(8.0, r(1, 2), 0.0, [0.0; 3]);
        match local_l4_ratio(8, r(1, 2), g, 1, &c, Propagator::Schrodinger) {
            Err(Error::Resolution(msg)) => assert!(msg.contains("n=128"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn local_l4_matches_direct_sum() {
        // oracle: full FFT per time sample, then the same quadrature
        let g = make_grid(128).unwrap();
        let lam = 4.0;
        let f = synth_band_scalar(g, 4, 9, NormSpec::L2).unwrap();
        let c = Cylinder::with_steps(lam, 0.05, 0.01, [0.3, -0.2, 0.1], 4);
        let got = local_l4_field(&f, lam, r(1, 2), &c, Propagator::Schrodinger).unwrap();
        let h = g.spacing();
        let dt = c.len / 4.0;
        let mut total = 0.0;
        for s in 0..=4 {
            let w = if s == 0 || s == 4 { 0.5 * dt } else { dt };
            let phys = schrodinger_evolve(&f, c.t0 + s as f64 * dt).to_physical().remove(0);
            for idx in 0..g.len() {
                let x = g.point(idx);
                // nearest periodic image of the centre
                let d: f64 = (0..3)
                    .map(|a| {
                        let mut y = x[a] - c.center[a];
                        y -= (y / (2.0 * PI)).round() * 2.0 * PI;
                        y * y
                    })
                    .sum();
                if d <= c.radius * c.radius {
                    total += w * phys[idx].norm_sqr().powi(2) * h * h * h;
                }
            }
        }
        let want = total.powf(0.25);
        assert!((got.l4 - want).abs() < 1e-10 * want, "{} vs {}", got.l4, want);
    }

    #[test]
    fn commutators() {
        let g = make_grid(32).unwrap();
        assert!(commutator_zero_check(4.0, 2, g, 1).unwrap() < 1e-12);
        let one = SpectralField::from_physical(g, vec![vec![Complex64::new(1.0, 0.0); g.len()]], true).unwrap();
        let n = localized_commutator_norm(4.0, &one, g, 20, 1).unwrap();
        assert!(n.norm < 1e-12);
        let a = bump_window(g).unwrap();
        let n1 = localized_commutator_norm(4.0, &a, g, 30, 1).unwrap().norm;
        let n2 = localized_commutator_norm(4.0, &a.clone().scaled(2.0), g, 30, 1).unwrap().norm;
        assert!((n2 / n1 - 2.0).abs() < 1e-6);
        assert!(localized_commutator_norm(4.0, &a, g, 10, 1).is_err());
    }

    #[test]
    fn chained_commutator_with_constant_window_vanishes() {
        let g = make_grid(64).unwrap();
        let u = synth_band_field(g, 8, 1, true, NormSpec::sobolev(1, 1)).unwrap();
        let v = synth_band_field(g, 8, 2, true, NormSpec::sobolev(1, 1)).unwrap();
        let one = SpectralField::from_physical(g, vec![vec![Complex64::new(1.0, 0.0); g.len()]], true).unwrap();
        let c = chained_commutator_bound(&u, &v, 8.0, r(1, 2), &one).unwrap();
        assert!(c.measured < 1e-12 && c.reference > 0.0);
        let a = bump_window(g).unwrap();
        let c = chained_commutator_bound(&u, &v, 8.0, r(1, 2), &a).unwrap();
        assert!(c.measured > 0.0);
    }

    #[test]
    fn decoupling_single_pair() {
        let g = make_grid(64).unwrap();
        let u = synth_band_field(g, 8, 1, true, NormSpec::sobolev(1, 1)).unwrap();
        let v = synth_band_field(g, 8, 2, true, NormSpec::sobolev(1, 1)).unwrap();
        let caps = build_cap_family(8.0, r(2, 3)).unwrap();
        let c0 = caps.centers()[0];
        let d = decoupling_ratio(&u, &v, 8.0, r(19, 20), &caps, [-c0[0], -c0[1], -c0[2]]).unwrap();
        assert_eq!(d.cap_count, 1);
        assert!((d.ratio - 1.0).abs() < 1e-12);
        let d = decoupling_ratio(&u, &v, 8.0, r(1, 4), &caps, [0.0, 0.0, 1.0]).unwrap();
        assert!(d.ratio <= (d.cap_count as f64).sqrt() * (1.0 + 1e-12));
        assert!(decoupling_ratio(&u, &v, 16.0, r(1, 2), &caps, [0.0, 0.0, 1.0]).is_err());
    }
}
