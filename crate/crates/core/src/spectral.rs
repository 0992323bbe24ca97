//! Band-limited fields on the periodic box `[0, 2π)^3`.
//!
//! Coefficients follow the unitary convention
//!
//! ```text
//! f(x) = (2π)^{-3/2} Σ_k f̂(k) e^{ik·x},   ‖f‖²_{L²} = Σ_k |f̂(k)|²
//! ```
//!
//! so every norm is a plain coefficient sum and physical-space quadrature
//! (cell volume `(2π/n)^3`) reproduces it exactly for band-limited data.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::rng::KeyedNormal;

/// Side length of the periodic box.
pub const PERIOD: f64 = 2.0 * PI;

/// Uniform periodic grid with `n` points per dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid3 {
    n: usize,
}

/// Builds a grid; `n` must be a power of two in `[8, 1024]`.
pub fn make_grid(n: usize) -> Result<Grid3> {
    if !n.is_power_of_two() || !(8..=1024).contains(&n) {
        return Err(Error::Config(format!(
            "grid size {n} must be a power of two in [8, 1024]"
        )));
    }
    Ok(Grid3 { n })
}

impl Grid3 {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of points (and of frequency triples), `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest representable frequency component, `n/2 - 1`.
    pub fn nyquist(&self) -> i64 {
        self.n as i64 / 2 - 1
    }

    /// Grid spacing in physical space.
    pub fn spacing(&self) -> f64 {
        PERIOD / self.n as f64
    }

    /// Signed frequency of array position `i` along one axis.
    #[inline]
    pub fn freq(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        [
            self.freq(idx / (n * n)),
            self.freq((idx / n) % n),
            self.freq(idx % n),
        ]
    }

    /// Array index of wavevector `k`, if it lies in `[-n/2, n/2-1]^3`.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut idx = 0usize;
        for &c in &k {
            if c < -n / 2 || c > n / 2 - 1 {
                return None;
            }
            idx = idx * self.n + c.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    #[inline]
    pub fn kmag(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let h = self.spacing();
        [
            (idx / (n * n)) as f64 * h,
            ((idx / n) % n) as f64 * h,
            (idx % n) as f64 * h,
        ]
    }
}

/// Which norm to take. Sobolev orders are exact rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormSpec {
    SobolevHomog(Rational64),
    L2,
    L4,
}

impl NormSpec {
    pub fn sobolev(num: i64, den: i64) -> Self {
        NormSpec::SobolevHomog(Rational64::new(num, den))
    }
}

/// Spectral coefficients of a scalar, vector or rank-2 tensor field.
///
/// Storage is component-major: component `c` occupies
/// `coeffs[c * n^3 .. (c + 1) * n^3]`; tensor component `(i, j)` is `3 i + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid3,
    components: usize,
    coeffs: Vec<Complex64>,
    hermitian: bool,
}

fn physical_scale() -> f64 {
    (2.0 * PI).powf(-1.5)
}

impl SpectralField {
    pub fn zeros(grid: Grid3, components: usize) -> Self {
        assert!(matches!(components, 1 | 3 | 9), "components must be 1, 3 or 9");
        Self {
            grid,
            components,
            coeffs: vec![Complex64::default(); components * grid.len()],
            hermitian: true,
        }
    }

    pub fn from_coeffs(grid: Grid3, components: usize, coeffs: Vec<Complex64>, hermitian: bool) -> Result<Self> {
        if !matches!(components, 1 | 3 | 9) || coeffs.len() != components * grid.len() {
            return Err(Error::Parameter(format!(
                "{} coefficients do not describe {components} components on an n={} grid",
                coeffs.len(),
                grid.n()
            )));
        }
        Ok(Self {
            grid,
            components,
            coeffs,
            hermitian,
        })
    }

    /// Field with a single nonzero wavevector `k` carrying `amplitude[c]` in
    /// component `c`. Not Hermitian unless `k = 0`.
    pub fn single_mode(grid: Grid3, k: [i64; 3], amplitude: &[Complex64]) -> Result<Self> {
        let idx = grid
            .index_of(k)
            .ok_or_else(|| Error::Geometry(format!("mode {k:?} is outside the n={} grid", grid.n())))?;
        let mut f = Self::zeros(grid, amplitude.len());
        for (c, &a) in amplitude.iter().enumerate() {
            f.component_mut(c)[idx] = a;
        }
        f.hermitian = k == [0, 0, 0] && amplitude.iter().all(|a| a.im == 0.0);
        Ok(f)
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let m = self.grid.len();
        &self.coeffs[c * m..(c + 1) * m]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let m = self.grid.len();
        &mut self.coeffs[c * m..(c + 1) * m]
    }

    pub fn coeff(&self, c: usize, k: [i64; 3]) -> Complex64 {
        self.grid
            .index_of(k)
            .map(|i| self.component(c)[i])
            .unwrap_or_default()
    }

    /// Multiplies every coefficient at wavevector `k` by `symbol(k, |k|)`.
    /// A real, even symbol keeps Hermitian symmetry.
    pub fn apply_multiplier(&mut self, symbol: impl Fn([i64; 3], f64) -> f64) {
        let m = self.grid.len();
        for idx in 0..m {
            let k = self.grid.wavevector(idx);
            let s = symbol(k, self.grid.kmag(idx));
            for c in 0..self.components {
                self.coeffs[c * m + idx] *= s;
            }
        }
    }

    /// Complex multiplier variant; Hermitian status is dropped unless the
    /// caller restores it.
    pub fn apply_complex_multiplier(&mut self, symbol: impl Fn([i64; 3], f64) -> Complex64, keeps_hermitian: bool) {
        let m = self.grid.len();
        for idx in 0..m {
            let k = self.grid.wavevector(idx);
            let s = symbol(k, self.grid.kmag(idx));
            for c in 0..self.components {
                self.coeffs[c * m + idx] *= s;
            }
        }
        self.hermitian &= keeps_hermitian;
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for z in &mut self.coeffs {
            *z *= factor;
        }
        self
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self {
            grid: self.grid,
            components: self.components,
            coeffs,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        self.hermitian &= other.hermitian;
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::Parameter("fields live on different grids or shapes".into()));
        }
        Ok(())
    }

    /// Same field with the `k = 0` coefficient removed.
    pub fn without_mean(mut self) -> Self {
        for c in 0..self.components {
            self.component_mut(c)[0] = Complex64::default();
        }
        self
    }

    pub fn mean_magnitude(&self) -> f64 {
        (0..self.components)
            .map(|c| self.component(c)[0].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `|k|` carrying a nonzero coefficient (0 for the zero field).
    pub fn support_radius(&self) -> f64 {
        let m = self.grid.len();
        (0..m)
            .filter(|&idx| (0..self.components).any(|c| self.coeffs[c * m + idx] != Complex64::default()))
            .map(|idx| self.grid.kmag(idx))
            .fold(0.0, f64::max)
    }

    /// `max_k |f̂(-k) - conj f̂(k)|` relative to the largest coefficient.
    pub fn hermitian_residual(&self) -> f64 {
        let g = self.grid;
        let m = g.len();
        let scale = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for idx in 0..m {
            let k = g.wavevector(idx);
            let Some(j) = g.index_of([-k[0], -k[1], -k[2]]) else {
                // -k wraps past the Nyquist row; such modes must be empty
                for c in 0..self.components {
                    worst = worst.max(self.coeffs[c * m + idx].norm());
                }
                continue;
            };
            for c in 0..self.components {
                worst = worst.max((self.coeffs[c * m + j] - self.coeffs[c * m + idx].conj()).norm());
            }
        }
        worst / scale
    }

    /// Physical values per component, `(2π)^{-3/2} Σ f̂ e^{ik·x}`.
    pub fn to_physical(&self) -> Vec<Vec<Complex64>> {
        let fft = Fft3::new(self.grid.n());
        (0..self.components).map(|c| self.component_physical(c, &fft)).collect()
    }

    pub(crate) fn component_physical(&self, c: usize, fft: &Fft3) -> Vec<Complex64> {
        let mut buf = self.component(c).to_vec();
        fft.inverse(&mut buf);
        let s = physical_scale();
        for z in &mut buf {
            *z *= s;
        }
        buf
    }

    /// Inverse of [`to_physical`](Self::to_physical).
    pub fn from_physical(grid: Grid3, values: Vec<Vec<Complex64>>, hermitian: bool) -> Result<Self> {
        let components = values.len();
        let fft = Fft3::new(grid.n());
        let mut coeffs = Vec::with_capacity(components * grid.len());
        for mut v in values {
            if v.len() != grid.len() {
                return Err(Error::Parameter("physical buffer does not match grid".into()));
            }
            forward_to_coeffs(&fft, &mut v);
            coeffs.extend(v);
        }
        Self::from_coeffs(grid, components, coeffs, hermitian)
    }

    /// Moves the coefficients to another grid: zero-pads when growing,
    /// truncates when shrinking. Truncation of a mode that is nonzero is a
    /// geometry error.
    pub fn resample(&self, grid: Grid3) -> Result<Self> {
        let mut out = Self::zeros(grid, self.components);
        out.hermitian = self.hermitian;
        let m = self.grid.len();
        let mo = grid.len();
        for idx in 0..m {
            let k = self.grid.wavevector(idx);
            match grid.index_of(k) {
                Some(j) => {
                    for c in 0..self.components {
                        out.coeffs[c * mo + j] = self.coeffs[c * m + idx];
                    }
                }
                None => {
                    if (0..self.components).any(|c| self.coeffs[c * m + idx] != Complex64::default()) {
                        return Err(Error::Geometry(format!(
                            "mode {k:?} does not fit on an n={} grid",
                            grid.n()
                        )));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// In-place forward transform with the unitary coefficient scaling.
pub(crate) fn forward_to_coeffs(fft: &Fft3, buf: &mut [Complex64]) {
    let n = (buf.len() as f64).cbrt().round();
    fft.forward(buf);
    let s = (2.0 * PI).powf(1.5) / (n * n * n);
    for z in buf.iter_mut() {
        *z *= s;
    }
}

fn check_band(grid: Grid3, lambda: u64) -> Result<()> {
    if lambda == 0 || !lambda.is_power_of_two() {
        return Err(Error::Config(format!("band scale {lambda} must be a power of two")));
    }
    if 2 * lambda as i64 > grid.nyquist() {
        return Err(Error::Geometry(format!(
            "annulus up to 2λ = {} exceeds the Nyquist bound {} of the n={} grid",
            2 * lambda,
            grid.nyquist(),
            grid.n()
        )));
    }
    Ok(())
}

/// Canonical representative of the pair `{k, -k}` and whether `k` is it.
fn canonical(k: [i64; 3]) -> ([i64; 3], bool) {
    let neg = [-k[0], -k[1], -k[2]];
    if k > neg {
        (k, true)
    } else {
        (neg, false)
    }
}

/// Stream key of `(k, component)`, independent of the grid size.
fn mode_key(k: [i64; 3], c: usize) -> u64 {
    const OFF: i64 = 1 << 19;
    let enc = |x: i64| (x + OFF) as u64 & 0xFFFFF;
    (enc(k[0]) << 44) | (enc(k[1]) << 24) | (enc(k[2]) << 4) | c as u64
}

/// Random band field with i.i.d. complex Gaussian coefficients on the open
/// annulus `λ/2 < |k| < 2λ`, Hermitian, optionally Leray-projected, and
/// rescaled to unit `normalize` norm.
pub fn synth_band_field(
    grid: Grid3,
    lambda: u64,
    seed: u64,
    divergence_free: bool,
    normalize: NormSpec,
) -> Result<SpectralField> {
    synth_band(grid, lambda, seed, 3, divergence_free, normalize)
}

/// Scalar counterpart of [`synth_band_field`].
pub fn synth_band_scalar(grid: Grid3, lambda: u64, seed: u64, normalize: NormSpec) -> Result<SpectralField> {
    synth_band(grid, lambda, seed, 1, false, normalize)
}

fn synth_band(
    grid: Grid3,
    lambda: u64,
    seed: u64,
    components: usize,
    divergence_free: bool,
    normalize: NormSpec,
) -> Result<SpectralField> {
    check_band(grid, lambda)?;
    let lo = lambda as f64 / 2.0;
    let hi = 2.0 * lambda as f64;
    let gen = KeyedNormal::new(seed);
    let mut f = SpectralField::zeros(grid, components);
    let m = grid.len();
    for idx in 0..m {
        let r = grid.kmag(idx);
        if r <= lo || r >= hi {
            continue;
        }
        let (rep, is_rep) = canonical(grid.wavevector(idx));
        for c in 0..components {
            let (re, im) = gen.complex_normal(mode_key(rep, c));
            f.coeffs[c * m + idx] = if is_rep {
                Complex64::new(re, im)
            } else {
                Complex64::new(re, -im)
            };
        }
    }
    if divergence_free {
        f = leray_project(&f)?;
    }
    let size = norm(&f, normalize)?;
    if !(size > 0.0) || !size.is_finite() {
        return Err(Error::DegenerateSample(format!(
            "band field (λ={lambda}, seed={seed}) has zero norm"
        )));
    }
    Ok(f.scaled(1.0 / size))
}

/// Leray projection `û(k) ← (Id - k⊗k/|k|²) û(k)`; the mean passes through.
pub fn leray_project(f: &SpectralField) -> Result<SpectralField> {
    if f.components != 3 {
        return Err(Error::Parameter(format!(
            "Leray projection needs a vector field, got {} components",
            f.components
        )));
    }
    let mut out = f.clone();
    let g = f.grid;
    let m = g.len();
    for idx in 1..m {
        let k = g.wavevector(idx);
        let kk = [k[0] as f64, k[1] as f64, k[2] as f64];
        let k2 = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
        let dot = (0..3).map(|c| f.coeffs[c * m + idx] * kk[c]).sum::<Complex64>() / k2;
        for c in 0..3 {
            out.coeffs[c * m + idx] -= dot * kk[c];
        }
    }
    Ok(out)
}

/// Largest `|k·û(k)| / |k|` relative to the largest coefficient.
pub fn divergence_residual(f: &SpectralField) -> f64 {
    let g = f.grid;
    let m = g.len();
    let scale = f.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    (1..m)
        .map(|idx| {
            let k = g.wavevector(idx);
            let d: Complex64 = (0..3).map(|c| f.coeffs[c * m + idx] * k[c] as f64).sum();
            d.norm() / g.kmag(idx)
        })
        .fold(0.0, f64::max)
        / scale
}

/// Norm of `f` in the requested space.
pub fn norm(f: &SpectralField, spec: NormSpec) -> Result<f64> {
    match spec {
        NormSpec::L2 => Ok(sobolev_sum(f, 0.0, true).sqrt()),
        NormSpec::SobolevHomog(s) => {
            let s = s.to_f64().ok_or_else(|| Error::Parameter("Sobolev order overflow".into()))?;
            if s < 0.0 {
                let total = sobolev_sum(f, 0.0, true).sqrt();
                if f.mean_magnitude() > 1e-12 * total.max(f64::MIN_POSITIVE) {
                    return Err(Error::NormDomain(format!(
                        "Ḣ^{s} needs a mean-free field; mean magnitude is {:.3e}",
                        f.mean_magnitude()
                    )));
                }
            }
            Ok(sobolev_sum(f, s, false).sqrt())
        }
        NormSpec::L4 => Ok(physical_lp(f, 4.0)),
    }
}

fn sobolev_sum(f: &SpectralField, s: f64, include_mean: bool) -> f64 {
    let g = f.grid;
    let m = g.len();
    let mut total = 0.0;
    for idx in 0..m {
        if idx == 0 && !include_mean {
            continue;
        }
        let e: f64 = (0..f.components).map(|c| f.coeffs[c * m + idx].norm_sqr()).sum();
        if e == 0.0 {
            continue;
        }
        total += if s == 0.0 { e } else { g.kmag(idx).powf(2.0 * s) * e };
    }
    total
}

/// `(Σ_x |f(x)|^p h^3)^{1/p}` with `|f(x)|` the Euclidean norm over components.
pub fn physical_lp(f: &SpectralField, p: f64) -> f64 {
    let phys = f.to_physical();
    let h3 = f.grid.spacing().powi(3);
    let m = f.grid.len();
    let mut total = 0.0;
    for idx in 0..m {
        let a2: f64 = phys.iter().map(|v| v[idx].norm_sqr()).sum();
        total += a2.powf(p / 2.0);
    }
    (total * h3).powf(1.0 / p)
}

/// Streams every component product `a_i b_j` of two fields through
/// `sink(i, j, coeffs)`, computed in physical space on `product_grid` and
/// transformed back. Inputs are zero-padded when `product_grid` is larger.
///
/// `out_band` is the radius below which the caller reads the output; the
/// alias rule `B_a + B_b + out_band < n` is enforced.
pub fn for_each_product(
    a: &SpectralField,
    b: &SpectralField,
    product_grid: Grid3,
    out_band: f64,
    mut sink: impl FnMut(usize, usize, &[Complex64]),
) -> Result<()> {
    let ba = a.support_radius();
    let bb = b.support_radius();
    check_alias(ba, bb, out_band, product_grid)?;
    let a_pad;
    let a = if a.grid == product_grid {
        a
    } else {
        a_pad = a.resample(product_grid)?;
        &a_pad
    };
    let b_pad;
    let b = if b.grid == product_grid {
        b
    } else {
        b_pad = b.resample(product_grid)?;
        &b_pad
    };
    let fft = Fft3::new(product_grid.n());
    let a_phys: Vec<Vec<Complex64>> = (0..a.components).map(|c| a.component_physical(c, &fft)).collect();
    let mut buf = vec![Complex64::default(); product_grid.len()];
    for j in 0..b.components {
        let bj = b.component_physical(j, &fft);
        for (i, ai) in a_phys.iter().enumerate() {
            for ((o, x), y) in buf.iter_mut().zip(ai).zip(&bj) {
                *o = x * y;
            }
            forward_to_coeffs(&fft, &mut buf);
            sink(i, j, &buf);
        }
    }
    Ok(())
}

/// Enforces `B_a + B_b + out_band < n`, naming the smallest admissible grid.
pub fn check_alias(ba: f64, bb: f64, out_band: f64, grid: Grid3) -> Result<()> {
    let need = ba + bb + out_band;
    if need >= grid.n() as f64 {
        let mut n_min = 8usize;
        while n_min as f64 <= need {
            n_min *= 2;
        }
        return Err(Error::Geometry(format!(
            "alias rule violated: B_a + B_b + μ_out = {need:.3} ≥ n = {}; minimal admissible n is {n_min}",
            grid.n()
        )));
    }
    Ok(())
}

/// Physical-space product of all component pairs. The result has
/// `a.components() * b.components()` components (tensor for two vectors)
/// and is alias-free on `|k| < out_band`.
pub fn pointwise_product(a: &SpectralField, b: &SpectralField, out_band: f64) -> Result<SpectralField> {
    if a.grid != b.grid {
        return Err(Error::Parameter("product factors live on different grids".into()));
    }
    let grid = a.grid;
    let comps = a.components * b.components;
    if !matches!(comps, 1 | 3 | 9) {
        return Err(Error::Parameter(format!("unsupported product shape {comps}")));
    }
    let m = grid.len();
    let mut out = SpectralField::zeros(grid, comps);
    out.hermitian = a.hermitian && b.hermitian;
    let bc = b.components;
    for_each_product(a, b, grid, out_band, |i, j, coeffs| {
        let c = i * bc + j;
        out.coeffs[c * m..(c + 1) * m].copy_from_slice(coeffs);
    })?;
    Ok(out)
}
