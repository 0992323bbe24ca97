//! Littlewood–Paley pieces and smooth angular caps.
//!
//! The radial profile is `χ(r) = β(r) - β(r/2)` with `β` a quintic
//! smooth step rising on `[2/3, 3/4]`; telescoping gives the partition of
//! unity `Σ_j χ(2^{-j} r) = 1` and the plateau `χ ≡ 1` on `[3/4, 4/3]`.
//! The low-pass symbol telescopes the same way: `P_{<μ}` has symbol
//! `1 - β(r / M)` with `M` the smallest power of two `≥ μ`.
//!
//! Caps are bumps on an equiangular cube-sphere grid, normalized so that
//! the *squares* of the symbols sum to one. Energy splitting over caps is
//! then an identity rather than an almost-orthogonality estimate.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::ledger::AffineExponent;
use crate::spectral::SpectralField;

const BETA_LO: f64 = 2.0 / 3.0;
const BETA_HI: f64 = 3.0 / 4.0;

fn smootherstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Smooth step: 0 below 2/3, 1 above 3/4, C² in between.
pub fn beta(r: f64) -> f64 {
    smootherstep((r - BETA_LO) / (BETA_HI - BETA_LO))
}

/// The dyadic bump χ.
#[derive(Clone, Copy, Debug, Default)]
pub struct DyadicSymbol;

impl DyadicSymbol {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        beta(r) - beta(r / 2.0)
    }
}

/// Low-pass symbol `Σ_{2^j < μ} χ(r / 2^j)`, equal to 1 at `r = 0`.
pub fn low_pass_symbol(r: f64, mu: f64) -> f64 {
    1.0 - beta(r / low_pass_edge(mu))
}

/// Smallest power of two `M ≥ μ`; the low-pass symbol vanishes for
/// `r ≥ 3M/4` and is one for `r ≤ 2M/3`.
pub fn low_pass_edge(mu: f64) -> f64 {
    2f64.powi(mu.log2().ceil() as i32)
}

fn nyquist_check(f: &SpectralField, top: f64, what: &str) -> Result<()> {
    let nyq = f.grid().nyquist() as f64;
    if top > nyq {
        return Err(Error::Geometry(format!(
            "{what} reaches |k| = {top} beyond the Nyquist bound {nyq} of the n={} grid",
            f.grid().n()
        )));
    }
    Ok(())
}

/// `P_λ f`: multiply by `χ(|k|/λ)`.
pub fn project_dyadic(f: &SpectralField, lambda: f64) -> Result<SpectralField> {
    nyquist_check(f, 2.0 * lambda, "dyadic projection")?;
    let chi = DyadicSymbol;
    let mut out = f.clone();
    out.apply_multiplier(|_, r| chi.eval(r / lambda));
    Ok(out)
}

/// `P_{<μ} f`.
pub fn project_low(f: &SpectralField, mu: f64) -> Result<SpectralField> {
    if !(mu > 0.0) {
        return Err(Error::Parameter(format!("low-pass radius {mu} must be positive")));
    }
    nyquist_check(f, 0.75 * low_pass_edge(mu), "low-pass projection")?;
    let mut out = f.clone();
    out.apply_multiplier(|_, r| low_pass_symbol(r, mu));
    Ok(out)
}

/// Smooth angular partition of the sphere at angular scale `λ^{-ρ}`.
#[derive(Clone, Debug)]
pub struct CapFamily {
    lambda: f64,
    rho: Rational64,
    /// Cells per cube-face edge; 0 marks the one-cap family.
    cells: usize,
    centers: Vec<[f64; 3]>,
    antipode: Vec<usize>,
    support: f64,
    cos_support: f64,
    index: HashMap<[i32; 3], Vec<usize>>,
    bucket: f64,
}

/// Recorded bounds `c₁ λ^{2ρ} ≤ #caps ≤ c₂ λ^{2ρ}` for the cube layout,
/// valid once `λ^ρ/√6 ≥ 2`.
pub const CAP_COUNT_BOUNDS: (f64, f64) = (0.5, 2.0);

/// Default cone constant for active caps: angle `≤ 2 λ^{-δ}`.
pub const ACTIVE_CONE: f64 = 2.0;

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let r = dot(v, v).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cap_bump(s: f64) -> f64 {
    1.0 - smootherstep(s)
}

/// Caps with centers on an equiangular cube grid with `m = round(λ^ρ/√6)`
/// cells per face edge (at least 1). `ρ = 0` gives the single whole-sphere
/// cap.
pub fn build_cap_family(lambda: f64, rho: Rational64) -> Result<CapFamily> {
    let rho_f = rho
        .to_f64()
        .ok_or_else(|| Error::Parameter("cap exponent overflow".into()))?;
    if !(0.0..=1.0).contains(&rho_f) || !(lambda >= 1.0) {
        return Err(Error::Parameter(format!(
            "cap family needs λ ≥ 1 and ρ in [0, 1], got λ={lambda}, ρ={rho}"
        )));
    }
    if rho.is_zero() {
        return Ok(CapFamily {
            lambda,
            rho,
            cells: 0,
            centers: vec![[0.0, 0.0, 1.0]],
            antipode: vec![0],
            support: PI,
            cos_support: -1.0,
            index: HashMap::new(),
            bucket: 0.0,
        });
    }
    let m = ((lambda.powf(rho_f) / 6f64.sqrt()).round() as usize).max(1);
    // a cell must still span a couple of lattice directions at radius λ
    if FRAC_PI_2 / (m as f64) < 2.0 / lambda {
        return Err(Error::Resolution(format!(
            "caps of angular width {:.3e} are finer than the lattice resolution at λ={lambda}",
            FRAC_PI_2 / m as f64
        )));
    }
    let mut centers = Vec::with_capacity(6 * m * m);
    let face_coord = |a: usize| (FRAC_PI_4 * (-1.0 + (2 * a + 1) as f64 / m as f64)).tan();
    for face in 0..3 {
        for a in 0..m {
            for b in 0..m {
                let (u, v) = (face_coord(a), face_coord(b));
                let p = match face {
                    0 => [1.0, u, v],
                    1 => [u, 1.0, v],
                    _ => [u, v, 1.0],
                };
                centers.push(normalize(p));
            }
        }
    }
    let half = centers.len();
    for i in 0..half {
        let c = centers[i];
        centers.push([-c[0], -c[1], -c[2]]);
    }
    let antipode = (0..2 * half).map(|i| if i < half { i + half } else { i - half }).collect();
    let support = PI / m as f64;
    let bucket = 2.0 * (support / 2.0).sin();
    let mut index: HashMap<[i32; 3], Vec<usize>> = HashMap::new();
    for (i, c) in centers.iter().enumerate() {
        index.entry(bucket_of(*c, bucket)).or_default().push(i);
    }
    Ok(CapFamily {
        lambda,
        rho,
        cells: m,
        centers,
        antipode,
        support,
        cos_support: support.cos(),
        index,
        bucket,
    })
}

fn bucket_of(p: [f64; 3], width: f64) -> [i32; 3] {
    [
        (p[0] / width).floor() as i32,
        (p[1] / width).floor() as i32,
        (p[2] / width).floor() as i32,
    ]
}

impl CapFamily {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> Rational64 {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Cells per cube-face edge (0 for the single-cap family).
    pub fn cells_per_edge(&self) -> usize {
        self.cells
    }

    pub fn centers(&self) -> &[[f64; 3]] {
        &self.centers
    }

    pub fn antipode(&self, cap: usize) -> usize {
        self.antipode[cap]
    }

    /// Angular support radius of each bump.
    pub fn support_angle(&self) -> f64 {
        self.support
    }

    /// Caps whose bump is nonzero at `dir`, with raw bump values.
    fn raw_weights(&self, dir: [f64; 3]) -> Vec<(usize, f64)> {
        if self.cells == 0 {
            return vec![(0, 1.0)];
        }
        let b = bucket_of(dir, self.bucket);
        let mut out = Vec::with_capacity(16);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(list) = self.index.get(&[b[0] + dx, b[1] + dy, b[2] + dz]) else {
                        continue;
                    };
                    for &i in list {
                        let c = dot(self.centers[i], dir);
                        if c > self.cos_support {
                            let angle = c.clamp(-1.0, 1.0).acos();
                            let w = cap_bump(angle / self.support);
                            if w > 0.0 {
                                out.push((i, w));
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable_by_key(|p| p.0);
        out
    }

    /// Nonzero symbols `p_θ(dir)` at unit vector `dir`; their squares sum
    /// to one.
    pub fn weights(&self, dir: [f64; 3]) -> Vec<(usize, f64)> {
        let mut w = self.raw_weights(dir);
        let total: f64 = w.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
        for p in &mut w {
            p.1 /= total;
        }
        w
    }

    /// Symbol of one cap at `dir`.
    pub fn symbol(&self, cap: usize, dir: [f64; 3]) -> f64 {
        self.weights(dir)
            .into_iter()
            .find(|p| p.0 == cap)
            .map(|p| p.1)
            .unwrap_or(0.0)
    }

    /// Caps whose centers lie within `ACTIVE_CONE · λ^{-δ}` of `-direction`.
    pub fn active_caps(&self, delta: Rational64, direction: [f64; 3]) -> Vec<usize> {
        let cone = ACTIVE_CONE * self.lambda.powf(-delta.to_f64().unwrap_or(0.0));
        let target = normalize([-direction[0], -direction[1], -direction[2]]);
        (0..self.centers.len())
            .filter(|&i| dot(self.centers[i], target).clamp(-1.0, 1.0).acos() <= cone)
            .collect()
    }

    /// `P_{λ,θ} f`: the dyadic piece at `λ` further restricted to cap `θ`.
    pub fn project(&self, f: &SpectralField, cap: usize) -> Result<SpectralField> {
        let mut out = project_dyadic(f, self.lambda)?;
        let g = f.grid();
        let m = g.len();
        for idx in 0..m {
            let k = g.wavevector(idx);
            let s = if k == [0, 0, 0] {
                0.0
            } else {
                self.symbol(cap, normalize([k[0] as f64, k[1] as f64, k[2] as f64]))
            };
            for c in 0..out.components() {
                let z = &mut out.component_mut(c)[idx];
                if *z != Complex64::default() {
                    *z *= s;
                }
            }
        }
        // cap symbols are not even, so the piece is complex-valued
        SpectralField::from_coeffs(g, out.components(), out.coeffs().to_vec(), false)
    }
}

/// Result of [`count_active_caps`].
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveCaps {
    pub count: usize,
    pub predicted: AffineExponent,
}

/// Counts caps of the `(λ, ρ)` family whose centers lie within
/// `ACTIVE_CONE · λ^{-δ}` of `-direction`; the predicted growth exponent
/// is `2ρ - 2δ`.
pub fn count_active_caps(lambda: f64, delta: Rational64, rho: Rational64, direction: [f64; 3]) -> Result<ActiveCaps> {
    let family = build_cap_family(lambda, rho)?;
    let count = family.active_caps(delta, direction).len();
    Ok(ActiveCaps {
        count,
        predicted: AffineExponent::new(rho * 2, Rational64::from_integer(-2)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use crate::spectral::{make_grid, norm, synth_band_field, NormSpec};

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn dyadic_profile_shape() {
        let chi = DyadicSymbol;
        for i in 0..=100 {
            let x = 0.75 + (4.0 / 3.0 - 0.75) * i as f64 / 100.0;
            assert_eq!(chi.eval(x), 1.0);
        }
        assert_eq!(chi.eval(0.5), 0.0);
        assert_eq!(chi.eval(2.0), 0.0);
        assert_eq!(chi.eval(0.66), 0.0);
        assert_eq!(chi.eval(1.51), 0.0);
        for i in 0..1000 {
            let x = 0.4 + 2.0 * i as f64 / 1000.0;
            let v = chi.eval(x);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn dyadic_partition_of_unity() {
        let chi = DyadicSymbol;
        let mut s = RngState::new(1, 0);
        for _ in 0..10_000 {
            let r = 2f64.powf(s.uniform(-3.0, 12.0));
            let total: f64 = (-8..20).map(|j| chi.eval(r / 2f64.powi(j))).sum();
            assert!((total - 1.0).abs() < 1e-12, "r={r}: {total}");
        }
    }

    #[test]
    fn low_pass_plateau_and_tail() {
        for mu in [3.0, 4.0, 5.7, 8.0, 13.0] {
            assert_eq!(low_pass_symbol(0.0, mu), 1.0);
            assert_eq!(low_pass_symbol(mu / 2.0, mu), 1.0);
            assert_eq!(low_pass_symbol(2.0 * mu, mu), 0.0);
            // agrees with the explicit dyadic sum
            let chi = DyadicSymbol;
            for i in 1..200 {
                let r = 0.05 * i as f64;
                let sum: f64 = (-30..10)
                    .filter(|&j| 2f64.powi(j) < mu)
                    .map(|j| chi.eval(r / 2f64.powi(j)))
                    .sum();
                assert!((sum - low_pass_symbol(r, mu)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projections_on_modes() {
        let g = make_grid(32).unwrap();
        let one = [Complex64::new(1.0, 0.0)];
        let f = SpectralField::single_mode(g, [0, 0, 4], &one).unwrap();
        assert_eq!(project_dyadic(&f, 4.0).unwrap(), f);
        assert_eq!(norm(&project_dyadic(&f, 2.0).unwrap(), NormSpec::L2).unwrap(), 0.0);
        let low = project_low(&f, 8.0).unwrap();
        assert_eq!(low, f);
        let cut = project_low(&f, 1.0).unwrap();
        assert_eq!(norm(&cut, NormSpec::L2).unwrap(), 0.0);
        assert!(project_dyadic(&f, 8.0).is_err());
    }

    #[test]
    fn low_pass_is_idempotent_on_modes_off_transition() {
        let g = make_grid(32).unwrap();
        let f = synth_band_field(g, 4, 5, false, NormSpec::L2).unwrap();
        let once = project_low(&f, 8.0).unwrap();
        let twice = project_low(&once, 8.0).unwrap();
        // the transition shell makes P∘P differ from P; only plateau and
        // tail modes are fixed points
        let m = g.len();
        for idx in 0..m {
            let r = g.kmag(idx);
            if r <= 16.0 / 3.0 || r >= 6.0 {
                for c in 0..3 {
                    assert!((once.component(c)[idx] - twice.component(c)[idx]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_cap_family() {
        let fam = build_cap_family(64.0, r(0, 1)).unwrap();
        assert_eq!(fam.len(), 1);
        assert_eq!(fam.weights([0.0, 1.0, 0.0]), vec![(0, 1.0)]);
    }

    #[test]
    fn squared_partition_and_antipodes() {
        let fam = build_cap_family(64.0, r(2, 3)).unwrap();
        let mut s = RngState::new(2, 0);
        for _ in 0..2000 {
            let w = fam.weights(s.unit_vector());
            let total: f64 = w.iter().map(|p| p.1 * p.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        for i in 0..fam.len() {
            let j = fam.antipode(i);
            assert_eq!(fam.antipode(j), i);
            let (a, b) = (fam.centers()[i], fam.centers()[j]);
            assert_eq!([a[0], a[1], a[2]], [-b[0], -b[1], -b[2]]);
        }
    }

    #[test]
    fn cap_count_scaling() {
        let lambda = 4096.0;
        let fam = build_cap_family(lambda, r(2, 3)).unwrap();
        let ratio = fam.len() as f64 / lambda.powf(4.0 / 3.0);
        assert!(ratio >= CAP_COUNT_BOUNDS.0 && ratio <= CAP_COUNT_BOUNDS.1, "{ratio}");
        assert!(build_cap_family(4.0, r(1, 1)).is_ok());
        assert!(matches!(build_cap_family(64.0, r(3, 2)), Err(Error::Parameter(_))));
    }

    #[test]
    fn active_cap_prediction() {
        let a = count_active_caps(256.0, r(1, 2), r(2, 3), [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(a.predicted, AffineExponent::new(r(4, 3), r(-2, 1)));
        assert!(a.count >= 1);
    }
}
