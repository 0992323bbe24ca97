//! Gaussian time windows, the heat/Schrödinger kernel difference, and
//! the tile-to-max inequality.

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};

pub const MAX_WINDOW_ORDER: usize = 8;

/// `e^{-Λt²}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussWindow {
    big_lambda: f64,
}

impl GaussWindow {
    pub fn new(big_lambda: f64) -> Result<Self> {
        if !(big_lambda > 0.0 && big_lambda.is_finite()) {
            return Err(Error::Parameter(format!("window parameter Λ = {big_lambda} must be positive")));
        }
        Ok(Self { big_lambda })
    }

    /// `Λ = N^{3/2−δ}`.
    pub fn from_scale(n: f64, delta: Rational64) -> Result<Self> {
        Self::new(n.powf(1.5 - to_f64(delta)))
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn width(&self) -> f64 {
        self.big_lambda.powf(-0.5)
    }
}

fn to_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Physicists' Hermite polynomial by the three-term recurrence.
pub fn hermite(k: usize, z: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * z);
    if k == 0 {
        return h0;
    }
    for j in 1..k {
        let h2 = 2.0 * z * h1 - 2.0 * j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `∂ᵏ_t e^{-Λt²} = (−1)^k Λ^{k/2} H_k(√Λ t) e^{-Λt²}`.
pub fn window_derivative(k: usize, w: GaussWindow, t: f64) -> Result<f64> {
    if k > MAX_WINDOW_ORDER {
        return Err(Error::Parameter(format!(
            "window derivative order {k} exceeds {MAX_WINDOW_ORDER}"
        )));
    }
    let s = w.big_lambda.sqrt();
    let z = s * t;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * s.powi(k as i32) * hermite(k, z) * (-z * z).exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupRatio {
    pub sup: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// `max_z |H_k(z) e^{-z²}|` over `|z| ≤ 6`, from a dense grid refined by
/// golden-section search around the best sample.
pub fn hermite_gauss_max(k: usize) -> f64 {
    let g = |z: f64| (hermite(k, z) * (-z * z).exp()).abs();
    const POINTS: usize = 100_000;
    let h = 12.0 / (POINTS - 1) as f64;
    let (best, _) = (0..POINTS)
        .map(|i| (i, g(-6.0 + i as f64 * h)))
        .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
    let z0 = -6.0 + best as f64 * h;
    let (mut a, mut b) = (z0 - h, z0 + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    g(0.5 * (a + b)).max(g(z0))
}

/// Sup of the `k`-th window derivative against `N^{(3/4−δ/2)k}`.
pub fn window_sup_ratio(k: usize, n: f64, delta: Rational64) -> Result<SupRatio> {
    if k > MAX_WINDOW_ORDER {
        return Err(Error::Parameter(format!(
            "window derivative order {k} exceeds {MAX_WINDOW_ORDER}"
        )));
    }
    let w = GaussWindow::from_scale(n, delta)?;
    let sup = hermite_gauss_max(k) * w.big_lambda.powf(k as f64 / 2.0);
    let bound = n.powf((0.75 - 0.5 * to_f64(delta)) * k as f64);
    Ok(SupRatio {
        sup,
        bound,
        ratio: sup / bound,
    })
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("heat kernel needs t ≥ 0, got {t}")));
    }
    Ok(())
}

/// `e^{iθ} − 1` without cancellation.
fn cis_m1(theta: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    Complex64::new(-2.0 * s * s, theta.sin())
}

/// `e^{-tN²} − e^{itN²}`.
pub fn kernel_diff(t: f64, n: f64) -> Result<Complex64> {
    check_time(t)?;
    let x = t * n * n;
    Ok(Complex64::new((-x).exp_m1(), 0.0) - cis_m1(x))
}

/// The same quantity as `e^{itN²}(e^{-(1+i)tN²} − 1)`.
pub fn kernel_diff_factored(t: f64, n: f64) -> Result<Complex64> {
    check_time(t)?;
    let x = t * n * n;
    // e^{-x} e^{-ix} − 1 = (e^{-x} − 1) e^{-ix} + (e^{-ix} − 1)
    let inner = Complex64::from_polar(1.0, -x) * (-x).exp_m1() + cis_m1(-x);
    Ok(Complex64::from_polar(1.0, x) * inner)
}

/// `√2·tN²` capped at 2.
pub fn kernel_diff_bound(t: f64, n: f64) -> f64 {
    (std::f64::consts::SQRT_2 * t * n * n).min(2.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelL2 {
    /// `‖diff‖_{L²(I₊)}` by adaptive Simpson.
    pub quadrature: f64,
    /// The same norm from the antiderivative.
    pub closed_form: f64,
    /// `closed_form / N^{-3/4+δ/2}`.
    pub normalized: f64,
}

/// `∫₀^X (e^{-2x} − 2e^{-x}cos x + 1) dx`.
fn kernel_sq_antiderivative(x: f64) -> f64 {
    if x < 1e-3 {
        // 2x³/3 − x⁴/2 + x⁵/5 − …
        return 2.0 * x.powi(3) / 3.0 - x.powi(4) / 2.0 + x.powi(5) / 5.0;
    }
    -0.5 * (-2.0 * x).exp_m1() - (-x).exp() * (x.sin() - x.cos()) - 1.0 + x
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson over `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `‖e^{-tN²} − e^{itN²}‖_{L²(0, N^{-3/2+δ})}`.
pub fn kernel_diff_l2(n: f64, delta: Rational64) -> Result<KernelL2> {
    let d = to_f64(delta);
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Parameter(format!("δ = {delta} must lie in (0, 1)")));
    }
    let t_end = n.powf(-1.5 + d);
    let x_end = t_end * n * n;
    let integrand = |x: f64| {
        let e = (-x).exp();
        e * e - 2.0 * e * x.cos() + 1.0
    };
    // in x = tN², one oscillation per 2π; integrate panel by panel
    let panels = (x_end / std::f64::consts::PI).ceil().max(1.0) as usize;
    let h = x_end / panels as f64;
    let tol = 1e-12 * x_end / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        sum += adaptive_simpson(integrand, p as f64 * h, (p + 1) as f64 * h, tol);
    }
    let quadrature = (sum / (n * n)).sqrt();
    let closed_form = (kernel_sq_antiderivative(x_end) / (n * n)).sqrt();
    Ok(KernelL2 {
        quadrature,
        closed_form,
        normalized: closed_form / n.powf(-0.75 + 0.5 * d),
    })
}

/// `‖diff‖_{L²(I₊)} · ‖f_N‖`, an upper bound for the heat/Schrödinger
/// remainder in `L²_{t,x}`.
pub fn remainder_l2_bound(n: f64, delta: Rational64, f_norm: f64) -> Result<f64> {
    if !(f_norm >= 0.0) {
        return Err(Error::Parameter(format!("norm {f_norm} must be nonnegative")));
    }
    Ok(kernel_diff_l2(n, delta)?.closed_form * f_norm)
}

/// Uniform samples of a signal on `[a, b]`, endpoints included.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    a: f64,
    b: f64,
    samples: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(a: f64, b: f64, samples: Vec<Complex64>) -> Result<Self> {
        if !(b > a) {
            return Err(Error::Parameter(format!("empty interval [{a}, {b}]")));
        }
        if samples.len() < 16 {
            return Err(Error::Parameter(format!("{} samples, need at least 16", samples.len())));
        }
        Ok(Self { a, b, samples })
    }

    /// Samples `f` at `m` equispaced points of `[a, b]`.
    pub fn from_fn(a: f64, b: f64, m: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let h = (b - a) / (m.max(2) - 1) as f64;
        Self::new(a, b, (0..m).map(|i| f(a + i as f64 * h)).collect())
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖F‖_{L²(I)}` by composite Simpson (odd sample counts) or the
    /// trapezoid rule.
    pub fn l2(&self) -> f64 {
        let m = self.samples.len();
        let h = (self.b - self.a) / (m - 1) as f64;
        let sq: Vec<f64> = self.samples.iter().map(|z| z.norm_sqr()).collect();
        let integral = if m % 2 == 1 {
            let inner: f64 = sq[1..m - 1]
                .iter()
                .enumerate()
                .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
                .sum();
            h / 3.0 * (sq[0] + inner + sq[m - 1])
        } else {
            h * (0.5 * (sq[0] + sq[m - 1]) + sq[1..m - 1].iter().sum::<f64>())
        };
        integral.max(0.0).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TileToMax {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `max|F| ≤ |I|^{-1/2}‖F‖_{L²(I)} + |I|^{1/2}‖F′‖_{L²(I)}`.
pub fn tile_to_max_check(f: &SampledSignal, df: &SampledSignal) -> Result<TileToMax> {
    if f.a != df.a || f.b != df.b || f.len() != df.len() {
        return Err(Error::Parameter(
            "signal and derivative are sampled on different grids".into(),
        ));
    }
    let len = f.b - f.a;
    let lhs = f.max_abs();
    let rhs = f.l2() / len.sqrt() + len.sqrt() * df.l2();
    Ok(TileToMax {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-8),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_low_orders() {
        let z = 0.7;
        assert_eq!(hermite(0, z), 1.0);
        assert_eq!(hermite(1, z), 2.0 * z);
        assert!((hermite(2, z) - (4.0 * z * z - 2.0)).abs() < 1e-14);
        assert!((hermite(3, z) - (8.0 * z.powi(3) - 12.0 * z)).abs() < 1e-14);
    }

    #[test]
    fn window_values() {
        let w = GaussWindow::new(3.0).unwrap();
        assert_eq!(window_derivative(0, w, 0.0).unwrap(), 1.0);
        assert_eq!(window_derivative(5, w, 0.0).unwrap(), 0.0);
        assert!(window_derivative(9, w, 0.0).is_err());
        let w = GaussWindow::from_scale(256.0, Rational64::new(1, 2)).unwrap();
        assert!((w.width() - 256f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn kernel_small_and_edge() {
        assert_eq!(kernel_diff(0.0, 64.0).unwrap(), Complex64::new(0.0, 0.0));
        assert!(kernel_diff(-1.0, 64.0).is_err());
        let n: f64 = 256.0;
        let edge = n.powf(-1.5 + 0.5);
        let d = kernel_diff(edge, n).unwrap().norm();
        assert!(d > 0.5 && d <= 2.0);
    }

    #[test]
    fn kernel_l2_agrees_with_closed_form() {
        for &n in &[64.0, 1024.0] {
            let r = kernel_diff_l2(n, Rational64::new(1, 2)).unwrap();
            assert!((r.quadrature - r.closed_form).abs() < 1e-8 * r.closed_form);
        }
        assert_eq!(remainder_l2_bound(64.0, Rational64::new(1, 2), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn tile_to_max_constant_edge() {
        let c = Complex64::new(2.0, 0.0);
        let f = SampledSignal::from_fn(0.0, 3.0, 33, |_| c).unwrap();
        let df = SampledSignal::from_fn(0.0, 3.0, 33, |_| Complex64::new(0.0, 0.0)).unwrap();
        let r = tile_to_max_check(&f, &df).unwrap();
        assert!(r.pass);
        assert!((r.lhs - 2.0).abs() < 1e-15 && (r.rhs - 2.0).abs() < 1e-12);
        let short = SampledSignal::from_fn(0.0, 3.0, 17, |_| c).unwrap();
        assert!(tile_to_max_check(&short, &df).is_err());
        assert!(SampledSignal::from_fn(0.0, 3.0, 8, |_| c).is_err());
    }
}
