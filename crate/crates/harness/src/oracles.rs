//! Independent reference computations the measurements are checked
//! against. None of these call the routine they verify.

use num_complex::Complex64;
use paraproduct_core::phase::{add3, dot, norm3, scale3, FreqPair, Vec3};
use paraproduct_core::rng::RngState;
use paraproduct_core::window::hermite;

/// `|a + b| − |a|` without cancellation.
fn norm_step(a: Vec3, b: Vec3) -> f64 {
    let s = add3(a, b);
    (2.0 * dot(a, b) + dot(b, b)) / (norm3(s) + norm3(a))
}

/// `ω(x + h e) − ω(x)` for `x = (ξ, η)`, `e = (e1, e2)`.
fn omega_step(xi: Vec3, eta: Vec3, e1: Vec3, e2: Vec3, h: f64) -> f64 {
    let (d1, d2) = (scale3(e1, h), scale3(e2, h));
    norm_step(xi, d1) + norm_step(eta, d2) - norm_step(add3(xi, eta), add3(d1, d2))
}

/// Second central difference of `ω` along `e`, divided by `h²`.
pub fn second_difference(xi: Vec3, eta: Vec3, e1: Vec3, e2: Vec3, h: f64) -> f64 {
    let minus = (scale3(e1, -1.0), scale3(e2, -1.0));
    (omega_step(xi, eta, e1, e2, h) + omega_step(xi, eta, minus.0, minus.1, h)) / (h * h)
}

/// Finite-difference `[[⟨He₋,e₋⟩, ⟨He₋,e₊⟩], [.., ⟨He₊,e₊⟩]]` with
/// `e± = (v, ±v)`; the off-diagonal entry by polarization.
pub fn fd_hessian(pair: &FreqPair, v: Vec3, h: f64) -> [[f64; 2]; 2] {
    let (xi, eta) = (pair.xi, pair.eta);
    let neg = scale3(v, -1.0);
    let mm = second_difference(xi, eta, v, neg, h);
    let pp = second_difference(xi, eta, v, v, h);
    let two_v = scale3(v, 2.0);
    let zero = [0.0; 3];
    let off = (second_difference(xi, eta, two_v, zero, h) - second_difference(xi, eta, zero, scale3(v, -2.0), h)) / 4.0;
    [[mm, off], [off, pp]]
}

fn omega_plain(xi: Vec3, eta: Vec3) -> f64 {
    norm3(xi) + norm3(eta) - norm3(add3(xi, eta))
}

/// Central-difference gradient of `ω` in all six coordinates.
pub fn fd_gradient(xi: Vec3, eta: Vec3, h: f64) -> (Vec3, Vec3) {
    let mut gx = [0.0; 3];
    let mut ge = [0.0; 3];
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = h;
        gx[i] = (omega_plain(add3(xi, e), eta) - omega_plain(add3(xi, scale3(e, -1.0)), eta)) / (2.0 * h);
        ge[i] = (omega_plain(xi, add3(eta, e)) - omega_plain(xi, add3(eta, scale3(e, -1.0)))) / (2.0 * h);
    }
    (gx, ge)
}

/// `max_z |H_k(z) e^{-z²}|` from the critical points, which are the roots
/// of `H_{k+1}` since `(H_k e^{-z²})′ = −H_{k+1} e^{-z²}`.
pub fn hermite_gauss_max_by_roots(k: usize) -> f64 {
    let g = |z: f64| (hermite(k, z) * (-z * z).exp()).abs();
    let p = |z: f64| hermite(k + 1, z);
    let step = 1e-3;
    let mut best = g(0.0);
    let mut z = -7.0;
    while z < 7.0 {
        let (mut a, mut b) = (z, z + step);
        let (fa, fb) = (p(a), p(b));
        if fa == 0.0 {
            best = best.max(g(a));
        } else if fa * fb < 0.0 {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if p(a) * p(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            best = best.max(g(0.5 * (a + b)));
        }
        z += step;
    }
    best
}

/// A trigonometric polynomial `Σ_{|j|≤D} c_j e^{i j ω t}` and its exact
/// derivative.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    pub coeffs: Vec<Complex64>,
    pub degree: i64,
    pub omega: f64,
}

impl TrigPoly {
    pub fn random(rng: &mut RngState, max_degree: i64, omega: f64) -> Self {
        let degree = (rng.uniform(0.0, (max_degree + 1) as f64).floor() as i64).min(max_degree);
        let coeffs = (0..2 * degree + 1)
            .map(|_| Complex64::new(rng.normal(), rng.normal()))
            .collect();
        Self { coeffs, degree, omega }
    }

    /// `(G(t), G′(t))`.
    pub fn eval(&self, t: f64) -> (Complex64, Complex64) {
        let base = Complex64::from_polar(1.0, self.omega * t);
        let mut e = Complex64::from_polar(1.0, -(self.degree as f64) * self.omega * t);
        let (mut g, mut dg) = (Complex64::default(), Complex64::default());
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = i as i64 - self.degree;
            let term = c * e;
            g += term;
            dg += term * Complex64::new(0.0, j as f64 * self.omega);
            e *= base;
        }
        (g, dg)
    }
}

/// `|I|^{-1}‖G‖² + 2‖G‖‖G′‖`, the squared bound from averaging
/// `|G(t)|² = |G(s)|² + ∫_s^t 2 Re(Ḡ G′)` over `s ∈ I`.
pub fn averaged_sup_bound_sq(len: f64, g_l2: f64, dg_l2: f64) -> f64 {
    g_l2 * g_l2 / len + 2.0 * g_l2 * dg_l2
}
