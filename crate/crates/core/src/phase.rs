//! Geometry of the resonant phase `ω(ξ, η) = |ξ| + |η| − |ξ + η|`.

use crate::error::{Error, Result};
use crate::rng::RngState;

pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Angle between two nonzero vectors, accurate near 0 and π.
pub fn angle(a: Vec3, b: Vec3) -> f64 {
    norm3(cross(a, b)).atan2(dot(a, b))
}

/// A frequency pair with its nominal scale `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqPair {
    pub xi: Vec3,
    pub eta: Vec3,
    pub lambda: f64,
}

impl FreqPair {
    pub fn w(&self) -> Vec3 {
        add3(self.xi, self.eta)
    }

    pub fn w_norm(&self) -> f64 {
        norm3(self.w())
    }

    /// `θ = ∠(ξ, −η)`; small on the resonant zone.
    pub fn theta(&self) -> f64 {
        angle(self.xi, scale3(self.eta, -1.0))
    }
}

fn nonzero(pair_xi: Vec3, pair_eta: Vec3) -> Result<(f64, f64, f64)> {
    let (a, b, c) = (norm3(pair_xi), norm3(pair_eta), norm3(add3(pair_xi, pair_eta)));
    if a == 0.0 || b == 0.0 || c == 0.0 {
        return Err(Error::Domain(format!(
            "phase undefined: |ξ| = {a}, |η| = {b}, |ξ+η| = {c}"
        )));
    }
    Ok((a, b, c))
}

pub fn omega(xi: Vec3, eta: Vec3) -> Result<f64> {
    let (a, b, c) = nonzero(xi, eta)?;
    Ok(a + b - c)
}

/// `(∇_ξ ω, ∇_η ω) = (ξ/|ξ| − w/|w|, η/|η| − w/|w|)`.
pub fn grad_omega(xi: Vec3, eta: Vec3) -> Result<(Vec3, Vec3)> {
    let (a, b, c) = nonzero(xi, eta)?;
    let wh = scale3(add3(xi, eta), 1.0 / c);
    Ok((sub3(scale3(xi, 1.0 / a), wh), sub3(scale3(eta, 1.0 / b), wh)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransverseFrame {
    pub v1: Vec3,
    pub v2: Vec3,
    pub v3: Vec3,
}

/// Orthonormal frame with `v3 = w/|w|`; `v1` is Gram–Schmidt of the
/// coordinate axis least aligned with `w`.
pub fn transverse_frame(w: Vec3) -> Result<TransverseFrame> {
    let r = norm3(w);
    if r == 0.0 || !r.is_finite() {
        return Err(Error::Domain("transverse frame of a zero vector".into()));
    }
    let v3 = scale3(w, 1.0 / r);
    let axis = (0..3)
        .min_by(|&i, &j| v3[i].abs().total_cmp(&v3[j].abs()))
        .unwrap();
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let p = sub3(e, scale3(v3, v3[axis]));
    let v1 = scale3(p, 1.0 / norm3(p));
    let v2 = cross(v3, v1);
    Ok(TransverseFrame { v1, v2, v3 })
}

/// Transverse Hessian restricted to `e₋ = (v, −v)`, `e₊ = (v, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianRho {
    /// `[[⟨He₋,e₋⟩, ⟨He₋,e₊⟩], [⟨He₊,e₋⟩, ⟨He₊,e₊⟩]]`.
    pub m: [[f64; 2]; 2],
    pub det: f64,
    /// Ascending.
    pub eigs: (f64, f64),
    /// Unit `v ⊥ w` used for the basis.
    pub v: Vec3,
    /// `∠(ξ, η) < λ^{-2/3}`: outside the lemma's hypothesis.
    pub below_min_angle: bool,
}

/// The unit normal of `span(ξ, η)` (falling back to the frame's `v1`
/// when the two are parallel).
pub fn hessian_direction(xi: Vec3, eta: Vec3) -> Result<Vec3> {
    let (a, b, _) = nonzero(xi, eta)?;
    let n = cross(xi, eta);
    let r = norm3(n);
    if r > 1e-12 * a * b {
        Ok(scale3(n, 1.0 / r))
    } else {
        Ok(transverse_frame(add3(xi, eta))?.v1)
    }
}

/// `vᵀ ∇²|x| v = (|v|² − (v·x)²/|x|²) / |x|`.
fn quad(x: Vec3, v: Vec3) -> f64 {
    let r = norm3(x);
    let p = dot(v, x) / r;
    (dot(v, v) - p * p) / r
}

pub fn hessian_rho(pair: &FreqPair) -> Result<HessianRho> {
    let (xi, eta) = (pair.xi, pair.eta);
    let v = hessian_direction(xi, eta)?;
    let (qx, qe, qw) = (quad(xi, v), quad(eta, v), quad(pair.w(), v));
    let mm = qx + qe;
    let pp = qx + qe - 4.0 * qw;
    let mp = qx - qe;
    let m = [[mm, mp], [mp, pp]];
    let det = mm * pp - mp * mp;
    let mean = 0.5 * (mm + pp);
    let rad = (0.25 * (mm - pp) * (mm - pp) + mp * mp).sqrt();
    let below_min_angle = angle(xi, eta) < pair.lambda.powf(-2.0 / 3.0);
    Ok(HessianRho {
        m,
        det,
        eigs: (mean - rad, mean + rad),
        v,
        below_min_angle,
    })
}

/// Lower and upper constants with `|w| ∈ [lo, hi]·λ^{1−δ}` for every
/// sampled pair.
pub const SAMPLER_W_BOUNDS: (f64, f64) = (0.4, 2.3);
pub const SAMPLER_THETA: (f64, f64) = (0.5, 2.0);
pub const SAMPLER_RADIAL: (f64, f64) = (0.9, 1.1);
/// Half-width of the relative radial split, in units of `λ^{-δ}`.
pub const SAMPLER_SPLIT: f64 = 0.25;

/// Draws a resonant pair: uniform orientation, `θ` uniform in
/// `[0.5, 2]·λ^{-δ}`, radii in `[0.9λ, 1.1λ]` whose relative split is at
/// most `0.25·λ^{-δ}`.
pub fn sample_resonant_pair(lambda: f64, delta: f64, mut rng: RngState) -> (FreqPair, RngState) {
    let scale = lambda.powf(-delta);
    let theta = rng.uniform(SAMPLER_THETA.0 * scale, SAMPLER_THETA.1 * scale);
    let r = rng.uniform(SAMPLER_RADIAL.0 * lambda, SAMPLER_RADIAL.1 * lambda);
    let s = rng.uniform(-SAMPLER_SPLIT, SAMPLER_SPLIT) * scale;
    let clamp = |x: f64| x.clamp(SAMPLER_RADIAL.0 * lambda, SAMPLER_RADIAL.1 * lambda);
    let (rx, re) = (clamp(r * (1.0 + 0.5 * s)), clamp(r * (1.0 - 0.5 * s)));
    let u = rng.unit_vector();
    let frame = transverse_frame(u).expect("unit vector");
    let phi = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
    let p = add3(scale3(frame.v1, phi.cos()), scale3(frame.v2, phi.sin()));
    let minus_eta_dir = add3(scale3(u, theta.cos()), scale3(p, theta.sin()));
    let pair = FreqPair {
        xi: scale3(u, rx),
        eta: scale3(minus_eta_dir, -re),
        lambda,
    };
    (pair, rng)
}

/// `B(ξ, η) = Π_{ξ+η} η`, the component of `η` transverse to `w`.
pub fn null_symbol(xi: Vec3, eta: Vec3) -> Result<Vec3> {
    let w = add3(xi, eta);
    let ww = dot(w, w);
    if ww == 0.0 {
        return Err(Error::Domain("null symbol undefined at ξ + η = 0".into()));
    }
    Ok(sub3(eta, scale3(w, dot(eta, w) / ww)))
}

/// `(|B|/|w|)·(|w|/λ)²` divided by its claimed size `λ^{-2+3δ}`.
pub fn suppression_ratio(pair: &FreqPair, delta: f64) -> Result<f64> {
    let b = norm3(null_symbol(pair.xi, pair.eta)?);
    let w = pair.w_norm();
    let lam = pair.lambda;
    Ok((b / w) * (w / lam).powi(2) * lam.powf(2.0 - 3.0 * delta))
}

/// `|ξ × η|·λ^{-(2−δ)}`.
pub fn cross_lower_bound(pair: &FreqPair, delta: f64) -> f64 {
    norm3(cross(pair.xi, pair.eta)) * pair.lambda.powf(-(2.0 - delta))
}

/// `Φ(ξ, η) = |ξ + η|²`.
pub fn heat_phase(xi: Vec3, eta: Vec3) -> f64 {
    let w = add3(xi, eta);
    dot(w, w)
}

/// `max{λ^{-2+2δ}, λ^{-1}}`, the rough bound for `Φ^{-1}` on the zone.
pub fn heat_phase_inverse_bound(lambda: f64, delta: f64) -> f64 {
    lambda.powf(-2.0 + 2.0 * delta).max(1.0 / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_closed_forms() {
        let l = 64.0;
        let v = omega([l, 0.0, 0.0], [0.0, l, 0.0]).unwrap();
        assert!((v - (2.0 * l - l * 2f64.sqrt())).abs() < 1e-12 * l);
        assert!(matches!(omega([1.0, 2.0, 3.0], [-1.0, -2.0, -3.0]), Err(Error::Domain(_))));
        let (gx, ge) = grad_omega([1.0, 0.0, 0.0], [2.0, 0.0, 0.0]).unwrap();
        assert_eq!(norm3(gx) + norm3(ge), 0.0);
    }

    #[test]
    fn frame_is_orthonormal_and_deterministic() {
        let f = transverse_frame([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(f.v3, [0.0, 0.0, 1.0]);
        assert_eq!(dot(f.v1, f.v3), 0.0);
        let w = [0.3, -1.7, 0.2];
        let a = transverse_frame(w).unwrap();
        assert_eq!(a, transverse_frame(w).unwrap());
        for (x, y) in [(a.v1, a.v2), (a.v1, a.v3), (a.v2, a.v3)] {
            assert!(dot(x, y).abs() < 1e-13);
        }
        assert!(transverse_frame([0.0; 3]).is_err());
    }

    #[test]
    fn symmetric_hessian_entries() {
        let l = 256.0;
        let (pair, _) = sample_resonant_pair(l, 0.5, RngState::new(3, 0));
        let u = scale3(pair.xi, l / norm3(pair.xi));
        let e = scale3(pair.eta, l / norm3(pair.eta));
        let p = FreqPair { xi: u, eta: e, lambda: l };
        let h = hessian_rho(&p).unwrap();
        let w = p.w_norm();
        assert!((h.m[0][0] - 2.0 / l).abs() < 1e-10 * 2.0 / l);
        assert!((h.m[1][1] - (2.0 / l - 4.0 / w)).abs() < 1e-10 * (4.0 / w));
        assert!(h.m[0][1].abs() < 1e-8 * 2.0 / l);
        assert!((h.det - h.eigs.0 * h.eigs.1).abs() < 1e-10 * h.det.abs());
    }

    #[test]
    fn parallel_pair_has_flat_plus_direction() {
        let l = 32.0;
        let p = FreqPair {
            xi: [l, 0.0, 0.0],
            eta: [l, 0.0, 0.0],
            lambda: l,
        };
        let h = hessian_rho(&p).unwrap();
        assert!(h.m[1][1].abs() < 1e-15);
        assert!(h.det.abs() < 1e-15);
        assert!(h.below_min_angle);
    }

    #[test]
    fn sampler_contract() {
        let mut rng = RngState::new(11, 1);
        for &l in &[16.0, 1024.0] {
            for _ in 0..2000 {
                let (p, next) = sample_resonant_pair(l, 0.5, rng);
                rng = next;
                let s = l.powf(-0.5);
                let th = p.theta();
                assert!(th >= 0.5 * s * (1.0 - 1e-12) && th <= 2.0 * s * (1.0 + 1e-12));
                for r in [norm3(p.xi), norm3(p.eta)] {
                    assert!(r >= 0.9 * l * (1.0 - 1e-12) && r <= 1.1 * l * (1.0 + 1e-12));
                }
                let wn = p.w_norm() / l.powf(0.5);
                assert!(wn >= SAMPLER_W_BOUNDS.0 && wn <= SAMPLER_W_BOUNDS.1, "{wn}");
            }
        }
        let a = sample_resonant_pair(64.0, 0.25, RngState::new(5, 9)).0;
        let b = sample_resonant_pair(64.0, 0.25, RngState::new(5, 9)).0;
        assert_eq!(a, b);
    }

    #[test]
    fn null_symbol_cases() {
        let b = null_symbol([1.0, 0.0, 0.0], [2.0, 0.0, 0.0]).unwrap();
        assert_eq!(b, [0.0; 3]);
        let b = null_symbol([1.0, -1.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        assert_eq!(b, [0.0, 1.0, 0.0]);
        assert!(null_symbol([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]).is_err());
        assert_eq!(heat_phase([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]), 0.0);
    }
}
