//! Profile functions of the fractional mean curvature operator.
//!
//! `G(r) = ∫_0^r (1 + t²)^(-k) dt` with `k = (n + 1 + σ)/2`, and the
//! exterior profile `Gq(a) = (1/σ) ∫_0^1 G(a w^(1/σ)) dw`, which gives
//! `∫_d^∞ G(a/ρ) ρ^(-1-σ) dρ = d^(-σ) Gq(a/d)` along a ray.

use crate::quadrature::{adaptive_simpson, GaussLegendre};
use statrs::function::gamma::gamma;

const R_MAX: f64 = 50.0;
const G_STEP: f64 = 1e-3;
const GQ_STEP: f64 = 2e-3;

#[derive(Debug, Clone)]
pub struct CurvatureProfile {
    dim: f64,
    sigma: f64,
    k: f64,
    g_inf: f64,
    g_tab: Vec<f64>,
    gq_tab: Vec<f64>,
    // ∫_0^R_MAX (G∞ - G(r)) r^(σ-1) dr
    j_max: f64,
}

impl CurvatureProfile {
    pub fn new(dim: usize, sigma: f64) -> Self {
        let nd = dim as f64;
        let k = 0.5 * (nd + 1.0 + sigma);
        let g_inf = 0.5 * std::f64::consts::PI.sqrt() * gamma(k - 0.5) / gamma(k);
        let steps = (R_MAX / G_STEP).round() as usize;
        let mut g_tab = Vec::with_capacity(steps + 1);
        let mut acc = 0.0;
        g_tab.push(0.0);
        let integrand = |t: f64| (1.0 + t * t).powf(-k);
        for s in 0..steps {
            let a = s as f64 * G_STEP;
            acc += adaptive_simpson(&integrand, a, a + G_STEP, 1e-14);
            g_tab.push(acc);
        }
        let mut prof = Self { dim: nd, sigma, k, g_inf, g_tab, gq_tab: Vec::new(), j_max: 0.0 };
        let gl8 = GaussLegendre::new(8);
        let qsteps = (R_MAX / GQ_STEP).round() as usize;
        let gq_tab: Vec<f64> = (0..=qsteps)
            .map(|s| {
                let a = s as f64 * GQ_STEP;
                gl8.integrate_composite(0.0, 1.0, 32, |w| prof.g(a * w.powf(1.0 / sigma))) / sigma
            })
            .collect();
        prof.j_max = R_MAX.powf(sigma) * (g_inf / sigma - gq_tab[qsteps]);
        prof.gq_tab = gq_tab;
        prof
    }

    /// `∫_0^∞ (1 + t²)^(-k) dt`.
    pub fn g_infinity(&self) -> f64 {
        self.g_inf
    }

    /// Odd profile `G(r)`.
    pub fn g(&self, r: f64) -> f64 {
        let a = r.abs();
        let v = if a >= R_MAX {
            let e = 2.0 * self.k;
            self.g_inf - a.powf(1.0 - e) / (e - 1.0) + self.k * a.powf(-1.0 - e) / (e + 1.0)
        } else {
            lerp(&self.g_tab, a / G_STEP)
        };
        v.copysign(r)
    }

    /// Odd exterior profile `Gq(a)`.
    pub fn gq(&self, a: f64) -> f64 {
        let x = a.abs();
        let v = if x >= R_MAX {
            let n = self.dim;
            let s = self.sigma;
            let extra = (R_MAX.powf(-n) - x.powf(-n)) / (n * (n + s));
            self.g_inf / s - x.powf(-s) * (self.j_max + extra)
        } else {
            lerp(&self.gq_tab, x / GQ_STEP)
        };
        v.copysign(a)
    }
}

fn lerp(tab: &[f64], pos: f64) -> f64 {
    let i = (pos.floor() as usize).min(tab.len() - 2);
    let f = pos - i as f64;
    tab[i] * (1.0 - f) + tab[i + 1] * f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_matches_direct_quadrature() {
        let p = CurvatureProfile::new(1, 0.5);
        let k = 0.5 * 2.5;
        for r in [0.01, 0.3, 2.0, 17.0] {
            let exact = adaptive_simpson(&|t: f64| (1.0 + t * t).powf(-k), 0.0, r, 1e-12);
            assert!((p.g(r) - exact).abs() < 1e-7, "r={r}");
            assert!((p.g(-r) + exact).abs() < 1e-7);
        }
        // k = 5/4: ∫_0^∞ (1+t²)^(-5/4) dt = √π Γ(3/4) / (2 Γ(5/4))
        assert!((p.g_infinity() - 1.1981402347355922).abs() < 1e-10);
        assert!((p.g(49.999) - p.g(50.001)).abs() < 1e-6);
    }

    #[test]
    fn exterior_profile_is_continuous_and_saturates() {
        for (dim, sigma) in [(1, 0.3), (2, 0.7)] {
            let p = CurvatureProfile::new(dim, sigma);
            assert!((p.gq(50.0 - 1e-7) - p.gq(50.0 + 1e-7)).abs() < 1e-7);
            let lim = p.g_infinity() / sigma;
            assert!(p.gq(1e12) < lim && p.gq(1e12) > 0.99 * lim);
            // small slopes: Gq(a) ≈ a / (1 + σ)
            assert!((p.gq(1e-3) - 1e-3 / (1.0 + sigma)).abs() < 1e-8);
        }
    }
}
