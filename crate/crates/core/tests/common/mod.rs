//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::f64::consts::PI;

use osa_core::analytic::integrate_semi_infinite;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain Monte-Carlo estimate of `∫_0^∞ f(u) du` using `u = v / (1 - v)`.
pub fn mc_half_line(f: impl Fn(f64) -> f64, n: u64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let v: f64 = rng.random();
        let u = v / (1.0 - v);
        let y = f(u) * (1.0 + u) * (1.0 + u);
        s += y;
        s2 += y * y;
    }
    let nf = n as f64;
    let mean = s / nf;
    let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// Geometry of a displaced-sensing inequality: interferers at distance `u`
/// from the receiver are sensed by a node `shift` away from it.
#[derive(Debug, Clone, Copy)]
pub struct DisplacedSensing {
    pub alpha: f64,
    pub shift: f64,
    /// `N / P_p`
    pub rate: f64,
    /// kernel scale, `1 / (1 + u^alpha / c)`
    pub c: f64,
}

impl DisplacedSensing {
    fn unheard_gap(&self, u: f64, r: f64) -> f64 {
        let a = self.rate * u.powf(self.alpha);
        let b = self.rate * r.powf(self.alpha);
        // e^{-a} - e^{-b} without cancellation
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let e = (-lo).exp();
        if e == 0.0 {
            return 0.0;
        }
        sign * e * -(lo - hi).exp_m1()
    }

    fn kernel(&self, u: f64) -> f64 {
        self.c / (self.c + u.powf(self.alpha))
    }

    /// Excess of the worst-case shifted density over the unshifted one,
    /// integrated against the kernel.
    pub fn bound_excess(&self) -> f64 {
        integrate_semi_infinite(|u| self.unheard_gap(u, u + self.shift) * self.kernel(u) * u, 1e-10)
            .expect("bounded integrand")
    }

    /// Monte-Carlo estimate of the same excess for the true, angle-averaged
    /// density, where the sensing node sits at a uniform angle.
    pub fn true_excess(&self, n: u64, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v: f64 = rng.random();
            let phi = 2.0 * PI * rng.random::<f64>();
            let u = v / (1.0 - v);
            let d = self.shift;
            let r = (u * u + d * d - 2.0 * u * d * phi.cos()).max(0.0).sqrt();
            let y = self.unheard_gap(u, r) * self.kernel(u) * u * (1.0 + u) * (1.0 + u);
            s += y;
            s2 += y * y;
        }
        let nf = n as f64;
        let mean = s / nf;
        let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
        (mean, (var / nf).sqrt())
    }
}

/// Draw `i` of a fixed pseudo-random family of sensing geometries for the
/// primary-side (`secondary = false`) or secondary-side inequality.
pub fn displaced_draw(i: u64, secondary: bool) -> DisplacedSensing {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + i + if secondary { 1 << 32 } else { 0 });
    let alpha = 2.0 + 4.0 * (1.0 - rng.random::<f64>());
    let shift = 5.0 * (1.0 - rng.random::<f64>());
    let power_p = 10f64.powf(rng.random_range(-0.5..1.5));
    let power_s = 10f64.powf(rng.random_range(-0.5..1.5));
    let theta = 10f64.powf(rng.random_range(-0.5..1.0));
    let threshold = 10f64.powf(rng.random_range(-2.0..2.0));
    let c = if secondary {
        theta * power_p * shift.powf(alpha) / power_s
    } else {
        theta * power_s * shift.powf(alpha) / power_p
    };
    DisplacedSensing {
        alpha,
        shift,
        rate: threshold / power_p,
        c,
    }
}
