//! Adaptive Gauss–Kronrod integration over `[0, inf)` and finite intervals.
//!
//! The half-line is mapped onto `[0, 1)` by `u = t / (1 - t)` and the
//! 21-point Kronrod rule is refined globally, always bisecting the panel
//! with the largest error estimate. Initial panels follow a geometric grid
//! in `u` so integrands whose mass sits anywhere between `1e-2` and `1e7`
//! are resolved from the first pass.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-8;
const MAX_PANELS: usize = 4000;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_838_257,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// 10-point Gauss weights for the odd Kronrod nodes
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let pair = g(c - dx) + g(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * h;
    if !value.is_finite() {
        return Err(Error::Quadrature {
            estimate: value,
            error: f64::INFINITY,
            intervals: 0,
        });
    }
    Ok(Panel {
        a,
        b,
        value,
        error: ((kronrod - gauss) * h).abs(),
    })
}

/// `∫_0^∞ f(u) du` to relative tolerance `rel_tol`.
///
/// `f` must be finite on `[0, inf)` and integrable; it is never evaluated
/// at infinity.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> Result<f64> {
    if !(rel_tol > 0.0) {
        return Err(invalid("rel_tol", format!("must be positive, got {rel_tol}")));
    }
    let g = |t: f64| {
        let s = 1.0 - t;
        if s <= 0.0 {
            // a node rounded onto the point at infinity
            return 0.0;
        }
        let u = t / s;
        let v = f(u);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    };

    let mut edges = vec![0.0];
    edges.extend((-6..=24).map(|k| {
        let u = 2f64.powi(k);
        u / (1.0 + u)
    }));
    edges.push(1.0);
    adaptive(&g, &edges, rel_tol)
}

/// `∫_a^b f(x) dx` to relative tolerance `rel_tol`.
pub fn integrate_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(rel_tol > 0.0) {
        return Err(invalid("rel_tol", format!("must be positive, got {rel_tol}")));
    }
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(invalid("interval", format!("need finite a <= b, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let edges: Vec<f64> = (0..=8).map(|k| a + (b - a) * k as f64 / 8.0).collect();
    adaptive(&f, &edges, rel_tol)
}

/// Global adaptive refinement starting from the panels between `edges`.
fn adaptive<F: Fn(f64) -> f64>(g: &F, edges: &[f64], rel_tol: f64) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(gk21(g, w[0], w[1])?);
    }

    loop {
        let (total, err) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if err <= rel_tol * total.abs() || err == 0.0 {
            return Ok(total);
        }
        let roundoff = 50.0 * f64::EPSILON * heap.iter().map(|p| p.value.abs()).sum::<f64>();
        if err <= roundoff {
            return Ok(total);
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature {
                estimate: total,
                error: err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("panel set is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel can no longer be split in floating point
            return Err(Error::Quadrature {
                estimate: total,
                error: err,
                intervals: heap.len() + 1,
            });
        }
        heap.push(gk21(g, worst.a, mid)?);
        heap.push(gk21(g, mid, worst.b)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_moment() {
        let v = integrate_semi_infinite(|u| u * (-u * u).exp(), 1e-10).unwrap();
        assert!((v - 0.5).abs() < 1e-10, "{v}");
    }

    #[test]
    fn rational_kernel() {
        let v = integrate_semi_infinite(|u| u / (1.0 + u.powi(4)), 1e-10).unwrap();
        assert!((v - PI / 4.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn kernel_constant_for_other_exponents() {
        for &alpha in &[2.5f64, 3.0, 5.0] {
            let v = integrate_semi_infinite(|u| u / (1.0 + u.powf(alpha)), 1e-9).unwrap();
            let want = PI / (alpha * (2.0 * PI / alpha).sin());
            assert!((v - want).abs() < 1e-7 * want, "alpha {alpha}: {v} vs {want}");
        }
    }

    #[test]
    fn wide_and_narrow_scales() {
        // mass near 1e-2 and near 1e3
        for &s in &[1e-2, 1.0, 1e3] {
            let v = integrate_semi_infinite(|u: f64| (-u / s).exp(), 1e-10).unwrap();
            assert!((v - s).abs() < 1e-9 * s, "scale {s}: {v}");
        }
    }

    #[test]
    fn zero_integrand() {
        assert_eq!(integrate_semi_infinite(|_| 0.0, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_integrand_fails() {
        assert!(integrate_semi_infinite(|u| if u > 3.0 { f64::NAN } else { 1.0 }, 1e-8).is_err());
    }

    #[test]
    fn finite_interval() {
        let v = integrate_interval(|x| x.sin(), 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
        assert_eq!(integrate_interval(|x| x, 1.0, 1.0, 1e-8).unwrap(), 0.0);
        assert!(integrate_interval(|x| x, 2.0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn bad_tolerance() {
        assert!(integrate_semi_infinite(|u| (-u).exp(), 0.0).is_err());
    }
}
