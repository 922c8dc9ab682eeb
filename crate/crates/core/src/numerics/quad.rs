//! Adaptive Gauss-Kronrod quadrature, generic over real and complex values,
//! plus a dyadic half-line driver for integrands with power-law ends.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: a real vector space with a norm.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
}

/// Tolerances shared by the quadrature drivers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default = "default_nodes")]
    pub node_count: usize,
    #[serde(default = "default_abs")]
    pub tolerance_abs: f64,
    #[serde(default = "default_rel")]
    pub tolerance_rel: f64,
    #[serde(default = "default_refinements")]
    pub max_refinements: usize,
}

fn default_nodes() -> usize {
    64
}
fn default_abs() -> f64 {
    1e-12
}
fn default_rel() -> f64 {
    1e-10
}
fn default_refinements() -> usize {
    20
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            node_count: default_nodes(),
            tolerance_abs: default_abs(),
            tolerance_rel: default_rel(),
            max_refinements: default_refinements(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 8 {
            return Err(Error::invalid("node_count must be at least 8"));
        }
        if !(self.tolerance_abs > 0.0 && self.tolerance_rel > 0.0) {
            return Err(Error::invalid("quadrature tolerances must be positive"));
        }
        Ok(())
    }

    /// A tighter copy, used for inner integrals of compound quantities.
    pub fn tightened(&self, factor: f64) -> Self {
        QuadratureSpec {
            tolerance_abs: self.tolerance_abs * factor,
            tolerance_rel: self.tolerance_rel * factor,
            ..*self
        }
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: f64,
    pub evaluations: usize,
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn finite<T: QuadValue>(v: T) -> bool {
    v.norm().is_finite()
}

/// One Gauss-Kronrod 21 panel. Returns (estimate, error, |f| integral).
fn gk21<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> Result<(T, f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !finite(fc) {
        return Err(Error::quad("gauss-kronrod", format!("non-finite integrand at {center}")));
    }
    let mut kronrod = fc * WGK[10];
    let mut gauss = T::zero();
    let mut abs_sum = fc.norm() * WGK[10];
    let mut lows = [T::zero(); 10];
    let mut highs = [T::zero(); 10];
    for i in 0..10 {
        let dx = half * XGK[i];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !finite(f1) || !finite(f2) {
            return Err(Error::quad(
                "gauss-kronrod",
                format!("non-finite integrand near {}", center - dx),
            ));
        }
        lows[i] = f1;
        highs[i] = f2;
        let pair = f1 + f2;
        kronrod = kronrod + pair * WGK[i];
        abs_sum += (f1.norm() + f2.norm()) * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + pair * WG[i / 2];
        }
    }
    let est = kronrod * half;
    let raw_err = ((kronrod - gauss) * half).norm();
    let resabs = abs_sum * half.abs();
    // QUADPACK-style error sharpening.
    let mut err = raw_err;
    if raw_err > 0.0 {
        let mean = kronrod * 0.5;
        let mut resasc = (fc - mean).norm() * WGK[10];
        for i in 0..10 {
            resasc += ((lows[i] - mean).norm() + (highs[i] - mean).norm()) * WGK[i];
        }
        resasc *= half.abs();
        if resasc > 0.0 {
            err = resasc * (1.0f64).min((200.0 * raw_err / resasc).powf(1.5));
        }
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if round > err {
        err = round;
    }
    Ok((est, err, resabs))
}

/// Globally adaptive Gauss-Kronrod on a finite interval.
pub fn adaptive<T: QuadValue, F: Fn(f64) -> T>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult<T>> {
    if a == b {
        return Ok(QuadResult {
            value: T::zero(),
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (v, e, ra) = gk21(f, a, b)?;
    let mut panels = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    let mut evals = 21;
    // Errors below a few ulps of ∫|f| cannot be reduced by splitting.
    let floor = 200.0 * f64::EPSILON * ra;
    while err > abs_tol.max(rel_tol * total.norm()).max(floor) {
        if panels.len() >= max_intervals {
            return Err(Error::quad(
                "adaptive",
                format!("interval budget exhausted on [{a}, {b}] with error {err:e}"),
            ));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, pv, pe) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval cannot be split further; accept its contribution.
            panels.push((lo, hi, pv, 0.0));
            err -= pe;
            continue;
        }
        let (v1, e1, _) = gk21(f, lo, mid)?;
        let (v2, e2, _) = gk21(f, mid, hi)?;
        evals += 42;
        total = total - pv + v1 + v2;
        err = err - pe + e1 + e2;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
        if panels.len() % 64 == 0 {
            // Re-sum to avoid drift from repeated subtraction.
            total = panels.iter().fold(T::zero(), |acc, p| acc + p.2);
            err = panels.iter().map(|p| p.3).sum();
        }
    }
    let total = panels.iter().fold(T::zero(), |acc, p| acc + p.2);
    let err: f64 = panels.iter().map(|p| p.3).sum();
    Ok(QuadResult {
        value: total,
        abs_error: err,
        evaluations: evals,
    })
}

const MAX_PIECES: usize = 1100;
const MIN_PIECES: usize = 4;

/// Integral over (0, ∞) split dyadically around `scale`:
/// [scale·2^{-j-1}, scale·2^{-j}] toward zero and [scale·2^j, scale·2^{j+1}]
/// toward infinity. Each side stops once pieces decay geometrically below
/// the target, with the geometric remainder added to the error.
pub fn half_line<T: QuadValue, F: Fn(f64) -> T>(
    f: &F,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult<T>> {
    let upper = one_side(f, scale, Side::Infinity, spec, None)?;
    let lower = one_side(f, scale, Side::Zero, spec, Some(upper.value.norm()))?;
    finish(upper.value + lower.value, upper.abs_error + lower.abs_error, upper.evaluations + lower.evaluations, spec)
}

pub(crate) fn finish<T: QuadValue>(total: T, err: f64, evals: usize, spec: &QuadratureSpec) -> Result<QuadResult<T>> {
    if !finite(total) {
        return Err(Error::quad("half-line", "non-finite total"));
    }
    let tol = spec.tolerance_abs.max(spec.tolerance_rel * total.norm());
    if err > 1e3 * tol {
        return Err(Error::quad(
            "half-line",
            format!("error estimate {err:e} far above tolerance {tol:e}"),
        ));
    }
    Ok(QuadResult {
        value: total,
        abs_error: err,
        evaluations: evals,
    })
}

/// Which end of the half line a dyadic sweep heads toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Zero,
    Infinity,
}

/// Dyadic sweep over (0, scale] or [scale, ∞).
///
/// `reference` is a magnitude from other parts of the same integral, used
/// in the relative stopping test.
pub fn one_side<T: QuadValue, F: Fn(f64) -> T>(
    f: &F,
    scale: f64,
    side: Side,
    spec: &QuadratureSpec,
    reference: Option<f64>,
) -> Result<QuadResult<T>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::quad("half-line", format!("invalid split scale {scale}")));
    }
    let piece_rel = spec.tolerance_rel * 0.1;
    let piece_abs = spec.tolerance_abs * 1e-3;
    let reference = reference.unwrap_or(0.0);
    let mut total = T::zero();
    let mut err = 0.0;
    let mut evals = 0;
    let mut prev: Option<f64> = None;
    let mut quiet = 0;
    let mut j = 0usize;
    loop {
        let (lo, hi) = match side {
            Side::Zero => (scale * 0.5f64.powi(j as i32 + 1), scale * 0.5f64.powi(j as i32)),
            Side::Infinity => (scale * 2f64.powi(j as i32), scale * 2f64.powi(j as i32 + 1)),
        };
        if !hi.is_finite() || hi < 1e-300 {
            if quiet == 0 && total.norm() > 0.0 {
                return Err(Error::quad(
                    "half-line",
                    "range exhausted before the integrand decayed".to_string(),
                ));
            }
            break;
        }
        let r = adaptive(f, lo, hi, piece_abs, piece_rel, 400)?;
        evals += r.evaluations;
        total = total + r.value;
        err += r.abs_error;
        let mag = r.value.norm();
        let target = spec.tolerance_rel * 0.01 * (total.norm() + reference) + piece_abs;
        let remainder = match prev {
            Some(p) if p > 0.0 && mag / p < 0.99 => {
                let q = mag / p;
                mag * q / (1.0 - q)
            }
            Some(p) if p == 0.0 && mag == 0.0 => 0.0,
            _ => f64::INFINITY,
        };
        if mag <= target && remainder <= target && total.norm() > 0.0 {
            quiet += 1;
        } else {
            quiet = 0;
        }
        prev = Some(mag);
        j += 1;
        if j >= MIN_PIECES && quiet >= 2 {
            err += remainder;
            break;
        }
        if j >= MAX_PIECES {
            return Err(Error::quad(
                "half-line",
                format!(
                    "integrand does not decay {} (last piece {mag:e})",
                    if side == Side::Zero { "near zero" } else { "at infinity" }
                ),
            ));
        }
    }
    Ok(QuadResult {
        value: total,
        abs_error: err,
        evaluations: evals,
    })
}

/// Integral over a finite interval with default tolerances.
pub fn finite_interval<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult<f64>> {
    adaptive(f, a, b, spec.tolerance_abs, spec.tolerance_rel, 2000)
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 2.0 / 9.0).abs() < 1e-15);
        let (x, _) = gauss_legendre(3);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn polynomial_is_exact() {
        let r = adaptive(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14, 1e-14, 50).unwrap();
        assert_eq!(r.evaluations, 21);
        assert!((r.value - 0.0).abs() < 1e-14);
    }

    #[test]
    fn half_line_power_singularity() {
        // ∫ s^{-1/2} e^{-s} ds = sqrt(pi)
        let spec = QuadratureSpec::default();
        let r = half_line(&|s: f64| s.powf(-0.5) * (-s).exp(), 1.0, &spec).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn half_line_algebraic_tail() {
        // ∫ 1/(1+s)^2 ds = 1
        let spec = QuadratureSpec::default();
        let r = half_line(&|s: f64| 1.0 / ((1.0 + s) * (1.0 + s)), 1.0, &spec).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn complex_integrand() {
        // ∫_0^∞ e^{-(1+i)s} ds = 1/(1+i)
        let spec = QuadratureSpec::default();
        let z = Complex64::new(1.0, 1.0);
        let r = half_line(&|s: f64| (-z * s).exp(), 1.0, &spec).unwrap();
        let want = Complex64::new(1.0, 0.0) / z;
        assert!((r.value - want).norm() < 1e-11);
    }

    #[test]
    fn nan_integrand_fails() {
        let spec = QuadratureSpec::default();
        assert!(half_line(&|_s: f64| f64::NAN, 1.0, &spec).is_err());
    }
}
