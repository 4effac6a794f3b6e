//! Numerical kernels for the analytical engine: the principal Lambert W
//! branch, adaptive Gauss–Kronrod quadrature on finite and semi-infinite
//! intervals, and small gamma-series helpers.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// Tolerances and budget for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-6,
            abs_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule (abscissae on [0, 1],
// symmetric). Standard QUADPACK values.
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One Gauss–Kronrod 15(7) evaluation on [a, b]: (estimate, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;

    for (j, &x) in XGK.iter().enumerate().take(7) {
        let f1 = f(center - half * x);
        let f2 = f(center + half * x);
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = kronrod * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for (j, &v) in fv.iter().enumerate().take(7) {
        resasc += WGK[j] * ((v - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let result = kronrod * half;
    resabs *= half.abs();
    resasc *= half.abs();

    // QUADPACK error rescaling: sharpen the raw |K - G| difference.
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * 1.0f64.min((200.0 * err / resasc).powf(1.5));
    }
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if resabs > tiny {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

#[derive(Debug)]
struct Segment {
    err: f64,
    seq: usize,
    a: f64,
    b: f64,
    val: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err && self.seq == other.seq
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // max-heap on error; insertion order breaks ties deterministically
        self.err
            .total_cmp(&other.err)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Adaptive integral of `f` over [a, b] to within
/// max(abs_tol, rel_tol · |result|). Deterministic for identical inputs.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a >= b || a.is_nan() || b.is_nan() {
        return Err(Error::Domain(format!("invalid interval [{a}, {b}]")));
    }
    let (val, err) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Segment {
        err,
        seq,
        a,
        b,
        val,
    });
    let mut total_val = val;
    let mut total_err = err;

    for _ in 0..spec.max_subdivisions {
        if total_err <= spec.abs_tol.max(spec.rel_tol * total_val.abs()) {
            return Ok(total_val);
        }
        let worst = heap.pop().expect("heap cannot be empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable in f64; keep its estimate
            total_err -= worst.err;
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total_val += v1 + v2 - worst.val;
        total_err += e1 + e2 - worst.err;
        seq += 1;
        heap.push(Segment {
            err: e1,
            seq,
            a: worst.a,
            b: mid,
            val: v1,
        });
        seq += 1;
        heap.push(Segment {
            err: e2,
            seq,
            a: mid,
            b: worst.b,
            val: v2,
        });
    }
    if total_err <= spec.abs_tol.max(spec.rel_tol * total_val.abs()) {
        Ok(total_val)
    } else {
        Err(Error::QuadratureNonConvergence {
            partial: total_val,
            error: total_err,
            subdivisions: spec.max_subdivisions,
        })
    }
}

/// Integral of `f` over [a, ∞) for integrands that decay at infinity.
///
/// Uses the rational substitution x = a + t/(1−t), t ∈ [0, 1); non-finite
/// integrand values in the far tail are treated as zero.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    integrate(
        |t| {
            let u = 1.0 - t;
            let x = a + t / u;
            if !x.is_finite() {
                return 0.0;
            }
            let v = f(x) / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        spec,
    )
}

const INV_E: f64 = 1.0 / std::f64::consts::E;

/// Principal branch W₀ of the Lambert W function: the solution w ≥ −1 of
/// w·eʷ = x for x ≥ −1/e.
///
/// Halley iteration from a branch-aware seed; |w·eʷ − x| ≤ 1e−12·max(1, |x|).
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E - 1e-12 {
        return Err(Error::Domain(format!(
            "lambert_w0 domain is [-1/e, inf), got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x <= -INV_E {
        return Ok(-1.0);
    }
    if x > 1e300 {
        // solve w + ln w = ln x by Newton; avoids overflow of e^w
        return Ok(log_domain_w(x.ln()));
    }

    let mut w = initial_guess(x);
    for _ in 0..40 {
        let ew = w.exp();
        let wew = w * ew;
        let res = wew - x;
        if res.abs() <= 1e-13 * x.abs().max(1.0) {
            return Ok(w);
        }
        // Halley step for f(w) = w e^w − x
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * res / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = res / denom;
        w -= step;
        if w < -1.0 {
            w = -1.0 + f64::EPSILON;
        }
    }

    // bisection fallback; the identity is monotone on w >= -1
    let (mut lo, mut hi) = if x > 0.0 {
        (0.0, x.max(2.0))
    } else {
        (-1.0, 0.0)
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() > x {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// W₀ given ln x, for arguments too large to represent. Newton on
/// g(w) = w + ln w − ln x, monotone for w > 0.
pub fn lambert_w0_of_ln(ln_x: f64) -> f64 {
    if ln_x < 690.0 {
        lambert_w0(ln_x.exp()).expect("argument is in-domain")
    } else {
        log_domain_w(ln_x)
    }
}

fn log_domain_w(ln_x: f64) -> f64 {
    let mut w = ln_x - ln_x.ln();
    for _ in 0..20 {
        let g = w + w.ln() - ln_x;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 1e-14 * w {
            break;
        }
    }
    w
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // branch-point series around x = -1/e
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    } else if x < 2.0 {
        // series around 0, one Newton polish implicit in the iteration
        x * (1.0 - x + 1.5 * x * x).max(0.1)
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// η(γ) = γ·(γ!)^(−1/γ), the sharpest exponent for which
/// (1 − e^(−ηx))^γ lower-bounds the CDF of a unit-mean gamma variable with
/// shape γ.
pub fn eta(gamma: u32) -> f64 {
    assert!(gamma >= 1, "eta requires gamma >= 1");
    let ln_fact: f64 = (2..=gamma as u64).map(|k| (k as f64).ln()).sum();
    gamma as f64 * (-ln_fact / gamma as f64).exp()
}

/// Exact binomial coefficient C(n, k) for n ≤ 64.
pub fn binomial(n: u32, k: u32) -> Result<u64> {
    if k > n || n > 64 {
        return Err(Error::Domain(format!("binomial out of range: C({n}, {k})")));
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    Ok(acc as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lambert_reference_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-12);
        assert!((lambert_w0(1.0).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-12);
        assert!((lambert_w0(-INV_E + 1e-6).unwrap() - (-0.997_670_166_272_007_9)).abs() < 1e-9);
        assert!(lambert_w0(-1.0).is_err());
    }

    #[test]
    fn lambert_identity_on_wide_grid() {
        for i in 0..=1000 {
            let x = 10f64.powf(-8.0 + 16.0 * i as f64 / 1000.0);
            let w = lambert_w0(x).unwrap();
            assert!(
                (w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0),
                "identity failed at x={x}"
            );
        }
        for i in 0..=1000 {
            let x = -INV_E + 1e-6 + (INV_E - 1e-6) * i as f64 / 1000.0;
            let w = lambert_w0(x).unwrap();
            assert!(
                (w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0),
                "identity failed at x={x}"
            );
        }
    }

    #[test]
    fn lambert_log_domain_matches_asymptotics() {
        // w + ln w = ln x must hold even when x itself overflows
        for ln_x in [400.0, 700.0, 1e4, 1e6] {
            let w = lambert_w0_of_ln(ln_x);
            assert!((w + w.ln() - ln_x).abs() < 1e-9 * ln_x);
        }
    }

    proptest! {
        #[test]
        fn lambert_is_monotone(a in -0.367f64..8.0, b in -0.367f64..8.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let wl = lambert_w0(lo).unwrap();
            let wh = lambert_w0(hi).unwrap();
            prop_assert!(wl <= wh + 1e-12);
        }

        #[test]
        fn integrate_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let spec = QuadratureSpec::default();
            let f = |x: f64| x * x;
            let g = |x: f64| (-x).exp();
            let lhs = integrate(|x| alpha * f(x) + beta * g(x), 0.0, 2.0, &spec).unwrap();
            let rhs = alpha * integrate(f, 0.0, 2.0, &spec).unwrap()
                + beta * integrate(g, 0.0, 2.0, &spec).unwrap();
            let tol = 2.0 * (spec.abs_tol + spec.rel_tol * lhs.abs()).max(spec.abs_tol);
            prop_assert!((lhs - rhs).abs() <= tol + 1e-9);
        }
    }

    #[test]
    fn integrate_rejects_reversed_intervals() {
        let spec = QuadratureSpec::default();
        assert!(integrate(|x| x, 1.0, 0.0, &spec).is_err());
        assert_eq!(integrate(|x| x, 2.0, 2.0, &spec).unwrap(), 0.0);
    }

    #[test]
    fn integrate_polynomial_exactly() {
        let spec = QuadratureSpec::default();
        let v = integrate(|x| x * x, 0.0, 1.0, &spec).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn integrate_exponential() {
        let spec = QuadratureSpec::default();
        let v = integrate(|x| (-x).exp(), 0.0, 50.0, &spec).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integrate_rayleigh_density_normalizes() {
        let spec = QuadratureSpec::default();
        let lam = 5e-5;
        let v = integrate_semi_infinite(
            |x| 2.0 * std::f64::consts::PI * lam * x * (-std::f64::consts::PI * lam * x * x).exp(),
            0.0,
            &spec,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn semi_infinite_examples() {
        let spec = QuadratureSpec::default();
        let v = integrate_semi_infinite(|x| (-x).exp(), 0.0, &spec).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        let v = integrate_semi_infinite(|x| x * (-x * x).exp(), 0.0, &spec).unwrap();
        assert!((v - 0.5).abs() < 1e-6);
    }

    #[test]
    fn semi_infinite_splits_at_interior_point() {
        let spec = QuadratureSpec::default();
        let f = |x: f64| (x * x + 1.0).recip() * (-0.1 * x).exp();
        let whole = integrate_semi_infinite(f, 0.0, &spec).unwrap();
        let head = integrate(f, 0.0, 3.0, &spec).unwrap();
        let tail = integrate_semi_infinite(f, 3.0, &spec).unwrap();
        let tol = 2.0 * (spec.abs_tol + spec.rel_tol * whole.abs());
        assert!((head + tail - whole).abs() <= tol);
    }

    #[test]
    fn quadrature_budget_error_carries_partial() {
        let spec = QuadratureSpec {
            rel_tol: 1e-14,
            abs_tol: 1e-300,
            max_subdivisions: 3,
        };
        // highly oscillatory; cannot converge in 3 subdivisions
        let r = integrate(|x| (50.0 * x).sin(), 0.0, 10.0, &spec);
        match r {
            Err(Error::QuadratureNonConvergence { subdivisions, .. }) => {
                assert_eq!(subdivisions, 3)
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn eta_reference_values() {
        assert_eq!(eta(1), 1.0);
        assert!((eta(3) - 1.650_963_624_447_313).abs() < 1e-12);
        assert!((eta(10) - 2.208_125_213_206_009).abs() < 1e-12);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(3, 2).unwrap(), 3);
        assert_eq!(binomial(10, 5).unwrap(), 252);
        assert_eq!(binomial(0, 0).unwrap(), 1);
        assert_eq!(binomial(64, 32).unwrap(), 1_832_624_140_942_590_534);
        assert!(binomial(65, 1).is_err());
        assert!(binomial(3, 4).is_err());
    }
}
