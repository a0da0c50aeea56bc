//! Truncated formal power series in ħ over a generic coefficient space.
//!
//! One expansion engine serves three clients: scalar expansions, grid-sampled
//! symbol expansions, and matrix-valued expansions. Laurent-type series with a
//! finite pole order (min power ħ^{-n}) are supported for the regularized
//! trace asymptotics.

use num_complex::Complex64;
use thiserror::Error;

/// A value space in which series coefficients live: complex-linear with a
/// norm used for residual estimates.
pub trait Coefficient: Clone {
    fn add(&self, rhs: &Self) -> Self;
    fn scale(&self, s: Complex64) -> Self;
    fn norm(&self) -> f64;

    fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(Complex64::new(-1.0, 0.0)))
    }
    fn zero_like(&self) -> Self {
        self.scale(Complex64::new(0.0, 0.0))
    }
}

/// Coefficient spaces that also support multiplication (Cauchy products).
pub trait CoefficientMul: Coefficient {
    fn mul(&self, rhs: &Self) -> Self;
}

impl Coefficient for Complex64 {
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn scale(&self, s: Complex64) -> Self {
        self * s
    }
    fn norm(&self) -> f64 {
        num_complex::Complex::norm(*self)
    }
}

impl CoefficientMul for Complex64 {
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
}

impl Coefficient for ndarray::Array1<Complex64> {
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn scale(&self, s: Complex64) -> Self {
        self.mapv(|v| v * s)
    }
    fn norm(&self) -> f64 {
        self.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl CoefficientMul for ndarray::Array1<Complex64> {
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
}

impl Coefficient for ndarray::Array2<Complex64> {
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn scale(&self, s: Complex64) -> Self {
        self.mapv(|v| v * s)
    }
    fn norm(&self) -> f64 {
        self.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl CoefficientMul for ndarray::Array2<Complex64> {
    /// Pointwise product (grid functions, not matrix composition).
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
}

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("coefficient count {got} does not match powers {min_power}..={trunc_order}")]
    ShapeMismatch {
        got: usize,
        min_power: i32,
        trunc_order: i32,
    },
    #[error("need at least {need} distinct samples for order-{order} extrapolation, got {got}")]
    NotEnoughSamples { need: usize, got: usize, order: usize },
    #[error("extrapolation system ill-conditioned: cond ≈ {cond:.3e} exceeds {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },
    #[error("sample ħ values must be distinct and lie in (0, ħ_max]")]
    BadSamples,
}

/// Truncated series Σ_{k=min_power}^{trunc_order} c_k ħ^k with explicit
/// truncation order. `coeffs[j]` holds the coefficient of ħ^{min_power + j}.
#[derive(Debug, Clone)]
pub struct FormalSeries<V: Coefficient> {
    coeffs: Vec<V>,
    min_power: i32,
    trunc_order: i32,
}

impl<V: Coefficient> FormalSeries<V> {
    pub fn new(min_power: i32, trunc_order: i32, coeffs: Vec<V>) -> Result<Self, SeriesError> {
        let want = (trunc_order - min_power + 1).max(0) as usize;
        if coeffs.is_empty() || coeffs.len() != want {
            return Err(SeriesError::ShapeMismatch {
                got: coeffs.len(),
                min_power,
                trunc_order,
            });
        }
        Ok(FormalSeries {
            coeffs,
            min_power,
            trunc_order,
        })
    }

    /// Ordinary power series starting at ħ^0.
    pub fn from_coeffs(coeffs: Vec<V>) -> Self {
        assert!(!coeffs.is_empty());
        let n = coeffs.len() as i32 - 1;
        FormalSeries {
            coeffs,
            min_power: 0,
            trunc_order: n,
        }
    }

    pub fn constant(value: V, trunc_order: i32) -> Self {
        assert!(trunc_order >= 0);
        let mut coeffs = vec![value.zero_like(); (trunc_order + 1) as usize];
        coeffs[0] = value;
        FormalSeries {
            coeffs,
            min_power: 0,
            trunc_order,
        }
    }

    pub fn min_power(&self) -> i32 {
        self.min_power
    }

    pub fn trunc_order(&self) -> i32 {
        self.trunc_order
    }

    /// Coefficient of ħ^k; zero below min_power, `None` above the truncation.
    pub fn coeff(&self, k: i32) -> Option<V> {
        if k > self.trunc_order {
            return None;
        }
        if k < self.min_power {
            return Some(self.coeffs[0].zero_like());
        }
        Some(self.coeffs[(k - self.min_power) as usize].clone())
    }

    pub fn coeffs(&self) -> &[V] {
        &self.coeffs
    }

    pub fn map<W: Coefficient>(&self, f: impl Fn(&V) -> W) -> FormalSeries<W> {
        FormalSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
            min_power: self.min_power,
            trunc_order: self.trunc_order,
        }
    }

    /// Term-wise sum aligned by power; truncation order is the min of the two.
    pub fn add(&self, rhs: &Self) -> Self {
        let min_power = self.min_power.min(rhs.min_power);
        let trunc = self.trunc_order.min(rhs.trunc_order);
        let zero = self.coeffs[0].zero_like();
        let mut coeffs = Vec::with_capacity((trunc - min_power + 1) as usize);
        for k in min_power..=trunc {
            let a = self.coeff(k).unwrap_or_else(|| zero.zero_like());
            let b = rhs.coeff(k).unwrap_or_else(|| zero.zero_like());
            coeffs.push(a.add(&b));
        }
        FormalSeries {
            coeffs,
            min_power,
            trunc_order: trunc,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        FormalSeries {
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
            min_power: self.min_power,
            trunc_order: self.trunc_order,
        }
    }

    /// Largest coefficient norm, useful as a residual summary.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl<V: CoefficientMul> FormalSeries<V> {
    /// Cauchy product. The result is truncated where the factors stop carrying
    /// information: min(Na + mb, Nb + ma).
    pub fn mul(&self, rhs: &Self) -> Self {
        let min_power = self.min_power + rhs.min_power;
        let trunc = (self.trunc_order + rhs.min_power).min(rhs.trunc_order + self.min_power);
        let zero = self.coeffs[0].zero_like();
        let n = (trunc - min_power + 1) as usize;
        let mut coeffs = vec![zero.zero_like(); n];
        for (ia, a) in self.coeffs.iter().enumerate() {
            let ka = self.min_power + ia as i32;
            for (ib, b) in rhs.coeffs.iter().enumerate() {
                let k = ka + rhs.min_power + ib as i32;
                if k > trunc {
                    break;
                }
                let idx = (k - min_power) as usize;
                coeffs[idx] = coeffs[idx].add(&a.mul(b));
            }
        }
        FormalSeries {
            coeffs,
            min_power,
            trunc_order: trunc,
        }
    }
}

/// Result of fitting an asymptotic expansion to ħ-samples.
#[derive(Debug, Clone)]
pub struct Extrapolation<V: Coefficient> {
    pub series: FormalSeries<V>,
    /// Max norm of `sample − fit` over the sample set.
    pub residual: f64,
    /// 1-norm condition estimate of the normal equations.
    pub condition: f64,
}

/// Condition-number guard for the Vandermonde fit.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Fit Σ_{k=0}^{order} c_k ħ^k to the samples by least squares on a scaled
/// Vandermonde system. Needs at least `order + 2` distinct samples so the
/// residual estimate is meaningful.
pub fn extrapolate_series<V: Coefficient>(
    samples: &[(f64, V)],
    order: usize,
) -> Result<Extrapolation<V>, SeriesError> {
    extrapolate_laurent(samples, 0, order as i32)
}

/// Laurent variant: fit Σ_{k=min_power}^{trunc_order} c_k ħ^k by multiplying
/// samples through by ħ^{-min_power} and fitting an ordinary polynomial.
pub fn extrapolate_laurent<V: Coefficient>(
    samples: &[(f64, V)],
    min_power: i32,
    trunc_order: i32,
) -> Result<Extrapolation<V>, SeriesError> {
    let order = (trunc_order - min_power) as usize;
    let need = order + 2;
    if samples.len() < need {
        return Err(SeriesError::NotEnoughSamples {
            need,
            got: samples.len(),
            order,
        });
    }
    let hmax = samples.iter().map(|(h, _)| *h).fold(0.0, f64::max);
    if hmax <= 0.0 {
        return Err(SeriesError::BadSamples);
    }
    for (i, (h, _)) in samples.iter().enumerate() {
        if *h <= 0.0 {
            return Err(SeriesError::BadSamples);
        }
        if samples[..i].iter().any(|(h2, _)| h2 == h) {
            return Err(SeriesError::BadSamples);
        }
    }

    // Least squares on the scaled Vandermonde V[i][k] = (h_i/hmax)^k via
    // Householder QR; the normal equations would square the conditioning and
    // contaminate the high coefficients.
    let m = order + 1;
    let s = samples.len();
    let shifted: Vec<(f64, V)> = samples
        .iter()
        .map(|(h, v)| {
            let factor = h.powi(-min_power);
            (*h, v.scale(Complex64::new(factor, 0.0)))
        })
        .collect();
    let mut a = vec![vec![0.0f64; m]; s];
    let mut y: Vec<V> = shifted.iter().map(|(_, v)| v.clone()).collect();
    for (i, (h, _)) in shifted.iter().enumerate() {
        let t = h / hmax;
        a[i][0] = 1.0;
        for k in 1..m {
            a[i][k] = a[i][k - 1] * t;
        }
    }

    // Householder reflections applied to both A and the V-valued RHS
    for col in 0..m {
        let mut alpha = 0.0f64;
        for row in col..s {
            alpha += a[row][col] * a[row][col];
        }
        let alpha = alpha.sqrt() * if a[col][col] >= 0.0 { -1.0 } else { 1.0 };
        if alpha == 0.0 {
            return Err(SeriesError::IllConditioned {
                cond: f64::INFINITY,
                limit: CONDITION_LIMIT,
            });
        }
        let mut v = vec![0.0f64; s];
        v[col] = a[col][col] - alpha;
        for row in (col + 1)..s {
            v[row] = a[row][col];
        }
        let vnorm2: f64 = v[col..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for k in col..m {
            let dot: f64 = (col..s).map(|r| v[r] * a[r][k]).sum();
            let f = 2.0 * dot / vnorm2;
            for r in col..s {
                a[r][k] -= f * v[r];
            }
        }
        let mut dot_v = y[0].zero_like();
        for r in col..s {
            dot_v = dot_v.add(&y[r].scale(Complex64::new(v[r], 0.0)));
        }
        for r in col..s {
            let f = 2.0 * v[r] / vnorm2;
            y[r] = y[r].sub(&dot_v.scale(Complex64::new(f, 0.0)));
        }
    }

    // condition estimate from the triangular factor (squared to approximate
    // the normal-equation conditioning the guard is calibrated against)
    let r_cond = triangular_condition(&a, m);
    let cond = r_cond * r_cond;
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(SeriesError::IllConditioned {
            cond,
            limit: CONDITION_LIMIT,
        });
    }

    // back substitution on R x = (Qᵀ y)_top
    let mut scaled_coeffs: Vec<V> = vec![y[0].zero_like(); m];
    for col in (0..m).rev() {
        let mut acc = y[col].clone();
        for k in (col + 1)..m {
            acc = acc.sub(&scaled_coeffs[k].scale(Complex64::new(a[col][k], 0.0)));
        }
        scaled_coeffs[col] = acc.scale(Complex64::new(1.0 / a[col][col], 0.0));
    }
    // undo the hmax scaling: c_k = ĉ_k / hmax^k
    let coeffs: Vec<V> = scaled_coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c.scale(Complex64::new(hmax.powi(-(k as i32)), 0.0)))
        .collect();

    let mut residual = 0.0f64;
    for (h, v) in &shifted {
        let mut fit = coeffs[0].zero_like();
        for (k, c) in coeffs.iter().enumerate() {
            fit = fit.add(&c.scale(Complex64::new(h.powi(k as i32), 0.0)));
        }
        residual = residual.max(v.sub(&fit).norm());
    }

    let series = FormalSeries {
        coeffs,
        min_power,
        trunc_order,
    };
    Ok(Extrapolation {
        series,
        residual,
        condition: cond,
    })
}

/// 1-norm condition estimate of the upper-triangular factor sitting in the
/// top rows of `a` after the QR pass.
fn triangular_condition(a: &[Vec<f64>], m: usize) -> f64 {
    let norm = |mat: &dyn Fn(usize, usize) -> f64| -> f64 {
        (0..m)
            .map(|j| (0..m).map(|i| mat(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let r = |i: usize, j: usize| if i <= j { a[i][j] } else { 0.0 };
    // invert R by back substitution, column by column
    let mut inv = vec![vec![0.0f64; m]; m];
    for j in 0..m {
        let mut col = vec![0.0f64; m];
        col[j] = 1.0;
        for i in (0..=j).rev() {
            let mut acc = col[i];
            for k in (i + 1)..=j {
                acc -= a[i][k] * inv[k][j];
            }
            if a[i][i] == 0.0 {
                return f64::INFINITY;
            }
            inv[i][j] = acc / a[i][i];
        }
    }
    let inv_norm = (0..m)
        .map(|j| (0..m).map(|i| inv[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    norm(&r) * inv_norm
}

/// The ħ sample ladder: ħ = 1/L for a fixed set of integer L. All L are kept
/// divisible by 8 so that lattice points ξ·L stay integral for ξ in steps of
/// 1/8.
#[derive(Debug, Clone, PartialEq)]
pub struct HbarLadder {
    denominators: Vec<u32>,
}

impl HbarLadder {
    pub fn new(denominators: Vec<u32>) -> Self {
        let mut d = denominators;
        d.sort_unstable();
        d.dedup();
        assert!(!d.is_empty(), "empty ħ ladder");
        HbarLadder { denominators: d }
    }

    /// Ladder used by the star-product and Egorov experiments.
    pub fn standard() -> Self {
        HbarLadder::new(vec![16, 24, 32, 40, 48, 64, 80, 96, 128])
    }

    /// Coarser ladder for trace asymptotics, where the scaled support must
    /// stay well inside the mode cut.
    pub fn coarse() -> Self {
        HbarLadder::new(vec![8, 12, 16, 24, 32, 48, 64])
    }

    pub fn values(&self) -> Vec<f64> {
        self.denominators.iter().map(|&l| 1.0 / l as f64).collect()
    }

    pub fn denominators(&self) -> &[u32] {
        &self.denominators
    }

    pub fn len(&self) -> usize {
        self.denominators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.denominators.is_empty()
    }

    pub fn hbar_max(&self) -> f64 {
        1.0 / self.denominators[0] as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn add_aligns_powers() {
        // (ħ⁻¹ + 1) + (1) = ħ⁻¹ + 2
        let a = FormalSeries::new(-1, 0, vec![c(1.0), c(1.0)]).unwrap();
        let b = FormalSeries::new(0, 0, vec![c(1.0)]).unwrap();
        let s = a.add(&b);
        assert_eq!(s.min_power(), -1);
        assert_eq!(s.trunc_order(), 0);
        assert_eq!(s.coeff(-1).unwrap(), c(1.0));
        assert_eq!(s.coeff(0).unwrap(), c(2.0));
    }

    #[test]
    fn add_identity_and_termwise() {
        // (1 + ħ) + 2ħ = 1 + 3ħ
        let a = FormalSeries::from_coeffs(vec![c(1.0), c(1.0)]);
        let b = FormalSeries::from_coeffs(vec![c(0.0), c(2.0)]);
        let s = a.add(&b);
        assert_eq!(s.coeff(0).unwrap(), c(1.0));
        assert_eq!(s.coeff(1).unwrap(), c(3.0));
        // a + 0 = a
        let z = FormalSeries::from_coeffs(vec![c(0.0), c(0.0)]);
        let s2 = a.add(&z);
        assert_eq!(s2.coeff(0).unwrap(), c(1.0));
        assert_eq!(s2.coeff(1).unwrap(), c(1.0));
    }

    #[test]
    fn mul_truncates_at_min_order() {
        // (1 + ħ)(1 − ħ) at N = 2 → 1 − ħ²
        let a = FormalSeries::new(0, 2, vec![c(1.0), c(1.0), c(0.0)]).unwrap();
        let b = FormalSeries::new(0, 2, vec![c(1.0), c(-1.0), c(0.0)]).unwrap();
        let p = a.mul(&b);
        assert_eq!(p.trunc_order(), 2);
        assert_eq!(p.coeff(0).unwrap(), c(1.0));
        assert_eq!(p.coeff(1).unwrap(), c(0.0));
        assert_eq!(p.coeff(2).unwrap(), c(-1.0));
    }

    #[test]
    fn mul_by_unit_and_power_arithmetic() {
        let a = FormalSeries::new(0, 1, vec![c(2.0), c(5.0)]).unwrap();
        let one = FormalSeries::new(0, 1, vec![c(1.0), c(0.0)]).unwrap();
        let p = a.mul(&one);
        assert_eq!(p.coeff(0).unwrap(), c(2.0));
        assert_eq!(p.coeff(1).unwrap(), c(5.0));

        // ħ⁻¹ · ħ = 1 (padded representations)
        let hinv = FormalSeries::new(-1, 0, vec![c(1.0), c(0.0)]).unwrap();
        let h = FormalSeries::new(0, 1, vec![c(0.0), c(1.0)]).unwrap();
        let q = hinv.mul(&h);
        assert_eq!(q.coeff(0).unwrap(), c(1.0));
        assert_eq!(q.coeff(-1).unwrap(), c(0.0));
    }

    #[test]
    fn associativity_exact() {
        let a = FormalSeries::from_coeffs(vec![c(1.0), c(2.0), c(-1.0), c(0.5)]);
        let b = FormalSeries::from_coeffs(vec![c(-2.0), c(1.0), c(3.0), c(0.0)]);
        let d = FormalSeries::from_coeffs(vec![c(0.5), c(0.0), c(1.0), c(-2.0)]);
        let left_add = a.add(&b).add(&d);
        let right_add = a.add(&b.add(&d));
        for k in 0..=3 {
            assert_eq!(left_add.coeff(k).unwrap(), right_add.coeff(k).unwrap());
        }
        let left = a.mul(&b).mul(&d);
        let right = a.mul(&b.mul(&d));
        assert_eq!(left.trunc_order(), right.trunc_order());
        for k in 0..=left.trunc_order() {
            assert_abs_diff_eq!(
                left.coeff(k).unwrap().re,
                right.coeff(k).unwrap().re,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn extrapolate_exact_polynomial() {
        // f(ħ) = 3 + 2ħ sampled on {1/8, 1/16, 1/32, 1/64}, N = 1
        let samples: Vec<(f64, Complex64)> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|l| {
                let h = 1.0 / l;
                (h, c(3.0 + 2.0 * h))
            })
            .collect();
        let fit = extrapolate_series(&samples, 1).unwrap();
        assert_abs_diff_eq!(fit.series.coeff(0).unwrap().re, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.series.coeff(1).unwrap().re, 2.0, epsilon = 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn extrapolate_sin_matches_taylor_oracle() {
        // independent oracle: Taylor coefficients of sin via the factorial series
        let oracle = |k: u32| -> f64 {
            if k % 2 == 0 {
                0.0
            } else {
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let mut fact = 1.0f64;
                for j in 2..=k {
                    fact *= j as f64;
                }
                sign / fact
            }
        };
        let samples: Vec<(f64, Complex64)> = [64.0, 80.0, 96.0, 128.0, 160.0, 192.0, 256.0]
            .iter()
            .map(|l: &f64| {
                let h = 1.0 / l;
                (h, c(h.sin()))
            })
            .collect();
        // fit two orders past the target so the ħ⁵ remainder of sin does not
        // bleed into the reported coefficients
        let fit = extrapolate_series(&samples, 5).unwrap();
        for k in 0..=3 {
            assert_abs_diff_eq!(
                fit.series.coeff(k as i32).unwrap().re,
                oracle(k),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn extrapolate_constant_samples() {
        let samples: Vec<(f64, Complex64)> = [8.0, 12.0, 16.0, 24.0, 32.0]
            .iter()
            .map(|l| (1.0 / l, c(7.5)))
            .collect();
        let fit = extrapolate_series(&samples, 2).unwrap();
        assert_abs_diff_eq!(fit.series.coeff(0).unwrap().re, 7.5, epsilon = 1e-12);
        for k in 1..=2 {
            assert!(fit.series.coeff(k).unwrap().norm() < 1e-9);
        }
    }

    #[test]
    fn extrapolate_needs_enough_samples() {
        let samples: Vec<(f64, Complex64)> = vec![(0.1, c(1.0)), (0.05, c(1.0))];
        assert!(matches!(
            extrapolate_series(&samples, 1),
            Err(SeriesError::NotEnoughSamples { .. })
        ));
    }

    #[test]
    fn extrapolate_rejects_duplicate_samples() {
        let samples: Vec<(f64, Complex64)> =
            vec![(0.1, c(1.0)), (0.1, c(1.0)), (0.05, c(1.0)), (0.02, c(1.0))];
        assert!(matches!(
            extrapolate_series(&samples, 1),
            Err(SeriesError::BadSamples)
        ));
    }

    #[test]
    fn laurent_fit_recovers_pole() {
        // f(ħ) = 2/ħ + 1 + 3ħ
        let samples: Vec<(f64, Complex64)> = [8.0, 12.0, 16.0, 24.0, 32.0, 48.0]
            .iter()
            .map(|l| {
                let h = 1.0 / l;
                (h, c(2.0 / h + 1.0 + 3.0 * h))
            })
            .collect();
        let fit = extrapolate_laurent(&samples, -1, 1).unwrap();
        assert_abs_diff_eq!(fit.series.coeff(-1).unwrap().re, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.series.coeff(0).unwrap().re, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.series.coeff(1).unwrap().re, 3.0, epsilon = 1e-7);
    }
}
