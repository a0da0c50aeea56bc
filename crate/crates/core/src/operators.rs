//! Dense operators on truncated Fourier modes −K..K: quantization of symbols,
//! full-symbol extraction, composition, windowed traces and smoothing-profile
//! checks.
//!
//! Quantization follows the one-sided (left) convention: column k of Op(a)
//! holds the Fourier coefficients of x ↦ a(x, k), so entry (j, k) is the
//! (j−k)-th coefficient. On band-limited data the full symbol
//! a(x, k) = Σ_j entries(j, k) e^{i(j−k)x} inverts this exactly at the grid
//! points for interior columns, which is the module's cornerstone round trip.

use crate::symbols::Symbol;
use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Arc;

/// x-grid size used by quantization and full-symbol extraction. Half of it
/// bounds the representable bandwidth in x.
pub const QUANT_X_GRID: usize = 256;

/// Dense complex matrix acting on Fourier modes −K..K.
#[derive(Clone)]
pub struct OperatorMatrix {
    pub data: Array2<Complex64>,
    mode_cut: usize,
}

impl OperatorMatrix {
    pub fn zeros(mode_cut: usize) -> Self {
        let n = 2 * mode_cut + 1;
        OperatorMatrix {
            data: Array2::zeros((n, n)),
            mode_cut,
        }
    }

    pub fn identity(mode_cut: usize) -> Self {
        let mut m = OperatorMatrix::zeros(mode_cut);
        for i in 0..m.dim() {
            m.data[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn mode_cut(&self) -> usize {
        self.mode_cut
    }

    pub fn dim(&self) -> usize {
        2 * self.mode_cut + 1
    }

    /// Entry by mode indices j, k ∈ [−K, K].
    pub fn entry(&self, j: i64, k: i64) -> Complex64 {
        let off = self.mode_cut as i64;
        self.data[((j + off) as usize, (k + off) as usize)]
    }

    pub fn set_entry(&mut self, j: i64, k: i64, v: Complex64) {
        let off = self.mode_cut as i64;
        self.data[((j + off) as usize, (k + off) as usize)] = v;
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let mut out = OperatorMatrix::zeros(self.mode_cut);
        for i in 0..n {
            for j in 0..n {
                out.data[(i, j)] = self.data[(j, i)].conj();
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.mode_cut, rhs.mode_cut);
        OperatorMatrix {
            data: &self.data + &rhs.data,
            mode_cut: self.mode_cut,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.mode_cut, rhs.mode_cut);
        OperatorMatrix {
            data: &self.data - &rhs.data,
            mode_cut: self.mode_cut,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        OperatorMatrix {
            data: self.data.mapv(|v| v * s),
            mode_cut: self.mode_cut,
        }
    }

    /// Dense product, parallel over rows.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.mode_cut, rhs.mode_cut);
        let n = self.dim();
        let mut out = OperatorMatrix::zeros(self.mode_cut);
        let a = &self.data;
        let b = &rhs.data;
        out.data
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut row)| {
                for l in 0..n {
                    let ail = a[(i, l)];
                    if ail.norm_sqr() == 0.0 {
                        continue;
                    }
                    let brow = b.row(l);
                    for (c, &bv) in row.iter_mut().zip(brow.iter()) {
                        *c += ail * bv;
                    }
                }
            });
        out
    }

    pub fn trace_full(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    /// Trace over the trusted window |k| ≤ w: the truncated realization of
    /// the trace on the smoothing ideal (the outer band carries edge
    /// artifacts of the mode cut).
    pub fn trace_window(&self, w: usize) -> Complex64 {
        assert!(w <= self.mode_cut);
        let k = self.mode_cut as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in -(w as i64)..=(w as i64) {
            acc += self.data[((j + k) as usize, (j + k) as usize)];
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Spectral-norm estimate by power iteration on A*A.
    pub fn operator_norm_estimate(&self, iterations: usize) -> f64 {
        let n = self.dim();
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let norm = |u: &[Complex64]| u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        let mut lambda = 0.0;
        for _ in 0..iterations {
            // w = A v, u = A* w
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    acc += self.data[(i, l)] * v[l];
                }
                w[i] = acc;
            }
            let mut u = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    acc += self.data[(l, i)].conj() * w[l];
                }
                u[i] = acc;
            }
            lambda = norm(&u);
            if lambda == 0.0 {
                return 0.0;
            }
            u.iter_mut().for_each(|z| *z /= lambda);
            v = u;
        }
        lambda.sqrt()
    }

    /// Largest entry magnitude over modes with max(|j|, |k|) in the given
    /// range (both within the window). Used for smoothing-profile checks.
    pub fn max_entry_in_shell(&self, lo: usize, hi: usize) -> f64 {
        let k = self.mode_cut as i64;
        let mut sup: f64 = 0.0;
        for j in -(hi as i64)..=(hi as i64) {
            for l in -(hi as i64)..=(hi as i64) {
                let r = j.unsigned_abs().max(l.unsigned_abs()) as usize;
                if r < lo || r > hi {
                    continue;
                }
                sup = sup.max(self.data[((j + k) as usize, (l + k) as usize)].norm());
            }
        }
        sup
    }
}

/// Quantize a symbol: entry (j, k) is the (j−k)-th Fourier coefficient of
/// x ↦ a(x, k), computed on the fixed x grid.
pub fn quantize(a: &Symbol, mode_cut: usize) -> OperatorMatrix {
    let g = QUANT_X_GRID;
    let n = 2 * mode_cut + 1;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(g);
    let k_off = mode_cut as i64;
    let mut out = OperatorMatrix::zeros(mode_cut);
    let columns: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map_init(
            || fft.clone(),
            |fft, col| {
                let k = col as i64 - k_off;
                let mut buf: Vec<Complex64> = (0..g)
                    .map(|i| a.eval(2.0 * PI * i as f64 / g as f64, k as f64))
                    .collect();
                fft.process(&mut buf);
                let inv_g = 1.0 / g as f64;
                let mut column = vec![Complex64::new(0.0, 0.0); n];
                for (row, slot) in column.iter_mut().enumerate() {
                    let j = row as i64 - k_off;
                    let m = j - k;
                    if m.unsigned_abs() as usize >= g / 2 {
                        continue;
                    }
                    let bin = m.rem_euclid(g as i64) as usize;
                    *slot = buf[bin] * inv_g;
                }
                column
            },
        )
        .collect();
    for (col, column) in columns.into_iter().enumerate() {
        for (row, v) in column.into_iter().enumerate() {
            out.data[(row, col)] = v;
        }
    }
    out
}

/// Full symbol tabulated on the x grid × mode lattice: column k holds
/// a(x_i, k) = Σ_j entries(j, k) e^{i(j−k)x_i}; exact at grid points.
pub fn full_symbol(p: &OperatorMatrix) -> Array2<Complex64> {
    let g = QUANT_X_GRID;
    let n = p.dim();
    let k_off = p.mode_cut() as i64;
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(g);
    let columns: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map_init(
            || ifft.clone(),
            |ifft, col| {
                let k = col as i64 - k_off;
                let mut bins = vec![Complex64::new(0.0, 0.0); g];
                for row in 0..n {
                    let j = row as i64 - k_off;
                    let m = (j - k).rem_euclid(g as i64) as usize;
                    bins[m] += p.data[(row, col)];
                }
                // unnormalized inverse transform is exactly the synthesis sum
                ifft.process(&mut bins);
                bins
            },
        )
        .collect();
    let mut out = Array2::zeros((g, n));
    for (col, column) in columns.into_iter().enumerate() {
        for (i, v) in column.into_iter().enumerate() {
            out[(i, col)] = v;
        }
    }
    out
}

/// One Newton–Schulz polish step X ← X(3I − X*X)/2; contracts the almost
/// unitary defect quadratically near the identity.
pub fn newton_schulz_step(x: &OperatorMatrix) -> OperatorMatrix {
    let xtx = x.adjoint().matmul(x);
    let three_minus = OperatorMatrix::identity(x.mode_cut())
        .scale(Complex64::new(3.0, 0.0))
        .sub(&xtx);
    x.matmul(&three_minus).scale(Complex64::new(0.5, 0.0))
}

/// Random smoothing matrix: entries decay exponentially away from the mode
/// origin; rescaled to the requested operator-norm bound via Frobenius.
pub fn random_smoothing<R: Rng>(rng: &mut R, mode_cut: usize, norm_bound: f64) -> OperatorMatrix {
    let mut m = OperatorMatrix::zeros(mode_cut);
    let k = mode_cut as i64;
    for j in -k..=k {
        for l in -k..=k {
            let decay = (-((j.abs() + l.abs()) as f64) / 4.0).exp();
            if decay < 1e-14 {
                continue;
            }
            let re = rng.gen_range(-1.0..1.0);
            let im = rng.gen_range(-1.0..1.0);
            m.set_entry(j, l, Complex64::new(re, im) * decay);
        }
    }
    let f = m.frobenius_norm();
    if f > 0.0 {
        m = m.scale(Complex64::new(norm_bound / f, 0.0));
    }
    m
}

/// Shared FFT planner handle for callers that batch many transforms.
pub fn plan_pair(len: usize) -> (Arc<dyn rustfft::Fft<f64>>, Arc<dyn rustfft::Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (
        planner.plan_fft_forward(len),
        planner.plan_fft_inverse(len),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantize_constant_is_identity() {
        let one = Symbol::one();
        let p = quantize(&one, 8);
        let id = OperatorMatrix::identity(8);
        assert!(p.sub(&id).frobenius_norm() < 1e-12);
    }

    #[test]
    fn quantize_winding_is_shift() {
        let b = Symbol::winding(1, false);
        let p = quantize(&b, 8);
        // e^{ix}: mode k ↦ mode k+1
        for k in -8i64..=7 {
            assert_abs_diff_eq!(p.entry(k + 1, k).re, 1.0, epsilon = 1e-12);
        }
        for k in -8i64..=8 {
            assert_abs_diff_eq!(p.entry(k, k).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quantize_multiplier_is_diagonal() {
        let a = Symbol::parse("xi", 1.0, false).unwrap();
        let p = quantize(&a, 6);
        for k in -6i64..=6 {
            assert_abs_diff_eq!(p.entry(k, k).re, k as f64, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.entry(1, 0).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn full_symbol_roundtrip_exact_on_interior() {
        // band-limited random-ish symbol
        let a = Symbol::parse(
            "(2 + cos(x) + 0.5*sin(3*x)) * atan(xi) + exp(i*2*x) * chi(xi)",
            0.0,
            false,
        )
        .unwrap();
        let kcut = 24;
        let p = quantize(&a, kcut);
        let tab = full_symbol(&p);
        let g = QUANT_X_GRID;
        for col in 0..p.dim() {
            let k = col as i64 - kcut as i64;
            if k.unsigned_abs() as usize > kcut - 8 {
                continue; // interior columns only
            }
            for i in (0..g).step_by(17) {
                let x = 2.0 * PI * i as f64 / g as f64;
                let want = a.eval(x, k as f64);
                let got = tab[(i, col)];
                assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-12);
                assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn matmul_matches_naive() {
        let a = Symbol::winding(1, false);
        let b = Symbol::parse("xi", 1.0, false).unwrap();
        let pa = quantize(&a, 5);
        let pb = quantize(&b, 5);
        let c = pa.matmul(&pb);
        // Op(e^{ix})·Op(ξ): (j,k) entry is δ_{j,k+1}·k
        for k in -5i64..=4 {
            assert_abs_diff_eq!(c.entry(k + 1, k).re, k as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn windowed_trace_and_shells() {
        let mut m = OperatorMatrix::zeros(6);
        m.set_entry(0, 0, Complex64::new(2.0, 0.0));
        m.set_entry(5, 5, Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!(m.trace_window(3).re, 2.0, epsilon = 0.0);
        assert_abs_diff_eq!(m.trace_full().re, 3.0, epsilon = 0.0);
        assert_abs_diff_eq!(m.max_entry_in_shell(1, 4), 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(m.max_entry_in_shell(5, 6), 1.0, epsilon = 0.0);
    }

    #[test]
    fn newton_schulz_contracts_defect() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let id = OperatorMatrix::identity(16);
        let pert = random_smoothing(&mut rng, 16, 0.05);
        let x = id.add(&pert);
        let defect =
            |m: &OperatorMatrix| m.adjoint().matmul(m).sub(&id).frobenius_norm();
        let d0 = defect(&x);
        let x1 = newton_schulz_step(&x);
        let d1 = defect(&x1);
        assert!(d1 < d0 * d0 * 10.0 + 1e-12, "d0 = {d0}, d1 = {d1}");
    }

    #[test]
    fn operator_norm_close_to_frobenius_for_rank_one() {
        let mut m = OperatorMatrix::zeros(4);
        m.set_entry(0, 2, Complex64::new(3.0, 0.0));
        let est = m.operator_norm_estimate(30);
        assert_abs_diff_eq!(est, 3.0, epsilon = 1e-8);
    }
}
