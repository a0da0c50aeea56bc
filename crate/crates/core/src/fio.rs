//! Elliptic Fourier integral operators on the circle, built two ways:
//! clutched half-density pullbacks on the two Hardy components, and time-1
//! maps of quantized one-homogeneous Hamiltonian flows. Conjugation by these
//! operators realizes the quantized canonical transformation whose expansion
//! is probed order by order in ħ.

use crate::operators::{newton_schulz_step, quantize, OperatorMatrix};
use crate::series::HbarLadder;
use crate::star::{extrapolate_operator_symbols, StarError, StarExpansion, StarGrid};
use crate::symbols::Symbol;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use thiserror::Error;

/// x-grid used for building pullback columns; large enough to hold the
/// frequency spread k·(g⁻¹)' with spectral headroom at K = 256.
pub const FIO_X_GRID: usize = 2048;

#[derive(Debug, Error)]
pub enum FioError {
    #[error("amplitude is not elliptic: min |b| = {0:.3e} on the grid")]
    NotElliptic(f64),
    #[error("diffeomorphism is not orientation-preserving: g' reaches {0:.3e}")]
    NotOrientationPreserving(f64),
    #[error("ODE propagator unitarity defect {defect:.3e} exceeds {tol:.1e}")]
    PropagatorNotUnitary { defect: f64, tol: f64 },
    #[error(transparent)]
    Symbol(#[from] crate::symbols::ParseError),
}

/// Orientation-preserving circle diffeomorphism stored as the Fourier series
/// of its displacement g(x) − x.
#[derive(Debug, Clone)]
pub struct CircleDiffeo {
    disp: Vec<(i32, Complex64)>,
}

impl CircleDiffeo {
    pub fn identity() -> Self {
        CircleDiffeo { disp: Vec::new() }
    }

    /// g(x) = x + ε sin(x + φ₀); a diffeomorphism for |ε| < 1.
    pub fn parametric(eps: f64, phase: f64) -> Self {
        assert!(eps.abs() < 1.0, "|eps| must be < 1");
        if eps == 0.0 {
            return CircleDiffeo::identity();
        }
        // ε sin(x+φ) = (ε/2i) e^{iφ}e^{ix} − (ε/2i) e^{−iφ}e^{−ix}
        let half = Complex64::new(0.0, -eps / 2.0);
        let e_pos = half * Complex64::from_polar(1.0, phase);
        let e_neg = -half * Complex64::from_polar(1.0, -phase);
        CircleDiffeo {
            disp: vec![(1, e_pos), (-1, e_neg)],
        }
    }

    /// Fit a diffeomorphism from displacement samples on a uniform grid.
    pub fn from_displacement_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        let mut disp = Vec::new();
        for (bin, c) in buf.iter().enumerate() {
            let m = if bin <= n / 2 {
                bin as i32
            } else {
                bin as i32 - n as i32
            };
            let coeff = c / n as f64;
            if coeff.norm() > 1e-13 {
                disp.push((m, coeff));
            }
        }
        CircleDiffeo { disp }
    }

    pub fn is_identity(&self) -> bool {
        self.disp.iter().all(|(_, c)| c.norm() < 1e-12)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(m, c) in &self.disp {
            acc += c * Complex64::from_polar(1.0, m as f64 * x);
        }
        x + acc.re
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(m, c) in &self.disp {
            acc += c * Complex64::new(0.0, m as f64) * Complex64::from_polar(1.0, m as f64 * x);
        }
        1.0 + acc.re
    }

    /// Inverse by Newton iteration (monotone map, 1-periodic displacement).
    pub fn inverse(&self, y: f64) -> f64 {
        let mut x = y;
        for _ in 0..60 {
            let f = self.eval(x) - y;
            if f.abs() < 1e-14 {
                break;
            }
            x -= f / self.deriv(x);
        }
        x
    }

    pub fn min_deriv(&self, grid: usize) -> f64 {
        (0..grid)
            .map(|i| self.deriv(2.0 * PI * i as f64 / grid as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_distance_to(&self, other: &CircleDiffeo, grid: usize) -> f64 {
        (0..grid)
            .map(|i| {
                let x = 2.0 * PI * i as f64 / grid as f64;
                (self.eval(x) - other.eval(x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Homogeneous lift data: the contact map acts as (x, ξ) ↦ (g_±(x), ξ/g_±'(x))
/// on the two components ±ξ > 0.
#[derive(Debug, Clone)]
pub struct CanonicalTransformation {
    pub g_plus: CircleDiffeo,
    pub g_minus: CircleDiffeo,
}

impl CanonicalTransformation {
    pub fn identity() -> Self {
        CanonicalTransformation {
            g_plus: CircleDiffeo::identity(),
            g_minus: CircleDiffeo::identity(),
        }
    }

    pub fn new(g_plus: CircleDiffeo, g_minus: CircleDiffeo) -> Self {
        CanonicalTransformation { g_plus, g_minus }
    }

    fn component(&self, xi: f64) -> &CircleDiffeo {
        if xi >= 0.0 {
            &self.g_plus
        } else {
            &self.g_minus
        }
    }

    pub fn apply(&self, x: f64, xi: f64) -> (f64, f64) {
        let g = self.component(xi);
        (g.eval(x), xi / g.deriv(x))
    }

    pub fn apply_inverse(&self, y: f64, eta: f64) -> (f64, f64) {
        let g = self.component(eta);
        let x = g.inverse(y);
        (x, eta * g.deriv(x))
    }

    /// True when the two half lifts agree, i.e. the map extends over the
    /// zero section.
    pub fn extends_to_zero_section(&self) -> bool {
        self.g_plus.max_distance_to(&self.g_minus, 256) < 1e-12
    }

    /// Numerical pullback-area defect of the lift on a grid: the lift is
    /// exactly symplectic, so this measures only the finite differences.
    pub fn symplectic_defect(&self) -> f64 {
        let hx = 1e-5;
        let hxi = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..24 {
            let x = 2.0 * PI * i as f64 / 24.0;
            for &xi in &[1.0f64, 2.5, -1.5, -3.0] {
                let dx = |f: &dyn Fn(f64, f64) -> f64| {
                    (f(x + hx, xi) - f(x - hx, xi)) / (2.0 * hx)
                };
                let dxi = |f: &dyn Fn(f64, f64) -> f64| {
                    (f(x, xi + hxi) - f(x, xi - hxi)) / (2.0 * hxi)
                };
                let fx = |u: f64, v: f64| self.apply(u, v).0;
                let fxi = |u: f64, v: f64| self.apply(u, v).1;
                let jac = dx(&fx) * dxi(&fxi) - dxi(&fx) * dx(&fxi);
                worst = worst.max((jac - 1.0).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildRoute {
    Clutched,
    Ode,
}

/// A Fourier-truncated elliptic FIO with its canonical data and amplitudes.
pub struct FourierIntegralOperator {
    pub matrix: OperatorMatrix,
    pub canonical: CanonicalTransformation,
    pub b_plus: Symbol,
    pub b_minus: Symbol,
    pub route: BuildRoute,
    /// Newton–Schulz polish steps applied after clutching.
    pub polish_steps: usize,
}

impl FourierIntegralOperator {
    pub fn mode_cut(&self) -> usize {
        self.matrix.mode_cut()
    }

    pub fn adjoint_matrix(&self) -> OperatorMatrix {
        self.matrix.adjoint()
    }

    /// Defect profile of Id − Φ*Φ and Id − ΦΦ* within the window: returns
    /// (k₀, worst entry outside the |k| ≤ k₀ block), where k₀ is the smallest
    /// block radius pushing the outside sup below the tolerance.
    pub fn defect_profile(&self, window: usize, tol: f64) -> DefectProfile {
        let id = OperatorMatrix::identity(self.mode_cut());
        let adj = self.adjoint_matrix();
        let d1 = id.sub(&adj.matmul(&self.matrix));
        let d2 = id.sub(&self.matrix.matmul(&adj));
        let mut k0 = window;
        for r in (0..window).rev() {
            let outside = d1
                .max_entry_in_shell(r + 1, window)
                .max(d2.max_entry_in_shell(r + 1, window));
            if outside <= tol {
                k0 = r;
            } else {
                break;
            }
        }
        let outside_sup = d1
            .max_entry_in_shell(k0 + 1, window)
            .max(d2.max_entry_in_shell(k0 + 1, window));
        DefectProfile {
            block_radius: k0,
            outside_sup,
            tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DefectProfile {
    pub block_radius: usize,
    pub outside_sup: f64,
    pub tol: f64,
}

impl DefectProfile {
    pub fn smoothing(&self) -> bool {
        self.outside_sup <= self.tol
    }
}

/// Clutched construction: on each Hardy component compose the unitary
/// half-density pullback of g_± with the (pointwise-normalized) amplitude
/// multiplier and project; mode 0 is routed through the identity. The
/// pointwise normalization b/|b| keeps the winding while making each block
/// exactly unitary before truncation.
pub fn build_clutched_fio(
    ct: CanonicalTransformation,
    b_plus: Symbol,
    b_minus: Symbol,
    mode_cut: usize,
    polish_steps: usize,
) -> Result<FourierIntegralOperator, FioError> {
    let g = FIO_X_GRID;
    for diffeo in [&ct.g_plus, &ct.g_minus] {
        let md = diffeo.min_deriv(g);
        if md <= 0.0 {
            return Err(FioError::NotOrientationPreserving(md));
        }
    }
    // ellipticity of the amplitudes over the relevant half lattices
    for (b, sign) in [(&b_plus, 1.0f64), (&b_minus, -1.0)] {
        let mut min_abs = f64::INFINITY;
        for i in 0..64 {
            let x = 2.0 * PI * i as f64 / 64.0;
            for &k in &[1.0f64, 4.0, 16.0, 64.0] {
                min_abs = min_abs.min(b.eval(x, sign * k).norm());
            }
        }
        if min_abs < 1e-6 {
            return Err(FioError::NotElliptic(min_abs));
        }
    }

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(g);
    let mut matrix = OperatorMatrix::zeros(mode_cut);
    matrix.set_entry(0, 0, Complex64::new(1.0, 0.0));

    for (b, diffeo, sign) in [(&b_plus, &ct.g_plus, 1i64), (&b_minus, &ct.g_minus, -1)] {
        // precompute g^{-1} and the half-density factor on the grid
        let ys: Vec<f64> = (0..g)
            .map(|i| diffeo.inverse(2.0 * PI * i as f64 / g as f64))
            .collect();
        let half_density: Vec<f64> = ys.iter().map(|&y| (1.0 / diffeo.deriv(y)).sqrt()).collect();
        for kk in 1..=mode_cut as i64 {
            let k = sign * kk;
            let mut buf: Vec<Complex64> = (0..g)
                .map(|i| {
                    let y = ys[i];
                    let amp = b.eval(y, k as f64);
                    let unit = amp / amp.norm();
                    unit * half_density[i] * Complex64::from_polar(1.0, k as f64 * y)
                })
                .collect();
            fft.process(&mut buf);
            let inv_g = 1.0 / g as f64;
            // project onto the same component: rows sign·j ≥ 1
            for jj in 1..=mode_cut as i64 {
                let j = sign * jj;
                let bin = j.rem_euclid(g as i64) as usize;
                matrix.set_entry(j, k, buf[bin] * inv_g);
            }
        }
    }

    let mut op = matrix;
    for _ in 0..polish_steps {
        op = newton_schulz_step(&op);
    }

    Ok(FourierIntegralOperator {
        matrix: op,
        canonical: ct,
        b_plus,
        b_minus,
        route: BuildRoute::Clutched,
        polish_steps,
    })
}

/// One-homogeneous Hamiltonian data H(x, ξ) = h_±(x)·|ξ| on ±ξ > 0,
/// mollified by the cutoff near the zero section.
#[derive(Clone)]
pub struct HomogeneousHamiltonian {
    pub h_plus: Symbol,
    pub h_minus: Symbol,
}

impl HomogeneousHamiltonian {
    pub fn constant(c_plus: f64, c_minus: f64) -> Self {
        HomogeneousHamiltonian {
            h_plus: Symbol::constant(Complex64::new(c_plus, 0.0)),
            h_minus: Symbol::constant(Complex64::new(c_minus, 0.0)),
        }
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        let h = if xi >= 0.0 {
            self.h_plus.eval(x, xi)
        } else {
            self.h_minus.eval(x, xi)
        };
        let chi = crate::symbols::chi_scalar(&Complex64::new(xi, 0.0)).re;
        h.re * xi.abs() * chi
    }

    /// Grid check of 1-homogeneity outside |ξ| ≥ 1.
    pub fn homogeneity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..16 {
            let x = 2.0 * PI * i as f64 / 16.0;
            for &xi in &[1.5f64, 3.0, -2.0, -5.0] {
                for &lam in &[2.0f64, 3.0] {
                    let a = self.eval(x, lam * xi);
                    let b = lam * self.eval(x, xi);
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

/// Exactly skew-adjoint generator: A = (i/2)·Σ_± (M_{h±} D_± + D_± M_{h±}),
/// with D_± = diag(|k|χ(k)) on the ± modes and M the multiplication matrix.
/// Symmetrizing the diagonal factor is what makes the truncated matrix skew
/// and the propagator unitary up to integrator error.
fn ode_generator(h: &HomogeneousHamiltonian, mode_cut: usize) -> OperatorMatrix {
    let n = 2 * mode_cut + 1;
    let koff = mode_cut as i64;
    let mut a = OperatorMatrix::zeros(mode_cut);
    let half_i = Complex64::new(0.0, 0.5);
    for (h_sym, sign) in [(&h.h_plus, 1i64), (&h.h_minus, -1)] {
        // Fourier coefficients of h on this component (x-dependent only)
        let g = 512usize;
        let mut buf: Vec<Complex64> = (0..g)
            .map(|i| h_sym.eval(2.0 * PI * i as f64 / g as f64, sign as f64))
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(g).process(&mut buf);
        let coeff = |m: i64| -> Complex64 {
            if m.unsigned_abs() as usize >= g / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                buf[m.rem_euclid(g as i64) as usize] / g as f64
            }
        };
        let weight = |k: i64| -> f64 {
            if k * sign < 1 {
                0.0
            } else {
                let chi = crate::symbols::chi_scalar(&Complex64::new(k as f64, 0.0)).re;
                k.abs() as f64 * chi
            }
        };
        for row in 0..n {
            let j = row as i64 - koff;
            for col in 0..n {
                let k = col as i64 - koff;
                let w = 0.5 * (weight(j) + weight(k));
                if w == 0.0 {
                    continue;
                }
                let c = coeff(j - k);
                if c.norm() == 0.0 {
                    continue;
                }
                let cur = a.entry(j, k);
                a.set_entry(j, k, cur + Complex64::new(2.0, 0.0) * half_i * c * w);
            }
        }
    }
    a
}

/// Classical fixed-step RK4 for the autonomous propagator equation
/// T' = A·T, T(0) = Id, evaluated as the n-fold power of the one-step
/// update matrix (binary powering; identical to stepping n times).
pub fn build_ode_fio(
    h: &HomogeneousHamiltonian,
    mode_cut: usize,
    steps_log2: u32,
) -> Result<FourierIntegralOperator, FioError> {
    let a = ode_generator(h, mode_cut);
    let n_steps = 1u64 << steps_log2;
    let dt = 1.0 / n_steps as f64;
    // P = I + A dt + (A dt)²/2 + (A dt)³/6 + (A dt)⁴/24
    let adt = a.scale(Complex64::new(dt, 0.0));
    let adt2 = adt.matmul(&adt);
    let adt3 = adt2.matmul(&adt);
    let adt4 = adt3.matmul(&adt);
    let mut p = OperatorMatrix::identity(mode_cut)
        .add(&adt)
        .add(&adt2.scale(Complex64::new(0.5, 0.0)))
        .add(&adt3.scale(Complex64::new(1.0 / 6.0, 0.0)))
        .add(&adt4.scale(Complex64::new(1.0 / 24.0, 0.0)));
    let mut t = OperatorMatrix::identity(mode_cut);
    let mut remaining = n_steps;
    while remaining > 0 {
        if remaining & 1 == 1 {
            t = p.matmul(&t);
        }
        remaining >>= 1;
        if remaining > 0 {
            p = p.matmul(&p);
        }
    }

    let defect = t
        .adjoint()
        .matmul(&t)
        .sub(&OperatorMatrix::identity(mode_cut))
        .frobenius_norm();
    let tol = 1e-9 * (mode_cut as f64).sqrt();
    if defect > tol {
        return Err(FioError::PropagatorNotUnitary { defect, tol });
    }

    // canonical transformation: time-1 flow of −X_H per component, fitted as
    // a circle diffeomorphism of the base
    let flow = |sign: f64| -> CircleDiffeo {
        let m = 256usize;
        let sub_steps = 200usize;
        let dt = 1.0 / sub_steps as f64;
        let rhs = |x: f64| -> f64 {
            let hval = if sign > 0.0 {
                h.h_plus.eval(x, 1.0).re
            } else {
                h.h_minus.eval(x, 1.0).re
            };
            // −∂_ξ H on this component: −(±1)·h(x)
            -sign * hval
        };
        let samples: Vec<f64> = (0..m)
            .map(|i| {
                let x0 = 2.0 * PI * i as f64 / m as f64;
                let mut x = x0;
                for _ in 0..sub_steps {
                    let k1 = rhs(x);
                    let k2 = rhs(x + 0.5 * dt * k1);
                    let k3 = rhs(x + 0.5 * dt * k2);
                    let k4 = rhs(x + dt * k3);
                    x += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
                }
                x - x0
            })
            .collect();
        CircleDiffeo::from_displacement_samples(&samples)
    };

    Ok(FourierIntegralOperator {
        matrix: t,
        canonical: CanonicalTransformation::new(flow(1.0), flow(-1.0)),
        b_plus: Symbol::one(),
        b_minus: Symbol::one(),
        route: BuildRoute::Ode,
        polish_steps: 0,
    })
}

/// Expansion of the conjugated quantization σ(Φ Op(a_ħ) Φ*) in ħ on the
/// verification grid.
pub fn egorov_conjugate(
    fio: &FourierIntegralOperator,
    a: &Symbol,
    order: usize,
    ladder: &HbarLadder,
    grid: &StarGrid,
) -> Result<StarExpansion, StarError> {
    assert!(
        a.vanishes_near_zero(),
        "conjugation symbols must vanish near the zero section"
    );
    let adj = fio.adjoint_matrix();
    extrapolate_operator_symbols(
        |h, _| {
            let qa = quantize(&a.scaled(h), fio.mode_cut());
            fio.matrix.matmul(&qa).matmul(&adj)
        },
        ladder,
        grid,
        fio.mode_cut(),
        order,
    )
}

/// Per-ħ sup residual of the conjugated symbol against a∘φ⁻¹; the log-log
/// slope of these residuals is the leading-order Egorov check.
pub fn egorov_principal_residuals(
    fio: &FourierIntegralOperator,
    a: &Symbol,
    ladder: &HbarLadder,
    grid: &StarGrid,
) -> Result<Vec<(f64, f64)>, StarError> {
    let adj = fio.adjoint_matrix();
    let pulled = grid.sample(|x, xi| {
        let (x0, xi0) = fio.canonical.apply_inverse(x, xi);
        a.eval(x0, xi0)
    });
    let mut out = Vec::new();
    for &l in ladder.denominators() {
        let h = 1.0 / l as f64;
        let qa = quantize(&a.scaled(h), fio.mode_cut());
        let conj = fio.matrix.matmul(&qa).matmul(&adj);
        let tab = crate::operators::full_symbol(&conj);
        let vals = grid.gather(&tab, l, fio.mode_cut())?;
        let diff = &vals - &pulled;
        out.push((h, crate::star::sup_norm(&diff)));
    }
    Ok(out)
}

/// Least-squares slope of log(residual) against log(ħ).
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .map(|&(h, r)| (h.ln(), r.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Order-by-order comparison of Φ̃(a ⋆ b) against Φ̃(a) ⋆ Φ̃(b), both sides
/// computed at the operator level per ladder point.
pub struct HomomorphismReport {
    pub per_order_defect: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

pub fn egorov_homomorphism_check(
    fio: &FourierIntegralOperator,
    a: &Symbol,
    b: &Symbol,
    order: usize,
    ladder: &HbarLadder,
    grid: &StarGrid,
    tol: f64,
) -> Result<HomomorphismReport, StarError> {
    let adj = fio.adjoint_matrix();
    let lhs = extrapolate_operator_symbols(
        |h, _| {
            let qa = quantize(&a.scaled(h), fio.mode_cut());
            let qb = quantize(&b.scaled(h), fio.mode_cut());
            fio.matrix.matmul(&qa).matmul(&qb).matmul(&adj)
        },
        ladder,
        grid,
        fio.mode_cut(),
        order,
    )?;
    let rhs = extrapolate_operator_symbols(
        |h, _| {
            let qa = quantize(&a.scaled(h), fio.mode_cut());
            let qb = quantize(&b.scaled(h), fio.mode_cut());
            let ta = fio.matrix.matmul(&qa).matmul(&adj);
            let tb = fio.matrix.matmul(&qb).matmul(&adj);
            ta.matmul(&tb)
        },
        ladder,
        grid,
        fio.mode_cut(),
        order,
    )?;
    let diff = lhs.series.sub(&rhs.series);
    let per_order_defect: Vec<f64> = (0..=order as i32)
        .map(|n| {
            diff.coeff(n)
                .map(|c| c.iter().map(|v| v.norm()).fold(0.0, f64::max))
                .unwrap_or(0.0)
        })
        .collect();
    let pass = per_order_defect.iter().all(|&d| d <= tol);
    Ok(HomomorphismReport {
        per_order_defect,
        tol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diffeo_inverse_roundtrip() {
        let g = CircleDiffeo::parametric(0.3, 0.7);
        for i in 0..32 {
            let x = 2.0 * PI * i as f64 / 32.0;
            assert_abs_diff_eq!(g.inverse(g.eval(x)), x, epsilon = 1e-11);
        }
        assert_abs_diff_eq!(
            g.eval(0.4),
            0.4 + 0.3 * (0.4f64 + 0.7).sin(),
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            g.deriv(0.4),
            1.0 + 0.3 * (0.4f64 + 0.7).cos(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn lift_is_symplectic_and_extension_flag_works() {
        let ct = CanonicalTransformation::new(
            CircleDiffeo::parametric(0.3, 0.0),
            CircleDiffeo::parametric(0.3, 0.0),
        );
        assert!(ct.extends_to_zero_section());
        assert!(ct.symplectic_defect() < 1e-6);
        let ct2 = CanonicalTransformation::new(
            CircleDiffeo::parametric(0.3, 0.0),
            CircleDiffeo::identity(),
        );
        assert!(!ct2.extends_to_zero_section());
    }

    #[test]
    fn identity_clutch_is_identity() {
        let fio = build_clutched_fio(
            CanonicalTransformation::identity(),
            Symbol::one(),
            Symbol::one(),
            24,
            0,
        )
        .unwrap();
        let id = OperatorMatrix::identity(24);
        assert!(fio.matrix.sub(&id).frobenius_norm() < 1e-12);
    }

    #[test]
    fn winding_clutch_is_shift_with_defects_at_edges() {
        let fio = build_clutched_fio(
            CanonicalTransformation::identity(),
            Symbol::winding(1, false),
            Symbol::one(),
            24,
            0,
        )
        .unwrap();
        // positive modes shift up by one
        assert_abs_diff_eq!(fio.matrix.entry(5, 4).norm(), 1.0, epsilon = 1e-12);
        // mode 1 is unreachable
        let profile = fio.defect_profile(12, 1e-8);
        assert!(profile.smoothing());
        assert!(profile.block_radius <= 2);
    }

    #[test]
    fn clutched_defects_are_smoothing_profiled() {
        let ct = CanonicalTransformation::new(
            CircleDiffeo::parametric(0.3, 0.0),
            CircleDiffeo::parametric(-0.2, 1.1),
        );
        let fio = build_clutched_fio(ct, Symbol::one(), Symbol::one(), 128, 2).unwrap();
        let profile = fio.defect_profile(64, 1e-8);
        assert!(profile.smoothing(), "{:?}", profile);
        assert!(profile.block_radius <= 24, "{:?}", profile);
    }

    #[test]
    fn rejects_non_elliptic_amplitude() {
        let b = Symbol::parse("cos(x)", 0.0, false).unwrap(); // vanishes
        let r = build_clutched_fio(
            CanonicalTransformation::identity(),
            b,
            Symbol::one(),
            16,
            0,
        );
        assert!(matches!(r, Err(FioError::NotElliptic(_))));
    }

    #[test]
    fn ode_zero_hamiltonian_is_identity() {
        let h = HomogeneousHamiltonian::constant(0.0, 0.0);
        let fio = build_ode_fio(&h, 16, 6).unwrap();
        let id = OperatorMatrix::identity(16);
        assert!(fio.matrix.sub(&id).frobenius_norm() < 1e-12);
        assert!(fio.canonical.g_plus.is_identity());
    }

    #[test]
    fn ode_constant_hamiltonian_is_phase_rotation() {
        let c = 0.4;
        let h = HomogeneousHamiltonian::constant(c, 0.0);
        let fio = build_ode_fio(&h, 32, 12).unwrap();
        // mode k > 1: multiplication by e^{i c k χ(k)} = e^{ick}
        for k in 2i64..=8 {
            let got = fio.matrix.entry(k, k);
            let want = Complex64::from_polar(1.0, c * k as f64);
            assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-8);
            assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-8);
        }
        // negative modes untouched
        assert_abs_diff_eq!(fio.matrix.entry(-3, -3).re, 1.0, epsilon = 1e-10);
        // canonical flow: x ↦ x − c on the plus component (the stored map is
        // the inverse of the conjugation transport)
        assert_abs_diff_eq!(
            fio.canonical.g_plus.eval(1.0),
            1.0 - c,
            epsilon = 1e-9
        );
    }

    #[test]
    fn egorov_identity_fio_returns_symbol() {
        let fio = build_clutched_fio(
            CanonicalTransformation::identity(),
            Symbol::one(),
            Symbol::one(),
            96,
            0,
        )
        .unwrap();
        let a = Symbol::parse("exp(i*x) * chi(xi) * atan(xi)", 0.0, true).unwrap();
        let grid = StarGrid::new(vec![-1.5, -1.25, 1.25, 1.5]);
        let ladder = HbarLadder::new(vec![8, 12, 16, 24, 32]);
        let exp = egorov_conjugate(&fio, &a, 2, &ladder, &grid).unwrap();
        let direct = grid.sample(|x, xi| a.eval(x, xi));
        let d0 = exp.series.coeff(0).unwrap() - &direct;
        assert!(crate::star::sup_norm(&d0) < 1e-8);
        assert!(exp.coeff_sup(1) < 1e-8);
    }

    #[test]
    fn egorov_rotation_exact_conjugation() {
        let c = 0.5;
        let h = HomogeneousHamiltonian::constant(c, c);
        let fio = build_ode_fio(&h, 96, 12).unwrap();
        let a = Symbol::parse("exp(i*x) * chi(xi) * atan(xi)", 0.0, true).unwrap();
        let grid = StarGrid::new(vec![-1.5, -1.25, 1.25, 1.5]);
        let ladder = HbarLadder::new(vec![8, 12, 16, 24, 32]);
        let residuals = egorov_principal_residuals(&fio, &a, &ladder, &grid).unwrap();
        for (h, r) in residuals {
            assert!(r < 1e-7, "h = {h}: residual {r}");
        }
    }

    #[test]
    fn egorov_leading_order_scales_linearly() {
        let ct = CanonicalTransformation::new(
            CircleDiffeo::parametric(0.3, 0.0),
            CircleDiffeo::identity(),
        );
        let fio = build_clutched_fio(ct, Symbol::one(), Symbol::one(), 160, 2).unwrap();
        let a = Symbol::parse("exp(i*x) * chi(xi) * atan(xi)", 0.0, true).unwrap();
        let grid = StarGrid::new(vec![-1.5, -1.25, 1.25, 1.5]);
        let ladder = HbarLadder::new(vec![16, 24, 32, 48, 64]);
        let residuals = egorov_principal_residuals(&fio, &a, &ladder, &grid).unwrap();
        let slope = log_log_slope(&residuals);
        assert!(slope >= 0.9, "slope {slope}, residuals {residuals:?}");
    }
}
