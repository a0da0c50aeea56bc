//! Bivariate truncated Taylor arithmetic ("jets") used for exact-to-float
//! partial derivatives of symbol expressions.
//!
//! A `Jet2` holds the Taylor coefficients c[i][j] ≈ ∂_x^i ∂_ξ^j f /(i! j!)
//! around the evaluation point, truncated at order `JET_ORDER − 1` in each
//! variable. Derivatives of any composite expression then come out of the
//! coefficients with no finite-difference error.

use num_complex::Complex64;

/// Number of retained Taylor coefficients per variable (orders 0..=7).
pub const JET_ORDER: usize = 8;

#[derive(Clone, Copy, Debug)]
pub struct Jet2 {
    pub c: [[Complex64; JET_ORDER]; JET_ORDER],
}

impl Jet2 {
    pub fn zero() -> Self {
        Jet2 {
            c: [[Complex64::new(0.0, 0.0); JET_ORDER]; JET_ORDER],
        }
    }

    pub fn constant(v: Complex64) -> Self {
        let mut j = Jet2::zero();
        j.c[0][0] = v;
        j
    }

    /// The first variable (x) seeded with unit derivative.
    pub fn var_x(v: f64) -> Self {
        let mut j = Jet2::constant(Complex64::new(v, 0.0));
        j.c[1][0] = Complex64::new(1.0, 0.0);
        j
    }

    /// The second variable (ξ) seeded with unit derivative.
    pub fn var_xi(v: f64) -> Self {
        let mut j = Jet2::constant(Complex64::new(v, 0.0));
        j.c[0][1] = Complex64::new(1.0, 0.0);
        j
    }

    pub fn value(&self) -> Complex64 {
        self.c[0][0]
    }

    /// ∂_x^i ∂_ξ^j of the underlying function.
    pub fn derivative(&self, i: usize, j: usize) -> Complex64 {
        assert!(i < JET_ORDER && j < JET_ORDER);
        self.c[i][j] * (factorial(i) * factorial(j))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = Jet2::zero();
        for i in 0..JET_ORDER {
            for j in 0..JET_ORDER {
                out.c[i][j] = self.c[i][j] + rhs.c[i][j];
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = Jet2::zero();
        for i in 0..JET_ORDER {
            for j in 0..JET_ORDER {
                out.c[i][j] = self.c[i][j] - rhs.c[i][j];
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Jet2::zero();
        for i in 0..JET_ORDER {
            for j in 0..JET_ORDER {
                out.c[i][j] = -self.c[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Jet2::zero();
        for i in 0..JET_ORDER {
            for j in 0..JET_ORDER {
                out.c[i][j] = self.c[i][j] * s;
            }
        }
        out
    }

    /// Truncated 2-D Cauchy product.
    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Jet2::zero();
        for i1 in 0..JET_ORDER {
            for j1 in 0..JET_ORDER {
                let a = self.c[i1][j1];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for i2 in 0..JET_ORDER - i1 {
                    for j2 in 0..JET_ORDER - j1 {
                        let b = rhs.c[i2][j2];
                        if b.norm_sqr() == 0.0 {
                            continue;
                        }
                        out.c[i1 + i2][j1 + j2] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Compose an analytic function through the jet given the list of its
    /// derivatives f, f', f'', ... at the jet's value. The nilpotent part is
    /// raised to successive powers; 2·(JET_ORDER−1) derivative slots are
    /// enough to saturate every retained coefficient.
    pub fn apply_analytic(&self, derivs: &[Complex64]) -> Self {
        let mut shifted = *self;
        shifted.c[0][0] = Complex64::new(0.0, 0.0);
        let mut out = Jet2::constant(derivs[0]);
        let mut power = Jet2::constant(Complex64::new(1.0, 0.0));
        let mut fact = 1.0f64;
        for (r, d) in derivs.iter().enumerate().skip(1) {
            power = power.mul(&shifted);
            if power_is_zero(&power) {
                break;
            }
            fact *= r as f64;
            out = out.add(&power.scale(d / fact));
        }
        out
    }

    pub fn recip(&self) -> Self {
        let v = self.value();
        assert!(v.norm() > 0.0, "jet reciprocal at zero");
        let derivs = analytic_derivs(|r| {
            // d^r/dv^r (1/v) = (−1)^r r! v^{−r−1}
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            v.powi(-(r as i32) - 1) * sign * factorial(r)
        });
        self.apply_analytic(&derivs)
    }

    pub fn div(&self, rhs: &Self) -> Self {
        self.mul(&rhs.recip())
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let derivs = analytic_derivs(|_| e);
        self.apply_analytic(&derivs)
    }

    pub fn sin(&self) -> Self {
        let v = self.value();
        let (s, c) = (v.sin(), v.cos());
        let derivs = analytic_derivs(|r| match r % 4 {
            0 => s,
            1 => c,
            2 => -s,
            _ => -c,
        });
        self.apply_analytic(&derivs)
    }

    pub fn cos(&self) -> Self {
        let v = self.value();
        let (s, c) = (v.sin(), v.cos());
        let derivs = analytic_derivs(|r| match r % 4 {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        });
        self.apply_analytic(&derivs)
    }

    /// arctan for real-valued jets; derivatives from the partial-fraction
    /// form arctan'(v) = (1/2i)(1/(v−i) − 1/(v+i)).
    pub fn atan(&self) -> Self {
        let v = self.value();
        assert!(
            v.im.abs() < 1e-12,
            "atan expects a real-valued jet, got {v}"
        );
        let i = Complex64::new(0.0, 1.0);
        let derivs = analytic_derivs(|r| {
            if r == 0 {
                Complex64::new(v.re.atan(), 0.0)
            } else {
                // d^r atan = d^{r−1}(1/(1+v²))
                //          = (1/2i)(−1)^{r−1}(r−1)!·[(v−i)^{−r} − (v+i)^{−r}]
                let sign = if (r - 1) % 2 == 0 { 1.0 } else { -1.0 };
                let a = (v - i).powi(-(r as i32));
                let b = (v + i).powi(-(r as i32));
                (a - b) / (2.0 * i) * sign * factorial(r - 1)
            }
        });
        self.apply_analytic(&derivs)
    }

    /// Real power of a positive real-valued jet.
    pub fn powf(&self, p: f64) -> Self {
        let v = self.value();
        assert!(
            v.im.abs() < 1e-12 && v.re > 0.0,
            "powf expects a positive real-valued jet, got {v}"
        );
        let derivs = analytic_derivs(|r| {
            let mut coef = 1.0f64;
            for s in 0..r {
                coef *= p - s as f64;
            }
            Complex64::new(coef * v.re.powf(p - r as f64), 0.0)
        });
        self.apply_analytic(&derivs)
    }

    pub fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut out = Jet2::constant(Complex64::new(1.0, 0.0));
        let mut base = *self;
        let mut n = n as u32;
        while n > 0 {
            if n & 1 == 1 {
                out = out.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        out
    }

    /// |v| for real-valued jets away from zero: sign(v₀)·v.
    pub fn abs(&self) -> Self {
        let v = self.value();
        assert!(v.im.abs() < 1e-12, "abs expects a real-valued jet");
        if v.re >= 0.0 {
            *self
        } else {
            self.neg()
        }
    }

    pub fn conj_value_only(&self) -> Complex64 {
        self.value().conj()
    }
}

fn power_is_zero(j: &Jet2) -> bool {
    j.c.iter()
        .all(|row| row.iter().all(|v| v.norm_sqr() == 0.0))
}

fn analytic_derivs(f: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
    (0..2 * JET_ORDER - 1).map(f).collect()
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product::<f64>().max(1.0)
}
