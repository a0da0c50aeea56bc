//! Polynomial Hamiltonians, their Taylor lifts into the Weyl bundle, the
//! canonical lifted derivations and the flat connection, all exact.
//!
//! For a Hamiltonian H the decomposition is
//!   H₀ = H|_{ħ=0},
//!   H₁ = Σ_l (x̂_l ∂_{x_l}H₀ + ξ̂_l ∂_{ξ_l}H₀),
//!   H̃  = Σ_{α,β} (x̂^α ξ̂^β / α!β!) ∂_x^α ∂_ξ^β H   (full Taylor lift),
//! and the lifted derivations act on Weyl sections w as
//!   𝒟⁰_H(w) = {H₀, w}_base + (1/(√−1 ħ))[H̃ − H₀ − H₁, w]⋆,
//!   𝒟_H(w)  = 𝒟⁰_H(w) + ½ (Σ_l ∂²_{x_l ξ_l}H₀) · w.
//! The ½-term is central; it is what makes [𝒟_H, ∇̃⁰] = −½ d(Σ ∂²_{x,ξ}H₀)
//! hold as a multiplication operator, while the bracket law
//! [𝒟⁰_H, 𝒟⁰_K] = 𝒟⁰_{(1/(√−1 ħ))(H*K − K*H)} is exact for the 𝒟⁰ variant.

use crate::exact::GaussRational;
use crate::weyl::{Monomial, WeylElement, WeylVar, MAX_DIM};
use rand::Rng;

/// Polynomial in commuting (x, ξ) with ℂ[ħ]-polynomial coefficients.
/// Thin wrapper over a fiber-free Weyl section.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyHamiltonian {
    poly: WeylElement,
}

impl PolyHamiltonian {
    pub fn new(poly: WeylElement) -> Self {
        assert!(
            poly.terms().all(|(m, _)| m.fiber_gen_count() == 0 && m.hbar >= 0),
            "Hamiltonian must be fiber-free with nonnegative ħ powers"
        );
        PolyHamiltonian { poly }
    }

    pub fn zero(dim: usize, cap: i32) -> Self {
        PolyHamiltonian {
            poly: WeylElement::zero(dim, cap),
        }
    }

    pub fn constant(c: GaussRational, dim: usize, cap: i32) -> Self {
        PolyHamiltonian {
            poly: WeylElement::constant(c, dim, cap),
        }
    }

    pub fn coordinate(v: WeylVar, dim: usize, cap: i32) -> Self {
        match v {
            WeylVar::BaseX(_) | WeylVar::BaseXi(_) => PolyHamiltonian {
                poly: WeylElement::var(v, dim, cap),
            },
            _ => panic!("Hamiltonians live on the base"),
        }
    }

    /// Dense-ish constructor from (x-exponents, ξ-exponents, ħ-power, coeff).
    pub fn from_terms(
        dim: usize,
        cap: i32,
        terms: &[([u8; MAX_DIM], [u8; MAX_DIM], u8, GaussRational)],
    ) -> Self {
        let mut poly = WeylElement::zero(dim, cap);
        for (ax, bxi, k, c) in terms {
            let m = Monomial {
                base_x: *ax,
                base_xi: *bxi,
                hbar: *k as i8,
                ..Monomial::unit()
            };
            poly = poly.add(&WeylElement::monomial(m, c.clone(), dim, cap));
        }
        PolyHamiltonian { poly }
    }

    pub fn as_element(&self) -> &WeylElement {
        &self.poly
    }

    pub fn with_cap(&self, cap: i32) -> Self {
        PolyHamiltonian {
            poly: self.poly.truncate(cap),
        }
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    pub fn cap(&self) -> i32 {
        self.poly.degree_cap()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        PolyHamiltonian {
            poly: self.poly.add(&rhs.poly),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        PolyHamiltonian {
            poly: self.poly.sub(&rhs.poly),
        }
    }

    pub fn scale(&self, s: &GaussRational) -> Self {
        PolyHamiltonian {
            poly: self.poly.scale(s),
        }
    }

    pub fn partial(&self, v: WeylVar) -> Self {
        PolyHamiltonian {
            poly: self.poly.partial(v),
        }
    }

    /// ħ = 0 part.
    pub fn h0(&self) -> Self {
        PolyHamiltonian {
            poly: self.poly.hbar_zero_part(),
        }
    }

    /// Poisson bracket {H, K} = Σ_l ∂_{ξ_l}H ∂_{x_l}K − ∂_{x_l}H ∂_{ξ_l}K.
    pub fn poisson(&self, rhs: &Self) -> Self {
        let n = self.dim();
        let mut out = WeylElement::zero(n, self.cap());
        for l in 0..n {
            let t1 = self
                .poly
                .partial(WeylVar::BaseXi(l))
                .weyl_mul(&rhs.poly.partial(WeylVar::BaseX(l)));
            let t2 = self
                .poly
                .partial(WeylVar::BaseX(l))
                .weyl_mul(&rhs.poly.partial(WeylVar::BaseXi(l)));
            out = out.add(&t1).sub(&t2);
        }
        PolyHamiltonian { poly: out }
    }

    /// Moyal product on base polynomials with the same normalization as the
    /// fiber product ([ξ, x]_* = √−1 ħ). Exact and finite on polynomials.
    pub fn moyal(&self, rhs: &Self) -> Self {
        let lifted_a = base_to_fiber(&self.poly);
        let lifted_b = base_to_fiber(&rhs.poly);
        let prod = lifted_a.weyl_mul(&lifted_b);
        PolyHamiltonian {
            poly: fiber_to_base(&prod),
        }
    }

    /// (1/(√−1 ħ))·(H*K − K*H): the deformed bracket. Its ħ⁰ part is the
    /// Poisson bracket.
    pub fn moyal_bracket(&self, rhs: &Self) -> Self {
        let hk = self.moyal(rhs);
        let kh = rhs.moyal(self);
        let comm = hk.poly.sub(&kh.poly);
        debug_assert!(comm.terms().all(|(m, _)| m.hbar >= 1));
        PolyHamiltonian {
            poly: comm
                .mul_hbar_power(-1)
                .scale(&GaussRational::i().recip()),
        }
    }

    /// Σ_l ∂²_{x_l ξ_l} H₀ — the scalar entering the central correction.
    pub fn mixed_laplacian_h0(&self) -> Self {
        let h0 = self.h0();
        let n = self.dim();
        let mut out = WeylElement::zero(n, self.cap());
        for l in 0..n {
            out = out.add(
                &h0.poly
                    .partial(WeylVar::BaseX(l))
                    .partial(WeylVar::BaseXi(l)),
            );
        }
        PolyHamiltonian { poly: out }
    }

    /// Full Taylor lift H̃ = Σ (x̂^α ξ̂^β / α!β!) ∂_x^α ∂_ξ^β H. In the
    /// Weyl-ordered representation this is the commutative substitution
    /// x ↦ x + x̂, ξ ↦ ξ + ξ̂ expanded by binomials on monomial keys (never
    /// the ⋆-product of factors, which would pick up ordering corrections).
    pub fn taylor_lift(&self) -> WeylElement {
        let n = self.dim();
        let cap = self.cap();
        let mut out = WeylElement::zero(n, cap);
        for (m, c) in self.poly.terms() {
            let mut expansion: Vec<(Monomial, i128)> = vec![(
                Monomial {
                    hbar: m.hbar,
                    ..Monomial::unit()
                },
                1,
            )];
            for l in 0..n {
                expansion = split_binomial(&expansion, m.base_x[l], l, true);
                expansion = split_binomial(&expansion, m.base_xi[l], l, false);
            }
            for (mono, mult) in expansion {
                out = out.add(&WeylElement::monomial(
                    mono,
                    c * &GaussRational::from_int(mult as i64),
                    n,
                    cap,
                ));
            }
        }
        out
    }

    /// Random Hamiltonian of total base degree ≤ `max_degree`, ħ-free.
    pub fn random<R: Rng>(rng: &mut R, dim: usize, cap: i32, max_degree: u32, terms: usize) -> Self {
        let mut poly = WeylElement::zero(dim, cap);
        for _ in 0..terms {
            let mut m = Monomial::unit();
            loop {
                for l in 0..dim {
                    m.base_x[l] = rng.gen_range(0..=max_degree) as u8;
                    m.base_xi[l] = rng.gen_range(0..=max_degree) as u8;
                }
                if m.base_degree() <= max_degree {
                    break;
                }
            }
            let num = rng.gen_range(-5i64..=5);
            let den = rng.gen_range(1i64..=2);
            poly = poly.add(&WeylElement::monomial(
                m,
                GaussRational::from_ratio(num, den),
                dim,
                cap,
            ));
        }
        PolyHamiltonian { poly }
    }
}

/// Distribute (z + ẑ)^e over one coordinate slot with binomial weights.
fn split_binomial(
    terms: &[(Monomial, i128)],
    exponent: u8,
    l: usize,
    is_x: bool,
) -> Vec<(Monomial, i128)> {
    let mut out = Vec::with_capacity(terms.len() * (exponent as usize + 1));
    for (m, mult) in terms {
        let mut binom: i128 = 1;
        for j in 0..=exponent {
            if j > 0 {
                binom = binom * (exponent - j + 1) as i128 / j as i128;
            }
            let mut m2 = *m;
            if is_x {
                m2.base_x[l] = exponent - j;
                m2.fib_x[l] = j;
            } else {
                m2.base_xi[l] = exponent - j;
                m2.fib_xi[l] = j;
            }
            out.push((m2, mult * binom));
        }
    }
    out
}

/// Move base exponents onto fiber slots (for reusing the fiber Moyal kernel).
fn base_to_fiber(e: &WeylElement) -> WeylElement {
    let mut out = WeylElement::zero(e.dim(), i32::MAX / 4);
    for (m, c) in e.terms() {
        let m2 = Monomial {
            fib_x: m.base_x,
            fib_xi: m.base_xi,
            hbar: m.hbar,
            ..Monomial::unit()
        };
        out = out.add(&WeylElement::monomial(m2, c.clone(), e.dim(), i32::MAX / 4));
    }
    out
}

fn fiber_to_base(e: &WeylElement) -> WeylElement {
    let mut out = WeylElement::zero(e.dim(), i32::MAX / 4);
    for (m, c) in e.terms() {
        debug_assert_eq!(m.base_degree(), 0);
        let m2 = Monomial {
            base_x: m.fib_x,
            base_xi: m.fib_xi,
            hbar: m.hbar,
            ..Monomial::unit()
        };
        out = out.add(&WeylElement::monomial(m2, c.clone(), e.dim(), i32::MAX / 4));
    }
    out
}

/// The decomposition (H₀, H₁, H̃) of a Hamiltonian.
#[derive(Clone, Debug)]
pub struct HamiltonianDecomposition {
    pub h0: PolyHamiltonian,
    pub h1: WeylElement,
    pub taylor: WeylElement,
}

pub fn decompose(h: &PolyHamiltonian) -> HamiltonianDecomposition {
    let n = h.dim();
    let cap = h.cap();
    let h0 = h.h0();
    let mut h1 = WeylElement::zero(n, cap);
    for l in 0..n {
        h1 = h1.add(
            &WeylElement::var(WeylVar::FibX(l), n, cap)
                .weyl_mul(h0.partial(WeylVar::BaseX(l)).as_element()),
        );
        h1 = h1.add(
            &WeylElement::var(WeylVar::FibXi(l), n, cap)
                .weyl_mul(h0.partial(WeylVar::BaseXi(l)).as_element()),
        );
    }
    HamiltonianDecomposition {
        h0,
        h1,
        taylor: h.taylor_lift(),
    }
}

/// Which lifted derivation: 𝒟 carries the central ½ Σ∂²H₀ term, 𝒟⁰ does not.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftVariant {
    D,
    D0,
}

/// A lifted derivation acting on Weyl sections.
#[derive(Clone, Debug)]
pub struct LiftedDerivation {
    pub variant: LiftVariant,
    /// Hamiltonian vector-field coefficients of {H₀, ·}: (∂_{ξ_l}H₀, −∂_{x_l}H₀).
    vec_x: Vec<WeylElement>,
    vec_xi: Vec<WeylElement>,
    /// Quadratic-and-up fiber tail H̃ − H₀ − H₁ acting through (1/(√−1 ħ))[·,·].
    remainder: WeylElement,
    /// ½ Σ_l ∂²_{x_l ξ_l}H₀ (zero for the 𝒟⁰ variant), acting by multiplication.
    central: WeylElement,
    dim: usize,
}

impl LiftedDerivation {
    pub fn remainder(&self) -> &WeylElement {
        &self.remainder
    }

    pub fn central(&self) -> &WeylElement {
        &self.central
    }

    /// The derivation's fiber datum as a single Laurent element
    /// (1/ħ)(H̃ − H₀ − H₁ + ½ ħ Σ ∂²_{x,ξ}H₀); stored with an ħ^{-1} power.
    pub fn weyl_part(&self) -> WeylElement {
        let mut s = self.remainder.clone();
        if self.variant == LiftVariant::D {
            s = s.add(&self.central.mul_hbar_power(1));
        }
        s.mul_hbar_power(-1)
    }

    pub fn apply(&self, w: &WeylElement) -> WeylElement {
        assert_eq!(w.dim(), self.dim);
        let mut out = WeylElement::zero(self.dim, w.degree_cap());
        for l in 0..self.dim {
            out = out.add(&w.partial(WeylVar::BaseX(l)).base_multiply(&self.vec_x[l]));
            out = out.add(&w.partial(WeylVar::BaseXi(l)).base_multiply(&self.vec_xi[l]));
        }
        out = out.add(&self.remainder.commutator_over_ihbar(w));
        if !self.central.is_zero() {
            out = out.add(&w.base_multiply(&self.central));
        }
        out
    }

    /// Action on a 1-form-valued section: componentwise action plus the
    /// Lie-derivative rotation of the coordinate coframe.
    pub fn apply_to_form(&self, form: &WeylForm) -> WeylForm {
        let n = self.dim;
        let mut comps: Vec<WeylElement> = form.components.iter().map(|w| self.apply(w)).collect();
        // ℒ_V(dz^j) = Σ_k ∂_{z_j}(V^k) dz^k, so component j picks up
        // Σ_k ω_k ∂_{z_j}(V^k)
        for j in 0..2 * n {
            let zj = if j < n {
                WeylVar::BaseX(j)
            } else {
                WeylVar::BaseXi(j - n)
            };
            let mut extra = WeylElement::zero(n, form.components[j].degree_cap());
            for k in 0..n {
                extra = extra.add(
                    &form.components[k].base_multiply(&self.vec_x[k].partial(zj)),
                );
                extra = extra.add(
                    &form.components[n + k].base_multiply(&self.vec_xi[k].partial(zj)),
                );
            }
            comps[j] = comps[j].add(&extra);
        }
        WeylForm { components: comps }
    }
}

/// 1-form with Weyl-section components, ordered (dx_1..dx_n, dξ_1..dξ_n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylForm {
    pub components: Vec<WeylElement>,
}

impl WeylForm {
    pub fn zero(dim: usize, cap: i32) -> Self {
        WeylForm {
            components: vec![WeylElement::zero(dim, cap); 2 * dim],
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        WeylForm {
            components: self
                .components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }
}

/// Build 𝒟_H (with the central ½ Σ∂²H₀ multiplication term).
pub fn lift_d(h: &PolyHamiltonian) -> LiftedDerivation {
    build_lift(h, LiftVariant::D)
}

/// Build 𝒟⁰_H (commutes with the flat connection).
pub fn lift_d0(h: &PolyHamiltonian) -> LiftedDerivation {
    build_lift(h, LiftVariant::D0)
}

/// Cap used for the derivation's own polynomial data: effectively unbounded,
/// so truncation is governed by the section being acted on.
const FREE_CAP: i32 = i32::MAX / 4;

fn build_lift(h: &PolyHamiltonian, variant: LiftVariant) -> LiftedDerivation {
    let h = &h.with_cap(FREE_CAP);
    let n = h.dim();
    let dec = decompose(h);
    let remainder = dec.taylor.sub(dec.h0.as_element()).sub(&dec.h1);
    let vec_x: Vec<WeylElement> = (0..n)
        .map(|l| dec.h0.partial(WeylVar::BaseXi(l)).as_element().clone())
        .collect();
    let vec_xi: Vec<WeylElement> = (0..n)
        .map(|l| dec.h0.partial(WeylVar::BaseX(l)).as_element().neg())
        .collect();
    let central = match variant {
        LiftVariant::D => h
            .mixed_laplacian_h0()
            .as_element()
            .scale(&GaussRational::from_ratio(1, 2)),
        LiftVariant::D0 => WeylElement::zero(n, h.cap()),
    };
    LiftedDerivation {
        variant,
        vec_x,
        vec_xi,
        remainder,
        central,
        dim: n,
    }
}

/// The flat connection ∇̃⁰: component dz^j of ∇̃⁰w is ∂_{z_j}w − ∂_{ẑ_j}w.
/// The fiber translations are the (1/(√−1 ħ))-commutator actions of the
/// connection coefficients ∓x̂_l, ±ξ̂_l.
pub fn flat_connection(w: &WeylElement) -> WeylForm {
    let n = w.dim();
    let mut comps = Vec::with_capacity(2 * n);
    for l in 0..n {
        comps.push(w.partial(WeylVar::BaseX(l)).sub(&w.partial(WeylVar::FibX(l))));
    }
    for l in 0..n {
        comps.push(w.partial(WeylVar::BaseXi(l)).sub(&w.partial(WeylVar::FibXi(l))));
    }
    WeylForm { components: comps }
}

/// Exterior derivative of a base scalar as a WeylForm (multiplication data).
pub fn d_scalar(f: &WeylElement) -> WeylForm {
    let n = f.dim();
    let mut comps = Vec::with_capacity(2 * n);
    for l in 0..n {
        comps.push(f.partial(WeylVar::BaseX(l)));
    }
    for l in 0..n {
        comps.push(f.partial(WeylVar::BaseXi(l)));
    }
    WeylForm { components: comps }
}

/// Outcome of checking the two connection-commutator identities on a test
/// element, componentwise and exact.
#[derive(Clone, Debug)]
pub struct ConnectionCheck {
    /// [𝒟⁰_H, ∇̃⁰](w) per component: must vanish.
    pub d0_commutator_zero: Vec<bool>,
    /// [𝒟_H, ∇̃⁰](w) + ½ d(Σ∂²H₀)·w per component: must vanish.
    pub d_commutator_matches: Vec<bool>,
    /// True when the test data sits close enough to the cap that dropped
    /// terms could hide a violation.
    pub cap_overflow: bool,
    pub pass: bool,
}

/// Evaluate [𝒟_H, ∇̃⁰] and [𝒟⁰_H, ∇̃⁰] on `test` and compare with the
/// expected right-hand sides, exactly.
///
/// The flat connection lowers fiber degree, so the commutator is evaluated
/// with the cap raised far enough that no intermediate term near the cap is
/// lost; the comparison is then exact in the polynomial algebra.
pub fn fedosov_connection_check(h: &PolyHamiltonian, test: &WeylElement) -> ConnectionCheck {
    let d = lift_d(h);
    let d0 = lift_d0(h);
    let declared_cap = test.degree_cap();
    let headroom = d.remainder.max_fiber_degree().max(2) + 2;
    let test = &test.truncate(declared_cap + headroom);

    let commutator = |op: &LiftedDerivation, w: &WeylElement| -> WeylForm {
        op.apply_to_form(&flat_connection(w))
            .sub(&flat_connection(&op.apply(w)))
    };

    let c0 = commutator(&d0, test);
    let d0_flags: Vec<bool> = c0.components.iter().map(|c| c.is_zero()).collect();

    let c1 = commutator(&d, test);
    // expected: −½ d(Σ ∂²_{x,ξ} H₀) acting by multiplication
    let half_lap = h
        .mixed_laplacian_h0()
        .as_element()
        .scale(&GaussRational::from_ratio(1, 2));
    let expected = d_scalar(&half_lap);
    let d_flags: Vec<bool> = c1
        .components
        .iter()
        .zip(&expected.components)
        .map(|(got, e)| got.add(&test.base_multiply(e)).is_zero())
        .collect();

    let tail_degree = d.remainder.max_fiber_degree();
    let cap_overflow = test.max_fiber_degree() + tail_degree - 2 > declared_cap;
    let pass = d0_flags.iter().all(|&b| b) && d_flags.iter().all(|&b| b);
    ConnectionCheck {
        d0_commutator_zero: d0_flags,
        d_commutator_matches: d_flags,
        cap_overflow,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn q(n: i64) -> GaussRational {
        GaussRational::from_int(n)
    }

    #[test]
    fn decomposition_linear() {
        // H = x₁: H₀ = x₁, H₁ = x̂₁, H̃ = x₁ + x̂₁
        let h = PolyHamiltonian::coordinate(WeylVar::BaseX(0), 1, 8);
        let dec = decompose(&h);
        assert_eq!(dec.h0.as_element(), h.as_element());
        assert_eq!(dec.h1, WeylElement::var(WeylVar::FibX(0), 1, 8));
        let expected = WeylElement::var(WeylVar::BaseX(0), 1, 8)
            .add(&WeylElement::var(WeylVar::FibX(0), 1, 8));
        assert_eq!(dec.taylor, expected);
    }

    #[test]
    fn decomposition_constant() {
        let h = PolyHamiltonian::constant(q(5), 1, 8);
        let dec = decompose(&h);
        assert_eq!(dec.h0.as_element(), h.as_element());
        assert!(dec.h1.is_zero());
        assert_eq!(dec.taylor, *h.as_element());
    }

    #[test]
    fn decomposition_bilinear() {
        // H = x₁ξ₁ → H̃ = x₁ξ₁ + ξ₁x̂₁ + x₁ξ̂₁ + x̂₁ξ̂₁
        let x = WeylElement::var(WeylVar::BaseX(0), 1, 8);
        let xi = WeylElement::var(WeylVar::BaseXi(0), 1, 8);
        let fx = WeylElement::var(WeylVar::FibX(0), 1, 8);
        let fxi = WeylElement::var(WeylVar::FibXi(0), 1, 8);
        let h = PolyHamiltonian::new(x.weyl_mul(&xi));
        let dec = decompose(&h);
        // x̂₁ξ̂₁ as a Weyl-ordered monomial, not the ⋆-product of generators
        let cross = WeylElement::monomial(
            Monomial {
                fib_x: [1, 0],
                fib_xi: [1, 0],
                ..Monomial::unit()
            },
            GaussRational::one(),
            1,
            8,
        );
        let expected = x
            .weyl_mul(&xi)
            .add(&xi.weyl_mul(&fx))
            .add(&x.weyl_mul(&fxi))
            .add(&cross);
        assert_eq!(dec.taylor, expected);
    }

    #[test]
    fn taylor_lift_restricts_to_h() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let h = PolyHamiltonian::random(&mut rng, 2, 8, 4, 6);
            let lift = h.taylor_lift();
            assert_eq!(lift.fiber_constant_part(), *h.as_element());
        }
    }

    #[test]
    fn remainder_is_quadratic_and_up() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let h = PolyHamiltonian::random(&mut rng, 2, 8, 4, 6);
            let d = lift_d(&h);
            if !d.remainder().is_zero() {
                assert!(d.remainder().min_fiber_gen_count() >= 2);
            }
        }
    }

    #[test]
    fn constant_hamiltonian_gives_zero_derivation() {
        let h = PolyHamiltonian::constant(q(3), 2, 8);
        let d = lift_d(&h);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let w = WeylElement::random(&mut rng, 2, 8, 2, 8);
        assert!(d.apply(&w).is_zero());
    }

    #[test]
    fn linear_hamiltonian_acts_as_vector_field() {
        // H = x₁ acts as −∂_{ξ₁} on base polynomials
        let h = PolyHamiltonian::coordinate(WeylVar::BaseX(0), 1, 8);
        let d = lift_d(&h);
        let xi = WeylElement::var(WeylVar::BaseXi(0), 1, 8);
        let w = xi.weyl_mul(&xi); // ξ²
        let got = d.apply(&w);
        let expected = xi.scale(&q(-2)); // −∂_ξ(ξ²) = −2ξ
        assert_eq!(got, expected);
    }

    #[test]
    fn bracket_identity_quadratic_pair() {
        // [𝒟⁰_{x²}, 𝒟⁰_{ξ²}] = 𝒟⁰ of the deformed bracket, on test elements
        let x = WeylElement::var(WeylVar::BaseX(0), 1, 8);
        let xi = WeylElement::var(WeylVar::BaseXi(0), 1, 8);
        let h = PolyHamiltonian::new(x.weyl_mul(&x));
        let k = PolyHamiltonian::new(xi.weyl_mul(&xi));
        let dh = lift_d0(&h);
        let dk = lift_d0(&k);
        let db = lift_d0(&h.moyal_bracket(&k));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let w = WeylElement::random(&mut rng, 1, 8, 2, 8);
            let lhs = dh.apply(&dk.apply(&w)).sub(&dk.apply(&dh.apply(&w)));
            let rhs = db.apply(&w);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn bracket_identity_random_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        for _ in 0..8 {
            let h = PolyHamiltonian::random(&mut rng, 2, 8, 4, 5);
            let k = PolyHamiltonian::random(&mut rng, 2, 8, 4, 5);
            let dh = lift_d0(&h);
            let dk = lift_d0(&k);
            let db = lift_d0(&h.moyal_bracket(&k));
            let w = WeylElement::random(&mut rng, 2, 8, 2, 6);
            let lhs = dh.apply(&dk.apply(&w)).sub(&dk.apply(&dh.apply(&w)));
            let rhs = db.apply(&w);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn d_variant_bracket_picks_up_central_coboundary() {
        // [𝒟_H, 𝒟_K] = 𝒟⁰_B + ½({H₀, c_K} − {K₀, c_H}) as multiplication
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let h = PolyHamiltonian::random(&mut rng, 1, 8, 4, 4);
            let k = PolyHamiltonian::random(&mut rng, 1, 8, 4, 4);
            let dh = lift_d(&h);
            let dk = lift_d(&k);
            let db = lift_d0(&h.moyal_bracket(&k));
            let ch = h.mixed_laplacian_h0();
            let ck = k.mixed_laplacian_h0();
            let cob = h
                .h0()
                .poisson(&ck)
                .sub(&k.h0().poisson(&ch))
                .scale(&GaussRational::from_ratio(1, 2));
            let w = WeylElement::random(&mut rng, 1, 8, 2, 6);
            let lhs = dh.apply(&dk.apply(&w)).sub(&dk.apply(&dh.apply(&w)));
            let rhs = db.apply(&w).add(&w.base_multiply(cob.as_element()));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn connection_check_bilinear() {
        // H = x₁ξ₁: both commutators vanish (Σ∂²H₀ is constant)
        let x = WeylElement::var(WeylVar::BaseX(0), 1, 8);
        let xi = WeylElement::var(WeylVar::BaseXi(0), 1, 8);
        let h = PolyHamiltonian::new(x.weyl_mul(&xi));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let w = WeylElement::random(&mut rng, 1, 8, 2, 6);
        let report = fedosov_connection_check(&h, &w);
        assert!(report.pass, "{:?}", report);
    }

    #[test]
    fn connection_check_cubic() {
        // H = x₁²ξ₁: [𝒟_H, ∇̃⁰] = −½ d(2x₁) = −dx₁ by multiplication
        let x = WeylElement::var(WeylVar::BaseX(0), 1, 8);
        let xi = WeylElement::var(WeylVar::BaseXi(0), 1, 8);
        let h = PolyHamiltonian::new(x.weyl_mul(&x).weyl_mul(&xi));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        for _ in 0..5 {
            let w = WeylElement::random(&mut rng, 1, 8, 2, 6);
            let report = fedosov_connection_check(&h, &w);
            assert!(report.pass, "{:?}", report);
        }
        // and the raw commutator really is −dx₁·w, not zero
        let d = lift_d(&h);
        let w = WeylElement::one(1, 8);
        let c = d
            .apply_to_form(&flat_connection(&w))
            .sub(&flat_connection(&d.apply(&w)));
        assert_eq!(c.components[0], WeylElement::one(1, 8).neg());
        assert!(c.components[1].is_zero());
    }

    #[test]
    fn connection_check_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for _ in 0..6 {
            let h = PolyHamiltonian::random(&mut rng, 2, 10, 4, 5);
            let w = WeylElement::random(&mut rng, 2, 10, 2, 6);
            let report = fedosov_connection_check(&h, &w);
            assert!(report.pass, "H = {:?}", h);
        }
    }

    #[test]
    fn moyal_bracket_leading_term_is_poisson() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(40);
        for _ in 0..10 {
            let h = PolyHamiltonian::random(&mut rng, 2, 8, 4, 5);
            let k = PolyHamiltonian::random(&mut rng, 2, 8, 4, 5);
            let b = h.moyal_bracket(&k);
            assert_eq!(b.h0(), h.poisson(&k).h0());
        }
    }

    #[test]
    fn weyl_part_exposed_with_pole() {
        let x = WeylElement::var(WeylVar::BaseX(0), 1, 8);
        let h = PolyHamiltonian::new(x.weyl_mul(&x));
        let d = lift_d0(&h);
        let s = d.weyl_part();
        // (1/ħ)·x̂²: a single term with ħ^{-1}
        assert_eq!(s.term_count(), 1);
        let (m, _) = s.terms().next().unwrap();
        assert_eq!(m.hbar, -1);
        assert_eq!(m.fib_x[0], 2);
    }
}
