//! Classical symbols on T*S¹: a small expression language (trig in x,
//! rational/arctan shapes in ξ, the zero-section cutoff, |ξ|^s tails), with
//! evaluation on plain complex numbers or on jets for exact derivatives.
//!
//! Grammar (used in experiment configs):
//!
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := unary (('*'|'/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' signed-number)?      // integer or real exponent
//! atom    := number | 'x' | 'xi' | 'pi' | 'i' | fn '(' expr ')' | '(' expr ')'
//! fn      := cos | sin | exp | atan | sqrt | abs | chi
//! ```
//!
//! `chi(xi)` is the smooth cutoff with chi = 0 for |ξ| ≤ 1/2 and chi = 1 for
//! |ξ| ≥ 1. Real exponents require a positive real base at evaluation time.

use crate::jets::Jet2;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Scalar domain the expression tree can be evaluated over.
pub trait SymScalar: Clone {
    fn from_complex(v: Complex64) -> Self;
    fn value(&self) -> Complex64;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn cos(&self) -> Self;
    fn sin(&self) -> Self;
    fn exp(&self) -> Self;
    fn atan(&self) -> Self;
    fn abs(&self) -> Self;
}

impl SymScalar for Complex64 {
    fn from_complex(v: Complex64) -> Self {
        v
    }
    fn value(&self) -> Complex64 {
        *self
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, n: i32) -> Self {
        self.powi(n)
    }
    fn powf(&self, p: f64) -> Self {
        debug_assert!(self.im.abs() < 1e-9 && self.re > 0.0, "powf base {self}");
        Complex64::new(self.re.powf(p), 0.0)
    }
    fn cos(&self) -> Self {
        num_complex::Complex::cos(*self)
    }
    fn sin(&self) -> Self {
        num_complex::Complex::sin(*self)
    }
    fn exp(&self) -> Self {
        num_complex::Complex::exp(*self)
    }
    fn atan(&self) -> Self {
        debug_assert!(self.im.abs() < 1e-9);
        Complex64::new(self.re.atan(), 0.0)
    }
    fn abs(&self) -> Self {
        debug_assert!(self.im.abs() < 1e-9);
        Complex64::new(self.re.abs(), 0.0)
    }
}

impl SymScalar for Jet2 {
    fn from_complex(v: Complex64) -> Self {
        Jet2::constant(v)
    }
    fn value(&self) -> Complex64 {
        Jet2::value(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        Jet2::add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Jet2::sub(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Jet2::mul(self, rhs)
    }
    fn div(&self, rhs: &Self) -> Self {
        Jet2::div(self, rhs)
    }
    fn neg(&self) -> Self {
        Jet2::neg(self)
    }
    fn powi(&self, n: i32) -> Self {
        Jet2::powi(self, n)
    }
    fn powf(&self, p: f64) -> Self {
        Jet2::powf(self, p)
    }
    fn cos(&self) -> Self {
        Jet2::cos(self)
    }
    fn sin(&self) -> Self {
        Jet2::sin(self)
    }
    fn exp(&self) -> Self {
        Jet2::exp(self)
    }
    fn atan(&self) -> Self {
        Jet2::atan(self)
    }
    fn abs(&self) -> Self {
        Jet2::abs(self)
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    Const(Complex64),
    X,
    Xi,
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    PowI(Arc<Expr>, i32),
    PowF(Arc<Expr>, f64),
    Cos(Arc<Expr>),
    Sin(Arc<Expr>),
    Exp(Arc<Expr>),
    Atan(Arc<Expr>),
    Abs(Arc<Expr>),
    Chi(Arc<Expr>),
}

impl Expr {
    pub fn eval<S: SymScalar>(&self, x: &S, xi: &S) -> S {
        match self {
            Expr::Const(c) => S::from_complex(*c),
            Expr::X => x.clone(),
            Expr::Xi => xi.clone(),
            Expr::Add(a, b) => a.eval(x, xi).add(&b.eval(x, xi)),
            Expr::Sub(a, b) => a.eval(x, xi).sub(&b.eval(x, xi)),
            Expr::Mul(a, b) => a.eval(x, xi).mul(&b.eval(x, xi)),
            Expr::Div(a, b) => a.eval(x, xi).div(&b.eval(x, xi)),
            Expr::Neg(a) => a.eval(x, xi).neg(),
            Expr::PowI(a, n) => a.eval(x, xi).powi(*n),
            Expr::PowF(a, p) => a.eval(x, xi).powf(*p),
            Expr::Cos(a) => a.eval(x, xi).cos(),
            Expr::Sin(a) => a.eval(x, xi).sin(),
            Expr::Exp(a) => a.eval(x, xi).exp(),
            Expr::Atan(a) => a.eval(x, xi).atan(),
            Expr::Abs(a) => a.eval(x, xi).abs(),
            Expr::Chi(a) => chi_scalar(&a.eval(x, xi)),
        }
    }
}

/// C⁷ smoothstep coefficients for S₇ on [0, 1] (degree-15 polynomial).
fn smoothstep7() -> &'static [f64; 16] {
    // S_N(u) = u^{N+1} Σ_k binom(N+k,k) binom(2N+1,N−k) (−u)^k, N = 7
    const C: [f64; 16] = [
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, // degrees 0..7
        6435.0, -40040.0, 108108.0, -163800.0, 150150.0, -83160.0, 25740.0, -3432.0,
    ];
    &C
}

/// The zero-section cutoff: 0 for |v| ≤ 1/2, 1 for |v| ≥ 1, C⁷ smoothstep in
/// between (jets see the exact polynomial derivatives).
pub fn chi_scalar<S: SymScalar>(v: &S) -> S {
    let t = v.abs();
    let t0 = t.value().re;
    if t0 <= 0.5 {
        return S::from_complex(Complex64::new(0.0, 0.0));
    }
    if t0 >= 1.0 {
        return S::from_complex(Complex64::new(1.0, 0.0));
    }
    // u = 2t − 1 ∈ (0, 1)
    let u = t
        .mul(&S::from_complex(Complex64::new(2.0, 0.0)))
        .sub(&S::from_complex(Complex64::new(1.0, 0.0)));
    let coeffs = smoothstep7();
    let mut acc = S::from_complex(Complex64::new(0.0, 0.0));
    for &c in coeffs.iter().rev() {
        acc = acc.mul(&u).add(&S::from_complex(Complex64::new(c, 0.0)));
    }
    acc
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected character '{0}' at byte {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected token '{0}' at byte {1}")]
    UnexpectedToken(String, usize),
    #[error("unknown function '{0}' at byte {1}")]
    UnknownFunction(String, usize),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("exponent must be a number literal at byte {0}")]
    BadExponent(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                let v: f64 = s
                    .parse()
                    .map_err(|_| ParseError::UnexpectedToken(s.clone(), start))?;
                out.push((Tok::Num(v), start));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                out.push((Tok::Ident(s), start));
            }
            other => return Err(ParseError::UnexpectedChar(other, i)),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Arc::new(Expr::Add(lhs, rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Arc::new(Expr::Sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Expr>, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Arc::new(Expr::Mul(lhs, rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Arc::new(Expr::Div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Expr>, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            let inner = self.unary()?;
            return Ok(Arc::new(Expr::Neg(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Expr>, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let mut sign = 1.0;
            if matches!(self.peek(), Some(Tok::Minus)) {
                self.bump();
                sign = -1.0;
            }
            let lparen = matches!(self.peek(), Some(Tok::LParen));
            if lparen {
                self.bump();
                if matches!(self.peek(), Some(Tok::Minus)) {
                    self.bump();
                    sign = -sign;
                }
            }
            match self.bump() {
                Some((Tok::Num(v), pos)) => {
                    if lparen {
                        match self.bump() {
                            Some((Tok::RParen, _)) => {}
                            _ => return Err(ParseError::BadExponent(pos)),
                        }
                    }
                    let v = sign * v;
                    if (v - v.round()).abs() < 1e-12 && v.abs() < 64.0 {
                        return Ok(Arc::new(Expr::PowI(base, v.round() as i32)));
                    }
                    Ok(Arc::new(Expr::PowF(base, v)))
                }
                Some((_, pos)) => Err(ParseError::BadExponent(pos)),
                None => Err(ParseError::UnexpectedEnd),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Arc<Expr>, ParseError> {
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(Arc::new(Expr::Const(Complex64::new(v, 0.0)))),
            Some((Tok::LParen, _)) => {
                let e = self.expr()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(e),
                    Some((t, pos)) => Err(ParseError::UnexpectedToken(format!("{t:?}"), pos)),
                    None => Err(ParseError::UnexpectedEnd),
                }
            }
            Some((Tok::Ident(name), pos)) => match name.as_str() {
                "x" => Ok(Arc::new(Expr::X)),
                "xi" => Ok(Arc::new(Expr::Xi)),
                "pi" => Ok(Arc::new(Expr::Const(Complex64::new(
                    std::f64::consts::PI,
                    0.0,
                )))),
                "i" => Ok(Arc::new(Expr::Const(Complex64::new(0.0, 1.0)))),
                f @ ("cos" | "sin" | "exp" | "atan" | "sqrt" | "abs" | "chi") => {
                    match self.bump() {
                        Some((Tok::LParen, _)) => {}
                        Some((t, p)) => {
                            return Err(ParseError::UnexpectedToken(format!("{t:?}"), p))
                        }
                        None => return Err(ParseError::UnexpectedEnd),
                    }
                    let arg = self.expr()?;
                    match self.bump() {
                        Some((Tok::RParen, _)) => {}
                        Some((t, p)) => {
                            return Err(ParseError::UnexpectedToken(format!("{t:?}"), p))
                        }
                        None => return Err(ParseError::UnexpectedEnd),
                    }
                    Ok(Arc::new(match f {
                        "cos" => Expr::Cos(arg),
                        "sin" => Expr::Sin(arg),
                        "exp" => Expr::Exp(arg),
                        "atan" => Expr::Atan(arg),
                        "sqrt" => Expr::PowF(arg, 0.5),
                        "abs" => Expr::Abs(arg),
                        _ => Expr::Chi(arg),
                    }))
                }
                other => Err(ParseError::UnknownFunction(other.to_string(), pos)),
            },
            Some((t, pos)) => Err(ParseError::UnexpectedToken(format!("{t:?}"), pos)),
            None => Err(ParseError::UnexpectedEnd),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Arc<Expr>, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        let (t, pos) = &p.toks[p.pos];
        return Err(ParseError::UnexpectedToken(format!("{t:?}"), *pos));
    }
    Ok(e)
}

/// A classical symbol on the cylinder: evaluator, declared order, and the
/// "vanishes near the zero section" support tag. The ħ scaling acts in the
/// cotangent direction only.
#[derive(Clone)]
pub struct Symbol {
    expr: Arc<Expr>,
    order: f64,
    vanishes_near_zero: bool,
    xi_scale: f64,
}

impl Symbol {
    pub fn new(expr: Arc<Expr>, order: f64, vanishes_near_zero: bool) -> Self {
        Symbol {
            expr,
            order,
            vanishes_near_zero,
            xi_scale: 1.0,
        }
    }

    pub fn parse(src: &str, order: f64, vanishes_near_zero: bool) -> Result<Self, ParseError> {
        Ok(Symbol::new(parse_expr(src)?, order, vanishes_near_zero))
    }

    pub fn constant(c: Complex64) -> Self {
        Symbol::new(Arc::new(Expr::Const(c)), 0.0, false)
    }

    pub fn one() -> Self {
        Symbol::constant(Complex64::new(1.0, 0.0))
    }

    /// The cutoff χ(ξ) itself: order 0, vanishes near the zero section.
    pub fn cutoff() -> Self {
        Symbol::new(Arc::new(Expr::Chi(Arc::new(Expr::Xi))), 0.0, true)
    }

    /// e^{imx} (times the cutoff when `cut` is set).
    pub fn winding(m: i32, cut: bool) -> Self {
        let phase = Arc::new(Expr::Exp(Arc::new(Expr::Mul(
            Arc::new(Expr::Const(Complex64::new(0.0, m as f64))),
            Arc::new(Expr::X),
        ))));
        if cut {
            Symbol::new(
                Arc::new(Expr::Mul(phase, Arc::new(Expr::Chi(Arc::new(Expr::Xi))))),
                0.0,
                true,
            )
        } else {
            Symbol::new(phase, 0.0, false)
        }
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn vanishes_near_zero(&self) -> bool {
        self.vanishes_near_zero
    }

    pub fn expr(&self) -> &Arc<Expr> {
        &self.expr
    }

    pub fn xi_scale(&self) -> f64 {
        self.xi_scale
    }

    /// θ_ħ(x, ξ) = θ(x, ħξ).
    pub fn scaled(&self, hbar: f64) -> Self {
        assert!(hbar > 0.0);
        let mut s = self.clone();
        s.xi_scale *= hbar;
        s
    }

    pub fn eval(&self, x: f64, xi: f64) -> Complex64 {
        self.expr.eval(
            &Complex64::new(x, 0.0),
            &Complex64::new(self.xi_scale * xi, 0.0),
        )
    }

    /// Jet evaluation: derivatives in both slots; the ħ scaling is folded in
    /// by the chain rule through the seeded ξ jet.
    pub fn eval_jet(&self, x: f64, xi: f64) -> Jet2 {
        let xj = Jet2::var_x(x);
        let mut xij = Jet2::var_xi(self.xi_scale * xi);
        xij.c[0][1] = Complex64::new(self.xi_scale, 0.0);
        self.expr.eval(&xj, &xij)
    }

    /// ∂_x^i ∂_ξ^j a at (x, ξ).
    pub fn partial(&self, i: usize, j: usize, x: f64, xi: f64) -> Complex64 {
        self.eval_jet(x, xi).derivative(i, j)
    }

    pub fn product(&self, rhs: &Symbol) -> Symbol {
        assert_eq!(self.xi_scale, rhs.xi_scale, "mixed scalings");
        let mut s = Symbol::new(
            Arc::new(Expr::Mul(self.expr.clone(), rhs.expr.clone())),
            self.order + rhs.order,
            self.vanishes_near_zero || rhs.vanishes_near_zero,
        );
        s.xi_scale = self.xi_scale;
        s
    }

    pub fn sum(&self, rhs: &Symbol) -> Symbol {
        assert_eq!(self.xi_scale, rhs.xi_scale, "mixed scalings");
        let mut s = Symbol::new(
            Arc::new(Expr::Add(self.expr.clone(), rhs.expr.clone())),
            self.order.max(rhs.order),
            self.vanishes_near_zero && rhs.vanishes_near_zero,
        );
        s.xi_scale = self.xi_scale;
        s
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Symbol(order {}, cutoff {}, scale {})",
            self.order, self.vanishes_near_zero, self.xi_scale
        )
    }
}

/// Report of the discretized symbol-estimate check: the sampled sup of
/// |∂_x^α ∂_ξ^β a| (1+ξ²)^{(β−m)/2} over the verification region, per (α, β).
#[derive(Debug, Clone)]
pub struct OrderReport {
    pub order: f64,
    pub seminorms: Vec<((usize, usize), f64)>,
    pub bounded: bool,
    /// Cauchy gaps of a(x, ±ξ) along doubling ξ (order-0 boundary
    /// continuity): (gap at 128→256, gap at 256→512). Convergence shows as
    /// the second gap shrinking below the first.
    pub boundary_gaps: Option<(f64, f64)>,
}

/// Check the declared order against sampled derivative growth, and for
/// order-0 symbols the continuity up to the boundary circles.
pub fn symbol_order_report(a: &Symbol, max_derivs: usize) -> OrderReport {
    let m = a.order();
    let xs: Vec<f64> = (0..16)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / 16.0)
        .collect();
    let xis: Vec<f64> = vec![
        0.0, 0.6, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, -0.6, -1.0, -4.0, -16.0, -64.0,
    ];
    let mut seminorms = Vec::new();
    let mut bounded = true;
    for alpha in 0..=max_derivs {
        for beta in 0..=max_derivs {
            let mut sup: f64 = 0.0;
            for &x in &xs {
                for &xi in &xis {
                    let d = a.partial(alpha, beta, x, xi).norm();
                    let w = (1.0 + xi * xi).powf((beta as f64 - m) / 2.0);
                    sup = sup.max(d * w);
                }
            }
            if !sup.is_finite() || sup > 1e8 {
                bounded = false;
            }
            seminorms.push(((alpha, beta), sup));
        }
    }
    let boundary_gaps = if m == 0.0 {
        let mut g1: f64 = 0.0;
        let mut g2: f64 = 0.0;
        for &x in &xs {
            for sign in [1.0, -1.0] {
                let v1 = a.eval(x, sign * 128.0);
                let v2 = a.eval(x, sign * 256.0);
                let v3 = a.eval(x, sign * 512.0);
                g1 = g1.max((v2 - v1).norm());
                g2 = g2.max((v3 - v2).norm());
            }
        }
        Some((g1, g2))
    } else {
        None
    };
    OrderReport {
        order: m,
        seminorms,
        bounded,
        boundary_gaps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parse_and_eval_roundtrip() {
        let a = Symbol::parse("cos(2*x) + atan(xi)", 0.0, false).unwrap();
        let v = a.eval(0.5, 1.5);
        assert_abs_diff_eq!(v.re, (1.0f64).cos() + 1.5f64.atan(), epsilon = 1e-14);
    }

    #[test]
    fn parse_errors_are_located() {
        assert!(matches!(
            Symbol::parse("cos(2*x", 0.0, false),
            Err(ParseError::UnexpectedEnd)
        ));
        assert!(matches!(
            Symbol::parse("foo(x)", 0.0, false),
            Err(ParseError::UnknownFunction(..))
        ));
        assert!(matches!(
            Symbol::parse("x $ 2", 0.0, false),
            Err(ParseError::UnexpectedChar('$', 2))
        ));
    }

    #[test]
    fn cutoff_support() {
        let chi = Symbol::cutoff();
        assert_abs_diff_eq!(chi.eval(0.0, 0.3).norm(), 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(chi.eval(1.0, -0.2).norm(), 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(chi.eval(0.0, 1.5).re, 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(chi.eval(0.0, -2.0).re, 1.0, epsilon = 0.0);
        let mid = chi.eval(0.0, 0.75).re;
        assert!(mid > 0.0 && mid < 1.0);
        // smooth: first derivatives agree with a fine finite difference
        let d = chi.partial(0, 1, 0.0, 0.8).re;
        let h = 1e-6;
        let fd = (chi.eval(0.0, 0.8 + h).re - chi.eval(0.0, 0.8 - h).re) / (2.0 * h);
        assert_abs_diff_eq!(d, fd, epsilon = 1e-5);
    }

    #[test]
    fn scaling_composes() {
        let a = Symbol::parse("atan(xi) * cos(x)", 0.0, false).unwrap();
        let s1 = a.scaled(0.5).scaled(0.25);
        let s2 = a.scaled(0.125);
        for &(x, xi) in &[(0.3, 2.0), (1.0, -5.0)] {
            assert_abs_diff_eq!(s1.eval(x, xi).re, s2.eval(x, xi).re, epsilon = 1e-14);
        }
        // scale(ξ, ħ) = ħξ
        let idsym = Symbol::parse("xi", 1.0, false).unwrap();
        assert_abs_diff_eq!(idsym.scaled(0.25).eval(0.0, 8.0).re, 2.0, epsilon = 1e-14);
        // scale(a, 1) = a
        assert_abs_diff_eq!(
            a.scaled(1.0).eval(0.7, 3.0).re,
            a.eval(0.7, 3.0).re,
            epsilon = 1e-15
        );
    }

    #[test]
    fn jet_derivatives_respect_scaling() {
        let a = Symbol::parse("xi^2", 2.0, false).unwrap();
        let s = a.scaled(0.5);
        // d/dξ (0.25 ξ²) = 0.5 ξ
        assert_abs_diff_eq!(s.partial(0, 1, 0.0, 3.0).re, 1.5, epsilon = 1e-13);
    }

    #[test]
    fn order_zero_symbols_bounded() {
        let a = Symbol::parse("exp(i*x) * chi(xi) * atan(xi)", 0.0, true).unwrap();
        let rep = symbol_order_report(&a, 3);
        assert!(rep.bounded);
        let (g1, g2) = rep.boundary_gaps.unwrap();
        assert!(g2 < g1 && g2 < 1e-2, "gaps {g1} {g2}");
    }

    #[test]
    fn winding_symbol() {
        let b = Symbol::winding(2, false);
        let v = b.eval(0.4, 1.0);
        assert_abs_diff_eq!(v.re, (0.8f64).cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, (0.8f64).sin(), epsilon = 1e-14);
    }
}
