//! Main terms M(x): sums of residues of D(s)x^s/s at the poles that
//! produce growth, stored as `(coef, exponent, log_power)` triples.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::ArithFnId;
use crate::error::{Error, Result};
use crate::numeric::CompensatedComplexSum;
use crate::zeta::{dirichlet_value, singularities, zeta, zeta_real, zeta_with_derivative, ZetaContext, EULER_GAMMA};

/// One summand `Re(coef · x^exponent · (log x)^log_power)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: Complex64,
    pub exponent: Complex64,
    pub log_power: u32,
}

/// x^a, computed in real arithmetic when a is real.
#[inline]
fn power(x: f64, ln_x: f64, a: Complex64) -> Complex64 {
    if a.im == 0.0 {
        Complex64::new(x.powf(a.re), 0.0)
    } else {
        (a * ln_x).exp()
    }
}

impl Term {
    pub fn real(coef: f64, exponent: f64, log_power: u32) -> Self {
        Self { coef: Complex64::new(coef, 0.0), exponent: Complex64::new(exponent, 0.0), log_power }
    }

    #[inline]
    fn eval(&self, x: f64, ln_x: f64) -> Complex64 {
        let pow = power(x, ln_x, self.exponent);
        self.coef * pow * ln_x.powi(self.log_power as i32)
    }

    /// d/dx of the complex summand.
    #[inline]
    fn derivative(&self, x: f64, ln_x: f64) -> Complex64 {
        let pow = power(x, ln_x, self.exponent - 1.0);
        let p = self.log_power as i32;
        let mut inner = self.exponent * ln_x.powi(p);
        if p > 0 {
            inner += p as f64 * ln_x.powi(p - 1);
        }
        self.coef * pow * inner
    }
}

/// M(x) as a finite list of terms for one arithmetic function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTermModel {
    pub fn_id: ArithFnId,
    pub terms: Vec<Term>,
}

impl MainTermModel {
    /// Checks that every exponent has real part in (0, 1] and that non-real
    /// exponents come in conjugate pairs with conjugate coefficients.
    pub fn new(fn_id: ArithFnId, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if !(t.exponent.re > 0.0 && t.exponent.re <= 1.0) {
                return Err(Error::Domain(format!("term exponent {} has real part outside (0, 1]", t.exponent)));
            }
            if t.exponent.im != 0.0 {
                let paired = terms
                    .iter()
                    .any(|u| u.log_power == t.log_power && u.exponent == t.exponent.conj() && u.coef == t.coef.conj());
                if !paired {
                    return Err(Error::Domain(format!("exponent {} lacks its conjugate partner", t.exponent)));
                }
            }
        }
        Ok(Self { fn_id, terms })
    }

    /// The identically zero model.
    pub fn zero(fn_id: ArithFnId) -> Self {
        Self { fn_id, terms: Vec::new() }
    }

    /// Σ coef x^exponent (log x)^log_power as a complex number.
    pub fn eval_complex(&self, x: f64) -> Complex64 {
        let ln_x = x.ln();
        let mut acc = CompensatedComplexSum::default();
        for t in &self.terms {
            acc.add(t.eval(x, ln_x));
        }
        acc.value()
    }

    /// M(x).
    pub fn eval(&self, x: f64) -> f64 {
        let ln_x = x.ln();
        let mut acc = CompensatedComplexSum::default();
        let mut scale = 0.0f64;
        for t in &self.terms {
            let v = t.eval(x, ln_x);
            scale = scale.max(v.norm());
            acc.add(v);
        }
        let v = acc.value();
        debug_assert!(
            v.im.abs() <= 1e-12 * scale.max(v.re.abs()).max(1.0),
            "main term has imaginary part {} at x = {x}",
            v.im
        );
        v.re
    }

    /// M′(x).
    pub fn derivative(&self, x: f64) -> f64 {
        let ln_x = x.ln();
        let mut acc = CompensatedComplexSum::default();
        for t in &self.terms {
            acc.add(t.derivative(x, ln_x));
        }
        acc.value().re
    }

    /// True when some exponent is non-real, so M′ may change sign.
    pub fn is_oscillatory(&self) -> bool {
        self.terms.iter().any(|t| t.exponent.im != 0.0)
    }

    /// Largest real part among the exponents (0 for the empty model).
    pub fn max_exponent_re(&self) -> f64 {
        self.terms.iter().map(|t| t.exponent.re).fold(0.0, f64::max)
    }
}

/// M(x) for x ≥ 1.
pub fn eval_main_term(model: &MainTermModel, x: f64) -> Result<f64> {
    if !(x >= 1.0 && x.is_finite()) {
        return Err(Error::range(x, 1.0, f64::INFINITY));
    }
    Ok(model.eval(x))
}

/// Abelian coefficient b_k = ∏_{j≥1, j≠k} ζ(j/k).
///
/// The product over j > J is dropped once the bound
/// Σ_{j>J} (ζ(j/k) − 1) ≤ B((J+1)/k) / (1 − 2^{−1/k}), with
/// B(u) = 2^{−u} + 2^{1−u}/(u−1), falls below `tail_eps`.
pub fn abelian_coefficient_with(k: u32, tail_eps: f64, ctx: &ZetaContext) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("abelian coefficient index must be positive".into()));
    }
    abelian_partial_product(k, abelian_product_length(k, tail_eps), ctx)
}

/// Smallest J for which the dropped factors j > J of b_k move its
/// logarithm by less than `tail_eps`.
pub fn abelian_product_length(k: u32, tail_eps: f64) -> u32 {
    let kf = k.max(1) as f64;
    let ratio = 2f64.powf(-1.0 / kf);
    let bound = |u: f64| 2f64.powf(-u) + 2f64.powf(1.0 - u) / (u - 1.0);
    let mut j_max = 2 * k.max(1);
    while bound((j_max + 1) as f64 / kf) / (1.0 - ratio) >= tail_eps {
        j_max += 1;
    }
    j_max
}

/// ∏_{1≤j≤J, j≠k} ζ(j/k).
pub fn abelian_partial_product(k: u32, j_max: u32, ctx: &ZetaContext) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("abelian coefficient index must be positive".into()));
    }
    let kf = k as f64;
    let mut log_abs = 0.0;
    let mut negative = false;
    for j in (1..=j_max).filter(|&j| j != k) {
        let z = zeta_real(j as f64 / kf, ctx)?;
        log_abs += z.abs().ln();
        negative ^= z < 0.0;
    }
    let v = log_abs.exp();
    Ok(if negative { -v } else { v })
}

pub fn abelian_coefficient(k: u32, ctx: &ZetaContext) -> Result<f64> {
    abelian_coefficient_with(k, 1e-15, ctx)
}

/// Number of abelian main-term summands.
pub const ABELIAN_TERMS: u32 = 6;

/// Builds the closed-form main term.
pub fn build_main_term(fn_id: ArithFnId, ctx: &ZetaContext) -> Result<MainTermModel> {
    fn_id.validate()?;
    let gamma = ctx.euler_gamma;
    let zeta2 = PI * PI / 6.0;
    let terms = match fn_id {
        ArithFnId::VonMangoldt => vec![Term::real(1.0, 1.0, 0)],
        ArithFnId::Divisor => vec![Term::real(1.0, 1.0, 1), Term::real(2.0 * gamma - 1.0, 1.0, 0)],
        ArithFnId::SquarefreeDivisor => vec![
            Term::real(1.0 / zeta2, 1.0, 1),
            Term::real(-2.0 * ctx.zeta_prime_2 / (zeta2 * zeta2) + (2.0 * gamma - 1.0) / zeta2, 1.0, 0),
        ],
        ArithFnId::TwistedDivisorSq { theta } => twisted_terms(theta, ctx)?,
        ArithFnId::AbelianGroups => (1..=ABELIAN_TERMS)
            .map(|k| Ok(Term::real(abelian_coefficient(k, ctx)?, 1.0 / k as f64, 0)))
            .collect::<Result<_>>()?,
    };
    MainTermModel::new(fn_id, terms)
}

/// Twisted main term from the Laurent data of
/// G(s) = ζ(s+iθ)ζ(s−iθ)/ζ(2s) at s = 1, plus the simple poles at 1 ± iθ.
fn twisted_terms(theta: f64, ctx: &ZetaContext) -> Result<Vec<Term>> {
    if theta.abs() < 1e-6 {
        return Err(Error::Domain(format!("twist {theta} puts the poles 1 ± iθ within 1e-6 of s = 1")));
    }
    let zeta2 = PI * PI / 6.0;
    let one_plus = Complex64::new(1.0, theta);
    let (z, dz) = zeta_with_derivative(one_plus, ctx)?;
    let g1 = z.norm_sqr() / zeta2;
    let log_deriv = 2.0 * (dz / z).re - 2.0 * ctx.zeta_prime_2 / zeta2;
    let g1_prime = g1 * log_deriv;
    let linear = g1_prime - g1 + 2.0 * ctx.euler_gamma * g1;

    let two_theta = Complex64::new(1.0, 2.0 * theta);
    let osc = z * z * zeta(two_theta, ctx)? / (zeta(two_theta + 1.0, ctx)? * one_plus);
    Ok(vec![
        Term::real(g1, 1.0, 1),
        Term::real(linear, 1.0, 0),
        Term { coef: osc, exponent: one_plus, log_power: 0 },
        Term { coef: osc.conj(), exponent: one_plus.conj(), log_power: 0 },
    ])
}

/// The poles of D(s) whose residues make up M(x).
pub fn main_poles(fn_id: ArithFnId) -> Vec<Complex64> {
    match fn_id {
        ArithFnId::TwistedDivisorSq { theta } => {
            vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, theta), Complex64::new(1.0, -theta)]
        }
        ArithFnId::AbelianGroups => (1..=ABELIAN_TERMS).map(|k| Complex64::new(1.0 / k as f64, 0.0)).collect(),
        _ => vec![Complex64::new(1.0, 0.0)],
    }
}

/// A radius that keeps the circle around `pole` clear of every other
/// singularity by the enclosure margin.
pub fn default_radius(fn_id: ArithFnId, pole: Complex64) -> f64 {
    match fn_id {
        ArithFnId::AbelianGroups => {
            // neighbouring poles 1/k and 1/(k+1) are 1/(k(k+1)) apart
            let k = (1.0 / pole.re).round();
            (0.01f64).min(0.2 / (k * (k + 1.0)))
        }
        ArithFnId::TwistedDivisorSq { theta } => (0.01f64).min(theta.abs() / 4.0),
        _ => 0.01,
    }
}

/// Nodes used for the circle quadrature; the certificate doubles them.
pub const RESIDUE_NODES: usize = 1 << 10;

fn check_enclosure(fn_id: ArithFnId, pole: Complex64, radius: f64, ctx: &ZetaContext) -> Result<()> {
    let origin = std::iter::once(Complex64::new(0.0, 0.0));
    let others = singularities(fn_id, ctx).into_iter().map(|s| s.point()).chain(origin);
    for p in others {
        let d = (p - pole).norm();
        if d > 1e-12 && d < 2.0 * radius {
            return Err(Error::Enclosure(format!(
                "singularity {p} lies within 2r = {} of the circle centre {pole}",
                2.0 * radius
            )));
        }
    }
    if fn_id == ArithFnId::AbelianGroups && pole.re - radius <= 1.0 / 7.0 {
        return Err(Error::Enclosure(format!("circle around {pole} reaches Re s ≤ 1/7 where the product diverges")));
    }
    Ok(())
}

/// D(η) sampled on |η − pole| = radius at 2·[`RESIDUE_NODES`] equally
/// spaced nodes; the even-indexed half is the coarse rule used by the
/// node-doubling certificate. The samples do not depend on x, so one
/// circle serves every x.
#[derive(Debug, Clone)]
pub struct ResidueCircle {
    pub fn_id: ArithFnId,
    pub pole: Complex64,
    pub radius: f64,
    nodes: Vec<Complex64>,
    values: Vec<Complex64>,
}

impl ResidueCircle {
    pub fn new(fn_id: ArithFnId, pole: Complex64, radius: f64, ctx: &ZetaContext) -> Result<Self> {
        if !(1e-4..=0.1).contains(&radius) {
            return Err(Error::range(radius, 1e-4, 0.1));
        }
        check_enclosure(fn_id, pole, radius, ctx)?;
        let n = 2 * RESIDUE_NODES;
        let offsets: Vec<Complex64> =
            (0..n).map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / n as f64)).collect();
        let values = offsets.iter().map(|&w| dirichlet_value(fn_id, pole + w, ctx)).collect::<Result<Vec<_>>>()?;
        Ok(Self { fn_id, pole, radius, nodes: offsets, values })
    }

    /// Trapezoid value of (1/2πi)∮ D(η)x^η/η dη using every `stride`-th node.
    fn rule(&self, ln_x: f64, stride: usize) -> Complex64 {
        let mut acc = CompensatedComplexSum::default();
        let mut count = 0usize;
        for (w, d) in self.nodes.iter().zip(&self.values).step_by(stride) {
            let eta = self.pole + w;
            acc.add(d * (eta * ln_x).exp() / eta * w);
            count += 1;
        }
        acc.value() / count as f64
    }

    /// Complex contribution to M(x), certified by node doubling.
    pub fn contribution(&self, x: f64) -> Result<Complex64> {
        if !(x >= 2.0 && x.is_finite()) {
            return Err(Error::range(x, 2.0, f64::INFINITY));
        }
        let ln_x = x.ln();
        let coarse = self.rule(ln_x, 2);
        let fine = self.rule(ln_x, 1);
        let scale = fine.norm().max(f64::MIN_POSITIVE);
        if (coarse - fine).norm() >= 1e-9 * scale {
            return Err(Error::NumericCertificate(format!(
                "residue at {}: node doubling moved the value by {:e}",
                self.pole,
                (coarse - fine).norm()
            )));
        }
        Ok(coarse)
    }
}

/// Complex residue contribution to M(x) with the node-doubling certificate.
pub fn residue_main_term_complex(
    fn_id: ArithFnId,
    pole: Complex64,
    radius: f64,
    x: f64,
    ctx: &ZetaContext,
) -> Result<Complex64> {
    if !(x >= 2.0 && x.is_finite()) {
        return Err(Error::range(x, 2.0, f64::INFINITY));
    }
    ResidueCircle::new(fn_id, pole, radius, ctx)?.contribution(x)
}

/// Real part of the residue contribution at one pole.
pub fn residue_main_term(fn_id: ArithFnId, pole: Complex64, radius: f64, x: f64, ctx: &ZetaContext) -> Result<f64> {
    residue_main_term_complex(fn_id, pole, radius, x, ctx).map(|z| z.re)
}

/// Σ over the main poles of the numerically extracted residues, for each x.
pub fn residue_main_term_sum(fn_id: ArithFnId, xs: &[f64], ctx: &ZetaContext) -> Result<Vec<f64>> {
    let circles = main_poles(fn_id)
        .into_iter()
        .map(|p| ResidueCircle::new(fn_id, p, default_radius(fn_id, p), ctx))
        .collect::<Result<Vec<_>>>()?;
    xs.iter()
        .map(|&x| {
            let mut acc = CompensatedComplexSum::default();
            for c in &circles {
                acc.add(c.contribution(x)?);
            }
            Ok(acc.value().re)
        })
        .collect()
}

/// Reference value of 2γ − 1, the divisor linear coefficient.
pub const DIVISOR_LINEAR: f64 = 2.0 * EULER_GAMMA - 1.0;
