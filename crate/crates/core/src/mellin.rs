//! The Mellin transform A(s) = ∫₁^∞ Δ(x) x^{−s−1} dx computed three
//! independent ways, and the truncated Perron integral.
//!
//! * truncated integral of Δ itself (Re s ≥ 1),
//! * closed form D(s)/s − ∫₁^∞ M(x) x^{−s−1} dx,
//! * the contour integral (1/2πi)∫_𝒞 D(η)/(η(s−η)) dη, valid for every s to
//!   the right of 𝒞.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{ArithFnId, SieveTable};
use crate::delta::{scan_extrema, DeltaEvaluator};
use crate::error::{Error, Result};
use crate::main_term::MainTermModel;
use crate::measure::exponent_fit;
use crate::numeric::{integrate_adaptive, CompensatedComplexSum, CompensatedSum, GaussLegendre, Tolerance};
use crate::zeta::{dirichlet_value, singularities, ZetaContext};

/// Minimum distance between the contour and any singularity of D.
pub const CONTOUR_CLEARANCE: f64 = 1e-3;

const CONTOUR_TOL: Tolerance = Tolerance { abs: 1e-11, rel: 1e-12 };
const CONTOUR_MAX_PANELS: usize = 40_000;

/// The five-segment contour 𝒞 truncated at height H:
/// σ₃−iH → σ₃−iT₀ → σ₁−iT₀ → σ₁+iT₀ → σ₃+iT₀ → σ₃+iH.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub sigma1: f64,
    pub sigma3: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

impl ContourSpec {
    pub fn new(sigma1: f64, sigma3: f64, t0: f64, h: f64) -> Result<Self> {
        let c = Self { sigma1, sigma3, t0, h };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.sigma1 < self.sigma3) {
            return Err(Error::Domain(format!("need 0 < sigma1 < sigma3, got {} and {}", self.sigma1, self.sigma3)));
        }
        if !(self.sigma3 > 1.0) {
            return Err(Error::Domain(format!(
                "sigma3 = {} must exceed the abscissa of absolute convergence 1",
                self.sigma3
            )));
        }
        if !(self.t0 > 0.0 && self.h > self.t0 && self.h.is_finite()) {
            return Err(Error::Domain(format!("need 0 < T0 < H, got {} and {}", self.t0, self.h)));
        }
        Ok(())
    }

    /// Default contour: σ₃ = 5/4, H = 10³, and σ₁, T₀ chosen so that the
    /// main-term poles lie between 𝒞 and Re η = σ₃ while every other
    /// singularity lies to the left.
    pub fn default_for(id: ArithFnId) -> Self {
        let (sigma1, t0) = match id {
            ArithFnId::VonMangoldt | ArithFnId::Divisor => (0.5, 2.0),
            ArithFnId::SquarefreeDivisor => (0.75, 2.0),
            ArithFnId::TwistedDivisorSq { theta } => (0.75, (theta.abs() + 1.0).max(2.0)),
            ArithFnId::AbelianGroups => (0.155, 2.0),
        };
        Self { sigma1, sigma3: 1.25, t0, h: 1e3 }
    }

    pub fn with_height(&self, h: f64) -> Self {
        Self { h, ..*self }
    }

    pub fn contour(&self) -> Contour {
        let (s1, s3, t0, h) = (self.sigma1, self.sigma3, self.t0, self.h);
        Contour {
            vertices: vec![
                Complex64::new(s3, -h),
                Complex64::new(s3, -t0),
                Complex64::new(s1, -t0),
                Complex64::new(s1, t0),
                Complex64::new(s3, t0),
                Complex64::new(s3, h),
            ],
        }
    }
}

/// An upward polyline through the given vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub vertices: Vec<Complex64>,
}

impl Contour {
    pub fn polyline(vertices: Vec<Complex64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Domain("a contour needs at least two vertices".into()));
        }
        Ok(Self { vertices })
    }

    pub fn segments(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Parity of the crossings of the ray {s − r : r > 0} with the polyline;
    /// odd means `s` lies to the right.
    pub fn is_right_of(&self, s: Complex64) -> bool {
        let mut crossings = 0;
        for (p, q) in self.segments() {
            let (lo, hi) = if p.im < q.im { (p, q) } else { (q, p) };
            // half-open in Im so a vertex on the ray is counted once
            if lo.im == hi.im || !(s.im >= lo.im && s.im < hi.im) {
                continue;
            }
            let x = lo.re + (s.im - lo.im) / (hi.im - lo.im) * (hi.re - lo.re);
            if x < s.re {
                crossings += 1;
            }
        }
        crossings % 2 == 1
    }

    /// Shortest distance from `z` to the polyline.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.segments()
            .map(|(p, q)| {
                let d = q - p;
                let u = ((z - p) * d.conj()).re / d.norm_sqr();
                (z - (p + d * u.clamp(0.0, 1.0))).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// How an A(s) value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TruncatedIntegral,
    ClosedForm,
    Contour,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::TruncatedIntegral => "truncated_integral",
            Method::ClosedForm => "closed_form",
            Method::Contour => "contour",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MellinPoint {
    pub s: Complex64,
    pub value: Complex64,
    pub method: Method,
    /// X for the truncated integral, H for the contour, 0 for the closed form.
    pub truncation: f64,
    pub est_tail: f64,
}

/// Growth exponent β of max|Δ| fitted over dyadic windows ending at X.
fn growth_exponent(ev: &DeltaEvaluator<'_>, x: f64) -> Result<f64> {
    let mut points = Vec::new();
    let mut hi = x;
    while hi / 2.0 >= 2.0 && points.len() < 6 {
        let e = scan_extrema(ev, hi / 2.0, hi, 1)?;
        points.push((hi / 2.0, e.max_abs().max(f64::MIN_POSITIVE)));
        hi /= 2.0;
    }
    points.reverse();
    if points.len() < 3 {
        return Ok(1.0);
    }
    Ok(exponent_fit(&points)?.slope.max(0.0))
}

/// ∫₁^X Δ(x) x^{−s−1} dx for several s in one pass over the pieces.
///
/// The tail estimate is sup_{[X/2,X]}|Δ| · X^{β−σ}/(σ−β) with β the fitted
/// growth exponent of max|Δ|, plus the gap between the order-16 value and
/// an order-8 re-evaluation.
pub fn mellin_truncated_many(ev: &DeltaEvaluator<'_>, ss: &[Complex64], x_max: f64) -> Result<Vec<MellinPoint>> {
    if !(x_max >= 2.0 && x_max <= ev.n_max()) {
        return Err(Error::range(x_max, 2.0, ev.n_max()));
    }
    if let Some(s) = ss.iter().find(|s| !(s.re >= 1.0)) {
        return Err(Error::Domain(format!("truncated Mellin integral needs Re s >= 1, got {s}")));
    }
    let k = ss.len();
    let exps: Vec<Complex64> = ss.iter().map(|s| -(s + 1.0)).collect();
    let chunks = ev.map_chunks(1.0, x_max, |pieces| {
        let mut v8 = vec![CompensatedComplexSum::default(); k];
        let mut v16 = vec![CompensatedComplexSum::default(); k];
        let mut buf8 = vec![Complex64::new(0.0, 0.0); k];
        let mut buf16 = vec![Complex64::new(0.0, 0.0); k];
        for p in pieces {
            for (rule, buf) in [(GaussLegendre::order8(), &mut buf8), (GaussLegendre::order16(), &mut buf16)] {
                buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
                for (x, w) in rule.mapped(p.a, p.b) {
                    let d = ev.piece_value(p.n, x) * w;
                    let lx = x.ln();
                    for (b, e) in buf.iter_mut().zip(&exps) {
                        *b += (e * lx).exp() * d;
                    }
                }
            }
            for i in 0..k {
                v8[i].add(buf8[i]);
                v16[i].add(buf16[i]);
            }
        }
        (v8, v16)
    });
    let mut tot8 = vec![CompensatedComplexSum::default(); k];
    let mut tot16 = vec![CompensatedComplexSum::default(); k];
    for (a, b) in chunks {
        for i in 0..k {
            tot8[i].add(a[i].value());
            tot16[i].add(b[i].value());
        }
    }
    let beta = growth_exponent(ev, x_max)?;
    let sup = scan_extrema(ev, (x_max / 2.0).max(1.0), x_max, 1)?.max_abs();
    ss.iter()
        .enumerate()
        .map(|(i, &s)| {
            let (v8, v16) = (tot8[i].value(), tot16[i].value());
            // keep the tail formula finite when the fit is pessimistic
            let b = beta.min(s.re - 0.05);
            let tail = sup * x_max.powf(b - s.re) / (s.re - b);
            Ok(MellinPoint {
                s,
                value: v16,
                method: Method::TruncatedIntegral,
                truncation: x_max,
                est_tail: tail + (v16 - v8).norm(),
            })
        })
        .collect()
}

pub fn mellin_truncated(ev: &DeltaEvaluator<'_>, s: Complex64, x_max: f64) -> Result<MellinPoint> {
    Ok(mellin_truncated_many(ev, &[s], x_max)?.remove(0))
}

/// A(s) = D(s)/s − Σ coef·p!/(s − exponent)^{p+1}.
pub fn mellin_closed_form(
    id: ArithFnId,
    model: &MainTermModel,
    s: Complex64,
    ctx: &ZetaContext,
) -> Result<MellinPoint> {
    if model.fn_id != id {
        return Err(Error::Domain(format!("model is for {} but series is {id}", model.fn_id)));
    }
    if let Some(t) = model.terms.iter().find(|t| !(s.re > t.exponent.re)) {
        return Err(Error::Domain(format!("Re s = {} must exceed the main-term exponent {}", s.re, t.exponent)));
    }
    let d = dirichlet_value(id, s, ctx)?;
    let mut acc = CompensatedComplexSum::default();
    acc.add(d / s);
    for t in &model.terms {
        let p = t.log_power as i32;
        let fact: f64 = (1..=p).map(f64::from).product();
        acc.add(-t.coef * fact / (s - t.exponent).powi(p + 1));
    }
    Ok(MellinPoint {
        s,
        value: acc.value(),
        method: Method::ClosedForm,
        truncation: 0.0,
        est_tail: 100.0 * ctx.target_abs_error / s.norm(),
    })
}

fn check_clearance(id: ArithFnId, contour: &Contour, ctx: &ZetaContext) -> Result<()> {
    let origin = std::iter::once(Complex64::new(0.0, 0.0));
    for p in singularities(id, ctx).into_iter().map(|s| s.point()).chain(origin) {
        let d = contour.distance_to(p);
        if d < CONTOUR_CLEARANCE {
            return Err(Error::Pole { pole: p.to_string(), distance: d });
        }
    }
    Ok(())
}

/// Result of integrating along a polyline for several s at once.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourIntegral {
    pub values: Vec<Complex64>,
    pub quad_error: f64,
}

/// (1/2πi)∫ D(η)/(η(s−η)) dη along `contour` for every s in `ss`.
pub fn contour_integral(
    id: ArithFnId,
    ss: &[Complex64],
    contour: &Contour,
    ctx: &ZetaContext,
) -> Result<ContourIntegral> {
    check_clearance(id, contour, ctx)?;
    for &s in ss {
        let d = contour.distance_to(s);
        if d < CONTOUR_CLEARANCE {
            return Err(Error::Domain(format!("s = {s} lies on the contour")));
        }
    }
    let mut totals = vec![CompensatedComplexSum::default(); ss.len()];
    let mut quad_error = 0.0;
    for (p, q) in contour.segments() {
        let len = (q - p).norm();
        let dir = (q - p) / (2.0 * PI * Complex64::i());
        let mut failure = None;
        let f = |u: f64| -> Vec<Complex64> {
            let eta = p + (q - p) * u;
            match dirichlet_value(id, eta, ctx) {
                Ok(d) => ss.iter().map(|&s| d / (eta * (s - eta)) * dir).collect(),
                Err(e) => {
                    failure.get_or_insert(e);
                    vec![Complex64::new(f64::NAN, 0.0); ss.len()]
                }
            }
        };
        // panels of about two units on the long legs
        let initial = ((len / 2.0).ceil() as usize).clamp(1, 1000);
        let r = integrate_adaptive(f, 0.0, 1.0, initial, CONTOUR_TOL, CONTOUR_MAX_PANELS);
        if let Some(e) = failure {
            return Err(e);
        }
        let r = r?;
        quad_error += r.error;
        for (t, v) in totals.iter_mut().zip(r.value) {
            t.add(v);
        }
    }
    Ok(ContourIntegral { values: totals.iter().map(|t| t.value()).collect(), quad_error })
}

/// D(σ) for real σ > 1, an upper bound for |D(σ + it)| since a_n ≥ 0.
fn dominant_value(id: ArithFnId, sigma: f64, ctx: &ZetaContext) -> Result<f64> {
    Ok(dirichlet_value(id, Complex64::new(sigma, 0.0), ctx)?.re)
}

/// a₁, the only coefficient whose term n^{−η} does not oscillate along the
/// vertical legs.
fn first_coefficient(id: ArithFnId) -> f64 {
    match id {
        ArithFnId::VonMangoldt => 0.0,
        _ => 1.0,
    }
}

/// (1/2πi)∫ dη/(η(s−η)) over the two legs beyond height H, using the
/// antiderivative (1/s)·log(η/(η−s)), which vanishes at ±i∞.
fn leg_tail_of_constant(s: Complex64, sigma3: f64, h: f64) -> Complex64 {
    let f = |eta: Complex64| (eta / (eta - s)).ln() / s;
    let up = -f(Complex64::new(sigma3, h));
    let down = f(Complex64::new(sigma3, -h));
    (up + down) / (2.0 * PI * Complex64::i())
}

/// A(s) from the truncated contour, for several s sharing one contour.
///
/// Beyond height H the term a₁ contributes a closed form, which is added.
/// Every other term a_n n^{−η} oscillates; one integration by parts bounds
/// its leg integral by a_n n^{−σ₃}(|g(H)| + ∫|g′|)/(2π log n) with
/// g = 1/(η(s−η)). Summing, with b = |Im s| and |η| ≥ t, |s−η| ≥ t−b:
///
/// ```text
/// |tail| ≤ (D(σ₃) − a₁) / (π log 2) · (2/(H−b)² + |s|/(3(H−b)³))
/// ```
pub fn contour_a_many(
    id: ArithFnId,
    ss: &[Complex64],
    spec: &ContourSpec,
    ctx: &ZetaContext,
) -> Result<Vec<MellinPoint>> {
    spec.validate()?;
    let contour = spec.contour();
    for &s in ss {
        let right = if s.im.abs() >= spec.h { s.re > spec.sigma3 } else { contour.is_right_of(s) };
        if !right {
            return Err(Error::Domain(format!("s = {s} is not to the right of the contour")));
        }
        if s.im.abs() >= spec.h * 0.5 {
            return Err(Error::Domain(format!(
                "|Im s| = {} too close to the truncation height {}",
                s.im.abs(),
                spec.h
            )));
        }
    }
    let r = contour_integral(id, ss, &contour, ctx)?;
    let a1 = first_coefficient(id);
    let rest = (dominant_value(id, spec.sigma3, ctx)? - a1).max(0.0);
    Ok(ss
        .iter()
        .zip(r.values)
        .map(|(&s, value)| {
            let gap = spec.h - s.im.abs();
            let bound = rest / (PI * 2f64.ln()) * (2.0 / (gap * gap) + s.norm() / (3.0 * gap.powi(3)));
            MellinPoint {
                s,
                value: value + leg_tail_of_constant(s, spec.sigma3, spec.h) * a1,
                method: Method::Contour,
                truncation: spec.h,
                est_tail: bound + r.quad_error,
            }
        })
        .collect())
}

pub fn contour_a(id: ArithFnId, s: Complex64, spec: &ContourSpec, ctx: &ZetaContext) -> Result<MellinPoint> {
    Ok(contour_a_many(id, &[s], spec, ctx)?.remove(0))
}

/// Outcome of the truncated Perron integral at one x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerronResult {
    pub x: f64,
    pub kappa: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// (1/2πi)∫_{κ−iT}^{κ+iT} D(s)x^s/s ds.
    pub value: f64,
    /// Bound on |value − Σ*_{n≤x} a_n|: truncation plus quadrature error.
    pub error_bound: f64,
    pub quad_error: f64,
}

/// κ = 1 + 1/log x.
pub fn default_kappa(x: f64) -> f64 {
    1.0 + 1.0 / x.ln()
}

/// Truncation bound 2x^κ Σ_n a_n n^{−κ}/(1 + T|log(x/n)|).
///
/// The factor 2 comes from min(1, 1/u) ≤ 2/(1+u) applied to the classical
/// estimate |∫ y^s/s ds/(2πi) − δ(y)| < y^κ min(1, 1/(T|log y|)). Terms
/// beyond the table are bounded by (D(κ) − Σ_{n≤N} a_n n^{−κ})/(1 + T log(N/x)).
pub fn perron_truncation_bound(table: &SieveTable, x: f64, kappa: f64, t: f64, ctx: &ZetaContext) -> Result<f64> {
    let n_max = table.n_max() as f64;
    if !(x < n_max) {
        return Err(Error::range(x, 1.0, n_max));
    }
    let ln_x = x.ln();
    let mut sum = CompensatedSum::new();
    let mut partial = CompensatedSum::new();
    for (n, &a) in table.values().iter().enumerate().skip(1) {
        if a == 0.0 {
            continue;
        }
        let ln_n = (n as f64).ln();
        let w = a * (-kappa * ln_n).exp();
        partial.add(w);
        sum.add(w / (1.0 + t * (ln_x - ln_n).abs()));
    }
    let d = dominant_value(table.fn_id(), kappa, ctx)?;
    let tail_mass = (d - partial.value()).max(0.0) + 100.0 * ctx.target_abs_error;
    let tail = tail_mass / (1.0 + t * (n_max / x).ln());
    Ok(2.0 * (kappa * ln_x).exp() * (sum.value() + tail))
}

const PERRON_TOL: Tolerance = Tolerance { abs: 1e-9, rel: 1e-13 };

/// Perron integrals for several x sharing κ and T, so each D value is
/// reused. Panels are no wider than π/(2 log x_max), a quarter period of
/// the fastest oscillation x^{it}.
pub fn perron_estimate_many(
    id: ArithFnId,
    table: &SieveTable,
    xs: &[f64],
    kappa: f64,
    t: f64,
    ctx: &ZetaContext,
) -> Result<Vec<PerronResult>> {
    if table.fn_id() != id {
        return Err(Error::Domain(format!("table is for {} but series is {id}", table.fn_id())));
    }
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("kappa = {kappa} must exceed the abscissa of absolute convergence 1")));
    }
    if !(t >= 2.0 && t.is_finite()) {
        return Err(Error::range(t, 2.0, f64::INFINITY));
    }
    for &x in xs {
        if !(x > 1.0 && x.is_finite()) {
            return Err(Error::range(x, 1.0, table.n_max() as f64));
        }
        if x.fract() == 0.0 {
            return Err(Error::Domain(format!("x = {x} must not be an integer")));
        }
    }
    let x_hi = xs.iter().copied().fold(2.0, f64::max);
    let width = PI / (2.0 * x_hi.ln());
    let panels = (t / width).ceil() as usize;
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let mut failure = None;
    let f = |u: f64| -> Vec<Complex64> {
        let s = Complex64::new(kappa, u);
        match dirichlet_value(id, s, ctx) {
            Ok(d) => {
                let base = d / s;
                logs.iter().map(|&l| Complex64::new((base * (s * l).exp()).re, 0.0)).collect()
            }
            Err(e) => {
                failure.get_or_insert(e);
                vec![Complex64::new(f64::NAN, 0.0); logs.len()]
            }
        }
    };
    let r = integrate_adaptive(f, 0.0, t, panels, PERRON_TOL, panels * 16 + 1000);
    if let Some(e) = failure {
        return Err(e);
    }
    let r = r?;
    let quad_error = r.error / PI;
    xs.iter()
        .zip(r.value)
        .map(|(&x, v)| {
            let bound = perron_truncation_bound(table, x, kappa, t, ctx)?;
            Ok(PerronResult { x, kappa, t, value: v.re / PI, error_bound: bound + quad_error, quad_error })
        })
        .collect()
}

pub fn perron_estimate(
    id: ArithFnId,
    table: &SieveTable,
    x: f64,
    kappa: f64,
    t: f64,
    ctx: &ZetaContext,
) -> Result<PerronResult> {
    Ok(perron_estimate_many(id, table, &[x], kappa, t, ctx)?.remove(0))
}
