//! Lebesgue measures of oscillation sets, moments and exponent fits.
//!
//! Every set here is {x : h_n(x) > 0} for a smooth function h_n on each
//! unit piece. Pieces are cut at the critical points of h_n (found from
//! its explicit derivative on a 16-point subgrid), so h_n is monotone
//! between consecutive cuts and the set is a union of intervals whose
//! endpoints are bisection roots.

use serde::{Deserialize, Serialize};

use crate::arith::ArithFnId;
use crate::delta::{sign_change_roots, DeltaEvaluator, Piece, SUBGRID};
use crate::error::{Error, Result};
use crate::numeric::{bisect, is_positive, CompensatedSum, GaussLegendre, ROOT_REL_TOL};
use crate::zeta::{first_zero_pole, ZetaContext};

/// Which side of the gauge λx^α is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    /// Δ(x) > λx^α.
    Above,
    /// Δ(x) < −λx^α.
    Below,
    /// |Δ(x)| > λx^α, the union of the two signed sets.
    Absolute,
    /// |Δ(x)| ≤ λx^α, the complement of `Absolute`.
    Band,
}

impl Sign {
    pub fn name(&self) -> &'static str {
        match self {
            Sign::Above => "above",
            Sign::Below => "below",
            Sign::Absolute => "absolute",
            Sign::Band => "band",
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "above" | "+" => Ok(Sign::Above),
            "below" | "-" => Ok(Sign::Below),
            "absolute" => Ok(Sign::Absolute),
            "band" => Ok(Sign::Band),
            _ => Err(Error::Domain(format!("unknown sign {s:?}"))),
        }
    }
}

/// Threshold set query on the window [T, 2T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationQuery {
    pub lambda: f64,
    pub alpha: f64,
    pub sign: Sign,
    #[serde(rename = "T")]
    pub t: f64,
}

impl OscillationQuery {
    pub fn new(lambda: f64, alpha: f64, sign: Sign, t: f64) -> Result<Self> {
        let q = Self { lambda, alpha, sign, t };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::range(self.alpha, 0.0, 1.0));
        }
        if !(self.t >= 1.0 && self.t.is_finite()) {
            return Err(Error::range(self.t, 1.0, f64::INFINITY));
        }
        Ok(())
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t, 2.0 * self.t)
    }

    pub fn with_sign(&self, sign: Sign) -> Self {
        Self { sign, ..*self }
    }

    #[inline]
    fn gauge(&self, x: f64) -> f64 {
        self.lambda * x.powf(self.alpha)
    }

    #[inline]
    fn gauge_derivative(&self, x: f64) -> f64 {
        self.lambda * self.alpha * x.powf(self.alpha - 1.0)
    }
}

/// Comparison curve `coefficient · T^power · (ln T)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurve {
    pub coefficient: f64,
    pub power: f64,
    #[serde(default)]
    pub log_power: f64,
}

impl ReferenceCurve {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficient * t.powf(self.power) * t.ln().powf(self.log_power)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub measure: f64,
    pub crossing_count: usize,
    pub window: (f64, f64),
    pub query: OscillationQuery,
    pub reference_value: Option<f64>,
}

/// A measurable relation on one piece: the set is {h > 0}.
struct Relation<'e, 'a> {
    ev: &'e DeltaEvaluator<'a>,
    q: OscillationQuery,
}

impl Relation<'_, '_> {
    /// h on piece n for a signed relation.
    #[inline]
    fn h(&self, sign: Sign, n: u64, x: f64) -> f64 {
        let d = self.ev.piece_value(n, x);
        match sign {
            Sign::Above => d - self.q.gauge(x),
            Sign::Below => -d - self.q.gauge(x),
            Sign::Band => self.q.gauge(x) - d.abs(),
            Sign::Absolute => unreachable!("absolute is measured as above + below"),
        }
    }

    #[inline]
    fn h_derivative(&self, sign: Sign, x: f64) -> f64 {
        let m = self.ev.model().derivative(x);
        match sign {
            Sign::Above => -m - self.q.gauge_derivative(x),
            Sign::Below => m - self.q.gauge_derivative(x),
            _ => unreachable!("only the signed relations have a smooth derivative"),
        }
    }

    /// Points splitting the piece into sub-pieces on which h is monotone.
    fn breaks(&self, sign: Sign, p: &Piece) -> Result<Vec<f64>> {
        match sign {
            Sign::Above | Sign::Below => sign_change_roots(|x| self.h_derivative(sign, x), p.a, p.b, SUBGRID),
            Sign::Band => {
                // λx^α − |Δ| is monotone between critical points of either
                // signed relation and the roots of Δ
                let mut pts = self.breaks(Sign::Above, p)?;
                pts.extend(self.breaks(Sign::Below, p)?);
                pts.extend(self.ev.critical_points(p.a, p.b)?);
                pts.sort_by(f64::total_cmp);
                let mut cuts = vec![p.a];
                cuts.extend(pts.iter().copied());
                cuts.push(p.b);
                let mut roots = Vec::new();
                for w in cuts.windows(2) {
                    let (u, v) = (w[0], w[1]);
                    let (fu, fv) = (self.ev.piece_value(p.n, u), self.ev.piece_value(p.n, v));
                    if is_positive(fu) != is_positive(fv) {
                        roots.push(bisect(|x| self.ev.piece_value(p.n, x), u, v, ROOT_REL_TOL)?);
                    }
                }
                pts.extend(roots);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                Ok(pts)
            }
            Sign::Absolute => unreachable!(),
        }
    }
}

/// Accumulated result of one set scan.
#[derive(Debug, Clone, Copy, Default)]
struct ChunkScan<A> {
    acc: A,
    first: Option<bool>,
    last: Option<bool>,
    crossings: usize,
}

/// Walks the set {h > 0} over [t1, t2], calling `visit(acc, n, u, v)` for
/// every maximal interval [u, v] of the set inside piece n. Returns the
/// per-chunk accumulators in ascending order and the number of class
/// changes of h (including jumps at integers).
fn scan_set<A, V>(rel: &Relation<'_, '_>, sign: Sign, t1: f64, t2: f64, visit: V) -> Result<(Vec<A>, usize)>
where
    A: Default + Send,
    V: Fn(&mut A, u64, f64, f64) + Sync,
{
    let ev = rel.ev;
    let chunks = ev.map_chunks(t1, t2, |pieces| -> Result<ChunkScan<A>> {
        let mut out = ChunkScan::<A>::default();
        for p in pieces {
            let mut cuts = vec![p.a];
            cuts.extend(rel.breaks(sign, &p)?);
            cuts.push(p.b);
            let h = |x: f64| rel.h(sign, p.n, x);
            let mut x0 = cuts[0];
            let mut c0 = is_positive(h(x0));
            if out.first.is_none() {
                out.first = Some(c0);
            }
            if out.last.is_some_and(|c| c != c0) {
                out.crossings += 1;
            }
            let mut open: Option<f64> = c0.then_some(x0);
            for &x1 in &cuts[1..] {
                if x1 <= x0 {
                    continue;
                }
                let c1 = is_positive(h(x1));
                if c1 != c0 {
                    let r = bisect(h, x0, x1, ROOT_REL_TOL)?;
                    out.crossings += 1;
                    if c0 {
                        visit(&mut out.acc, p.n, open.take().unwrap_or(x0), r);
                    } else {
                        open = Some(r);
                    }
                }
                x0 = x1;
                c0 = c1;
            }
            if let Some(u) = open {
                visit(&mut out.acc, p.n, u, x0);
            }
            out.last = Some(c0);
        }
        Ok(out)
    });
    let mut accs = Vec::with_capacity(chunks.len());
    let mut crossings = 0;
    let mut prev: Option<bool> = None;
    for c in chunks {
        let c = c?;
        if let (Some(p), Some(f)) = (prev, c.first) {
            crossings += usize::from(p != f);
        }
        crossings += c.crossings;
        if c.last.is_some() {
            prev = c.last;
        }
        accs.push(c.acc);
    }
    Ok((accs, crossings))
}

#[derive(Default)]
struct Length(CompensatedSum);

fn signed_measure(rel: &Relation<'_, '_>, sign: Sign) -> Result<(f64, usize)> {
    let (t1, t2) = rel.q.window();
    let (chunks, crossings) = scan_set(rel, sign, t1, t2, |acc: &mut Length, _, u, v| acc.0.add(v - u))?;
    let mut total = CompensatedSum::new();
    for c in chunks {
        total.add(c.0.value());
    }
    Ok((total.value(), crossings))
}

fn check_query(ev: &DeltaEvaluator<'_>, q: &OscillationQuery) -> Result<()> {
    q.validate()?;
    let (t1, t2) = q.window();
    ev.check_window(t1, t2)
}

/// μ of the oscillation set of `q` in [T, 2T].
pub fn oscillation_measure(ev: &DeltaEvaluator<'_>, q: &OscillationQuery) -> Result<MeasureReport> {
    oscillation_measure_with_reference(ev, q, None)
}

pub fn oscillation_measure_with_reference(
    ev: &DeltaEvaluator<'_>,
    q: &OscillationQuery,
    reference: Option<&ReferenceCurve>,
) -> Result<MeasureReport> {
    check_query(ev, q)?;
    let rel = Relation { ev, q: *q };
    let (measure, crossing_count) = match q.sign {
        Sign::Absolute => {
            let (a, ca) = signed_measure(&rel, Sign::Above)?;
            let (b, cb) = signed_measure(&rel, Sign::Below)?;
            (a + b, ca + cb)
        }
        s => signed_measure(&rel, s)?,
    };
    Ok(MeasureReport {
        measure: measure.clamp(0.0, q.t),
        crossing_count,
        window: q.window(),
        query: *q,
        reference_value: reference.map(|r| r.eval(q.t)),
    })
}

/// Value of a moment integral with its order-doubling certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    /// Order-8 Gauss–Legendre value.
    pub value: f64,
    /// |order 16 − order 8| relative to max(|order 16|, ∫|Δ|^k).
    pub certificate_delta: f64,
}

/// Relative tolerance of the order-doubling certificate.
pub const MOMENT_CERTIFICATE: f64 = 1e-8;

#[derive(Default)]
struct MomentAcc {
    v8: CompensatedSum,
    v16: CompensatedSum,
    abs16: CompensatedSum,
}

impl MomentAcc {
    fn add<W: Fn(f64) -> f64>(&mut self, ev: &DeltaEvaluator<'_>, k: i32, n: u64, u: f64, v: f64, weight: &W) {
        let f = |x: f64| ev.piece_value(n, x).powi(k) * weight(x);
        self.v8.add(GaussLegendre::order8().integrate(u, v, f));
        let mut s16 = CompensatedSum::new();
        let mut a16 = CompensatedSum::new();
        for (x, w) in GaussLegendre::order16().mapped(u, v) {
            let y = f(x);
            s16.add(w * y);
            a16.add(w * y.abs());
        }
        self.v16.add(s16.value());
        self.abs16.add(a16.value());
    }
}

fn finish_moment(chunks: Vec<MomentAcc>) -> Result<MomentResult> {
    let (mut v8, mut v16, mut abs16) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for c in chunks {
        v8.add(c.v8.value());
        v16.add(c.v16.value());
        abs16.add(c.abs16.value());
    }
    let (v8, v16, abs16) = (v8.value(), v16.value(), abs16.value());
    let scale = v16.abs().max(abs16);
    let certificate_delta = if scale > 0.0 { (v16 - v8).abs() / scale } else { 0.0 };
    if certificate_delta >= MOMENT_CERTIFICATE {
        return Err(Error::NumericCertificate(format!(
            "moment order doubling moved the value by {certificate_delta:e} relative"
        )));
    }
    Ok(MomentResult { value: v8, certificate_delta })
}

/// ∫_T^{2T} Δ^k dx, optionally restricted to the oscillation set of `restrict`
/// (whose `T` must match).
pub fn moment(ev: &DeltaEvaluator<'_>, k: u32, t: f64, restrict: Option<&OscillationQuery>) -> Result<MomentResult> {
    if ![1, 2, 4].contains(&k) {
        return Err(Error::Domain(format!("moment order {k} not in {{1, 2, 4}}")));
    }
    let (t1, t2) = (t, 2.0 * t);
    ev.check_window(t1, t2)?;
    let k = k as i32;
    let one = |_: f64| 1.0;
    let chunks = match restrict {
        None => ev.map_chunks(t1, t2, |pieces| {
            let mut acc = MomentAcc::default();
            for p in pieces {
                acc.add(ev, k, p.n, p.a, p.b, &one);
            }
            acc
        }),
        Some(q) => {
            check_query(ev, q)?;
            if q.t != t {
                return Err(Error::Domain(format!(
                    "restriction window T = {} differs from moment window T = {t}",
                    q.t
                )));
            }
            let rel = Relation { ev, q: *q };
            let visit = |acc: &mut MomentAcc, n, u, v| acc.add(ev, k, n, u, v, &one);
            match q.sign {
                Sign::Absolute => {
                    let (mut a, _) = scan_set(&rel, Sign::Above, t1, t2, visit)?;
                    let (b, _) = scan_set(&rel, Sign::Below, t1, t2, visit)?;
                    a.extend(b);
                    a
                }
                s => scan_set(&rel, s, t1, t2, visit)?.0,
            }
        }
    };
    finish_moment(chunks)
}

/// Parameters of the smoothed second moment
/// ∫_T^∞ Δ(x)² x^{−2α(T)−1} e^{−2x/y} dx with α(T) = 3/8 − c/(log T)^{1/8}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedMomentQuery {
    pub alpha_c: f64,
    pub y: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub cutoff_eps: f64,
}

impl SmoothedMomentQuery {
    pub fn alpha(&self) -> f64 {
        0.375 - self.alpha_c / self.t.ln().powf(0.125)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedMomentResult {
    pub value: f64,
    pub alpha: f64,
    pub x_stop: f64,
    /// True when the weight had not decayed below the cutoff by n_max.
    pub truncated: bool,
    pub certificate_delta: f64,
}

pub fn smoothed_second_moment(ev: &DeltaEvaluator<'_>, q: &SmoothedMomentQuery) -> Result<SmoothedMomentResult> {
    if !(q.alpha_c > 0.0) {
        return Err(Error::Domain(format!("alpha_c must be positive, got {}", q.alpha_c)));
    }
    if !(q.y > 0.0 && q.y.is_finite()) {
        return Err(Error::Domain(format!("smoothing scale y must be positive, got {}", q.y)));
    }
    if !(q.cutoff_eps > 0.0 && q.cutoff_eps < 1.0) {
        return Err(Error::range(q.cutoff_eps, 0.0, 1.0));
    }
    if !(q.t >= 2.0) {
        return Err(Error::range(q.t, 2.0, ev.n_max()));
    }
    let alpha = q.alpha();
    let natural_stop = 0.5 * q.y * (1.0 / q.cutoff_eps).ln();
    let (x_stop, truncated) = if natural_stop >= ev.n_max() { (ev.n_max(), true) } else { (natural_stop, false) };
    if x_stop <= q.t {
        return Err(Error::range(q.t, 2.0, x_stop));
    }
    ev.check_window(q.t, x_stop)?;
    let exponent = -2.0 * alpha - 1.0;
    let weight = move |x: f64| x.powf(exponent) * (-2.0 * x / q.y).exp();
    let chunks = ev.map_chunks(q.t, x_stop, |pieces| {
        let mut acc = MomentAcc::default();
        for p in pieces {
            acc.add(ev, 2, p.n, p.a, p.b, &weight);
        }
        acc
    });
    let r = finish_moment(chunks)?;
    Ok(SmoothedMomentResult { value: r.value, alpha, x_stop, truncated, certificate_delta: r.certificate_delta })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

/// Least-squares line through (log T, log value).
pub fn exponent_fit(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", points.len())));
    }
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Domain("T values must be strictly increasing".into()));
        }
    }
    if let Some(&(t, v)) = points.iter().find(|&&(t, v)| !(v > 0.0 && t > 0.0)) {
        return Err(Error::Domain(format!("nonpositive point ({t}, {v}) in log-log fit")));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = logs.iter().map(|&(x, y)| (y - intercept - slope * x).abs()).fold(0.0, f64::max);
    Ok(ExponentFit { slope, intercept, max_residual })
}

/// Growth exponent of max|Δ| over the dyadic windows [T, 2T] for
/// T = t_min, 2t_min, … while 2T ≤ t_max. Returns the fit and the
/// per-window maxima.
pub fn dyadic_growth(
    ev: &DeltaEvaluator<'_>,
    t_min: f64,
    t_max: f64,
    subdivisions: usize,
) -> Result<(ExponentFit, Vec<(f64, f64)>)> {
    let mut points = Vec::new();
    let mut t = t_min;
    while 2.0 * t <= t_max * (1.0 + 1e-12) {
        let e = crate::delta::scan_extrema(ev, t, (2.0 * t).min(ev.n_max()), subdivisions)?;
        points.push((t, e.max_abs()));
        t *= 2.0;
    }
    Ok((exponent_fit(&points)?, points))
}

/// Threshold |Res D(s₀)|/|s₀| − ε at the pole s₀ of D coming from the first
/// zeta zero. `epsilon` must be given explicitly.
pub fn residue_threshold(id: ArithFnId, epsilon: f64, ctx: &ZetaContext) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let zp = first_zero_pole(id, ctx)?;
    let lambda = zp.residue.norm() / zp.pole.norm() - epsilon;
    if lambda <= 0.0 {
        return Err(Error::Domain(format!("epsilon {epsilon} exceeds the residue ratio {}", lambda + epsilon)));
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{sieve_table, SieveTable};
    use crate::main_term::{build_main_term, MainTermModel};

    fn divisor(n: u64) -> (SieveTable, MainTermModel) {
        let ctx = ZetaContext::new().unwrap();
        (sieve_table(ArithFnId::Divisor, n).unwrap(), build_main_term(ArithFnId::Divisor, &ctx).unwrap())
    }

    #[test]
    fn partition_of_window() {
        let (t, m) = divisor(2100);
        let ev = DeltaEvaluator::new(&t, &m).unwrap();
        let q = OscillationQuery::new(0.3, 0.25, Sign::Above, 1000.0).unwrap();
        let a = oscillation_measure(&ev, &q).unwrap();
        let b = oscillation_measure(&ev, &q.with_sign(Sign::Below)).unwrap();
        let band = oscillation_measure(&ev, &q.with_sign(Sign::Band)).unwrap();
        let abs = oscillation_measure(&ev, &q.with_sign(Sign::Absolute)).unwrap();
        assert!((a.measure + b.measure + band.measure - 1000.0).abs() < 1e-6);
        assert!((abs.measure - a.measure - b.measure).abs() < 1e-9);
        assert!(a.measure > 0.0 && b.measure > 0.0);
    }

    #[test]
    fn tiny_lambda_splits_window() {
        let (t, m) = divisor(2100);
        let ev = DeltaEvaluator::new(&t, &m).unwrap();
        let q = OscillationQuery::new(1e-12, 0.0, Sign::Above, 1000.0).unwrap();
        let a = oscillation_measure(&ev, &q).unwrap().measure;
        let b = oscillation_measure(&ev, &q.with_sign(Sign::Below)).unwrap().measure;
        assert!((a + b - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn huge_lambda_gives_zero() {
        let (t, m) = divisor(2100);
        let ev = DeltaEvaluator::new(&t, &m).unwrap();
        let q = OscillationQuery::new(1e8, 0.5, Sign::Absolute, 1000.0).unwrap();
        let r = oscillation_measure(&ev, &q).unwrap();
        assert_eq!(r.measure, 0.0);
        assert_eq!(r.crossing_count, 0);
    }

    #[test]
    fn synthetic_constant_moment() {
        let t = SieveTable::from_values(ArithFnId::Divisor, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let m = MainTermModel::zero(ArithFnId::Divisor);
        let ev = DeltaEvaluator::new(&t, &m).unwrap();
        let r = moment(&ev, 1, 2.0, None).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        assert!(matches!(moment(&ev, 3, 2.0, None), Err(Error::Domain(_))));
        assert!(matches!(moment(&ev, 2, 3.0, None), Err(Error::Range { .. })));
    }

    #[test]
    fn fits() {
        let pts: Vec<_> = [10.0, 100.0, 1000.0].iter().map(|&t: &f64| (t, 7.0 * t.powf(1.5))).collect();
        let f = exponent_fit(&pts).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12 && (f.intercept - 7f64.ln()).abs() < 1e-12);
        assert!(exponent_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(exponent_fit(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn reference_curve() {
        let r = ReferenceCurve { coefficient: 2.0, power: 0.5, log_power: 1.0 };
        assert!((r.eval(100.0) - 2.0 * 10.0 * 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn thresholds_need_zero_poles() {
        let ctx = ZetaContext::new().unwrap();
        let l = residue_threshold(ArithFnId::VonMangoldt, 1e-3, &ctx).unwrap();
        assert!((l + 1e-3 - 1.0 / (0.25 + 14.134_725_141_734_693f64.powi(2)).sqrt()).abs() < 1e-12);
        assert!(residue_threshold(ArithFnId::Divisor, 1e-3, &ctx).is_err());
        assert!(residue_threshold(ArithFnId::VonMangoldt, 0.0, &ctx).is_err());
    }
}
