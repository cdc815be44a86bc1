//! Quadrature, root bracketing and compensated summation shared by the
//! analytic modules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Compensated sum of complex values (real and imaginary parts separately).
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Values a quadrature rule can accumulate.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, other: &Self, w: f64);
    fn norm(&self) -> f64;
    fn dist(&self, other: &Self) -> f64;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += w * other;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl QuadValue for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl QuadValue for Vec<Complex64> {
    fn zero_like(&self) -> Self {
        vec![Complex64::new(0.0, 0.0); self.len()]
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b * w;
        }
    }
    fn norm(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
    fn dist(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre polynomial.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order8() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(8))
    }

    pub fn order16() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes mapped to [a, b] with matching weights.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut acc = CompensatedSum::new();
        for (x, w) in self.mapped(a, b) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// Kronrod 15-point extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss–Kronrod (7, 15) panel. Returns the Kronrod value and
/// |K15 − G7| as the error estimate.
pub fn gauss_kronrod15<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = fc.zero_like();
    let mut gauss = fc.zero_like();
    kron.add_scaled(&fc, WGK15[7]);
    gauss.add_scaled(&fc, WG7[3]);
    for j in 0..7 {
        let dx = half * XGK15[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        kron.add_scaled(&f1, WGK15[j]);
        kron.add_scaled(&f2, WGK15[j]);
        if j % 2 == 1 {
            gauss.add_scaled(&f1, WG7[j / 2]);
            gauss.add_scaled(&f2, WG7[j / 2]);
        }
    }
    let mut k = kron.zero_like();
    k.add_scaled(&kron, half);
    let mut g = gauss.zero_like();
    g.add_scaled(&gauss, half);
    let err = k.dist(&g);
    (k, err)
}

/// Absolute and relative tolerance for adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive Gauss–Kronrod quadrature over [a, b], starting from
/// `initial` equal panels.
pub fn integrate_adaptive<V, F>(
    mut f: F,
    a: f64,
    b: f64,
    initial: usize,
    tol: Tolerance,
    max_panels: usize,
) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    let initial = initial.max(1);
    let mut heap = BinaryHeap::with_capacity(initial * 2);
    let mut evaluations = 0;
    let width = (b - a) / initial as f64;
    for i in 0..initial {
        let lo = a + width * i as f64;
        let hi = if i + 1 == initial { b } else { lo + width };
        let (value, error) = gauss_kronrod15(&mut f, lo, hi);
        evaluations += 15;
        heap.push(Panel { a: lo, b: hi, value, error });
    }
    // running totals drive the stopping test; the reported value is always
    // re-summed in position order
    let (mut run_total, mut run_err) = sum_panels(&heap);
    loop {
        let target = tol.abs.max(tol.rel * run_total.norm());
        if !run_err.is_finite() || !run_total.norm().is_finite() {
            return Err(Error::NonConvergence("non-finite integrand value".to_string()));
        }
        if run_err <= target {
            let (total, err) = sum_panels(&heap);
            run_total = total.clone();
            run_err = err;
            if err <= tol.abs.max(tol.rel * total.norm()) {
                return Ok(QuadResult { value: total, error: err, evaluations });
            }
        }
        if heap.len() >= max_panels {
            return Err(Error::NonConvergence(format!(
                "{} panels exhausted with error {run_err:e} > {target:e}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::NonConvergence("panel width reached machine resolution".to_string()));
        }
        let (v1, e1) = gauss_kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = gauss_kronrod15(&mut f, mid, worst.b);
        evaluations += 30;
        run_total.add_scaled(&worst.value, -1.0);
        run_total.add_scaled(&v1, 1.0);
        run_total.add_scaled(&v2, 1.0);
        run_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

fn sum_panels<V: QuadValue>(heap: &BinaryHeap<Panel<V>>) -> (V, f64) {
    // Sum in ascending order of position so the result does not depend on
    // heap layout.
    let mut panels: Vec<&Panel<V>> = heap.iter().collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut total = panels[0].value.zero_like();
    let mut err = 0.0;
    for p in panels {
        total.add_scaled(&p.value, 1.0);
        err += p.error;
    }
    (total, err)
}

/// Sign class used by every root search: strictly positive or not.
#[inline]
pub fn is_positive(v: f64) -> bool {
    v > 0.0
}

/// Bisection on [a, b] where `f(a)` and `f(b)` fall in different sign
/// classes. Stops once the bracket is below `rel_tol·|x|` (and never
/// looser than a few ulps).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, rel_tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::ToleranceFailure(format!("NaN at bracket end ({a}, {b})")));
    }
    let pa = is_positive(fa);
    if pa == is_positive(fb) {
        return Err(Error::ToleranceFailure(format!("bracket ({a}, {b}) does not straddle a sign change")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let scale = a.abs().max(b.abs()).max(1e-300);
        if b - a <= rel_tol * scale || mid <= a || mid >= b {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::ToleranceFailure(format!("NaN at {mid}")));
        }
        if is_positive(fm) == pa {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::ToleranceFailure(format!("bisection did not reach tolerance on ({a}, {b})")))
}

/// Root tolerance used for crossings: well inside the 1e-10·x budget.
pub const ROOT_REL_TOL: f64 = 4.0 * f64::EPSILON;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for (rule, deg) in [(GaussLegendre::order8(), 15), (GaussLegendre::order16(), 31)] {
            for p in 0..=deg {
                let got = rule.integrate(0.0, 2.0, |x| x.powi(p));
                let exact = 2f64.powi(p + 1) / (p + 1) as f64;
                assert!((got - exact).abs() <= 1e-13 * exact, "deg {p}: {got} vs {exact}");
            }
        }
        let w: f64 = GaussLegendre::order8().mapped(-1.0, 1.0).map(|(_, w)| w).sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kronrod_panel_exact_to_degree_22() {
        let mut f = |x: f64| x.powi(22);
        let (v, e) = gauss_kronrod15(&mut f, -1.0, 1.0);
        assert!((v - 2.0 / 23.0).abs() < 1e-15);
        assert!(e > 0.0);
        let mut g = |x: f64| x.powi(13);
        let (_, e) = gauss_kronrod15(&mut g, 0.0, 1.0);
        // G7 is exact to degree 13 too, so the estimate collapses.
        assert!(e < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaked_complex_integrand() {
        // ∫_{-10}^{10} 1/(x - i/10) dx = 2i·atan(100)
        let r = integrate_adaptive(
            |x| Complex64::new(1.0, 0.0) / Complex64::new(x, -0.1),
            -10.0,
            10.0,
            4,
            Tolerance::new(1e-12, 1e-12),
            10_000,
        )
        .unwrap();
        let exact = Complex64::new(0.0, 2.0 * 100f64.atan());
        assert!((r.value - exact).norm() < 1e-11);
    }

    #[test]
    fn adaptive_reports_non_convergence() {
        let r = integrate_adaptive(|x: f64| 1.0 / x.abs().sqrt(), -1.0, 1.0, 1, Tolerance::new(1e-14, 0.0), 20);
        assert!(matches!(r, Err(Error::NonConvergence(_))));
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = compensated_sum([1e16, 1.0, -1e16, 1.0]);
        assert_eq!(v, 2.0);
    }

    #[test]
    fn bisect_locates_root() {
        let r = bisect(|x| x * x - 2.0, 1.0, 2.0, ROOT_REL_TOL).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}
