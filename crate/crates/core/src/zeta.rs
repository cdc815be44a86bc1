//! Riemann zeta by Euler–Maclaurin summation, and the Dirichlet series of
//! the five arithmetic functions built from it.
//!
//! For s = σ + it the evaluator picks the tail length N and the number of
//! Bernoulli corrections M so that the standard remainder bound
//!
//! ```text
//! |R| ≤ |s(s+1)…(s+2M)| · |B_{2M+2}| / (2M+2)! · N^{-σ-2M-1} / (σ+2M+1)
//! ```
//!
//! meets the requested absolute error at the lowest cost. When σ > 1 and
//! the plain Dirichlet sum is cheaper (large σ, or huge |t| with large σ),
//! the truncated series with the bound N^{1-σ}/(σ-1) is used instead.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::arith::ArithFnId;
use crate::error::{Error, Result};
use crate::numeric::CompensatedComplexSum;

/// Euler's constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ζ′(2).
pub const ZETA_PRIME_2: f64 = -0.937_548_254_315_843_8;

/// Ordinates of the first 100 nontrivial zeros of ζ on the critical line.
#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
pub static ZERO_ORDINATES: [f64; 100] = [
    14.134725141734694, 21.022039638771555, 25.010857580145689, 30.424876125859513,
    32.93506158773919, 37.586178158825671, 40.918719012147495, 43.327073280915,
    48.00515088116716, 49.773832477672302, 52.970321477714461, 56.446247697063395,
    59.347044002602353, 60.83177852460981, 65.112544048081607, 67.079810529494174,
    69.546401711173979, 72.067157674481908, 75.704690699083933, 77.144840068874805,
    79.337375020249368, 82.91038085408603, 84.73549298051705, 87.425274613125229,
    88.809111207634465, 92.491899270558484, 94.651344040519887, 95.87063422824531,
    98.831194218193692, 101.31785100573139, 103.72553804047834, 105.44662305232609,
    107.16861118427641, 111.02953554316967, 111.87465917699264, 114.32022091545271,
    116.22668032085755, 118.79078286597622, 121.37012500242065, 122.94682929355259,
    124.25681855434577, 127.5166838795965, 129.57870419995605, 131.08768853093266,
    133.49773720299759, 134.75650975337387, 138.11604205453344, 139.73620895212139,
    141.12370740402112, 143.11184580762063, 146.00098248676552, 147.4227653425596,
    150.05352042078488, 150.92525761224147, 153.0246938111989, 156.11290929423787,
    157.59759181759406, 158.8499881714205, 161.18896413759603, 163.03070968718199,
    165.53706918790042, 167.18443997817451, 169.09451541556882, 169.9119764794117,
    173.41153651959155, 174.75419152336573, 176.44143429771042, 178.37740777609998,
    179.916484020257, 182.20707848436646, 184.87446784838751, 185.59878367770747,
    187.22892258350185, 189.41615865601694, 192.02665636071379, 193.0797266038457,
    195.26539667952924, 196.87648184095832, 198.01530967625191, 201.26475194370379,
    202.49359451414053, 204.18967180310455, 205.39469720216329, 207.90625888780621,
    209.57650971685626, 211.69086259536531, 213.34791935971267, 214.54704478349142,
    216.1695385082637, 219.06759634902138, 220.714918839314, 221.43070555469334,
    224.00700025460434, 224.98332466958229, 227.42144427967929, 229.33741330552535,
    231.25018870049916, 231.98723525318025, 233.6934041789083, 236.52422966581621,
];

/// Radius inside which raw evaluation refuses to approach a pole or a zero
/// of a denominator factor.
pub const PROXIMITY_RADIUS: f64 = 1e-6;

const MAX_BERNOULLI: usize = 60;
const MAX_TERMS: f64 = 2e7;
const MAX_IM: f64 = 1e5;

/// The one Dirichlet series attached to each arithmetic function.
pub type DirichletSeriesId = ArithFnId;

/// Immutable constants and accuracy target shared by every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaContext {
    pub target_abs_error: f64,
    pub euler_gamma: f64,
    pub zeta_prime_2: f64,
    pub zero_ordinates: Vec<f64>,
}

impl ZetaContext {
    pub fn new() -> Result<Self> {
        Self::with_target(1e-12)
    }

    /// Builds a context and checks the shipped constants against series
    /// evaluated on the spot.
    pub fn with_target(target_abs_error: f64) -> Result<Self> {
        if !(target_abs_error > 0.0 && target_abs_error <= 1e-3) {
            return Err(Error::Domain(format!("target error {target_abs_error} outside (0, 1e-3]")));
        }
        let ctx = Self {
            target_abs_error,
            euler_gamma: EULER_GAMMA,
            zeta_prime_2: ZETA_PRIME_2,
            zero_ordinates: ZERO_ORDINATES.to_vec(),
        };
        let gamma = euler_gamma_series();
        if (ctx.euler_gamma - gamma).abs() >= 1e-9 {
            return Err(Error::Precision(format!(
                "Euler constant {} disagrees with series value {gamma}",
                ctx.euler_gamma
            )));
        }
        let zp2 = zeta_prime_2_series();
        if (ctx.zeta_prime_2 - zp2).abs() >= 1e-8 {
            return Err(Error::Precision(format!(
                "zeta'(2) constant {} disagrees with series value {zp2}",
                ctx.zeta_prime_2
            )));
        }
        let first = ctx.zero_ordinates[0];
        if !(14.1347..=14.1348).contains(&first) {
            return Err(Error::Precision(format!("first zero ordinate {first} out of range")));
        }
        Ok(ctx)
    }

    /// Same constants with a different accuracy target.
    pub fn retarget(&self, target_abs_error: f64) -> Self {
        Self { target_abs_error, ..self.clone() }
    }
}

/// H_n − log n with the Euler–Maclaurin correction, n = 10⁴.
fn euler_gamma_series() -> f64 {
    let n = 10_000u32;
    let h: f64 = crate::numeric::compensated_sum((1..=n).rev().map(|k| 1.0 / k as f64));
    let nf = n as f64;
    h - nf.ln() - 1.0 / (2.0 * nf) + 1.0 / (12.0 * nf * nf) - 1.0 / (120.0 * nf.powi(4))
}

/// −Σ log n / n² with an Euler–Maclaurin tail at N = 1000.
fn zeta_prime_2_series() -> f64 {
    let n = 1000u32;
    let head: f64 = crate::numeric::compensated_sum((2..n).rev().map(|k| (k as f64).ln() / (k as f64).powi(2)));
    let nf = n as f64;
    let ln = nf.ln();
    let f = ln / (nf * nf);
    let df = (1.0 - 2.0 * ln) / nf.powi(3);
    let tail = (ln + 1.0) / nf + 0.5 * f - df / 12.0;
    -(head + tail)
}

fn log_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| (0..(1usize << 16)).map(|n| (n.max(1) as f64).ln()).collect())
}

#[inline]
fn ln_n(n: usize) -> f64 {
    let t = log_table();
    if n < t.len() {
        t[n]
    } else {
        (n as f64).ln()
    }
}

/// B_{2k}/(2k)! for k = 0..=MAX_BERNOULLI (index 0 unused).
fn bernoulli_ratios() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = vec![0.0; MAX_BERNOULLI + 2];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let two_k = 2 * k as i32;
            let zeta_2k = match k {
                1 => PI * PI / 6.0,
                2 => PI.powi(4) / 90.0,
                _ => {
                    let head: f64 = (1..1000).rev().map(|n| (n as f64).powi(-two_k)).sum();
                    head + 1000f64.powi(1 - two_k) / (two_k - 1) as f64
                }
            };
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            // 2ζ(2k)/(2π)^{2k}, computed in logs to stay in range
            *slot = sign * 2.0 * zeta_2k * (-(two_k as f64) * (2.0 * PI).ln()).exp();
        }
        out
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Plan {
    Direct { n: usize },
    EulerMaclaurin { n: usize, m: usize },
}

/// Smallest N ≥ `floor` with `log_c + log(1 + d·ln N) − e·ln N ≤ ln eps`,
/// found by fixed-point iteration on the slowly varying log factor.
fn solve_tail(log_c: f64, d: f64, e: f64, eps: f64, floor: f64) -> f64 {
    let mut n = floor;
    for _ in 0..6 {
        let next = ((log_c + (1.0 + d * n.ln()).ln() - eps.ln()) / e).exp().ceil().max(floor);
        if !next.is_finite() {
            return f64::INFINITY;
        }
        if next == n {
            break;
        }
        n = next;
    }
    n
}

fn plan(s: Complex64, eps: f64, with_derivative: bool) -> Result<Plan> {
    let sigma = s.re;
    let deriv = if with_derivative { 1.0 } else { 0.0 };
    let mut best: Option<(f64, Plan)> = None;

    if sigma > 1.0 {
        // Σ_{n>N} n^{-σ}(1 + ln n) ≤ N^{1-σ}(1 + ln N + 1/(σ-1)) / (σ-1)
        let e = sigma - 1.0;
        let log_c = (1.0 + deriv / e).ln() - e.ln();
        let n = solve_tail(log_c, deriv, e, eps, 1.0);
        if n <= MAX_TERMS {
            best = Some((n, Plan::Direct { n: n as usize }));
        }
    }

    // a short direct sum cannot be beaten
    let direct_is_short = matches!(best, Some((n, _)) if n <= 16.0);
    if s.im.abs() <= MAX_IM && !direct_is_short {
        let ratios = bernoulli_ratios();
        let mut worse_in_a_row = 0;
        // log |s(s+1)…(s+2M+1)| over the nonvanishing factors, and the
        // logarithmic derivative Σ 1/(s+j) for the ζ′ remainder
        let mut log_poch = 0.0;
        let mut log_deriv = Complex64::new(0.0, 0.0);
        let mut vanishing = false;
        let mut j = 0usize;
        for m in 1..MAX_BERNOULLI {
            while j < 2 * m + 2 {
                let f = s + j as f64;
                if f.norm() == 0.0 {
                    vanishing = true;
                } else {
                    log_poch += f.norm().ln();
                    log_deriv += 1.0 / f;
                }
                j += 1;
            }
            let exponent = sigma + 2.0 * m as f64 + 1.0;
            if exponent <= 0.0 {
                continue;
            }
            // |P′| + |P|(1 + 1/exponent) multiplies the ζ′ remainder beside |P| ln N
            let (log_amp, d) = if vanishing {
                if !with_derivative {
                    (f64::NEG_INFINITY, 0.0)
                } else {
                    (log_poch, 0.0)
                }
            } else {
                let amp = 1.0 + deriv * (log_deriv.norm() + 1.0 + 1.0 / exponent);
                (log_poch + amp.ln(), deriv / amp)
            };
            let n = if log_amp == f64::NEG_INFINITY {
                2.0
            } else {
                let log_c = log_amp + ratios[m + 1].abs().ln() - exponent.ln() + 2f64.ln();
                solve_tail(log_c, d, exponent, eps, 2.0)
            };
            if n > MAX_TERMS {
                continue;
            }
            let cost = n + 4.0 * m as f64;
            if best.is_none_or(|(c, _)| cost < c) {
                best = Some((cost, Plan::EulerMaclaurin { n: n as usize, m }));
                worse_in_a_row = 0;
            } else {
                // the cost is unimodal in M once N has bottomed out
                worse_in_a_row += 1;
                if worse_in_a_row >= 4 {
                    break;
                }
            }
        }
    }

    match best {
        Some((_, p)) => Ok(p),
        None if s.im.abs() > MAX_IM => Err(Error::Domain(format!(
            "|Im s| = {} beyond {MAX_IM} with Re s = {sigma} too small for direct summation",
            s.im.abs()
        ))),
        None => Err(Error::Precision(format!("no term budget meets {eps:e} at s = {s}"))),
    }
}

#[inline]
fn n_pow_neg_s(n: usize, s: Complex64) -> (Complex64, f64) {
    let l = ln_n(n);
    let mag = (-s.re * l).exp();
    let (sin, cos) = (s.im * l).sin_cos();
    (Complex64::new(mag * cos, -mag * sin), l)
}

fn check_argument(s: Complex64) -> Result<()> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {s}")));
    }
    let d = (s - 1.0).norm();
    if d < PROXIMITY_RADIUS {
        return Err(Error::Pole { pole: "1".into(), distance: d });
    }
    if s.re <= -2.0 {
        return Err(Error::Domain(format!("Re s = {} must exceed -2", s.re)));
    }
    Ok(())
}

fn zeta_core(s: Complex64, eps: f64, with_derivative: bool) -> Result<(Complex64, Complex64)> {
    check_argument(s)?;
    let mut sum = CompensatedComplexSum::default();
    let mut dsum = CompensatedComplexSum::default();
    match plan(s, eps, with_derivative)? {
        Plan::Direct { n } => {
            for k in 1..=n {
                let (p, l) = n_pow_neg_s(k, s);
                sum.add(p);
                if with_derivative {
                    dsum.add(-p * l);
                }
            }
        }
        Plan::EulerMaclaurin { n, m } => {
            for k in 1..n {
                let (p, l) = n_pow_neg_s(k, s);
                sum.add(p);
                if with_derivative {
                    dsum.add(-p * l);
                }
            }
            let (npow, ln_big) = n_pow_neg_s(n, s);
            let nf = n as f64;
            let sm1 = s - 1.0;
            sum.add(npow * nf / sm1);
            sum.add(npow * 0.5);
            if with_derivative {
                dsum.add(npow * nf * (-ln_big / sm1 - 1.0 / (sm1 * sm1)));
                dsum.add(-npow * ln_big * 0.5);
            }
            let ratios = bernoulli_ratios();
            // q = (s)_{2k-1} N^{-s-2k+1} and dq = d/ds of the Pochhammer part
            // times the same power, scaled together to avoid overflow
            let mut q = s * npow / nf;
            let mut dq = npow / nf;
            let inv_n2 = 1.0 / (nf * nf);
            for (k, &c) in ratios.iter().enumerate().take(m + 1).skip(1) {
                sum.add(q * c);
                if with_derivative {
                    dsum.add((dq - q * ln_big) * c);
                }
                let a = s + (2 * k - 1) as f64;
                let b = s + (2 * k) as f64;
                dq = (dq * a * b + q * (a + b)) * inv_n2;
                q = q * a * b * inv_n2;
            }
        }
    }
    Ok((sum.value(), dsum.value()))
}

/// ζ(s) with absolute error at most `ctx.target_abs_error`.
pub fn zeta(s: Complex64, ctx: &ZetaContext) -> Result<Complex64> {
    zeta_core(s, ctx.target_abs_error, false).map(|(z, _)| z)
}

/// ζ′(s) with absolute error at most ten times the context target.
pub fn zeta_prime(s: Complex64, ctx: &ZetaContext) -> Result<Complex64> {
    zeta_core(s, ctx.target_abs_error, true).map(|(_, d)| d)
}

/// ζ(s) and ζ′(s) sharing one pass over the terms.
pub fn zeta_with_derivative(s: Complex64, ctx: &ZetaContext) -> Result<(Complex64, Complex64)> {
    zeta_core(s, ctx.target_abs_error, true)
}

pub fn zeta_real(sigma: f64, ctx: &ZetaContext) -> Result<f64> {
    zeta(Complex64::new(sigma, 0.0), ctx).map(|z| z.re)
}

/// log Γ(z) for Re z > 0 (any branch; callers exponentiate differences).
pub fn ln_gamma(z: Complex64) -> Complex64 {
    const SHIFT: f64 = 12.0;
    let mut shift_sum = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < SHIFT {
        shift_sum += w.ln();
        w += 1.0;
    }
    // Stirling series with B_{2k}/(2k(2k−1)) coefficients
    const COEF: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in COEF {
        series += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift_sum
}

/// χ(s) = π^{s−1/2} Γ((1−s)/2) / Γ(s/2), so that ζ(s) = χ(s) ζ(1−s).
/// Valid for 0 < Re s < 1.
pub fn reflection_factor(s: Complex64) -> Complex64 {
    let log_chi = (s - 0.5) * PI.ln() + ln_gamma((1.0 - s) * 0.5) - ln_gamma(s * 0.5);
    log_chi.exp()
}

/// A point the raw evaluator must keep away from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Singularity {
    Pole(Complex64),
    DenominatorZero(Complex64),
}

impl Singularity {
    pub fn point(&self) -> Complex64 {
        match *self {
            Singularity::Pole(p) | Singularity::DenominatorZero(p) => p,
        }
    }
}

fn zeta_zeros(ctx: &ZetaContext) -> impl Iterator<Item = Complex64> + '_ {
    ctx.zero_ordinates.iter().flat_map(|&g| [Complex64::new(0.5, g), Complex64::new(0.5, -g)])
}

/// Known singularities of D(s) for Re s > −2 (zeros beyond the tabulated
/// ordinates are not listed).
pub fn singularities(id: DirichletSeriesId, ctx: &ZetaContext) -> Vec<Singularity> {
    let one = Complex64::new(1.0, 0.0);
    let mut out = vec![Singularity::Pole(one)];
    match id {
        ArithFnId::VonMangoldt => {
            out.extend(zeta_zeros(ctx).map(Singularity::DenominatorZero));
        }
        ArithFnId::Divisor => {}
        ArithFnId::SquarefreeDivisor | ArithFnId::TwistedDivisorSq { .. } => {
            if let Some(theta) = id.theta() {
                out.push(Singularity::Pole(Complex64::new(1.0, theta)));
                out.push(Singularity::Pole(Complex64::new(1.0, -theta)));
            }
            out.push(Singularity::DenominatorZero(Complex64::new(-1.0, 0.0)));
            out.extend(zeta_zeros(ctx).map(|z| Singularity::DenominatorZero(z * 0.5)));
        }
        ArithFnId::AbelianGroups => {
            out.extend((2..=8).map(|k| Singularity::Pole(Complex64::new(1.0 / k as f64, 0.0))));
        }
    }
    out
}

fn check_proximity(id: DirichletSeriesId, s: Complex64, ctx: &ZetaContext) -> Result<()> {
    for sing in singularities(id, ctx) {
        let d = (s - sing.point()).norm();
        if d < PROXIMITY_RADIUS {
            return Err(match sing {
                Singularity::Pole(p) => Error::Pole { pole: p.to_string(), distance: d },
                Singularity::DenominatorZero(z) => Error::DenominatorZero { zero: z.to_string(), distance: d },
            });
        }
    }
    Ok(())
}

/// Upper bound for ζ(u) − 1 (u > 1), which also bounds |log ζ(w)| for
/// Re w = u.
fn zeta_minus_one_bound(u: f64) -> f64 {
    2f64.powf(-u) + 2f64.powf(1.0 - u) / (u - 1.0)
}

/// Number of factors K for ∏_{k≤K} ζ(k s) so that the neglected
/// Σ_{k>K} log ζ(ks) is below `eps`.
pub fn abelian_truncation(sigma: f64, eps: f64) -> usize {
    let ratio = 2f64.powf(-sigma);
    // 2^{-u} dominates the bound, which gives a starting point just below K
    let start = ((-(eps * (1.0 - ratio)).log2() - 2.0) / sigma).floor() - 1.0;
    let mut k = (start.max((2.0 / sigma).ceil()) as usize).max(8);
    loop {
        let tail = zeta_minus_one_bound((k + 1) as f64 * sigma) / (1.0 - ratio);
        if tail < eps {
            return k;
        }
        k += 1;
    }
}

/// D(s) for the chosen arithmetic function.
pub fn dirichlet_value(id: DirichletSeriesId, s: Complex64, ctx: &ZetaContext) -> Result<Complex64> {
    id.validate()?;
    check_proximity(id, s, ctx)?;
    let eps = ctx.target_abs_error;
    match id {
        ArithFnId::VonMangoldt => {
            let (z, dz) = zeta_with_derivative(s, ctx)?;
            Ok(-dz / z)
        }
        ArithFnId::Divisor => {
            let z = zeta(s, ctx)?;
            Ok(z * z)
        }
        ArithFnId::SquarefreeDivisor => {
            let z = zeta(s, ctx)?;
            Ok(z * z / zeta(s * 2.0, ctx)?)
        }
        ArithFnId::TwistedDivisorSq { theta } => {
            let shift = Complex64::new(0.0, theta);
            let z = zeta(s, ctx)?;
            let zp = zeta(s + shift, ctx)?;
            let zm = zeta(s - shift, ctx)?;
            Ok(z * z * zp * zm / zeta(s * 2.0, ctx)?)
        }
        ArithFnId::AbelianGroups => {
            if s.re <= 1.0 / 7.0 {
                return Err(Error::Domain(format!("abelian product needs Re s > 1/7, got {}", s.re)));
            }
            // the truncation bounds the neglected log-sum; the absolute
            // change is about |D| times that, so extend once |D| is known
            let k_first = abelian_truncation(s.re, eps);
            let per = ctx.retarget(eps / k_first as f64);
            let mut prod = Complex64::new(1.0, 0.0);
            let mut k = 0;
            let mut k_max = k_first;
            while k < k_max {
                k += 1;
                let arg = s * k as f64;
                if (arg - 1.0).norm() < PROXIMITY_RADIUS {
                    return Err(Error::Pole { pole: format!("1/{k}"), distance: (s - 1.0 / k as f64).norm() });
                }
                prod *= zeta(arg, &per)?;
                if k == k_first {
                    k_max = abelian_truncation(s.re, 0.5 * eps / prod.norm().max(1.0));
                }
            }
            Ok(prod)
        }
    }
}

/// The k-th tabulated zero of ζ (1-based, upper half plane), polished by
/// Newton steps.
pub fn refined_zero(k: usize, ctx: &ZetaContext) -> Result<Complex64> {
    let gamma = *ctx
        .zero_ordinates
        .get(k.wrapping_sub(1))
        .ok_or_else(|| Error::Domain(format!("zero index {k} not tabulated")))?;
    let tight = ctx.retarget(1e-15);
    let mut rho = Complex64::new(0.5, gamma);
    for _ in 0..4 {
        let (z, dz) = zeta_with_derivative(rho, &tight)?;
        let step = z / dz;
        rho -= step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    Ok(rho)
}

/// A pole of D(s) produced by the first zeta zero, with the residue of D there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPole {
    pub pole: Complex64,
    pub residue: Complex64,
}

/// The pole of D nearest the real axis (upper half plane) coming from a
/// zeta zero: ρ₁ for −ζ′/ζ, ρ₁/2 for the series with ζ(2s) in the
/// denominator.
pub fn first_zero_pole(id: DirichletSeriesId, ctx: &ZetaContext) -> Result<ZeroPole> {
    let rho = refined_zero(1, ctx)?;
    match id {
        ArithFnId::VonMangoldt => Ok(ZeroPole { pole: rho, residue: Complex64::new(-1.0, 0.0) }),
        ArithFnId::SquarefreeDivisor | ArithFnId::TwistedDivisorSq { .. } => {
            let s0 = rho * 0.5;
            let dz = zeta_prime(rho, ctx)?;
            let z = zeta(s0, ctx)?;
            let mut num = z * z;
            if let Some(theta) = id.theta() {
                let shift = Complex64::new(0.0, theta);
                num *= zeta(s0 + shift, ctx)? * zeta(s0 - shift, ctx)?;
            }
            // ζ(2s) ≈ 2ζ′(ρ)(s − s₀) near s₀
            Ok(ZeroPole { pole: s0, residue: num / (dz * 2.0) })
        }
        _ => Err(Error::Domain(format!("{id} has no zeta-zero poles"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn closed_forms() {
        let ctx = ZetaContext::new().unwrap();
        assert!((zeta(c(2.0, 0.0), &ctx).unwrap().re - PI * PI / 6.0).abs() < 1e-12);
        assert!((zeta(c(0.0, 0.0), &ctx).unwrap().re + 0.5).abs() < 1e-12);
        assert!((zeta(c(4.0, 0.0), &ctx).unwrap().re - PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((zeta(c(-1.0, 0.0), &ctx).unwrap().re + 1.0 / 12.0).abs() < 1e-12);
        let z = zeta(c(0.5, 14.134_725_141), &ctx).unwrap();
        assert!(z.norm() < 1e-6);
    }

    #[test]
    fn derivative_closed_forms() {
        let ctx = ZetaContext::new().unwrap();
        let d0 = zeta_prime(c(0.0, 0.0), &ctx).unwrap();
        assert!((d0.re + 0.5 * (2.0 * PI).ln()).abs() < 1e-11);
        let d2 = zeta_prime(c(2.0, 0.0), &ctx).unwrap();
        assert!((d2.re - ZETA_PRIME_2).abs() < 1e-11);
        assert!(zeta_prime(c(3.0, 0.0), &ctx).unwrap().re < 0.0);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let ctx = ZetaContext::new().unwrap();
        for s in [c(0.3, 5.0), c(1.5, -30.0), c(2.2, 400.0), c(-1.3, 2.0)] {
            let h = 1e-5;
            let fd = (zeta(s + h, &ctx).unwrap() - zeta(s - h, &ctx).unwrap()) / (2.0 * h);
            let d = zeta_prime(s, &ctx).unwrap();
            assert!((fd - d).norm() < 1e-7 * (1.0 + d.norm()), "{s}: {fd} vs {d}");
        }
    }

    #[test]
    fn direct_and_euler_maclaurin_agree() {
        for s in [c(3.5, 200.0), c(8.0, 3000.0), c(1.8, 10.0)] {
            let (vd, _) = zeta_core(s, 1e-13, false).unwrap();
            let n = 400_000usize;
            let direct: Complex64 = (1..=n).map(|k| n_pow_neg_s(k, s).0).sum::<Complex64>()
                + Complex64::new(n as f64, 0.0).powc(1.0 - s) / (s - 1.0);
            assert!((vd - direct).norm() < 1e-9, "{s}: {vd} vs {direct}");
        }
    }

    #[test]
    fn pole_and_domain_errors() {
        let ctx = ZetaContext::new().unwrap();
        assert!(matches!(zeta(c(1.0, 0.0), &ctx), Err(Error::Pole { .. })));
        assert!(matches!(zeta(c(1.0 + 1e-7, 0.0), &ctx), Err(Error::Pole { .. })));
        assert!(zeta(c(1.0 + 1e-5, 0.0), &ctx).is_ok());
        assert!(matches!(zeta(c(-2.5, 0.0), &ctx), Err(Error::Domain(_))));
        assert!(matches!(zeta(c(0.5, 2e5), &ctx), Err(Error::Domain(_))));
        assert!(zeta(c(40.0, 2e5), &ctx).is_ok());
    }

    #[test]
    fn functional_equation() {
        let ctx = ZetaContext::new().unwrap();
        for t in [5.0, 20.0, 50.0] {
            let s = c(0.4, t);
            let lhs = zeta(s, &ctx).unwrap();
            let rhs = reflection_factor(s) * zeta(1.0 - s, &ctx).unwrap();
            assert!((lhs - rhs).norm() < 1e-8, "t={t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(c(0.5, 0.0)).re - 0.5 * PI.ln()).abs() < 1e-14);
        assert!((ln_gamma(c(5.0, 0.0)).re - 24f64.ln()).abs() < 1e-13);
        // |Γ(1/2 + it)|² = π / cosh(πt)
        let t = 3.0;
        let g = ln_gamma(c(0.5, t)).re * 2.0;
        assert!((g - (PI / (PI * t).cosh()).ln()).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_identities() {
        let ctx = ZetaContext::new().unwrap();
        let v = dirichlet_value(ArithFnId::SquarefreeDivisor, c(2.0, 0.0), &ctx).unwrap();
        assert!((v.re - 2.5).abs() < 1e-10 && v.im.abs() < 1e-12);
        let d = dirichlet_value(ArithFnId::Divisor, c(2.0, 0.0), &ctx).unwrap();
        assert!((d.re - (PI * PI / 6.0).powi(2)).abs() < 1e-11);
        assert!((d.re - 2.705_808_084).abs() < 1e-9);
        let err = dirichlet_value(ArithFnId::SquarefreeDivisor, c(0.25, ZERO_ORDINATES[0] / 2.0), &ctx);
        assert!(matches!(err, Err(Error::DenominatorZero { .. })));
        let err = dirichlet_value(ArithFnId::twisted(1.0).unwrap(), c(1.0, 1.0), &ctx);
        assert!(matches!(err, Err(Error::Pole { .. })));
        assert!(dirichlet_value(ArithFnId::AbelianGroups, c(0.1, 0.0), &ctx).is_err());
        assert!(matches!(dirichlet_value(ArithFnId::AbelianGroups, c(0.5, 0.0), &ctx), Err(Error::Pole { .. })));
    }

    #[test]
    fn abelian_tail_is_below_target() {
        let ctx = ZetaContext::new().unwrap();
        for s in [c(2.0, 0.0), c(1.3, 4.0), c(0.3, 1.0)] {
            let base = dirichlet_value(ArithFnId::AbelianGroups, s, &ctx).unwrap();
            let k = abelian_truncation(s.re, ctx.target_abs_error);
            let mut extended = base;
            for j in k + 1..=k + 5 {
                extended *= zeta(s * j as f64, &ctx).unwrap();
            }
            assert!((extended - base).norm() < ctx.target_abs_error * base.norm().max(1.0));
        }
    }

    #[test]
    fn first_zero_is_refined() {
        let ctx = ZetaContext::new().unwrap();
        let rho = refined_zero(1, &ctx).unwrap();
        assert!((rho.re - 0.5).abs() < 1e-13);
        assert!((rho.im - 14.134_725_141_734_693).abs() < 1e-12);
        assert!(zeta(rho, &ctx).unwrap().norm() < 1e-12);
        for k in [2, 10, 50, 100] {
            let z = zeta(c(0.5, ZERO_ORDINATES[k - 1]), &ctx).unwrap();
            assert!(z.norm() < 1e-10, "zero {k}: {z}");
        }
    }
}
