//! The five arithmetic functions, their segmented sieves, and star sums.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Largest supported table length.
pub const MAX_N: u64 = 1 << 32;

/// Largest supported twist parameter magnitude.
pub const MAX_THETA: f64 = 1e4;

/// Which arithmetic function a table (or Dirichlet series) describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum ArithFnId {
    /// Λ(n): log p on prime powers, 0 elsewhere.
    VonMangoldt,
    /// d(n), the number of divisors.
    Divisor,
    /// 2^ω(n), the number of squarefree divisors.
    SquarefreeDivisor,
    /// |τ(n, θ)|² with τ(n, θ) = Σ_{d|n} d^{iθ}.
    TwistedDivisorSq { theta: f64 },
    /// Number of non-isomorphic abelian groups of order n.
    AbelianGroups,
}

impl ArithFnId {
    pub fn twisted(theta: f64) -> Result<Self> {
        let id = ArithFnId::TwistedDivisorSq { theta };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<()> {
        if let ArithFnId::TwistedDivisorSq { theta } = *self {
            if !theta.is_finite() || theta == 0.0 {
                return Err(Error::Domain(format!("twist parameter must be finite and nonzero, got {theta}")));
            }
        }
        Ok(())
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            ArithFnId::TwistedDivisorSq { theta } => Some(theta),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ArithFnId::VonMangoldt => "von_mangoldt",
            ArithFnId::Divisor => "divisor",
            ArithFnId::SquarefreeDivisor => "squarefree_divisor",
            ArithFnId::TwistedDivisorSq { .. } => "twisted_divisor_sq",
            ArithFnId::AbelianGroups => "abelian_groups",
        }
    }

    /// Tag byte used by the binary cache format.
    pub fn tag_byte(&self) -> u8 {
        match self {
            ArithFnId::VonMangoldt => 0,
            ArithFnId::Divisor => 1,
            ArithFnId::SquarefreeDivisor => 2,
            ArithFnId::TwistedDivisorSq { .. } => 3,
            ArithFnId::AbelianGroups => 4,
        }
    }

    pub fn from_tag_byte(tag: u8, theta: f64) -> Result<Self> {
        let id = match tag {
            0 => ArithFnId::VonMangoldt,
            1 => ArithFnId::Divisor,
            2 => ArithFnId::SquarefreeDivisor,
            3 => ArithFnId::TwistedDivisorSq { theta },
            4 => ArithFnId::AbelianGroups,
            other => return Err(Error::Domain(format!("unknown function tag {other}"))),
        };
        id.validate()?;
        Ok(id)
    }

    /// Parses a function name, attaching `theta` for the twisted case.
    pub fn parse(name: &str, theta: Option<f64>) -> Result<Self> {
        let id = match (name, theta) {
            ("twisted_divisor_sq", Some(t)) => ArithFnId::TwistedDivisorSq { theta: t },
            ("twisted_divisor_sq", None) => return Err(Error::Domain("twisted_divisor_sq requires theta".into())),
            (_, Some(_)) => return Err(Error::Domain(format!("{name} does not take theta"))),
            ("von_mangoldt", None) => ArithFnId::VonMangoldt,
            ("divisor", None) => ArithFnId::Divisor,
            ("squarefree_divisor", None) => ArithFnId::SquarefreeDivisor,
            ("abelian_groups", None) => ArithFnId::AbelianGroups,
            _ => return Err(Error::Domain(format!("unknown function {name}"))),
        };
        id.validate()?;
        Ok(id)
    }

    /// Integer-valued functions carry exact prefix sums.
    pub fn is_integer_valued(&self) -> bool {
        matches!(self, ArithFnId::Divisor | ArithFnId::SquarefreeDivisor | ArithFnId::AbelianGroups)
    }

    /// Whether a(mn) = a(m)a(n) for coprime m, n.
    pub fn is_multiplicative(&self) -> bool {
        !matches!(self, ArithFnId::VonMangoldt)
    }

    pub fn all_with_theta(theta: f64) -> [ArithFnId; 5] {
        [
            ArithFnId::VonMangoldt,
            ArithFnId::Divisor,
            ArithFnId::SquarefreeDivisor,
            ArithFnId::TwistedDivisorSq { theta },
            ArithFnId::AbelianGroups,
        ]
    }
}

impl fmt::Display for ArithFnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.theta() {
            Some(t) => write!(f, "{}(theta={t})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for ArithFnId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ArithFnId::parse(s, None)
    }
}

/// Partition numbers P(0..=32).
const PARTITIONS: [u64; 33] = partition_table();

const fn partition_table() -> [u64; 33] {
    let mut p = [0u64; 33];
    p[0] = 1;
    let mut part = 1;
    while part <= 32 {
        let mut k = part;
        while k <= 32 {
            p[k] += p[k - part];
            k += 1;
        }
        part += 1;
    }
    p
}

/// Number of partitions of `k`; exponents in tables here never exceed 32.
pub fn partition_count(k: u32) -> u64 {
    assert!(k <= 32, "partition count requested for exponent {k} > 32");
    PARTITIONS[k as usize]
}

/// Knobs for table construction.
#[derive(Debug, Clone)]
pub struct SieveOptions {
    /// Refuse tables whose arrays would exceed this many bytes.
    pub memory_budget: u64,
    pub segment_len: usize,
}

impl Default for SieveOptions {
    fn default() -> Self {
        Self { memory_budget: 2 << 30, segment_len: 1 << 15 }
    }
}

/// Values of one arithmetic function on [1, n_max] with prefix sums.
///
/// Index 0 of every array is a zero placeholder so that `values()[n]` is
/// a(n). A finished table is immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveTable {
    fn_id: ArithFnId,
    n_max: u64,
    values: Vec<f64>,
    prefix: Vec<f64>,
    exact_prefix: Option<Vec<u64>>,
}

impl SieveTable {
    /// Builds a table from explicit values `a(1), …, a(n_max)`.
    ///
    /// Exact integer prefix sums are kept when the function is integer
    /// valued and every value is a nonnegative integer.
    pub fn from_values(fn_id: ArithFnId, values: &[f64]) -> Result<Self> {
        fn_id.validate()?;
        if values.is_empty() {
            return Err(Error::Domain("table needs at least one value".into()));
        }
        let mut v = Vec::with_capacity(values.len() + 1);
        v.push(0.0);
        v.extend_from_slice(values);
        Ok(Self::from_indexed(fn_id, v))
    }

    fn from_indexed(fn_id: ArithFnId, values: Vec<f64>) -> Self {
        let n_max = (values.len() - 1) as u64;
        let integral =
            fn_id.is_integer_valued() && values.iter().all(|&x| x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53));
        let (prefix, exact_prefix) = if integral {
            let mut exact = Vec::with_capacity(values.len());
            let mut acc: u64 = 0;
            for &x in &values {
                acc += x as u64;
                exact.push(acc);
            }
            let prefix = exact.iter().map(|&e| e as f64).collect();
            (prefix, Some(exact))
        } else {
            let mut acc = CompensatedSum::new();
            let prefix = values
                .iter()
                .map(|&x| {
                    acc.add(x);
                    acc.value()
                })
                .collect();
            (prefix, None)
        };
        Self { fn_id, n_max, values, prefix, exact_prefix }
    }

    pub fn fn_id(&self) -> ArithFnId {
        self.fn_id
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    /// `values()[n] = a(n)`; index 0 is unused.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `prefix()[n] = Σ_{m≤n} a(m)`.
    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn exact_prefix(&self) -> Option<&[u64]> {
        self.exact_prefix.as_deref()
    }

    pub fn is_exact_integer(&self) -> bool {
        self.exact_prefix.is_some()
    }

    #[inline]
    pub fn value(&self, n: u64) -> f64 {
        self.values[n as usize]
    }

    #[inline]
    pub fn prefix_at(&self, n: u64) -> f64 {
        self.prefix[n as usize]
    }

    /// Star sum Σ*_{n≤x} a_n: the endpoint term gets half weight when x is
    /// an integer.
    pub fn prefix_star(&self, x: f64) -> Result<f64> {
        if !(x >= 1.0 && x <= self.n_max as f64) {
            return Err(Error::range(x, 1.0, self.n_max as f64));
        }
        let n = x.floor() as u64;
        if x == n as f64 {
            Ok(self.prefix_at(n) - 0.5 * self.value(n))
        } else {
            Ok(self.prefix_at(n))
        }
    }
}

/// Star sum of a table at `x`; see [`SieveTable::prefix_star`].
pub fn prefix_star(table: &SieveTable, x: f64) -> Result<f64> {
    table.prefix_star(x)
}

/// Bytes the table arrays for `fn_id` up to `n_max` would occupy.
pub fn table_bytes(fn_id: ArithFnId, n_max: u64) -> u64 {
    let per = if fn_id.is_integer_valued() { 24 } else { 16 };
    (n_max + 1).saturating_mul(per)
}

pub fn sieve_table(fn_id: ArithFnId, n_max: u64) -> Result<SieveTable> {
    sieve_table_with(fn_id, n_max, &SieveOptions::default())
}

/// Sieves a(1..=n_max) segment by segment, extracting each prime power of
/// every n with the primes up to √n_max and treating the cofactor left
/// over as a single large prime.
pub fn sieve_table_with(fn_id: ArithFnId, n_max: u64, opts: &SieveOptions) -> Result<SieveTable> {
    fn_id.validate()?;
    if !(1..=MAX_N).contains(&n_max) {
        return Err(Error::range(n_max as f64, 1.0, MAX_N as f64));
    }
    if let Some(theta) = fn_id.theta() {
        if theta.abs() > MAX_THETA {
            return Err(Error::Domain(format!("|theta| = {} exceeds {MAX_THETA}", theta.abs())));
        }
    }
    let requested = table_bytes(fn_id, n_max);
    if requested > opts.memory_budget {
        return Err(Error::Capacity { requested, budget: opts.memory_budget });
    }

    let primes = small_primes(isqrt(n_max));
    let seg = opts.segment_len.max(16);
    let mut values = vec![0.0; n_max as usize + 1];
    values[1..].par_chunks_mut(seg).enumerate().for_each(|(ci, chunk)| {
        let lo = 1 + (ci * seg) as u64;
        fill_segment(fn_id, lo, chunk, &primes);
    });
    Ok(SieveTable::from_indexed(fn_id, values))
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Primes up to `limit` by the plain Eratosthenes sieve.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Geometric sum Σ_{j=0}^{a} p^{ijθ}.
fn twisted_prime_power(p: u64, a: u32, theta: f64) -> Complex64 {
    let phi = theta * (p as f64).ln();
    let step = Complex64::from_polar(1.0, phi);
    let denom = step - 1.0;
    if denom.norm() > 1e-4 {
        (Complex64::from_polar(1.0, phi * (a as f64 + 1.0)) - 1.0) / denom
    } else {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=a {
            acc += Complex64::from_polar(1.0, phi * j as f64);
        }
        acc
    }
}

fn fill_segment(fn_id: ArithFnId, lo: u64, out: &mut [f64], primes: &[u64]) {
    let len = out.len();
    let hi = lo + len as u64;
    let mut rem: Vec<u64> = (lo..hi).collect();

    // Callback receives (index, prime, exponent) for every prime power
    // exactly dividing lo + index.
    let mut for_each_prime_power = |visit: &mut dyn FnMut(usize, u64, u32)| {
        for &p in primes {
            if p * p >= hi {
                break;
            }
            let first = lo.div_ceil(p) * p;
            let mut m = first;
            while m < hi {
                let i = (m - lo) as usize;
                let mut a = 0;
                while rem[i].is_multiple_of(p) {
                    rem[i] /= p;
                    a += 1;
                }
                visit(i, p, a);
                m += p;
            }
        }
        for (i, r) in rem.iter().enumerate() {
            if *r > 1 {
                visit(i, *r, 1);
            }
        }
    };

    match fn_id {
        ArithFnId::VonMangoldt => {
            let mut distinct = vec![0u8; len];
            let mut prime = vec![0u64; len];
            for_each_prime_power(&mut |i, p, _| {
                distinct[i] += 1;
                prime[i] = p;
            });
            for i in 0..len {
                out[i] = if distinct[i] == 1 { (prime[i] as f64).ln() } else { 0.0 };
            }
        }
        ArithFnId::TwistedDivisorSq { theta } => {
            let mut tau = vec![Complex64::new(1.0, 0.0); len];
            for_each_prime_power(&mut |i, p, a| {
                tau[i] *= twisted_prime_power(p, a, theta);
            });
            for i in 0..len {
                out[i] = tau[i].norm_sqr();
            }
        }
        ArithFnId::Divisor | ArithFnId::SquarefreeDivisor | ArithFnId::AbelianGroups => {
            let mut acc = vec![1u64; len];
            for_each_prime_power(&mut |i, _, a| {
                acc[i] *= match fn_id {
                    ArithFnId::Divisor => a as u64 + 1,
                    ArithFnId::SquarefreeDivisor => 2,
                    _ => partition_count(a),
                };
            });
            for i in 0..len {
                out[i] = acc[i] as f64;
            }
        }
    }
}

/// W(n, f) with f the indicator of [lo, hi]: the number of divisor pairs
/// (d, d') of n with lo ≤ log(d/d') ≤ hi.
pub fn clustering_count(n: u64, lo: f64, hi: f64) -> Result<u64> {
    if n < 1 {
        return Err(Error::Domain("clustering_count needs n ≥ 1".into()));
    }
    if !(lo <= hi) {
        return Err(Error::Domain(format!("empty window [{lo}, {hi}]")));
    }
    let mut logs: Vec<f64> = divisors(n).into_iter().map(|d| (d as f64).ln()).collect();
    logs.sort_by(f64::total_cmp);
    let mut count = 0u64;
    for &ld in &logs {
        // log d − log d' ∈ [lo, hi]  ⇔  log d' ∈ [log d − hi, log d − lo]
        let from = logs.partition_point(|&x| ld - x > hi);
        let to = logs.partition_point(|&x| ld - x >= lo);
        count += to.saturating_sub(from) as u64;
    }
    Ok(count)
}

pub(crate) fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let d = sieve_table(ArithFnId::Divisor, 12).unwrap();
        assert_eq!(d.value(12), 6.0);
        let l = sieve_table(ArithFnId::VonMangoldt, 8).unwrap();
        assert!((l.value(8) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(l.value(1), 0.0);
        assert_eq!(l.value(6), 0.0);
        let a = sieve_table(ArithFnId::AbelianGroups, 8).unwrap();
        assert_eq!(a.value(8), 3.0);
        let t = sieve_table(ArithFnId::twisted(1.0).unwrap(), 2).unwrap();
        // |1 + 2^i|² by direct complex summation
        let direct = (Complex64::new(1.0, 0.0) + Complex64::new(0.0, 2f64.ln()).exp()).norm_sqr();
        assert!((t.value(2) - direct).abs() < 1e-14);
        assert!((t.value(2) - 3.538_477_802_727_944).abs() < 1e-12);
    }

    #[test]
    fn partition_table_values() {
        assert_eq!(partition_count(0), 1);
        assert_eq!(partition_count(3), 3);
        assert_eq!(partition_count(5), 7);
        assert_eq!(partition_count(32), 8349);
    }

    #[test]
    #[should_panic]
    fn partition_cap_is_asserted() {
        partition_count(33);
    }

    #[test]
    fn star_convention() {
        let d = sieve_table(ArithFnId::Divisor, 10).unwrap();
        assert_eq!(d.prefix_star(2.5).unwrap(), 3.0);
        assert_eq!(d.prefix_star(2.0).unwrap(), 2.0);
        let l = sieve_table(ArithFnId::VonMangoldt, 10).unwrap();
        let want = 2f64.ln() + 0.5 * 3f64.ln();
        assert!((l.prefix_star(3.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 1.242_453).abs() < 1e-6);
        assert!(matches!(d.prefix_star(0.5), Err(Error::Range { .. })));
        assert!(matches!(d.prefix_star(10.5), Err(Error::Range { .. })));
    }

    #[test]
    fn sieve_errors() {
        assert!(matches!(sieve_table(ArithFnId::TwistedDivisorSq { theta: 0.0 }, 10), Err(Error::Domain(_))));
        let opts = SieveOptions { memory_budget: 1000, ..Default::default() };
        assert!(matches!(sieve_table_with(ArithFnId::Divisor, 1000, &opts), Err(Error::Capacity { .. })));
        assert!(sieve_table(ArithFnId::Divisor, 0).is_err());
        assert!(sieve_table(ArithFnId::twisted(2e4).unwrap(), 10).is_err());
    }

    #[test]
    fn segment_boundaries_do_not_matter() {
        let small = SieveOptions { segment_len: 17, ..Default::default() };
        for id in ArithFnId::all_with_theta(0.7) {
            let a = sieve_table(id, 3000).unwrap();
            let b = sieve_table_with(id, 3000, &small).unwrap();
            assert_eq!(a.values(), b.values(), "{id}");
        }
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(clustering_count(1, -1.0, 1.0).unwrap(), 1);
        let l2 = 2f64.ln();
        assert_eq!(clustering_count(2, -l2, l2).unwrap(), 4);
        assert_eq!(clustering_count(6, -0.1, 0.1).unwrap(), 4);
        assert!(clustering_count(6, 1.0, -1.0).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!(ArithFnId::parse("divisor", None).unwrap(), ArithFnId::Divisor);
        assert!(ArithFnId::parse("divisor", Some(1.0)).is_err());
        assert!(ArithFnId::parse("twisted_divisor_sq", None).is_err());
        assert_eq!(
            ArithFnId::parse("twisted_divisor_sq", Some(2.0)).unwrap(),
            ArithFnId::TwistedDivisorSq { theta: 2.0 }
        );
        for id in ArithFnId::all_with_theta(1.5) {
            assert_eq!(ArithFnId::from_tag_byte(id.tag_byte(), 1.5).unwrap(), id);
        }
    }
}
