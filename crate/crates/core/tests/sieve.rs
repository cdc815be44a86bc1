use std::fs;

use etlab_core::cache::write_table_versioned;
use etlab_core::{cache_roundtrip, read_table, sieve_table, ArithFnId, Error, SieveTable};
use num_complex::Complex64;
use proptest::prelude::*;

/// Prime factorisation by trial division.
fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// Partition numbers by the coin-change recurrence.
fn partitions(k: usize) -> u64 {
    let mut p = vec![0u64; k + 1];
    p[0] = 1;
    for part in 1..=k {
        for m in part..=k {
            p[m] += p[m - part];
        }
    }
    p[k]
}

fn brute(id: ArithFnId, n: u64) -> f64 {
    match id {
        ArithFnId::VonMangoldt => match factor(n).as_slice() {
            [(p, _)] => (*p as f64).ln(),
            _ => 0.0,
        },
        ArithFnId::Divisor => divisors(n).len() as f64,
        ArithFnId::SquarefreeDivisor => {
            divisors(n).iter().filter(|&&d| factor(d).iter().all(|&(_, e)| e == 1)).count() as f64
        }
        ArithFnId::TwistedDivisorSq { theta } => {
            let tau: Complex64 = divisors(n).iter().map(|&d| Complex64::from_polar(1.0, theta * (d as f64).ln())).sum();
            tau.norm_sqr()
        }
        ArithFnId::AbelianGroups => factor(n).iter().map(|&(_, e)| partitions(e as usize)).product::<u64>() as f64,
    }
}

#[test]
fn sieve_matches_definitions_up_to_ten_thousand() {
    let n_max = 10_000;
    for id in ArithFnId::all_with_theta(1.0).into_iter().chain([ArithFnId::twisted(-2.75).unwrap()]) {
        let t = sieve_table(id, n_max).unwrap();
        for n in 1..=n_max {
            let (got, want) = (t.value(n), brute(id, n));
            if id.is_integer_valued() {
                assert_eq!(got, want, "{} at n = {n}", id.name());
            } else {
                assert!(
                    (got - want).abs() <= 1e-9 * want.abs().max(1e-300),
                    "{} at n = {n}: {got} vs {want}",
                    id.name()
                );
            }
        }
    }
}

#[test]
fn hyperbola_identity() {
    for n in [1_000u64, 1_000_000] {
        let t = sieve_table(ArithFnId::Divisor, n).unwrap();
        let floor_sum: u64 = (1..=n).map(|k| n / k).sum();
        assert_eq!(t.exact_prefix().unwrap()[n as usize], floor_sum);
        assert_eq!(t.prefix_at(n), floor_sum as f64);
    }
}

#[test]
fn chebyshev_psi_at_small_points() {
    let t = sieve_table(ArithFnId::VonMangoldt, 100).unwrap();
    // ψ(10) = log(2³·3²·5·7) = log 2520
    assert!((t.prefix_at(10) - 2520f64.ln()).abs() < 1e-13);
    assert!((t.prefix_star(10.5).unwrap() - 2520f64.ln()).abs() < 1e-13);
}

fn any_id() -> impl Strategy<Value = ArithFnId> {
    prop_oneof![
        Just(ArithFnId::VonMangoldt),
        Just(ArithFnId::Divisor),
        Just(ArithFnId::SquarefreeDivisor),
        (0.1f64..20.0).prop_map(|t| ArithFnId::TwistedDivisorSq { theta: t }),
        Just(ArithFnId::AbelianGroups),
    ]
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prefix_is_nondecreasing(id in any_id(), n_max in 1u64..3000) {
        let t = sieve_table(id, n_max).unwrap();
        for w in t.prefix()[1..].windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn multiplicative_on_coprime_pairs(id in any_id(), m in 1u64..120, n in 1u64..120) {
        prop_assume!(id.is_multiplicative() && gcd(m, n) == 1);
        let t = sieve_table(id, m * n).unwrap();
        let (lhs, rhs) = (t.value(m * n), t.value(m) * t.value(n));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn star_convention_and_left_continuity(id in any_id(), n in 2u64..2000, frac in 0.001f64..0.999) {
        let t = sieve_table(id, 2001).unwrap();
        let nf = n as f64;
        let left = t.prefix_star(nf - 1e-9).unwrap();
        let right = t.prefix_star(nf + 1e-9).unwrap();
        let at = t.prefix_star(nf).unwrap();
        prop_assert_eq!(left, t.prefix_at(n - 1));
        prop_assert_eq!(right, t.prefix_at(n));
        prop_assert!((at - 0.5 * (left + right)).abs() <= 1e-12 * right.max(1.0));
        prop_assert!((right - left - t.value(n)).abs() <= 1e-12 * right.max(1.0));
        prop_assert_eq!(t.prefix_star(nf + frac).unwrap(), t.prefix_at(n));
    }

    #[test]
    fn cache_roundtrip_is_bitwise(id in any_id(), raw in prop::collection::vec(0u32..1000, 1..400)) {
        let values: Vec<f64> = if id.is_integer_valued() {
            raw.iter().map(|&v| v as f64).collect()
        } else {
            raw.iter().map(|&v| v as f64 / 7.0).collect()
        };
        let table = SieveTable::from_values(id, &values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.etlb");
        let back = cache_roundtrip(&table, &path).unwrap();
        prop_assert_eq!(&back, &table);
        for (a, b) in back.values().iter().zip(table.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        let bytes = fs::read(&path).unwrap();
        let cut = bytes.len() - 1 - (raw[0] as usize % (bytes.len() - 1));
        fs::write(&path, &bytes[..cut]).unwrap();
        prop_assert!(matches!(read_table(&path), Err(Error::CorruptCache(_))));
    }
}

#[test]
fn version_bump_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.etlb");
    let table = sieve_table(ArithFnId::Divisor, 50).unwrap();
    write_table_versioned(&table, &path, etlab_core::cache::FORMAT_VERSION + 1).unwrap();
    assert!(matches!(read_table(&path), Err(Error::VersionMismatch { .. })));
}
