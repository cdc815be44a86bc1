use etlab_core::main_term::{abelian_coefficient, ABELIAN_TERMS};
use etlab_core::zeta::{abelian_truncation, reflection_factor, zeta_with_derivative};
use etlab_core::{dirichlet_value, zeta, ArithFnId, ZetaContext};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Borwein's accelerated alternating series for ζ(s), Re s > 0, s ≠ 1.
/// With n terms the error is about |3 + √8|^{−n} (1 + 2|t|) e^{π|t|/2};
/// n = 60 covers |t| ≤ 20 far beyond double precision.
fn borwein_zeta(s: Complex64) -> Complex64 {
    let n = 60usize;
    let nf = n as f64;
    let mut term = 1.0 / nf;
    let mut acc = term;
    let mut d = vec![nf * acc];
    for i in 1..=n {
        let i_f = i as f64;
        term *= (nf + i_f - 1.0) * 4.0 * (nf - i_f + 1.0) / ((2.0 * i_f - 1.0) * (2.0 * i_f));
        acc += term;
        d.push(nf * acc);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (d[k] - d[n]) * (-s * ((k + 1) as f64).ln()).exp();
    }
    let two = Complex64::new(2.0, 0.0);
    -sum / (d[n] * (1.0 - two.powc(1.0 - s)))
}

#[test]
fn borwein_oracle_is_sane() {
    let z2 = borwein_zeta(Complex64::new(2.0, 0.0));
    assert!((z2.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zeta_matches_alternating_series(sigma in 0.05f64..4.0, t in -20.0f64..20.0) {
        let s = Complex64::new(sigma, t);
        prop_assume!((s - 1.0).norm() > 1e-3);
        let ctx = ZetaContext::new().unwrap();
        let got = zeta(s, &ctx).unwrap();
        let want = borwein_zeta(s);
        prop_assert!((got - want).norm() <= 1e-10 * want.norm().max(1.0), "s = {s}: {got} vs {want}");
    }

    #[test]
    fn derivative_matches_oracle_difference(sigma in 0.2f64..3.0, t in 2.0f64..15.0) {
        let s = Complex64::new(sigma, t);
        let ctx = ZetaContext::new().unwrap();
        let (_, dz) = zeta_with_derivative(s, &ctx).unwrap();
        let h = 1e-4;
        // five-point stencil on the oracle
        let fd = (-borwein_zeta(s + 2.0 * h) + 8.0 * borwein_zeta(s + h) - 8.0 * borwein_zeta(s - h)
            + borwein_zeta(s - 2.0 * h))
            / (12.0 * h);
        prop_assert!((dz - fd).norm() <= 1e-8 * dz.norm().max(1.0));
    }
}

#[test]
fn functional_equation_on_a_vertical_line() {
    let ctx = ZetaContext::new().unwrap();
    for t in [5.0, 20.0, 50.0] {
        let s = Complex64::new(0.4, t);
        let r = zeta(s, &ctx).unwrap() - reflection_factor(s) * zeta(1.0 - s, &ctx).unwrap();
        assert!(r.norm() < 1e-8, "t = {t}: residual {}", r.norm());
    }
}

#[test]
fn divisor_series_is_zeta_squared() {
    let ctx = ZetaContext::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let s = Complex64::new(2.0, rng.gen_range(-50.0..50.0));
        let z = zeta(s, &ctx).unwrap();
        let d = dirichlet_value(ArithFnId::Divisor, s, &ctx).unwrap();
        assert!((d - z * z).norm() < 1e-12);
    }
}

/// The truncated product against 400 oracle factors, whose remaining tail
/// is below 1e−30 for the real parts used here.
#[test]
fn abelian_product_tail_is_below_target() {
    let ctx = ZetaContext::new().unwrap();
    for s in [Complex64::new(0.6, 3.0), Complex64::new(1.5, 0.0), Complex64::new(0.3, -1.0)] {
        let k = abelian_truncation(s.re, ctx.target_abs_error);
        assert!(k < 400);
        let chosen = dirichlet_value(ArithFnId::AbelianGroups, s, &ctx).unwrap();
        let full: Complex64 = (1..=400).map(|j| borwein_zeta(s * j as f64)).product();
        assert!((full - chosen).norm() < 10.0 * ctx.target_abs_error, "s = {s}: {}", (full - chosen).norm());
    }
}

/// b_k = ∏_{j ≤ 400, j ≠ k} ζ(j/k) with the oracle zeta. The dropped
/// factors have log ζ(u) < 2^{1−u} for u > 2, so for k ≤ 6 they move
/// log b_k by less than 1e−18.
#[test]
fn abelian_coefficients_match_product_oracle() {
    let ctx = ZetaContext::new().unwrap();
    for k in 1..=ABELIAN_TERMS {
        let mut b = 1.0;
        for j in (1..=400).filter(|&j| j != k) {
            b *= borwein_zeta(Complex64::new(j as f64 / k as f64, 0.0)).re;
        }
        let got = abelian_coefficient(k, &ctx).unwrap();
        assert!((got - b).abs() < 1e-10 * b.abs().max(1.0), "b_{k}: {got} vs {b}");
    }
}

#[test]
fn twisted_series_matches_partial_sum() {
    let ctx = ZetaContext::new().unwrap();
    let id = ArithFnId::twisted(1.0).unwrap();
    let table = etlab_core::sieve_table(id, 200_000).unwrap();
    let partial: f64 = (1..=200_000u64).rev().map(|n| table.value(n) * (n as f64).powf(-3.0)).sum();
    let d = dirichlet_value(id, Complex64::new(3.0, 0.0), &ctx).unwrap();
    // |τ(n,1)|² ≤ d(n)², and Σ_{n>N} d(n)² n^{−3} is about 1e−8 at N = 2·10⁵
    assert!((d.re - partial).abs() < 1e-6 && d.im.abs() < 1e-14);
}
