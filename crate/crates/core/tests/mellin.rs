use etlab_core::{
    build_main_term, contour_a, default_kappa, mellin_closed_form, mellin_truncated, perron_estimate, sieve_table,
    ArithFnId, Complex64, ContourSpec, DeltaEvaluator, ZetaContext,
};

#[test]
fn truncated_integral_is_honest_about_its_tail() {
    let ctx = ZetaContext::new().unwrap();
    let id = ArithFnId::Divisor;
    let table = sieve_table(id, 100_000).unwrap();
    let model = build_main_term(id, &ctx).unwrap();
    let ev = DeltaEvaluator::new(&table, &model).unwrap();
    for s in [Complex64::new(1.5, 0.0), Complex64::new(2.0, 7.0), Complex64::new(1.2, -3.0)] {
        let exact = mellin_closed_form(id, &model, s, &ctx).unwrap().value;
        for x in [50_000.0, 100_000.0] {
            let p = mellin_truncated(&ev, s, x).unwrap();
            let err = (p.value - exact).norm();
            assert!(err <= p.est_tail, "s = {s}, X = {x}: error {err} > tail {}", p.est_tail);
        }
    }
}

#[test]
fn contour_agrees_with_closed_form() {
    let ctx = ZetaContext::new().unwrap();
    for id in [ArithFnId::Divisor, ArithFnId::VonMangoldt] {
        let model = build_main_term(id, &ctx).unwrap();
        let s = Complex64::new(1.8, 4.0);
        let exact = mellin_closed_form(id, &model, s, &ctx).unwrap().value;
        let mut last = f64::INFINITY;
        for h in [500.0, 1000.0] {
            let spec = ContourSpec::default_for(id).with_height(h);
            let p = contour_a(id, s, &spec, &ctx).unwrap();
            let err = (p.value - exact).norm();
            assert!(err <= p.est_tail, "{} H = {h}: error {err} > tail {}", id.name(), p.est_tail);
            assert!(p.est_tail < last);
            last = p.est_tail;
        }
    }
}

#[test]
fn perron_recovers_star_sums() {
    let ctx = ZetaContext::new().unwrap();
    for id in [ArithFnId::Divisor, ArithFnId::SquarefreeDivisor] {
        let table = sieve_table(id, 20_000).unwrap();
        for x in [100.5, 1234.5] {
            let r = perron_estimate(id, &table, x, default_kappa(x), 200.0, &ctx).unwrap();
            let star = table.prefix_star(x).unwrap();
            assert!((r.value - star).abs() <= r.error_bound, "{} at {x}", id.name());
        }
    }
}
