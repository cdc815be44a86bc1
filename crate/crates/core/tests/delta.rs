use etlab_core::numeric::is_positive;
use etlab_core::{
    build_main_term, scan_extrema, sieve_table, sign_changes, ArithFnId, DeltaEvaluator, Direction, MainTermModel,
    SieveTable, ZetaContext,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(id: ArithFnId, n: u64) -> (SieveTable, MainTermModel) {
    let ctx = ZetaContext::new().unwrap();
    (sieve_table(id, n).unwrap(), build_main_term(id, &ctx).unwrap())
}

fn ids() -> [ArithFnId; 5] {
    ArithFnId::all_with_theta(1.0)
}

#[test]
fn worked_values() {
    let (t, m) = setup(ArithFnId::Divisor, 100);
    let ev = DeltaEvaluator::new(&t, &m).unwrap();
    assert!((ev.delta_at(2.5).unwrap() - 0.32320).abs() < 1e-5);

    let (t, m) = setup(ArithFnId::VonMangoldt, 100);
    let ev = DeltaEvaluator::new(&t, &m).unwrap();
    // ψ(10.5) = log 2520
    assert!((ev.delta_at(10.5).unwrap() - (2520f64.ln() - 10.5)).abs() < 1e-12);
}

#[test]
fn jump_identity_and_star_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for id in ids() {
        let (t, m) = setup(id, 5000);
        let ev = DeltaEvaluator::new(&t, &m).unwrap();
        for _ in 0..100 {
            let n: u64 = rng.gen_range(2..5000);
            let x = n as f64;
            let left = ev.piece_value(n - 1, x);
            let right = ev.piece_value(n, x);
            let scale = m.eval(x).abs().max(1.0);
            assert!((left - right + t.value(n)).abs() <= 1e-12 * scale, "{} at {n}", id.name());
            let star = ev.delta_at(x).unwrap();
            assert!((star - 0.5 * (left + right)).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn derivative_is_minus_main_term_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for id in ids() {
        let (t, m) = setup(id, 10_000);
        let ev = DeltaEvaluator::new(&t, &m).unwrap();
        for _ in 0..100 {
            let n: u64 = rng.gen_range(10..9999);
            let x = n as f64 + rng.gen_range(0.01..0.99);
            let h = 1e-4;
            let fd = (ev.delta_at(x + h).unwrap() - ev.delta_at(x - h).unwrap()) / (2.0 * h);
            let want = -m.derivative(x);
            assert!((fd - want).abs() <= 1e-6 * want.abs(), "{} at {x}: {fd} vs {want}", id.name());
            assert_eq!(ev.derivative(x), want);
        }
    }
}

/// Bound on max_{[a,2a]} |Δ| / √a over dyadic windows covering [1, 10⁶],
/// recorded from a first run (observed 1.177, window [8, 16]) with headroom.
const DIVISOR_SQRT_RATIO: f64 = 1.3;

#[test]
fn divisor_error_is_at_most_square_root() {
    let (t, m) = setup(ArithFnId::Divisor, 1_000_000);
    let ev = DeltaEvaluator::new(&t, &m).unwrap();
    let mut a: f64 = 1.0;
    let mut ratio = 0.0f64;
    while a < 1e6 {
        let b = (2.0 * a).min(1e6);
        ratio = ratio.max(scan_extrema(&ev, a, b, 1).unwrap().max_abs() / a.sqrt());
        a = b;
    }
    assert!(ratio < DIVISOR_SQRT_RATIO, "ratio {ratio}");
}

/// Sign classes on a grid of `cells` points per unit interval.
fn grid_classes(ev: &DeltaEvaluator<'_>, t1: f64, t2: f64, cells: usize) -> Vec<(f64, bool)> {
    let steps = ((t2 - t1) * cells as f64) as usize;
    (0..=steps)
        .map(|i| {
            let x = t1 + (t2 - t1) * i as f64 / steps as f64;
            (x, is_positive(ev.delta_at(x).unwrap()))
        })
        .collect()
}

#[test]
fn sign_changes_agree_with_dense_grid() {
    for (id, t1, t2) in [
        (ArithFnId::Divisor, 1000.3, 1400.7),
        (ArithFnId::twisted(1.0).unwrap(), 2000.1, 2300.9),
        (ArithFnId::VonMangoldt, 500.5, 900.5),
    ] {
        let (t, m) = setup(id, 5000);
        let ev = DeltaEvaluator::new(&t, &m).unwrap();
        let list = sign_changes(&ev, t1, t2).unwrap();
        for w in list.crossings.windows(2) {
            assert!(w[0].x <= w[1].x);
            assert_ne!(w[0].direction, w[1].direction);
        }
        let grid = grid_classes(&ev, t1, t2, 64);
        let mut grid_changes = 0;
        for w in grid.windows(2) {
            let ((a, ca), (b, cb)) = (w[0], w[1]);
            if ca != cb {
                grid_changes += 1;
                let inside = list.crossings.iter().filter(|c| c.x >= a && c.x <= b).count();
                assert_eq!(inside % 2, 1, "{}: no crossing in [{a}, {b}]", id.name());
            }
        }
        assert!(list.len() >= grid_changes);
        assert!(list.len() <= grid_changes + grid_changes / 20 + 2, "{} vs {grid_changes}", list.len());
        if let Some(c) = list.crossings.first() {
            let before = grid.iter().take_while(|p| p.0 < c.x).last().unwrap().1;
            assert_eq!(before, c.direction == Direction::Down);
        }
    }
}

#[test]
fn extrema_bracket_the_dense_grid() {
    for id in ids() {
        let (t, m) = setup(id, 5000);
        let ev = DeltaEvaluator::new(&t, &m).unwrap();
        let (t1, t2) = (1000.0, 1500.0);
        let e = scan_extrema(&ev, t1, t2, 1).unwrap();
        let grid: Vec<f64> = (0..=500 * 64).map(|i| ev.delta_at(t1 + i as f64 / 64.0).unwrap()).collect();
        let gmax = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gmin = grid.iter().copied().fold(f64::INFINITY, f64::min);
        // Δ moves by at most max|M′|/64 between grid points
        let slack = m.derivative(t2).abs().max(m.derivative(t1).abs()) / 64.0 + 1e-9;
        assert!(e.max >= gmax - 1e-9 && e.max <= gmax + slack + 1e-9, "{}", id.name());
        assert!(e.min <= gmin + 1e-9 && e.min >= gmin - slack - 1e-9, "{}", id.name());
        assert!(e.argmin >= t1 && e.argmax <= t2);
    }
}
