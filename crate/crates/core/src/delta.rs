//! The error term Δ(x) = Σ*_{n≤x} a_n − M(x).
//!
//! On every open unit interval (n, n+1) Δ equals prefix[n] − M(x), a
//! smooth function with derivative −M′(x). All scans work piece by piece
//! on that representation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::SieveTable;
use crate::error::{Error, Result};
use crate::main_term::MainTermModel;
use crate::numeric::{bisect, is_positive, ROOT_REL_TOL};

/// Subgrid used to bracket sign changes of derivatives on a unit piece.
pub const SUBGRID: usize = 16;

/// Unit pieces handed to one rayon task.
const CHUNK: u64 = 4096;

/// A table paired with the main term of the same function.
#[derive(Debug, Clone, Copy)]
pub struct DeltaEvaluator<'a> {
    table: &'a SieveTable,
    model: &'a MainTermModel,
}

/// The closed piece [a, b] ⊆ [n, n+1] on which Δ = prefix[n] − M(x)
/// (endpoint values are one-sided limits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub n: u64,
    pub a: f64,
    pub b: f64,
}

impl<'a> DeltaEvaluator<'a> {
    pub fn new(table: &'a SieveTable, model: &'a MainTermModel) -> Result<Self> {
        if table.fn_id() != model.fn_id {
            return Err(Error::Domain(format!("table is for {} but main term is for {}", table.fn_id(), model.fn_id)));
        }
        Ok(Self { table, model })
    }

    pub fn table(&self) -> &'a SieveTable {
        self.table
    }

    pub fn model(&self) -> &'a MainTermModel {
        self.model
    }

    pub fn n_max(&self) -> f64 {
        self.table.n_max() as f64
    }

    /// Δ(x) with the star convention at integers.
    pub fn delta_at(&self, x: f64) -> Result<f64> {
        Ok(self.table.prefix_star(x)? - self.model.eval(x))
    }

    /// prefix[n] − M(x), the smooth branch of Δ on piece n.
    #[inline]
    pub fn piece_value(&self, n: u64, x: f64) -> f64 {
        self.table.prefix_at(n) - self.model.eval(x)
    }

    /// Δ′(x) = −M′(x) away from integers.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        -self.model.derivative(x)
    }

    pub fn check_window(&self, t1: f64, t2: f64) -> Result<()> {
        let n_max = self.n_max();
        if !(t1 >= 1.0 && t1 <= n_max) {
            return Err(Error::range(t1, 1.0, n_max));
        }
        if !(t2 > t1 && t2 <= n_max) {
            return Err(Error::range(t2, t1, n_max));
        }
        Ok(())
    }

    /// Unit pieces covering [t1, t2] in ascending order.
    pub fn pieces(&self, t1: f64, t2: f64) -> impl Iterator<Item = Piece> {
        let first = t1.floor() as u64;
        // a piece starting exactly at t2 would be empty
        let last = (t2.ceil() as u64).saturating_sub(1).max(first);
        (first..=last).filter_map(move |n| {
            let a = t1.max(n as f64);
            let b = t2.min((n + 1) as f64);
            (b > a).then_some(Piece { n, a, b })
        })
    }

    /// Runs `f` over the pieces of [t1, t2] in parallel chunks, returning the
    /// per-chunk results in ascending order.
    pub fn map_chunks<R, F>(&self, t1: f64, t2: f64, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&mut dyn Iterator<Item = Piece>) -> R + Sync,
    {
        let first = t1.floor() as u64;
        let last = t2.ceil() as u64;
        let starts: Vec<u64> = (first..last.max(first + 1)).step_by(CHUNK as usize).collect();
        starts
            .into_par_iter()
            .map(|s| {
                let lo = t1.max(s as f64);
                let hi = t2.min((s + CHUNK) as f64);
                let mut it = self.pieces(lo, hi).filter(move |p| p.n >= s && p.n < s + CHUNK);
                f(&mut it)
            })
            .collect()
    }

    /// Interior points of (a, b) where M′ vanishes, found by bisecting sign
    /// changes of M′ on a uniform subgrid. Empty for models whose
    /// derivative cannot change sign on [1, ∞).
    pub fn critical_points(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        if !self.model.is_oscillatory() {
            return Ok(Vec::new());
        }
        sign_change_roots(|x| self.model.derivative(x), a, b, SUBGRID)
    }
}

/// Roots of `g` in (a, b) bracketed by sign-class changes on `grid` equal
/// steps.
pub fn sign_change_roots<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, grid: usize) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    let step = (b - a) / grid as f64;
    let mut x0 = a;
    let mut g0 = g(a);
    for i in 1..=grid {
        let x1 = if i == grid { b } else { a + step * i as f64 };
        let g1 = g(x1);
        if is_positive(g0) != is_positive(g1) {
            let r = bisect(&g, x0, x1, ROOT_REL_TOL)?;
            if r > a && r < b {
                roots.push(r);
            }
        }
        x0 = x1;
        g0 = g1;
    }
    Ok(roots)
}

pub fn delta_at(ev: &DeltaEvaluator<'_>, x: f64) -> Result<f64> {
    ev.delta_at(x)
}

/// Global extrema of Δ over the inspected points of a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

impl Extrema {
    fn seed() -> Self {
        Self { min: f64::INFINITY, argmin: f64::NAN, max: f64::NEG_INFINITY, argmax: f64::NAN }
    }

    fn push(&mut self, x: f64, v: f64) {
        if v < self.min {
            self.min = v;
            self.argmin = x;
        }
        if v > self.max {
            self.max = v;
            self.argmax = x;
        }
    }

    fn merge(mut self, other: Extrema) -> Self {
        self.push(other.argmin, other.min);
        self.push(other.argmax, other.max);
        self
    }

    /// max |Δ| over the inspected points.
    pub fn max_abs(&self) -> f64 {
        self.max.abs().max(self.min.abs())
    }
}

/// Extrema of Δ on [t1, t2] from one-sided limits at integers, interior
/// critical points of M, a uniform grid of `subdivisions` steps per piece,
/// and the star values at the two endpoints.
pub fn scan_extrema(ev: &DeltaEvaluator<'_>, t1: f64, t2: f64, subdivisions: usize) -> Result<Extrema> {
    ev.check_window(t1, t2)?;
    if subdivisions == 0 {
        return Err(Error::Domain("subdivisions per unit must be at least 1".into()));
    }
    let chunks = ev.map_chunks(t1, t2, |pieces| -> Result<Extrema> {
        let mut ext = Extrema::seed();
        for p in pieces {
            let mut visit = |x: f64| ext.push(x, ev.piece_value(p.n, x));
            visit(p.a);
            visit(p.b);
            for i in 1..subdivisions {
                visit(p.a + (p.b - p.a) * i as f64 / subdivisions as f64);
            }
            for c in ev.critical_points(p.a, p.b)? {
                visit(c);
            }
        }
        Ok(ext)
    });
    let mut ext = Extrema::seed();
    for c in chunks {
        ext = ext.merge(c?);
    }
    ext.push(t1, ev.delta_at(t1)?);
    ext.push(t2, ev.delta_at(t2)?);
    Ok(ext)
}

/// Direction of a sign change of Δ, read left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// From Δ ≤ 0 to Δ > 0.
    Up,
    /// From Δ > 0 to Δ ≤ 0.
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub x: f64,
    pub direction: Direction,
}

/// Sign changes of Δ in increasing order; directions alternate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossingList {
    pub crossings: Vec<Crossing>,
}

impl CrossingList {
    pub fn len(&self) -> usize {
        self.crossings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crossings.is_empty()
    }
}

/// Per-chunk result of a crossing scan: the sign class at the first and
/// last inspected point plus everything in between.
pub(crate) struct ChunkCrossings {
    pub first: Option<(f64, bool)>,
    pub last: Option<(f64, bool)>,
    pub crossings: Vec<Crossing>,
}

/// Merges chunk results; a class change across a chunk boundary sits at
/// the boundary integer.
pub(crate) fn stitch(chunks: Vec<ChunkCrossings>) -> Vec<Crossing> {
    let mut out: Vec<Crossing> = Vec::new();
    let mut prev: Option<bool> = None;
    for c in chunks {
        if let (Some(p), Some((x, cls))) = (prev, c.first) {
            if p != cls {
                out.push(Crossing { x, direction: if cls { Direction::Up } else { Direction::Down } });
            }
        }
        out.extend(c.crossings);
        if let Some((_, cls)) = c.last {
            prev = Some(cls);
        }
    }
    out
}

/// Crossings of the sign class of `g_n(x)` (a family of smooth functions,
/// one per piece) over [t1, t2]. `breaks` lists points that split a piece
/// into monotone sub-pieces. A class change between the end of one piece
/// and the start of the next is placed at the shared integer.
pub(crate) fn piecewise_crossings<G, B>(
    ev: &DeltaEvaluator<'_>,
    t1: f64,
    t2: f64,
    g: G,
    breaks: B,
) -> Result<Vec<Crossing>>
where
    G: Fn(u64, f64) -> f64 + Sync,
    B: Fn(&Piece) -> Result<Vec<f64>> + Sync,
{
    let chunks = ev.map_chunks(t1, t2, |pieces| -> Result<ChunkCrossings> {
        let mut first = None;
        let mut last: Option<(f64, bool)> = None;
        let mut crossings = Vec::new();
        for p in pieces {
            let mut pts = vec![p.a];
            pts.extend(breaks(&p)?);
            pts.push(p.b);
            let mut x0 = pts[0];
            let mut c0 = is_positive(g(p.n, x0));
            if first.is_none() {
                first = Some((x0, c0));
            }
            if let Some((_, c)) = last {
                if c != c0 {
                    crossings.push(Crossing { x: x0, direction: if c0 { Direction::Up } else { Direction::Down } });
                }
            }
            for &x1 in &pts[1..] {
                let c1 = is_positive(g(p.n, x1));
                if c1 != c0 {
                    let r = bisect(|x| g(p.n, x), x0, x1, ROOT_REL_TOL)?;
                    crossings.push(Crossing { x: r, direction: if c1 { Direction::Up } else { Direction::Down } });
                }
                x0 = x1;
                c0 = c1;
            }
            last = Some((x0, c0));
        }
        Ok(ChunkCrossings { first, last, crossings })
    });
    let chunks = chunks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(stitch(chunks))
}

/// All sign changes of Δ on [t1, t2], refined to a few ulps.
pub fn sign_changes(ev: &DeltaEvaluator<'_>, t1: f64, t2: f64) -> Result<CrossingList> {
    ev.check_window(t1, t2)?;
    let crossings = piecewise_crossings(ev, t1, t2, |n, x| ev.piece_value(n, x), |p| ev.critical_points(p.a, p.b))?;
    Ok(CrossingList { crossings })
}
