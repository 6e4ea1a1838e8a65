//! Measure spaces over unions of half-open intervals, simple functions,
//! partition refinement, monotone approximation and L^alpha quadrature.
//!
//! Ground sets are finite unions of half-open intervals `[lo, hi)` so that
//! disjointness, intersection and refinement are exact. The control measure
//! is Lebesgue with a piecewise-constant density.

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::error::{Error, Result};

const QUAD_REL_TOL: f64 = 1e-8;

/// Half-open interval `[lo, hi)`. `hi` may be infinite for kernel supports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn len(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, s: f64) -> bool {
        self.lo <= s && s < self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

/// Finite union of pairwise-disjoint half-open intervals, kept sorted and
/// with touching intervals merged (canonical form).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Cell {
    intervals: Vec<Interval>,
}

impl Cell {
    pub fn empty() -> Self {
        Cell { intervals: vec![] }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Cell::from_intervals(vec![Interval::new(lo, hi)])
    }

    pub fn from_intervals(mut ivs: Vec<Interval>) -> Self {
        ivs.retain(|iv| !iv.is_empty());
        ivs.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        let mut merged: Vec<Interval> = Vec::with_capacity(ivs.len());
        for iv in ivs {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Cell { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, s: f64) -> bool {
        // intervals are sorted; binary search on lo
        let idx = self.intervals.partition_point(|iv| iv.lo <= s);
        idx > 0 && self.intervals[idx - 1].contains(s)
    }

    pub fn intersect(&self, other: &Cell) -> Cell {
        let mut out = Vec::new();
        for a in &self.intervals {
            for b in &other.intervals {
                let c = a.intersect(b);
                if !c.is_empty() {
                    out.push(c);
                }
            }
        }
        Cell::from_intervals(out)
    }

    pub fn union(&self, other: &Cell) -> Cell {
        let mut ivs = self.intervals.clone();
        ivs.extend_from_slice(&other.intervals);
        Cell::from_intervals(ivs)
    }

    pub fn subtract(&self, other: &Cell) -> Cell {
        let mut out = Vec::new();
        for a in &self.intervals {
            let mut lo = a.lo;
            for b in &other.intervals {
                if b.hi <= lo || b.lo >= a.hi {
                    continue;
                }
                if b.lo > lo {
                    out.push(Interval::new(lo, b.lo.min(a.hi)));
                }
                lo = lo.max(b.hi);
                if lo >= a.hi {
                    break;
                }
            }
            if lo < a.hi {
                out.push(Interval::new(lo, a.hi));
            }
        }
        Cell::from_intervals(out)
    }

    pub fn is_subset_of(&self, other: &Cell) -> bool {
        self.subtract(other).is_empty()
    }

    pub fn is_disjoint_from(&self, other: &Cell) -> bool {
        self.intersect(other).is_empty()
    }

    /// Total Lebesgue length (without density).
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|iv| iv.len()).sum()
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        if self.is_empty() {
            None
        } else {
            Some((self.intervals[0].lo, self.intervals.last().unwrap().hi))
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.bounds().is_none_or(|(lo, hi)| lo.is_finite() && hi.is_finite())
    }
}

/// Lebesgue-with-density over a finite union of intervals; the density is
/// constant on each piece. Sigma-finite by construction.
#[derive(Clone, Debug)]
pub struct MeasureSpace {
    pieces: Vec<(Interval, f64)>,
}

impl MeasureSpace {
    pub fn new(pieces: Vec<(Interval, f64)>) -> Result<Self> {
        let pieces: Vec<_> = pieces.into_iter().filter(|(iv, _)| !iv.is_empty()).collect();
        if pieces.is_empty() {
            return Err(Error::EmptyInput("measure space needs at least one piece"));
        }
        for (iv, w) in &pieces {
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "density weight {w} on [{}, {}) must be finite and >= 0",
                    iv.lo, iv.hi
                )));
            }
        }
        let mut sorted = pieces.clone();
        sorted.sort_by(|a, b| a.0.lo.partial_cmp(&b.0.lo).unwrap());
        for pair in sorted.windows(2) {
            if pair[1].0.lo < pair[0].0.hi {
                return Err(Error::InvalidParameter("measure pieces must be disjoint".into()));
            }
        }
        Ok(MeasureSpace { pieces: sorted })
    }

    /// Lebesgue measure on `[lo, hi)`.
    pub fn lebesgue(lo: f64, hi: f64) -> Self {
        MeasureSpace {
            pieces: vec![(Interval::new(lo, hi), 1.0)],
        }
    }

    pub fn ground(&self) -> Cell {
        Cell::from_intervals(self.pieces.iter().map(|(iv, _)| *iv).collect())
    }

    pub fn pieces(&self) -> &[(Interval, f64)] {
        &self.pieces
    }

    /// `m(cell)`; may be infinite on unbounded cells.
    pub fn measure(&self, cell: &Cell) -> f64 {
        let mut total = 0.0;
        for (piece, w) in &self.pieces {
            for iv in cell.intervals() {
                let c = piece.intersect(iv);
                if !c.is_empty() {
                    total += w * c.len();
                }
            }
        }
        total
    }

    /// Integrates `f` against `m` over `cell` by adaptive quadrature.
    pub fn integrate(&self, cell: &Cell, f: &dyn Fn(f64) -> f64) -> Result<f64> {
        let mut total = 0.0;
        for (piece, w) in &self.pieces {
            if *w == 0.0 {
                continue;
            }
            for iv in cell.intervals() {
                let c = piece.intersect(iv);
                if c.is_empty() {
                    continue;
                }
                let part = if c.hi.is_finite() {
                    integrate_adaptive(f, c.lo, c.hi)?
                } else {
                    integrate_tail(f, c.lo)?
                };
                total += w * part;
            }
        }
        Ok(total)
    }

    /// Samples a location from `m` restricted to `cell` (normalized).
    pub fn sample_in(&self, cell: &Cell, rng: &mut impl Rng) -> Result<f64> {
        let mut segments: Vec<(Interval, f64)> = Vec::new();
        let mut total = 0.0;
        for (piece, w) in &self.pieces {
            for iv in cell.intervals() {
                let c = piece.intersect(iv);
                if !c.is_empty() && *w > 0.0 {
                    if !c.hi.is_finite() {
                        return Err(Error::Truncation(
                            "cannot sample from an unbounded cell".into(),
                        ));
                    }
                    total += w * c.len();
                    segments.push((c, *w));
                }
            }
        }
        if total <= 0.0 {
            return Err(Error::InvalidParameter("cell has zero measure".into()));
        }
        let mut target = rng.random::<f64>() * total;
        for (seg, w) in &segments {
            let mass = w * seg.len();
            if target < mass {
                return Ok(seg.lo + target / w);
            }
            target -= mass;
        }
        let last = segments.last().unwrap().0;
        Ok(last.lo + 0.5 * last.len())
    }
}

// 7-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 7] = [
    -0.9491079123427585,
    -0.7415311855993945,
    -0.4058451513773972,
    0.0,
    0.4058451513773972,
    0.7415311855993945,
    0.9491079123427585,
];
const GL_WEIGHTS: [f64; 7] = [
    0.1294849661688697,
    0.2797053914892766,
    0.3818300505051189,
    0.4179591836734694,
    0.3818300505051189,
    0.2797053914892766,
    0.1294849661688697,
];

fn gl7(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL_NODES
        .iter()
        .zip(&GL_WEIGHTS)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

fn composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| gl7(f, a + i as f64 * h, a + (i + 1) as f64 * h)).sum()
}

/// Composite Gauss-Legendre with subdivision doubling until stable.
fn integrate_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Ok(0.0);
    }
    let mut n = 4usize;
    let mut prev = composite(f, a, b, n);
    loop {
        n *= 2;
        let cur = composite(f, a, b, n);
        if (cur - prev).abs() <= QUAD_REL_TOL * cur.abs().max(1e-300) {
            return Ok(cur);
        }
        if n >= 1 << 18 {
            return Err(Error::Integrability(format!(
                "quadrature on [{a}, {b}) failed to converge"
            )));
        }
        prev = cur;
    }
}

/// Integrates over `[a, inf)` by doubling windows until the tail is
/// negligible relative to the accumulated value.
fn integrate_tail(f: &dyn Fn(f64) -> f64, a: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = a;
    let mut width = 1.0;
    let mut quiet = 0u32;
    for _ in 0..64 {
        let part = integrate_adaptive(f, lo, lo + width)?;
        total += part;
        if part.abs() <= 1e-12 * total.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo += width;
        width *= 2.0;
    }
    Err(Error::Integrability(format!(
        "tail integral from {a} did not converge; divergent integrand?"
    )))
}

/// `g(s) = sum_j coeff_j 1_{cell_j}(s)` over pairwise-disjoint cells of
/// finite measure with nonnegative coefficients.
#[derive(Clone, Debug)]
pub struct SimpleFunction {
    parts: Vec<(Cell, f64)>,
    // flattened (lo, hi, coeff), sorted by lo, for O(log) evaluation
    flat: Vec<(f64, f64, f64)>,
}

impl PartialEq for SimpleFunction {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl SimpleFunction {
    pub fn new(parts: Vec<(Cell, f64)>) -> Result<Self> {
        let parts: Vec<_> = parts.into_iter().filter(|(c, _)| !c.is_empty()).collect();
        for (cell, coeff) in &parts {
            if !coeff.is_finite() || *coeff < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "simple-function coefficient {coeff} must be finite and >= 0"
                )));
            }
            if !cell.is_bounded() {
                return Err(Error::InvalidParameter(
                    "simple-function cells must have finite measure".into(),
                ));
            }
        }
        for i in 0..parts.len() {
            for j in (i + 1)..parts.len() {
                if !parts[i].0.is_disjoint_from(&parts[j].0) {
                    return Err(Error::InvalidParameter(
                        "simple-function cells must be pairwise disjoint".into(),
                    ));
                }
            }
        }
        let mut flat: Vec<(f64, f64, f64)> = parts
            .iter()
            .flat_map(|(cell, coeff)| {
                cell.intervals().iter().map(move |iv| (iv.lo, iv.hi, *coeff))
            })
            .collect();
        flat.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(SimpleFunction { parts, flat })
    }

    pub fn zero() -> Self {
        SimpleFunction { parts: vec![], flat: vec![] }
    }

    pub fn indicator(cell: Cell) -> Result<Self> {
        SimpleFunction::new(vec![(cell, 1.0)])
    }

    pub fn parts(&self) -> &[(Cell, f64)] {
        &self.parts
    }

    pub fn eval(&self, s: f64) -> f64 {
        let idx = self.flat.partition_point(|&(lo, _, _)| lo <= s);
        if idx > 0 {
            let (lo, hi, coeff) = self.flat[idx - 1];
            if lo <= s && s < hi {
                return coeff;
            }
        }
        0.0
    }

    pub fn support(&self) -> Cell {
        self.parts
            .iter()
            .filter(|(_, c)| *c > 0.0)
            .fold(Cell::empty(), |acc, (cell, _)| acc.union(cell))
    }

    pub fn max_coefficient(&self) -> f64 {
        self.parts.iter().map(|(_, c)| *c).fold(0.0, f64::max)
    }

    /// Pointwise restriction `g * 1_cell`.
    pub fn restrict(&self, cell: &Cell) -> SimpleFunction {
        let parts = self
            .parts
            .iter()
            .map(|(c, coeff)| (c.intersect(cell), *coeff))
            .filter(|(c, _)| !c.is_empty())
            .collect();
        SimpleFunction::new(parts).expect("restriction preserves validity")
    }

    /// Coefficients of this function on each cell of `partition`; errors if
    /// the function is not constant on some cell.
    pub fn coefficients_on(&self, partition: &Partition) -> Result<Vec<f64>> {
        let mut coeffs = Vec::with_capacity(partition.cells().len());
        for cell in partition.cells() {
            let mut value: Option<f64> = None;
            for (part_cell, coeff) in &self.parts {
                let overlap = part_cell.intersect(cell);
                if overlap.is_empty() {
                    continue;
                }
                if !cell.is_subset_of(part_cell) {
                    return Err(Error::InvalidParameter(
                        "partition cell straddles a simple-function cell".into(),
                    ));
                }
                value = Some(*coeff);
                break;
            }
            coeffs.push(value.unwrap_or(0.0));
        }
        Ok(coeffs)
    }
}

// JSON schema: array of { "cells": [[lo, hi], ...], "coeff": c }
#[derive(Serialize, Deserialize)]
struct SimplePartJson {
    cells: Vec<[f64; 2]>,
    coeff: f64,
}

impl Serialize for SimpleFunction {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let records: Vec<SimplePartJson> = self
            .parts
            .iter()
            .map(|(cell, coeff)| SimplePartJson {
                cells: cell.intervals().iter().map(|iv| [iv.lo, iv.hi]).collect(),
                coeff: *coeff,
            })
            .collect();
        records.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SimpleFunction {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<SimplePartJson>::deserialize(de)?;
        let parts = records
            .into_iter()
            .map(|r| {
                let ivs = r.cells.iter().map(|[lo, hi]| Interval::new(*lo, *hi)).collect();
                (Cell::from_intervals(ivs), r.coeff)
            })
            .collect();
        SimpleFunction::new(parts).map_err(serde::de::Error::custom)
    }
}

/// A list of pairwise-disjoint cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    cells: Vec<Cell>,
}

impl Partition {
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        let cells: Vec<_> = cells.into_iter().filter(|c| !c.is_empty()).collect();
        for i in 0..cells.len() {
            for j in (i + 1)..cells.len() {
                if !cells[i].is_disjoint_from(&cells[j]) {
                    return Err(Error::InvalidParameter(
                        "partition cells must be pairwise disjoint".into(),
                    ));
                }
            }
        }
        Ok(Partition { cells })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn covered(&self) -> Cell {
        self.cells.iter().fold(Cell::empty(), |acc, c| acc.union(c))
    }

    /// True if every cell of `self` is a union of cells of `finer`.
    pub fn is_refined_by(&self, finer: &Partition) -> bool {
        self.cells.iter().all(|coarse| {
            let pieces: Vec<&Cell> = finer
                .cells
                .iter()
                .filter(|c| !c.is_disjoint_from(coarse))
                .collect();
            let mut rebuilt = Cell::empty();
            for p in &pieces {
                if !p.is_subset_of(coarse) {
                    return false;
                }
                rebuilt = rebuilt.union(p);
            }
            rebuilt == *coarse
        })
    }
}

/// Common refinement of two simple functions: a partition refining both
/// together with the coefficient lists reproducing each function. Cells
/// outside both supports are dropped; the complement of one support inside
/// the other carries coefficient zero.
pub fn common_refinement(
    g1: &SimpleFunction,
    g2: &SimpleFunction,
) -> Result<(Partition, Vec<f64>, Vec<f64>)> {
    // membership id: which cell of g_i an elementary interval lies in
    // (None = complement), mirroring the intersection construction with
    // the zero-coefficient complement cells.
    let mut breaks: Vec<f64> = Vec::new();
    for g in [g1, g2] {
        for (cell, _) in g.parts() {
            for iv in cell.intervals() {
                breaks.push(iv.lo);
                breaks.push(iv.hi);
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();

    let member = |g: &SimpleFunction, t: f64| -> Option<usize> {
        g.parts().iter().position(|(cell, _)| cell.contains(t))
    };

    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(isize, isize), Vec<Interval>> = BTreeMap::new();
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(a < b) {
            continue;
        }
        let t = 0.5 * (a + b);
        let m1 = member(g1, t);
        let m2 = member(g2, t);
        if m1.is_none() && m2.is_none() {
            continue;
        }
        let key = (
            m1.map_or(-1, |i| i as isize),
            m2.map_or(-1, |i| i as isize),
        );
        groups.entry(key).or_default().push(Interval::new(a, b));
    }

    let mut cells = Vec::new();
    let mut coeffs1 = Vec::new();
    let mut coeffs2 = Vec::new();
    for ((m1, m2), ivs) in groups {
        cells.push(Cell::from_intervals(ivs));
        coeffs1.push(if m1 >= 0 { g1.parts()[m1 as usize].1 } else { 0.0 });
        coeffs2.push(if m2 >= 0 { g2.parts()[m2 as usize].1 } else { 0.0 });
    }
    Ok((Partition::new(cells)?, coeffs1, coeffs2))
}

/// Builds a consistent sequence of representations: partition `n` refines
/// partition `n - 1` and carries the coefficients of `gs[n]`. Earlier
/// functions stay representable on later partitions (`coefficients_on`).
pub fn consistent_sequence(gs: &[SimpleFunction]) -> Result<Vec<(Partition, Vec<f64>)>> {
    let first = gs
        .first()
        .ok_or(Error::EmptyInput("consistent_sequence needs functions"))?;
    let mut out: Vec<(Partition, Vec<f64>)> = Vec::with_capacity(gs.len());
    let p1 = Partition::new(first.parts().iter().map(|(c, _)| c.clone()).collect())?;
    let c1 = first.parts().iter().map(|(_, c)| *c).collect();
    out.push((p1, c1));
    for g in &gs[1..] {
        let prev = SimpleFunction::new(
            out.last()
                .unwrap()
                .0
                .cells()
                .iter()
                .zip(&out.last().unwrap().1)
                .map(|(c, v)| (c.clone(), *v))
                .collect(),
        )?;
        let (partition, _, coeffs_g) = common_refinement(&prev, g)?;
        out.push((partition, coeffs_g));
    }
    Ok(out)
}

/// Named nonnegative kernels.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// `exp(-lambda * s)` on the support.
    ExpDecay { lambda: f64 },
    /// 1 on the support.
    Indicator,
    /// Tent of the given height peaking at the support midpoint.
    Triangle { height: f64 },
    /// `s^exponent` on the support (support must avoid negative s).
    Power { exponent: f64 },
}

/// An integrand: simple function or named kernel with a declared support and
/// an essential-sup bound on it. The bound feeds the series stopping rule,
/// so a wrong bound invalidates results; it is spot-checked at construction.
#[derive(Clone, Debug)]
pub enum Integrand {
    Simple(SimpleFunction),
    Kernel {
        kind: KernelKind,
        support: Cell,
        bound: f64,
    },
}

impl Integrand {
    pub fn simple(g: SimpleFunction) -> Self {
        Integrand::Simple(g)
    }

    pub fn kernel(kind: KernelKind, support: Cell, bound: f64) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::InvalidParameter("kernel bound must be finite and >= 0".into()));
        }
        if let KernelKind::Triangle { height } = kind {
            if !support.is_bounded() {
                return Err(Error::InvalidParameter("triangle kernel needs bounded support".into()));
            }
            if height > bound {
                return Err(Error::InvalidParameter("triangle height exceeds declared bound".into()));
            }
        }
        let g = Integrand::Kernel { kind, support, bound };
        // spot-check the declared bound
        if let Some((lo, hi)) = g.support().bounds() {
            let span = if hi.is_finite() { hi - lo } else { 64.0 };
            for i in 0..=256 {
                let s = lo + span * i as f64 / 256.0;
                let v = g.eval(s);
                if v > bound * (1.0 + 1e-12) {
                    return Err(Error::InvalidParameter(format!(
                        "kernel exceeds declared bound at s = {s}: {v} > {bound}"
                    )));
                }
            }
        }
        Ok(g)
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Integrand::Simple(g) => g.eval(s),
            Integrand::Kernel { kind, support, .. } => {
                if !support.contains(s) {
                    return 0.0;
                }
                kernel_formula(kind, support, s)
            }
        }
    }

    pub fn support(&self) -> Cell {
        match self {
            Integrand::Simple(g) => g.support(),
            Integrand::Kernel { support, .. } => support.clone(),
        }
    }

    /// Essential-sup bound on the support.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Integrand::Simple(g) => g.max_coefficient(),
            Integrand::Kernel { bound, .. } => *bound,
        }
    }

    /// Pointwise restriction `g * 1_cell`.
    pub fn restrict(&self, cell: &Cell) -> Integrand {
        match self {
            Integrand::Simple(g) => Integrand::Simple(g.restrict(cell)),
            Integrand::Kernel { kind, support, bound } => Integrand::Kernel {
                kind: *kind,
                support: support.intersect(cell),
                bound: *bound,
            },
        }
    }

    /// Infimum over `[a, b)`; used by the monotone dyadic approximation.
    fn inf_on(&self, a: f64, b: f64) -> f64 {
        match self {
            Integrand::Simple(g) => {
                // constant on grid cells aligned with its intervals; take the
                // minimum of the endpoints and midpoint as a safe probe
                g.eval(a).min(g.eval(0.5 * (a + b))).min(g.eval((b - 1e-12 * (b - a)).max(a)))
            }
            Integrand::Kernel { kind, support, .. } => {
                if !Cell::interval(a, b).is_subset_of(support) {
                    return 0.0;
                }
                match kind {
                    KernelKind::ExpDecay { lambda } => {
                        if *lambda >= 0.0 {
                            (-lambda * b).exp()
                        } else {
                            (-lambda * a).exp()
                        }
                    }
                    KernelKind::Indicator => 1.0,
                    // unimodal: the infimum sits at an endpoint
                    KernelKind::Triangle { .. } => {
                        kernel_formula(kind, support, a).min(kernel_formula(kind, support, b))
                    }
                    KernelKind::Power { exponent } => {
                        if *exponent >= 0.0 {
                            kernel_formula(kind, support, a)
                        } else {
                            kernel_formula(kind, support, b)
                        }
                    }
                }
            }
        }
    }
}

fn kernel_formula(kind: &KernelKind, support: &Cell, s: f64) -> f64 {
    match kind {
        KernelKind::ExpDecay { lambda } => (-lambda * s).exp(),
        KernelKind::Indicator => 1.0,
        KernelKind::Triangle { height } => {
            let (lo, hi) = support.bounds().expect("triangle support nonempty");
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo);
            height * (1.0 - (s - c).abs() / h).max(0.0)
        }
        KernelKind::Power { exponent } => s.powf(*exponent),
    }
}

/// `(integral of g^alpha dm)^(1/alpha)`; exact cell sum for simple g,
/// adaptive quadrature for kernels.
pub fn lalpha_norm(g: &Integrand, m: &MeasureSpace, alpha: f64) -> Result<f64> {
    Ok(lalpha_norm_pow(g, m, alpha)?.powf(1.0 / alpha))
}

/// The alpha-th power `integral of g^alpha dm` (the natural weight).
pub fn lalpha_norm_pow(g: &Integrand, m: &MeasureSpace, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter("alpha must be > 0".into()));
    }
    match g {
        Integrand::Simple(g) => {
            let mut total = 0.0;
            for (cell, coeff) in g.parts() {
                if *coeff == 0.0 {
                    continue;
                }
                let mass = m.measure(cell);
                if !mass.is_finite() {
                    return Err(Error::Integrability(
                        "simple-function cell has infinite measure".into(),
                    ));
                }
                total += coeff.powf(alpha) * mass;
            }
            Ok(total)
        }
        Integrand::Kernel { .. } => {
            let support = g.support();
            m.integrate(&support, &|s| g.eval(s).powf(alpha))
        }
    }
}

/// `integral of |g1^alpha - g2^alpha| dm`, the convergence-criterion gap.
pub fn lalpha_gap(g1: &Integrand, g2: &Integrand, m: &MeasureSpace, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter("alpha must be > 0".into()));
    }
    if let (Integrand::Simple(s1), Integrand::Simple(s2)) = (g1, g2) {
        // exact on the common refinement
        let (partition, c1, c2) = common_refinement(s1, s2)?;
        let mut total = 0.0;
        for ((cell, a), b) in partition.cells().iter().zip(&c1).zip(&c2) {
            total += (a.powf(alpha) - b.powf(alpha)).abs() * m.measure(cell);
        }
        return Ok(total);
    }
    let domain = g1.support().union(&g2.support());
    // split at simple-function breakpoints so each segment is smooth up to
    // the |.| kink
    let mut segments: Vec<Interval> = Vec::new();
    for iv in domain.intervals() {
        let mut pts = vec![iv.lo, iv.hi];
        for g in [g1, g2] {
            if let Integrand::Simple(s) = g {
                for (cell, _) in s.parts() {
                    for civ in cell.intervals() {
                        for p in [civ.lo, civ.hi] {
                            if iv.lo < p && p < iv.hi {
                                pts.push(p);
                            }
                        }
                    }
                }
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        for pair in pts.windows(2) {
            segments.push(Interval::new(pair[0], pair[1]));
        }
    }
    let mut total = 0.0;
    for seg in segments {
        total += m.integrate(&Cell::from_intervals(vec![seg]), &|s| {
            (g1.eval(s).powf(alpha) - g2.eval(s).powf(alpha)).abs()
        })?;
    }
    Ok(total)
}

/// Level-n dyadic lower approximation: value `min(floor(2^n inf) / 2^n, n)`
/// on a dyadic spatial grid over the support truncated to width `2^n`.
/// Guarantees `g_n <= g_{n+1} <= g` pointwise with pointwise convergence.
pub fn monotone_approximation(g: &Integrand, n: u32) -> Result<SimpleFunction> {
    let scale = (1u64 << n.min(52)) as f64;
    if let Integrand::Simple(simple) = g {
        // quantize coefficients in place; a fixed point once 2^n resolves them
        let parts = simple
            .parts()
            .iter()
            .map(|(cell, coeff)| {
                let q = ((coeff * scale).floor() / scale).min(n as f64);
                (cell.clone(), q)
            })
            .collect();
        return SimpleFunction::new(parts);
    }
    let support = g.support();
    let width = 2f64.powi(n as i32);
    let mut parts: Vec<(Cell, f64)> = Vec::new();
    let mut consumed = 0.0;
    let step = 1.0 / scale;
    for iv in support.intervals() {
        if consumed >= width {
            break;
        }
        let hi = iv.hi.min(iv.lo + (width - consumed));
        consumed += hi - iv.lo;
        let mut a = iv.lo;
        // align the grid to multiples of the dyadic step
        while a < hi {
            let b = (((a / step).floor() + 1.0) * step).min(hi);
            let v = ((g.inf_on(a, b) * scale).floor() / scale).min(n as f64);
            if v > 0.0 {
                parts.push((Cell::interval(a, b), v));
            }
            if !(b > a) {
                break;
            }
            a = b;
        }
    }
    // merge adjacent grid cells with equal value to keep cell counts down
    parts.sort_by(|x, y| {
        x.0.bounds().unwrap().0.partial_cmp(&y.0.bounds().unwrap().0).unwrap()
    });
    let mut merged: Vec<(Cell, f64)> = Vec::new();
    for (cell, v) in parts {
        match merged.last_mut() {
            Some((prev, pv))
                if *pv == v && prev.bounds().unwrap().1 == cell.bounds().unwrap().0 =>
            {
                *prev = prev.union(&cell);
            }
            _ => merged.push((cell, v)),
        }
    }
    SimpleFunction::new(merged)
}

/// Smallest prefix cell `E` of the support with tail fraction
/// `|g 1_{E^c}|_a^a / |g|_a^a <= epsilon`, i.e. mismatch probability
/// `(1 + |g 1_E|^a / |g 1_{E^c}|^a)^-1 <= epsilon`.
pub fn exhausting_cell(
    g: &Integrand,
    m: &MeasureSpace,
    alpha: f64,
    epsilon: f64,
) -> Result<Cell> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter("epsilon must be in (0, 1)".into()));
    }
    let support = g.support().intersect(&m.ground());
    let total = lalpha_norm_pow(&g.restrict(&support), m, alpha)?;
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("exhausting_cell needs a positive norm".into()));
    }
    let cum = |upto: f64| -> Result<f64> {
        let cell = support.intersect(&Cell::interval(f64::NEG_INFINITY, upto));
        lalpha_norm_pow(&g.restrict(&cell), m, alpha)
    };
    let (lo, hi) = support.bounds().unwrap();
    // find a finite right bracket
    let mut right = if hi.is_finite() {
        hi
    } else {
        let mut r = lo + 1.0;
        loop {
            if cum(r)? >= (1.0 - 0.5 * epsilon) * total {
                break r;
            }
            r = lo + (r - lo) * 2.0;
            if r - lo > 1e12 {
                return Err(Error::Truncation(
                    "could not reach the requested mismatch within the ground set".into(),
                ));
            }
        }
    };
    if cum(right)? < (1.0 - epsilon) * total {
        return Err(Error::Truncation(
            "requested mismatch unreachable within the declared support".into(),
        ));
    }
    // bisect for the smallest L with cum(L) >= (1 - epsilon) * total
    let mut left = lo;
    for _ in 0..200 {
        let mid = 0.5 * (left + right);
        if cum(mid)? >= (1.0 - epsilon) * total {
            right = mid;
        } else {
            left = mid;
        }
        if right - left <= 1e-9 * (1.0 + right.abs()) {
            break;
        }
    }
    Ok(support.intersect(&Cell::interval(f64::NEG_INFINITY, right)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    #[test]
    fn cell_algebra_is_exact() {
        let a = Cell::interval(0.0, 2.0);
        let b = Cell::interval(1.0, 3.0);
        assert_eq!(a.intersect(&b), Cell::interval(1.0, 2.0));
        assert_eq!(a.union(&b), Cell::interval(0.0, 3.0));
        assert_eq!(a.subtract(&b), Cell::interval(0.0, 1.0));
        assert!(Cell::interval(0.5, 1.5).is_subset_of(&a));
        assert!(a.is_disjoint_from(&Cell::interval(2.0, 4.0)));
    }

    #[test]
    fn measure_with_density() {
        let m = MeasureSpace::new(vec![
            (Interval::new(0.0, 1.0), 2.0),
            (Interval::new(1.0, 3.0), 0.5),
        ])
        .unwrap();
        assert!((m.measure(&Cell::interval(0.0, 3.0)) - 3.0).abs() < 1e-12);
        assert!((m.measure(&Cell::interval(0.5, 2.0)) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn common_refinement_interval_example() {
        let g1 = SimpleFunction::new(vec![(Cell::interval(0.0, 2.0), 1.0)]).unwrap();
        let g2 = SimpleFunction::new(vec![(Cell::interval(1.0, 3.0), 3.0)]).unwrap();
        let (p, c1, c2) = common_refinement(&g1, &g2).unwrap();
        assert_eq!(p.cells().len(), 3);
        let mut triples: Vec<(f64, f64, f64)> = p
            .cells()
            .iter()
            .zip(c1.iter().zip(&c2))
            .map(|(cell, (a, b))| (cell.bounds().unwrap().0, *a, *b))
            .collect();
        triples.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        assert_eq!(triples, vec![(0.0, 1.0, 0.0), (1.0, 1.0, 3.0), (2.0, 0.0, 3.0)]);
    }

    #[test]
    fn common_refinement_identity() {
        let g = SimpleFunction::new(vec![
            (Cell::interval(0.0, 1.0), 2.0),
            (Cell::interval(2.0, 3.0), 1.0),
        ])
        .unwrap();
        let (p, c1, c2) = common_refinement(&g, &g).unwrap();
        assert_eq!(p.cells().len(), 2);
        assert_eq!(c1, c2);
    }

    #[test]
    fn common_refinement_pointwise_oracle() {
        let mut rng = substream(31, 0);
        for _ in 0..50 {
            let make = |rng: &mut rand_chacha::ChaCha8Rng| {
                let k = 1 + (rng.random::<u32>() % 4) as usize;
                let mut parts = Vec::new();
                let mut lo = 0.0;
                for _ in 0..k {
                    lo += rng.random::<f64>();
                    let hi = lo + rng.random::<f64>() * 2.0;
                    parts.push((Cell::interval(lo, hi), rng.random::<f64>() * 5.0));
                    lo = hi;
                }
                SimpleFunction::new(parts).unwrap()
            };
            let g1 = make(&mut rng);
            let g2 = make(&mut rng);
            let (p, c1, c2) = common_refinement(&g1, &g2).unwrap();
            let r1 = SimpleFunction::new(
                p.cells().iter().zip(&c1).map(|(c, v)| (c.clone(), *v)).collect(),
            )
            .unwrap();
            let r2 = SimpleFunction::new(
                p.cells().iter().zip(&c2).map(|(c, v)| (c.clone(), *v)).collect(),
            )
            .unwrap();
            for _ in 0..200 {
                let s = rng.random::<f64>() * 12.0;
                assert_eq!(g1.eval(s), r1.eval(s));
                assert_eq!(g2.eval(s), r2.eval(s));
            }
        }
    }

    #[test]
    fn refinement_preserves_mass() {
        let m = MeasureSpace::lebesgue(0.0, 10.0);
        let g1 = SimpleFunction::new(vec![(Cell::interval(0.0, 2.0), 1.0)]).unwrap();
        let g2 = SimpleFunction::new(vec![(Cell::interval(1.0, 3.0), 3.0)]).unwrap();
        let (p, _, _) = common_refinement(&g1, &g2).unwrap();
        let total: f64 = p.cells().iter().map(|c| m.measure(c)).sum();
        let union = g1.support().union(&g2.support());
        assert!((total - m.measure(&union)).abs() < 1e-12);
        // original partitions are refined
        let p1 = Partition::new(vec![Cell::interval(0.0, 2.0)]).unwrap();
        assert!(p1.is_refined_by(&p));
    }

    #[test]
    fn consistent_sequence_dyadic_indicators() {
        let g1 = SimpleFunction::indicator(Cell::interval(0.0, 1.0)).unwrap();
        let g2 = SimpleFunction::new(vec![
            (Cell::interval(0.0, 1.0), 1.0),
            (Cell::interval(1.0, 2.0), 1.0),
        ])
        .unwrap();
        let seq = consistent_sequence(&[g1.clone(), g2.clone()]).unwrap();
        assert!(seq[0].0.is_refined_by(&seq[1].0));
        // both functions are reproduced on their own partitions
        let r2 = SimpleFunction::new(
            seq[1].0.cells().iter().zip(&seq[1].1).map(|(c, v)| (c.clone(), *v)).collect(),
        )
        .unwrap();
        for s in [0.25, 0.75, 1.5, 2.5] {
            assert_eq!(r2.eval(s), g2.eval(s));
        }
        // earlier functions re-represent on later partitions
        let betas = g1.coefficients_on(&seq[1].0).unwrap();
        let re = SimpleFunction::new(
            seq[1].0.cells().iter().zip(&betas).map(|(c, v)| (c.clone(), *v)).collect(),
        )
        .unwrap();
        for s in [0.25, 0.75, 1.5] {
            assert_eq!(re.eval(s), g1.eval(s));
        }
    }

    #[test]
    fn consistent_sequence_rerepresentation_oracle() {
        let mut rng = substream(37, 0);
        for _ in 0..20 {
            let make = |rng: &mut rand_chacha::ChaCha8Rng| {
                let k = 1 + (rng.random::<u32>() % 3) as usize;
                let mut parts = Vec::new();
                let mut lo = rng.random::<f64>();
                for _ in 0..k {
                    let hi = lo + 0.2 + rng.random::<f64>();
                    parts.push((Cell::interval(lo, hi), rng.random::<f64>() * 3.0));
                    lo = hi + rng.random::<f64>() * 0.5;
                }
                SimpleFunction::new(parts).unwrap()
            };
            let gs: Vec<SimpleFunction> = (0..4).map(|_| make(&mut rng)).collect();
            let seq = consistent_sequence(&gs).unwrap();
            for w in seq.windows(2) {
                assert!(w[0].0.is_refined_by(&w[1].0));
            }
            let last = &seq.last().unwrap().0;
            for g in &gs {
                let betas = g.coefficients_on(last).unwrap();
                for _ in 0..100 {
                    let s = rng.random::<f64>() * 8.0;
                    let via: f64 = last
                        .cells()
                        .iter()
                        .zip(&betas)
                        .map(|(c, v)| if c.contains(s) { *v } else { 0.0 })
                        .sum();
                    if last.covered().contains(s) {
                        assert_eq!(via, g.eval(s));
                    }
                }
            }
        }
    }

    #[test]
    fn lalpha_norm_simple_closed_form() {
        let m = MeasureSpace::lebesgue(0.0, 10.0);
        let g = Integrand::simple(
            SimpleFunction::new(vec![
                (Cell::interval(0.0, 1.0), 2.0),
                (Cell::interval(1.0, 3.0), 1.0),
            ])
            .unwrap(),
        );
        let norm = lalpha_norm(&g, &m, 2.0).unwrap();
        assert!((norm - 6.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(lalpha_norm(&Integrand::simple(SimpleFunction::zero()), &m, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn lalpha_norm_exp_decay_quadrature_vs_antiderivative() {
        let m = MeasureSpace::lebesgue(0.0, 20.0);
        let g = Integrand::kernel(
            KernelKind::ExpDecay { lambda: 1.0 },
            Cell::interval(0.0, 20.0),
            1.0,
        )
        .unwrap();
        let norm = lalpha_norm(&g, &m, 2.0).unwrap();
        let exact = ((1.0 - (-40.0f64).exp()) / 2.0).sqrt();
        assert!((norm - exact).abs() < 1e-8, "norm {norm} vs exact {exact}");
        assert!((exact - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
    }

    #[test]
    fn lalpha_norm_simple_cell_sum_matches_quadrature() {
        let m = MeasureSpace::lebesgue(0.0, 5.0);
        let simple = SimpleFunction::new(vec![
            (Cell::interval(0.0, 1.5), 0.7),
            (Cell::interval(2.0, 4.0), 2.3),
        ])
        .unwrap();
        let g = Integrand::simple(simple.clone());
        let by_sum = lalpha_norm_pow(&g, &m, 1.7).unwrap();
        let by_quad = m
            .integrate(&g.support(), &|s| simple.eval(s).powf(1.7))
            .unwrap();
        assert!((by_sum - by_quad).abs() <= 1e-9 * by_sum);
    }

    #[test]
    fn lalpha_gap_examples() {
        let m = MeasureSpace::lebesgue(0.0, 10.0);
        let g1 = Integrand::simple(SimpleFunction::indicator(Cell::interval(0.0, 1.0)).unwrap());
        let g2 = Integrand::simple(SimpleFunction::indicator(Cell::interval(0.0, 2.0)).unwrap());
        assert_eq!(lalpha_gap(&g1, &g1, &m, 1.0).unwrap(), 0.0);
        assert!((lalpha_gap(&g1, &g2, &m, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lalpha_gap_decreases_along_dyadic_approximations() {
        let m = MeasureSpace::lebesgue(0.0, 20.0);
        let g = Integrand::kernel(
            KernelKind::ExpDecay { lambda: 1.0 },
            Cell::interval(0.0, 8.0),
            1.0,
        )
        .unwrap();
        let mut prev = f64::MAX;
        for n in 2..=7 {
            let gn = Integrand::simple(monotone_approximation(&g, n).unwrap());
            let gap = lalpha_gap(&gn, &g, &m, 2.0).unwrap();
            assert!(gap <= prev + 1e-12, "gap not monotone at n = {n}");
            prev = gap;
        }
        assert!(prev < 0.02, "final gap {prev}");
    }

    #[test]
    fn monotone_approximation_dyadic_floor_example() {
        // g(s) = s on [0,1), level 1: 0 on [0, 1/2), 1/2 on [1/2, 1)
        let g = Integrand::kernel(
            KernelKind::Power { exponent: 1.0 },
            Cell::interval(0.0, 1.0),
            1.0,
        )
        .unwrap();
        let g1 = monotone_approximation(&g, 1).unwrap();
        assert_eq!(g1.eval(0.25), 0.0);
        assert_eq!(g1.eval(0.75), 0.5);
    }

    #[test]
    fn monotone_approximation_fixed_point_for_simple() {
        let simple = SimpleFunction::new(vec![
            (Cell::interval(0.0, 1.0), 0.75),
            (Cell::interval(1.0, 2.0), 2.5),
        ])
        .unwrap();
        let g = Integrand::simple(simple.clone());
        let approx = monotone_approximation(&g, 20).unwrap();
        for s in [0.5, 1.5] {
            assert_eq!(approx.eval(s), simple.eval(s));
        }
    }

    #[test]
    fn monotone_approximation_is_pointwise_monotone() {
        let g = Integrand::kernel(
            KernelKind::ExpDecay { lambda: 0.7 },
            Cell::interval(0.0, 6.0),
            1.0,
        )
        .unwrap();
        let approx: Vec<SimpleFunction> =
            (1..=10).map(|n| monotone_approximation(&g, n).unwrap()).collect();
        let mut rng = substream(41, 0);
        for _ in 0..10_000 {
            let s = rng.random::<f64>() * 6.0;
            let gs = g.eval(s);
            let mut prev = 0.0;
            for a in &approx {
                let v = a.eval(s);
                assert!(v + 1e-15 >= prev, "not monotone at s = {s}");
                assert!(v <= gs + 1e-15, "exceeds g at s = {s}");
                prev = v;
            }
        }
    }

    #[test]
    fn exhausting_cell_closed_form_example() {
        // g = exp(-s) on [0, inf), alpha = 1, eps = 0.01 -> L >= ln 100
        let m = MeasureSpace::lebesgue(0.0, f64::INFINITY);
        let g = Integrand::kernel(
            KernelKind::ExpDecay { lambda: 1.0 },
            Cell::interval(0.0, f64::INFINITY),
            1.0,
        )
        .unwrap();
        let cell = exhausting_cell(&g, &m, 1.0, 0.01).unwrap();
        let (_, hi) = cell.bounds().unwrap();
        assert!(hi >= 100f64.ln() - 1e-6, "L = {hi}");
        assert!(hi < 100f64.ln() + 0.01, "L = {hi} not minimal");
    }

    #[test]
    fn exhausting_cell_half_mass_split() {
        let m = MeasureSpace::lebesgue(0.0, 1.0);
        let g = Integrand::simple(SimpleFunction::indicator(Cell::interval(0.0, 1.0)).unwrap());
        let cell = exhausting_cell(&g, &m, 1.0, 0.5).unwrap();
        let (_, hi) = cell.bounds().unwrap();
        assert!((hi - 0.5).abs() < 1e-6);
    }

    #[test]
    fn exhausting_cell_bounded_support_zero_mismatch() {
        let m = MeasureSpace::lebesgue(0.0, 10.0);
        let g = Integrand::simple(SimpleFunction::indicator(Cell::interval(0.0, 4.0)).unwrap());
        let cell = exhausting_cell(&g, &m, 1.0, 1e-9).unwrap();
        // tail fraction at the returned cell is within epsilon
        let tail = lalpha_norm_pow(&g.restrict(&g.support().subtract(&cell)), &m, 1.0).unwrap();
        let total = lalpha_norm_pow(&g, &m, 1.0).unwrap();
        assert!(tail / total <= 1e-9);
    }

    #[test]
    fn simple_function_json_round_trip() {
        let g = SimpleFunction::new(vec![
            (Cell::interval(0.0, 1.0), 2.0),
            (
                Cell::from_intervals(vec![Interval::new(2.0, 3.0), Interval::new(4.0, 5.0)]),
                0.5,
            ),
        ])
        .unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: SimpleFunction = serde_json::from_str(&json).unwrap();
        for s in [0.5, 1.5, 2.5, 4.5, 6.0] {
            assert_eq!(g.eval(s), back.eval(s));
        }
    }

    #[test]
    fn divergent_kernel_is_an_integrability_error() {
        let m = MeasureSpace::lebesgue(0.0, f64::INFINITY);
        let g = Integrand::kernel(
            KernelKind::Indicator,
            Cell::interval(0.0, f64::INFINITY),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            lalpha_norm(&g, &m, 1.0),
            Err(Error::Integrability(_))
        ));
    }
}
