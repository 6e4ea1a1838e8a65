//! The implicit-max extremal integral `I(g)`: exact simple-function
//! integral on both backends, extension to general nonnegative integrands
//! with truncation accounting, pointwise-max combination, and implicit
//! max-stable process simulation on one coupled realization.

use rand_chacha::ChaCha8Rng;

use crate::algebra::{vf_max, Point};
use crate::error::{Error, Result};
use crate::measure::{
    exhausting_cell, lalpha_norm_pow, monotone_approximation, Cell, Integrand, MeasureSpace,
    Partition, SimpleFunction,
};
use crate::supmeasure::{CellRealization, SeriesRealization, SupMeasureSpec};

/// Which realization produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Cells,
    Series,
}

impl Backend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::Cells => "cells",
            Backend::Series => "series",
        }
    }
}

/// The atom a series-backend integral settled on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomRef {
    pub index: usize,
    pub location: f64,
    pub magnitude: f64,
}

/// One realized integral value with its audit trail.
#[derive(Clone, Debug)]
pub struct IntegralResult {
    pub value: Point,
    /// Loss value of `value` (recomputed, not carried).
    pub f_value: f64,
    pub attaining_atom: Option<AtomRef>,
    /// Probability that truncating the integrand to the realized region
    /// changed the result; 0 when no truncation happened.
    pub mismatch_prob: f64,
    pub atoms_used: usize,
    pub backend: Backend,
}

/// Controls for `integrate`.
#[derive(Clone, Copy, Debug)]
pub struct IntegrateControls {
    /// Mismatch probability allowed when truncating unbounded supports.
    pub epsilon_trunc: f64,
    /// Dyadic approximation level for the cell backend.
    pub level: u32,
}

impl Default for IntegrateControls {
    fn default() -> Self {
        IntegrateControls {
            epsilon_trunc: 1e-4,
            level: 6,
        }
    }
}

fn zero_result(d: usize, backend: Backend) -> IntegralResult {
    IntegralResult {
        value: Point::zero(d),
        f_value: 0.0,
        attaining_atom: None,
        mismatch_prob: 0.0,
        atoms_used: 0,
        backend,
    }
}

/// Integral of a simple function on the cell backend:
/// the implicit max over cells of `coeff_j * M(A_j)`. The function is
/// re-represented on the realization's partition, so any representation
/// whose cells refine into it yields the same value.
pub fn integrate_simple_cells(
    real: &CellRealization,
    g: &SimpleFunction,
) -> Result<IntegralResult> {
    let spec = real.spec();
    if !g.support().is_subset_of(&real.partition().covered()) {
        return Err(Error::InvalidParameter(
            "simple function has mass outside the realized partition".into(),
        ));
    }
    let coeffs = g.coefficients_on(real.partition())?;
    let candidates: Vec<Point> = coeffs
        .iter()
        .zip(real.values())
        .filter(|(c, _)| **c > 0.0)
        .map(|(c, v)| v.scaled(*c))
        .collect();
    if candidates.is_empty() {
        return Ok(zero_result(spec.loss().dimension(), Backend::Cells));
    }
    let (value, _) = vf_max(spec.loss(), &candidates)?;
    let f_value = spec.loss().evaluate(&value);
    Ok(IntegralResult {
        value,
        f_value,
        attaining_atom: None,
        mismatch_prob: 0.0,
        atoms_used: 0,
        backend: Backend::Cells,
    })
}

/// Integral of a simple function on the series backend.
pub fn integrate_simple_series(
    real: &mut SeriesRealization,
    g: &SimpleFunction,
) -> Result<IntegralResult> {
    let bound = g.max_coefficient();
    real.series_integral(&Integrand::simple(g.clone()), bound)
}

/// The region a general integrand is integrated over, together with the
/// probability that the truncation changed the result. Bounded supports are
/// kept whole (mismatch 0); unbounded ones are cut at the requested level.
pub fn truncation_region(
    spec: &SupMeasureSpec,
    g: &Integrand,
    epsilon_trunc: f64,
) -> Result<(Cell, f64)> {
    let support = g.support().intersect(&spec.space().ground());
    if support.is_bounded() {
        return Ok((support, 0.0));
    }
    let cell = exhausting_cell(g, spec.space(), spec.alpha(), epsilon_trunc)?;
    let p = mismatch_probability(g, &cell, spec.space(), spec.alpha())?;
    Ok((cell, p))
}

/// Integrates a general nonnegative integrand.
///
/// Series backend: draws exactly on the truncation region and reports the
/// mismatch probability. Cell backend: integrates the level-n dyadic lower
/// approximation; the remaining L^alpha gap is a separate diagnostic
/// (`measure::lalpha_gap`).
pub fn integrate(
    spec: &SupMeasureSpec,
    g: &Integrand,
    backend: Backend,
    controls: &IntegrateControls,
    mut rng: ChaCha8Rng,
) -> Result<IntegralResult> {
    let d = spec.loss().dimension();
    let restricted = g.restrict(&spec.space().ground());
    let norm_pow = lalpha_norm_pow(&restricted, spec.space(), spec.alpha())?;
    if norm_pow == 0.0 {
        return Ok(zero_result(d, backend));
    }
    match backend {
        Backend::Series => {
            let (region, mismatch) = truncation_region(spec, g, controls.epsilon_trunc)?;
            let mut real = SeriesRealization::new(spec, region.clone(), rng)?;
            let mut res = real.series_integral(&g.restrict(&region), g.sup_bound())?;
            res.mismatch_prob = mismatch;
            Ok(res)
        }
        Backend::Cells => {
            let gn = match g {
                Integrand::Simple(s) => s.clone(),
                _ => monotone_approximation(g, controls.level)?,
            };
            let partition = Partition::new(
                gn.parts()
                    .iter()
                    .filter(|(_, c)| *c > 0.0)
                    .map(|(cell, _)| cell.clone())
                    .collect(),
            )?;
            if partition.cells().is_empty() {
                return Ok(zero_result(d, Backend::Cells));
            }
            let real = crate::supmeasure::realize_cells(spec, &partition, &mut rng)?;
            integrate_simple_cells(&real, &gn)
        }
    }
}

/// `P(I(g) != I(g 1_cell))`, in closed form: the fraction of the total
/// alpha-mass sitting outside the cell,
/// `(1 + |g 1_cell|_a^a / |g 1_{cell^c}|_a^a)^{-1}`.
pub fn mismatch_probability(
    g: &Integrand,
    cell: &Cell,
    m: &MeasureSpace,
    alpha: f64,
) -> Result<f64> {
    let support = g.support().intersect(&m.ground());
    let inside = lalpha_norm_pow(&g.restrict(&support.intersect(cell)), m, alpha)?;
    let outside = lalpha_norm_pow(&g.restrict(&support.subtract(cell)), m, alpha)?;
    if inside + outside <= 0.0 {
        return Err(Error::InvalidParameter(
            "mismatch probability needs a positive norm".into(),
        ));
    }
    Ok(outside / (inside + outside))
}

/// Integrates the pointwise max `a g1 v b g2` and, on the same realization,
/// forms the implicit max of the separately scaled integrals. The two agree
/// atom-by-atom; both are returned so callers can assert it.
pub fn max_combine(
    real: &mut SeriesRealization,
    a: f64,
    g1: &Integrand,
    b: f64,
    g2: &Integrand,
) -> Result<(IntegralResult, Point)> {
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter("scalars must be finite and >= 0".into()));
    }
    let spec = real.spec().clone();
    let ground = spec.space().ground();
    for g in [g1, g2] {
        if !g.support().intersect(&ground).is_subset_of(real.region()) {
            return Err(Error::InvalidParameter(
                "integrand support must lie inside the realized region".into(),
            ));
        }
    }

    // right-hand side: scale each integral after the fact (homogeneity)
    let r1 = real.series_integral(g1, g1.sup_bound())?;
    let r2 = real.series_integral(g2, g2.sup_bound())?;
    let scaled = [r1.value.scaled(a), r2.value.scaled(b)];
    let (rhs, _) = vf_max(spec.loss(), &scaled)?;

    // left-hand side: one pass over the shared atom list for the pointwise
    // max. The winning branch's value is rebuilt with the same operations
    // as the right-hand side, so agreement is bit-exact when the same atom
    // wins. The left branch wins ties, mirroring the implicit max.
    let bound = (a * g1.sup_bound()).max(b * g2.sup_bound());
    let mut best = 0.0_f64;
    let mut best_pick: Option<(usize, u8, f64)> = None; // (atom, branch, raw)
    let mut k = 0usize;
    const FLOOR: f64 = 1e-300;
    loop {
        real.ensure_atom(k + 1)?;
        let (s, u) = {
            let atom = &real.atoms()[k];
            (atom.s, atom.u)
        };
        let raw1 = g1.eval(s) * u;
        let raw2 = g2.eval(s) * u;
        let (v, branch, raw) = if a * raw1 >= b * raw2 {
            (a * raw1, 0u8, raw1)
        } else {
            (b * raw2, 1u8, raw2)
        };
        if v > best {
            best = v;
            best_pick = Some((k, branch, raw));
        }
        let ceiling = real.atoms()[k + 1].u * bound;
        if ceiling < best || ceiling < FLOOR {
            break;
        }
        k += 1;
        if k >= 10_000_000 {
            return Err(Error::Truncation("pointwise-max series did not settle".into()));
        }
    }
    let lhs = match best_pick {
        None => zero_result(spec.loss().dimension(), Backend::Series),
        Some((idx, branch, raw)) => {
            let atom = &real.atoms()[idx];
            let scale = if branch == 0 { a } else { b };
            let value = atom.theta.scaled(raw).scaled(scale);
            let f_value = spec.loss().evaluate(&value);
            IntegralResult {
                value,
                f_value,
                attaining_atom: Some(AtomRef {
                    index: idx,
                    location: atom.s,
                    magnitude: atom.u,
                }),
                mismatch_prob: 0.0,
                atoms_used: k + 1,
                backend: Backend::Series,
            }
        }
    };
    Ok((lhs, rhs))
}

/// Evaluates a family of kernels at their time points against one shared
/// realization, yielding one path of the implicit max-stable process.
pub fn simulate_process(
    spec: &SupMeasureSpec,
    kernels: &[(f64, Integrand)],
    controls: &IntegrateControls,
    rng: ChaCha8Rng,
) -> Result<Vec<(f64, IntegralResult)>> {
    if kernels.is_empty() {
        return Err(Error::EmptyInput("simulate_process needs kernels"));
    }
    let mut region = Cell::empty();
    let mut mismatches = Vec::with_capacity(kernels.len());
    for (_, g) in kernels {
        let (cell, p) = truncation_region(spec, g, controls.epsilon_trunc)?;
        region = region.union(&cell);
        mismatches.push(p);
    }
    let mut real = SeriesRealization::new(spec, region.clone(), rng)?;
    let mut out = Vec::with_capacity(kernels.len());
    for ((t, g), p) in kernels.iter().zip(mismatches) {
        let mut res = real.series_integral(&g.restrict(&region), g.sup_bound())?;
        res.mismatch_prob = p;
        out.push((*t, res));
    }
    Ok(out)
}

/// Indicator kernels `1_{[0, t)}`, the cumulative running example.
pub fn cumulative_kernels(times: &[f64]) -> Result<Vec<(f64, Integrand)>> {
    times
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("time {t} must be > 0")));
            }
            Ok((
                t,
                Integrand::simple(SimpleFunction::indicator(Cell::interval(0.0, t))?),
            ))
        })
        .collect()
}
