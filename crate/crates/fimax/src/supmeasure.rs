//! Realizations of the implicit-max sup-measure M.
//!
//! Two backends:
//! * a cell backend drawing one independent implicit Fréchet value per
//!   partition cell (matches the marginal law by construction), and
//! * a series backend materializing one coupled point process of atoms
//!   `(s_k, u_k, Θ_k)` with strictly decreasing magnitudes, so that every
//!   integrand is evaluated against the same realization of M.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{LossFunction, Point};
use crate::error::{Error, Result};
use crate::integral::{AtomRef, Backend, IntegralResult};
use crate::laws::{AngularMeasure, FrechetLaw};
use crate::measure::{Cell, Integrand, MeasureSpace, Partition, SimpleFunction};

/// Atom cap for one series evaluation; hitting it signals an (almost) zero
/// integrand or an invalid sup bound.
const MAX_ATOMS: usize = 10_000_000;

/// Magnitudes below this floor are treated as zero contribution.
const MAGNITUDE_FLOOR: f64 = 1e-300;

/// The sup-measure being realized: tail index, angular measure (which
/// carries the loss function) and control measure.
#[derive(Clone)]
pub struct SupMeasureSpec {
    loss: Arc<LossFunction>,
    alpha: f64,
    kappa: AngularMeasure,
    space: MeasureSpace,
}

impl SupMeasureSpec {
    pub fn new(alpha: f64, kappa: AngularMeasure, space: MeasureSpace) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite and > 0")));
        }
        Ok(SupMeasureSpec {
            loss: kappa.loss().clone(),
            alpha,
            kappa,
            space,
        })
    }

    pub fn loss(&self) -> &Arc<LossFunction> {
        &self.loss
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> &AngularMeasure {
        &self.kappa
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }
}

/// One independent implicit Fréchet value per partition cell.
#[derive(Clone)]
pub struct CellRealization {
    spec: SupMeasureSpec,
    partition: Partition,
    values: Vec<Point>,
}

impl CellRealization {
    pub fn spec(&self) -> &SupMeasureSpec {
        &self.spec
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }
}

/// Draws `M(A_j) = m(A_j)^(1/alpha) Z_j Θ_j` independently per cell.
pub fn realize_cells(
    spec: &SupMeasureSpec,
    partition: &Partition,
    rng: &mut impl Rng,
) -> Result<CellRealization> {
    let d = spec.loss.dimension();
    let mut values = Vec::with_capacity(partition.cells().len());
    for cell in partition.cells() {
        let mass = spec.space.measure(cell);
        if !mass.is_finite() {
            return Err(Error::Integrability("partition cell has infinite measure".into()));
        }
        if mass == 0.0 {
            values.push(Point::zero(d));
            continue;
        }
        let scale = mass.powf(1.0 / spec.alpha);
        let z = FrechetLaw::new(spec.alpha, 1.0)?.sample(rng);
        let theta = spec.kappa.sample(rng);
        values.push(theta.scaled(scale * z));
    }
    Ok(CellRealization {
        spec: spec.clone(),
        partition: partition.clone(),
        values,
    })
}

/// One atom of the series realization.
#[derive(Clone, Debug)]
pub struct Atom {
    /// Location in the region, distributed as m restricted there.
    pub s: f64,
    /// Magnitude `(Gamma_k / mu)^(-1/alpha)`, strictly decreasing in k.
    pub u: f64,
    /// Cumulative exponential sum behind `u` (audit state).
    pub gamma: f64,
    /// Angular mark on the unit loss sphere.
    pub theta: Point,
}

/// Lazily extended transformed-Poisson realization of M on a finite-measure
/// region. One realization serves every integrand supported in the region,
/// which is what makes pathwise identities (max-linearity, monotonicity,
/// set-maximality) exact rather than distributional.
pub struct SeriesRealization {
    spec: SupMeasureSpec,
    region: Cell,
    mu: f64,
    atoms: Vec<Atom>,
    gamma: f64,
    rng: ChaCha8Rng,
}

impl SeriesRealization {
    pub fn new(spec: &SupMeasureSpec, region: Cell, rng: ChaCha8Rng) -> Result<Self> {
        let mu = spec.space.measure(&region);
        if !mu.is_finite() {
            return Err(Error::Integrability(
                "series region must have finite measure; truncate first".into(),
            ));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter("series region must have positive measure".into()));
        }
        Ok(SeriesRealization {
            spec: spec.clone(),
            region,
            mu,
            atoms: Vec::new(),
            gamma: 0.0,
            rng,
        })
    }

    pub fn region(&self) -> &Cell {
        &self.region
    }

    pub fn spec(&self) -> &SupMeasureSpec {
        &self.spec
    }

    /// Atoms materialized so far.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Extends the atom list through index `k`.
    pub(crate) fn ensure_atom(&mut self, k: usize) -> Result<()> {
        while self.atoms.len() <= k {
            let e = -self.rng.random::<f64>().max(f64::MIN_POSITIVE).ln();
            self.gamma += e;
            let u = (self.gamma / self.mu).powf(-1.0 / self.spec.alpha);
            let s = self.spec.space.sample_in(&self.region, &mut self.rng)?;
            let theta = self.spec.kappa.sample(&mut self.rng);
            self.atoms.push(Atom {
                s,
                u,
                gamma: self.gamma,
                theta,
            });
        }
        Ok(())
    }

    /// The extremal integral of `g` against this realization: the atom
    /// maximizing `g(s_k) u_k`, scaled onto its angular mark.
    ///
    /// The atom list is extended until the next magnitude can no longer beat
    /// the current best even at the declared sup bound, so the returned atom
    /// is the global argmax almost surely — no truncation bias. On
    /// floating-point ties the smaller atom index wins.
    pub fn series_integral(&mut self, g: &Integrand, sup_bound: f64) -> Result<IntegralResult> {
        if !g.support().intersect(&self.spec.space.ground()).is_subset_of(&self.region) {
            return Err(Error::InvalidParameter(
                "integrand support must lie inside the realized region".into(),
            ));
        }
        self.series_integral_with(&|s| g.eval(s), sup_bound)
    }

    /// Same as `series_integral` but for an arbitrary nonnegative evaluator
    /// (e.g. a pointwise max of integrands); the caller guarantees the
    /// evaluator vanishes outside the region and respects `sup_bound`.
    pub fn series_integral_with(
        &mut self,
        eval: &dyn Fn(f64) -> f64,
        sup_bound: f64,
    ) -> Result<IntegralResult> {
        if !(sup_bound >= 0.0) || !sup_bound.is_finite() {
            return Err(Error::InvalidParameter("sup_bound must be finite and >= 0".into()));
        }
        let d = self.spec.loss.dimension();
        let mut best = 0.0_f64;
        let mut best_idx: Option<usize> = None;
        let mut k = 0usize;
        loop {
            self.ensure_atom(k + 1)?;
            let v = eval(self.atoms[k].s) * self.atoms[k].u;
            if v > best {
                best = v;
                best_idx = Some(k);
            }
            let ceiling = self.atoms[k + 1].u * sup_bound;
            if ceiling < best || ceiling < MAGNITUDE_FLOOR {
                break;
            }
            k += 1;
            if k >= MAX_ATOMS {
                return Err(Error::Truncation(format!(
                    "series did not settle within {MAX_ATOMS} atoms; \
                     the integrand is (nearly) zero on the region or the sup bound is wrong"
                )));
            }
        }
        let atoms_used = k + 1;
        match best_idx {
            None => Ok(IntegralResult {
                value: Point::zero(d),
                f_value: 0.0,
                attaining_atom: None,
                mismatch_prob: 0.0,
                atoms_used,
                backend: Backend::Series,
            }),
            Some(idx) => {
                let atom = &self.atoms[idx];
                let value = atom.theta.scaled(best);
                let f_value = self.spec.loss.evaluate(&value);
                Ok(IntegralResult {
                    value,
                    f_value,
                    attaining_atom: Some(AtomRef {
                        index: idx,
                        location: atom.s,
                        magnitude: atom.u,
                    }),
                    mismatch_prob: 0.0,
                    atoms_used,
                    backend: Backend::Series,
                })
            }
        }
    }

    /// `M(cell)` on this realization (the indicator integral).
    pub fn series_measure(&mut self, cell: &Cell) -> Result<Point> {
        if !cell.is_subset_of(&self.region) {
            return Err(Error::InvalidParameter("cell must lie inside the region".into()));
        }
        if self.spec.space.measure(cell) == 0.0 {
            return Ok(Point::zero(self.spec.loss.dimension()));
        }
        let g = Integrand::simple(SimpleFunction::indicator(cell.clone())?);
        Ok(self.series_integral(&g, 1.0)?.value)
    }
}
