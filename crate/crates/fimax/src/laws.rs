//! Scalar Fréchet and vector f-implicit Fréchet laws.
//!
//! `FrechetLaw` is the scalar law with CDF `exp(-sigma^alpha x^-alpha)`;
//! sigma = 0 denotes the point mass at 0. `ImplicitFrechetLaw` is the law of
//! `sigma * Z * Theta` with `Z` standard Fréchet independent of the angular
//! component `Theta` on the unit f-sphere.

use std::sync::Arc;

use rand::Rng;

use crate::algebra::{LossFunction, Point};
use crate::error::{Error, Result};

/// Scale convention: we store sigma and evaluate the CDF as
/// `exp(-sigma^alpha x^-alpha)`. Formulas whose natural parameters are the
/// exponent coefficients (the sandwich probability below) convert to weights
/// `w = sigma^alpha` internally.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrechetLaw {
    pub alpha: f64,
    pub sigma: f64,
}

impl FrechetLaw {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(FrechetLaw { alpha, sigma })
    }

    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.sigma == 0.0 {
            // point mass at 0
            return if x >= 0.0 { 1.0 } else { 0.0 };
        }
        if x <= 0.0 {
            0.0
        } else {
            (-self.sigma.powf(self.alpha) * x.powf(-self.alpha)).exp()
        }
    }

    /// Inverse of the CDF on (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile needs p in (0,1), got {p}")));
        }
        if self.sigma == 0.0 {
            return Ok(0.0);
        }
        Ok(self.sigma * (-p.ln()).powf(-1.0 / self.alpha))
    }

    /// Inverse-transform map applied to a fixed uniform `u` in (0, 1).
    pub fn from_uniform(&self, u: f64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        self.sigma * (-u.ln()).powf(-1.0 / self.alpha)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        self.from_uniform(u)
    }
}

/// Scale of the maximum of independent Fréchet laws with a common alpha:
/// `(sum sigma_j^alpha)^(1/alpha)`.
pub fn max_scale(laws: &[FrechetLaw]) -> Result<FrechetLaw> {
    let first = laws
        .first()
        .ok_or(Error::EmptyInput("max_scale needs at least one law"))?;
    for l in laws {
        if l.alpha != first.alpha {
            return Err(Error::MixedAlpha(first.alpha, l.alpha));
        }
    }
    let weight: f64 = laws.iter().map(|l| l.sigma.powf(first.alpha)).sum();
    FrechetLaw::new(first.alpha, weight.powf(1.0 / first.alpha))
}

#[derive(Clone)]
pub enum AngularVariant {
    /// Atoms on the unit f-sphere with probabilities summing to 1.
    Discrete(Vec<(Point, f64)>),
    /// Projection `x -> x / f(x)` of a base sampler.
    Projection(ProjectionBase),
}

#[derive(Clone, Debug)]
pub enum ProjectionBase {
    /// Isotropic standard Gaussian directions.
    Gaussian,
    /// Uniform on the centered unit cube `[-1, 1]^d`.
    UniformCube,
}

/// Angular measure kappa on the unit f-sphere `S = {f = 1}`.
#[derive(Clone)]
pub struct AngularMeasure {
    loss: Arc<LossFunction>,
    variant: AngularVariant,
}

impl AngularMeasure {
    pub fn discrete(loss: Arc<LossFunction>, atoms: Vec<(Point, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput("discrete angular measure needs atoms"));
        }
        let mut total = 0.0;
        for (theta, p) in &atoms {
            if !(*p >= 0.0) {
                return Err(Error::InvalidParameter("atom probabilities must be >= 0".into()));
            }
            total += p;
            let f_theta = loss.evaluate(theta);
            if (f_theta - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "atom {theta} is off the unit f-sphere: f = {f_theta}"
                )));
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "atom probabilities sum to {total}, expected 1"
            )));
        }
        Ok(AngularMeasure {
            loss,
            variant: AngularVariant::Discrete(atoms),
        })
    }

    /// Point mass at a single direction (normalized onto the sphere).
    pub fn point_mass(loss: Arc<LossFunction>, direction: Point) -> Result<Self> {
        let f_dir = loss.evaluate(&direction);
        if f_dir <= 0.0 {
            return Err(Error::InvalidParameter("point mass direction must have f > 0".into()));
        }
        let theta = direction.scaled(1.0 / f_dir);
        Self::discrete(loss, vec![(theta, 1.0)])
    }

    pub fn projection(loss: Arc<LossFunction>, base: ProjectionBase) -> Self {
        AngularMeasure {
            loss,
            variant: AngularVariant::Projection(base),
        }
    }

    pub fn loss(&self) -> &Arc<LossFunction> {
        &self.loss
    }

    pub fn variant(&self) -> &AngularVariant {
        &self.variant
    }

    /// Index of the atom a sphere point corresponds to (discrete kappa only).
    pub fn atom_index(&self, theta: &Point) -> Option<usize> {
        match &self.variant {
            AngularVariant::Discrete(atoms) => atoms
                .iter()
                .enumerate()
                .min_by(|(_, (a, _)), (_, (b, _))| {
                    let da = a.sub(theta).norm();
                    let db = b.sub(theta).norm();
                    da.partial_cmp(&db).unwrap()
                })
                .map(|(i, _)| i),
            AngularVariant::Projection(_) => None,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Point {
        match &self.variant {
            AngularVariant::Discrete(atoms) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (theta, p) in atoms {
                    acc += p;
                    if u < acc {
                        return theta.clone();
                    }
                }
                atoms.last().unwrap().0.clone()
            }
            AngularVariant::Projection(base) => {
                let d = self.loss.dimension();
                // resample on f(x) below tolerance (probability-zero event)
                loop {
                    let x = match base {
                        ProjectionBase::Gaussian => Point(
                            (0..d)
                                .map(|_| {
                                    let u: f64 = rng.random::<f64>().max(1e-12);
                                    let v: f64 = rng.random();
                                    (-2.0 * u.ln()).sqrt()
                                        * (2.0 * std::f64::consts::PI * v).cos()
                                })
                                .collect(),
                        ),
                        ProjectionBase::UniformCube => Point(
                            (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
                        ),
                    };
                    let fx = self.loss.evaluate(&x);
                    if fx >= 1e-12 {
                        return x.scaled(1.0 / fx);
                    }
                }
            }
        }
    }
}

/// The f-implicit alpha-Fréchet law with scale sigma and angular part kappa.
#[derive(Clone)]
pub struct ImplicitFrechetLaw {
    pub alpha: f64,
    pub sigma: f64,
    pub kappa: AngularMeasure,
}

impl ImplicitFrechetLaw {
    pub fn new(alpha: f64, sigma: f64, kappa: AngularMeasure) -> Result<Self> {
        FrechetLaw::new(alpha, sigma)?;
        Ok(ImplicitFrechetLaw { alpha, sigma, kappa })
    }

    /// The scalar law of `f(Y)`.
    pub fn radial_law(&self) -> FrechetLaw {
        FrechetLaw {
            alpha: self.alpha,
            sigma: self.sigma,
        }
    }

    /// Draws `sigma * Z * Theta` with Z and Theta independent.
    pub fn sample(&self, rng: &mut impl Rng) -> Point {
        if self.sigma == 0.0 {
            return Point::zero(self.kappa.loss().dimension());
        }
        let z = FrechetLaw::standard(self.alpha).unwrap().sample(rng);
        let theta = self.kappa.sample(rng);
        theta.scaled(self.sigma * z)
    }
}

/// Exact probability that independent `Y_1 ~ Phi_alpha(sigma1)` and
/// `Y_2 ~ Phi_alpha(sigma2)` satisfy `Y_1 <= Y_2 <= (1 + gamma) Y_1`.
///
/// The scales enter as weights `w_i = sigma_i^alpha`:
/// `w1 / (w1 + (1+gamma)^-alpha w2) - w1 / (w1 + w2)`.
pub fn sandwich_probability(sigma1: f64, sigma2: f64, alpha: f64, gamma: f64) -> Result<f64> {
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::InvalidParameter("sandwich_probability needs positive scales".into()));
    }
    if !(alpha > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter("sandwich_probability needs alpha, gamma > 0".into()));
    }
    let w1 = sigma1.powf(alpha);
    let w2 = sigma2.powf(alpha);
    let shrink = (1.0 + gamma).powf(-alpha);
    Ok(w1 / (w1 + shrink * w2) - w1 / (w1 + w2))
}

/// Uniform bound `1 - (1+gamma)^-alpha` on the probability that the implicit
/// maximum exceeds the implicit second maximum by a factor of at most
/// `1 + gamma`.
pub fn gap_bound(alpha: f64, gamma: f64) -> f64 {
    1.0 - (1.0 + gamma).powf(-alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::verify::{ks_statistic, ONE_SAMPLE_KS_C01};

    #[test]
    fn cdf_direct_substitution() {
        let l = FrechetLaw::new(1.0, 1.0).unwrap();
        assert!((l.cdf(1.0) - (-1.0f64).exp()).abs() < 1e-12);
        let l2 = FrechetLaw::new(2.0, 2.0f64.sqrt()).unwrap();
        assert!((l2.cdf(1.0) - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn cdf_point_mass_case() {
        let l = FrechetLaw::new(1.5, 0.0).unwrap();
        assert_eq!(l.cdf(1.0), 1.0);
        assert_eq!(l.cdf(-1.0), 0.0);
        assert_eq!(l.sample(&mut substream(1, 1)), 0.0);
    }

    #[test]
    fn inverse_transform_identity() {
        let l = FrechetLaw::new(1.0, 1.0).unwrap();
        assert!((l.from_uniform((-1.0f64).exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_cdf_round_trip() {
        let l = FrechetLaw::new(2.5, 3.0).unwrap();
        // small x omitted: cdf underflows to exactly 0 below ~0.15
        for &x in &[0.5, 1.0, 7.5, 100.0] {
            let back = l.quantile(l.cdf(x)).unwrap();
            assert!((back - x).abs() <= 1e-10 * x);
        }
    }

    #[test]
    fn max_scale_examples() {
        let a = FrechetLaw::new(2.0, 1.0).unwrap();
        let m = max_scale(&[a, a]).unwrap();
        assert!((m.sigma - 2.0f64.sqrt()).abs() < 1e-12);

        let with_zero = max_scale(&[a, FrechetLaw::new(2.0, 0.0).unwrap()]).unwrap();
        assert_eq!(with_zero, a);

        let sum = max_scale(&[
            FrechetLaw::new(1.0, 1.0).unwrap(),
            FrechetLaw::new(1.0, 2.0).unwrap(),
            FrechetLaw::new(1.0, 3.0).unwrap(),
        ])
        .unwrap();
        assert!((sum.sigma - 6.0).abs() < 1e-12);
    }

    #[test]
    fn max_scale_is_associative_with_neutral_element() {
        let laws = [
            FrechetLaw::new(1.5, 0.7).unwrap(),
            FrechetLaw::new(1.5, 2.1).unwrap(),
            FrechetLaw::new(1.5, 0.0).unwrap(),
        ];
        let all = max_scale(&laws).unwrap();
        let left = max_scale(&[max_scale(&laws[..2]).unwrap(), laws[2]]).unwrap();
        assert!((all.sigma - left.sigma).abs() < 1e-12);
    }

    #[test]
    fn max_scale_rejects_mixed_alphas() {
        let a = FrechetLaw::new(1.0, 1.0).unwrap();
        let b = FrechetLaw::new(2.0, 1.0).unwrap();
        assert!(max_scale(&[a, b]).is_err());
    }

    #[test]
    fn frechet_sampler_passes_ks() {
        let l = FrechetLaw::new(2.0, 1.0).unwrap();
        let n = 100_000;
        let mut rng = substream(101, 0);
        let samples: Vec<f64> = (0..n).map(|_| l.sample(&mut rng)).collect();
        let d = ks_statistic(&samples, |x| l.cdf(x));
        assert!(d < ONE_SAMPLE_KS_C01 / (n as f64).sqrt(), "KS distance {d}");
    }

    #[test]
    fn implicit_sample_zero_scale() {
        let loss = Arc::new(LossFunction::euclidean(2));
        let kappa = AngularMeasure::point_mass(loss, Point(vec![1.0, 0.0])).unwrap();
        let law = ImplicitFrechetLaw::new(1.0, 0.0, kappa).unwrap();
        assert!(law.sample(&mut substream(2, 2)).is_zero());
    }

    #[test]
    fn implicit_sample_point_mass_direction() {
        let loss = Arc::new(LossFunction::euclidean(2));
        let theta0 = Point(vec![0.6, 0.8]);
        let kappa = AngularMeasure::point_mass(loss, theta0.clone()).unwrap();
        let law = ImplicitFrechetLaw::new(1.0, 2.0, kappa).unwrap();
        let mut rng = substream(3, 0);
        for _ in 0..100 {
            let y = law.sample(&mut rng);
            // y must be a nonnegative multiple of theta0
            let r = y.0[0] / theta0.0[0];
            assert!(r >= 0.0);
            assert!((y.0[1] - r * theta0.0[1]).abs() < 1e-9 * r.max(1.0));
        }
    }

    #[test]
    fn implicit_radial_law_passes_ks() {
        let loss = Arc::new(LossFunction::euclidean(2));
        let kappa = AngularMeasure::projection(Arc::clone(&loss), ProjectionBase::Gaussian);
        let law = ImplicitFrechetLaw::new(1.0, 2.0, kappa).unwrap();
        let n = 100_000;
        let mut rng = substream(5, 0);
        let samples: Vec<f64> = (0..n).map(|_| loss.evaluate(&law.sample(&mut rng))).collect();
        let radial = law.radial_law();
        let d = ks_statistic(&samples, |x| radial.cdf(x));
        assert!(d < ONE_SAMPLE_KS_C01 / (n as f64).sqrt(), "KS distance {d}");
    }

    #[test]
    fn radial_law_conditional_on_atom_is_invariant() {
        // two-sample KS of f(Y) across the two atoms of a discrete kappa
        let loss = Arc::new(LossFunction::euclidean(2));
        let kappa = AngularMeasure::discrete(
            Arc::clone(&loss),
            vec![
                (Point(vec![1.0, 0.0]), 0.5),
                (Point(vec![0.0, 1.0]), 0.5),
            ],
        )
        .unwrap();
        let law = ImplicitFrechetLaw::new(1.5, 1.0, kappa.clone()).unwrap();
        let mut rng = substream(7, 0);
        let mut by_atom: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for _ in 0..40_000 {
            let y = law.sample(&mut rng);
            let fy = loss.evaluate(&y);
            if fy == 0.0 {
                continue;
            }
            let theta = y.scaled(1.0 / fy);
            let i = kappa.atom_index(&theta).unwrap();
            by_atom[i].push(fy);
        }
        let d = crate::verify::ks_two_sample(&by_atom[0], &by_atom[1]);
        let n = by_atom[0].len() as f64;
        let m = by_atom[1].len() as f64;
        assert!(d < ONE_SAMPLE_KS_C01 * ((n + m) / (n * m)).sqrt(), "two-sample KS {d}");
    }

    #[test]
    fn sandwich_probability_examples() {
        // weights 1, 1 at alpha = 1, gamma = 1
        let p = sandwich_probability(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 1e-12);
        // gamma -> 0+ degenerates
        let p0 = sandwich_probability(1.0, 1.0, 1.0, 1e-9).unwrap();
        assert!(p0 < 1e-8);
        assert!(sandwich_probability(0.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn sandwich_probability_matches_monte_carlo() {
        let (alpha, gamma) = (1.5, 0.4);
        let (s1, s2) = (1.2, 0.8);
        let exact = sandwich_probability(s1, s2, alpha, gamma).unwrap();
        let l1 = FrechetLaw::new(alpha, s1).unwrap();
        let l2 = FrechetLaw::new(alpha, s2).unwrap();
        let n = 1_000_000usize;
        let mut rng = substream(11, 0);
        let mut hits = 0usize;
        for _ in 0..n {
            let y1 = l1.sample(&mut rng);
            let y2 = l2.sample(&mut rng);
            if y1 <= y2 && y2 <= (1.0 + gamma) * y1 {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((freq - exact).abs() <= 3.0 * se, "freq {freq} vs exact {exact}");
    }

    #[test]
    fn gap_bound_examples() {
        assert!((gap_bound(1.0, 0.5) - 1.0 / 3.0).abs() < 1e-12);
        assert!(gap_bound(2.0, 1e-12) < 1e-10);
        assert!((gap_bound(2.0, 0.25) - 0.36).abs() < 1e-12);
    }

    #[test]
    fn sandwich_is_dominated_by_gap_bound_chain() {
        for &(s1, s2, alpha, gamma) in &[
            (1.0, 1.0, 1.0, 0.5),
            (0.3, 2.0, 2.0, 0.9),
            (5.0, 0.1, 0.7, 0.2),
        ] {
            let p = sandwich_probability(s1, s2, alpha, gamma).unwrap();
            let g = gap_bound(alpha, gamma);
            let (w1, w2) = (s1f(s1, alpha), s1f(s2, alpha));
            let mid = g * w2 / (w1 + w2);
            assert!(p <= mid + 1e-12);
            assert!(mid <= g + 1e-12);
        }
    }

    fn s1f(s: f64, alpha: f64) -> f64 {
        s.powf(alpha)
    }
}
