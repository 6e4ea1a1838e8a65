//! Statistical verification harness: Kolmogorov-Smirnov and chi-square
//! machinery, Kendall tau, and one named check per closed-form claim,
//! assembled into a reproducible pass/fail suite.

use rand::Rng;

use crate::algebra::{leq_f, vf_max, vf_second, LossFunction, Point};
use crate::error::{Error, Result};
use crate::exec::replicate;
use crate::integral::{integrate_simple_series, max_combine, mismatch_probability};
use crate::laws::{gap_bound, sandwich_probability, AngularMeasure, FrechetLaw, ImplicitFrechetLaw};
use crate::measure::{
    lalpha_norm, monotone_approximation, Cell, Integrand, MeasureSpace, Partition, SimpleFunction,
};
use crate::rng::substream;
use crate::supmeasure::{realize_cells, SeriesRealization, SupMeasureSpec};
use std::sync::Arc;

/// One-sample KS critical constant at the 1% level: pass iff D < c / sqrt(N).
pub const ONE_SAMPLE_KS_C01: f64 = 1.628;

/// One-sample KS distance against a reference CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample KS distance.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// 1%-level two-sample KS threshold.
pub fn two_sample_ks_threshold(n: usize, m: usize) -> f64 {
    ONE_SAMPLE_KS_C01 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Chi-square homogeneity statistic for two vectors of category counts.
pub fn chi_square_homogeneity(obs1: &[u64], obs2: &[u64]) -> f64 {
    let n1: u64 = obs1.iter().sum();
    let n2: u64 = obs2.iter().sum();
    let total = (n1 + n2) as f64;
    let mut stat = 0.0;
    for (a, b) in obs1.iter().zip(obs2) {
        let pooled = (a + b) as f64 / total;
        for (obs, n) in [(*a as f64, n1 as f64), (*b as f64, n2 as f64)] {
            let expected = pooled * n;
            if expected > 0.0 {
                stat += (obs - expected).powi(2) / expected;
            }
        }
    }
    stat
}

/// 1% chi-square critical value (Wilson-Hilferty approximation).
pub fn chi_square_critical_1pct(dof: usize) -> f64 {
    let k = dof as f64;
    let z = 2.3263478740408408; // standard normal 99% quantile
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

/// Kendall tau (tau-a) via merge-sort inversion counting, O(n log n).
/// Assumes continuous data (ties have probability zero).
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap());
    let mut seq: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
    let mut buf = vec![0.0; n];
    let inversions = count_inversions(&mut seq, &mut buf);
    let pairs = (n * (n - 1) / 2) as f64;
    1.0 - 4.0 * inversions as f64 / (2.0 * pairs)
}

fn count_inversions(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = a.split_at_mut(mid);
    let mut inv = count_inversions(left, buf) + count_inversions(right, buf);
    let (mut i, mut j, mut k) = (0usize, 0usize, 0usize);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            buf[k] = right[j];
            inv += (left.len() - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + left.len() - i].copy_from_slice(&left[i..]);
    k += left.len() - i;
    buf[k..k + right.len() - j].copy_from_slice(&right[j..]);
    k += right.len() - j;
    a.copy_from_slice(&buf[..k]);
    inv
}

/// Standard error of Kendall tau under independence.
pub fn kendall_tau_se(n: usize) -> f64 {
    let nf = n as f64;
    (2.0 * (2.0 * nf + 5.0) / (9.0 * nf * (nf - 1.0))).sqrt()
}

/// Outcome of one named check.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: String,
    pub n: usize,
    pub statistic: f64,
    pub reference: f64,
    pub std_error: f64,
    pub pass: bool,
    pub seed: u64,
}

impl CheckReport {
    fn new(
        name: &str,
        n: usize,
        statistic: f64,
        reference: f64,
        std_error: f64,
        pass: bool,
        seed: u64,
    ) -> Self {
        CheckReport {
            name: name.to_string(),
            n,
            statistic,
            reference,
            std_error,
            pass,
            seed,
        }
    }
}

/// One-sample KS check at the 1% level. A degenerate reference (scale 0)
/// works unchanged: its CDF is the unit step at 0.
pub fn ks_check(
    name: &str,
    samples: &[f64],
    cdf: impl Fn(f64) -> f64,
    seed: u64,
) -> Result<CheckReport> {
    if samples.len() < 100 {
        return Err(Error::InvalidParameter("KS check needs at least 100 samples".into()));
    }
    let n = samples.len();
    // a degenerate reference (point mass at 0) breaks the continuous-CDF
    // formula; its distance is simply the off-zero sample fraction
    let d = if cdf(0.0) >= 1.0 {
        samples.iter().filter(|x| **x != 0.0).count() as f64 / n as f64
    } else {
        ks_statistic(samples, cdf)
    };
    let threshold = ONE_SAMPLE_KS_C01 / (n as f64).sqrt();
    Ok(CheckReport::new(name, n, d, threshold, 0.0, d < threshold, seed))
}

/// Verifies the second-maximum gap bound: among k independent implicit
/// Fréchet draws, the top two loss values are within factor (1 + gamma)
/// with probability at most `1 - (1 + gamma)^-alpha`.
pub fn check_gap_lemma(
    spec: &SupMeasureSpec,
    scales: &[f64],
    gamma: f64,
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    if scales.len() < 2 {
        return Err(Error::InvalidParameter("gap check needs at least two draws".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter("gamma must be in (0, 1)".into()));
    }
    let laws: Vec<ImplicitFrechetLaw> = scales
        .iter()
        .map(|&s| ImplicitFrechetLaw::new(spec.alpha(), s, spec.kappa().clone()))
        .collect::<Result<_>>()?;
    let loss = spec.loss().clone();
    let hits: Vec<bool> = replicate(n, |i| {
        let mut rng = substream(seed, i as u64);
        let draws: Vec<Point> = laws.iter().map(|l| l.sample(&mut rng)).collect();
        let (top, _) = vf_max(&loss, &draws).unwrap();
        let second = vf_second(&loss, &draws).unwrap();
        loss.evaluate(&top) <= (1.0 + gamma) * loss.evaluate(&second)
    });
    let freq = hits.iter().filter(|h| **h).count() as f64 / n as f64;
    let bound = gap_bound(spec.alpha(), gamma);
    let se = (bound * (1.0 - bound) / n as f64).sqrt();
    Ok(CheckReport::new(
        "gap_lemma",
        n,
        freq,
        bound,
        se,
        freq <= bound + 3.0 * se,
        seed,
    ))
}

/// For exactly two draws the gap event has a closed form (the sandwich
/// probability); the empirical frequency must match it within 3 SE.
pub fn check_gap_two_draw_formula(
    spec: &SupMeasureSpec,
    sigma1: f64,
    sigma2: f64,
    gamma: f64,
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    let l1 = ImplicitFrechetLaw::new(spec.alpha(), sigma1, spec.kappa().clone())?;
    let l2 = ImplicitFrechetLaw::new(spec.alpha(), sigma2, spec.kappa().clone())?;
    let loss = spec.loss().clone();
    // the closed form is for the ordered event: the second draw on top,
    // within a factor 1 + gamma of the first
    let hits: Vec<bool> = replicate(n, |i| {
        let mut rng = substream(seed, i as u64);
        let f1 = loss.evaluate(&l1.sample(&mut rng));
        let f2 = loss.evaluate(&l2.sample(&mut rng));
        f1 <= f2 && f2 <= (1.0 + gamma) * f1
    });
    let freq = hits.iter().filter(|h| **h).count() as f64 / n as f64;
    let p = sandwich_probability(sigma1, sigma2, spec.alpha(), gamma)?;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok(CheckReport::new(
        "gap_two_draw_formula",
        n,
        freq,
        p,
        se,
        (freq - p).abs() <= 3.0 * se,
        seed,
    ))
}

/// Independence dichotomy: disjoint supports must show Kendall tau
/// compatible with 0; overlapping supports must show tau beyond 3 SE.
pub fn check_independence(
    spec: &SupMeasureSpec,
    g1: &Integrand,
    g2: &Integrand,
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    let ground = spec.space().ground();
    let s1 = g1.support().intersect(&ground);
    let s2 = g2.support().intersect(&ground);
    let overlap = spec.space().measure(&s1.intersect(&s2)) > 0.0;
    let region = s1.union(&s2);
    let pairs: Vec<(f64, f64)> = replicate(n, |i| {
        let mut real =
            SeriesRealization::new(spec, region.clone(), substream(seed, i as u64)).unwrap();
        let r1 = real.series_integral(g1, g1.sup_bound()).unwrap();
        let r2 = real.series_integral(g2, g2.sup_bound()).unwrap();
        (r1.f_value, r2.f_value)
    });
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let tau = kendall_tau(&xs, &ys);
    let se = kendall_tau_se(n);
    let (name, pass) = if overlap {
        ("dependence_overlapping_supports", tau > 3.0 * se)
    } else {
        ("independence_disjoint_supports", tau.abs() <= 3.0 * se)
    };
    Ok(CheckReport::new(name, n, tau, 0.0, se, pass, seed))
}

/// Which approximating sequence the convergence check exercises.
#[derive(Clone, Copy, Debug)]
pub enum ConvergenceMode {
    /// Dyadic lower approximations: gap -> 0, so the coupled integral error
    /// must vanish (forward direction).
    Dyadic { level: u32 },
    /// Unit-indicator translates `1_{[c, c+1)}` against `1_{[0,1)}`: the gap
    /// stays constant, so the error probability must stay large (converse).
    Translates { max_shift: u32 },
}

/// Exercises both directions of the convergence criterion: integral
/// convergence in probability is equivalent to the alpha-gap vanishing.
pub fn check_convergence_theorem(
    spec: &SupMeasureSpec,
    g: &Integrand,
    mode: ConvergenceMode,
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    match mode {
        ConvergenceMode::Dyadic { level } => {
            let support = g.support().intersect(&spec.space().ground());
            if !support.is_bounded() {
                return Err(Error::Truncation("truncate the integrand first".into()));
            }
            let gn = Integrand::simple(monotone_approximation(g, level)?);
            let exceed: Vec<bool> = replicate(n, |i| {
                let mut real =
                    SeriesRealization::new(spec, support.clone(), substream(seed, i as u64))
                        .unwrap();
                let full = real.series_integral(&g.restrict(&support), g.sup_bound()).unwrap();
                let approx = real.series_integral(&gn, gn.sup_bound()).unwrap();
                approx.value.sub(&full.value).norm() > 0.05
            });
            let freq = exceed.iter().filter(|h| **h).count() as f64 / n as f64;
            Ok(CheckReport::new(
                "convergence_forward_dyadic",
                n,
                freq,
                0.05,
                (0.05 * 0.95 / n as f64).sqrt(),
                freq < 0.05,
                seed,
            ))
        }
        ConvergenceMode::Translates { max_shift } => {
            let base = Integrand::simple(SimpleFunction::indicator(Cell::interval(0.0, 1.0))?);
            let mut min_freq = f64::MAX;
            for shift in 1..=max_shift {
                let translate = Integrand::simple(SimpleFunction::indicator(Cell::interval(
                    shift as f64,
                    shift as f64 + 1.0,
                ))?);
                let region = base.support().union(&translate.support());
                let exceed: Vec<bool> = replicate(n, |i| {
                    let mut real = SeriesRealization::new(
                        spec,
                        region.clone(),
                        substream(seed.wrapping_add(shift as u64), i as u64),
                    )
                    .unwrap();
                    let a = real.series_integral(&base, 1.0).unwrap();
                    let b = real.series_integral(&translate, 1.0).unwrap();
                    b.value.sub(&a.value).norm() > 0.05
                });
                let freq = exceed.iter().filter(|h| **h).count() as f64 / n as f64;
                min_freq = min_freq.min(freq);
            }
            Ok(CheckReport::new(
                "convergence_negative_translates",
                n,
                min_freq,
                0.5,
                (0.25 / n as f64).sqrt(),
                min_freq > 0.5,
                seed,
            ))
        }
    }
}

/// Empirical truncation-mismatch frequency against the closed form.
pub fn check_remainder(
    spec: &SupMeasureSpec,
    g: &Integrand,
    cell: &Cell,
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    let support = g.support().intersect(&spec.space().ground());
    if !support.is_bounded() {
        return Err(Error::Truncation("remainder check needs a bounded support".into()));
    }
    let p = mismatch_probability(g, cell, spec.space(), spec.alpha())?;
    let truncated = g.restrict(cell);
    let hits: Vec<bool> = replicate(n, |i| {
        let mut real =
            SeriesRealization::new(spec, support.clone(), substream(seed, i as u64)).unwrap();
        let full = real.series_integral(g, g.sup_bound()).unwrap();
        let cut = real.series_integral(&truncated, g.sup_bound()).unwrap();
        full.value != cut.value
    });
    let freq = hits.iter().filter(|h| **h).count() as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt().max((1.0 / n as f64).sqrt() * 0.5);
    Ok(CheckReport::new(
        "remainder_mismatch_formula",
        n,
        freq,
        p,
        se,
        (freq - p).abs() <= 3.0 * se,
        seed,
    ))
}

/// Suite configuration.
#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub n: usize,
    pub seed: u64,
    /// Multiplies every reference scale the KS checks compare against.
    /// 1.0 is the honest suite; anything else is a negative control that
    /// must make the suite fail.
    pub reference_scale_factor: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            n: 20_000,
            seed: 0,
            reference_scale_factor: 1.0,
        }
    }
}

fn default_spec() -> SupMeasureSpec {
    let loss = Arc::new(LossFunction::euclidean(2));
    let kappa = AngularMeasure::discrete(
        loss.clone(),
        vec![
            (Point(vec![1.0, 0.0]), 0.25),
            (Point(vec![0.0, 1.0]), 0.75),
        ],
    )
    .expect("valid discrete angular measure");
    SupMeasureSpec::new(1.5, kappa, MeasureSpace::lebesgue(0.0, 10.0)).expect("valid spec")
}

/// Runs the whole named-check suite. Deterministic given the options.
pub fn run_suite(options: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let spec = default_spec();
    let factor = options.reference_scale_factor;
    let n = options.n;
    let seed = options.seed;
    let mut reports = Vec::new();

    // 1. implicit Fréchet sampling: loss values are Fréchet
    {
        let law = ImplicitFrechetLaw::new(1.5, 2.0, spec.kappa().clone())?;
        let loss = spec.loss().clone();
        let samples: Vec<f64> = replicate(n, |i| {
            let mut rng = substream(seed ^ 0x01, i as u64);
            loss.evaluate(&law.sample(&mut rng))
        });
        let reference = FrechetLaw::new(1.5, 2.0 * factor)?;
        reports.push(ks_check(
            "implicit_law_radial_marginal",
            &samples,
            |x| reference.cdf(x),
            seed,
        )?);
    }

    // 2. simple-function integral marginal: |g|_2 = sqrt 6
    {
        let spec2 = SupMeasureSpec::new(
            2.0,
            spec.kappa().clone(),
            MeasureSpace::lebesgue(0.0, 10.0),
        )?;
        let g = SimpleFunction::new(vec![
            (Cell::interval(0.0, 1.0), 2.0),
            (Cell::interval(1.0, 3.0), 1.0),
        ])?;
        let samples: Vec<f64> = replicate(n, |i| {
            let mut real = SeriesRealization::new(
                &spec2,
                Cell::interval(0.0, 3.0),
                substream(seed ^ 0x02, i as u64),
            )
            .unwrap();
            integrate_simple_series(&mut real, &g).unwrap().f_value
        });
        let reference = FrechetLaw::new(2.0, 6.0_f64.sqrt() * factor)?;
        reports.push(ks_check(
            "simple_integral_marginal",
            &samples,
            |x| reference.cdf(x),
            seed,
        )?);
    }

    // 3. kernel integral marginal via quadrature norm
    {
        let spec2 = SupMeasureSpec::new(
            2.0,
            spec.kappa().clone(),
            MeasureSpace::lebesgue(0.0, 20.0),
        )?;
        let g = Integrand::kernel(
            crate::measure::KernelKind::ExpDecay { lambda: 1.0 },
            Cell::interval(0.0, 20.0),
            1.0,
        )?;
        let norm = lalpha_norm(&g, spec2.space(), 2.0)?;
        let samples: Vec<f64> = replicate(n, |i| {
            let mut real = SeriesRealization::new(
                &spec2,
                Cell::interval(0.0, 20.0),
                substream(seed ^ 0x03, i as u64),
            )
            .unwrap();
            real.series_integral(&g, 1.0).unwrap().f_value
        });
        let reference = FrechetLaw::new(2.0, norm * factor)?;
        reports.push(ks_check(
            "kernel_integral_marginal",
            &samples,
            |x| reference.cdf(x),
            seed,
        )?);
    }

    // 4. backend equivalence: two-sample KS + angular chi-square
    {
        let g = SimpleFunction::new(vec![
            (Cell::interval(0.0, 1.0), 2.0),
            (Cell::interval(1.0, 3.0), 1.0),
            (Cell::interval(4.0, 6.0), 0.5),
        ])?;
        let partition = Partition::new(
            g.parts().iter().map(|(c, _)| c.clone()).collect(),
        )?;
        let by_cells: Vec<(f64, Option<usize>)> = replicate(n, |i| {
            let mut rng = substream(seed ^ 0x04, i as u64);
            let real = realize_cells(&spec, &partition, &mut rng).unwrap();
            let res = crate::integral::integrate_simple_cells(&real, &g).unwrap();
            let theta = res.value.scaled(1.0 / res.f_value);
            (res.f_value, spec.kappa().atom_index(&theta))
        });
        let by_series: Vec<(f64, Option<usize>)> = replicate(n, |i| {
            let mut real = SeriesRealization::new(
                &spec,
                Cell::interval(0.0, 6.0),
                substream(seed ^ 0x05, i as u64),
            )
            .unwrap();
            let res = integrate_simple_series(&mut real, &g).unwrap();
            let theta = res.value.scaled(1.0 / res.f_value);
            (res.f_value, spec.kappa().atom_index(&theta))
        });
        let xs: Vec<f64> = by_cells.iter().map(|p| p.0 * factor).collect();
        let ys: Vec<f64> = by_series.iter().map(|p| p.0).collect();
        let d = ks_two_sample(&xs, &ys);
        let threshold = two_sample_ks_threshold(n, n);
        reports.push(CheckReport::new(
            "backend_equivalence_radial",
            n,
            d,
            threshold,
            0.0,
            d < threshold,
            seed,
        ));
        let count = |side: &[(f64, Option<usize>)]| -> Vec<u64> {
            let mut c = vec![0u64; 2];
            for (_, idx) in side {
                if let Some(k) = idx {
                    c[*k] += 1;
                }
            }
            c
        };
        let stat = chi_square_homogeneity(&count(&by_cells), &count(&by_series));
        let crit = chi_square_critical_1pct(1);
        reports.push(CheckReport::new(
            "backend_equivalence_angular",
            n,
            stat,
            crit,
            0.0,
            stat < crit,
            seed,
        ));
    }

    // 5. gap bound and its exact two-draw formula
    {
        let spec1 = SupMeasureSpec::new(
            1.0,
            spec.kappa().clone(),
            MeasureSpace::lebesgue(0.0, 10.0),
        )?;
        reports.push(check_gap_lemma(
            &spec1,
            &[1.0; 5],
            0.5,
            100_000,
            seed ^ 0x06,
        )?);
        reports.push(check_gap_two_draw_formula(
            &spec1,
            1.0,
            1.0,
            1.0,
            100_000,
            seed ^ 0x07,
        )?);
    }

    // 6. independence dichotomy
    {
        let disjoint1 = Integrand::simple(SimpleFunction::indicator(Cell::interval(0.0, 1.0))?);
        let disjoint2 = Integrand::simple(SimpleFunction::indicator(Cell::interval(1.0, 2.0))?);
        reports.push(check_independence(&spec, &disjoint1, &disjoint2, n, seed ^ 0x08)?);
        let overlap1 = Integrand::simple(SimpleFunction::indicator(Cell::interval(0.0, 2.0))?);
        let overlap2 = Integrand::simple(SimpleFunction::indicator(Cell::interval(1.0, 3.0))?);
        reports.push(check_independence(&spec, &overlap1, &overlap2, n, seed ^ 0x09)?);
    }

    // 7. convergence criterion, both directions
    {
        let g = Integrand::kernel(
            crate::measure::KernelKind::ExpDecay { lambda: 1.0 },
            Cell::interval(0.0, 8.0),
            1.0,
        )?;
        reports.push(check_convergence_theorem(
            &spec,
            &g,
            ConvergenceMode::Dyadic { level: 8 },
            1000,
            seed ^ 0x0a,
        )?);
        reports.push(check_convergence_theorem(
            &spec,
            &g,
            ConvergenceMode::Translates { max_shift: 8 },
            1000,
            seed ^ 0x0b,
        )?);
    }

    // 8. remainder formula
    {
        let spec1 = SupMeasureSpec::new(
            1.0,
            spec.kappa().clone(),
            MeasureSpace::lebesgue(0.0, 10.0),
        )?;
        let g = Integrand::simple(SimpleFunction::indicator(Cell::interval(0.0, 4.0))?);
        reports.push(check_remainder(
            &spec1,
            &g,
            &Cell::interval(0.0, 3.0),
            100_000,
            seed ^ 0x0c,
        )?);
    }

    // 9. pathwise set-maximality: M(A u B) is the implicit max of the parts
    {
        let reps = 1000;
        let ok: Vec<bool> = replicate(reps, |i| {
            let mut real = SeriesRealization::new(
                &spec,
                Cell::interval(0.0, 10.0),
                substream(seed ^ 0x0d, i as u64),
            )
            .unwrap();
            let a = Cell::interval(0.0, 2.0);
            let b = Cell::interval(3.0, 7.0);
            let va = real.series_measure(&a).unwrap();
            let vb = real.series_measure(&b).unwrap();
            let vu = real.series_measure(&a.union(&b)).unwrap();
            let (expected, _) = vf_max(spec.loss(), &[va, vb]).unwrap();
            vu == expected
        });
        let freq = ok.iter().filter(|h| **h).count() as f64 / reps as f64;
        reports.push(CheckReport::new(
            "pathwise_set_maximality",
            reps,
            freq,
            1.0,
            0.0,
            freq == 1.0,
            seed,
        ));
    }

    // 10. pathwise max-linearity
    {
        let reps = 1000;
        let ok: Vec<bool> = replicate(reps, |i| {
            let mut mk = substream(seed ^ 0x0e, i as u64);
            let g1 = Integrand::simple(random_simple(&mut mk, 9.0));
            let g2 = Integrand::simple(random_simple(&mut mk, 9.0));
            let a = mk.random::<f64>() * 3.0 + 0.1;
            let b = mk.random::<f64>() * 3.0 + 0.1;
            let mut real = SeriesRealization::new(
                &spec,
                Cell::interval(0.0, 10.0),
                substream(seed ^ 0x0f, i as u64),
            )
            .unwrap();
            let (lhs, rhs) = max_combine(&mut real, a, &g1, b, &g2).unwrap();
            lhs.value == rhs
        });
        let freq = ok.iter().filter(|h| **h).count() as f64 / reps as f64;
        reports.push(CheckReport::new(
            "pathwise_max_linearity",
            reps,
            freq,
            1.0,
            0.0,
            freq == 1.0,
            seed,
        ));
    }

    // 11. pathwise monotonicity
    {
        let reps = 1000;
        let ok: Vec<bool> = replicate(reps, |i| {
            let mut mk = substream(seed ^ 0x10, i as u64);
            let g1 = random_simple(&mut mk, 9.0);
            let bump = random_simple(&mut mk, 9.0);
            let (partition, c1, c2) = crate::measure::common_refinement(&g1, &bump).unwrap();
            let g2 = SimpleFunction::new(
                partition
                    .cells()
                    .iter()
                    .zip(c1.iter().zip(&c2))
                    .map(|(cell, (x, y))| (cell.clone(), x.max(*y)))
                    .collect(),
            )
            .unwrap();
            let mut real = SeriesRealization::new(
                &spec,
                Cell::interval(0.0, 10.0),
                substream(seed ^ 0x11, i as u64),
            )
            .unwrap();
            let r1 = integrate_simple_series(&mut real, &g1).unwrap();
            let r2 = integrate_simple_series(&mut real, &g2).unwrap();
            leq_f(spec.loss(), &r1.value, &r2.value).unwrap()
        });
        let freq = ok.iter().filter(|h| **h).count() as f64 / reps as f64;
        reports.push(CheckReport::new(
            "pathwise_monotonicity",
            reps,
            freq,
            1.0,
            0.0,
            freq == 1.0,
            seed,
        ));
    }

    Ok(reports)
}

fn random_simple(rng: &mut rand_chacha::ChaCha8Rng, hi: f64) -> SimpleFunction {
    let k = 1 + (rng.random::<u32>() % 3) as usize;
    let mut parts = Vec::new();
    let mut a = rng.random::<f64>();
    for _ in 0..k {
        let b = (a + 0.3 + rng.random::<f64>() * 2.0).min(hi);
        if a < b {
            parts.push((Cell::interval(a, b), 0.1 + rng.random::<f64>() * 3.0));
        }
        a = b + rng.random::<f64>() * 0.5;
    }
    if parts.is_empty() {
        parts.push((Cell::interval(0.0, 1.0), 1.0));
    }
    SimpleFunction::new(parts).unwrap()
}

pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// CSV table of reports: name,n,statistic,reference,std_error,pass,seed
pub fn reports_to_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from("name,n,statistic,reference,std_error,pass,seed\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.name, r.n, r.statistic, r.reference, r.std_error, r.pass, r.seed
        ));
    }
    out
}

/// Human-readable one-line-per-check summary.
pub fn summary(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!(
            "[{}] {:<36} statistic {:>12.6} vs reference {:>12.6} (N = {})\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.statistic,
            r.reference,
            r.n
        ));
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    out.push_str(&format!(
        "{} checks, {} failed\n",
        reports.len(),
        failed
    ));
    out
}
