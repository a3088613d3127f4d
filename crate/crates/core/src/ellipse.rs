//! Prediction model for the ellipse factor.
//!
//! For `delta <= 1` the endpoints are neighbors and the factor is 1.
//! Otherwise the factor is `max(1 + (alpha * ln(delta) + beta) / rho^gamma,
//! ell_min)`. The coefficients come from a high-quantile linear fit of the
//! density-normalized observations `(ell_obs - 1) * rho^gamma` on
//! `ln(delta)`.
//!
//! The capacity variant evaluates the same curve at an effective density
//! `phi * rho`, where `phi` is the share of nodes with enough residual
//! capacity.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stretch::StretchSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub ell_min: f64,
}

impl Default for EllipseModel {
    fn default() -> Self {
        EllipseModel::REFERENCE
    }
}

impl EllipseModel {
    /// Coefficients fitted at the 99th percentile on 343-node networks.
    pub const REFERENCE: EllipseModel = EllipseModel {
        alpha: -4.4732,
        beta: 13.0715,
        gamma: 2.0,
        ell_min: 1.05,
    };

    pub const DEFAULT_ELL_MIN: f64 = 1.05;

    /// Published self-coverage of [`EllipseModel::REFERENCE`] in percent, as
    /// `(rho, coverage)` over the study densities.
    pub const REFERENCE_COVERAGE_PCT: [(f64, f64); 5] = [
        (std::f64::consts::SQRT_2, 98.53),
        (2.0, 97.27),
        (3.0, 99.59),
        (4.0, 99.48),
        (5.0, 98.69),
    ];

    pub fn new(alpha: f64, beta: f64, gamma: f64, ell_min: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::invalid("model coefficients must be finite"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        if !(ell_min > 1.0) {
            return Err(Error::invalid(format!("ell_min must exceed 1, got {ell_min}")));
        }
        Ok(EllipseModel {
            alpha,
            beta,
            gamma,
            ell_min,
        })
    }

    /// Ellipse factor that whp contains a shortest path between endpoints
    /// `delta` radii apart in a network of density `rho`.
    pub fn predict_l_con(&self, rho: f64, delta: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::invalid(format!("density must be positive, got {rho}")));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("distance must be positive, got {delta}")));
        }
        Ok(self.l_con_unchecked(rho, delta))
    }

    fn l_con_unchecked(&self, rho: f64, delta: f64) -> f64 {
        if delta <= 1.0 {
            return 1.0;
        }
        let raw = 1.0 + (self.alpha * delta.ln() + self.beta) / rho.powf(self.gamma);
        raw.max(self.ell_min)
    }

    /// Ellipse factor sized for capacity: the connectivity factor at the
    /// effective density `phi * rho`.
    pub fn predict_l_cap(&self, rho: f64, delta: f64, phi: f64) -> Result<f64> {
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(Error::invalid(format!("capacity fraction must be in (0, 1], got {phi}")));
        }
        self.predict_l_con(phi * rho, delta)
    }

    /// Writes the one-line record `alpha beta gamma ell_min`.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {} {}", self.alpha, self.beta, self.gamma, self.ell_min)?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(lineno + 1, "non-numeric model field"))?;
            if vals.len() != 4 {
                return Err(Error::parse(lineno + 1, "expected `alpha beta gamma ell_min`"));
            }
            return EllipseModel::new(vals[0], vals[1], vals[2], vals[3]);
        }
        Err(Error::parse(0, "empty model file"))
    }
}

/// Pinball loss of residual `r` at quantile level `tau`.
#[inline]
pub fn pinball(r: f64, tau: f64) -> f64 {
    if r >= 0.0 {
        tau * r
    } else {
        (tau - 1.0) * r
    }
}

/// Total pinball loss of the line `slope * x + intercept`.
pub fn pinball_loss(xs: &[f64], ys: &[f64], slope: f64, intercept: f64, tau: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| pinball(y - slope * x - intercept, tau))
        .sum()
}

/// Linear quantile regression `y ~ slope * x + intercept` at level `tau`.
///
/// For a fixed slope the optimal intercept is the `tau`-quantile of the
/// residuals `y - slope * x`, and the resulting profile loss is convex and
/// piecewise linear in the slope. The slope is found by bracketing and
/// golden-section search on that profile.
pub fn quantile_line(xs: &[f64], ys: &[f64], tau: f64) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::invalid("quantile fit needs equally sized, nonempty inputs"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!("tau must be in (0, 1), got {tau}")));
    }
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(xmax - xmin > 1e-12 * (1.0 + xmax.abs())) {
        return Err(Error::Degenerate("all abscissae are equal; slope is unidentifiable".into()));
    }

    let mut scratch = Vec::with_capacity(xs.len());
    let mut profile = |slope: f64| -> (f64, f64) {
        scratch.clear();
        scratch.extend(xs.iter().zip(ys).map(|(x, y)| y - slope * x));
        let intercept = lower_quantile(&mut scratch, tau);
        (pinball_loss(xs, ys, slope, intercept, tau), intercept)
    };

    // Least-squares slope as the starting point.
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let start = sxy / sxx;
    let yspan = ys.iter().fold(0.0f64, |m, y| m.max((y - my).abs()));
    let mut step = (yspan / (xmax - xmin)).max(1e-6);

    // Expand until the start point is bracketed by higher losses.
    let f0 = profile(start).0;
    let (mut lo, mut hi) = (start - step, start + step);
    let mut iterations = 0;
    while profile(lo).0 < f0 || profile(hi).0 < f0 {
        step *= 2.0;
        lo = start - step;
        hi = start + step;
        iterations += 1;
        if iterations > 200 {
            return Err(Error::Degenerate("could not bracket the quantile slope".into()));
        }
    }

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = profile(c).0;
    let mut fd = profile(d).0;
    while hi - lo > 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = profile(c).0;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = profile(d).0;
        }
    }
    let mut best = 0.5 * (lo + hi);
    let (mut best_loss, mut best_icpt) = profile(best);
    for cand in [lo, hi, start] {
        let (l, i) = profile(cand);
        if l < best_loss {
            best = cand;
            best_loss = l;
            best_icpt = i;
        }
    }
    Ok((best, best_icpt))
}

/// Smallest value `v` with at least `ceil(tau * n)` elements `<= v`.
fn lower_quantile(values: &mut [f64], tau: f64) -> f64 {
    let n = values.len();
    let rank = ((tau * n as f64).ceil() as usize).clamp(1, n);
    *values
        .select_nth_unstable_by(rank - 1, |a, b| a.total_cmp(b))
        .1
}

/// Minimum number of `delta > 1` samples required to fit.
pub const MIN_FIT_SAMPLES: usize = 50;

/// Fits `alpha` and `beta` at quantile `tau` on samples with `delta > 1`,
/// using the normalized response `(ell_obs - 1) * rho^gamma`.
pub fn fit_quantile(samples: &[StretchSample], tau: f64, gamma: f64, ell_min: f64) -> Result<EllipseModel> {
    let usable: Vec<&StretchSample> = samples.iter().filter(|s| s.delta > 1.0).collect();
    if usable.len() < MIN_FIT_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_FIT_SAMPLES} samples with delta > 1, got {}",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|s| s.delta.ln()).collect();
    let ys: Vec<f64> = usable
        .iter()
        .map(|s| (s.ell_obs - 1.0) * s.rho.powf(gamma))
        .collect();
    let (alpha, beta) = quantile_line(&xs, &ys, tau)?;
    EllipseModel::new(alpha, beta, gamma, ell_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityCoverage {
    pub rho: f64,
    pub coverage: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: EllipseModel,
    /// Ascending by density.
    pub coverage_by_rho: Vec<DensityCoverage>,
}

impl FitReport {
    pub fn coverage(&self, rho: f64) -> Option<f64> {
        self.coverage_by_rho
            .iter()
            .find(|c| (c.rho - rho).abs() < 1e-9)
            .map(|c| c.coverage)
    }

    /// Writes `rho,coverage,samples`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rho,coverage,samples")?;
        for c in &self.coverage_by_rho {
            writeln!(w, "{:.6},{:.6},{}", c.rho, c.coverage, c.samples)?;
        }
        Ok(())
    }
}

/// Per density, the share of samples whose observed factor does not exceed
/// the model's prediction.
pub fn coverage_table(model: &EllipseModel, samples: &[StretchSample]) -> FitReport {
    let mut rhos: Vec<f64> = samples.iter().map(|s| s.rho).collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    let coverage_by_rho = rhos
        .into_iter()
        .map(|rho| {
            let (covered, total) = samples
                .iter()
                .filter(|s| s.rho == rho)
                .fold((0usize, 0usize), |(c, t), s| {
                    let predicted = model.l_con_unchecked(s.rho, s.delta);
                    (c + usize::from(s.ell_obs <= predicted), t + 1)
                });
            DensityCoverage {
                rho,
                coverage: covered as f64 / total as f64,
                samples: total,
            }
        })
        .collect();
    FitReport {
        model: *model,
        coverage_by_rho,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const M: EllipseModel = EllipseModel::REFERENCE;

    #[test]
    fn l_con_examples() {
        assert_eq!(M.predict_l_con(3.0, 0.8).unwrap(), 1.0);
        assert_eq!(M.predict_l_con(3.0, 1.0).unwrap(), 1.0);
        assert!((M.predict_l_con(2.0, std::f64::consts::E).unwrap() - 3.149575).abs() < 1e-9);
        assert_eq!(M.predict_l_con(5.0, 20.0).unwrap(), 1.05);
    }

    #[test]
    fn l_cap_examples() {
        let e = std::f64::consts::E;
        assert_eq!(M.predict_l_cap(3.0, 7.0, 1.0).unwrap(), M.predict_l_con(3.0, 7.0).unwrap());
        assert!((M.predict_l_cap(4.0, e, 0.5).unwrap() - 3.149575).abs() < 1e-9);
        assert!((M.predict_l_cap(5.0, 2.0, 0.2).unwrap() - 10.970914031919254).abs() < 1e-9);
        assert!(M.predict_l_cap(5.0, 2.0, 0.0).is_err());
        assert!(M.predict_l_cap(5.0, 2.0, 1.5).is_err());
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(M.predict_l_con(0.0, 2.0).is_err());
        assert!(M.predict_l_con(2.0, 0.0).is_err());
        assert!(M.predict_l_con(-1.0, 2.0).is_err());
        assert!(EllipseModel::new(1.0, 1.0, 0.0, 1.05).is_err());
        assert!(EllipseModel::new(1.0, 1.0, 2.0, 1.0).is_err());
    }

    fn samples_on_line(alpha: f64, beta: f64, rho: f64, gamma: f64) -> Vec<StretchSample> {
        (0..200)
            .map(|i| {
                let delta = 1.05 + i as f64 * 0.07;
                let ell_hat = alpha * delta.ln() + beta;
                StretchSample {
                    rho,
                    delta,
                    zeta: 1.0,
                    ell_obs: 1.0 + ell_hat / rho.powf(gamma),
                    seed: i,
                }
            })
            .collect()
    }

    #[test]
    fn exact_line_is_recovered() {
        let m = fit_quantile(&samples_on_line(2.0, 3.0, 2.0, 2.0), 0.99, 2.0, 1.05).unwrap();
        assert!((m.alpha - 2.0).abs() < 1e-6, "{m:?}");
        assert!((m.beta - 3.0).abs() < 1e-6, "{m:?}");
        assert_eq!(m.gamma, 2.0);
        assert_eq!(m.ell_min, 1.05);
    }

    #[test]
    fn median_fit_recovers_noisy_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..4000).map(|_| rng.gen_range(0.0..3.0)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| -1.5 * x + 4.0 + rng.gen_range(-1.0..1.0))
            .collect();
        let (a, b) = quantile_line(&xs, &ys, 0.5).unwrap();
        assert!((a + 1.5).abs() < 0.1, "slope {a}");
        assert!((b - 4.0).abs() < 0.1, "intercept {b}");
    }

    #[test]
    fn degenerate_and_small_inputs_rejected() {
        let same: Vec<StretchSample> = (0..100)
            .map(|i| StretchSample {
                rho: 2.0,
                delta: 3.0,
                zeta: 1.0,
                ell_obs: 1.0 + i as f64 * 0.01,
                seed: i,
            })
            .collect();
        assert!(matches!(fit_quantile(&same, 0.99, 2.0, 1.05), Err(Error::Degenerate(_))));
        assert!(fit_quantile(&same[..10], 0.99, 2.0, 1.05).is_err());
        assert!(quantile_line(&[1.0, 2.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn fit_ignores_short_pairs() {
        let mut s = samples_on_line(-1.0, 6.0, 3.0, 2.0);
        s.extend((0..500).map(|i| StretchSample {
            rho: 3.0,
            delta: 0.5,
            zeta: 1.0,
            ell_obs: 1.0,
            seed: 1000 + i,
        }));
        let m = fit_quantile(&s, 0.9, 2.0, 1.05).unwrap();
        assert!((m.alpha + 1.0).abs() < 1e-6 && (m.beta - 6.0).abs() < 1e-6);
    }

    #[test]
    fn coverage_examples() {
        let samples = samples_on_line(2.0, 3.0, 2.0, 2.0);
        let huge = EllipseModel::new(0.0, 1e9, 2.0, 1.05).unwrap();
        let rep = coverage_table(&huge, &samples);
        assert_eq!(rep.coverage_by_rho.len(), 1);
        assert_eq!(rep.coverage(2.0), Some(1.0));
        assert_eq!(rep.coverage_by_rho[0].samples, 200);

        let one = [StretchSample {
            rho: 3.0,
            delta: 2.0,
            zeta: 1.1,
            ell_obs: 1.01,
            seed: 0,
        }];
        assert_eq!(coverage_table(&M, &one).coverage(3.0), Some(1.0));
    }

    #[test]
    fn model_text_roundtrip() {
        let mut buf = Vec::new();
        M.write_text(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "-4.4732 13.0715 2 1.05\n");
        assert_eq!(EllipseModel::read_text(&buf[..]).unwrap(), M);
        assert!(EllipseModel::read_text("1 2 3\n".as_bytes()).is_err());
        assert!(EllipseModel::read_text("# only comment\n".as_bytes()).is_err());
    }
}
