//! Monte Carlo study of path stretch and observed ellipse factors.
//!
//! Each trial draws a uniform random network, picks one random endpoint
//! pair, and records the normalized endpoint distance `delta`, the path
//! stretch `zeta` of the Euclidean shortest path and the smallest ellipse
//! factor that covers that path. Disconnected pairs are counted but emit no
//! sample.

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean_shortest_path, generate_network_with_rng, DensitySpec, NetworkGraph, NodeId};
use crate::seed::{derive_seed, rng_from_seed};

/// The densities studied throughout: from the approximate critical density
/// up to a fog-like mesh.
pub const STUDY_DENSITIES: [f64; 5] = [std::f64::consts::SQRT_2, 2.0, 3.0, 4.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchSample {
    pub rho: f64,
    pub delta: f64,
    pub zeta: f64,
    pub ell_obs: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n: usize,
    pub rho_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl StudyConfig {
    pub fn new(n: usize, rho_list: Vec<f64>, trials: usize, seed: u64) -> Self {
        StudyConfig {
            n,
            rho_list,
            trials,
            seed,
        }
    }

    /// 343 nodes, the five study densities, 2000 networks each.
    pub fn reference(seed: u64) -> Self {
        StudyConfig::new(343, STUDY_DENSITIES.to_vec(), 2000, seed)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.rho_list.is_empty() {
            return Err(Error::invalid("no densities given"));
        }
        for &rho in &self.rho_list {
            DensitySpec::new(self.n, rho)?;
        }
        Ok(())
    }

    /// Seed of the network drawn for `trial` at density index `rho_index`.
    pub fn trial_seed(&self, rho_index: usize, trial: usize) -> u64 {
        derive_seed(self.seed, &[rho_index as u64, trial as u64])
    }
}

/// Attempted vs. retained trial counts for one density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityCount {
    pub rho: f64,
    pub attempted: usize,
    pub retained: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StretchDataset {
    pub samples: Vec<StretchSample>,
    pub counts: Vec<DensityCount>,
}

impl StretchDataset {
    pub fn skipped(&self) -> usize {
        self.counts.iter().map(|c| c.attempted - c.retained).sum()
    }

    pub fn for_density(&self, rho: f64) -> impl Iterator<Item = &StretchSample> {
        self.samples.iter().filter(move |s| s.rho == rho)
    }

    /// Writes `rho,delta,zeta,ell_obs,seed` with 6-decimal reals.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_samples_csv(&self.samples, w)
    }
}

pub fn write_samples_csv<W: Write>(samples: &[StretchSample], mut w: W) -> Result<()> {
    writeln!(w, "rho,delta,zeta,ell_obs,seed")?;
    for s in samples {
        writeln!(
            w,
            "{:.6},{:.6},{:.6},{:.6},{}",
            s.rho, s.delta, s.zeta, s.ell_obs, s.seed
        )?;
    }
    Ok(())
}

/// Reads samples written by [`write_samples_csv`]. `#` lines are comments.
pub fn read_samples_csv<R: Read>(r: R) -> Result<Vec<StretchSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = reader.headers()?.clone();
    let expected = ["rho", "delta", "zeta", "ell_obs", "seed"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(1, format!("expected header {}", expected.join(","))));
    }
    let mut out = Vec::new();
    for rec in reader.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// `zeta` for the pair `(s, d)`, or `None` when they are disconnected.
pub fn path_stretch(g: &NetworkGraph, s: NodeId, d: NodeId) -> Result<Option<f64>> {
    if s == d {
        return Err(Error::invalid("path stretch needs distinct endpoints"));
    }
    let euclid = g.dist(s, d);
    if euclid == 0.0 {
        return Err(Error::ZeroDistance);
    }
    Ok(euclidean_shortest_path(g, s, d)?.map(|p| p.length / euclid))
}

/// One stretch sample for a given network and endpoint pair.
pub fn measure_pair(g: &NetworkGraph, rho: f64, seed: u64, s: NodeId, d: NodeId) -> Result<Option<StretchSample>> {
    let euclid = g.dist(s, d);
    if s == d || euclid == 0.0 {
        return Err(Error::ZeroDistance);
    }
    let Some(path) = euclidean_shortest_path(g, s, d)? else {
        return Ok(None);
    };
    let radius = g.radius();
    Ok(Some(StretchSample {
        rho,
        delta: euclid / radius,
        zeta: path.length / euclid,
        ell_obs: path.ellipse_factor(g)?,
        seed,
    }))
}

fn run_trial(config: &StudyConfig, rho_index: usize, trial: usize) -> Result<Option<StretchSample>> {
    let rho = config.rho_list[rho_index];
    let seed = config.trial_seed(rho_index, trial);
    let mut rng = rng_from_seed(seed);
    let g = generate_network_with_rng(DensitySpec::new(config.n, rho)?, seed, &mut rng)?;
    let s = rng.gen_range(0..config.n);
    let mut d = rng.gen_range(0..config.n - 1);
    if d >= s {
        d += 1;
    }
    measure_pair(&g, rho, seed, NodeId(s), NodeId(d))
}

/// Runs the whole study. Trials run in parallel; the result is ordered by
/// density then trial index, independent of scheduling.
pub fn sample_stretch(config: &StudyConfig) -> Result<StretchDataset> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.rho_list.len())
        .flat_map(|r| (0..config.trials).map(move |t| (r, t)))
        .collect();
    let results: Vec<Result<Option<StretchSample>>> = jobs
        .par_iter()
        .map(|&(r, t)| run_trial(config, r, t))
        .collect();

    let mut dataset = StretchDataset {
        samples: Vec::new(),
        counts: config
            .rho_list
            .iter()
            .map(|&rho| DensityCount {
                rho,
                attempted: config.trials,
                retained: 0,
            })
            .collect(),
    };
    for (&(r, _), res) in jobs.iter().zip(results) {
        if let Some(sample) = res? {
            dataset.counts[r].retained += 1;
            dataset.samples.push(sample);
        }
    }
    Ok(dataset)
}

/// Empirical `q`-quantile (nearest-rank) of `values`; `None` if empty.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

/// Width of the `delta` buckets used for per-distance statistics.
pub const DELTA_BUCKET_WIDTH: f64 = 0.5;

/// Index of the `delta` bucket `[k*w, (k+1)*w)`.
pub fn delta_bucket(delta: f64) -> usize {
    (delta / DELTA_BUCKET_WIDTH).floor() as usize
}
