use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use qfgeo_core::ellipse::{coverage_table, fit_quantile};
use qfgeo_core::geometry::generate_network;
use qfgeo_core::seed::derive_seed;
use qfgeo_core::sim::{run_trial, FlowPlan, JammerConfig, NetworkSpec};
use qfgeo_core::stretch::{read_samples_csv, sample_stretch};
use qfgeo_core::{DensitySpec, EllipseModel, StretchSample, StudyConfig, TrialConfig};

use crate::failure::{CliResult, Failure, IoContext};
use crate::provenance::{write_atomic, Provenance};
use crate::TrialOverrides;

pub fn netgen(size: usize, density: f64, seed: u64, count: usize, out: &Path) -> CliResult {
    let spec = DensitySpec::new(size, density)?;
    fs::create_dir_all(out).at(out)?;
    for i in 0..count {
        let net_seed = derive_seed(seed, &[i as u64]);
        let g = generate_network(spec, net_seed)?;
        let canonical = format!("netgen size={size} density={density} master={seed} index={i}\n");
        let prov = Provenance::new(&canonical, net_seed);
        let path = out.join(format!("net_{i:04}.txt"));
        write_atomic(&path, |b| {
            b.extend_from_slice(prov.header().as_bytes());
            g.write_text(&mut *b)?;
            Ok(())
        })?;
        eprintln!("{}: {} nodes, {} edges", path.display(), g.len(), g.edge_count());
    }
    Ok(())
}

pub fn stretch(size: usize, densities: Vec<f64>, trials: usize, seed: u64, out: &Path) -> CliResult {
    let study = StudyConfig::new(size, densities, trials, seed);
    let data = sample_stretch(&study)?;
    let canonical = format!(
        "stretch size={} densities={:?} trials={} seed={}\n",
        study.n, study.rho_list, study.trials, study.seed
    );
    let prov = Provenance::new(&canonical, seed);
    write_atomic(out, |b| {
        b.extend_from_slice(prov.header().as_bytes());
        data.write_csv(&mut *b)?;
        Ok(())
    })?;
    for c in &data.counts {
        eprintln!("rho={:.4}: {} of {} networks connected", c.rho, c.retained, c.attempted);
    }
    Ok(())
}

fn read_samples(paths: &[PathBuf]) -> CliResult<Vec<StretchSample>> {
    let mut all = Vec::new();
    for p in paths {
        let f = fs::File::open(p).at(p)?;
        let mut samples =
            read_samples_csv(BufReader::new(f)).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
        all.append(&mut samples);
    }
    Ok(all)
}

pub fn fit(inputs: &[PathBuf], tau: f64, gamma: f64, ell_min: f64, out: &Path) -> CliResult {
    let samples = read_samples(inputs)?;
    let model = fit_quantile(&samples, tau, gamma, ell_min)?;
    let report = coverage_table(&model, &samples);
    let canonical = format!(
        "fit inputs={:?} tau={tau} gamma={gamma} ell_min={ell_min} samples={}\n",
        inputs,
        samples.len()
    );
    let prov = Provenance::new(&canonical, 0);
    fs::create_dir_all(out).at(out)?;
    write_atomic(&out.join("model.txt"), |b| {
        b.extend_from_slice(prov.header().as_bytes());
        model.write_text(&mut *b)?;
        Ok(())
    })?;
    write_atomic(&out.join("coverage.csv"), |b| {
        b.extend_from_slice(prov.header().as_bytes());
        report.write_csv(&mut *b)?;
        Ok(())
    })?;
    println!(
        "alpha={:.4} beta={:.4} gamma={} ell_min={}",
        model.alpha, model.beta, model.gamma, model.ell_min
    );
    for c in &report.coverage_by_rho {
        println!("rho={:.4} coverage={:.2}% n={}", c.rho, 100.0 * c.coverage, c.samples);
    }
    Ok(())
}

pub struct ValidateOptions {
    pub inputs: Vec<PathBuf>,
    pub model: Option<PathBuf>,
    pub size: usize,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub out: Option<PathBuf>,
}

/// Exits with the invariant status when any reference density's coverage
/// lies outside the tolerance.
pub fn validate(opts: &ValidateOptions) -> CliResult {
    let model = match &opts.model {
        Some(p) => {
            let f = fs::File::open(p).at(p)?;
            EllipseModel::read_text(BufReader::new(f)).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        None => EllipseModel::REFERENCE,
    };
    let samples = if opts.inputs.is_empty() {
        let densities = EllipseModel::REFERENCE_COVERAGE_PCT.iter().map(|r| r.0).collect();
        sample_stretch(&StudyConfig::new(opts.size, densities, opts.trials, opts.seed))?.samples
    } else {
        read_samples(&opts.inputs)?
    };
    let report = coverage_table(&model, &samples);
    if let Some(out) = &opts.out {
        write_atomic(out, |b| {
            report.write_csv(&mut *b)?;
            Ok(())
        })?;
    }

    let mut outside = Vec::new();
    println!("rho,coverage_pct,reference_pct,deviation_pts");
    for c in &report.coverage_by_rho {
        let reference = EllipseModel::REFERENCE_COVERAGE_PCT
            .iter()
            .find(|r| (r.0 - c.rho).abs() < 1e-6)
            .map(|r| r.1);
        let pct = 100.0 * c.coverage;
        match reference {
            Some(r) => {
                let dev = pct - r;
                println!("{:.4},{pct:.2},{r:.2},{dev:+.2}", c.rho);
                if dev.abs() > opts.tolerance {
                    outside.push(format!("rho={:.4} ({dev:+.2} pts)", c.rho));
                }
            }
            None => println!("{:.4},{pct:.2},,", c.rho),
        }
    }
    if outside.is_empty() {
        Ok(())
    } else {
        Err(Failure::invariant(format!(
            "coverage outside ±{} pts at {}",
            opts.tolerance,
            outside.join(", ")
        )))
    }
}

/// The trial configuration described by `--config` plus flag overrides.
pub fn trial_config(o: &TrialOverrides) -> CliResult<TrialConfig> {
    let mut c = match &o.config {
        Some(p) => {
            let f = fs::File::open(p).at(p)?;
            TrialConfig::from_kv(BufReader::new(f)).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        None => TrialConfig::default(),
    };
    if o.size.is_some() || o.density.is_some() {
        let NetworkSpec::Generated(spec) = &mut c.network else {
            return Err(Failure::usage("--size/--density cannot override an explicit node list"));
        };
        if let Some(n) = o.size {
            spec.n = n;
        }
        if let Some(rho) = o.density {
            spec.rho = rho;
            c.params.rho = rho;
        }
    }
    if let Some(s) = o.seed {
        c.seed = s;
    }
    if let Some(k) = o.flows {
        c.flows = FlowPlan::Random(k);
    }
    if let Some(m) = o.mobility {
        c.mobility_mps = m;
    }
    match o.jammer {
        Some(true) if c.jammer.is_none() => c.jammer = Some(JammerConfig::default()),
        Some(false) => c.jammer = None,
        _ => {}
    }
    if let Some(p) = &o.protocol {
        c.set_protocol(p).map_err(|e| Failure::usage(e.to_string()))?;
    }
    if o.unbounded {
        c.params.unbounded = true;
    }
    if let Some(d) = o.duration {
        c.duration_s = d;
    }
    Ok(c)
}

pub fn simulate(o: &TrialOverrides, out: &Path) -> CliResult {
    let config = trial_config(o)?;
    config.validate()?;
    let canonical = config.to_kv_string();
    let prov = Provenance::new(&canonical, config.seed);
    let seed = config.seed;
    let (log, mut report) = run_trial(config)?;
    for (k, v) in prov.entries() {
        report.params_echo.insert(k.to_string(), v);
    }

    fs::create_dir_all(out).at(out)?;
    write_atomic(&out.join("config.txt"), |b| {
        b.extend_from_slice(prov.header().as_bytes());
        b.extend_from_slice(canonical.as_bytes());
        Ok(())
    })?;
    write_atomic(&out.join("events.csv"), |b| {
        b.extend_from_slice(prov.header().as_bytes());
        log.write_csv(&mut *b)?;
        Ok(())
    })?;
    let json = report.to_json()?;
    write_atomic(&out.join("report.json"), |b| {
        writeln!(b, "{json}").map_err(|e| Failure::usage(e.to_string()))
    })?;

    println!(
        "seed={seed} flows={}/{} goodput={:.0} bps rr={:.4} latency={:.4} s efficiency={:.4}",
        report.flows_delivered,
        report.flow_count,
        report.goodput_bps,
        report.reception_ratio,
        report.latency_s,
        report.goodput_efficiency
    );
    Ok(())
}
