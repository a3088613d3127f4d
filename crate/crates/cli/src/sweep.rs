//! Parallel parameter sweeps and their aggregation.
//!
//! Every trial lands in `results/` as its own JSON report, named after its
//! scenario, protocol and seed, so an interrupted sweep resumes by skipping
//! files that already exist. Protocols within a scenario share seeds and
//! therefore networks, flows and mobility.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use qfgeo_core::seed::derive_seed;
use qfgeo_core::sim::run_trial;
use qfgeo_core::{MetricsReport, TrialConfig};
use rayon::prelude::*;

use crate::commands::trial_config;
use crate::failure::{CliResult, Failure, IoContext};
use crate::provenance::{write_atomic, Provenance};
use crate::{SweepArgs, TrialOverrides};

struct Job {
    config: TrialConfig,
    path: PathBuf,
}

fn plan(args: &SweepArgs) -> CliResult<Vec<Job>> {
    if args.trials == 0 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    let results = args.out.join("results");
    let mut jobs = Vec::new();
    let mut cell = 0u64;
    for &size in &args.sizes {
        for &density in &args.densities {
            for &flows in &args.flows {
                for &mobility in &args.mobility {
                    for &jammer in &args.jammer {
                        for trial in 0..args.trials {
                            let seed = derive_seed(args.seed, &[cell, trial]);
                            for protocol in &args.protocols {
                                let config = trial_config(&TrialOverrides {
                                    config: args.config.clone(),
                                    seed: Some(seed),
                                    protocol: Some(protocol.clone()),
                                    unbounded: false,
                                    density: Some(density),
                                    size: Some(size),
                                    flows: Some(flows),
                                    mobility: Some(mobility),
                                    jammer: Some(jammer),
                                    duration: args.duration,
                                })?;
                                config.validate()?;
                                let name = format!(
                                    "n{size}_rho{density:.4}_f{flows}_m{mobility}_j{}_{}_s{seed}.json",
                                    u8::from(jammer),
                                    config.protocol_label()
                                );
                                jobs.push(Job {
                                    config,
                                    path: results.join(name),
                                });
                            }
                        }
                        cell += 1;
                    }
                }
            }
        }
    }
    Ok(jobs)
}

fn run_job(job: Job) -> CliResult {
    let canonical = job.config.to_kv_string();
    let prov = Provenance::new(&canonical, job.config.seed);
    let (_, mut report) = run_trial(job.config)?;
    for (k, v) in prov.entries() {
        report.params_echo.insert(k.to_string(), v);
    }
    let json = report.to_json()?;
    write_atomic(&job.path, |b| {
        writeln!(b, "{json}").map_err(|e| Failure::usage(e.to_string()))
    })
}

pub fn sweep(args: &SweepArgs) -> CliResult {
    let jobs = plan(args)?;
    let total = jobs.len();
    let pending: Vec<Job> = jobs.into_iter().filter(|j| !j.path.exists()).collect();
    eprintln!("{total} trials, {} already done", total - pending.len());
    fs::create_dir_all(args.out.join("results")).at(&args.out)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    let done = AtomicUsize::new(0);
    let todo = pending.len();
    pool.install(|| {
        pending.into_par_iter().try_for_each(|job| {
            run_job(job)?;
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            if k.is_multiple_of(50) || k == todo {
                eprintln!("{k}/{todo}");
            }
            Ok::<_, Failure>(())
        })
    })?;

    let rows = load_rows(&args.out.join("results"))?;
    write_sweep_csv(&args.out.join("sweep.csv"), &rows)
}

/// Scenario columns, in output order.
const KEYS: [&str; 7] = ["size", "density", "flows", "mobility", "jammer", "protocol", "seed"];
const FACTORS: [&str; 5] = ["size", "density", "flows", "mobility", "jammer"];
const METRICS: [&str; 4] = ["goodput_bps", "reception_ratio", "latency_s", "goodput_efficiency"];

struct Row {
    keys: Vec<String>,
    metrics: [f64; 4],
    flows_delivered: usize,
    flow_count: usize,
}

impl Row {
    fn from_report(r: &MetricsReport, path: &Path) -> CliResult<Row> {
        let keys = KEYS
            .iter()
            .map(|k| {
                r.params_echo
                    .get(*k)
                    .cloned()
                    .ok_or_else(|| Failure::usage(format!("{}: params_echo lacks `{k}`", path.display())))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Row {
            keys,
            metrics: [r.goodput_bps, r.reception_ratio, r.latency_s, r.goodput_efficiency],
            flows_delivered: r.flows_delivered,
            flow_count: r.flow_count,
        })
    }

    fn key(&self, name: &str) -> &str {
        &self.keys[KEYS.iter().position(|k| *k == name).expect("known key")]
    }
}

/// Orders numeric values numerically and everything else lexically.
fn cmp_values(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

fn load_rows(dir: &Path) -> CliResult<Vec<Row>> {
    let mut rows = Vec::new();
    for entry in fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = fs::read_to_string(&path).at(&path)?;
        let report = MetricsReport::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        rows.push(Row::from_report(&report, &path)?);
    }
    rows.sort_by(|a, b| {
        a.keys
            .iter()
            .zip(&b.keys)
            .map(|(x, y)| cmp_values(x, y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(rows)
}

fn write_sweep_csv(path: &Path, rows: &[Row]) -> CliResult {
    write_atomic(path, |b| {
        let io = |e: std::io::Error| Failure::usage(e.to_string());
        writeln!(b, "{},{},flows_delivered,flow_count", KEYS.join(","), METRICS.join(",")).map_err(io)?;
        for r in rows {
            let m: Vec<String> = r.metrics.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(
                b,
                "{},{},{},{}",
                r.keys.join(","),
                m.join(","),
                r.flows_delivered,
                r.flow_count
            )
            .map_err(io)?;
        }
        Ok(())
    })
}

/// Writes `sweep.csv` and one `summary_<factor>.csv` per scenario factor,
/// with per-protocol means and trial counts at each factor level.
pub fn report(input: &Path, out: &Path) -> CliResult {
    let results = input.join("results");
    if !results.is_dir() {
        return Err(Failure::usage(format!("{} is not a sweep directory", input.display())));
    }
    let rows = load_rows(&results)?;
    if rows.is_empty() {
        return Err(Failure::usage(format!("no results in {}", results.display())));
    }
    fs::create_dir_all(out).at(out)?;
    write_sweep_csv(&out.join("sweep.csv"), &rows)?;

    for factor in FACTORS {
        let mut groups: BTreeMap<(String, String), (usize, [f64; 4])> = BTreeMap::new();
        for r in &rows {
            let g = groups
                .entry((r.key(factor).to_string(), r.key("protocol").to_string()))
                .or_insert((0, [0.0; 4]));
            g.0 += 1;
            for (acc, v) in g.1.iter_mut().zip(r.metrics) {
                *acc += v;
            }
        }
        let mut ordered: Vec<_> = groups.into_iter().collect();
        ordered.sort_by(|((a, pa), _), ((b, pb), _)| cmp_values(a, b).then_with(|| pa.cmp(pb)));

        let path = out.join(format!("summary_{factor}.csv"));
        write_atomic(&path, |b| {
            let io = |e: std::io::Error| Failure::usage(e.to_string());
            let means: Vec<String> = METRICS.iter().map(|m| format!("mean_{m}")).collect();
            writeln!(b, "{factor},protocol,trials,{}", means.join(",")).map_err(io)?;
            for ((level, protocol), (n, sums)) in &ordered {
                let m: Vec<String> = sums.iter().map(|s| format!("{:.6}", s / *n as f64)).collect();
                writeln!(b, "{level},{protocol},{n},{}", m.join(",")).map_err(io)?;
            }
            Ok(())
        })?;
        println!("{}", path.display());
    }
    Ok(())
}
