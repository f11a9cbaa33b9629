use crate::args::{window_label, WindowArg};
use crate::output::{jnum, num, write_record, Table};
use anyhow::{bail, Result};
use clap::Args;
use critpoints::fieldsim::{self, SolverConfig, MAX_DIRECT_M};
use critpoints::{critstats, RngStream};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Args, Serialize)]
pub struct DirectArgs {
    /// Dimension, at most 3.
    #[arg(long)]
    pub m: usize,
    /// Line bundle degree.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub degree: u32,
    /// Number of sampled sections.
    #[arg(long, default_value_t = 200)]
    pub sections: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Window `lo:hi` on the normalized critical value.
    #[arg(long, default_value = "0:inf")]
    pub window: WindowArg,
    /// Newton starts in the first batch (default scales with the expected count).
    #[arg(long)]
    pub starts: Option<usize>,
    /// Newton convergence threshold.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Write every critical point as CSV.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Print the covariance identity table at the origin instead.
    #[arg(long, conflicts_with = "compare_wishart")]
    pub verify_covariances: bool,
    /// Compare direct counts with the Wishart estimates.
    #[arg(long)]
    pub compare_wishart: bool,
    /// Draws for `--verify-covariances` and `--compare-wishart`.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn run(mut a: DirectArgs) -> Result<ExitCode> {
    let start = Instant::now();
    if a.m == 0 || a.m > MAX_DIRECT_M {
        bail!(
            "direct counting is limited to 1 <= m <= {MAX_DIRECT_M}: the number of critical points and the Newton \
             starts needed grow exponentially in m; use `estimate` for larger m"
        );
    }
    let seed = crate::resolve_seed(a.seed, critpoints::verify::DEFAULT_SEED)?;
    a.seed = Some(seed);
    let stream = RngStream::new(seed);
    if a.verify_covariances {
        return covariances(&a, stream);
    }
    let cfg = SolverConfig { starts: a.starts, tol: a.tol, ..Default::default() };
    let survey = fieldsim::direct_survey(a.m, a.degree, a.sections, cfg, stream.substream(0))?;
    let w = a.window.0;

    if a.compare_wishart {
        let mut t = Table::new(&["target", "direct_mean", "direct_stderr", "wishart_mean", "wishart_stderr", "combined_z"]);
        t.note(format!("window {}; {} of {} sections flagged unstable and excluded", window_label(&w), survey.flagged(), a.sections));
        let wstream = stream.substream(1);
        let mut rows = Vec::new();
        for k in 0..=a.m {
            let d = survey.count_estimate(k, w)?.estimate;
            let e = critstats::mc_expected_count_index(a.m, k, a.degree, w, a.n, wstream.substream(k as u64))?;
            rows.push((format!("index={}", 2 * a.m - k), d, e));
        }
        let d = survey.total_estimate(w).estimate;
        let e = critstats::mc_expected_count_total(a.m, a.degree, w, a.n, wstream.substream(a.m as u64 + 1))?;
        rows.push(("total".into(), d, e));
        for (label, d, e) in rows {
            t.push(vec![label, num(d.mean), num(d.stderr), num(e.mean), num(e.stderr), num(d.combined_z(&e))]);
        }
        t.write(&a, a.out.as_deref())?;
        return Ok(ExitCode::SUCCESS);
    }

    if let Some(path) = &a.points {
        let mut header = vec!["section_id".to_string(), "chart".to_string()];
        for j in 1..=a.m {
            header.push(format!("z{j}_re"));
            header.push(format!("z{j}_im"));
        }
        header.extend(["normalized_value", "index", "residual", "stable", "degenerate"].map(String::from));
        let mut t = Table::new(&header);
        t.note("z: affine coordinates in the given chart (homogeneous coordinate `chart` set to 1)");
        for (i, sec) in survey.sections.iter().enumerate() {
            for p in &sec.points {
                let mut row = vec![i.to_string(), p.location.chart.to_string()];
                for c in &p.location.z {
                    row.push(num(c.re));
                    row.push(num(c.im));
                }
                row.extend([
                    num(p.normalized_value),
                    p.index.to_string(),
                    num(p.residual),
                    sec.stable.to_string(),
                    p.degenerate.to_string(),
                ]);
                t.push(row);
            }
        }
        t.write(&a, Some(path))?;
    }

    let by_index: Vec<_> = (0..=a.m)
        .rev()
        .map(|k| {
            let e = survey.count_estimate(k, w).map(|d| d.estimate)?;
            Ok(json!({ "index": 2 * a.m - k, "k": k, "mean": e.mean, "stderr": jnum(e.stderr) }))
        })
        .collect::<Result<_>>()?;
    let total = survey.total_estimate(w).estimate;
    let starts: Vec<f64> = survey.sections.iter().map(|s| s.starts_used as f64).collect();
    let body = json!({
        "m": a.m,
        "N": a.degree,
        "sections": a.sections,
        "seed": seed,
        "window": window_label(&w),
        "solver": survey.config,
        "by_index": by_index,
        "total": { "mean": total.mean, "stderr": jnum(total.stderr) },
        "flagged": survey.flagged(),
        "instability_rate": survey.instability_rate(),
        "euler_target": fieldsim::euler_target(a.m, a.degree),
        "mean_starts": starts.iter().sum::<f64>() / starts.len().max(1) as f64,
    });
    write_record(&a, body, start.elapsed().as_secs_f64(), a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn covariances(a: &DirectArgs, stream: RngStream) -> Result<ExitCode> {
    let r = fieldsim::covariance_selftest(a.m, a.degree, a.n, stream)?;
    let mut t = Table::new(&["identity", "cell", "empirical_re", "empirical_im", "exact_re", "exact_im", "stderr", "z"]);
    t.note(format!(
        "gradient density at the origin: empirical {:e}, exact {:e}, relative error {:.4}",
        r.gradient_density,
        r.gradient_density_exact,
        r.gradient_density_rel_err()
    ));
    t.note(format!("max |z| = {:.3}", r.max_z()));
    for c in &r.cells {
        t.push(vec![
            c.identity.clone(),
            c.label.clone(),
            num(c.empirical.re),
            num(c.empirical.im),
            num(c.exact.re),
            num(c.exact.im),
            num(c.stderr),
            num(c.z),
        ]);
    }
    t.write(a, a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}
