use crate::output::{jnum, num, write_record, Table};
use crate::svg::{Plot, Series};
use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use critpoints::wishart::{self, Sampler};
use critpoints::{mp, stats, RngStream};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerArg {
    Dense,
    Tridiagonal,
}

impl From<SamplerArg> for Sampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Dense => Sampler::Dense,
            SamplerArg::Tridiagonal => Sampler::Tridiagonal,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct WishartArgs {
    /// Matrix dimension.
    #[arg(long)]
    pub m: usize,
    /// Number of spectra.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = SamplerArg::Dense)]
    pub sampler: SamplerArg,
    /// Estimate `P(lambda_k >= x)` with this `k` (needs `--x`).
    #[arg(long, requires = "x")]
    pub tail_k: Option<usize>,
    #[arg(long)]
    pub x: Option<f64>,
    /// Write every eigenvalue as CSV `sample,k,eigenvalue`.
    #[arg(long)]
    pub spectra: Option<PathBuf>,
    /// Plot the pooled spectral histogram against the limiting density.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Summary output file (default stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn run(mut a: WishartArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let seed = crate::resolve_seed(a.seed, critpoints::verify::DEFAULT_SEED)?;
    a.seed = Some(seed);
    if a.samples == 0 {
        bail!("--samples must be positive");
    }
    let spectra = wishart::sample_many(a.sampler.into(), a.m, a.samples, RngStream::new(seed))?;
    let col = |f: &dyn Fn(&wishart::Spectrum) -> f64| stats::mean_stderr(&spectra.iter().map(f).collect::<Vec<_>>());
    let (trace, trace_se) = col(&|s| s.trace() / a.m as f64);
    let (top, top_se) = col(&|s| s.largest());
    let (bottom, bottom_se) = col(&|s| s.smallest());
    let mut body = json!({
        "m": a.m,
        "samples": a.samples,
        "seed": seed,
        "mean_trace_over_m": { "mean": trace, "stderr": jnum(trace_se), "exact": (a.m as f64 + 1.0) / a.m as f64 },
        "largest": { "mean": top, "stderr": jnum(top_se) },
        "smallest": { "mean": bottom, "stderr": jnum(bottom_se) },
        "ks_distance_to_mp": wishart::ks_distance_to_mp(&spectra)?,
    });
    if let (Some(k), Some(x)) = (a.tail_k, a.x) {
        if k == 0 || k > a.m {
            bail!("--tail-k must be in 1..={}", a.m);
        }
        let hits = spectra.iter().filter(|s| s.kth(k) >= x).count();
        let (p, se) = stats::binomial(hits, a.samples, None);
        body["tail"] = json!({ "k": k, "x": x, "probability": p, "stderr": jnum(se), "hits": hits });
    }
    write_record(&a, body, start.elapsed().as_secs_f64(), a.out.as_deref())?;

    if let Some(path) = &a.spectra {
        let mut t = Table::new(&["sample", "k", "eigenvalue"]);
        for (i, s) in spectra.iter().enumerate() {
            for (k, v) in s.eigenvalues().iter().enumerate() {
                t.push(vec![i.to_string(), (k + 1).to_string(), num(*v)]);
            }
        }
        t.write(&a, Some(path))?;
    }
    if let Some(path) = &a.svg {
        let bins = 60;
        let hi = spectra.iter().map(|s| s.largest()).fold(mp::EDGE, f64::max);
        let width = hi / bins as f64;
        let mut counts = vec![0usize; bins];
        let mut total = 0usize;
        for v in spectra.iter().flat_map(|s| s.eigenvalues().iter()) {
            counts[((v / width) as usize).min(bins - 1)] += 1;
            total += 1;
        }
        let hist: Vec<(f64, f64)> = counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| {
                let h = c as f64 / (total as f64 * width);
                [(i as f64 * width, h), ((i + 1) as f64 * width, h)]
            })
            .collect();
        let density: Vec<(f64, f64)> =
            (1..=400).map(|i| i as f64 * hi / 400.0).map(|x| (x, mp::density(x))).filter(|p| p.1 < 2.0).collect();
        let title = format!("Wishart spectrum, m = {}", a.m);
        Plot {
            title: &title,
            x_label: "eigenvalue",
            y_label: "density",
            series: vec![Series { label: "empirical", points: hist }, Series { label: "Marchenko-Pastur", points: density }],
        }
        .write(path)?;
    }
    Ok(ExitCode::SUCCESS)
}
