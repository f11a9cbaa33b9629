use crate::args::{window_label, WindowArg};
use crate::output::{jnum, num, write_record, Table};
use crate::svg::{Plot, Series};
use crate::wishart::SamplerArg;
use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use critpoints::critstats::{self, RateTarget, Side, Window};
use critpoints::{CountEstimate, RngStream};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    /// All indices on `[x, inf)`.
    Total,
    /// Index `m`, all critical values.
    IndexM,
    /// Index `2m - k` for fixed `k` on one side of `x`.
    FixedK,
    /// Index `2m - round(gamma m)`, all critical values.
    LinearGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Above,
    Below,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// Dimension; a comma-separated ascending list with `--rate-curve`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    /// Line bundle degree.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub degree: u32,
    /// Count index `2m - k` only; all indices when absent.
    #[arg(long)]
    pub k: Option<usize>,
    /// Window `lo:hi` on the normalized critical value; `inf` allowed.
    #[arg(long, default_value = "0:inf")]
    pub window: WindowArg,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = SamplerArg::Dense)]
    pub sampler: SamplerArg,
    /// Total count with the conditional estimator (for deep tails).
    #[arg(long, conflicts_with = "k")]
    pub conditional: bool,
    /// Emit a growth-rate curve over the `--m` list instead.
    #[arg(long, value_enum)]
    pub rate_curve: Option<CurveKind>,
    /// Threshold for `total` and `fixed-k` curves.
    #[arg(long, default_value_t = 0.0)]
    pub x: f64,
    #[arg(long, value_enum, default_value_t = SideArg::Above)]
    pub side: SideArg,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Plot a rate curve.
    #[arg(long, requires = "rate_curve")]
    pub svg: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Exact expectation when one is known: index `m` on any window.
fn oracle(m: usize, k: Option<usize>, degree: u32, w: &Window) -> Result<Option<f64>> {
    if k != Some(m) {
        return Ok(None);
    }
    let upper = if w.upper.is_finite() { critstats::expected_index_m_tail(m, degree, w.upper)? } else { 0.0 };
    Ok(Some(critstats::expected_index_m_tail(m, degree, w.lower)? - upper))
}

fn estimate_json(e: &CountEstimate) -> Value {
    json!({
        "mean": jnum(e.mean),
        "stderr": jnum(e.stderr),
        "log_mean": jnum(e.log_mean),
        "log_stderr": jnum(e.log_stderr),
        "n": e.n,
        "zero_hits": e.zero_hits,
        "overflow": e.overflow,
    })
}

pub fn run(mut a: EstimateArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let seed = crate::resolve_seed(a.seed, critpoints::verify::DEFAULT_SEED)?;
    a.seed = Some(seed);
    if a.rate_curve.is_some() {
        return rate_curve(a, seed);
    }
    let [m] = a.m[..] else { bail!("give a single --m (lists are for --rate-curve)") };
    let w = a.window.0;
    let stream = RngStream::new(seed);
    let (kind, e) = match a.k {
        Some(k) => ("index", critstats::mc_expected_count_index_with(m, k, a.degree, w, a.n, stream, a.sampler.into())?),
        None if a.conditional => ("total-conditional", critstats::mc_expected_count_total_conditional(m, a.degree, w, a.n, stream)?),
        None => ("total", critstats::mc_expected_count_total_with(m, a.degree, w, a.n, stream, a.sampler.into())?),
    };
    let oracle = oracle(m, a.k, a.degree, &w)?;
    let mut body = json!({
        "estimator": kind,
        "m": m,
        "N": a.degree,
        "index": a.k.map(|k| 2 * m - k),
        "window": window_label(&w),
        "seed": seed,
    });
    body.as_object_mut().unwrap().extend(estimate_json(&e).as_object().unwrap().clone());
    body["oracle"] = oracle.map(jnum).unwrap_or(Value::Null);
    body["z"] = oracle.map(|o| jnum(e.z_score(o))).unwrap_or(Value::Null);
    if e.zero_hits {
        body["note"] = json!("no draw hit the window; the true mean is only bounded above, by roughly 3/n times the prefactor");
    }
    write_record(&a, body, start.elapsed().as_secs_f64(), a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn rate_curve(a: EstimateArgs, seed: u64) -> Result<ExitCode> {
    let target = match a.rate_curve.unwrap() {
        CurveKind::Total => RateTarget::Total,
        CurveKind::IndexM => RateTarget::IndexM,
        CurveKind::FixedK => {
            let Some(k) = a.k else { bail!("fixed-k curves need --k") };
            let side = match a.side {
                SideArg::Above => Side::Above,
                SideArg::Below => Side::Below,
            };
            RateTarget::FixedK { k, side }
        }
        CurveKind::LinearGamma => RateTarget::LinearGamma { gamma: a.gamma },
    };
    let pts = critstats::empirical_rate_curve(a.degree, target, a.x, &a.m, a.n, RngStream::new(seed))?;
    let mut t = Table::new(&["m", "empirical_rate", "analytic_rate"]);
    let zero: Vec<String> = pts.iter().filter(|p| p.zero_hits).filter_map(|p| p.m.map(|m| m.to_string())).collect();
    if !zero.is_empty() {
        t.note(format!("no hits at m = {}: the empirical rate there is only a bound", zero.join(",")));
    }
    for p in &pts {
        t.push(vec![p.m.unwrap_or(0).to_string(), num(p.empirical_rate.unwrap_or(f64::NAN)), num(p.analytic_rate)]);
    }
    t.write(&a, a.out.as_deref())?;
    if let Some(path) = &a.svg {
        let emp = pts.iter().map(|p| (p.m.unwrap_or(0) as f64, p.empirical_rate.unwrap_or(f64::NAN))).collect();
        let ana = pts.iter().map(|p| (p.m.unwrap_or(0) as f64, p.analytic_rate)).collect();
        let title = format!("Growth rate, N = {}", a.degree);
        Plot {
            title: &title,
            x_label: "m",
            y_label: "(1/m) log E[count]",
            series: vec![Series { label: "empirical", points: emp }, Series { label: "limit", points: ana }],
        }
        .write(path)?;
    }
    Ok(ExitCode::SUCCESS)
}
