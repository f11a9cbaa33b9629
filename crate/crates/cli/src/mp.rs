use crate::args::Grid;
use crate::output::{jnum, num, write_record, Table};
use crate::svg::{Plot, Series};
use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use critpoints::mp;
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    /// `x,f_mp`
    Density,
    /// `x,cdf`
    Cdf,
    /// `s,tail_mass`: mass of `[s, 4]`
    Tail,
    /// `gamma,s_gamma` over a grid of masses
    Quantile,
    /// `x,i_mp`
    Rate,
}

#[derive(Debug, Args, Serialize)]
pub struct MpArgs {
    /// Table to emit over `--grid`.
    #[arg(long, value_enum, requires = "grid", conflicts_with_all = ["s_gamma", "rate"])]
    pub table: Option<TableKind>,
    /// Grid `start:stop:step`.
    #[arg(long)]
    pub grid: Option<Grid>,
    /// Single quantile record: the `s` with mass `gamma` on `[s, 4]`.
    #[arg(long, conflicts_with = "rate")]
    pub s_gamma: Option<f64>,
    /// Rate function table over `start:stop:step`.
    #[arg(long)]
    pub rate: Option<Grid>,
    /// Also plot the table.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn run(a: MpArgs) -> Result<ExitCode> {
    let start = Instant::now();
    if let Some(gamma) = a.s_gamma {
        let s = mp::tail_quantile(gamma)?;
        let body = json!({ "gamma": gamma, "s_gamma": s, "residual": jnum(mp::tail_mass(s) - gamma) });
        write_record(&a, body, start.elapsed().as_secs_f64(), a.out.as_deref())?;
        return Ok(ExitCode::SUCCESS);
    }
    let (kind, grid) = match (a.table, a.grid, a.rate) {
        (Some(k), Some(g), None) => (k, g),
        (None, _, Some(g)) => (TableKind::Rate, g),
        _ => bail!("give one of --table (with --grid), --s-gamma or --rate"),
    };
    type Column = Box<dyn Fn(f64) -> Result<f64>>;
    let (xname, yname, f): (&str, &str, Column) = match kind {
        TableKind::Density => ("x", "f_mp", Box::new(|x| Ok(mp::density(x)))),
        TableKind::Cdf => ("x", "cdf", Box::new(|x| Ok(mp::cdf(x)))),
        TableKind::Tail => ("s", "tail_mass", Box::new(|s| Ok(mp::tail_mass(s)))),
        TableKind::Quantile => ("gamma", "s_gamma", Box::new(|g| Ok(mp::tail_quantile(g)?))),
        TableKind::Rate => {
            if grid.start < mp::EDGE {
                bail!("the rate function is defined for x >= 4");
            }
            ("x", "i_mp", Box::new(|x| Ok(mp::rate(x))))
        }
    };
    let mut table = Table::new(&[xname, yname]);
    let mut points = Vec::new();
    for x in grid.points() {
        let y = f(x)?;
        table.push(vec![num(x), num(y)]);
        points.push((x, y));
    }
    table.write(&a, a.out.as_deref())?;
    if let Some(path) = &a.svg {
        let title = format!("Marchenko-Pastur {yname}");
        Plot { title: &title, x_label: xname, y_label: yname, series: vec![Series { label: yname, points }] }.write(path)?;
    }
    Ok(ExitCode::SUCCESS)
}
