use crate::output::{open, version};
use anyhow::{bail, Result};
use clap::Args;
use critpoints::verify::{Check, DEFAULT_SEED};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only these checks (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Write machine-readable results here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// List the checks and exit.
    #[arg(long)]
    pub list: bool,
}

pub fn run(a: VerifyArgs) -> Result<ExitCode> {
    if a.list {
        for c in Check::ALL {
            println!("{:<18} {}", c.name(), c.description());
        }
        return Ok(ExitCode::SUCCESS);
    }
    let checks: Vec<Check> = if a.only.is_empty() {
        Check::ALL.to_vec()
    } else {
        a.only
            .iter()
            .map(|n| Check::from_name(n).ok_or_else(|| anyhow::anyhow!("unknown check {n:?} (see --list)")))
            .collect::<Result<_>>()?
    };
    if checks.is_empty() {
        bail!("no checks selected");
    }
    let mut results = Vec::new();
    for c in checks {
        let r = c.run(a.seed)?;
        println!("{}", r.summary_line());
        for m in r.measurements.iter().filter(|m| !m.rule.is_empty()) {
            println!("    {} {:<44} {:>13.6e}  {}", if m.pass { "ok  " } else { "FAIL" }, m.label, m.value, m.rule);
        }
        results.push(r);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if let Some(path) = &a.json {
        let mut out = open(Some(path))?;
        let doc = json!({ "version": version(), "seed": a.seed, "pass": failed.is_empty(), "results": results });
        serde_json::to_writer_pretty(&mut out, &doc)?;
        writeln!(out)?;
        out.flush()?;
    }
    if failed.is_empty() {
        println!("all {} checks passed", results.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed: {}", failed.join(", "));
        Ok(ExitCode::FAILURE)
    }
}
