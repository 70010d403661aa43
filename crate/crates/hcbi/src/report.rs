//! What an experiment produces: pass/fail checks, tables and plots, and
//! how they are written out.

use std::fmt::Write as _;

use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{OutputDir, Table};

/// One pass/fail criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// A gnuplot panel: columns of one CSV file plotted against its first column.
#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub title: String,
    pub file: String,
    pub xlabel: String,
    /// 1-based column numbers, labelled by the CSV header.
    pub columns: Vec<(usize, String)>,
    pub logscale_y: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
    pub tables: Vec<(String, Table)>,
    /// Files already rendered as text (event and population logs).
    pub files: Vec<(String, String)>,
    pub plots: Vec<Plot>,
    /// Free-form lines for the summary.
    pub notes: Vec<String>,
}

impl Report {
    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, pass, detail));
    }

    pub fn table(&mut self, file: impl Into<String>, table: Table) {
        self.tables.push((file.into(), table));
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    /// Plots every column after the first of a table already added.
    pub fn plot_all(&mut self, title: &str, file: &str, logscale_y: bool) {
        let Some((_, t)) = self.tables.iter().find(|(f, _)| f == file) else {
            return;
        };
        let columns = t
            .headers
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, h)| (k + 1, h.clone()))
            .collect();
        self.plots.push(Plot {
            title: title.into(),
            file: file.into(),
            xlabel: t.headers[0].clone(),
            columns,
            logscale_y,
        });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self, cfg: &ExperimentConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {} ({})", cfg.display_name(), cfg.experiment);
        if let Some(d) = &cfg.description {
            let _ = writeln!(s, "description: {d}");
        }
        if let Some(seed) = cfg.numerics.seed {
            let _ = writeln!(s, "master seed: {seed}");
        }
        if let Some(p) = cfg.numerics.paths {
            let _ = writeln!(s, "paths: {p}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "{n}");
        }
        let _ = writeln!(s);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "[{}] {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(
            s,
            "\n{}: {passed}/{} checks passed",
            if self.pass() { "PASS" } else { "FAIL" },
            self.checks.len()
        );
        s
    }

    pub fn plot_script(&self) -> String {
        let mut s =
            String::from("# gnuplot script; run from this directory with `gnuplot plot.gp`\n");
        s.push_str("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n");
        for (k, p) in self.plots.iter().enumerate() {
            let _ = writeln!(s, "\nset output 'plot_{k}.png'");
            let _ = writeln!(s, "set title '{}'", p.title.replace('\'', ""));
            let _ = writeln!(s, "set xlabel '{}'", p.xlabel);
            let _ = writeln!(
                s,
                "{}",
                if p.logscale_y {
                    "set logscale y"
                } else {
                    "unset logscale y"
                }
            );
            let series: Vec<String> = p
                .columns
                .iter()
                .map(|(c, _)| format!("'{}' using 1:{c} with linespoints", p.file))
                .collect();
            let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
        }
        s
    }

    /// Writes CSVs, the text summary, the plot script and the manifest.
    pub fn write(&self, cfg: &ExperimentConfig, out: &OutputDir) -> Result<()> {
        for (name, t) in &self.tables {
            out.write_table(name, t)?;
        }
        for (name, text) in &self.files {
            out.write_text(name, text)?;
        }
        out.write_text("summary.txt", &self.summary(cfg))?;
        out.write_text("plot.gp", &self.plot_script())?;
        out.write_text("manifest.json", &self.manifest(cfg))?;
        Ok(())
    }

    /// Everything needed to regenerate the CSVs: the resolved config, the
    /// seed derivation and the versions. No timestamps, so a rerun writes
    /// the same bytes.
    pub fn manifest(&self, cfg: &ExperimentConfig) -> String {
        let config: serde_json::Value = serde_json::from_str(&cfg.echo()).expect("echo is JSON");
        let mut files: Vec<&str> = self.tables.iter().map(|(f, _)| f.as_str()).collect();
        files.extend(self.files.iter().map(|(f, _)| f.as_str()));
        let m = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "library": "hawkes-cbi",
            "library_version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "seeding": crate::experiments::SEED_RULE,
            "files": files,
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
            "pass": self.pass(),
        });
        let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
        s.push('\n');
        s
    }
}
