//! Plot-ready CSV artifacts. Every file has a header row; floats use
//! [`fmt_float`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::asymptotic::AsymptoticRow;
use super::fmt_float;
use super::study::StudyOutput;

struct CsvOut<W: Write> {
    writer: csv::Writer<W>,
    path: String,
}

impl<W: Write> CsvOut<W> {
    fn new(out: W, path: &str) -> Self {
        Self {
            writer: csv::Writer::from_writer(out),
            path: path.to_string(),
        }
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| Error::Io {
            path: self.path.clone(),
            message: e.to_string(),
        })
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::Io {
            path: self.path,
            message: e.to_string(),
        })
    }
}

/// `replication,alpha,curve,gamma,truth,heuristic,oracle,h_select,k_select,h_oracle,k_oracle`
pub fn write_replications<W: Write>(study: &StudyOutput, out: W) -> Result<()> {
    let mut w = CsvOut::new(out, "replications.csv");
    w.row([
        "replication",
        "alpha",
        "curve",
        "gamma",
        "truth",
        "heuristic",
        "oracle",
        "h_select",
        "k_select",
        "h_oracle",
        "k_oracle",
    ])?;
    for rep in &study.reports {
        for (ai, est) in rep.per_alpha.iter().enumerate() {
            for (i, curve) in study.curves.iter().enumerate() {
                w.row([
                    rep.index.to_string(),
                    fmt_float(est.alpha),
                    curve.label().to_string(),
                    fmt_float(study.gammas[i]),
                    fmt_float(study.truth[ai][i]),
                    fmt_float(est.heuristic[i]),
                    fmt_float(est.oracle[i]),
                    fmt_float(rep.heuristic.h),
                    rep.heuristic.k.to_string(),
                    fmt_float(rep.oracle.h),
                    rep.oracle.k.to_string(),
                ])?;
            }
        }
    }
    w.finish()
}

/// `curve,gamma,alpha,ci_low,ci_high`, curves ascending in γ.
pub fn write_summary_ci<W: Write>(study: &StudyOutput, out: W) -> Result<()> {
    let mut w = CsvOut::new(out, "summary_ci.csv");
    w.row(["curve", "gamma", "alpha", "ci_low", "ci_high"])?;
    for s in &study.summary.per_alpha {
        for iv in &s.intervals {
            w.row([
                iv.id.clone(),
                fmt_float(iv.gamma),
                fmt_float(s.alpha),
                fmt_float(iv.low),
                fmt_float(iv.high),
            ])?;
        }
    }
    w.finish()
}

/// `alpha,mode,bin_low,bin_high,count`
pub fn write_errors_hist<W: Write>(study: &StudyOutput, out: W) -> Result<()> {
    let mut w = CsvOut::new(out, "errors_hist.csv");
    w.row(["alpha", "mode", "bin_low", "bin_high", "count"])?;
    for s in &study.summary.per_alpha {
        for row in &s.histogram {
            w.row([
                fmt_float(s.alpha),
                row.mode.to_string(),
                fmt_float(row.low),
                fmt_float(row.high),
                row.count.to_string(),
            ])?;
        }
    }
    w.finish()
}

/// `alpha,replication,curve,energy,truth,heuristic,oracle`
pub fn write_median_replication<W: Write>(study: &StudyOutput, out: W) -> Result<()> {
    let mut w = CsvOut::new(out, "median_replication.csv");
    w.row([
        "alpha",
        "replication",
        "curve",
        "energy",
        "truth",
        "heuristic",
        "oracle",
    ])?;
    for (ai, s) in study.summary.per_alpha.iter().enumerate() {
        let Some(pos) = s.median_report else { continue };
        let rep = &study.reports[pos];
        for (i, curve) in study.curves.iter().enumerate() {
            w.row([
                fmt_float(s.alpha),
                rep.index.to_string(),
                curve.label().to_string(),
                fmt_float(study.energies[i]),
                fmt_float(study.truth[ai][i]),
                fmt_float(rep.per_alpha[ai].heuristic[i]),
                fmt_float(rep.per_alpha[ai].oracle[i]),
            ])?;
        }
    }
    w.finish()
}

/// `claim,m,statistic,target,tolerance,pass`
pub fn write_asymptotics<W: Write>(rows: &[AsymptoticRow], out: W) -> Result<()> {
    let mut w = CsvOut::new(out, "asymptotics.csv");
    w.row(["claim", "m", "statistic", "target", "tolerance", "pass"])?;
    for r in rows {
        w.row([
            r.claim.clone(),
            r.m.to_string(),
            fmt_float(r.statistic),
            fmt_float(r.target),
            fmt_float(r.tolerance),
            r.pass.to_string(),
        ])?;
    }
    w.finish()
}

/// `check,alpha,statistic,threshold,pass`; `alpha` is empty for study-wide checks.
pub fn write_study_checks<W: Write>(study: &StudyOutput, out: W) -> Result<()> {
    let mut w = CsvOut::new(out, "study_checks.csv");
    w.row(["check", "alpha", "statistic", "threshold", "pass"])?;
    for c in study.checks() {
        w.row([
            c.check.to_string(),
            c.alpha.map(fmt_float).unwrap_or_default(),
            fmt_float(c.statistic),
            fmt_float(c.threshold),
            c.pass.to_string(),
        ])?;
    }
    w.finish()
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf)> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok((BufWriter::new(file), path))
}

/// Writes the five study CSVs into `dir` and returns their paths.
pub fn write_study_csvs(study: &StudyOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    type Writer = fn(&StudyOutput, BufWriter<File>) -> Result<()>;
    let files: [(&str, Writer); 5] = [
        ("replications.csv", write_replications),
        ("summary_ci.csv", write_summary_ci),
        ("errors_hist.csv", write_errors_hist),
        ("median_replication.csv", write_median_replication),
        ("study_checks.csv", write_study_checks),
    ];
    let mut paths = Vec::new();
    for (name, write) in files {
        let (w, path) = create(dir, name)?;
        write(study, w)?;
        paths.push(path);
    }
    Ok(paths)
}
