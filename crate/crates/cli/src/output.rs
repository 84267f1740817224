//! Artifact writers. Every file starts with a `#` comment line recording the
//! full configuration, followed by a header row.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use eigenlab_core::collision::Event;
use eigenlab_core::{PathRecord, StatSummary};

use crate::CliError;

pub struct CsvArtifact {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvArtifact {
    pub fn create(
        dir: &Path,
        name: &str,
        comment: &str,
        header: &[String],
    ) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut file = BufWriter::new(File::create(&path)?);
        writeln!(file, "# {comment}")?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

pub fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = strings(&["path_id", "t"]);
    h.extend((1..=n).map(|i| format!("lambda_{i}")));
    h
}

pub fn trajectory_rows(path: &PathRecord) -> impl Iterator<Item = Vec<String>> + '_ {
    path.states.iter().map(move |s| {
        let mut r = vec![path.path_index.to_string(), s.t.to_string()];
        r.extend(s.lambda.iter().map(|v| v.to_string()));
        r
    })
}

pub fn event_header() -> Vec<String> {
    strings(&["path_id", "kind", "index", "time", "level"])
}

pub fn event_row(path_id: u64, e: &Event) -> Vec<String> {
    vec![
        path_id.to_string(),
        e.kind.name().to_string(),
        e.kind.index().to_string(),
        e.time.to_string(),
        e.level.to_string(),
    ]
}

pub fn stats_header() -> Vec<String> {
    strings(&[
        "name",
        "estimate",
        "stderr",
        "ci_low",
        "ci_high",
        "ks_d",
        "ks_p",
        "n_samples",
    ])
}

pub fn stats_row(s: &StatSummary) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        s.name.clone(),
        s.estimate.to_string(),
        s.stderr.to_string(),
        s.ci95.0.to_string(),
        s.ci95.1.to_string(),
        opt(s.ks_d),
        opt(s.ks_p),
        s.n_samples.to_string(),
    ]
}

/// Plain-text artifact with the same leading comment line.
pub fn write_text(dir: &Path, name: &str, comment: &str, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = BufWriter::new(File::create(&path)?);
    writeln!(f, "# {comment}")?;
    f.write_all(body.as_bytes())?;
    f.flush()?;
    Ok(path)
}
