use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use shlab_core::verify::{write_jsonl, TestReport};
use shlab_core::{BinarySeq, MultiClassSeq, HOLE};

/// Files written by one invocation, recorded in `manifest.json`.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
    /// Configuration file that replaced the command-line flags.
    pub config: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<String>,
    version: &'a str,
    files: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    reports: Option<ReportSummary<'a>>,
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    file: &'a str,
    total: usize,
    failed: Vec<&'a str>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            config: None,
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = self.create(name)?;
        write(&mut w)
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        use std::io::Write;
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn reports(&mut self, name: &str, reports: &[TestReport]) -> Result<()> {
        let w = self.create(name)?;
        Ok(write_jsonl(reports, w)?)
    }

    pub fn manifest(&mut self, command: &str, reports: Option<(&str, &[TestReport])>) -> Result<()> {
        let files = self.files.clone();
        let m = Manifest {
            command,
            config: self.config.as_ref().map(|p| p.display().to_string()),
            version: env!("CARGO_PKG_VERSION"),
            files: &files,
            reports: reports.map(|(file, r)| ReportSummary {
                file,
                total: r.len(),
                failed: r.iter().filter(|x| !x.passed).map(|x| x.name.as_str()).collect(),
            }),
        };
        let text = serde_json::to_string_pretty(&m)?;
        self.text("manifest.json", &text)
    }
}

/// `site,x_1,...,x_k` with 0/1 entries.
pub fn write_streams<W: std::io::Write>(xs: &[BinarySeq], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["site".to_string()];
    header.extend((1..=xs.len()).map(|k| format!("x_{k}")));
    out.write_record(&header)?;
    if let Some(first) = xs.first() {
        for (k, i) in (first.lo()..=first.hi()).enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(xs.iter().map(|x| u8::from(x.bits()[k]).to_string()));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `site,label`, holes as an empty label.
pub fn write_labels<W: std::io::Write>(v: &MultiClassSeq, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["site", "label"])?;
    for (i, &l) in (v.lo()..=v.hi()).zip(v.labels()) {
        let label = if l == HOLE { String::new() } else { l.to_string() };
        out.write_record([i.to_string(), label])?;
    }
    out.flush()?;
    Ok(())
}
