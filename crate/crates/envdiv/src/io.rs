//! On-disk formats.
//!
//! * Feature samples: CSV with a header row of feature names and one numeric
//!   row per downstream level.
//! * Archives: JSON lines. The first line is an [`ArchiveHeader`], every
//!   following line one [`ArchiveRecord`], sorted by flat cell index so that
//!   identical archives serialize to identical bytes.
//! * Run metadata and fitted models: pretty-printed JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use envdiv_core::pipeline::{RunReport, Stage};
use envdiv_core::{Dimension, FeatureSamples, Genotype, GridArchive, Solution, TargetModel};
use serde::{Deserialize, Serialize};

use crate::config::Experiment;
use crate::error::{CliError, Result};

pub fn read_samples(path: &Path) -> Result<FeatureSamples> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::format(path, e))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::format(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::format(path, e))?;
        let row = record
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::format(path, format!("data row {}: {e}", line + 1)))?;
        rows.push(row);
    }
    Ok(FeatureSamples::new(names, rows)?)
}

pub fn write_samples(path: &Path, samples: &FeatureSamples) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e))?;
    let io = |e: csv::Error| CliError::format(path, e);
    w.write_record(samples.names()).map_err(io)?;
    for row in samples.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// First line of an archive file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    pub stage: Stage,
    pub iteration: u64,
    pub dimensions: Vec<Dimension>,
    /// Target region per dimension.
    pub target: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<(f64, f64)>>,
}

/// One elite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub cell: usize,
    pub features: Vec<f64>,
    pub objective: f64,
    pub birth_iter: u64,
    pub genotype: Genotype,
}

pub fn write_archive(path: &Path, header: &ArchiveHeader, archive: &GridArchive) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_archive_to(&mut w, header, archive).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_archive_to<W: Write>(w: &mut W, header: &ArchiveHeader, archive: &GridArchive) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, header)?;
    writeln!(w)?;
    // The archive iterates its sparse map in cell order already.
    for (cell, s) in archive.iter() {
        let record = ArchiveRecord {
            cell,
            features: s.features.clone(),
            objective: s.objective,
            birth_iter: s.birth_iter,
            genotype: s.genotype.clone(),
        };
        serde_json::to_writer(&mut *w, &record)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Reads an archive file back, re-inserting every record and checking that
/// each lands in the cell it was written from.
pub fn read_archive(path: &Path) -> Result<(ArchiveHeader, GridArchive)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let bad = |line: usize, msg: String| CliError::format(path, format!("line {}: {msg}", line + 1));
    let header: ArchiveHeader = match lines.next() {
        Some((i, line)) => {
            let line = line.map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&line).map_err(|e| bad(i, e.to_string()))?
        }
        None => return Err(CliError::format(path, "empty archive file")),
    };
    let mut archive = GridArchive::new(header.dimensions.clone()).map_err(|e| bad(0, e.to_string()))?;
    for (i, line) in lines {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ArchiveRecord = serde_json::from_str(&line).map_err(|e| bad(i, e.to_string()))?;
        let cell = archive
            .cell_index(&r.features)
            .map(|idx| archive.flat_index(&idx))
            .map_err(|e| bad(i, e.to_string()))?;
        if cell != r.cell {
            return Err(bad(i, format!("features map to cell {cell}, record says {}", r.cell)));
        }
        let s = Solution { genotype: r.genotype, features: r.features, objective: r.objective, birth_iter: r.birth_iter };
        archive.insert(s).map_err(|e| bad(i, e.to_string()))?;
    }
    Ok((header, archive))
}

/// Everything needed to interpret a finished run's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub experiment: Experiment,
    pub model: TargetModel,
    pub report: RunReport,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::format(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::format(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn archive_round_trip() {
        let mut archive = GridArchive::new(vec![Dimension::new("a", 0.0, 1.0, 4), Dimension::new("b", 0.0, 2.0, 3)]).unwrap();
        for (i, (a, b)) in [(0.1, 0.1), (0.9, 1.9), (0.5, 1.0)].into_iter().enumerate() {
            let genotype = if i == 1 { Genotype::Continuous(vec![0.25, 1.0]) } else { Genotype::Discrete(vec![1, -1, 0]) };
            archive
                .insert(Solution { genotype, features: vec![a, b], objective: i as f64 * 0.5, birth_iter: i as u64 })
                .unwrap();
        }
        let header = ArchiveHeader {
            stage: Stage::Two,
            iteration: 7,
            dimensions: archive.dimensions().to_vec(),
            target: archive.bounds(),
            mask: Some(vec![(0.0, 0.5), (0.0, 1.0)]),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        write_archive(&path, &header, &archive).unwrap();
        let (h, back) = read_archive(&path).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, archive);
    }

    #[test]
    fn samples_round_trip_and_reject_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let samples = FeatureSamples::new(vec!["x", "y"], vec![vec![1.0, 0.5], vec![-2.25, 3.0]]).unwrap();
        write_samples(&path, &samples).unwrap();
        assert_eq!(read_samples(&path).unwrap(), samples);

        std::fs::write(&path, "x,y\n1,2\n3,oops\n").unwrap();
        assert!(matches!(read_samples(&path), Err(CliError::Format { .. })));
        std::fs::write(&path, "x,y\n1,2\n3\n").unwrap();
        assert!(read_samples(&path).is_err());
    }
}
