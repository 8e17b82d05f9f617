//! CSV step logs, one file per run.
//!
//! Columns, in order: `t, setId, action, reward, gender, cluster, session,
//! isOptimalAction, isOptimalSet`. Unknown optional values are empty.
//! Rewards are written in shortest round-trip form, so reading a log back
//! reproduces every value exactly.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::StepRecord;

pub struct RunLogWriter {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl RunLogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            super::io::create_dir_all(parent)?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(RunLogWriter {
            path: path.to_path_buf(),
            inner: csv::Writer::from_writer(BufWriter::new(file)),
        })
    }

    pub fn append(&mut self, record: &StepRecord) -> Result<()> {
        self.inner.serialize(record)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_log(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = RunLogWriter::create(path)?;
    for r in records {
        w.append(r)?;
    }
    w.finish()
}

pub fn read_log(path: &Path) -> Result<Vec<StepRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(std::io::BufReader::new(file));
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let rec: StepRecord = row?;
        if !(-0.06..=1.0).contains(&rec.reward) {
            return Err(Error::Aggregation(format!(
                "{}: step {} reward {} outside [-0.06, 1]",
                path.display(),
                rec.t,
                rec.reward
            )));
        }
        out.push(rec);
    }
    Ok(out)
}
