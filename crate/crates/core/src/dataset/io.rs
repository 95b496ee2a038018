//! Record-stream files: a header line declaring the pool and embedding
//! dimension, then one JSON record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, QueryRecord};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model_pool: Vec<String>,
    dim: usize,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(BufReader::new(file))
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    write_dataset(d, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn read_dataset(reader: impl BufRead) -> Result<Dataset> {
    let mut header: Option<Header> = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |e: serde_json::Error| Error::Malformed {
            line: line_no,
            message: e.to_string(),
        };
        if header.is_none() {
            header = Some(serde_json::from_str(&line).map_err(malformed)?);
        } else {
            records.push(serde_json::from_str::<QueryRecord>(&line).map_err(malformed)?);
        }
    }
    let header = header.ok_or(Error::Malformed {
        line: 1,
        message: "missing header line".into(),
    })?;
    Dataset::new(header.model_pool, header.dim, records)
}

pub fn write_dataset(d: &Dataset, mut w: impl Write) -> std::io::Result<()> {
    let header = Header {
        model_pool: d.model_pool.clone(),
        dim: d.dim,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for rec in &d.records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}


#[cfg(test)]
mod properties {
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::tests::arb_dataset;

    proptest! {
        #[test]
        fn write_then_read_is_identity(d in arb_dataset(2..=5, 1..=20)) {
            let mut bytes = Vec::new();
            write_dataset(&d, &mut bytes).unwrap();
            let back = read_dataset(bytes.as_slice()).unwrap();
            prop_assert_eq!(&back, &d);
            let mut again = Vec::new();
            write_dataset(&back, &mut again).unwrap();
            prop_assert_eq!(again, bytes);
        }
    }
}
