//! Line-delimited JSON files. Blank lines and lines starting with `#` are
//! comments; writers put a provenance header on the first line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub struct JsonlReader<T> {
    path: String,
    reader: Box<dyn BufRead + Send>,
    line_no: usize,
    buf: String,
    _t: PhantomData<fn() -> T>,
}

impl<T: DeserializeOwned> JsonlReader<T> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(Self::from_reader(
            path.display().to_string(),
            BufReader::new(file),
        ))
    }

    pub fn from_reader(name: impl Into<String>, reader: impl BufRead + Send + 'static) -> Self {
        JsonlReader {
            path: name.into(),
            reader: Box::new(reader),
            line_no: 0,
            buf: String::new(),
            _t: PhantomData,
        }
    }
}

impl<T: DeserializeOwned> Iterator for JsonlReader<T> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io(self.path.clone(), e))),
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            return Some(serde_json::from_str(line).map_err(|e| Error::Format {
                path: self.path.clone(),
                line: self.line_no,
                reason: e.to_string(),
            }));
        }
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    JsonlReader::open(path)?.collect()
}

pub struct JsonlWriter {
    path: String,
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = JsonlWriter {
            path: path.display().to_string(),
            out: BufWriter::new(file),
        };
        w.raw_line(header)?;
        Ok(w)
    }

    fn raw_line(&mut self, line: &str) -> Result<()> {
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| Error::io(self.path.clone(), e))
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let line = serde_json::to_string(record).map_err(|e| Error::Internal(e.to_string()))?;
        self.raw_line(&line)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out
            .flush()
            .map_err(|e| Error::io(self.path.clone(), e))
    }
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    header: &str,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let mut w = JsonlWriter::create(path, header)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

/// Writes a plain-text report preceded by the header line.
pub fn write_text(path: &Path, header: &str, body: &str) -> Result<()> {
    let text = format!("{header}\n{body}");
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_reports_line_numbers() {
        let text = "# header\n{\"a\":1}\n\n{\"a\":\n";
        let mut r: JsonlReader<serde_json::Value> =
            JsonlReader::from_reader("mem", std::io::Cursor::new(text.as_bytes().to_vec()));
        assert_eq!(r.next().unwrap().unwrap()["a"], 1);
        match r.next().unwrap() {
            Err(Error::Format { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(r.next().is_none());
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        write_jsonl(&path, "# h", &[vec![1, 2], vec![3]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# h\n[1,2]\n[3]\n");
        let back: Vec<Vec<i32>> = read_jsonl(&path).unwrap();
        assert_eq!(back, vec![vec![1, 2], vec![3]]);
    }
}
