//! CSV tables, atomic file writes, and `.meta` sidecars.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("table has an empty header")]
    EmptyHeader,
    #[error("row {row} has {got} fields, header has {expected}")]
    RowWidth { row: usize, expected: usize, got: usize },
}

/// One CSV field. Floats use the shortest representation that parses back
/// to the same value; `Missing` is an empty field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Text(String),
    Missing,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(v) => write!(f, "{v:?}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Missing => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    /// CSV bytes: header first, LF terminated, quoting only where needed.
    pub fn to_csv_bytes(&self) -> Result<Vec<u8>, OutputError> {
        let mut buf = Vec::new();
        emit_csv(&mut buf, &self.header, self.rows.iter().cloned(), Path::new("<memory>"))?;
        Ok(buf)
    }
}

fn emit_csv<W, I>(sink: W, header: &[String], rows: I, path: &Path) -> Result<(), OutputError>
where
    W: Write,
    I: IntoIterator<Item = Vec<Cell>>,
{
    if header.is_empty() {
        return Err(OutputError::EmptyHeader);
    }
    let csv_err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(header).map_err(csv_err)?;
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != header.len() {
            return Err(OutputError::RowWidth {
                row: i,
                expected: header.len(),
                got: row.len(),
            });
        }
        w.write_record(row.iter().map(|c| c.to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn temp_beside(path: &Path) -> Result<tempfile::NamedTempFile, OutputError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut b = tempfile::Builder::new();
    b.prefix(".lambda-soliton-");
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        b.permissions(std::fs::Permissions::from_mode(0o644));
    }
    b.tempfile_in(dir).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn commit(tmp: tempfile::NamedTempFile, path: &Path) -> Result<(), OutputError> {
    let io_err = |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    };
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Stream rows into `path` without holding the table in memory. The file
/// appears only once every row is written.
pub fn write_csv_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), OutputError>
where
    I: IntoIterator<Item = Vec<Cell>>,
{
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    let mut tmp = temp_beside(path)?;
    emit_csv(std::io::BufWriter::new(&mut tmp), &header, rows, path)?;
    commit(tmp, path)
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let mut tmp = temp_beside(path)?;
    tmp.write_all(bytes).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    commit(tmp, path)
}

pub fn write_csv(table: &Table, path: &Path) -> Result<(), OutputError> {
    write_atomic(path, &table.to_csv_bytes()?)
}

/// Hex SHA-256 of the JSON form of `config`.
pub fn config_digest<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("configuration serialises");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_digest: String,
    pub created_unix: u64,
    pub config: &'a T,
}

impl<'a, T: Serialize> Meta<'a, T> {
    pub fn new(command: &'a str, config: &'a T) -> Self {
        Self {
            tool: "lambda-soliton",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_digest: config_digest(config),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config,
        }
    }
}

/// `trajectory.csv` gets `trajectory.csv.meta` next to it.
pub fn meta_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_meta<T: Serialize>(output: &Path, meta: &Meta<'_, T>) -> Result<(), OutputError> {
    let mut json = serde_json::to_vec_pretty(meta).expect("metadata serialises");
    json.push(b'\n');
    write_atomic(&meta_path(output), &json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_bytes_for_one_row() {
        let mut t = Table::new(&["lambda", "velocity"]);
        t.push(vec![1.0.into(), 0.5.into()]);
        assert_eq!(t.to_csv_bytes().unwrap(), b"lambda,velocity\n1.0,0.5\n");
    }

    #[test]
    fn header_only() {
        let t = Table::new(&["step", "x"]);
        assert_eq!(t.to_csv_bytes().unwrap(), b"step,x\n");
    }

    #[test]
    fn missing_is_empty_field() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![Cell::from(None::<f64>), 3usize.into(), "collision".into()]);
        assert_eq!(t.to_csv_bytes().unwrap(), b"a,b,c\n,3,collision\n");
    }

    #[test]
    fn small_and_negative_floats() {
        let mut t = Table::new(&["v"]);
        for v in [1e-5, -0.0, 123456789.125, 1e300] {
            t.push(vec![v.into()]);
        }
        let s = String::from_utf8(t.to_csv_bytes().unwrap()).unwrap();
        assert_eq!(s, "v\n1e-5\n-0.0\n123456789.125\n1e300\n");
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(Table::new(&[]).to_csv_bytes(), Err(OutputError::EmptyHeader)));
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0.into()]);
        assert!(matches!(t.to_csv_bytes(), Err(OutputError::RowWidth { row: 0, .. })));
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = config_digest(&(1.0, "x"));
        assert_eq!(a, config_digest(&(1.0, "x")));
        assert_ne!(a, config_digest(&(1.5, "x")));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_directory_names_the_path() {
        let err = write_atomic(Path::new("/nonexistent-dir-xyz/out.csv"), b"x").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir-xyz/out.csv"));
    }

    #[test]
    fn streamed_rows_match_table_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut t = Table::new(&["step", "x"]);
        for k in 0..5usize {
            t.push(vec![k.into(), (k as f64 * 0.1).into()]);
        }
        write_csv_rows(&p, &["step", "x"], t.rows.clone()).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), t.to_csv_bytes().unwrap());
    }

    #[test]
    fn meta_sidecar_name() {
        assert_eq!(meta_path(Path::new("a/velocity.csv")), PathBuf::from("a/velocity.csv.meta"));
    }
}
