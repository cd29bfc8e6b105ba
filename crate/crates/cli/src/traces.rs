//! Symbol trace CSV files.
//!
//! ```text
//! # x1_size=2
//! # y1_size=3
//! # seed=12345
//! n,x1,y1
//! 0,1,2
//! ```
//!
//! Relay-side traces use the header `n,u,v` and a single `u_size` entry.
//! Lines starting with `#` carry `key=value` metadata.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use anyhow::{anyhow, bail, Context, Result};
use relay_sentinel::SymbolTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    /// Column names after `n`, e.g. `["x1", "y1"]`.
    pub columns: [String; 2],
    pub first: SymbolTrace,
    pub second: SymbolTrace,
    pub metadata: BTreeMap<String, String>,
}

impl TraceFile {
    pub fn node(x1: SymbolTrace, y1: SymbolTrace) -> Self {
        Self {
            columns: ["x1".into(), "y1".into()],
            first: x1,
            second: y1,
            metadata: BTreeMap::new(),
        }
    }

    pub fn relay(u: SymbolTrace, v: SymbolTrace) -> Self {
        Self {
            columns: ["u".into(), "v".into()],
            first: u,
            second: v,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn meta_usize(&self, key: &str) -> Result<Option<usize>> {
        self.metadata
            .get(key)
            .map(|v| v.parse().with_context(|| format!("metadata `{key}` is not an integer: {v}")))
            .transpose()
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["n", &self.columns[0], &self.columns[1]])?;
        for (n, (a, b)) in self.first.iter().zip(self.second.iter()).enumerate() {
            csv.write_record([n.to_string(), a.to_string(), b.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(r).read_to_string(&mut text)?;
        let mut metadata = BTreeMap::new();
        for line in text.as_bytes().lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
        }
        let mut csv = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = csv.headers().context("trace has no header")?.clone();
        let names: Vec<&str> = header.iter().collect();
        let columns = match names.as_slice() {
            ["n", "x1", "y1"] => ["x1".to_string(), "y1".to_string()],
            ["n", "u", "v"] => ["u".to_string(), "v".to_string()],
            _ => bail!("trace header must be `n,x1,y1` or `n,u,v`, got `{}`", names.join(",")),
        };
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for (row, rec) in csv.records().enumerate() {
            let rec = rec.with_context(|| format!("trace row {row}"))?;
            let field = |i: usize| -> Result<usize> {
                let s = rec.get(i).ok_or_else(|| anyhow!("trace row {row} is short"))?;
                s.parse().with_context(|| format!("trace row {row}: `{s}` is not a symbol index"))
            };
            if field(0)? != row {
                bail!("trace row {row}: n must count up from 0");
            }
            first.push(field(1)?);
            second.push(field(2)?);
        }
        if first.is_empty() {
            bail!("trace is empty");
        }
        Ok(Self {
            columns,
            first: first.into(),
            second: second.into(),
            metadata,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = TraceFile::node(vec![0, 1, 1].into(), vec![2, 0, 1].into())
            .with_meta("x1_size", 2)
            .with_meta("y1_size", 3);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# x1_size=2\n# y1_size=3\nn,x1,y1\n0,0,2\n"));
        assert_eq!(TraceFile::read(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_traces() {
        assert!(TraceFile::read("n,x1,y1\n".as_bytes()).is_err());
        assert!(TraceFile::read("n,a,b\n0,0,0\n".as_bytes()).is_err());
        assert!(TraceFile::read("n,u,v\n1,0,0\n".as_bytes()).is_err());
        assert!(TraceFile::read("n,u,v\n0,0,-1\n".as_bytes()).is_err());
    }
}
