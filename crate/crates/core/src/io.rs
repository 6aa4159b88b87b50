//! CSV emission with `# key=value` provenance headers.

use std::io::Write;

use crate::error::Result;

/// Ordered key/value pairs written as comment lines above a CSV body.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn extend(&mut self, other: &Provenance) {
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }
}

/// Writes a header row and numeric rows. Floats use Rust's shortest
/// round-trip formatting so identical data gives identical bytes.
pub fn write_table<W: Write>(
    w: &mut W,
    provenance: &Provenance,
    columns: &[String],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    provenance.write(w)?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let mut line = String::new();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Splits CSV text into provenance entries, column names and rows.
pub fn read_table(text: &str) -> Result<(Provenance, Vec<String>, Vec<Vec<f64>>)> {
    use crate::error::Error;
    let mut prov = Provenance::new();
    let mut columns = None;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                prov.push(k, v);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if columns.is_none() {
            columns = Some(line.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::Parse {
            line: lineno + 1,
            reason: e.to_string(),
        })?);
    }
    Ok((prov, columns.unwrap_or_default(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let prov = Provenance::new().with("seed", 7).with("method", "toeplitz");
        let mut buf = Vec::new();
        write_table(
            &mut buf,
            &prov,
            &["t".into(), "v".into()],
            vec![vec![0.0, 0.1], vec![0.005, -1e-300]],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=7\n# method=toeplitz\nt,v\n0,0.1\n"));
        let (p, cols, rows) = read_table(&text).unwrap();
        assert_eq!(p, prov);
        assert_eq!(cols, vec!["t", "v"]);
        assert_eq!(rows[1][1], -1e-300);
    }
}
