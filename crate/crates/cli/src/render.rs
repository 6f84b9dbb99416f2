//! Aligned text tables and CSV.

use std::io::IsTerminal;

use anyhow::Result;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// Space-aligned text; numbers are right-aligned, text left-aligned.
    pub fn to_text(&self, color: bool) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain([self.headers[c].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let numeric: Vec<bool> = (0..self.headers.len())
            .map(|c| {
                !self.rows.is_empty()
                    && self
                        .rows
                        .iter()
                        .all(|r| r[c].parse::<f64>().is_ok() || r[c] == "-")
            })
            .collect();
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    if numeric[c] {
                        format!("{s:>w$}", w = widths[c])
                    } else {
                        format!("{s:<w$}", w = widths[c])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = String::new();
        let header = line(&self.headers);
        if color {
            out.push_str(&format!("\x1b[1m{header}\x1b[0m\n"));
        } else {
            out.push_str(&header);
            out.push('\n');
        }
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Bold headers only on a terminal and only when `NO_COLOR` is unset or empty.
pub fn use_color() -> bool {
    let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
    !no_color && std::io::stdout().is_terminal()
}

/// Fixed three-decimal rendering without a negative zero.
pub fn fixed3(x: f64) -> String {
    let s = format!("{:.3}", x);
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Angular frequency as the ordinary frequency in kHz, for `2π × f` display.
pub fn khz(angular: f64) -> f64 {
    angular / std::f64::consts::TAU / 1e3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment() {
        let mut t = Table::new(["name", "value"]);
        t.push(vec!["a".into(), "1.5".into()]);
        t.push(vec!["longer".into(), "-10.25".into()]);
        assert_eq!(
            t.to_text(false),
            "name     value\na          1.5\nlonger  -10.25\n"
        );
        assert!(t.to_text(true).starts_with("\x1b[1m"));
    }

    #[test]
    fn csv_uses_lf_and_quotes() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["x,y".into(), "1".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n\"x,y\",1\n");
    }

    #[test]
    fn no_color_disables_styling() {
        std::env::set_var("NO_COLOR", "1");
        assert!(!use_color());
    }

    #[test]
    fn no_negative_zero() {
        assert_eq!(fixed3(-0.0001), "0.000");
        assert_eq!(fixed3(-0.624), "-0.624");
    }
}
