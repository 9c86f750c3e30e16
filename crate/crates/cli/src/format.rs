//! Text output helpers shared by the CSV and SVG writers.

use std::fmt::Write as _;

/// Shortest decimal that parses back to `x`; exponent notation outside
/// `[1e−5, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Comma-separated table with a header row and LF line endings.
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            columns: header.len(),
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "row width differs from header");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::F(x) => self.text.push_str(&fmt_f64(*x)),
                Cell::I(n) => {
                    let _ = write!(self.text, "{n}");
                }
                Cell::S(s) => self.text.push_str(s),
                Cell::B(b) => self.text.push_str(if *b { "true" } else { "false" }),
            }
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::I(n as i64)
    }
}

impl From<u32> for Cell {
    fn from(n: u32) -> Self {
        Cell::I(n.into())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::B(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { &[$($crate::format::Cell::from($x)),*] };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-5, 3.9e-6, 1e-300, 12345.678, -2.5e20, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(3.9e-6), "3.9e-6");
        assert_eq!(fmt_f64(0.01 / 256.0), "0.0000390625");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b", "c"]);
        c.row(row![1.5, 2usize, true]);
        assert_eq!(c.into_string(), "a,b,c\n1.5,2,true\n");
    }
}
