use std::io::{Read, Write};
use std::path::Path;

use super::{GridFunction, TimeGrid};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative tolerance on node positions when reading uniform-grid CSV data.
const SPACING_TOL: f64 = 1e-9;

impl<F: Scalar> GridFunction<F> {
    /// Reads a two-column `t,value` CSV with a header row. The times must
    /// start at 0 and be uniformly spaced.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Format(format!(
                    "row {}: expected 2 columns, found {}",
                    line + 2,
                    rec.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Format(format!("row {}: bad number {s:?}", line + 2)))
            };
            ts.push(parse(&rec[0])?);
            vs.push(parse(&rec[1])?);
        }
        if ts.len() < 2 {
            return Err(Error::Format("need at least two data rows".into()));
        }
        let n = ts.len();
        let t_end = ts[n - 1];
        if !(t_end > ts[0]) {
            return Err(Error::Format("times must be increasing".into()));
        }
        let h = t_end / (n - 1) as f64;
        for (i, &t) in ts.iter().enumerate() {
            if (t - i as f64 * h).abs() > SPACING_TOL * t_end {
                return Err(Error::Format(format!(
                    "row {}: t = {t} breaks the uniform grid starting at 0 with step {h}",
                    i + 2
                )));
            }
        }
        let grid = TimeGrid::new(F::lit(t_end), n)?;
        GridFunction::new(grid, vs.into_iter().map(F::lit).collect())
            .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Writes `t,value` rows with the given column names.
    pub fn write_csv(&self, mut out: impl Write, t_name: &str, v_name: &str) -> Result<()> {
        writeln!(out, "{t_name},{v_name}")?;
        for (t, v) in self.grid().nodes().zip(self.values()) {
            writeln!(out, "{:.16e},{:.16e}", t, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampled::make_grid;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = make_grid(2.0_f64, 17).unwrap();
        let f = GridFunction::from_fn(g, |t| (t * 3.1).sin() / 7.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf, "t", "g").unwrap();
        let back = GridFunction::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_non_uniform_times() {
        let text = "t,value\n0,0\n0.5,1\n1.2,2\n1.5,3\n";
        assert!(matches!(
            GridFunction::<f64>::read_csv(text.as_bytes()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn rejects_bad_numbers_and_shapes() {
        for text in [
            "t,value\n0,0\n1,x\n",
            "t,value\n0,0,1\n1,1,1\n",
            "t,value\n0,0\n",
        ] {
            assert!(
                GridFunction::<f64>::read_csv(text.as_bytes()).is_err(),
                "{text}"
            );
        }
    }
}
