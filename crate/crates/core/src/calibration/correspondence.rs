use std::io::{BufRead, Write};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{ArmPoint, BoardPoint};

/// Paired board-frame / arm-frame measurements of the same pen positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    pairs: Vec<(BoardPoint, ArmPoint)>,
}

impl CorrespondenceSet {
    pub fn new(pairs: Vec<(BoardPoint, ArmPoint)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Input("correspondence set is empty".into()));
        }
        if let Some(i) = pairs.iter().position(|(b, a)| !b.is_finite() || !a.is_finite()) {
            return Err(Error::Input(format!("pair {i} has non-finite coordinates")));
        }
        Ok(Self { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(BoardPoint, ArmPoint)] {
        &self.pairs
    }

    pub fn board_vectors(&self) -> Vec<Vector3<f64>> {
        self.pairs.iter().map(|(b, _)| b.to_vector()).collect()
    }

    pub fn arm_vectors(&self) -> Vec<Vector3<f64>> {
        self.pairs.iter().map(|(_, a)| a.to_vector()).collect()
    }

    /// Subset by index; indices must be in range.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.pairs[i]).collect())
    }

    /// Reads `bx,by,bz,ax,ay,az` rows. An optional first line
    /// `# unit: m` or `# unit: cm` declares the unit (meters by default);
    /// values are converted to meters.
    pub fn read_csv<R: BufRead>(mut reader: R) -> Result<Self> {
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let (scale, header_line) = match first.trim().strip_prefix('#') {
            Some(comment) => {
                let unit = comment
                    .trim()
                    .strip_prefix("unit:")
                    .ok_or_else(|| Error::Parse(format!("unrecognized comment line: {}", first.trim())))?
                    .trim();
                let scale = match unit {
                    "m" => 1.0,
                    "cm" => 0.01,
                    other => return Err(Error::Parse(format!("unknown unit {other:?}"))),
                };
                (scale, None)
            }
            None => (1.0, Some(first)),
        };

        let mut rest = String::new();
        if let Some(h) = header_line {
            rest.push_str(&h);
        }
        reader.read_to_string(&mut rest)?;
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(rest.as_bytes());
        let headers = csv.headers()?.clone();
        let expected = ["bx", "by", "bz", "ax", "ay", "az"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse(format!(
                "expected header bx,by,bz,ax,ay,az, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut pairs = Vec::new();
        for (line, rec) in csv.records().enumerate() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {}: {f:?}: {e}", line + 1)))
                })
                .collect::<Result<_>>()?;
            if vals.len() != 6 {
                return Err(Error::Parse(format!("row {}: expected 6 fields", line + 1)));
            }
            pairs.push((
                BoardPoint::new(vals[0] * scale, vals[1] * scale, vals[2] * scale),
                ArmPoint::new(vals[3] * scale, vals[4] * scale, vals[5] * scale),
            ));
        }
        Self::new(pairs)
    }

    /// Writes meters with full precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# unit: m")?;
        writeln!(w, "bx,by,bz,ax,ay,az")?;
        for (b, a) in &self.pairs {
            writeln!(w, "{},{},{},{},{},{}", b.x, b.y, b.z, a.x, a.y, a.z)?;
        }
        Ok(())
    }
}
