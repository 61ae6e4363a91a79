use std::collections::HashMap;
use std::io::{Read, Write};

use crate::calibration::ImageBounds;
use crate::error::{Error, Result};
use crate::geometry::ImagePoint;

/// Consecutive points of one pen-down path.
pub type Stroke = Vec<ImagePoint>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SketchPlan {
    pub strokes: Vec<Stroke>,
    /// Pixel extents mapped onto the board region; `None` for an empty or
    /// zero-span point set.
    pub bounds: Option<ImageBounds>,
}

impl SketchPlan {
    pub fn point_count(&self) -> usize {
        self.strokes.iter().map(Vec::len).sum()
    }

    /// `stroke,u,v` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "stroke,u,v")?;
        for (s, stroke) in self.strokes.iter().enumerate() {
            for p in stroke {
                writeln!(w, "{s},{},{}", p.u, p.v)?;
            }
        }
        Ok(())
    }
}

fn lex_cmp(a: &ImagePoint, b: &ImagePoint) -> std::cmp::Ordering {
    a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v))
}

/// Spatial hash of unvisited points with cell size equal to the gap, so every
/// neighbor within the gap lies in the 3×3 block of cells around a point.
struct Grid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn key(&self, p: &ImagePoint) -> (i64, i64) {
        ((p.u / self.cell).floor() as i64, (p.v / self.cell).floor() as i64)
    }

    fn remove(&mut self, idx: usize, p: &ImagePoint) {
        let key = self.key(p);
        if let Some(list) = self.cells.get_mut(&key) {
            if let Some(pos) = list.iter().position(|&i| i == idx) {
                list.swap_remove(pos);
            }
        }
    }

    fn nearest(&self, points: &[ImagePoint], from: &ImagePoint, gap: f64) -> Option<usize> {
        let (cu, cv) = self.key(from);
        let mut best: Option<(f64, usize)> = None;
        for du in -1..=1 {
            for dv in -1..=1 {
                let Some(list) = self.cells.get(&(cu + du, cv + dv)) else {
                    continue;
                };
                for &i in list {
                    let p = &points[i];
                    let d = (p.u - from.u).hypot(p.v - from.v);
                    if d > gap {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bd, bi)) => d < bd || (d == bd && lex_cmp(p, &points[bi]).then(i.cmp(&bi)).is_lt()),
                    };
                    if better {
                        best = Some((d, i));
                    }
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Greedy nearest-neighbor chaining. Each stroke starts at the
/// lexicographically smallest `(u, v)` unvisited point and extends to the
/// nearest unvisited point at distance ≤ `gap` (ties broken lexicographically).
pub fn order_strokes(points: &[ImagePoint], gap: f64) -> Result<SketchPlan> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::Input(format!("stroke gap must be positive, got {gap}")));
    }
    if points.iter().any(|p| !(p.u.is_finite() && p.v.is_finite())) {
        return Err(Error::Input("image points must be finite".into()));
    }
    let mut grid = Grid {
        cell: gap,
        cells: HashMap::new(),
    };
    for (i, p) in points.iter().enumerate() {
        let key = grid.key(p);
        grid.cells.entry(key).or_default().push(i);
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]).then(a.cmp(&b)));

    let mut visited = vec![false; points.len()];
    let mut strokes = Vec::new();
    for &start in &order {
        if visited[start] {
            continue;
        }
        let mut stroke = vec![points[start]];
        visited[start] = true;
        grid.remove(start, &points[start]);
        let mut cur = start;
        while let Some(next) = grid.nearest(points, &points[cur], gap) {
            visited[next] = true;
            grid.remove(next, &points[next]);
            stroke.push(points[next]);
            cur = next;
        }
        strokes.push(stroke);
    }
    Ok(SketchPlan {
        strokes,
        bounds: ImageBounds::enclosing(points),
    })
}

/// Reads a `u,v` point file.
pub fn read_points_csv<R: Read>(r: R) -> Result<Vec<ImagePoint>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = csv.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["u", "v"] {
        return Err(Error::Parse("point file must have header u,v".into()));
    }
    csv.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse(format!("row {}: missing field", i + 1)))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))
            };
            Ok(ImagePoint::new(field(0)?, field(1)?))
        })
        .collect()
}
