use std::collections::HashMap;

use super::SweepResult;

/// Contour polyline in parameter coordinates, points as `(row, column)`
/// parameter values.
pub type Polyline = Vec<(f64, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// Between `(i, j)` and `(i, j + 1)`.
    Row(usize, usize),
    /// Between `(i, j)` and `(i + 1, j)`.
    Column(usize, usize),
}

/// Marching-squares iso-line at `level`. Cells touching a NaN are skipped; a
/// level outside the data range yields no polylines.
pub fn iso_contour(result: &SweepResult, level: f64) -> Vec<Polyline> {
    let nr = result.rows.len();
    let nc = result.columns.len();
    if nr < 2 || nc < 2 {
        return Vec::new();
    }
    let v = |i: usize, j: usize| result.value(i, j);
    let above = |x: f64| x > level;

    let point = |edge: Edge| -> (f64, f64) {
        let ((i0, j0), (i1, j1)) = match edge {
            Edge::Row(i, j) => ((i, j), (i, j + 1)),
            Edge::Column(i, j) => ((i, j), (i + 1, j)),
        };
        let (a, b) = (v(i0, j0), v(i1, j1));
        let t = (level - a) / (b - a);
        let lerp = |x0: f64, x1: f64| x0 + t * (x1 - x0);
        (
            lerp(result.rows[i0], result.rows[i1]),
            lerp(result.columns[j0], result.columns[j1]),
        )
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..nr - 1 {
        for j in 0..nc - 1 {
            let corners = [v(i, j), v(i, j + 1), v(i + 1, j + 1), v(i + 1, j)];
            if corners.iter().any(|c| c.is_nan()) {
                continue;
            }
            let bits = corners.map(above);
            // Edge k joins corner k and corner k+1 (counter-clockwise from (i, j)).
            let edges = [
                Edge::Row(i, j),
                Edge::Column(i, j + 1),
                Edge::Row(i + 1, j),
                Edge::Column(i, j),
            ];
            let crossed: Vec<usize> = (0..4).filter(|&k| bits[k] != bits[(k + 1) % 4]).collect();
            match crossed.len() {
                2 => segments.push((edges[crossed[0]], edges[crossed[1]])),
                4 => {
                    let center = above(corners.iter().sum::<f64>() / 4.0);
                    // Cut off each corner whose class differs from the center.
                    for k in 0..4 {
                        if bits[k] != center {
                            segments.push((edges[(k + 3) % 4], edges[k]));
                        }
                    }
                }
                _ => {}
            }
        }
    }
    chain(segments, point)
}

fn chain(segments: Vec<(Edge, Edge)>, point: impl Fn(Edge) -> (f64, f64)) -> Vec<Polyline> {
    let mut incident: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        incident.entry(*a).or_default().push(k);
        incident.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    // Start from open ends first so open polylines come out whole.
    let mut starts: Vec<usize> = (0..segments.len())
        .filter(|&k| {
            let (a, b) = segments[k];
            incident[&a].len() == 1 || incident[&b].len() == 1
        })
        .collect();
    starts.extend(0..segments.len());

    for start in starts {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let (first, mut tip) = if incident[&a].len() == 1 {
            (a, b)
        } else {
            (b, a)
        };
        let mut edges = vec![first, tip];
        while let Some(&next) = incident[&tip].iter().find(|&&k| !used[k]) {
            used[next] = true;
            let (x, y) = segments[next];
            tip = if x == tip { y } else { x };
            edges.push(tip);
        }
        lines.push(edges.into_iter().map(&point).collect());
    }
    lines
}
