//! Marching-squares level extraction on a rectilinear grid.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub struct ContourLine {
    pub level: f64,
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl ContourLine {
    pub fn centroid(&self) -> [f64; 2] {
        let pts = self.vertices();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
        [sx / n, sy / n]
    }

    /// Std/mean of the vertex distances to the centroid; 0 for a circle.
    pub fn circularity(&self) -> f64 {
        let c = self.centroid();
        let d: Vec<f64> = self.vertices().iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() / mean
    }

    /// Even-odd point-in-polygon test; false for open lines.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        if !self.closed {
            return false;
        }
        let v = self.vertices();
        let mut inside = false;
        for k in 0..v.len() {
            let (a, b) = (v[k], v[(k + 1) % v.len()]);
            if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]) {
                inside = !inside;
            }
        }
        inside
    }

    /// Unsigned shoelace area.
    pub fn area(&self) -> f64 {
        let v = self.vertices();
        let twice: f64 = (0..v.len())
            .map(|k| {
                let (a, b) = (v[k], v[(k + 1) % v.len()]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum();
        0.5 * twice.abs()
    }

    /// Vertices without the repeated closing point.
    fn vertices(&self) -> &[[f64; 2]] {
        if self.closed && self.points.len() > 1 {
            &self.points[..self.points.len() - 1]
        } else {
            &self.points
        }
    }
}

/// Horizontal edge `(i, j)-(i, j+1)` or vertical edge `(i, j)-(i+1, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Extracts iso-lines of `values` (row-major, `y_axis.len()` rows of
/// `x_axis.len()` columns). Cells touching a NaN are skipped.
pub fn marching_squares(x_axis: &[f64], y_axis: &[f64], values: &[f64], level: f64) -> Vec<ContourLine> {
    let (nx, ny) = (x_axis.len(), y_axis.len());
    assert_eq!(values.len(), nx * ny, "grid shape mismatch");
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let v = |i: usize, j: usize| values[i * nx + j];
    let above = |x: f64| x >= level;

    let point = |e: Edge| -> [f64; 2] {
        let (a, b, pa, pb) = match e {
            Edge::H(i, j) => (v(i, j), v(i, j + 1), [x_axis[j], y_axis[i]], [x_axis[j + 1], y_axis[i]]),
            Edge::V(i, j) => (v(i, j), v(i + 1, j), [x_axis[j], y_axis[i]], [x_axis[j], y_axis[i + 1]]),
        };
        let t = ((level - a) / (b - a)).clamp(0.0, 1.0);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..ny - 1 {
        for j in 0..nx - 1 {
            let c = [v(i, j), v(i, j + 1), v(i + 1, j + 1), v(i + 1, j)];
            if c.iter().any(|x| x.is_nan()) {
                continue;
            }
            let f = c.map(above);
            // Edges in order bottom, right, top, left; edge k joins corners k and k+1.
            let edges = [Edge::H(i, j), Edge::V(i, j + 1), Edge::H(i + 1, j), Edge::V(i, j)];
            let crossing: Vec<usize> = (0..4).filter(|&k| f[k] != f[(k + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let center = above(c.iter().sum::<f64>() / 4.0);
                    if center == f[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let next_from = |edge: Edge, from: usize, used: &[bool]| -> Option<usize> {
        by_edge[&edge].iter().copied().find(|&s| s != from && !used[s])
    };
    let other = |s: usize, e: Edge| if segments[s].0 == e { segments[s].1 } else { segments[s].0 };

    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (first, mut tail) = segments[start];
        let mut chain = vec![first, tail];
        let mut current = start;
        let mut closed = false;
        while let Some(s) = next_from(tail, current, &used) {
            used[s] = true;
            tail = other(s, tail);
            current = s;
            if tail == first {
                closed = true;
                chain.push(tail);
                break;
            }
            chain.push(tail);
        }
        if !closed {
            let mut head = first;
            let mut current = start;
            let mut prefix = Vec::new();
            while let Some(s) = next_from(head, current, &used) {
                used[s] = true;
                head = other(s, head);
                current = s;
                prefix.push(head);
            }
            prefix.reverse();
            prefix.extend(chain);
            chain = prefix;
        }
        lines.push(ContourLine { level, points: chain.into_iter().map(point).collect(), closed });
    }
    lines
}
