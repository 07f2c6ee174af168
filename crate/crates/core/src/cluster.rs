//! Single-linkage clustering of point clouds: union-find over the
//! `radius`-neighbor graph, plus nearest-neighbor statistics.

use std::collections::HashMap;
use std::mem;

#[derive(Debug)]
struct Node {
    size: usize,
    parent: usize,
}

#[derive(Debug)]
pub struct UnionFind {
    nodes: Vec<Node>,
}

impl UnionFind {
    pub fn new(len: usize) -> UnionFind {
        UnionFind {
            nodes: (0..len).map(|i| Node { size: 1, parent: i }).collect(),
        }
    }

    pub fn union(&mut self, x: usize, y: usize) {
        let mut xf = self.find(x);
        let mut yf = self.find(y);

        if xf == yf {
            return;
        }

        if self.nodes[xf].size < self.nodes[yf].size {
            mem::swap(&mut xf, &mut yf);
        }

        self.nodes[yf].parent = xf;
        self.nodes[xf].size += self.nodes[yf].size;
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut xf = x;

        while self.nodes[xf].parent != xf {
            let xf_parent = self.nodes[xf].parent;
            self.nodes[xf].parent = self.nodes[xf_parent].parent;
            xf = xf_parent;
        }

        xf
    }

    pub fn set_count(&mut self) -> usize {
        (0..self.nodes.len()).filter(|&i| self.find(i) == i).count()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Number of connected components of the graph joining points at distance
/// `<= radius`. Points are bucketed into cells of side `radius / sqrt(m)`, so
/// points sharing a cell are always linked.
pub fn count_components(points: &[Vec<f64>], radius: f64) -> usize {
    if points.is_empty() {
        return 0;
    }
    let m = points[0].len();
    let mut uf = UnionFind::new(points.len());
    if !(radius > 0.0) {
        // only coincident points link
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if points[w[0]] == points[w[1]] {
                uf.union(w[0], w[1]);
            }
        }
        return uf.set_count();
    }
    let side = radius / (m as f64).sqrt();
    let r2 = radius * radius;
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        let key: Vec<i64> = p.iter().map(|v| (v / side).floor() as i64).collect();
        cells.entry(key).or_default().push(i);
    }
    for members in cells.values() {
        for w in members.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let reach = (m as f64).sqrt().ceil() as i64;
    let offsets = neighbor_offsets(m, reach);
    let mut keys: Vec<&Vec<i64>> = cells.keys().collect();
    keys.sort();
    for key in keys {
        let members = &cells[key];
        for off in &offsets {
            // visit each unordered cell pair once
            if off.iter().find(|&&o| o != 0).map_or(true, |&o| o < 0) {
                continue;
            }
            let other: Vec<i64> = key.iter().zip(off).map(|(k, o)| k + o).collect();
            let Some(others) = cells.get(&other) else {
                continue;
            };
            if uf.find(members[0]) == uf.find(others[0]) {
                continue;
            }
            'pairs: for &a in members {
                for &b in others {
                    if dist2(&points[a], &points[b]) <= r2 {
                        uf.union(a, b);
                        break 'pairs;
                    }
                }
            }
        }
    }
    uf.set_count()
}

fn neighbor_offsets(m: usize, reach: i64) -> Vec<Vec<i64>> {
    let width = (2 * reach + 1) as usize;
    let total = width.pow(m as u32);
    (0..total)
        .map(|mut idx| {
            (0..m)
                .map(|_| {
                    let k = (idx % width) as i64 - reach;
                    idx /= width;
                    k
                })
                .collect()
        })
        .collect()
}

/// Nearest-neighbor distance of every point, via a sweep along the first
/// coordinate with pruning.
pub fn nearest_neighbor_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    if n < 2 {
        return vec![f64::INFINITY; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    let mut best = vec![f64::INFINITY; n];
    for (pos, &i) in order.iter().enumerate() {
        let xi = points[i][0];
        let mut b = f64::INFINITY;
        for &j in order[pos + 1..].iter() {
            let dx = points[j][0] - xi;
            if dx * dx > b {
                break;
            }
            b = b.min(dist2(&points[i], &points[j]));
        }
        for &j in order[..pos].iter().rev() {
            let dx = xi - points[j][0];
            if dx * dx > b {
                break;
            }
            b = b.min(dist2(&points[i], &points[j]));
        }
        best[i] = b;
    }
    best.into_iter().map(f64::sqrt).collect()
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}
