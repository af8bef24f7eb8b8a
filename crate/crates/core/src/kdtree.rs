//! Exact nearest-neighbour index over a flat coordinate buffer.
//!
//! Distances are the same squared sums as the brute-force scan, accumulated in
//! the same coordinate order, so the minimum found is bit-identical. Pruning
//! uses the squared gap to a splitting plane, which never exceeds the computed
//! squared distance to any point on the far side (rounding is monotone).

const LEAF_SIZE: usize = 8;

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let t = a[k] - b[k];
        s += t * t;
    }
    s
}

enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

pub(crate) struct KdTree {
    dim: usize,
    /// Coordinates permuted into tree order.
    coords: Vec<f64>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub(crate) fn build(dim: usize, coords: &[f64]) -> KdTree {
        let n = coords.len() / dim;
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        build_rec(dim, coords, &mut order, 0, n, &mut nodes);
        let mut permuted = Vec::with_capacity(coords.len());
        for &i in &order {
            permuted.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
        KdTree {
            dim,
            coords: permuted,
            nodes,
        }
    }

    /// Minimum squared distance from `q` to the indexed points, except that
    /// the search may stop early and return any value `<= stop` once one is
    /// found. With `stop < 0` the exact minimum is returned.
    pub(crate) fn min_sq_dist(&self, q: &[f64], stop: f64) -> f64 {
        self.nearest(q, stop).0
    }

    /// As [`KdTree::min_sq_dist`], also returning the tree-order index of the
    /// point that attained the value.
    pub(crate) fn nearest(&self, q: &[f64], stop: f64) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        self.search(0, q, stop, &mut best);
        best
    }

    /// Point `k` in tree order.
    pub(crate) fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    fn search(&self, node: usize, q: &[f64], stop: f64, best: &mut (f64, usize)) -> bool {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                let d = self.dim;
                for (k, p) in self.coords[start * d..end * d].chunks_exact(d).enumerate() {
                    let s = sq_dist(q, p);
                    if s < best.0 {
                        *best = (s, start + k);
                        if s <= stop {
                            return true;
                        }
                    }
                }
                false
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let gap = q[axis] - value;
                let (near, far) = if gap <= 0.0 { (left, right) } else { (right, left) };
                if self.search(near, q, stop, best) {
                    return true;
                }
                if gap * gap <= best.0 {
                    return self.search(far, q, stop, best);
                }
                false
            }
        }
    }
}

fn build_rec(
    dim: usize,
    coords: &[f64],
    order: &mut [usize],
    offset: usize,
    len: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    if len <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + len,
        });
        return id;
    }
    let slice = &mut order[offset..offset + len];
    let mut axis = 0;
    let mut widest = -1.0;
    for k in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in slice.iter() {
            let v = coords[i * dim + k];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > widest {
            widest = hi - lo;
            axis = k;
        }
    }
    let mid = len / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        coords[a * dim + axis]
            .total_cmp(&coords[b * dim + axis])
            .then(a.cmp(&b))
    });
    // points left of `mid` have coordinate <= value, points from `mid` on >= value
    let value = coords[slice[mid] * dim + axis];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let left = build_rec(dim, coords, order, offset, mid, nodes);
    let right = build_rec(dim, coords, order, offset + mid, len - mid, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}
