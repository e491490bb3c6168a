//! Fill-reducing column ordering by recursive graph bisection.
//!
//! Without coordinates, each connected piece of the adjacency graph is split by
//! a level-structure separator rooted at a pseudo-peripheral vertex. With
//! coordinates, pieces are cut geometrically. Either way the two halves are
//! ordered first and the separator last.

use std::collections::VecDeque;

use super::csr::CsrMatrix;

const LEAF_SIZE: usize = 32;

/// Symmetrized adjacency lists of the pattern of A (diagonal excluded).
pub fn adjacency(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows;
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

struct Dissector<'a> {
    adj: &'a [Vec<usize>],
    // vertex -> id of the subset currently being processed
    owner: Vec<usize>,
    next_id: usize,
    level: Vec<usize>,
    order: Vec<usize>,
}

impl Dissector<'_> {
    fn claim(&mut self, set: &[usize]) -> usize {
        self.next_id += 1;
        for &v in set {
            self.owner[v] = self.next_id;
        }
        self.next_id
    }

    /// BFS restricted to vertices owned by `id`; returns the level sets.
    fn levels(&mut self, root: usize, id: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![vec![root]];
        let mut queue = VecDeque::from([root]);
        let mut seen = vec![root];
        self.level[root] = 0;
        // mark visited by temporarily flipping ownership
        self.owner[root] = usize::MAX;
        while let Some(v) = queue.pop_front() {
            let lv = self.level[v];
            for &w in &self.adj[v] {
                if self.owner[w] == id {
                    self.owner[w] = usize::MAX;
                    self.level[w] = lv + 1;
                    if out.len() <= lv + 1 {
                        out.push(Vec::new());
                    }
                    out[lv + 1].push(w);
                    queue.push_back(w);
                    seen.push(w);
                }
            }
        }
        for v in seen {
            self.owner[v] = id;
        }
        out
    }

    fn dissect(&mut self, set: Vec<usize>) {
        if set.len() <= LEAF_SIZE {
            self.order.extend(set);
            return;
        }
        let id = self.claim(&set);
        let mut root = *set.iter().min().expect("non-empty");
        let mut lv = self.levels(root, id);
        let reached: usize = lv.iter().map(Vec::len).sum();
        if reached < set.len() {
            // disconnected: handle each component separately
            let mut comp: Vec<usize> = lv.concat();
            comp.sort_unstable();
            let in_comp: std::collections::HashSet<usize> = comp.iter().copied().collect();
            let rest: Vec<usize> = set.into_iter().filter(|v| !in_comp.contains(v)).collect();
            self.dissect(comp);
            self.dissect(rest);
            return;
        }
        // pseudo-peripheral root: move to a minimum-degree vertex of the last level
        for _ in 0..8 {
            let last = lv.last().expect("non-empty");
            let cand = *last
                .iter()
                .min_by_key(|&&v| (self.adj[v].iter().filter(|&&w| self.owner[w] == id).count(), v))
                .expect("non-empty");
            let trial = self.levels(cand, id);
            if trial.len() > lv.len() {
                root = cand;
                lv = trial;
            } else {
                break;
            }
        }
        let _ = root;
        let depth = lv.len();
        if depth < 3 {
            let mut s = set;
            s.sort_unstable();
            self.order.extend(s);
            return;
        }
        let mid = depth / 2;
        let mut sep = Vec::new();
        let mut left = Vec::new();
        for &v in &lv[mid] {
            if self.adj[v]
                .iter()
                .any(|&w| self.owner[w] == id && self.level[w] == mid + 1)
            {
                sep.push(v);
            } else {
                left.push(v);
            }
        }
        for l in &lv[..mid] {
            left.extend_from_slice(l);
        }
        let right: Vec<usize> = lv[mid + 1..].concat();
        left.sort_unstable();
        let mut right = right;
        right.sort_unstable();
        sep.sort_unstable();
        self.dissect(left);
        self.dissect(right);
        self.order.extend(sep);
    }
}

/// Nested dissection driven by vertex positions: each piece is cut at the
/// median of its longer bounding-box side and the vertices on one side of the
/// cut that touch the other side form the separator.
pub fn coordinate_dissection(adj: &[Vec<usize>], coords: &[[f64; 2]]) -> Vec<usize> {
    assert_eq!(adj.len(), coords.len(), "one point per vertex");
    let n = adj.len();
    let mut side = vec![0u8; n];
    let mut order = Vec::with_capacity(n);
    // explicit stack of (vertex set, separator to emit after both halves)
    enum Task {
        Split(Vec<usize>),
        Emit(Vec<usize>),
    }
    let mut tasks = vec![Task::Split((0..n).collect())];
    while let Some(task) = tasks.pop() {
        let set = match task {
            Task::Emit(s) => {
                order.extend(s);
                continue;
            }
            Task::Split(s) => s,
        };
        if set.len() <= LEAF_SIZE {
            order.extend(set);
            continue;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for &v in &set {
            for d in 0..2 {
                lo[d] = lo[d].min(coords[v][d]);
                hi[d] = hi[d].max(coords[v][d]);
            }
        }
        let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
        let mut sorted = set.clone();
        sorted.sort_by(|&a, &b| coords[a][axis].total_cmp(&coords[b][axis]).then(a.cmp(&b)));
        let cut = coords[sorted[sorted.len() / 2]][axis];
        // side 1: below the cut, side 2: at or above
        for &v in &set {
            side[v] = if coords[v][axis] < cut { 1 } else { 2 };
        }
        let mut sep = Vec::new();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for &v in &sorted {
            if side[v] == 2 && adj[v].iter().any(|&w| side[w] == 1) {
                sep.push(v);
            } else if side[v] == 1 {
                left.push(v);
            } else {
                right.push(v);
            }
        }
        for &v in &set {
            side[v] = 0;
        }
        if left.is_empty() || right.is_empty() {
            // degenerate geometry: fall back to index order
            order.extend(sorted);
            continue;
        }
        tasks.push(Task::Emit(sep));
        tasks.push(Task::Split(right));
        tasks.push(Task::Split(left));
    }
    order
}

/// Nested-dissection permutation: `perm[k]` is the vertex eliminated k-th.
pub fn nested_dissection(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut d = Dissector {
        adj,
        owner: vec![0; n],
        next_id: 0,
        level: vec![0; n],
        order: Vec::with_capacity(n),
    };
    d.dissect((0..n).collect());
    d.order
}
