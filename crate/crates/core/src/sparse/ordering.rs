//! Fill-reducing orderings for symmetric factorization.
//!
//! [`minimum_degree`] is an approximate-minimum-degree ordering on the
//! quotient graph: eliminated pivots become elements, variables keep a list
//! of adjacent variables and adjacent elements, and degrees are bounded with
//! the `|Le \ Lp|` counts instead of being recomputed exactly. Ties resolve
//! last-in first-out, so the ordering is a pure function of the pattern.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Variable,
    Element,
    Absorbed,
}

struct DegreeLists {
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    degree: Vec<usize>,
}

impl DegreeLists {
    fn new(n: usize) -> Self {
        Self {
            head: vec![NONE; n.max(1)],
            next: vec![NONE; n],
            prev: vec![NONE; n],
            degree: vec![0; n],
        }
    }

    fn insert(&mut self, i: usize, d: usize) {
        self.degree[i] = d;
        let h = self.head[d];
        self.next[i] = h;
        self.prev[i] = NONE;
        if h != NONE {
            self.prev[h] = i;
        }
        self.head[d] = i;
    }

    fn remove(&mut self, i: usize) {
        let d = self.degree[i];
        let (p, n) = (self.prev[i], self.next[i]);
        if p != NONE {
            self.next[p] = n;
        } else {
            self.head[d] = n;
        }
        if n != NONE {
            self.prev[n] = p;
        }
    }
}

/// Orders the vertices of an undirected graph given as adjacency lists.
/// Returns `perm` with `perm[new] = old`.
pub fn minimum_degree(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut state = vec![Node::Variable; n];
    let mut var_adj: Vec<Vec<usize>> = adjacency
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            let mut v: Vec<usize> = nb.iter().copied().filter(|&j| j != i).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut var_elems: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_vars: Vec<Vec<usize>> = vec![Vec::new(); n];

    let mut lists = DegreeLists::new(n);
    for i in (0..n).rev() {
        lists.insert(i, var_adj[i].len());
    }

    let mut mark = vec![0usize; n];
    let mut stamp = 0usize;
    let mut w = vec![0usize; n];
    let mut w_stamp = vec![0usize; n];
    let mut w_epoch = 0usize;

    let mut perm = Vec::with_capacity(n);
    let mut min_deg = 0usize;
    for k in 0..n {
        while lists.head[min_deg] == NONE {
            min_deg += 1;
        }
        let p = lists.head[min_deg];
        lists.remove(p);
        perm.push(p);

        stamp += 1;
        mark[p] = stamp;
        let mut lp = Vec::new();
        for &v in &var_adj[p] {
            if state[v] == Node::Variable && mark[v] != stamp {
                mark[v] = stamp;
                lp.push(v);
            }
        }
        let absorbed = std::mem::take(&mut var_elems[p]);
        for &e in &absorbed {
            if state[e] != Node::Element {
                continue;
            }
            for &v in &elem_vars[e] {
                if state[v] == Node::Variable && mark[v] != stamp {
                    mark[v] = stamp;
                    lp.push(v);
                }
            }
            state[e] = Node::Absorbed;
            elem_vars[e] = Vec::new();
        }
        state[p] = Node::Element;
        var_adj[p] = Vec::new();

        for &i in &lp {
            lists.remove(i);
            var_elems[i].retain(|&e| state[e] == Node::Element);
            var_elems[i].push(p);
            var_adj[i].retain(|&v| state[v] == Node::Variable && mark[v] != stamp);
        }

        // |Le \ Lp| for every element touching Lp
        w_epoch += 1;
        for &i in &lp {
            for &e in &var_elems[i] {
                if e == p {
                    continue;
                }
                if w_stamp[e] != w_epoch {
                    w_stamp[e] = w_epoch;
                    w[e] = elem_vars[e].len();
                }
                w[e] -= 1;
            }
        }
        for &i in &lp {
            for &e in &var_elems[i] {
                if e != p && w_stamp[e] == w_epoch && w[e] == 0 && state[e] == Node::Element {
                    state[e] = Node::Absorbed;
                    elem_vars[e] = Vec::new();
                }
            }
        }
        let remaining = n - k - 1;
        for &i in &lp {
            var_elems[i].retain(|&e| state[e] == Node::Element);
            let mut d = var_adj[i].len() + lp.len() - 1;
            for &e in &var_elems[i] {
                if e != p {
                    d += w[e];
                }
            }
            let d = d.min(remaining.saturating_sub(1));
            lists.insert(i, d);
            min_deg = min_deg.min(d);
        }
        elem_vars[p] = lp;
    }
    perm
}

/// Inverts a permutation, checking that it is one.
pub fn inverse(perm: &[usize]) -> Result<Vec<usize>> {
    let mut inv = vec![NONE; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        if old >= perm.len() || inv[old] != NONE {
            return Err(Error::InvalidPermutation);
        }
        inv[old] = new;
    }
    Ok(inv)
}
