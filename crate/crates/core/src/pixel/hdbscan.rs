//! HDBSCAN over a precomputed distance matrix.
//!
//! Core distance is the distance to the `min_samples`-th nearest point,
//! counting the point itself. The minimum spanning tree of the mutual
//! reachability graph is built with Prim's algorithm (ties to the lowest
//! index), turned into a single-linkage hierarchy, condensed by
//! `min_cluster_size`, and flat clusters are picked by excess of mass.
//! The root is never selected.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Clustering {
    /// Cluster id per point, `None` for noise.
    pub labels: Vec<Option<usize>>,
    pub n_clusters: usize,
}

// Stands in for 1/0 so stabilities stay finite for duplicate points.
const MAX_LAMBDA: f64 = 1e300;

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        (1.0 / distance).min(MAX_LAMBDA)
    } else {
        MAX_LAMBDA
    }
}

/// Single-linkage merge: children, merge distance, merged size.
#[derive(Debug, Clone, Copy)]
struct Merge {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

#[derive(Debug, Clone, Copy)]
struct CondensedRow {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

fn core_distances(dist: &[f64], n: usize, min_samples: usize) -> Vec<f64> {
    let kth = min_samples.clamp(1, n) - 1;
    (0..n)
        .map(|i| {
            let mut row: Vec<f64> = dist[i * n..(i + 1) * n].to_vec();
            row.select_nth_unstable_by(kth, f64::total_cmp);
            row[kth]
        })
        .collect()
}

/// MST edges `(a, b, weight)` in insertion order.
fn prim_mst(dist: &[f64], core: &[f64], n: usize) -> Vec<(usize, usize, f64)> {
    let mrd = |i: usize, j: usize| dist[i * n + j].max(core[i]).max(core[j]);
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = mrd(current, j);
            if w < best[j] {
                best[j] = w;
                from[j] = current;
            }
            if next == usize::MAX || best[j] < next_w {
                next = j;
                next_w = best[j];
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, next_w));
        current = next;
    }
    edges
}

fn single_linkage(mut edges: Vec<(usize, usize, f64)>, n: usize) -> Vec<Merge> {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut size = vec![1usize; 2 * n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merges = Vec::with_capacity(n - 1);
    for (i, (a, b, w)) in edges.into_iter().enumerate() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let node = n + i;
        size[node] = size[ra] + size[rb];
        parent[ra] = node;
        parent[rb] = node;
        merges.push(Merge { left: ra, right: rb, distance: w, size: size[node] });
    }
    merges
}

fn leaves(merges: &[Merge], n: usize, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut queue = VecDeque::from([node]);
    while let Some(x) = queue.pop_front() {
        if x < n {
            out.push(x);
        } else {
            let m = merges[x - n];
            queue.push_back(m.left);
            queue.push_back(m.right);
        }
    }
    out
}

fn condense(merges: &[Merge], n: usize, min_cluster_size: usize) -> Vec<CondensedRow> {
    let root = 2 * n - 2;
    let size_of = |x: usize| if x < n { 1 } else { merges[x - n].size };
    let mut relabel: HashMap<usize, usize> = HashMap::from([(root, n)]);
    let mut next_label = n + 1;
    let mut rows = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        if node < n {
            continue;
        }
        let m = merges[node - n];
        let lambda = lambda_of(m.distance);
        let parent = relabel[&node];
        let (ls, rs) = (size_of(m.left), size_of(m.right));
        let big_left = ls >= min_cluster_size;
        let big_right = rs >= min_cluster_size;
        if big_left && big_right {
            for (child, s) in [(m.left, ls), (m.right, rs)] {
                relabel.insert(child, next_label);
                rows.push(CondensedRow { parent, child: next_label, lambda, size: s });
                next_label += 1;
                queue.push_back(child);
            }
        } else {
            for (child, big) in [(m.left, big_left), (m.right, big_right)] {
                if big {
                    relabel.insert(child, parent);
                    queue.push_back(child);
                } else {
                    for leaf in leaves(merges, n, child) {
                        rows.push(CondensedRow { parent, child: leaf, lambda, size: 1 });
                    }
                }
            }
        }
    }
    rows
}

fn select_clusters(rows: &[CondensedRow], n: usize) -> Vec<usize> {
    let mut birth: HashMap<usize, f64> = HashMap::from([(n, 0.0)]);
    let mut max_id = n;
    for r in rows {
        if r.child >= n {
            birth.insert(r.child, r.lambda);
            max_id = max_id.max(r.child);
        }
    }
    let mut stability = vec![0.0; max_id + 1];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); max_id + 1];
    for r in rows {
        stability[r.parent] += (r.lambda - birth[&r.parent]) * r.size as f64;
        if r.child >= n {
            children[r.parent].push(r.child);
        }
    }

    let mut selected = vec![false; max_id + 1];
    for node in ((n + 1)..=max_id).rev() {
        let subtree: f64 = children[node].iter().map(|&c| stability[c]).sum();
        if subtree > stability[node] {
            stability[node] = subtree;
        } else {
            selected[node] = true;
            let mut queue: VecDeque<usize> = children[node].iter().copied().collect();
            while let Some(c) = queue.pop_front() {
                selected[c] = false;
                queue.extend(children[c].iter().copied());
            }
        }
    }
    (n + 1..=max_id).filter(|&c| selected[c]).collect()
}

/// Clusters points given a symmetric row-major `n × n` distance matrix.
pub fn hdbscan_precomputed(dist: &[f64], n: usize, min_cluster_size: usize, min_samples: usize) -> Result<Clustering> {
    if min_cluster_size < 2 {
        return Err(Error::Config("min_cluster_size must be at least 2".into()));
    }
    if n < min_cluster_size || n < 2 {
        return Err(Error::TooFewPoints { needed: min_cluster_size.max(2), found: n });
    }
    assert_eq!(dist.len(), n * n, "distance matrix must be n × n");

    let core = core_distances(dist, n, min_samples);
    let merges = single_linkage(prim_mst(dist, &core, n), n);
    let rows = condense(&merges, n, min_cluster_size);
    let clusters = select_clusters(&rows, n);

    let cluster_id: HashMap<usize, usize> = clusters.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut cluster_parent: HashMap<usize, usize> = HashMap::new();
    let mut point_parent = vec![n; n];
    for r in &rows {
        if r.child >= n {
            cluster_parent.insert(r.child, r.parent);
        } else {
            point_parent[r.child] = r.parent;
        }
    }
    let labels = point_parent
        .into_iter()
        .map(|mut c| loop {
            if let Some(&id) = cluster_id.get(&c) {
                break Some(id);
            }
            match cluster_parent.get(&c) {
                Some(&p) => c = p,
                None => break None,
            }
        })
        .collect();
    Ok(Clustering { labels, n_clusters: clusters.len() })
}
