use std::cmp::Ordering;

/// For each point, the indices of its `k` nearest other points by 2-D
/// Euclidean distance, nearest first. Equal distances are ordered by word.
pub fn knn2d(words: &[String], points: &[[f64; 2]], k: usize) -> Vec<Vec<usize>> {
    assert_eq!(words.len(), points.len(), "one word per point");
    let n = points.len();
    let k = k.min(n.saturating_sub(1));
    let mut out = Vec::with_capacity(n);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        candidates.clear();
        candidates.extend(points.iter().enumerate().filter(|&(j, _)| j != i).map(|(j, q)| {
            let dx = p[0] - q[0];
            let dy = p[1] - q[1];
            (dx * dx + dy * dy, j)
        }));
        let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then_with(|| words[a.1].cmp(&words[b.1])).then(a.1.cmp(&b.1))
        };
        if k > 0 && k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, cmp);
        }
        candidates.truncate(k);
        candidates.sort_by(cmp);
        out.push(candidates.iter().map(|&(_, j)| j).collect());
    }
    out
}
