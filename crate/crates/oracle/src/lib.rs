//! Slow, direct reference computations for cross-checking the engine.
//!
//! Everything here works on dense index-based inputs: `w[i][j] > 0` is an
//! edge `i -> j`, anything else is no edge. Nothing is shared with the engine.

/// A simple path as node indices, first source first, target last.
pub type Path = Vec<usize>;

/// All simple paths with `1..=max_len` edges ending at `target`.
///
/// Generates every injective sequence of nodes ending at `target` and keeps
/// those whose consecutive pairs are all edges. Exponential; meant for graphs
/// of a handful of nodes.
pub fn simple_paths(w: &[Vec<f64>], target: usize, max_len: usize) -> Vec<Path> {
    fn extend(
        w: &[Vec<f64>],
        target: usize,
        max_len: usize,
        prefix: &mut Vec<usize>,
        out: &mut Vec<Path>,
    ) {
        if !prefix.is_empty() && prefix.len() <= max_len {
            let mut candidate = prefix.clone();
            candidate.push(target);
            if is_path(w, &candidate) {
                out.push(candidate);
            }
        }
        if prefix.len() == max_len {
            return;
        }
        for v in 0..w.len() {
            if v != target && !prefix.contains(&v) {
                prefix.push(v);
                extend(w, target, max_len, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(w, target, max_len, &mut Vec::new(), &mut out);
    out
}

fn is_path(w: &[Vec<f64>], nodes: &[usize]) -> bool {
    nodes.windows(2).all(|p| w[p[0]][p[1]] > 0.0)
}

/// Product (or minimum, when `use_min`) of the weights along `path`.
pub fn path_weight(w: &[Vec<f64>], path: &[usize], use_min: bool) -> f64 {
    let ws = path.windows(2).map(|p| w[p[0]][p[1]]);
    if use_min {
        ws.fold(1.0, f64::min)
    } else {
        ws.product()
    }
}

/// `sum(weight(p) * max source value on p) / sum(weight(p))` over `paths`.
/// `None` when there are no paths.
pub fn weighted_path_mean(
    w: &[Vec<f64>],
    values: &[f64],
    paths: &[Path],
    use_min: bool,
) -> Option<f64> {
    if paths.is_empty() {
        return None;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for p in paths {
        let pw = path_weight(w, p, use_min);
        let risk = p[..p.len() - 1]
            .iter()
            .map(|&s| values[s])
            .fold(f64::NEG_INFINITY, f64::max);
        num += pw * risk;
        den += pw;
    }
    Some(num / den)
}

/// Choquet integral through the Möbius transform of `mu` over all subsets
/// of `0..n`: `sum over A of m(A) * min of x on A`.
pub fn choquet_mobius(x: &[f64], mu: impl Fn(u64) -> f64) -> f64 {
    let n = x.len();
    let full = 1u64 << n;
    let mut total = 0.0;
    for a in 1..full {
        // m(A) = sum over B subset of A of (-1)^{|A \ B|} mu(B)
        let mut m = 0.0;
        let mut b = a;
        loop {
            let sign = if (a & !b).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m += sign * mu(b);
            if b == 0 {
                break;
            }
            b = (b - 1) & a;
        }
        let min = (0..n)
            .filter(|i| a & (1 << i) != 0)
            .map(|i| x[i])
            .fold(f64::INFINITY, f64::min);
        total += m * min;
    }
    total
}

/// Measure of the set of paths with at least one source in `set`, each path
/// weighted by its normalized weight.
pub fn path_union_measure(
    w: &[Vec<f64>],
    paths: &[Path],
    criteria: &[usize],
    set: u64,
    use_min: bool,
) -> f64 {
    let total: f64 = paths.iter().map(|p| path_weight(w, p, use_min)).sum();
    paths
        .iter()
        .filter(|p| {
            p[..p.len() - 1].iter().any(|s| {
                criteria
                    .iter()
                    .position(|c| c == s)
                    .is_some_and(|i| set & (1 << i) != 0)
            })
        })
        .map(|p| path_weight(w, p, use_min))
        .sum::<f64>()
        / total
}

/// `sum(confidence * weight) / sum(confidence)`.
pub fn confidence_mean(judgements: &[(f64, f64)]) -> f64 {
    let num: f64 = judgements.iter().map(|(w, c)| w * c).sum();
    let den: f64 = judgements.iter().map(|(_, c)| c).sum();
    num / den
}

/// Bottom-up evaluation of a levelled map.
///
/// Levels are processed deepest first. A node aggregates over the paths into
/// it whose non-target nodes are either deeper than it or have a supplied
/// value; an unvalued node takes that aggregate. Returns per node the
/// aggregate (if any path qualified) and the effective value, or `None` when
/// some unvalued node has nothing to aggregate.
pub fn evaluate_levels(
    w: &[Vec<f64>],
    levels: &[u32],
    supplied: &[Option<f64>],
    k: usize,
    use_min: bool,
) -> Option<Vec<(Option<f64>, f64)>> {
    let n = levels.len();
    let mut effective: Vec<Option<f64>> = supplied.to_vec();
    let mut aggregates: Vec<Option<f64>> = vec![None; n];
    let deepest = levels.iter().copied().max().unwrap_or(0);
    for level in (0..=deepest).rev() {
        for t in (0..n).filter(|&t| levels[t] == level) {
            let paths: Vec<Path> = simple_paths(w, t, k)
                .into_iter()
                .filter(|p| {
                    p[..p.len() - 1]
                        .iter()
                        .all(|&s| levels[s] > level || supplied[s].is_some())
                })
                .collect();
            let values: Vec<f64> = effective.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
            aggregates[t] = weighted_path_mean(w, &values, &paths, use_min);
            if supplied[t].is_none() {
                effective[t] = Some(aggregates[t]?);
            }
        }
    }
    Some(
        aggregates
            .into_iter()
            .zip(effective)
            .map(|(a, e)| (a, e.expect("all nodes valued")))
            .collect(),
    )
}

/// Sum of every positive off-diagonal weight.
pub fn total_weight(w: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in w.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if i != j && x > 0.0 {
                s += x;
            }
        }
    }
    s
}
