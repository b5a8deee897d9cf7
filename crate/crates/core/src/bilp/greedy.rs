use fixedbitset::FixedBitSet;

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyCover {
    /// Columns in pick order.
    pub chosen: Vec<usize>,
    pub covered: FixedBitSet,
    pub weight: f64,
}

/// Picks `k` columns one at a time, each covering the most not-yet-covered
/// weight. Ties go to the smallest column index; once nothing adds weight the
/// remaining picks are the smallest unused indices.
pub fn greedy_max_coverage(columns: &[FixedBitSet], weights: &[f64], k: usize) -> GreedyCover {
    let m = weights.len();
    let k = k.min(columns.len());
    let mut covered = FixedBitSet::with_capacity(m);
    let mut used = vec![false; columns.len()];
    let mut chosen = Vec::with_capacity(k);
    let mut weight = 0.0;
    for _ in 0..k {
        let mut best = None;
        let mut best_gain = f64::NEG_INFINITY;
        for (c, col) in columns.iter().enumerate() {
            if used[c] {
                continue;
            }
            let gain: f64 = col.difference(&covered).map(|j| weights[j]).sum();
            if gain > best_gain + 1e-15 {
                best_gain = gain;
                best = Some(c);
            }
        }
        let Some(c) = best else { break };
        used[c] = true;
        chosen.push(c);
        covered.union_with(&columns[c]);
        weight += best_gain.max(0.0);
    }
    GreedyCover {
        chosen,
        covered,
        weight,
    }
}
