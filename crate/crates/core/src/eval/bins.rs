use serde::Serialize;

use super::{order_free_mean, ratio, EvalError, ExampleRecord};

/// Entropy ranges in bits: three equal-width bins from 0.08 to 1.58.
pub const DEFAULT_BIN_EDGES: [f64; 4] = [0.08, 0.58, 1.08, 1.58];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinMetrics {
    /// Lower bound; `-inf` for the below-range bucket.
    pub lo: f64,
    /// Upper bound; `+inf` for the above-range bucket.
    pub hi: f64,
    pub count: usize,
    /// NaN (null in JSON) for an empty bin.
    pub mean_jsd: f64,
    /// NaN when the bin has no scored example.
    pub accuracy: f64,
    pub n_scored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinReport {
    pub edges: Vec<f64>,
    pub bins: Vec<BinMetrics>,
    /// Entropy strictly below the first edge.
    pub below: BinMetrics,
    /// Entropy strictly above the last edge.
    pub above: BinMetrics,
}

/// Where an entropy value lands: `Ok(i)` for bin `i`, `Err(false)` below
/// range, `Err(true)` above. Bins are `[lo, hi)` except the last, `[lo, hi]`.
pub fn bin_index(h: f64, edges: &[f64]) -> Result<usize, bool> {
    let last = edges.len() - 1;
    if h < edges[0] {
        return Err(false);
    }
    if h > edges[last] {
        return Err(true);
    }
    if h == edges[last] {
        return Ok(last - 1);
    }
    Ok(edges.partition_point(|&e| e <= h) - 1)
}

pub fn validate_edges(edges: &[f64]) -> Result<(), EvalError> {
    let ok = edges.len() >= 2 && edges.iter().all(|e| e.is_finite()) && edges.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(EvalError::BadEdges(edges.to_vec()))
    }
}

fn metrics(lo: f64, hi: f64, members: &[&ExampleRecord]) -> BinMetrics {
    let n_scored = members.iter().filter(|r| r.correct.is_some()).count();
    let n_correct = members.iter().filter(|r| r.correct == Some(true)).count();
    BinMetrics {
        lo,
        hi,
        count: members.len(),
        mean_jsd: order_free_mean(members.iter().map(|r| r.jsd)),
        accuracy: ratio(n_correct, n_scored),
        n_scored,
    }
}

/// Groups records by the entropy of their target distribution.
pub fn entropy_bins(records: &[ExampleRecord], edges: &[f64]) -> Result<BinReport, EvalError> {
    validate_edges(edges)?;
    let mut groups: Vec<Vec<&ExampleRecord>> = vec![Vec::new(); edges.len() - 1];
    let mut below = Vec::new();
    let mut above = Vec::new();
    for r in records {
        match bin_index(r.entropy, edges) {
            Ok(i) => groups[i].push(r),
            Err(false) => below.push(r),
            Err(true) => above.push(r),
        }
    }
    Ok(BinReport {
        edges: edges.to_vec(),
        bins: groups.iter().enumerate().map(|(i, g)| metrics(edges[i], edges[i + 1], g)).collect(),
        below: metrics(f64::NEG_INFINITY, edges[0], &below),
        above: metrics(edges[edges.len() - 1], f64::INFINITY, &above),
    })
}

impl BinReport {
    pub fn total(&self) -> usize {
        self.below.count + self.above.count + self.bins.iter().map(|b| b.count).sum::<usize>()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("entropy range      count  mean JSD  accuracy\n");
        let row = |name: String, b: &BinMetrics| format!("{name:<18} {:>5}  {:>8.4}  {:>8.4}\n", b.count, b.mean_jsd, b.accuracy);
        out.push_str(&row(format!("< {:.2}", self.below.hi), &self.below));
        for b in &self.bins {
            out.push_str(&row(format!("[{:.2} - {:.2}]", b.lo, b.hi), b));
        }
        out.push_str(&row(format!("> {:.2}", self.above.lo), &self.above));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_open_convention() {
        let e = DEFAULT_BIN_EDGES;
        assert_eq!(bin_index(0.08, &e), Ok(0));
        assert_eq!(bin_index(0.58, &e), Ok(1));
        assert_eq!(bin_index(0.579_999, &e), Ok(0));
        assert_eq!(bin_index(1.08, &e), Ok(2));
        assert_eq!(bin_index(1.58, &e), Ok(2));
        assert_eq!(bin_index(3f64.log2(), &e), Err(true));
        assert_eq!(bin_index(0.0, &e), Err(false));
    }

    #[test]
    fn bad_edges() {
        for edges in [vec![], vec![0.5], vec![0.5, 0.5], vec![1.0, 0.5], vec![0.0, f64::NAN]] {
            assert!(matches!(validate_edges(&edges), Err(EvalError::BadEdges(_))));
        }
    }
}
