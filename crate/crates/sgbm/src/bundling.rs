use crate::error::{Result, SgbmError};

/// Scalar sort key applied to a path state when forming bundles.
#[derive(Debug, Clone, PartialEq)]
pub enum SortKey {
    /// A single state component (the state itself in one dimension).
    Component(usize),
    /// `sum_i w_i x_i`.
    WeightedSum(Vec<f64>),
    /// `(prod_i x_i)^(1/q)`.
    GeometricMean,
}

impl SortKey {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SortKey::Component(i) => x[*i],
            SortKey::WeightedSum(w) => w.iter().zip(x).map(|(wi, xi)| wi * xi).sum(),
            SortKey::GeometricMean => {
                (x.iter().map(|xi| xi.ln()).sum::<f64>() / x.len() as f64).exp()
            }
        }
    }
}

/// Equal-partition bundle assignment at one time step.
///
/// Paths are sorted by key (ties broken by path index) and sliced into `B`
/// consecutive groups; the remainder `M mod B` is spread one path each over
/// the leading bundles.
#[derive(Debug, Clone)]
pub struct BundleAssignment {
    bundles: Vec<Vec<usize>>,
}

impl BundleAssignment {
    pub fn bundle_count(&self) -> usize {
        self.bundles.len()
    }

    /// Member path indices of bundle `b`, in sort order.
    pub fn members(&self, b: usize) -> &[usize] {
        &self.bundles[b]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.bundles.iter()
    }

    /// Per-path bundle index.
    pub fn membership(&self, paths: usize) -> Vec<usize> {
        let mut out = vec![0; paths];
        for (b, members) in self.bundles.iter().enumerate() {
            for &m in members {
                out[m] = b;
            }
        }
        out
    }
}

/// Partition `M` paths into `B` near-equal bundles by sort key.
pub fn make_bundles<'a, I>(states_at_k: I, sort_key: &SortKey, b: usize) -> Result<BundleAssignment>
where
    I: ExactSizeIterator<Item = &'a [f64]>,
{
    let m = states_at_k.len();
    if b == 0 || b > m {
        return Err(SgbmError::Config(format!(
            "bundle count {b} must be in 1..={m}"
        )));
    }
    let mut keyed: Vec<(f64, usize)> = states_at_k
        .enumerate()
        .map(|(i, x)| (sort_key.eval(x), i))
        .collect();
    for (key, i) in &keyed {
        if !key.is_finite() {
            return Err(SgbmError::NonFiniteData { path: *i });
        }
    }
    keyed.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let base = m / b;
    let remainder = m % b;
    let mut bundles = Vec::with_capacity(b);
    let mut cursor = 0;
    for idx in 0..b {
        let size = base + usize::from(idx < remainder);
        bundles.push(keyed[cursor..cursor + size].iter().map(|&(_, i)| i).collect());
        cursor += size;
    }
    Ok(BundleAssignment { bundles })
}
