/// A maximal run of labels `first..=last` sharing one position.
///
/// Monotonicity of the flow means clusters are always contiguous label
/// ranges, so a cluster is just its endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub first: usize,
    pub last: usize,
    pub position: f64,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Positions of the labelled particles at one instant.
#[derive(Clone, Debug)]
pub struct FlowState {
    labels: Vec<f64>,
    clusters: Vec<Cluster>,
}

impl FlowState {
    /// Every label starts as its own cluster; coincident starts merge at once.
    pub fn new(labels: &[f64], merge_eps: f64) -> Self {
        let clusters = labels
            .iter()
            .enumerate()
            .map(|(i, &u)| Cluster {
                first: i,
                last: i,
                position: u,
            })
            .collect();
        let mut state = FlowState {
            labels: labels.to_vec(),
            clusters,
        };
        state.coalesce(merge_eps);
        state
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_positions(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.position).collect()
    }

    /// Adds `increments[c]` to cluster `c`, then restores monotonicity.
    pub fn advance(&mut self, increments: &[f64], merge_eps: f64) {
        debug_assert_eq!(increments.len(), self.clusters.len());
        for (c, dx) in self.clusters.iter_mut().zip(increments) {
            c.position += dx;
        }
        self.coalesce(merge_eps);
    }

    /// Merges adjacent clusters that crossed, touched, or came within
    /// `merge_eps`. A merged cluster sits at the mean of the two positions;
    /// merges cascade leftwards until the sequence is strictly increasing.
    pub fn coalesce(&mut self, merge_eps: f64) {
        let must_merge = |lower: f64, upper: f64| {
            let gap = upper - lower;
            gap <= 0.0 || gap < merge_eps
        };
        let mut merged: Vec<Cluster> = Vec::with_capacity(self.clusters.len());
        for &c in &self.clusters {
            let mut cur = c;
            while let Some(prev) = merged.last() {
                if !must_merge(prev.position, cur.position) {
                    break;
                }
                cur = Cluster {
                    first: prev.first,
                    last: cur.last,
                    position: 0.5 * (prev.position + cur.position),
                };
                merged.pop();
            }
            merged.push(cur);
        }
        self.clusters = merged;
    }

    /// Per-label positions, written into `out`.
    pub fn write_positions(&self, out: &mut Vec<f64>) {
        out.clear();
        for c in &self.clusters {
            out.extend(std::iter::repeat(c.position).take(c.len()));
        }
    }

    /// Per-label cluster ids (the lowest label in the cluster).
    pub fn write_cluster_ids(&self, out: &mut Vec<u32>) {
        out.clear();
        for c in &self.clusters {
            out.extend(std::iter::repeat(c.first as u32).take(c.len()));
        }
    }
}
