use serde::Serialize;

/// Labelled particle trajectories sampled on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowPathRecord {
    /// Initial points `u_k`, one per label.
    pub labels: Vec<f64>,
    /// Increasing, starts at 0 and ends at the horizon.
    pub times: Vec<f64>,
    /// `values[i][k]` is the position of label `k` at `times[i]`.
    pub values: Vec<Vec<f64>>,
    /// `cluster_ids[i][k]` is the lowest label sharing label `k`'s cluster.
    pub cluster_ids: Vec<Vec<u32>>,
    pub cluster_counts: Vec<usize>,
}

impl FlowPathRecord {
    pub(crate) fn with_capacity(labels: &[f64], records: usize) -> Self {
        FlowPathRecord {
            labels: labels.to_vec(),
            times: Vec::with_capacity(records),
            values: Vec::with_capacity(records),
            cluster_ids: Vec::with_capacity(records),
            cluster_counts: Vec::with_capacity(records),
        }
    }

    pub(crate) fn push(&mut self, time: f64, values: Vec<f64>, cluster_ids: Vec<u32>, clusters: usize) {
        self.times.push(time);
        self.values.push(values);
        self.cluster_ids.push(cluster_ids);
        self.cluster_counts.push(clusters);
    }

    /// Index of the recorded time equal to `t` up to a relative 1e−9.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * t.abs().max(f64::MIN_POSITIVE);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("record has at least the initial time")
    }

    pub fn final_values(&self) -> &[f64] {
        self.values.last().expect("record has at least the initial time")
    }

    /// Label order implies position order at every recorded time.
    pub fn is_monotone(&self) -> bool {
        self.values.iter().all(|row| row.windows(2).all(|w| w[0] <= w[1]))
    }

    pub fn cluster_counts_non_increasing(&self) -> bool {
        self.cluster_counts.windows(2).all(|w| w[1] <= w[0])
    }

    /// Labels that share a cluster sit at one position, and stay together at
    /// every later recorded time.
    pub fn coalescence_is_absorbing(&self) -> bool {
        for (i, ids) in self.cluster_ids.iter().enumerate() {
            let row = &self.values[i];
            for k in 1..ids.len() {
                if ids[k] == ids[k - 1] && row[k] != row[k - 1] {
                    return false;
                }
                if i > 0 && self.cluster_ids[i - 1][k] == self.cluster_ids[i - 1][k - 1] && ids[k] != ids[k - 1] {
                    return false;
                }
            }
        }
        true
    }
}

/// A flow path and its tangent process driven by jointly Gaussian increments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledPathRecord {
    pub x: FlowPathRecord,
    /// Never coalesces: one cluster per label at every time.
    pub y: FlowPathRecord,
}
