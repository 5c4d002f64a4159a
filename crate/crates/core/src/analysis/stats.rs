//! Centroid shells and scalar statistics of weight components.

use serde::{Deserialize, Serialize};

use super::kernel::check_points;
use crate::error::{Error, Result};
use crate::vecmath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl GroupSummary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("summary of an empty group".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Ok(Self {
            count: n,
            mean: values.iter().sum::<f64>() / n as f64,
            median,
            min: sorted[0],
            max: sorted[n - 1],
        })
    }
}

/// Distances of two sets of vectors from the midpoint of their centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellStats {
    #[serde(skip)]
    pub centroid_a: Vec<f64>,
    #[serde(skip)]
    pub centroid_b: Vec<f64>,
    #[serde(skip)]
    pub origin: Vec<f64>,
    /// `|c_a - origin|`, which equals `|c_b - origin|`.
    pub centroid_offset: f64,
    pub distances_a: Vec<f64>,
    pub distances_b: Vec<f64>,
    pub summary_a: GroupSummary,
    pub summary_b: GroupSummary,
}

fn centroid<V: AsRef<[f64]>>(set: &[V], dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    for v in set {
        vecmath::axpy(1.0, v.as_ref(), &mut c);
    }
    let n = set.len() as f64;
    c.iter_mut().for_each(|x| *x /= n);
    c
}

pub fn shell_stats<A: AsRef<[f64]>, B: AsRef<[f64]>>(set_a: &[A], set_b: &[B]) -> Result<ShellStats> {
    let dim = check_points(set_a)?;
    let dim_b = check_points(set_b)?;
    if dim != dim_b {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: dim_b,
        });
    }
    let ca = centroid(set_a, dim);
    let cb = centroid(set_b, dim);
    let origin: Vec<f64> = ca.iter().zip(&cb).map(|(a, b)| 0.5 * (a + b)).collect();
    let half_gap: Vec<f64> = ca.iter().zip(&cb).map(|(a, b)| 0.5 * (a - b)).collect();
    let distances_a: Vec<f64> = set_a.iter().map(|v| vecmath::distance(v.as_ref(), &origin)).collect();
    let distances_b: Vec<f64> = set_b.iter().map(|v| vecmath::distance(v.as_ref(), &origin)).collect();
    Ok(ShellStats {
        centroid_offset: vecmath::norm(&half_gap),
        summary_a: GroupSummary::of(&distances_a)?,
        summary_b: GroupSummary::of(&distances_b)?,
        centroid_a: ca,
        centroid_b: cb,
        origin,
        distances_a,
        distances_b,
    })
}

/// CSV with header `set,index,distance`.
pub fn distances_csv(label_a: &str, label_b: &str, stats: &ShellStats) -> String {
    let mut s = String::from("set,index,distance\n");
    for (label, ds) in [(label_a, &stats.distances_a), (label_b, &stats.distances_b)] {
        for (i, d) in ds.iter().enumerate() {
            s.push_str(&format!("{label},{i},{d:e}\n"));
        }
    }
    s
}

/// Mean and population standard deviation of all components of all vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub mean: f64,
    pub std: f64,
    pub n_values: usize,
}

pub fn component_stats<V: AsRef<[f64]>>(set: &[V]) -> Result<ComponentStats> {
    let n_values: usize = set.iter().map(|v| v.as_ref().len()).sum();
    if n_values == 0 {
        return Err(Error::InvalidArgument("component statistics of an empty set".into()));
    }
    let values = || set.iter().flat_map(|v| v.as_ref().iter().copied());
    let mean = values().sum::<f64>() / n_values as f64;
    let var = values().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n_values as f64;
    Ok(ComponentStats {
        mean,
        std: var.sqrt(),
        n_values,
    })
}
