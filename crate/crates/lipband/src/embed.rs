//! Arm embeddings in `[0,1]^D` with cached pairwise Euclidean distances.

use crate::{Error, Result};

/// Positions of the `K` arms in `[0,1]^D`, plus the full distance matrix and
/// the minimum positive pairwise distance.
///
/// Immutable after construction; duplicate points are rejected so the minimum
/// gap is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmEmbedding {
    points: Vec<Vec<f64>>,
    dist: Vec<f64>, // K*K, row-major
    delta_x: f64,
}

impl ArmEmbedding {
    /// Builds an embedding from `K` coordinate vectors of equal dimension.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let k = points.len();
        if k == 0 {
            return Err(Error::InvalidInput("embedding needs at least one arm".into()));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "arm {i} has dimension {} but arm 0 has {dim}",
                    p.len()
                )));
            }
            for &c in p {
                if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                    return Err(Error::InvalidInput(format!(
                        "arm {i} has coordinate {c} outside [0,1]"
                    )));
                }
            }
        }

        let mut dist = vec![0.0; k * k];
        let mut delta_x = f64::INFINITY;
        for i in 0..k {
            for j in (i + 1)..k {
                let d = euclidean(&points[i], &points[j]);
                if d == 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "arms {i} and {j} share the same embedding point"
                    )));
                }
                dist[i * k + j] = d;
                dist[j * k + i] = d;
                delta_x = delta_x.min(d);
            }
        }
        if k == 1 {
            delta_x = f64::INFINITY;
        }

        Ok(ArmEmbedding { points, dist, delta_x })
    }

    /// Convenience constructor for one-dimensional embeddings.
    pub fn line(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| vec![x]).collect())
    }

    /// Number of arms `K`.
    pub fn num_arms(&self) -> usize {
        self.points.len()
    }

    /// Embedding dimension `D`.
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Euclidean distance between arms `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.points.len() + j]
    }

    /// Smallest positive pairwise distance.
    pub fn delta_x(&self) -> f64 {
        self.delta_x
    }

    /// Raw coordinates of arm `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// True if the embedding is one-dimensional with strictly increasing
    /// coordinates (the layout required by the chain instance generator).
    pub fn is_sorted_line(&self) -> bool {
        self.dim() == 1
            && self
                .points
                .windows(2)
                .all(|w| w[0][0] < w[1][0])
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn line_embedding_distances() {
        let emb = ArmEmbedding::line(&[0.0, 0.8, 0.85, 0.9, 0.95, 1.0]).unwrap();
        assert_eq!(emb.num_arms(), 6);
        assert_eq!(emb.dim(), 1);
        assert!((emb.dist(0, 1) - 0.8).abs() < 1e-15);
        assert!((emb.delta_x() - 0.05).abs() < 1e-12);
        assert!(emb.is_sorted_line());
    }

    #[test]
    fn duplicate_points_rejected() {
        assert!(ArmEmbedding::line(&[0.1, 0.1, 0.5]).is_err());
    }

    #[test]
    fn out_of_range_coordinates_rejected() {
        assert!(ArmEmbedding::line(&[0.0, 1.5]).is_err());
        assert!(ArmEmbedding::new(vec![vec![0.2, f64::NAN]]).is_err());
    }

    #[test]
    fn ragged_dimensions_rejected() {
        assert!(ArmEmbedding::new(vec![vec![0.1], vec![0.2, 0.3]]).is_err());
    }

    proptest! {
        #[test]
        fn distance_matrix_consistency(
            coords in proptest::collection::vec(
                proptest::collection::vec(0.0f64..=1.0, 2), 2..6)
        ) {
            if let Ok(emb) = ArmEmbedding::new(coords.clone()) {
                let k = emb.num_arms();
                let mut min_seen = f64::INFINITY;
                for i in 0..k {
                    prop_assert_eq!(emb.dist(i, i), 0.0);
                    for j in 0..k {
                        prop_assert_eq!(emb.dist(i, j), emb.dist(j, i));
                        let direct = euclidean(&coords[i], &coords[j]);
                        prop_assert!((emb.dist(i, j) - direct).abs() < 1e-12);
                        if i != j {
                            min_seen = min_seen.min(emb.dist(i, j));
                        }
                    }
                }
                prop_assert_eq!(emb.delta_x(), min_seen);
                prop_assert!(emb.delta_x() > 0.0);
            }
        }
    }
}
