use serde::{Deserialize, Serialize};

use crate::metric::{MetricError, MetricSpace, Point};
use crate::tolerance;

/// True agent locations and the prediction of the optimal facility, all in
/// one metric space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub metric: MetricSpace,
    pub locations: Vec<Point>,
    pub prediction: Point,
}

impl Instance {
    /// Validates every point and stores canonical forms.
    pub fn new(metric: MetricSpace, locations: Vec<Point>, prediction: Point) -> Result<Self, MetricError> {
        if locations.is_empty() {
            return Err(MetricError::InvalidPoint("instance needs at least one agent".into()));
        }
        let locations = locations
            .iter()
            .map(|p| metric.canonicalize(p))
            .collect::<Result<Vec<_>, _>>()?;
        let prediction = metric.canonicalize(&prediction)?;
        Ok(Self {
            metric,
            locations,
            prediction,
        })
    }

    pub fn n(&self) -> usize {
        self.locations.len()
    }

    pub fn with_prediction(&self, prediction: Point) -> Result<Self, MetricError> {
        Self::new(self.metric.clone(), self.locations.clone(), prediction)
    }

    /// Precomputed distances used by every equilibrium routine.
    pub fn geometry(&self) -> Geometry {
        let n = self.n();
        let d = |a: &Point, b: &Point| self.metric.distance_unchecked(a, b);
        let to_prediction: Vec<f64> = self.locations.iter().map(|l| d(l, &self.prediction)).collect();
        let mut pairwise = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = d(&self.locations[i], &self.locations[j]);
                pairwise[i][j] = v;
                pairwise[j][i] = v;
            }
        }
        let scale = tolerance::scale_of(to_prediction.iter().copied());
        Geometry {
            to_prediction,
            pairwise,
            scale,
        }
    }

    /// The report of agent `i` at distance `y` from the prediction on the
    /// canonical shortest path from the prediction to the agent's location.
    pub fn path_report(&self, i: usize, y: f64, t_i: f64) -> Point {
        self.metric
            .point_on_path_unchecked(&self.prediction, &self.locations[i], y.clamp(0.0, t_i), t_i)
    }

    /// Prediction cost `SC(prediction, locations) = sum_i t_i`.
    pub fn prediction_cost(&self) -> f64 {
        self.locations
            .iter()
            .map(|l| self.metric.distance_unchecked(l, &self.prediction))
            .sum()
    }
}

/// Distances that stay fixed while agents change their reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// `t_i`: distance from the prediction to agent `i`'s true location.
    pub to_prediction: Vec<f64>,
    /// `d_ij`: distance between true locations.
    pub pairwise: Vec<Vec<f64>>,
    /// `max(1, max_i t_i)`.
    pub scale: f64,
}

impl Geometry {
    pub fn eps(&self) -> f64 {
        tolerance::EPS_PNE * self.scale
    }

    /// `sum_{i,j} d_ij`.
    pub fn pairwise_total(&self) -> f64 {
        self.pairwise.iter().flatten().sum()
    }
}
