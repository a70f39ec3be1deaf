//! Assignment priorities: the weight-over-distance heuristic rule and the
//! learned graph scoring model, plus teacher-label generation and the
//! training loop.

pub mod model;
pub mod teacher;
pub mod train;

pub use model::{
    cache_node_embeddings, model_forward, scaled_priority, EncoderOutput, ModelConfig, ScoreModel,
    ScoreModelGrad,
};
pub use teacher::{make_teacher_labels, TeacherConfig, TrainSample};
pub use train::{train, TrainConfig, TrainHistory};

use crate::instance::ProblemInstance;
use crate::nn::matrix::DenseMatrix;
use crate::solver::Centers;

/// Distance clamp for the heuristic rule; keeps a point coincident with a
/// center from dividing by zero.
pub const PRIORITY_DIST_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorityKind {
    Heuristic,
    /// Log-sigmoid scores in (-inf, 0].
    Neural,
    /// Neural probabilities multiplied elementwise with heuristic values.
    NeuralScaled,
}

/// n x K matrix of assignment priorities, one column per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityMatrix {
    pub values: DenseMatrix,
    pub kind: PriorityKind,
}

/// The weight-over-distance priority: `q_i / max(d(x_i, mu_k), eps)`.
pub fn heuristic_priority(inst: &ProblemInstance, centers: &Centers) -> PriorityMatrix {
    let n = inst.n();
    let k = centers.len();
    let mut values = DenseMatrix::zeros(n, k);
    for i in 0..n {
        let q = inst.weight(i);
        for c in 0..k {
            let d = inst.dist_to(i, centers.position(c)).max(PRIORITY_DIST_EPS);
            values.set(i, c, q / d);
        }
    }
    PriorityMatrix {
        values,
        kind: PriorityKind::Heuristic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Centers;

    #[test]
    fn heuristic_direct_values() {
        let inst = ProblemInstance::new("t", 2, 1, 10.0, vec![0.0, 0.0], vec![2.0]).unwrap();
        let centers = Centers::from_positions(2, vec![0.5, 0.0]);
        let p = heuristic_priority(&inst, &centers);
        assert!((p.values.get(0, 0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_zero_priority() {
        let inst =
            ProblemInstance::new("t", 2, 1, 10.0, vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0]).unwrap();
        let centers = Centers::from_positions(2, vec![0.5, 0.0, 2.0, 2.0]);
        let p = heuristic_priority(&inst, &centers);
        assert_eq!(p.values.get(0, 0), 0.0);
        assert_eq!(p.values.get(0, 1), 0.0);
    }

    #[test]
    fn equal_weights_inverse_distance_ratio() {
        let inst = ProblemInstance::new("t", 2, 1, 10.0, vec![0.0, 0.0], vec![1.0]).unwrap();
        let centers = Centers::from_positions(2, vec![1.0, 0.0, 2.0, 0.0]);
        let p = heuristic_priority(&inst, &centers);
        assert!((p.values.get(0, 0) / p.values.get(0, 1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_center_is_clamped() {
        let inst = ProblemInstance::new("t", 2, 1, 10.0, vec![0.3, 0.3], vec![1.0]).unwrap();
        let centers = Centers::from_positions(2, vec![0.3, 0.3]);
        let p = heuristic_priority(&inst, &centers);
        assert!(p.values.get(0, 0).is_finite());
        assert!((p.values.get(0, 0) - 1.0 / PRIORITY_DIST_EPS).abs() < 1.0);
    }
}
