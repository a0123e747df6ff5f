//! √MISE / √DPE against noiseless ground truth, k-fold model selection and
//! repeat-run aggregation.

mod cv;
mod evaluate;
mod metrics;
mod predictor;
mod report;

pub use cv::{cross_validate, CvCandidate, CvOutcome};
pub use evaluate::{evaluate_model, CurveEval};
pub use metrics::{dpe, mean_ci, mise, rmise, trapezoid};
pub use predictor::{ConstantPredictor, CurvePredictor, OraclePredictor};
pub use report::{
    aggregate, write_curves, Aggregate, EvalReport, EvalRow, CURVE_HEADER, REPORT_HEADER,
};
