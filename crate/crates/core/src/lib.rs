//! Sparse covariance estimation by truncated pairwise likelihood.
//!
//! Pairwise Gaussian likelihood terms are kept or dropped by minimizing an
//! L1-penalized quadratic criterion over their weights; the covariance
//! estimate keeps `S_jk` exactly for the pairs whose weight survives and is
//! zero elsewhere. The penalty level is picked so that every surviving pair
//! passes a chi-square(1) test.
//!
//! ```no_run
//! use tplcov::{tpl_estimate, DataMatrix, EstimateConfig, Penalty};
//!
//! let data = DataMatrix::from_rows(&[vec![0.1, 0.3], vec![-1.2, -0.8], vec![0.7, 0.2]]).unwrap();
//! let fit = tpl_estimate(&data, Penalty::Alpha(0.1), &EstimateConfig::default()).unwrap();
//! println!("lambda = {}, {} pairs", fit.lambda_hat, fit.support_size());
//! ```

pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod matrix;
pub mod optimizer;
pub mod quantile;
pub mod scores;
pub mod select;
pub mod sim;
pub mod vech;

pub use error::{Result, TplError};
pub use io::{read_data_csv, write_triplet, MatrixFormat};
pub use matrix::{cholesky_factor, sample_covariance, Cholesky, DataMatrix, SymMatrix};
pub use optimizer::{
    closed_form_restricted, coordinate_descent, kkt_residual, objective, soft_threshold, CdResult,
    OptimizerConfig,
};
pub use quantile::{chisq1_quantile, normal_quantile};
pub use scores::{build_score_covariance, marginal_score, pairwise_score, ScoreCov, SparseScoreVector};
pub use select::{
    adjusted_se, chi_square_stat, lambda_max, select_lambda, tpl_estimate, AdjustedSe,
    EstimateConfig, Penalty, TplFit,
};
pub use sim::{
    gen_block_diagonal, gen_sparse_random, sample_mvn, support_metrics, CovSpec, SeedStream,
    Structure, SupportMetrics, TruthSupport,
};
pub use vech::VechIndex;
