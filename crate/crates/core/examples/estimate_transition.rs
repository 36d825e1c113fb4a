//! Fit a transition matrix from a partially observed path, then threshold
//! the estimate to recover its support.
//!
//! cargo run --example estimate_transition

use varmiss::estimator::{hard_threshold, solve, EstimatorConfig};
use varmiss::observation::{apply_bernoulli_mask, build_moments, Scaling};
use varmiss::var_core::{generate_sparse_transition, simulate_with_burn_in, InnovationSpec, SupportPattern};

fn main() -> varmiss::Result<()> {
    let (p, k, n, delta) = (20, 10, 8000, 0.1);
    let b = generate_sparse_transition(SupportPattern::RandomSparse, p, k, 0.5, 3)?;
    let path = simulate_with_burn_in(&b, &InnovationSpec::gaussian_identity(p), n, 3, 100)?;
    let masked = apply_bernoulli_mask(&path, delta, 3)?;
    let m = build_moments(&masked, Scaling::Unbiased)?;

    let lambda = 4.0 * ((p as f64).ln() / n as f64).sqrt();
    let truth = b.entries();
    let est = solve(&m, &EstimatorConfig::regularized_ball(lambda, truth.norm(), k))?;
    println!(
        "lambda = {lambda:.4}: {} iterations, converged = {}, objective {:.6}",
        est.iterations,
        est.converged,
        est.final_objective()
    );
    println!("Frobenius error {:.4}", (&est.b_hat - truth).norm());

    let (_, support) = hard_threshold(&est.b_hat, lambda, Some(truth))?;
    println!(
        "support: kept {}, false positives {:?}, false negatives {:?}",
        support.kept, support.false_positives, support.false_negatives
    );
    Ok(())
}
