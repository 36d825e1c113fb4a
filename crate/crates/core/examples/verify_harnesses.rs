//! Monte Carlo harnesses: restricted eigenvalue sampling, the deviation
//! statistic and quadratic-form concentration.
//!
//! cargo run --release --example verify_harnesses

use nalgebra::DVector;
use varmiss::observation::{apply_bernoulli_mask, build_moments, Scaling};
use varmiss::theory::{check_re, deviation_stat, mc_concentration, ConcentrationConfig, ReSampler};
use varmiss::var_core::{generate_sparse_transition, simulate_with_burn_in, InnovationSpec, SupportPattern};

fn main() -> varmiss::Result<()> {
    let p = 6;
    let b = generate_sparse_transition(SupportPattern::RandomSparse, p, 3, 0.5, 2)?;
    let spec = InnovationSpec::gaussian_identity(p);

    let path = simulate_with_burn_in(&b, &spec, 2000, 2, 100)?;
    let m = build_moments(&apply_bernoulli_mask(&path, 0.2, 2)?, Scaling::Unbiased)?;
    let re = check_re(&m.q, 0.5, 0.05, ReSampler::SparseRandom, 2000, 2, 2)?;
    println!("restricted eigenvalue: {} samples, {} violations, alpha_hat {:.4}", re.samples, re.violations, re.alpha_hat);
    println!("deviation ||B0 Q - L||_inf = {:.4}", deviation_stat(b.entries(), &m)?);

    let v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
    for n in [250, 1000] {
        let tails = mc_concentration(&b, &spec, &v, &ConcentrationConfig::new(0.2, n, 300, 5))?;
        println!(
            "n = {n}: median |quadratic deviation| {:.4}, median |diagonal deviation| {:.4}",
            tails.median_abs_quadratic, tails.median_abs_diagonal
        );
    }
    Ok(())
}
