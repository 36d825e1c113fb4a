//! Draw a sparse stable transition matrix, simulate a path and hide entries
//! at random.
//!
//! cargo run --example simulate_and_mask

use varmiss::observation::apply_bernoulli_mask;
use varmiss::var_core::{generate_sparse_transition, simulate_with_burn_in, InnovationSpec, SupportPattern};

fn main() -> varmiss::Result<()> {
    let b = generate_sparse_transition(SupportPattern::RandomSparse, 8, 12, 0.6, 7)?;
    println!("p = {}, nonzeros = {}, spectral radius = {:.4}", b.dim(), b.nnz(), b.spectral_radius());

    let spec = InnovationSpec::gaussian_identity(b.dim());
    let path = simulate_with_burn_in(&b, &spec, 1000, 7, 100)?;
    println!("recursion residual of the simulated path: {:.2e}", path.recursion_residual(b.entries()));

    let masked = apply_bernoulli_mask(&path, 0.3, 11)?;
    println!(
        "missing probability 0.3: observed fraction {:.3}, estimated delta {:.3}",
        masked.observed_fraction(),
        masked.estimate_delta()
    );
    Ok(())
}
