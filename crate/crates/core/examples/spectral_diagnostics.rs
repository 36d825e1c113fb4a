//! Unit-circle quantities of a transition matrix and the norm bounds that
//! relate them to its spectrum.
//!
//! cargo run --example spectral_diagnostics

use varmiss::spectral::{basu_bounds, diagnostics, GridConfig};
use varmiss::var_core::{generate_sparse_transition, SupportPattern};

fn main() -> varmiss::Result<()> {
    let grid = GridConfig::default();
    for (pattern, k) in [(SupportPattern::RandomSparse, 12), (SupportPattern::Chain, 9), (SupportPattern::InStar, 9)] {
        let b = generate_sparse_transition(pattern, 10, k, 0.6, 1)?;
        let d = diagnostics(b.entries(), &grid)?;
        println!(
            "{:<13} rho {:.3}  vartheta0 {:.3}  vartheta1 {:.3}  vartheta2 {:.3}  theta0 {:.3}  kappa0 {:.3}",
            pattern.as_str(),
            d.rho,
            d.vartheta0,
            d.vartheta1,
            d.vartheta2,
            d.theta0,
            d.kappa0
        );
        let report = basu_bounds(b.entries(), &grid)?;
        for c in report.checks.iter().filter(|c| c.applicable) {
            println!("    {:<40} {:>10.4} <= {:<10.4} {}", c.name, c.lhs, c.rhs, c.satisfied);
        }
    }
    Ok(())
}
