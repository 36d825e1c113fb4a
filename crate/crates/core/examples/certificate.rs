//! Error-bound certificate: admissible lambda, sample-size condition and
//! predicted errors for a design.
//!
//! cargo run --example certificate

use varmiss::spectral::GridConfig;
use varmiss::theory::{theorem1_certificate, CertificateInput, Constants};
use varmiss::var_core::{generate_sparse_transition, InnovationSpec, SupportPattern};

fn main() -> varmiss::Result<()> {
    let b = generate_sparse_transition(SupportPattern::RandomSparse, 20, 10, 0.5, 3)?;
    let spec = InnovationSpec::gaussian_identity(20);
    for delta in [0.0, 0.1, 0.25] {
        let cert = theorem1_certificate(&CertificateInput {
            b: b.entries(),
            spec: &spec,
            delta,
            n: 8000,
            b0: b.entries().norm(),
            lambda: None,
            constants: Constants::default(),
            grid: GridConfig::default(),
        })?;
        println!(
            "delta {delta:.2}: lambda_min {:.3e}, sample size ok {}, predicted Frobenius error {:.3e}, \
             false positive bound {:.1}",
            cert.lambda_min, cert.sample_size_ok, cert.predicted_f_error, cert.predicted_fp_bound
        );
    }
    Ok(())
}
