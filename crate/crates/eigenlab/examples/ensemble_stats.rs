//! Condition-number quantiles for the seven studied ensembles, plus the
//! positive-definite fraction of sign-symmetric spectra (≈ 2⁻ⁿ).
//!
//!     cargo run --release --example ensemble_stats

use eigenlab::ensembles::{positive_fraction, EnsembleConfig, EnsembleKind};
use eigenlab::oodlab::{condition_table, TableFormat};

fn main() {
    let n = 5;
    let count = 10_000;
    let seed = 123;
    println!("condition numbers of {count} random {n}x{n} matrices per ensemble:\n");
    let table = condition_table(
        &EnsembleKind::STUDY,
        n,
        count,
        seed,
        None,
        TableFormat::Markdown,
    )
    .expect("stats succeed");
    println!("{table}");

    println!("fraction of draws with all-positive eigenvalues (expect 2^-n):");
    for n in [5usize, 8] {
        let cfg = EnsembleConfig::new(EnsembleKind::Gaussian, n, 7);
        let f = positive_fraction(&cfg, 20_000).expect("sampling succeeds");
        println!(
            "  gaussian n={n}: {f:.4}  (2^-{n} = {:.4})",
            2f64.powi(-(n as i32))
        );
    }
}
