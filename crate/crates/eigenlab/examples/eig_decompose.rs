//! Sample a random symmetric matrix, eigendecompose it, and verify the
//! decomposition: residual, eigenvector orthogonality, and the round trip
//! back through reassembly.
//!
//!     cargo run --example eig_decompose

use eigenlab::ensembles::{sample_matrix, EnsembleConfig, EnsembleKind};
use eigenlab::linalg::{cond, eig_sym, rel_l1, Matrix};

fn print_matrix(label: &str, m: &Matrix) {
    println!("{label}:");
    for i in 0..m.n() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:9.4}")).collect();
        println!("  [{}]", row.join(", "));
    }
}

fn main() {
    let cfg = EnsembleConfig::new(EnsembleKind::Semicircle, 5, 42);
    let sample = sample_matrix(&cfg, 0).expect("sampling succeeds");
    let m = sample.symmetric().expect("semicircle is symmetric");
    print_matrix("M (5x5 Wigner draw)", m);

    let eig = eig_sym(m).expect("Jacobi converges");
    let lambda: Vec<String> = eig
        .spectrum
        .values()
        .iter()
        .map(|v| format!("{v:9.4}"))
        .collect();
    println!("\neigenvalues (sorted): [{}]", lambda.join(", "));
    print_matrix("H (columns are eigenvectors)", &eig.basis);

    // ‖HᵀMH − diag(Λ)‖₁ / ‖Λ‖₁
    let ht_m_h = eig.basis.transpose().matmul(m).matmul(&eig.basis);
    let resid = rel_l1(
        ht_m_h.entries(),
        Matrix::from_diag(eig.spectrum.values()).entries(),
    )
    .unwrap();
    println!("\ndiagonalization residual: {resid:.2e}");
    println!("cond(H): {:.12} (1 = orthogonal)", cond(&eig.basis).unwrap());
    println!("cond(M): {:.2}", cond(m).unwrap());

    let back = eig.reassemble().expect("basis is orthogonal");
    let roundtrip = rel_l1(back.entries(), m.entries()).unwrap();
    println!("reassembly H·diag(Λ)·Hᵀ vs M: {roundtrip:.2e} relative L1");
}
