//! Occupation and pair-separation distributions pushed through the
//! coherence transforms and back.

use latticecorr::correlations::{self, ModeBasis};
use latticecorr::lattice::{ProbabilityVectors, Statistics};

fn main() -> latticecorr::Result<()> {
    let n = 16;
    let basis = ModeBasis::dimensionless(n);
    let atoms = 4;

    let mut p1 = vec![0.0; n];
    p1[3] = 0.5;
    p1[4] = 0.25;
    p1[11] = 0.25;
    let g1 = correlations::g1_from_p1(&p1, &basis)?;
    let back = correlations::p1_from_g1(&g1)?;
    println!("|g1| at l = 0..4: {:?}", g1.iter().take(5).map(|z| format!("{:.4}", z.norm())).collect::<Vec<_>>());
    println!("p1 round trip, imaginary residue {:.1e}", back.imag_residue);
    for (a, b) in p1.iter().zip(&back.p1).filter(|(a, _)| **a > 0.0) {
        println!("  {a:.4} -> {b:.12}");
    }

    let truth = ProbabilityVectors::random_filling(n, atoms);
    for stats in [Statistics::Boson, Statistics::Fermion] {
        let g2 = correlations::g2_from_p2(&truth.p2, atoms, &basis, stats)?;
        let back = correlations::p2_from_g2(&g2, atoms, stats)?;
        let err = truth.p2.iter().zip(&back.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{stats:?}: g2(0) = {:.6}, p2 round-trip error {err:.1e}", g2[n]);
    }
    Ok(())
}
