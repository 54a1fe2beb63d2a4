//! Brute-force Fock-space g1/g2 next to the closed forms for a few
//! four-mode states.

use latticecorr::correlations::oracle::FockOracle;
use latticecorr::correlations::{g1_of_state, g2_of_state, FieldState, ModeBasis};
use latticecorr::lattice::Statistics;

fn main() -> latticecorr::Result<()> {
    let n = 4;
    let basis = ModeBasis::dimensionless(n);
    let states: [&[usize]; 3] = [&[0, 1], &[0, 2], &[0, 1, 3]];
    for stats in [Statistics::Boson, Statistics::Fermion] {
        let oracle = FockOracle::new(basis, stats)?;
        println!("{stats:?}");
        for modes in states {
            let state = FieldState::from_modes(n, modes, stats)?;
            for l in 0..=n as isize {
                let s = l as f64 * basis.delta_x2;
                let (g1_ref, g2_ref) = oracle.evaluate(&state, s)?;
                let g1 = g1_of_state(&state, &basis, s)?;
                let g2 = g2_of_state(&state, &basis, s)?;
                println!(
                    "  modes {modes:?} l = {l}: g1 = {:+.6}{:+.6}i (oracle {:+.6}{:+.6}i)  g2 = {g2:.6} (oracle {:.6})",
                    g1.re,
                    g1.im,
                    g1_ref.re,
                    g1_ref.im,
                    g2_ref.unwrap_or(f64::NAN)
                );
            }
        }
    }
    Ok(())
}
