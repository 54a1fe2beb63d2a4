//! Coincidence period and fringe-envelope width for a few atomic species
//! after one second of free flight.

use latticecorr::constants::{self, DEFAULT_LATTICE_CONST, DEFAULT_PACKET_WIDTH};
use latticecorr::lattice::{LatticeConfig, Statistics};
use latticecorr::wavepacket::{resolution_figures, ExpansionParams};

fn main() -> latticecorr::Result<()> {
    let lattice = LatticeConfig::new(256, DEFAULT_LATTICE_CONST, 0.1, Statistics::Boson)?;
    println!("{:<10} {:>12} {:>10} {:>10}", "species", "L^2 (m^2)", "Λ (mm)", "σ (mm)");
    for species in ["cesium", "rb87", "na23", "ne20", "he4"] {
        let mass = constants::species_mass(species).expect("known species");
        let params = ExpansionParams::new(mass, 1.0)?;
        let r = resolution_figures(&lattice, DEFAULT_PACKET_WIDTH, &params)?;
        println!(
            "{species:<10} {:>12.4e} {:>10.2} {:>10.2}",
            params.l_squared,
            r.coincidence_period * 1e3,
            r.envelope_width * 1e3
        );
    }
    Ok(())
}
