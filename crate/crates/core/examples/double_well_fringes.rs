//! Synthesizes cesium double-well fringes and recovers contrast and phase.

use latticecorr::constants::{CESIUM_MASS, DEFAULT_PACKET_WIDTH};
use latticecorr::wavepacket::{double_well_density, extract_fringe_params, DetectionGrid, DoubleWellState, ExpansionParams};

fn main() -> latticecorr::Result<()> {
    let params = ExpansionParams::new(CESIUM_MASS, 1.0)?;
    let width = DEFAULT_PACKET_WIDTH;
    let separation = 20.0 * width;
    let sigma = params.envelope_width(width);
    let grid = DetectionGrid::symmetric(8.0 * sigma, 4001, params.l_squared)?;
    println!(
        "fringe spacing {:.3} mm under an envelope of {:.3} mm",
        params.fringe_spacing(separation) * 1e3,
        sigma * 1e3
    );

    println!("{:>8} {:>8} {:>12} {:>12} {:>10}", "C in", "phi in", "C fit", "phi fit", "residual");
    for (contrast, phi) in [(1.0, 0.0), (0.8, 1.2), (0.4, 3.0), (0.1, 5.5), (0.05, 2.2)] {
        let state = DoubleWellState::with_contrast(contrast, phi, separation, width)?;
        let density = double_well_density(&state, &params, &grid)?;
        let fit = extract_fringe_params(&density, &grid, &params, separation)?;
        println!(
            "{contrast:>8.3} {phi:>8.3} {:>12.8} {:>12.8} {:>10.1e}",
            fit.contrast,
            fit.phase.unwrap_or(f64::NAN),
            fit.relative_residual
        );
    }
    Ok(())
}
