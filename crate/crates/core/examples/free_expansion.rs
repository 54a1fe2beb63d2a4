//! FFT free expansion of a Gaussian packet compared with its closed-form
//! far field, in scaled units (sigma' = 1, L^2 = 1).

use latticecorr::wavepacket::{free_expand, gaussian_far_field, ExpansionParams, LocalWavepacket};

fn main() -> latticecorr::Result<()> {
    let params = ExpansionParams::scaled(1.0)?;
    let packet = LocalWavepacket::gaussian(1.0, 0.125, 256, 0.5)?;
    let field = free_expand(&packet, &params)?;
    println!("far-field ratio (8 sigma')^2 / L^2 = {:.1}", field.far_field_ratio);
    println!("detected norm = {:.12}", field.norm());

    let peak = field.psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for (i, z) in field.psi.iter().enumerate() {
        if z.norm() > 1e-6 * peak {
            let want = gaussian_far_field(field.grid.position(i), 1.0, 0.5, &params);
            worst = worst.max((z - want).norm() / want.norm());
        }
    }
    println!("max relative deviation from closed form: {worst:.2e}");

    let density = field.density();
    let top = density.iter().cloned().fold(0.0, f64::max);
    let visible: Vec<usize> = (0..density.len()).filter(|&i| density[i] > 1e-3 * top).collect();
    for &i in visible.iter().step_by((visible.len() / 12).max(1)) {
        println!("x = {:>8.4}  |psi|^2 = {:.6e}", field.grid.position(i), density[i]);
    }
    Ok(())
}
