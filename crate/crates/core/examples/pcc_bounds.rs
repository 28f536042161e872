//! Classification upper bounds: known channel, and the channel perturbed at
//! the data-aided and blind CRBs.

use modclass::crb::{pcc_bound_sim, BoundKind, BoundSetup};
use modclass::signal::Modulation;

fn main() -> modclass::Result<()> {
    let candidates = [Modulation::Bpsk.constellation(), Modulation::Qpsk.constellation()];
    let grid = [-10.0, -5.0, 0.0];
    let setup = BoundSetup {
        n_channels: 100,
        ..BoundSetup::default()
    };
    for kind in [BoundKind::Known, BoundKind::DataAided, BoundKind::Blind] {
        let points = pcc_bound_sim(&candidates, &grid, &setup, kind)?;
        let line: Vec<String> = points
            .iter()
            .map(|p| format!("{:>5} dB {:.3}", p.snr_db, p.pcc))
            .collect();
        println!("{:9} {}", kind.name(), line.join("   "));
    }
    Ok(())
}
