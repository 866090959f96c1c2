//! Effect of the propagation weight η on the smoothness of the learned
//! potential: Dirichlet energy per η on the S-maze.

use graph_shaping::harness::{eta_sweep, ETA_GRID};

fn main() -> graph_shaping::Result<()> {
    let out = std::env::temp_dir().join("eta_sweep_example");
    for point in eta_sweep("smaze", &ETA_GRID, &[0, 1, 2], 1000, &out)? {
        let mean = point.energies.iter().sum::<f64>() / point.energies.len() as f64;
        println!("eta {:>5}: dirichlet energy {mean:.4e}", point.eta);
        if let Some(path) = point.heatmap {
            println!("           heatmap {}", path.display());
        }
    }
    Ok(())
}
