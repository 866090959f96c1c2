//! Prints the three reference potentials on FourRooms as ASCII heat maps:
//! forward-backward, a GCN trained on the full transition graph, and
//! negative L2 distance to the goal.

use graph_shaping::gcn::GcnConfig;
use graph_shaping::harness::{compare_potentials, full_graph_gcn, HeatmapGrid};
use graph_shaping::inference::{alpha_beta_potential, Collapse};
use graph_shaping::mdp::build_fourrooms;
use graph_shaping::shaping::{l2_potential_for, PotentialTable};

const SHADES: &[u8] = b" .:-=+*#%@";

fn render(name: &str, phi: &PotentialTable, grid: &HeatmapGrid) {
    println!("{name}");
    let (lo, hi) = phi.to_vec().iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    for y in 0..grid.height() {
        let row: String = (0..grid.width())
            .map(|x| match grid.get(x, y) {
                v if v.is_nan() => '█',
                v => {
                    let t = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
                    SHADES[(t * (SHADES.len() - 1) as f64).round() as usize] as char
                }
            })
            .collect();
        println!("  {row}");
    }
}

fn main() -> graph_shaping::Result<()> {
    let mdp = build_fourrooms();
    let layout = mdp.layout().expect("grid environment");
    let ab = alpha_beta_potential(&mdp, Collapse::TimeAverage)?;
    let gcn = full_graph_gcn(&mdp, &GcnConfig::default(), 5000)?;
    let l2 = l2_potential_for(&mdp)?;
    for (name, phi) in [("forward-backward", &ab), ("gcn", &gcn), ("l2", &l2)] {
        render(name, phi, &HeatmapGrid::from_potential(phi, layout)?);
    }
    let c = compare_potentials(&gcn, &ab)?;
    println!("gcn vs forward-backward: spearman {:.3}, max gap {:.3}", c.spearman, c.max_abs_diff);
    Ok(())
}
