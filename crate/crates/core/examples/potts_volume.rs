//! Four-label segmentation of a nested-cube 3D volume.

use ineqalm::apps::potts::{build_potts_problem, label_accuracy, potts_config, solve_potts, SyntheticImage};

fn main() -> ineqalm::Result<()> {
    let img = SyntheticImage::nested_volume(16, 4, 0.1, 3)?;
    let inst = img.instance(0.05)?;
    let problem = build_potts_problem(&inst)?;
    println!("grid {:?}, {} labels, rho bound {}", inst.grid().dims(), inst.labels(), inst.rho_bound());
    let config = potts_config(&inst, 0.3, 0.8, 1e-6, 20_000).resolve(&problem)?;
    let start = std::time::Instant::now();
    let res = solve_potts(&inst, &config)?;
    println!(
        "{:?} after {} iterations in {:.2?}, accuracy {:.4}",
        res.status,
        res.iterations,
        start.elapsed(),
        label_accuracy(&res.label_map, &img.truth)
    );
    Ok(())
}
