//! Segments a noisy synthetic two-region image with the continuous max-flow
//! Potts model and writes the input and label map as PGM files.
//!
//! ```text
//! cargo run --release --example potts_segmentation -- /tmp/potts
//! ```

use std::path::PathBuf;

use ineqalm::apps::io::{write_pgm, GrayImage};
use ineqalm::apps::potts::{build_potts_problem, label_accuracy, potts_config, solve_potts, SyntheticImage};

fn main() -> ineqalm::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let img = SyntheticImage::two_region(64, 64, 0.2, 7)?;
    let inst = img.instance(0.5)?;
    let problem = build_potts_problem(&inst)?;

    for tau in [1.0, 0.9, 0.8, 0.75] {
        let config = potts_config(&inst, 0.3, tau, 1e-6, 20_000).resolve(&problem)?;
        let res = solve_potts(&inst, &config)?;
        println!(
            "tau {tau:<5} {:?} {:>5} iterations  accuracy {:.4}",
            res.status,
            res.iterations,
            label_accuracy(&res.label_map, &img.truth)
        );
        if tau == 0.75 {
            let labels = res.label_map.iter().map(|&l| l as u16).collect();
            write_pgm(out.join("labels.pgm"), &GrayImage::new(64, 64, 2, labels)?, false)?;
        }
    }
    write_pgm(out.join("input.pgm"), &GrayImage::from_unit(64, 64, 255, &img.image)?, true)?;
    println!("wrote {} and {}", out.join("input.pgm").display(), out.join("labels.pgm").display());
    Ok(())
}
