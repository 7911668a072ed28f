//! Round-trips the supported file formats through a temporary directory.

use ineqalm::apps::io::{read_pgm, read_raw3d, read_svm_csv, write_pgm, write_raw3d, write_svm_csv, GrayImage, Volume};
use ineqalm::apps::svm::generate_gaussian_dataset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("ineqalm-io-example");
    std::fs::create_dir_all(&dir)?;
    let img = GrayImage::new(3, 2, 65535, vec![0, 1, 256, 4095, 40000, 65535])?;
    write_pgm(dir.join("wide.pgm"), &img, true)?;
    assert_eq!(read_pgm(dir.join("wide.pgm"))?, img);

    let vol = Volume {
        dims: [2, 2, 2],
        data: (0..8).map(|i| i as f32 / 8.0).collect(),
    };
    write_raw3d(dir.join("cube.raw3d"), &vol)?;
    assert_eq!(read_raw3d(dir.join("cube.raw3d"))?, vol);

    let data = generate_gaussian_dataset(5, 2, 8.0, 0)?;
    write_svm_csv(dir.join("svm.csv"), &data)?;
    assert_eq!(read_svm_csv(dir.join("svm.csv"))?.labels(), data.labels());
    println!("round trips ok in {}", dir.display());
    Ok(())
}
