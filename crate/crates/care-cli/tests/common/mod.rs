//! Shared fixture helpers for the CLI test binaries.

use std::path::Path;

/// Small all-valid synthetic dataset written as exposure/outcome files.
pub fn write_fixture(dir: &Path) {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let mut exposure = String::from("snp\teffect_allele\tother_allele\tbeta\tse\teaf\n");
    let mut outcome = String::from("snp\teffect_allele\tother_allele\tbeta\tse\teaf\n");
    let theta = 0.1;
    for i in 0..400 {
        let beta_x: f64 = rng.random_range(-0.05..0.05);
        let noise_x: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        let noise_y: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        let eaf: f64 = rng.random_range(0.1..0.45);
        exposure.push_str(&format!(
            "rs{i}\tA\tG\t{}\t0.002\t{eaf:.3}\n",
            beta_x + 0.002 * noise_x
        ));
        outcome.push_str(&format!(
            "rs{i}\tA\tG\t{}\t0.002\t{eaf:.3}\n",
            theta * beta_x + 0.002 * noise_y
        ));
    }
    std::fs::write(dir.join("exposure.tsv"), exposure).unwrap();
    std::fs::write(dir.join("outcome.tsv"), outcome).unwrap();
    std::fs::write(dir.join("ld.tsv"), "snp_a\tsnp_b\tr2\nrs0\trs1\t0.9\n").unwrap();
}
