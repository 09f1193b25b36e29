mod common;

use std::io::Write;

use common::*;
use sdr_core::bench::{BenchMethod, MethodSettings};
use sdr_core::intrinsic::Gamma;
use sdr_core::realdata::{run_real_data, split, RealDataProtocol, CURVE_CSV_HEADER};
use sdr_core::Dataset;

fn write_csv(rows: usize, seed: u64) -> tempfile::NamedTempFile {
    let mut r = rng(seed);
    let x = gaussian(rows, 5, &mut r);
    let y = &x * gaussian_vec(5, &mut r) + gaussian_vec(rows, &mut r);
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "\"a\";\"b\";\"c\";\"d\";\"e\";\"quality\"").unwrap();
    for i in 0..rows {
        let cells: Vec<String> = (0..5).map(|j| (x[(i, j)] * 3.0 + j as f64).to_string()).collect();
        writeln!(f, "{};{}", cells.join(";"), y[i]).unwrap();
    }
    f
}

#[test]
fn full_width_pca_equals_ols() {
    let f = write_csv(120, 1);
    let d = Dataset::from_csv_path(f.path(), "quality", b';', &[]).unwrap();
    assert_eq!(d.p(), 5);
    let mut proto = RealDataProtocol::default_for(d.n(), d.p(), 7);
    proto.k_values = vec![2, 5];
    let mut s = MethodSettings::new(1);
    s.gamma_grid = vec![Gamma::Finite(0.0), Gamma::Finite(1.0), Gamma::Infinite];
    let rep = run_real_data(&d, &proto, &BenchMethod::ALL, &s).unwrap();
    let pca = rep.point(BenchMethod::Pca, 5).unwrap().test_mse;
    let ols = rep.point(BenchMethod::Ols, 5).unwrap().test_mse;
    assert!((pca - ols).abs() <= 1e-6, "{pca} vs {ols}");
    assert_eq!(rep.curves.len(), 18);
    assert!(rep.curves.iter().all(|c| c.outcome.is_some()));
    let csv = rep.curves_csv().unwrap();
    assert_eq!(csv.lines().next().unwrap(), CURVE_CSV_HEADER.join(","));
    assert_eq!(csv.lines().count(), 19);
    assert_eq!(rep.spectrum.len(), 5);
    assert!(rep.spectrum.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn split_is_seeded_partition() {
    let d = random_dataset(50, 3, 3);
    let (a1, b1) = split(&d, 40, 9).unwrap();
    let (a2, _) = split(&d, 40, 9).unwrap();
    let (a3, _) = split(&d, 40, 10).unwrap();
    assert_eq!((a1.n(), b1.n()), (40, 10));
    assert_eq!(a1.x(), a2.x());
    assert_ne!(a1.x(), a3.x());
    let total: f64 = a1.y().sum() + b1.y().sum();
    assert!((total - d.y().sum()).abs() <= 1e-9);
}

#[test]
fn protocol_validation() {
    let p = RealDataProtocol::default_for(100, 4, 0);
    assert!(p.validate(100, 4).is_ok());
    assert!(p.validate(101, 4).is_err());
    let mut bad = p.clone();
    bad.k_values = vec![5];
    assert!(bad.validate(100, 4).is_err());
}
