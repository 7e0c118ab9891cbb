use nibt_core::intrusive;
use nibt_core::reduction::{error_grid, reduce_real, relative_hinf_error};
use nibt_core::sampling::{conjugate_points, generate_samples, logspace, read_samples, write_samples};
use nibt_core::variants::compute_factors;
use nibt_core::{loewner, models, StateSpace, Variant, VariantConfig};
use serde_json::json;

#[test]
fn samples_survive_a_file_round_trip_bit_for_bit() {
    let ss = models::synthetic(9, 2, 3, 5, false).unwrap();
    let set = generate_samples(&ss, &conjugate_points(&logspace(0.1, 10.0, 4), 0.7), &conjugate_points(&logspace(0.2, 20.0, 3), 0.7))
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    write_samples(&set, &path).unwrap();
    assert_eq!(read_samples(&path).unwrap(), set);
}

#[test]
fn rom_file_reproduces_the_in_memory_model() {
    let ss = models::synthetic(14, 1, 1, 2, false).unwrap();
    let right = conjugate_points(&logspace(0.05, 20.0, 7), 0.0);
    let left = conjugate_points(&logspace(0.06, 24.0, 7), 0.0);
    let dir = tempfile::tempdir().unwrap();
    let sample_path = dir.path().join("s.json");
    write_samples(&generate_samples(&ss, &right, &left).unwrap(), &sample_path).unwrap();

    let q = loewner::assemble(&read_samples(&sample_path).unwrap()).unwrap();
    let cfg = VariantConfig::ddp(Variant::Bt, 1e-4);
    let rom = reduce_real(&q, &compute_factors(&q, &cfg).unwrap(), 4).unwrap();
    let rom_path = dir.path().join("rom.json");
    rom.write(&rom_path, &json!({ "variant": "bt" })).unwrap();
    let reread = StateSpace::read(&rom_path).unwrap();
    assert_eq!(reread, rom.to_state_space().unwrap());

    let grid = error_grid(1e-3, 1e3, 2000, &[]);
    let full = ss.to_complex();
    let from_file = relative_hinf_error(&full, &reread.to_complex(), &grid).unwrap();
    let in_memory = relative_hinf_error(&full, &rom, &grid).unwrap();
    assert!((from_file - in_memory).abs() <= 1e-12 * in_memory.max(1.0));
}

#[test]
fn data_driven_reduction_tracks_the_intrusive_reference() {
    // Right-half-plane points at mirrored pole locations make the
    // projected Gramians accurate enough for the errors to agree closely.
    let ss = models::synthetic(20, 1, 1, 8, false).unwrap();
    let poles = nibt_core::linalg::spectrum(&nibt_core::linalg::to_complex(&ss.a)).unwrap().eigenvalues;
    let right: Vec<_> = poles.iter().map(|l| nibt_core::linalg::c64(-0.9 * l.re, l.im)).collect();
    let left: Vec<_> = poles.iter().map(|l| nibt_core::linalg::c64(-1.1 * l.re, l.im)).collect();
    let q = loewner::assemble(&generate_samples(&ss, &right, &left).unwrap()).unwrap();
    let grid = error_grid(1e-3, 1e4, 4000, &poles.iter().map(|z| z.im.abs()).collect::<Vec<_>>());
    let full = ss.to_complex();
    for r in [2, 4, 6] {
        let reference = intrusive::intrusive_reduce(&ss, &Variant::Bt, r).unwrap();
        let rom = reduce_real(&q, &compute_factors(&q, &VariantConfig::adi(Variant::Bt)).unwrap(), r).unwrap();
        let e_ref = relative_hinf_error(&full, &reference, &grid).unwrap();
        let e_rom = relative_hinf_error(&full, &rom, &grid).unwrap();
        assert!((e_ref - e_rom).abs() <= 1e-6 + 1e-3 * e_ref, "r={r}: {e_ref} vs {e_rom}");
    }
}
