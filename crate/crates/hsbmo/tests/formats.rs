use hsbmo::error::CliError;
use hsbmo::format::{
    read_field, read_field_csv, read_half_space, read_propagator_cache, write_field, write_field_csv, write_half_space,
    write_propagator_cache, MAGIC,
};
use hsbmo_core::extension::{extend, ExtensionRequest};
use hsbmo_core::grid::{BoundaryGrid, SampledField};
use hsbmo_core::kernels::{build_propagator, named_system, SystemSpec};
use hsbmo_core::C64;
use proptest::prelude::*;

fn field(dim: usize, n: usize, h: f64, m: usize, values: &[(f64, f64)]) -> SampledField {
    let grid = BoundaryGrid::new(dim, n, h).unwrap();
    let count = grid.node_count() * m;
    let v = (0..count).map(|i| {
        let (re, im) = values[i % values.len()];
        C64::new(re, im)
    });
    SampledField::new(grid, m, v.collect()).unwrap()
}

fn bytes_of(f: &SampledField) -> Vec<u8> {
    let mut b = Vec::new();
    write_field(&mut b, f).unwrap();
    b
}

proptest! {
    #[test]
    fn binary_field_round_trips_bit_for_bit(
        dim in 1usize..=2, log_n in 3u32..=5, h in 1e-3f64..2.0, m in 1usize..=3,
        values in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..40),
    ) {
        let f = field(dim, 1 << log_n, h, m, &values);
        let b = bytes_of(&f);
        prop_assert_eq!(&b[..6], MAGIC);
        let g = read_field(&mut b.as_slice()).unwrap();
        prop_assert_eq!(g.grid().n(), f.grid().n());
        prop_assert_eq!(g.grid().h().to_bits(), f.grid().h().to_bits());
        prop_assert_eq!(g.values(), f.values());
    }

    #[test]
    fn csv_field_round_trips(
        dim in 1usize..=2, log_n in 3u32..=4, m in 1usize..=2,
        values in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..20),
    ) {
        let f = field(dim, 1 << log_n, 0.125, m, &values);
        let mut b = Vec::new();
        write_field_csv(&mut b, &f).unwrap();
        let g = read_field_csv(b.as_slice()).unwrap();
        prop_assert_eq!(g.grid().dim(), dim);
        prop_assert_eq!(g.grid().n(), f.grid().n());
        prop_assert_eq!(g.values(), f.values());
    }

    #[test]
    fn truncated_containers_are_rejected(cut in 1usize..100) {
        let f = field(1, 8, 0.5, 1, &[(1.0, 2.0), (3.0, -1.0)]);
        let b = bytes_of(&f);
        let keep = b.len().saturating_sub(cut);
        prop_assert!(read_field(&mut &b[..keep]).is_err());
    }
}

#[test]
fn bad_magic_and_trailing_bytes_are_config_errors() {
    let f = field(1, 8, 0.5, 1, &[(1.0, 0.0)]);
    let mut b = bytes_of(&f);
    b.push(0);
    assert!(matches!(read_field(&mut b.as_slice()), Err(CliError::Config(_))));
    b.pop();
    b[0] = b'X';
    let err = read_field(&mut b.as_slice()).unwrap_err();
    assert!(err.to_string().contains("magic"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn oversized_component_count_is_rejected_before_allocation() {
    let mut b = MAGIC.to_vec();
    for v in [1u64, 4] {
        b.extend(v.to_le_bytes());
    }
    b.extend(0.5f64.to_le_bytes());
    b.extend(u64::MAX.to_le_bytes());
    assert!(read_field(&mut b.as_slice()).is_err());
}

#[test]
fn csv_with_irregular_coordinates_is_rejected() {
    let text = "x1,re0,im0\n0,1,0\n0.5,1,0\n2,1,0\n";
    assert!(read_field_csv(text.as_bytes()).is_err());
    assert!(read_field_csv("x1,re0\n0,1\n1,1\n".as_bytes()).is_err());
}

#[test]
fn half_space_round_trips_with_level_table_and_gradient() {
    let grid = BoundaryGrid::new(1, 16, 0.25).unwrap();
    let system = named_system(&SystemSpec::by_name("lame").unwrap(), 2).unwrap();
    let prop = build_propagator(&system, &grid, &[]).unwrap();
    let f = SampledField::from_components(
        grid,
        &[
            (0..16).map(|i| C64::new((i as f64).sin(), 0.0)).collect(),
            (0..16).map(|i| C64::new(0.0, (i as f64).cos())).collect(),
        ],
    )
    .unwrap();
    let u = extend(&ExtensionRequest::new(&f, &prop, vec![0.25, 0.5, 1.0], true).unwrap()).unwrap();
    let mut b = Vec::new();
    write_half_space(&mut b, &u).unwrap();
    let v = read_half_space(&mut b.as_slice()).unwrap();
    assert_eq!(v.levels(), u.levels());
    assert_eq!(v.values(), u.values());
    assert_eq!(v.gradient(), u.gradient());

    let mut c = Vec::new();
    write_propagator_cache(&mut c, &prop).unwrap();
    let back = read_propagator_cache(&mut c.as_slice(), &system).unwrap();
    assert_eq!(back.solvents(), prop.solvents());
    let scalar = named_system(&SystemSpec::Laplacian, 2).unwrap();
    assert!(read_propagator_cache(&mut c.as_slice(), &scalar).is_err());
}
