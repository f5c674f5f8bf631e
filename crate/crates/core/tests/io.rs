mod common;

use proptest::prelude::*;
use romimaging::grid::ImagingGrid;
use romimaging::imaging::{image_norm, ImageParams};
use romimaging::internal::build_reference_basis;
use romimaging::io::{self, GridInfo, Header, Manifest};
use romimaging::rom::Rom;
use romimaging::solver::simulate_data;

fn header_strategy() -> impl Strategy<Value = Header> {
    (
        prop::collection::vec(1usize..50, 1..4),
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        0usize..100,
        0usize..64,
        "[0-9a-f]{0,64}",
        prop::collection::vec("[a-z_\\[\\]0-9]{1,12}", 0..4),
        prop::option::of((-1e3f64..1e3, -1e3f64..1e3, 1e-3f64..1.0, 1usize..500, 1usize..500)),
    )
        .prop_map(|(dims, tau, n, m, hash, fields, grid)| {
            let mut h = Header::new("data", dims);
            h.tau = tau;
            h.n = n;
            h.m = m;
            h.omega_c = 2.0 * std::f64::consts::PI;
            h.config_hash = hash;
            h.fields = fields;
            h.grid = grid.map(|(x0, z0, spacing, nx, nz)| GridInfo { x0, z0, spacing, nx, nz });
            h.params = serde_json::json!({ "lambda_min": tau * 1e-3, "note": "x" });
            h
        })
}

proptest! {
    #[test]
    fn headers_round_trip(h in header_strategy()) {
        let line = h.to_line().unwrap();
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(Header::parse(&line).unwrap(), h);
    }
}

#[test]
fn arrays_round_trip_and_bad_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.bin");
    let h = Header::new("test", vec![2, 3]);
    let data = [1.0, -2.5, 3.25, f64::MIN_POSITIVE, 1e300, -0.0];
    io::write_array(&path, &h, &data).unwrap();
    let (back, values) = io::read_array(&path).unwrap();
    assert_eq!(back, h);
    assert_eq!(values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), data.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert!(io::write_array(&path, &h, &data[..5]).is_err());

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(io::read_array(&path).is_err());
    std::fs::write(&path, b"{\"format\":\"other\"}\n").unwrap();
    assert!(io::read_array(&path).is_err());
}

#[test]
fn pipeline_objects_round_trip() {
    let sc = common::small();
    let dir = tempfile::tempdir().unwrap();
    let d = simulate_data(&sc.medium, &sc.array, &sc.pulse, sc.tau, 4).unwrap();
    let h = io::data_header(&d, 2.0 * std::f64::consts::PI, "abc");
    io::write_data(&dir.path().join("d.bin"), &d, &h).unwrap();
    let (hb, db) = io::read_data(&dir.path().join("d.bin")).unwrap();
    assert_eq!(hb.dims, vec![8, 6, 6]);
    assert_eq!(hb.n, 4);
    assert_eq!(db.mats, d.mats);
    assert_eq!(db.tau, d.tau);

    let rom = Rom::build(&d, 4, None, false).unwrap();
    io::write_block(&dir.path().join("r.bin"), rom.r(), h.clone()).unwrap();
    let (_, rb) = io::read_block(&dir.path().join("r.bin")).unwrap();
    assert_eq!(rb.mat, rom.r().mat);
    assert_eq!(rb.structure, rom.r().structure);

    let grid = ImagingGrid::covering(sc.medium.grid, (1.0, 2.0), (0.5, 1.0), 0.25).unwrap();
    let (basis, rom_ref) = build_reference_basis(&sc.reference(), &sc.array, &sc.pulse, sc.tau, 4, grid, None).unwrap();
    io::write_basis(&dir.path().join("v.bin"), &basis, h.clone()).unwrap();
    let (hv, vv) = io::read_array(&dir.path().join("v.bin")).unwrap();
    assert_eq!(hv.dims, vec![24, grid.nk, grid.ni]);
    assert_eq!(hv.fields[7], "v_o[1][1]");
    assert_eq!(hv.grid, Some(GridInfo::of(&grid)));
    // field 7 at point 3 is v_o[1][1] at that point
    assert_eq!(vv[7 * grid.len() + 3], basis.row(3)[7]);

    let img = image_norm(rom_ref.r(), &basis, ImageParams { n: 4, ..Default::default() }).unwrap();
    io::write_image(&dir.path().join("i.bin"), &img, h.clone()).unwrap();
    let hi = io::read_header(&dir.path().join("i.bin")).unwrap();
    assert_eq!(hi.kind, "image/norm");
    assert_eq!(hi.params["n"], 4);
    let back = io::read_image(&dir.path().join("i.bin")).unwrap();
    assert_eq!(back.values, img.values);
    assert_eq!(back.kind, img.kind);
    assert_eq!(back.params, img.params);
    assert_eq!(back.grid.coords(5), grid.coords(5));
    let (_, vb) = io::read_basis(&dir.path().join("v.bin"), rom_ref.r().clone()).unwrap();
    assert_eq!(vb.values, basis.values);
    assert_eq!(vb.at(1.5, 0.75).unwrap(), basis.at(1.5, 0.75).unwrap());
    assert!(io::read_image(&dir.path().join("v.bin")).is_err());
    io::write_image_csv(&dir.path().join("i.csv"), &img).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("i.csv")).unwrap();
    assert_eq!(csv.lines().count(), grid.len() + 1);
}

#[test]
fn manifest_records_hashes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.txt"), "hello").unwrap();
    let mut m = Manifest::new("cfg");
    m.add(dir.path(), "x.txt", "note").unwrap();
    assert_eq!(m.artifacts[0].sha256, "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
    m.write(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(Manifest::read(&dir.path().join("manifest.json")).unwrap(), m);
    assert_eq!(io::config_hash(&[1, 2]).unwrap(), io::config_hash(&[1, 2]).unwrap());
    assert_ne!(io::config_hash(&[1, 2]).unwrap(), io::config_hash(&[2, 1]).unwrap());
}
