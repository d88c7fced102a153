use labelprop::imagecore::*;
use labelprop::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent sRGB -> Lab route: the RGB->XYZ matrix is derived from the
/// primaries' chromaticities and the D65 white point instead of the rounded
/// published table.
fn oracle_lab(rgb: [u8; 3]) -> [f64; 3] {
    let white = [0.95047, 1.0, 1.08883];
    let prim = [(0.64, 0.33), (0.30, 0.60), (0.15, 0.06)];
    // columns are XYZ of each primary with Y = 1
    let p: Vec<[f64; 3]> = prim.iter().map(|&(x, y)| [x / y, 1.0, (1.0 - x - y) / y]).collect();
    let m = [[p[0][0], p[1][0], p[2][0]], [p[0][1], p[1][1], p[2][1]], [p[0][2], p[1][2], p[2][2]]];
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    let scale: Vec<f64> = (0..3)
        .map(|c| {
            let mut mc = m;
            for r in 0..3 {
                mc[r][c] = white[r];
            }
            det(mc) / d
        })
        .collect();
    let lin: Vec<f64> = rgb
        .iter()
        .map(|&v| {
            let c = v as f64 / 255.0;
            if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            }
        })
        .collect();
    let xyz: Vec<f64> = (0..3).map(|r| (0..3).map(|c| m[r][c] * scale[c] * lin[c]).sum()).collect();
    let f = |t: f64| {
        if t > (6.0f64 / 29.0).powi(3) {
            t.cbrt()
        } else {
            t / (3.0 * (6.0f64 / 29.0).powi(2)) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(xyz[0] / white[0]), f(xyz[1] / white[1]), f(xyz[2] / white[2]));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

fn lab_of(rgb: [u8; 3]) -> [f64; 3] {
    let img = RawImage::new(1, 1, rgb.to_vec()).unwrap();
    rgb_to_lab(&img).data()[0]
}

#[test]
fn pure_red_golden_value() {
    // frozen from the chromaticity oracle above
    let golden = [53.2408, 80.0925, 67.2032];
    let got = lab_of([255, 0, 0]);
    for c in 0..3 {
        assert!((got[c] - golden[c]).abs() < 1e-3, "{got:?}");
    }
}

#[test]
fn matches_oracle_on_random_colors() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2000 {
        let rgb: [u8; 3] = rng.random();
        let (a, b) = (lab_of(rgb), oracle_lab(rgb));
        for c in 0..3 {
            assert!((a[c] - b[c]).abs() < 5e-3, "{rgb:?}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn inverse_recovers_srgb_within_one_unit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    let data: Vec<u8> = (0..n * 3).map(|_| rng.random()).collect();
    let img = RawImage::new(n, 1, data.clone()).unwrap();
    let lab = rgb_to_lab(&img);
    for (px, orig) in lab.data().iter().zip(data.chunks_exact(3)) {
        let back = lab_to_rgb(*px);
        for c in 0..3 {
            assert!((back[c] - orig[c] as f64).abs() <= 1.0, "{orig:?} -> {px:?} -> {back:?}");
        }
    }
}

#[test]
fn rgb_to_lab_keeps_dimensions_and_clears_flag() {
    let img = RawImage::from_fn(3, 2, |x, y| [x as u8 * 80, y as u8 * 100, 7]).unwrap();
    let lab = rgb_to_lab(&img);
    assert_eq!(lab.dims(), (3, 2));
    assert!(!lab.is_normalized());
    assert_eq!(lab.pixel(2, 1), lab_of([160, 100, 7]));
}

proptest! {
    #[test]
    fn normalized_lab_inside_unit_cube(data in proptest::collection::vec(any::<u8>(), 3..300)) {
        let n = data.len() / 3;
        let img = RawImage::new(n, 1, data[..n * 3].to_vec()).unwrap();
        let norm = normalize_lab(&rgb_to_lab(&img)).unwrap();
        prop_assert!(norm.is_normalized());
        for px in norm.data() {
            for v in px {
                prop_assert!((0.0..=1.0).contains(v));
            }
        }
    }

    #[test]
    fn fmap_round_trip_is_bit_exact(
        w in 1usize..20,
        h in 1usize..20,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f32> = (0..w * h).map(|_| rng.random_range(0.0f32..=1.0)).collect();
        let map = FloatMap::new(w, h, data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.fmap");
        save_fmap(&map, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        prop_assert_eq!(bytes.len(), 16 + 4 * w * h + 1);
        let back = load_fmap(&path).unwrap();
        prop_assert!(back.data().iter().zip(map.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!(back, map);
    }

    #[test]
    fn label_png_round_trip_preserves_indices(
        w in 1usize..24,
        h in 1usize..24,
        k in 1usize..30,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = vec!["background".to_string()];
        names.extend((1..k).map(|i| format!("c{i}")));
        let table = ClassTable::new(names).unwrap();
        let data: Vec<u8> = (0..w * h).map(|_| rng.random_range(0..k as u8)).collect();
        let map = LabelMap::new(w, h, data, table.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.png");
        let b = dir.path().join("b.png");
        save_label_png(&map, &a).unwrap();
        let loaded = load_label_png(&a, &table).unwrap();
        prop_assert_eq!(&loaded, &map);
        save_label_png(&loaded, &b).unwrap();
        let again = load_label_png(&b, &table).unwrap();
        prop_assert_eq!(again.data(), map.data());
    }
}

#[test]
fn class_table_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("classes.txt");
    std::fs::write(&p, "0\tbackground\n1\tbird\n2\tdog\n").unwrap();
    let t = load_class_table(&p).unwrap();
    assert_eq!(t.names(), &["background", "bird", "dog"]);
    let q = dir.path().join("copy.txt");
    save_class_table(&t, &q).unwrap();
    assert_eq!(std::fs::read_to_string(&q).unwrap(), "0\tbackground\n1\tbird\n2\tdog\n");
    std::fs::write(&p, "0\tsky\n").unwrap();
    assert!(matches!(load_class_table(&p), Err(Error::ClassTable(_))));
}

#[test]
fn missing_files_are_io_errors() {
    assert!(matches!(load_fmap("/nonexistent/x.fmap"), Err(Error::Io { .. })));
    assert!(matches!(load_rgb_png("/nonexistent/x.png"), Err(Error::Io { .. })));
}
