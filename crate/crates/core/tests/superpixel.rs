use std::collections::{BTreeSet, VecDeque};

use labelprop::imagecore::{normalize_lab, rgb_to_lab, FloatMap, LabImage, RawImage};
use labelprop::superpixel::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lab_from(img: &RawImage) -> LabImage {
    normalize_lab(&rgb_to_lab(img)).unwrap()
}

fn random_image(w: usize, h: usize, seed: u64) -> RawImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // smooth-ish blobs so SLIC has structure to follow
    let blobs: Vec<(f64, f64, [u8; 3])> = (0..4)
        .map(|_| (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64), rng.random()))
        .collect();
    RawImage::from_fn(w, h, |x, y| {
        let nearest = blobs
            .iter()
            .min_by(|a, b| {
                let da = (a.0 - x as f64).powi(2) + (a.1 - y as f64).powi(2);
                let db = (b.0 - x as f64).powi(2) + (b.1 - y as f64).powi(2);
                da.total_cmp(&db)
            })
            .unwrap();
        nearest.2
    })
    .unwrap()
}

/// Number of 4-connected components of the pixels carrying `id`.
fn component_count(sp: &SuperpixelMap, id: u32) -> usize {
    let (w, h) = sp.dims();
    let mut seen = vec![false; w * h];
    let mut comps = 0;
    for start in 0..w * h {
        if seen[start] || sp.assignment()[start] != id {
            continue;
        }
        comps += 1;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut push = |j: usize| {
                if !seen[j] && sp.assignment()[j] == id {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < w {
                push(i + 1);
            }
            if y > 0 {
                push(i - w);
            }
            if y + 1 < h {
                push(i + w);
            }
        }
    }
    comps
}

#[test]
fn uniform_image_splits_into_quadrants() {
    let img = RawImage::from_fn(10, 10, |_, _| [90, 140, 200]).unwrap();
    let params = SlicParams { k: 4, compactness: 10.0, iters: 10 };
    let sp = slic_segment(&lab_from(&img), &params).unwrap();
    assert_eq!(sp.n(), 4);
    // with no color contrast every pixel goes to the nearest grid center
    let centers = [(2.0, 2.0), (7.0, 2.0), (2.0, 7.0), (7.0, 7.0)];
    for y in 0..10 {
        for x in 0..10 {
            let d = |c: &(f64, f64)| (c.0 - x as f64).powi(2) + (c.1 - y as f64).powi(2);
            let nearest = (0..4).min_by(|&a, &b| d(&centers[a]).total_cmp(&d(&centers[b]))).unwrap();
            assert_eq!(sp.get(x, y), nearest as u32, "pixel ({x},{y})");
        }
    }
    assert_eq!(sp.sizes(), vec![25; 4]);
}

#[test]
fn zero_compactness_partitions_by_color() {
    let (a, b) = ([200, 30, 30], [20, 60, 220]);
    let in_b = |x: usize, y: usize| x >= 5 + (y % 3);
    let img = RawImage::from_fn(12, 6, |x, y| if in_b(x, y) { b } else { a }).unwrap();
    let params = SlicParams { k: 2, compactness: 0.0, iters: 10 };
    let sp = slic_segment(&lab_from(&img), &params).unwrap();
    assert_eq!(sp.n(), 2);

    // best 2-means split of the pixel colors: try every grouping of the
    // distinct colors and keep the lowest within-group squared error
    let lab = lab_from(&img);
    let colors: Vec<[f64; 3]> = {
        let mut v: Vec<[f64; 3]> = Vec::new();
        for px in lab.data() {
            if !v.contains(px) {
                v.push(*px);
            }
        }
        v
    };
    let sse = |mask: u32| -> f64 {
        let mut total = 0.0;
        for side in [true, false] {
            let members: Vec<&[f64; 3]> = lab
                .data()
                .iter()
                .filter(|p| {
                    let ci = colors.iter().position(|c| c == *p).unwrap();
                    ((mask >> ci) & 1 == 1) == side
                })
                .collect();
            if members.is_empty() {
                return f64::INFINITY;
            }
            let mut mean = [0.0; 3];
            for p in &members {
                for c in 0..3 {
                    mean[c] += p[c] / members.len() as f64;
                }
            }
            total += members.iter().map(|p| (0..3).map(|c| (p[c] - mean[c]).powi(2)).sum::<f64>()).sum::<f64>();
        }
        total
    };
    let best = (1..(1u32 << colors.len()) - 1).min_by(|&x, &y| sse(x).total_cmp(&sse(y))).unwrap();
    for (i, px) in lab.data().iter().enumerate() {
        let ci = colors.iter().position(|c| c == px).unwrap();
        let oracle_side = (best >> ci) & 1;
        let other = lab.data().iter().position(|p| p == &colors[0]).unwrap();
        let same_group_as_first = oracle_side == best & 1;
        assert_eq!(
            sp.assignment()[i] == sp.assignment()[other],
            same_group_as_first,
            "pixel {i}"
        );
    }
}

#[test]
fn features_match_per_pixel_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let img = RawImage::new(8, 8, (0..192).map(|_| rng.random()).collect()).unwrap();
    let lab = lab_from(&img);
    let m = FloatMap::new(8, 8, (0..64).map(|_| rng.random_range(0.0f32..=1.0)).collect()).unwrap();
    let labels: Vec<u32> = (0..64).map(|_| rng.random_range(0..6)).collect();
    let sp = SuperpixelMap::from_labels(8, 8, &labels).unwrap();
    let feats = compute_features(&sp, &lab, &m).unwrap();
    assert_eq!(feats.len(), sp.n());
    for id in 0..sp.n() {
        let pix: Vec<usize> = (0..64).filter(|&i| sp.assignment()[i] == id as u32).collect();
        let n = pix.len() as f64;
        let mut want = [0.0; 4];
        for &i in &pix {
            let p = lab.data()[i];
            want[0] += p[0] / n;
            want[1] += p[1] / n;
            want[2] += p[2] / n;
            want[3] += m.data()[i] as f64 / n;
        }
        let got = feats.get(id);
        for c in 0..4 {
            assert!((got[c] - want[c]).abs() < 1e-12, "sp {id} channel {c}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn adjacency_matches_brute_force_scan() {
    let img = random_image(30, 20, 5);
    let sp = slic_segment(&lab_from(&img), &SlicParams { k: 25, ..Default::default() }).unwrap();
    let adj = build_adjacency(&sp);
    let (w, h) = sp.dims();
    let mut want = BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            let a = sp.get(x, y);
            for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                if nx < w && ny < h && sp.get(nx, ny) != a {
                    let b = sp.get(nx, ny);
                    want.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    let got: BTreeSet<(u32, u32)> = adj.edges().iter().copied().collect();
    assert_eq!(got, want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slic_output_is_a_connected_cover(
        w in 4usize..40,
        h in 4usize..40,
        k in 1usize..60,
        compactness in 0.0f64..40.0,
        seed in any::<u64>(),
    ) {
        let k = k.min(w * h);
        let img = random_image(w, h, seed);
        let sp = slic_segment(&lab_from(&img), &SlicParams { k, compactness, iters: 5 }).unwrap();
        prop_assert_eq!(sp.assignment().len(), w * h);
        prop_assert!(sp.n() >= 1 && sp.n() <= 2 * k);
        prop_assert!(sp.assignment().iter().all(|&id| (id as usize) < sp.n()));
        prop_assert_eq!(sp.sizes().iter().sum::<usize>(), w * h);
        prop_assert!(sp.sizes().iter().all(|&s| s > 0));
        for id in 0..sp.n() as u32 {
            prop_assert_eq!(component_count(&sp, id), 1, "superpixel {} is split", id);
        }
    }

    #[test]
    fn adjacency_is_symmetric_and_irreflexive(
        w in 2usize..20,
        h in 2usize..20,
        labels_seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(labels_seed);
        let labels: Vec<u32> = (0..w * h).map(|_| rng.random_range(0..5)).collect();
        let sp = SuperpixelMap::from_labels(w, h, &labels).unwrap();
        let adj = build_adjacency(&sp);
        for &(a, b) in adj.edges() {
            prop_assert!(a < b);
            prop_assert!(adj.contains(a, b) && adj.contains(b, a));
        }
        for i in 0..sp.n() as u32 {
            prop_assert!(!adj.contains(i, i));
        }
    }

    #[test]
    fn features_follow_id_permutation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = RawImage::new(6, 5, (0..90).map(|_| rng.random()).collect()).unwrap();
        let lab = lab_from(&img);
        let m = FloatMap::new(6, 5, (0..30).map(|_| rng.random_range(0.0f32..=1.0)).collect()).unwrap();
        let labels: Vec<u32> = (0..30).map(|_| rng.random_range(0..4)).collect();
        let sp = SuperpixelMap::from_labels(6, 5, &labels).unwrap();
        let n = sp.n() as u32;
        // reverse the id order
        let permuted: Vec<u32> = sp.assignment().iter().map(|&id| n - 1 - id).collect();
        let sp2 = SuperpixelMap::new(6, 5, permuted).unwrap();
        let f1 = compute_features(&sp, &lab, &m).unwrap();
        let f2 = compute_features(&sp2, &lab, &m).unwrap();
        for i in 0..n as usize {
            prop_assert_eq!(f1.get(i), f2.get(n as usize - 1 - i));
        }
    }

    #[test]
    fn slic_is_deterministic(seed in any::<u64>(), k in 2usize..40) {
        let img = random_image(24, 18, seed);
        let lab = lab_from(&img);
        let p = SlicParams { k, ..Default::default() };
        prop_assert_eq!(slic_segment(&lab, &p).unwrap(), slic_segment(&lab, &p).unwrap());
    }
}

#[test]
fn unnormalized_input_is_rejected() {
    let img = RawImage::from_fn(4, 4, |_, _| [1, 2, 3]).unwrap();
    assert!(slic_segment(&rgb_to_lab(&img), &SlicParams::default()).is_err());
    let err = slic_segment(&lab_from(&img), &SlicParams { k: 17, ..Default::default() });
    assert!(matches!(err, Err(labelprop::Error::KTooLarge { k: 17, pixels: 16 })));
}
