mod common;

use std::fs;

use mcvqc::data::{self, Dataset, Split};
use mcvqc::Error;

fn sample_images() -> Vec<Vec<u8>> {
    (0..3u8).map(|i| (0..16u8).map(|p| p.wrapping_mul(17).wrapping_add(i * 40)).collect()).collect()
}

#[test]
fn idx_round_trip_plain_and_gzip() {
    let dir = tempfile::tempdir().unwrap();
    let images = sample_images();
    for ext in ["", ".gz"] {
        let ip = dir.path().join(format!("img{ext}"));
        let lp = dir.path().join(format!("lbl{ext}"));
        data::write_idx_images(&ip, 4, 4, &images).unwrap();
        data::write_idx_labels(&lp, &[3, 1, 4]).unwrap();
        let ds = data::parse_idx(&ip, &lp).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 16);
        assert_eq!(ds.image_shape, Some((4, 4)));
        assert_eq!(ds.labels, Some(vec![3, 1, 4]));
        for (row, img) in ds.features.iter().zip(&images) {
            let back: Vec<u8> = row.iter().map(|v| (v * 255.0).round() as u8).collect();
            assert_eq!(&back, img);
        }
        assert_eq!(ds.targets, ds.features);
    }
}

#[test]
fn idx_pixel_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
    data::write_idx_images(&ip, 1, 2, &[vec![0, 255]]).unwrap();
    data::write_idx_labels(&lp, &[0]).unwrap();
    assert_eq!(data::parse_idx(&ip, &lp).unwrap().features[0], vec![0.0, 1.0]);
}

#[test]
fn idx_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
    data::write_idx_images(&ip, 4, 4, &sample_images()).unwrap();
    data::write_idx_labels(&lp, &[1, 2]).unwrap();
    let msg = data::parse_idx(&ip, &lp).unwrap_err().to_string();
    assert!(msg.contains('3') && msg.contains('2'), "{msg}");

    let mut bytes = fs::read(&ip).unwrap();
    bytes.truncate(bytes.len() - 5);
    fs::write(&ip, &bytes).unwrap();
    data::write_idx_labels(&lp, &[1, 2, 3]).unwrap();
    assert!(matches!(data::parse_idx(&ip, &lp), Err(Error::Data(_))));

    bytes[3] = 0x01;
    fs::write(&ip, &bytes).unwrap();
    let msg = data::parse_idx(&ip, &lp).unwrap_err().to_string();
    assert!(msg.contains("magic"), "{msg}");

    fs::write(&ip, [0u8, 0]).unwrap();
    assert!(matches!(data::parse_idx(&ip, &lp), Err(Error::Data(_))));
    assert!(matches!(data::parse_idx(&dir.path().join("missing"), &lp), Err(Error::Io { .. })));
}

#[test]
fn bundled_mnist_subset_parses() {
    let d = common::data_dir();
    let ds = data::parse_idx(&d.join("mnist5k-images-idx3-ubyte.gz"), &d.join("mnist5k-labels-idx1-ubyte.gz")).unwrap();
    assert_eq!((ds.len(), ds.dim()), (5000, 784));
    assert_eq!(ds.num_classes(), 10);
    let small = data::downsample_8x8(&ds).unwrap();
    assert_eq!(small.dim(), 64);
    assert!(small.features.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn downsample_block_means() {
    let img: Vec<f64> = (0..784).map(|i| ((i / 28) * 28 + i % 28) as f64).collect();
    let mut ds = Dataset::reconstruction(vec![img.clone()], None).unwrap();
    ds.image_shape = Some((28, 28));
    let out = data::downsample_8x8(&ds).unwrap();
    // Block (0, 0) covers rows 2..5, cols 2..5.
    let expect: f64 = (2..5).flat_map(|r| (2..5).map(move |c| r * 28 + c)).map(|i| img[i]).sum::<f64>() / 9.0;
    assert_eq!(out.features[0][0], expect);
    ds.image_shape = Some((4, 196));
    assert!(data::downsample_8x8(&ds).is_err());
}

#[test]
fn csv_loader() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    fs::write(&p, "a,label,b\n0.5,1,2\n1.5,0,-3\n").unwrap();
    let ds = data::load_csv(&p, "label").unwrap();
    assert_eq!(ds.features, vec![vec![0.5, 2.0], vec![1.5, -3.0]]);
    assert_eq!(ds.targets, vec![vec![1.0], vec![0.0]]);
    assert_eq!(ds.labels, Some(vec![1, 0]));
    assert!(data::load_csv(&p, "nope").is_err());
    fs::write(&p, "a,label\nx,1\n").unwrap();
    assert!(matches!(data::load_csv(&p, "label"), Err(Error::Data(_))));
    fs::write(&p, "a,label\nNaN,1\n").unwrap();
    assert!(data::load_csv(&p, "label").is_err());
}

#[test]
fn generators_deterministic() {
    assert_eq!(data::synthetic_blobs(30, 4, 3, 3.0, 5).unwrap(), data::synthetic_blobs(30, 4, 3, 3.0, 5).unwrap());
    assert_ne!(data::synthetic_blobs(30, 4, 3, 3.0, 5).unwrap(), data::synthetic_blobs(30, 4, 3, 3.0, 6).unwrap());
    assert_eq!(data::synthetic_spatiotemporal(4, 8, 6, 1).unwrap().dim(), 48);
    assert!(data::synthetic_blobs(0, 4, 3, 3.0, 5).is_err());
}

#[test]
fn separated_blobs_are_linearly_separable() {
    let ds = data::synthetic_blobs(300, 6, 3, 10.0, 11).unwrap();
    let labels = ds.labels.clone().unwrap();
    let mut centroids = vec![vec![0.0; 6]; 3];
    let mut counts = [0.0; 3];
    for (x, &y) in ds.features.iter().zip(&labels) {
        counts[y] += 1.0;
        for (c, v) in centroids[y].iter_mut().zip(x) {
            *c += v;
        }
    }
    for (c, n) in centroids.iter_mut().zip(counts) {
        c.iter_mut().for_each(|v| *v /= n);
    }
    // Nearest centroid is linear: argmax_j (mu_j . x - |mu_j|^2 / 2).
    let score = |x: &[f64], mu: &[f64]| x.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>() - mu.iter().map(|m| m * m).sum::<f64>() / 2.0;
    let correct = ds
        .features
        .iter()
        .zip(&labels)
        .filter(|(x, &y)| (0..3).max_by(|&a, &b| score(x, &centroids[a]).total_cmp(&score(x, &centroids[b]))) == Some(y))
        .count();
    assert_eq!(correct, 300);
}

#[test]
fn split_and_batches_partition_rows() {
    let ds = Dataset::reconstruction((0..100).map(|i| vec![i as f64]).collect(), None).unwrap();
    let s = data::split(&ds, [0.6, 0.2, 0.2], 4).unwrap();
    assert_eq!([Split::Train, Split::Val, Split::Test].map(|t| s.rows(t).len()), [60, 20, 20]);
    assert_eq!(s, data::split(&ds, [0.6, 0.2, 0.2], 4).unwrap());
    for size in [1, 7, 60, 1000] {
        let b = data::batches(&s, Split::Train, size, 9).unwrap();
        let mut all = b.concat();
        all.sort();
        assert_eq!(all, s.rows(Split::Train));
        if size >= 60 {
            assert_eq!(b.len(), 1);
        }
    }
    assert!(data::split(&ds, [0.5, 0.2, 0.2], 4).is_err());
    assert!(data::batches(&s, Split::Train, 0, 9).is_err());
}
