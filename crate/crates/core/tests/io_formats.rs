use approx::assert_relative_eq;
use tempocomp::io::{
    flower_path, load_mnist, read_idx, read_pgm, read_tcwf, resolve_data_dir, write_idx, write_pgm,
    write_tcwf, IdxTensor,
};
use tempocomp::signal::{decode_vector, encode_vector};
use tempocomp::{EncodingScheme, Error, ImageTensor, StreamRole};

#[test]
fn idx_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.idx");
    let t = IdxTensor {
        dims: vec![2, 3, 4],
        data: (0..24).collect(),
    };
    write_idx(&path, &t).unwrap();
    assert_eq!(read_idx(&path).unwrap(), t);
    assert!(matches!(
        read_idx(dir.path().join("absent.idx")),
        Err(Error::Data(_))
    ));
}

#[test]
fn shipped_dataset_shapes() {
    let data_dir = resolve_data_dir(None);
    let mnist = load_mnist(&data_dir).unwrap();
    assert_eq!(mnist.train_images.len() + mnist.test_images.len(), 10_000);
    assert_eq!(mnist.test_images.len(), mnist.test_labels.len());
    assert!(mnist
        .train_images
        .iter()
        .all(|i| i.height() == 28 && i.width() == 28));
    assert!(mnist.test_labels.iter().all(|&l| l < 10));

    let flower = read_pgm(flower_path(&data_dir)).unwrap();
    assert_eq!((flower.height(), flower.width()), (92, 92));
    assert!(flower.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn pgm_round_trip_preserves_8bit_levels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img.pgm");
    let pixels: Vec<f64> = (0..12).map(|v| f64::from(v * 20) / 255.0).collect();
    let img = ImageTensor::new(3, 4, pixels).unwrap();
    write_pgm(&img, &path).unwrap();
    let back = read_pgm(&path).unwrap();
    for (a, b) in back.pixels().iter().zip(img.pixels()) {
        assert_relative_eq!(*a, *b, epsilon = 1e-15);
    }
}

#[test]
fn tcwf_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.tcwf");
    let scheme = EncodingScheme::default();
    let w = encode_vector(&[0.0, 0.25, 1.0, 0.5], &scheme, StreamRole::Data).unwrap();
    write_tcwf(&w, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"TCWF");
    assert_eq!(bytes.len(), 16 + 8 * w.len());
    let back = read_tcwf(&path).unwrap();
    assert_eq!(back, w);
    let values = decode_vector(&back, &scheme, 4).unwrap();
    for (a, b) in values.iter().zip([0.0, 0.25, 1.0, 0.5]) {
        assert_relative_eq!(*a, b, epsilon = 1e-12);
    }
}
