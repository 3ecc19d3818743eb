use proptest::prelude::*;
use protect_core::io::{decode_ppm, encode_ppm, load_image, save_image, synth_corpus, synth_image, write_corpus};
use protect_core::{Error, Tensor};
use std::collections::BTreeSet;
use std::path::Path;

#[test]
fn ppm_roundtrip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let img = synth_image::<f32>(32, 4, 0).unwrap();
    let path = dir.path().join("a.ppm");
    save_image(&img, &path).unwrap();
    let back: Tensor<f32> = load_image(&path).unwrap();
    assert_eq!(back, img);
}

#[test]
fn header_comments_are_skipped() {
    let mut bytes = b"P6\n# made by hand\n2 1\n# another\n255\n".to_vec();
    bytes.extend([255, 0, 0, 0, 0, 255]);
    let img: Tensor<f64> = decode_ppm(&bytes, Path::new("x")).unwrap();
    assert_eq!(img.shape(), &[1, 3, 1, 2]);
    assert_eq!(img.data(), &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn malformed_files_are_rejected() {
    let p = Path::new("bad.ppm");
    let cases: [&[u8]; 5] = [
        b"P5\n1 1\n255\n\0",
        b"P6\n1 1\n65535\n\0\0\0\0\0\0",
        b"P6\n2 2\n255\n\0\0\0",
        b"P6\n1 1\n255\n\0\0\0\0",
        b"P6\n1\n",
    ];
    for bytes in cases {
        assert!(matches!(decode_ppm::<f32>(bytes, p), Err(Error::Format { .. })), "{bytes:?}");
    }
}

#[test]
fn synthetic_corpus_is_deterministic_and_diverse() {
    let a = synth_corpus::<f32>(4, 64, 11).unwrap();
    assert_eq!(a, synth_corpus::<f32>(4, 64, 11).unwrap());
    assert_ne!(a, synth_corpus::<f32>(4, 64, 12).unwrap());
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            assert!(a[i].mse(&a[j]).unwrap() > 1e-3);
        }
    }
    for img in &a {
        assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let levels: BTreeSet<u32> = img.data().iter().map(|v| (v * 255.0).round() as u32).collect();
        assert!(levels.len() >= 32);
    }
    assert!(synth_image::<f32>(30, 0, 0).is_err());
}

#[test]
fn corpus_on_disk_matches_memory() {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_corpus(3, 16, 5, dir.path()).unwrap();
    let mem = synth_corpus::<f32>(3, 16, 5).unwrap();
    assert_eq!(paths.len(), 3);
    for (p, m) in paths.iter().zip(&mem) {
        assert_eq!(&load_image::<f32>(p).unwrap(), m);
    }
}

proptest! {
    #[test]
    fn encode_decode_is_lossless_on_8_bit_values(w in 1usize..9, h in 1usize..9, bytes in proptest::collection::vec(any::<u8>(), 192)) {
        let n = 3 * w * h;
        let img = Tensor::<f32>::new(vec![1, 3, h, w], (0..n).map(|i| bytes[i] as f32 / 255.0).collect()).unwrap();
        let enc = encode_ppm(&img).unwrap();
        let dec: Tensor<f32> = decode_ppm(&enc, Path::new("p")).unwrap();
        prop_assert_eq!(dec, img);
    }

    #[test]
    fn decoding_arbitrary_bytes_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
        let _ = decode_ppm::<f32>(&bytes, Path::new("fuzz"));
        let mut framed = b"P6\n2 2\n255\n".to_vec();
        framed.extend(&bytes);
        let r = decode_ppm::<f32>(&framed, Path::new("fuzz"));
        prop_assert_eq!(r.is_ok(), bytes.len() == 12);
    }
}
