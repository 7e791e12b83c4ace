//! Checked-in containers must decode to the recorded scene digests.
//! Set `G4DC_BLESS=1` to rewrite the fixtures.

mod common;

use std::fs;

use g4dc::codec::{decode_scene, encode_scene, size_report};
use g4dc::model::scene_digest;

const DIGESTS: &str = "digests.txt";

fn bless() {
    let dir = common::fixture_dir();
    fs::create_dir_all(&dir).unwrap();
    let mut lines = String::new();
    for (name, scene, cfg) in common::fixtures() {
        let e = encode_scene(&scene, &cfg).unwrap();
        fs::write(dir.join(format!("{name}.g4c")), &e.bytes).unwrap();
        lines += &format!("{name} {} {}\n", e.bytes.len(), scene_digest(&e.scene));
    }
    fs::write(dir.join(DIGESTS), lines).unwrap();
}

fn expected() -> Vec<(String, usize, String)> {
    fs::read_to_string(common::fixture_dir().join(DIGESTS))
        .expect("fixture digests present")
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].to_string())
        })
        .collect()
}

#[test]
fn fixtures_decode_to_recorded_digests() {
    if std::env::var_os("G4DC_BLESS").is_some() {
        bless();
    }
    let want = expected();
    assert!(want.len() >= 3);
    for (name, len, digest) in want {
        let bytes = fs::read(common::fixture_dir().join(format!("{name}.g4c"))).unwrap();
        assert_eq!(bytes.len(), len, "{name}");
        let scene = decode_scene(&bytes).unwrap();
        assert_eq!(scene_digest(&scene), digest, "{name}");
        assert_eq!(size_report(&bytes).unwrap().total_bytes, len);
    }
}

#[test]
fn fixture_encoders_reproduce_the_files() {
    for (name, scene, cfg) in common::fixtures() {
        let e = encode_scene(&scene, &cfg).unwrap();
        let stored = fs::read(common::fixture_dir().join(format!("{name}.g4c"))).unwrap();
        assert!(e.bytes == stored, "{name} re-encodes differently");
    }
}
