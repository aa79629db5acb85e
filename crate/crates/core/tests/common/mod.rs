#![allow(dead_code)]

use std::path::PathBuf;

use hypdyn::tower::{Tower, TowerSpec};

pub fn towers_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../towers")
}

pub fn spec(name: &str) -> TowerSpec {
    let path = towers_dir().join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load(name: &str) -> Tower {
    Tower::new(spec(name)).unwrap()
}
