//! Derivation of per-purpose seeds from the master seed.
//!
//! A derived seed is the first eight bytes (little endian) of
//! `SHA-256(master as 8 little-endian bytes || label)`. Inside a scan the
//! simulator further splits by row through ChaCha20 stream selection.

use sha2::{Digest, Sha256};

pub fn derive(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

pub fn acquisition(master: u64) -> u64 {
    derive(master, "acquisition")
}

pub fn tradeoff(master: u64, count: usize) -> Vec<u64> {
    (0..count).map(|i| derive(master, &format!("tradeoff/{i}"))).collect()
}
