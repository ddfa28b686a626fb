//! Sortable identifiers for records and change sets.
//!
//! Ids are ULIDs whose 48-bit time part is the record timestamp and whose
//! 80-bit tail is taken from a SHA-256 digest of a caller-supplied seed. The
//! same inputs always give the same id, which keeps golden output stable, and
//! distinct seeds give distinct ids with overwhelming probability.

use sha2::{Digest, Sha256};
use ulid::Ulid;

use crate::taxonomy::Timestamp;

pub fn derive_id(at: Timestamp, seed: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for part in seed {
        h.update((part.len() as u64).to_be_bytes());
        h.update(part);
    }
    let digest = h.finalize();
    let mut tail = [0u8; 16];
    tail[6..].copy_from_slice(&digest[..10]);
    Ulid::from_parts(at.unix_millis(), u128::from_be_bytes(tail)).to_string()
}
