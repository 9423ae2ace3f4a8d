use uuid::Uuid;

use crate::error::{Error, Result};

/// Number of shards.
pub const FOLDS: usize = 4096;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Fold of a video: FNV-1a of the lowercase hyphenated UUID, mod 4096.
pub fn shard(uuid: &str) -> Result<u32> {
    let parsed = Uuid::try_parse(uuid).map_err(|e| Error::InvalidInput(format!("uuid {uuid:?}: {e}")))?;
    let canonical = parsed.hyphenated().to_string();
    Ok((fnv1a64(canonical.as_bytes()) % FOLDS as u64) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn case_and_determinism() {
        let u = "6F9619FF-8B86-D011-B42D-00C04FC964FF";
        assert_eq!(shard(u).unwrap(), shard(&u.to_lowercase()).unwrap());
        assert_eq!(shard(u).unwrap(), shard(u).unwrap());
        assert!((shard(u).unwrap() as usize) < FOLDS);
    }

    #[test]
    fn malformed_uuid_is_rejected() {
        assert!(matches!(shard("not-a-uuid"), Err(Error::InvalidInput(_))));
    }
}
