//! Number-theoretic primitives at toy key sizes.

pub mod arith;
pub mod bbs;
pub mod commit;
pub mod decimal;
pub mod gm;
pub mod paillier;

pub use bbs::{bbs_stream, BbsState, BgCiphertext, BgKeyPair, BgPublicKey};
pub use commit::{hash_bytes, hash_commit, Digest};
pub use gm::{GmCiphertext, GmKeyPair, GmPublicKey};
pub use paillier::{PaillierCiphertext, PaillierKeyPair, PaillierPublicKey};
