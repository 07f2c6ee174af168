//! Two toy public-key constructions on morsifications of quasi-homogeneous
//! germs, and a chosen-ciphertext game harness. Nothing here is secure: the
//! harness exists to measure how badly.

mod catalog;
mod game;
mod scheme;

pub use catalog::{CatalogEntry, GermCatalog};
pub use game::{
    attacker_by_name, cca_experiment, Attacker, AttackerView, CcaOptions, CcaReport,
    DecryptionOracle, KeyRing, OracleOnly, RandomGuess, Reencrypt, TrialOutcome,
};
pub use scheme::{
    decrypt, decrypt1, decrypt2, encrypt, encrypt1, encrypt2, keygen, keypair_for, Ciphertext,
    Ciphertext1, Ciphertext2, EncryptOptions, KeyPair, KeyRange, Scheme,
};
