use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::germ::WeightVector;
use crate::morse::{find_critical_points, fmt_num, CriticalPoint, MorseVector};

use super::catalog::{CatalogEntry, GermCatalog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Ciphertext is the list of index-zero critical points.
    One,
    /// Ciphertext is the index-zero Morse vector.
    Two,
}

impl Scheme {
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Scheme::One),
            2 => Ok(Scheme::Two),
            other => Err(Error::InvalidArgument(format!(
                "scheme must be 1 or 2, got {}",
                other
            ))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Scheme::One => 1,
            Scheme::Two => 2,
        }
    }
}

/// Where the public key `s` is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeyRange {
    /// `(0, s0]`
    #[default]
    Positive,
    /// `[-s0, s0]`
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyPair {
    pub pk: f64,
    pub sk: MorseVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EncryptOptions {
    /// Keep only index-zero points with positive critical value.
    pub filter_positive_critical_value: bool,
}

pub(crate) fn draw_pk<R: Rng>(rng: &mut R, s0: f64, range: KeyRange) -> f64 {
    let u: f64 = rng.random();
    match range {
        KeyRange::Positive => s0 * (1.0 - u),
        KeyRange::Symmetric => s0 * (2.0 * u - 1.0),
    }
}

/// The key pair with public key `pk`: `sk` is the Morse vector of `f_pk`.
pub fn keypair_for(catalog: &GermCatalog, entry: &CatalogEntry, pk: f64) -> Result<KeyPair> {
    if pk.abs() > entry.s0 {
        return Err(Error::InvalidArgument(format!(
            "|pk| = {} exceeds s0 = {}",
            pk.abs(),
            entry.s0
        )));
    }
    Ok(KeyPair {
        pk,
        sk: catalog.secret_key(entry, pk)?,
    })
}

const KEYGEN_ATTEMPTS: usize = 17;

/// Draws `pk` and computes `sk`, redrawing when `f_pk` has a degenerate
/// critical point (at most 16 retries).
pub fn keygen(
    catalog: &GermCatalog,
    entry: &CatalogEntry,
    range: KeyRange,
    seed: u64,
) -> Result<KeyPair> {
    if !(entry.s0 > 0.0) {
        return Err(Error::InvalidArgument("entry needs a positive s0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = None;
    for _ in 0..KEYGEN_ATTEMPTS {
        let pk = draw_pk(&mut rng, entry.s0, range);
        match keypair_for(catalog, entry, pk) {
            Err(e @ Error::DegenerateCritical { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ciphertext1 {
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext2 {
    lambda_zero: MorseVector,
}

impl Ciphertext2 {
    pub fn new(lambda_zero: MorseVector) -> Result<Self> {
        if lambda_zero.indices().iter().any(|&i| i != 0) {
            return Err(Error::InvalidArgument(format!(
                "ciphertext {} has a nonzero index",
                lambda_zero
            )));
        }
        Ok(Ciphertext2 { lambda_zero })
    }

    pub fn zeros(count: usize) -> Self {
        Ciphertext2 {
            lambda_zero: MorseVector::new(vec![0; count]),
        }
    }

    pub fn lambda_zero(&self) -> &MorseVector {
        &self.lambda_zero
    }

    pub fn len(&self) -> usize {
        self.lambda_zero.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_zero.is_empty()
    }
}

/// A ciphertext of either construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Ciphertext {
    One(Ciphertext1),
    Two(Ciphertext2),
}

impl Ciphertext {
    /// `|c|`: point count or entry count.
    pub fn count(&self) -> usize {
        match self {
            Ciphertext::One(c) => c.points.len(),
            Ciphertext::Two(c) => c.len(),
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Ciphertext::One(_) => Scheme::One,
            Ciphertext::Two(_) => Scheme::Two,
        }
    }
}

impl fmt::Display for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ciphertext::One(c) => {
                let pts: Vec<String> = c
                    .points
                    .iter()
                    .map(|p| {
                        let xs: Vec<String> = p.iter().map(|v| fmt_num(*v)).collect();
                        format!("({})", xs.join(" "))
                    })
                    .collect();
                write!(f, "[{}]", pts.join(";"))
            }
            Ciphertext::Two(c) => write!(f, "{}", c.lambda_zero),
        }
    }
}

fn index_zero_points(
    catalog: &GermCatalog,
    pk: f64,
    m: &WeightVector,
    opts: &EncryptOptions,
) -> Result<Vec<CriticalPoint>> {
    let entry = catalog.entry_for(m)?;
    let fs = entry.morsification.realize(pk)?;
    let pts = find_critical_points(
        &fs,
        &entry.region,
        catalog.grid_per_axis(),
        catalog.morse_options(),
    )?;
    Ok(pts
        .into_iter()
        .filter(|p| p.morse_index == 0)
        .filter(|p| !opts.filter_positive_critical_value || p.value > 0.0)
        .collect())
}

/// Locations of the index-zero critical points of `f_pk`.
pub fn encrypt1(
    catalog: &GermCatalog,
    pk: f64,
    m: &WeightVector,
    opts: &EncryptOptions,
) -> Result<Ciphertext1> {
    Ok(Ciphertext1 {
        points: index_zero_points(catalog, pk, m, opts)?
            .into_iter()
            .map(|p| p.location)
            .collect(),
    })
}

/// The index-zero part `lambda_{0,s}` of the Morse vector of `f_pk`.
pub fn encrypt2(
    catalog: &GermCatalog,
    pk: f64,
    m: &WeightVector,
    opts: &EncryptOptions,
) -> Result<Ciphertext2> {
    Ok(Ciphertext2::zeros(
        index_zero_points(catalog, pk, m, opts)?.len(),
    ))
}

fn decrypt_count(catalog: &GermCatalog, sk: &MorseVector, count: usize) -> Result<WeightVector> {
    if count > sk.count_zero() {
        return Err(Error::Decryption(format!(
            "ciphertext has {} index-zero entries but the key {} has {}",
            count,
            sk,
            sk.count_zero()
        )));
    }
    let k = sk.len() - count;
    catalog
        .entry_by_rank(k)
        .map(|e| e.message.clone())
        .ok_or_else(|| Error::Decryption(format!("no catalog message has rank key {}", k)))
}

/// The message with rank key `|sk| - |c|`.
pub fn decrypt1(catalog: &GermCatalog, sk: &MorseVector, c: &Ciphertext1) -> Result<WeightVector> {
    decrypt_count(catalog, sk, c.points.len())
}

pub fn decrypt2(catalog: &GermCatalog, sk: &MorseVector, c: &Ciphertext2) -> Result<WeightVector> {
    decrypt_count(catalog, sk, c.len())
}

pub fn encrypt(
    scheme: Scheme,
    catalog: &GermCatalog,
    pk: f64,
    m: &WeightVector,
    opts: &EncryptOptions,
) -> Result<Ciphertext> {
    Ok(match scheme {
        Scheme::One => Ciphertext::One(encrypt1(catalog, pk, m, opts)?),
        Scheme::Two => Ciphertext::Two(encrypt2(catalog, pk, m, opts)?),
    })
}

pub fn decrypt(catalog: &GermCatalog, sk: &MorseVector, c: &Ciphertext) -> Result<WeightVector> {
    match c {
        Ciphertext::One(c) => decrypt1(catalog, sk, c),
        Ciphertext::Two(c) => decrypt2(catalog, sk, c),
    }
}
