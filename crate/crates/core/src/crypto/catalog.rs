use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::germ::{parse_germ_text, PolynomialGerm, WeightVector};
use crate::morse::{find_critical_points, morse_vectors, MorseOptions, Morsification, SearchBox};

/// One plaintext of the cipher: a quasi-homogeneous germ, its weights, a
/// morsification and the rank key `|lambda_s| - |lambda_{0,s}|` that
/// decryption maps back to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub message: WeightVector,
    pub germ: PolynomialGerm,
    pub morsification: Morsification,
    pub rank_k: usize,
    pub s0: f64,
    pub region: SearchBox,
}

impl CatalogEntry {
    pub fn n_vars(&self) -> usize {
        self.germ.n_vars()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GermCatalog {
    entries: Vec<CatalogEntry>,
    grid_per_axis: usize,
    morse: MorseOptions,
}

const SHIPPED: &str = include_str!("../../data/catalog.txt");

fn shipped_germ(name: &str) -> Result<String> {
    match name {
        "sum_of_squares3.germ" => Ok(include_str!("../../data/sum_of_squares3.germ").into()),
        "x4_minus_y2.germ" => Ok(include_str!("../../data/x4_minus_y2.germ").into()),
        "x2.germ" => Ok(include_str!("../../data/x2.germ").into()),
        other => Err(Error::InvalidCatalog(format!(
            "no shipped germ named {:?}",
            other
        ))),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidCatalog(format!("bad number {:?}", p)))
        })
        .collect()
}

fn parse_entry(line: &str, load: &dyn Fn(&str) -> Result<String>) -> Result<CatalogEntry> {
    let mut germ = None;
    let (mut message, mut s0, mut region, mut rank_k, mut quad, mut linear) =
        (None, None, None, None, None, None);
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::InvalidCatalog(format!("field {:?} is not key=value", field)))?;
        match key {
            "germ" => germ = Some(value.to_string()),
            "message" => message = Some(value.parse::<WeightVector>()?),
            "s0" => s0 = Some(parse_list(value)?[0]),
            "box" => region = Some(value.to_string()),
            "rank_k" => {
                rank_k = Some(value.parse::<usize>().map_err(|_| {
                    Error::InvalidCatalog(format!("rank_k {:?} is not a count", value))
                })?)
            }
            "quad" => quad = Some(parse_list(value)?),
            "linear" => linear = Some(parse_list(value)?),
            other => return Err(Error::InvalidCatalog(format!("unknown field {:?}", other))),
        }
    }
    let missing = |k: &str| Error::InvalidCatalog(format!("missing field {:?}", k));
    let name = germ.ok_or_else(|| missing("germ"))?;
    let (germ, _) = parse_germ_text(&load(&name)?)?;
    let m = germ.n_vars();
    let message = message.ok_or_else(|| missing("message"))?;
    if message.len() != m || !germ.is_quasi_homogeneous(&message)? {
        return Err(Error::InvalidCatalog(format!(
            "{} is not quasi-homogeneous with weights {}",
            germ, message
        )));
    }
    let s0 = s0.ok_or_else(|| missing("s0"))?;
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(Error::InvalidCatalog(format!(
            "s0 = {} must be positive",
            s0
        )));
    }
    let region = SearchBox::parse(&region.ok_or_else(|| missing("box"))?, m)
        .map_err(|e| Error::InvalidCatalog(e.to_string()))?;
    let morsification = Morsification::with_linear(
        germ.clone(),
        quad.unwrap_or_else(|| vec![1.0; m]),
        linear.unwrap_or_else(|| vec![0.0; m]),
    )
    .map_err(|e| Error::InvalidCatalog(e.to_string()))?;
    Ok(CatalogEntry {
        name,
        message,
        germ,
        morsification,
        rank_k: rank_k.ok_or_else(|| missing("rank_k"))?,
        s0,
        region,
    })
}

impl GermCatalog {
    /// Checks that messages and rank keys are unique, and that each rank key
    /// matches the morsification at `s = s0`.
    pub fn new(
        entries: Vec<CatalogEntry>,
        grid_per_axis: usize,
        morse: MorseOptions,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidCatalog("catalog is empty".into()));
        }
        let mut ranks = HashSet::new();
        let mut messages = HashSet::new();
        for e in &entries {
            if !ranks.insert(e.rank_k) {
                return Err(Error::InvalidCatalog(format!(
                    "rank key {} appears twice; decryption would be ambiguous",
                    e.rank_k
                )));
            }
            if !messages.insert(e.message.clone()) {
                return Err(Error::InvalidCatalog(format!(
                    "message {} appears twice",
                    e.message
                )));
            }
        }
        let catalog = GermCatalog {
            entries,
            grid_per_axis,
            morse,
        };
        for e in &catalog.entries {
            let sk = catalog.secret_key(e, e.s0)?;
            let k = sk.len() - sk.count_zero();
            if k != e.rank_k {
                return Err(Error::InvalidCatalog(format!(
                    "{}: rank_k = {} but |lambda_s| - |lambda_0,s| = {} at s0 = {}",
                    e.name, e.rank_k, k, e.s0
                )));
            }
        }
        Ok(catalog)
    }

    /// Parses catalog text; `load` resolves germ file references.
    pub fn parse_with(text: &str, load: &dyn Fn(&str) -> Result<String>) -> Result<Self> {
        let entries = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| parse_entry(l, load))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries, 8, MorseOptions::default())
    }

    /// Loads a catalog file; germ paths are relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse_with(&text, &|name| Ok(std::fs::read_to_string(dir.join(name))?))
    }

    /// The two-entry catalog bundled with the crate.
    pub fn shipped() -> Self {
        Self::parse_with(SHIPPED, &shipped_germ).expect("bundled catalog is valid")
    }

    /// Text of a bundled germ file.
    pub fn shipped_germ_text(name: &str) -> Result<String> {
        shipped_germ(name)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn grid_per_axis(&self) -> usize {
        self.grid_per_axis
    }

    pub fn morse_options(&self) -> &MorseOptions {
        &self.morse
    }

    pub fn with_grid(mut self, grid_per_axis: usize) -> Self {
        self.grid_per_axis = grid_per_axis;
        self
    }

    pub fn entry_for(&self, message: &WeightVector) -> Result<&CatalogEntry> {
        self.entries
            .iter()
            .find(|e| &e.message == message)
            .ok_or(Error::UnknownMessage)
    }

    pub fn entry_by_rank(&self, k: usize) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.rank_k == k)
    }

    /// Messages are padded with zeros to the largest variable count, so all
    /// of them share this length.
    pub fn encoded_len(&self) -> usize {
        self.entries
            .iter()
            .map(CatalogEntry::n_vars)
            .max()
            .unwrap_or(0)
    }

    /// The Morse vector `lambda_s` of the entry's morsification.
    pub fn secret_key(&self, entry: &CatalogEntry, s: f64) -> Result<crate::morse::MorseVector> {
        let fs = entry.morsification.realize(s)?;
        let pts = find_critical_points(&fs, &entry.region, self.grid_per_axis, &self.morse)?;
        Ok(morse_vectors(&pts).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_with_x2(text: &str) -> Result<GermCatalog> {
        GermCatalog::parse_with(text, &shipped_germ)
    }

    #[test]
    fn shipped_catalog_loads() {
        let c = GermCatalog::shipped();
        assert_eq!(c.entries().len(), 2);
        assert_eq!(c.encoded_len(), 3);
        let m: WeightVector = "1/4,1/2".parse().unwrap();
        assert_eq!(c.entry_for(&m).unwrap().rank_k, 1);
        assert_eq!(c.entry_by_rank(0).unwrap().n_vars(), 3);
        assert!(matches!(
            c.entry_for(&"1/3,1/3".parse().unwrap()),
            Err(Error::UnknownMessage)
        ));
    }

    #[test]
    fn duplicate_rank_is_rejected() {
        let text = "germ=x4_minus_y2.germ message=1/4,1/2 s0=1 box=-2:2 rank_k=1 quad=2,0\n\
                    germ=x2.germ message=1/2 s0=1 box=-2:2 rank_k=1 quad=0 linear=1\n";
        assert!(matches!(load_with_x2(text), Err(Error::InvalidCatalog(_))));
    }

    #[test]
    fn wrong_rank_is_rejected() {
        let text = "germ=x4_minus_y2.germ message=1/4,1/2 s0=1 box=-2:2 rank_k=0 quad=2,0\n";
        let err = load_with_x2(text).unwrap_err();
        assert!(err.to_string().contains("rank_k = 0"), "{}", err);
    }

    #[test]
    fn message_must_match_weights() {
        let text = "germ=x4_minus_y2.germ message=1/2,1/2 s0=1 box=-2:2 rank_k=1 quad=2,0\n";
        assert!(matches!(load_with_x2(text), Err(Error::InvalidCatalog(_))));
    }

    #[test]
    fn malformed_fields() {
        for text in [
            "germ=x2.germ message=1/2 s0=1 rank_k=0\n",
            "germ=x2.germ message=1/2 s0=-1 box=-2:2 rank_k=0\n",
            "germ=x2.germ message=1/2 s0=1 box=-2 rank_k=0\n",
            "germ=x2.germ message=1/2 s0=1 box=-2:2 rank_k=0 colour=red\n",
            "germ=nope.germ message=1/2 s0=1 box=-2:2 rank_k=0\n",
            "",
        ] {
            assert!(load_with_x2(text).is_err(), "{:?}", text);
        }
    }

    #[test]
    fn per_axis_box() {
        let text = "germ=x4_minus_y2.germ message=1/4,1/2 s0=1 box=-1:1,-3:2 rank_k=1 quad=2,0\n";
        let c = load_with_x2(text).unwrap();
        assert_eq!(c.entries()[0].region.lower(), &[-1.0, -3.0]);
        assert_eq!(c.entries()[0].region.upper(), &[1.0, 2.0]);
    }
}
