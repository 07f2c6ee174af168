use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::germ::WeightVector;
use crate::morse::{fmt_num, MorseVector};

use super::catalog::GermCatalog;
use super::scheme::{
    draw_pk, encrypt, Ciphertext, Ciphertext1, Ciphertext2, EncryptOptions, KeyRange, Scheme,
};

/// One public key `s` with the secret Morse vector it induces on every
/// catalog entry.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRing {
    pub pk: f64,
    pub keys: Vec<MorseVector>,
}

impl KeyRing {
    /// Draws `s` with `|s| <= min s0` and computes each entry's key,
    /// redrawing on degenerate critical points (at most 16 retries).
    pub fn generate<R: Rng>(catalog: &GermCatalog, range: KeyRange, rng: &mut R) -> Result<Self> {
        let s0 = catalog
            .entries()
            .iter()
            .map(|e| e.s0)
            .fold(f64::INFINITY, f64::min);
        let mut last = None;
        for _ in 0..17 {
            let pk = draw_pk(rng, s0, range);
            let keys: Result<Vec<MorseVector>> = catalog
                .entries()
                .iter()
                .map(|e| catalog.secret_key(e, pk))
                .collect();
            match keys {
                Ok(keys) => return Ok(KeyRing { pk, keys }),
                Err(e @ Error::DegenerateCritical { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    /// Trial decryption: the first entry whose own key decrypts `c` to that
    /// entry's message.
    pub fn decrypt(&self, catalog: &GermCatalog, c: &Ciphertext) -> Result<WeightVector> {
        for (entry, sk) in catalog.entries().iter().zip(&self.keys) {
            if let Ok(m) = super::scheme::decrypt(catalog, sk, c) {
                if m == entry.message {
                    return Ok(m);
                }
            }
        }
        Err(Error::Decryption(format!(
            "no key decrypts {} consistently",
            c
        )))
    }
}

/// What the attacker sees: the public key and the public parameters.
#[derive(Debug, Clone, Copy)]
pub struct AttackerView<'a> {
    pub catalog: &'a GermCatalog,
    pub scheme: Scheme,
    pub pk: f64,
    pub encrypt_options: EncryptOptions,
}

/// Decryption oracle that logs every query and refuses the challenge.
#[derive(Debug)]
pub struct DecryptionOracle<'a> {
    catalog: &'a GermCatalog,
    ring: &'a KeyRing,
    challenge: Option<Ciphertext>,
    trial: usize,
    log: Vec<String>,
}

impl<'a> DecryptionOracle<'a> {
    pub fn query(&mut self, c: &Ciphertext) -> Result<WeightVector> {
        if self.challenge.as_ref() == Some(c) {
            self.log
                .push(format!("trial={} query={} answer=refused", self.trial, c));
            return Err(Error::ProtocolViolation(format!(
                "trial {}: the challenge ciphertext was submitted to the oracle",
                self.trial
            )));
        }
        let answer = self.ring.decrypt(self.catalog, c);
        let shown = match &answer {
            Ok(m) => m.to_string(),
            Err(_) => "error".to_string(),
        };
        self.log
            .push(format!("trial={} query={} answer={}", self.trial, c, shown));
        answer
    }

    pub fn queries(&self) -> usize {
        self.log.len()
    }
}

/// A strategy in the chosen-ciphertext game. Implementations keep no state
/// between calls; trials run concurrently.
pub trait Attacker: Sync {
    fn name(&self) -> &str;

    /// The two challenge messages; by default the first two catalog entries.
    fn choose(
        &self,
        view: &AttackerView,
        _oracle: &mut DecryptionOracle,
        _rng: &mut ChaCha8Rng,
    ) -> Result<(WeightVector, WeightVector)> {
        let e = view.catalog.entries();
        Ok((e[0].message.clone(), e[1].message.clone()))
    }

    /// The guess `b'` for the hidden bit.
    fn guess(
        &self,
        view: &AttackerView,
        messages: &(WeightVector, WeightVector),
        challenge: &Ciphertext,
        oracle: &mut DecryptionOracle,
        rng: &mut ChaCha8Rng,
    ) -> Result<bool>;
}

/// Ignores everything and flips a coin.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomGuess;

impl Attacker for RandomGuess {
    fn name(&self) -> &str {
        "guess"
    }

    fn guess(
        &self,
        _: &AttackerView,
        _: &(WeightVector, WeightVector),
        _: &Ciphertext,
        _: &mut DecryptionOracle,
        rng: &mut ChaCha8Rng,
    ) -> Result<bool> {
        Ok(rng.random())
    }
}

/// Encrypts the first message under the public key and compares.
#[derive(Debug, Clone, Copy, Default)]
pub struct Reencrypt;

impl Attacker for Reencrypt {
    fn name(&self) -> &str {
        "reencrypt"
    }

    fn guess(
        &self,
        view: &AttackerView,
        messages: &(WeightVector, WeightVector),
        challenge: &Ciphertext,
        _: &mut DecryptionOracle,
        _: &mut ChaCha8Rng,
    ) -> Result<bool> {
        let c0 = encrypt(
            view.scheme,
            view.catalog,
            view.pk,
            &messages.0,
            &view.encrypt_options,
        )?;
        Ok(&c0 != challenge)
    }
}

/// Uses only decryption answers on ciphertexts other than the challenge.
/// For the first construction it moves one challenge point slightly, which
/// keeps the point count; otherwise it probes other counts and eliminates.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleOnly;

impl OracleOnly {
    fn probe(view: &AttackerView, count: usize) -> Ciphertext {
        match view.scheme {
            Scheme::One => Ciphertext::One(Ciphertext1 {
                points: (0..count)
                    .map(|j| {
                        let mut p = vec![0.0; view.catalog.encoded_len()];
                        p[0] = j as f64;
                        p
                    })
                    .collect(),
            }),
            Scheme::Two => Ciphertext::Two(Ciphertext2::zeros(count)),
        }
    }
}

impl Attacker for OracleOnly {
    fn name(&self) -> &str {
        "oracle"
    }

    fn guess(
        &self,
        view: &AttackerView,
        messages: &(WeightVector, WeightVector),
        challenge: &Ciphertext,
        oracle: &mut DecryptionOracle,
        rng: &mut ChaCha8Rng,
    ) -> Result<bool> {
        if let Ciphertext::One(c) = challenge {
            if let Some(first) = c.points.first() {
                let mut mauled = c.clone();
                mauled.points[0][0] = first[0] + 1e-3;
                if let Ok(m) = oracle.query(&Ciphertext::One(mauled)) {
                    return Ok(m == messages.1);
                }
            }
        }
        let mut seen = (false, false);
        for count in 0..=view.catalog.encoded_len() {
            if count == challenge.count() {
                continue;
            }
            if let Ok(m) = oracle.query(&Self::probe(view, count)) {
                seen.0 |= m == messages.0;
                seen.1 |= m == messages.1;
            }
        }
        Ok(match seen {
            (true, false) => true,
            (false, true) => false,
            _ => rng.random(),
        })
    }
}

pub fn attacker_by_name(name: &str) -> Result<Box<dyn Attacker>> {
    match name {
        "guess" => Ok(Box::new(RandomGuess)),
        "reencrypt" => Ok(Box::new(Reencrypt)),
        "oracle" => Ok(Box::new(OracleOnly)),
        other => Err(Error::InvalidArgument(format!(
            "unknown attacker {:?} (expected guess, reencrypt or oracle)",
            other
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcaOptions {
    pub scheme: Scheme,
    pub trials: usize,
    pub seed: u64,
    pub key_range: KeyRange,
    pub encrypt_options: EncryptOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub pk: f64,
    pub b: bool,
    pub b_prime: bool,
    pub transcript: Vec<String>,
}

impl TrialOutcome {
    pub fn success(&self) -> bool {
        self.b == self.b_prime
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcaReport {
    pub attacker: String,
    pub scheme: Scheme,
    pub outcomes: Vec<TrialOutcome>,
}

impl CcaReport {
    pub fn trials(&self) -> usize {
        self.outcomes.len()
    }

    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|o| o.success()).count()
    }

    pub fn success_rate(&self) -> f64 {
        self.successes() as f64 / self.trials().max(1) as f64
    }

    /// `success_rate - 1/2`.
    pub fn advantage(&self) -> f64 {
        self.success_rate() - 0.5
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,pk,b,b_prime,success\n");
        for o in &self.outcomes {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                o.trial,
                fmt_num(o.pk),
                o.b as u8,
                o.b_prime as u8,
                o.success() as u8
            ));
        }
        s
    }

    /// One line per oracle query, in trial order.
    pub fn transcript(&self) -> String {
        let mut s = String::new();
        for line in self.outcomes.iter().flat_map(|o| &o.transcript) {
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "attacker={} scheme={} trials={} successes={} success_rate={:.4} advantage={:+.4}",
            self.attacker,
            self.scheme.number(),
            self.trials(),
            self.successes(),
            self.success_rate(),
            self.advantage()
        )
    }
}

fn run_trial(
    attacker: &dyn Attacker,
    catalog: &GermCatalog,
    opts: &CcaOptions,
    trial: usize,
) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(trial as u64 + 1);
    let ring = KeyRing::generate(catalog, opts.key_range, &mut rng)?;
    let view = AttackerView {
        catalog,
        scheme: opts.scheme,
        pk: ring.pk,
        encrypt_options: opts.encrypt_options,
    };
    let mut oracle = DecryptionOracle {
        catalog,
        ring: &ring,
        challenge: None,
        trial,
        log: Vec::new(),
    };
    let messages = attacker.choose(&view, &mut oracle, &mut rng)?;
    catalog.entry_for(&messages.0)?;
    catalog.entry_for(&messages.1)?;
    if messages.0 == messages.1 {
        return Err(Error::ProtocolViolation(
            "the two challenge messages coincide".into(),
        ));
    }
    let b: bool = rng.random();
    let mb = if b { &messages.1 } else { &messages.0 };
    let challenge = encrypt(opts.scheme, catalog, ring.pk, mb, &opts.encrypt_options)?;
    oracle.challenge = Some(challenge.clone());
    let b_prime = attacker.guess(&view, &messages, &challenge, &mut oracle, &mut rng)?;
    Ok(TrialOutcome {
        trial,
        pk: ring.pk,
        b,
        b_prime,
        transcript: oracle.log,
    })
}

/// Runs the chosen-ciphertext game `trials` times; trial `i` draws from
/// ChaCha stream `i + 1` of the seed.
pub fn cca_experiment(
    attacker: &dyn Attacker,
    catalog: &GermCatalog,
    opts: &CcaOptions,
) -> Result<CcaReport> {
    if catalog.entries().len() < 2 {
        return Err(Error::InvalidArgument(
            "the game needs at least two messages".into(),
        ));
    }
    let outcomes = (0..opts.trials)
        .into_par_iter()
        .map(|t| run_trial(attacker, catalog, opts, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(CcaReport {
        attacker: attacker.name().to_string(),
        scheme: opts.scheme,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(scheme: Scheme, trials: usize) -> CcaOptions {
        CcaOptions {
            scheme,
            trials,
            seed: 42,
            key_range: KeyRange::Positive,
            encrypt_options: EncryptOptions::default(),
        }
    }

    struct Cheater;

    impl Attacker for Cheater {
        fn name(&self) -> &str {
            "cheater"
        }

        fn guess(
            &self,
            _: &AttackerView,
            messages: &(WeightVector, WeightVector),
            challenge: &Ciphertext,
            oracle: &mut DecryptionOracle,
            _: &mut ChaCha8Rng,
        ) -> Result<bool> {
            Ok(oracle.query(challenge)? == messages.1)
        }
    }

    #[test]
    fn reencryption_wins() {
        let c = GermCatalog::shipped();
        for scheme in [Scheme::One, Scheme::Two] {
            let r = cca_experiment(&Reencrypt, &c, &opts(scheme, 40)).unwrap();
            assert_eq!(r.success_rate(), 1.0);
            assert_eq!(r.advantage(), 0.5);
        }
    }

    #[test]
    fn querying_the_challenge_is_a_violation() {
        let c = GermCatalog::shipped();
        assert!(matches!(
            cca_experiment(&Cheater, &c, &opts(Scheme::One, 3)),
            Err(Error::ProtocolViolation(_))
        ));
    }

    #[test]
    fn oracle_attacker_logs_queries() {
        let c = GermCatalog::shipped();
        let r = cca_experiment(&OracleOnly, &c, &opts(Scheme::Two, 20)).unwrap();
        let log = r.transcript();
        assert!(log.lines().count() >= 20);
        assert!(log.lines().all(|l| l.starts_with("trial=")));
        assert!(!log.contains("refused"));
    }

    #[test]
    fn guessing_is_reproducible() {
        let c = GermCatalog::shipped();
        let a = cca_experiment(&RandomGuess, &c, &opts(Scheme::One, 50)).unwrap();
        let b = cca_experiment(&RandomGuess, &c, &opts(Scheme::One, 50)).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.transcript().is_empty());
        assert!(a.summary().starts_with("attacker=guess scheme=1 trials=50"));
    }

    #[test]
    fn ring_decrypts_every_message() {
        let c = GermCatalog::shipped();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ring = KeyRing::generate(&c, KeyRange::Positive, &mut rng).unwrap();
        for e in c.entries() {
            for scheme in [Scheme::One, Scheme::Two] {
                let ct =
                    encrypt(scheme, &c, ring.pk, &e.message, &EncryptOptions::default()).unwrap();
                assert_eq!(ring.decrypt(&c, &ct).unwrap(), e.message);
            }
        }
        assert!(ring
            .decrypt(&c, &Ciphertext::Two(Ciphertext2::zeros(3)))
            .is_err());
    }

    #[test]
    fn unknown_attacker_name() {
        assert!(attacker_by_name("psychic").is_err());
        assert_eq!(attacker_by_name("oracle").unwrap().name(), "oracle");
    }
}
