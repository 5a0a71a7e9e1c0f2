//! Reproducible potential families: two-valued patterns, Bernoulli words,
//! the Thue–Morse substitution sequence, Sturmian rotation sequences, and
//! file-loaded custom potentials.
//!
//! Every generator is a pure function of its parameters (and seed, where
//! randomness is involved): identical inputs reproduce identical sequences
//! bit for bit, across runs and thread counts.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{CoreError, Result};

/// A bounded real potential sampled on sites `1..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSeq {
    /// `values[i]` is `V(i+1)` — storage is 0-based, sites are 1-based.
    values: Vec<f64>,
    /// Exact bound: `|V(n)| ≤ sup_norm` for every site.
    sup_norm: f64,
    /// Human-readable generator descriptor, including any seed.
    provenance: String,
}

impl PotentialSeq {
    /// Build from explicit values; the sup norm is computed (attained).
    pub fn from_values(values: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(CoreError::InvalidParam("empty potential".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidParam(
                "potential values must be finite".into(),
            ));
        }
        let sup_norm = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(Self {
            values,
            sup_norm,
            provenance: provenance.into(),
        })
    }

    /// Potential value at 1-based site `n` (panics if out of range).
    #[inline]
    pub fn value(&self, site: usize) -> f64 {
        self.values[site - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }
}

/// Constant potential `V ≡ v` on `L` sites.
pub fn constant(v: f64, l: usize) -> Result<PotentialSeq> {
    if l == 0 {
        return Err(CoreError::InvalidParam("length must be ≥ 1".into()));
    }
    PotentialSeq::from_values(vec![v; l], format!("constant(v={v},L={l})"))
}

/// Two-valued potential: `V(n) = a` where the pattern letter is 0 and `b`
/// where it is 1. The sup norm `max(|a|, |b|)` is recorded even when one
/// letter never occurs, matching the generator's declared range.
pub fn two_valued(a: f64, b: f64, pattern: &[u8]) -> Result<PotentialSeq> {
    if pattern.is_empty() {
        return Err(CoreError::InvalidParam("empty pattern".into()));
    }
    if pattern.iter().any(|&w| w > 1) {
        return Err(CoreError::InvalidParam(
            "pattern letters must be 0 or 1".into(),
        ));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(CoreError::InvalidParam("levels must be finite".into()));
    }
    let values: Vec<f64> = pattern
        .iter()
        .map(|&w| if w == 0 { a } else { b })
        .collect();
    Ok(PotentialSeq {
        values,
        sup_norm: a.abs().max(b.abs()),
        provenance: format!("two_valued(a={a},b={b},pattern_len={})", pattern.len()),
    })
}

/// A binary word with the two potential levels attached to its letters —
/// the building block of the random piecewise-constant continuum model and
/// of random two-valued lattice potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct CellWord {
    word: Vec<u8>,
    /// Potential value on cells with letter 0.
    pub level0: f64,
    /// Potential value on cells with letter 1.
    pub level1: f64,
    /// Probability of letter 0, when the word is a Bernoulli draw.
    pub bernoulli_p: Option<f64>,
    provenance: String,
}

impl CellWord {
    /// Deterministic word from an explicit letter pattern.
    pub fn from_pattern(word: Vec<u8>, level0: f64, level1: f64) -> Result<Self> {
        if word.is_empty() {
            return Err(CoreError::InvalidParam("empty word".into()));
        }
        if word.iter().any(|&w| w > 1) {
            return Err(CoreError::InvalidParam("letters must be 0 or 1".into()));
        }
        let n = word.len();
        Ok(Self {
            word,
            level0,
            level1,
            bernoulli_p: None,
            provenance: format!("pattern(len={n},g0={level0},g1={level1})"),
        })
    }

    /// Letter at 0-based cell index.
    #[inline]
    pub fn letter(&self, cell: usize) -> u8 {
        self.word[cell]
    }

    /// Potential value on a 0-based cell.
    #[inline]
    pub fn cell_value(&self, cell: usize) -> f64 {
        if self.word[cell] == 0 {
            self.level0
        } else {
            self.level1
        }
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.word
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Attach different levels to the same letters.
    pub fn with_levels(mut self, level0: f64, level1: f64) -> Self {
        self.level0 = level0;
        self.level1 = level1;
        self.provenance = format!("{} levels(g0={level0},g1={level1})", self.provenance);
        self
    }

    /// Reinterpret the word as a lattice potential (site n takes the value
    /// of cell n−1).
    pub fn to_potential(&self) -> PotentialSeq {
        let values: Vec<f64> = (0..self.len()).map(|i| self.cell_value(i)).collect();
        PotentialSeq {
            values,
            sup_norm: self.level0.abs().max(self.level1.abs()),
            provenance: self.provenance.clone(),
        }
    }
}

/// i.i.d. Bernoulli word with `P(letter = 0) = p`, reproducible under the
/// seed. Levels default to `(0, 1)` (letter value = potential value); use
/// [`CellWord::with_levels`] for other cell potentials.
///
/// The generator is ChaCha8 seeded with `seed`; ensemble experiments that
/// need many independent words derive them from the same seed by setting
/// the ChaCha stream number, so draws are reproducible and order-independent
/// under parallel execution.
pub fn bernoulli_word(p: f64, seed: u64, n: usize) -> Result<CellWord> {
    bernoulli_word_stream(p, seed, 0, n)
}

/// Bernoulli word on an explicit ChaCha stream (for per-trial derived RNGs).
pub fn bernoulli_word_stream(p: f64, seed: u64, stream: u64, n: usize) -> Result<CellWord> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CoreError::InvalidParam(format!(
            "Bernoulli probability must lie strictly in (0,1), got {p}"
        )));
    }
    if n == 0 {
        return Err(CoreError::InvalidParam("empty word".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let word: Vec<u8> = (0..n)
        .map(|_| if rng.random::<f64>() < p { 0u8 } else { 1u8 })
        .collect();
    Ok(CellWord {
        word,
        level0: 0.0,
        level1: 1.0,
        bernoulli_p: Some(p),
        provenance: format!("bernoulli(p={p},seed={seed},stream={stream},n={n})"),
    })
}

/// Random two-valued lattice potential: Bernoulli letters mapped to levels
/// `a` (letter 0) and `b` (letter 1).
pub fn bernoulli_two_valued(a: f64, b: f64, p: f64, seed: u64, l: usize) -> Result<PotentialSeq> {
    let word = bernoulli_word(p, seed, l)?.with_levels(a, b);
    Ok(word.to_potential())
}

/// First `L` letters of the Thue–Morse fixed point of `a → ab`, `b → ba`
/// (started from `a`), mapped to the values `a` and `b`.
///
/// Uses the closed form: the letter at 1-based position `n` is `b` exactly
/// when the binary digit sum of `n − 1` is odd.
pub fn thue_morse(a: f64, b: f64, l: usize) -> Result<PotentialSeq> {
    if l == 0 {
        return Err(CoreError::InvalidParam("length must be ≥ 1".into()));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(CoreError::InvalidParam("levels must be finite".into()));
    }
    let values: Vec<f64> = (0..l as u64)
        .map(|i| if i.count_ones() % 2 == 0 { a } else { b })
        .collect();
    Ok(PotentialSeq {
        values,
        sup_norm: a.abs().max(b.abs()),
        provenance: format!("thue_morse(a={a},b={b},L={l})"),
    })
}

/// How close a rotation number may come to a small-denominator rational
/// before it is rejected as effectively rational.
const RATIONAL_REJECT_TOL: f64 = 1e-12;
const RATIONAL_REJECT_MAX_DEN: u64 = 64;

/// Sturmian potential `V(n) = λ·χ_[1−ρ, 1)(frac(n·ρ + θ))`.
///
/// The circle rotation is evaluated in exact 64-bit fixed-point arithmetic:
/// `ρ` and `θ` are quantized to multiples of 2⁻⁶⁴ once, and the orbit
/// `frac(nρ + θ)` becomes exact wrapping integer arithmetic with zero
/// accumulation drift for any `n`. (Naive floating summation flips letters
/// near the discontinuity; the quantization error here is a one-time
/// 2⁻⁶⁴ ≈ 5.4e−20 perturbation of the angle, far below the rational-closeness
/// rejection scale.)
///
/// `ρ` must lie in (0,1) and not within 1e−12 of a rational with
/// denominator ≤ 64; `λ` must be nonzero.
pub fn sturmian(lambda: f64, rho: f64, theta: f64, l: usize) -> Result<PotentialSeq> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(CoreError::InvalidParam(
            "Sturmian coupling λ must be nonzero and finite".into(),
        ));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(CoreError::InvalidParam(format!(
            "rotation number must lie in (0,1), got {rho}"
        )));
    }
    if !theta.is_finite() {
        return Err(CoreError::InvalidParam("phase must be finite".into()));
    }
    if l == 0 {
        return Err(CoreError::InvalidParam("length must be ≥ 1".into()));
    }
    for q in 1..=RATIONAL_REJECT_MAX_DEN {
        let p = (rho * q as f64).round();
        if (rho - p / q as f64).abs() <= RATIONAL_REJECT_TOL {
            return Err(CoreError::InvalidParam(format!(
                "rotation number {rho} is within {RATIONAL_REJECT_TOL:.0e} of {p}/{q}; \
                 an irrational rotation number is required"
            )));
        }
    }
    let quantum = 2.0f64.powi(64);
    let r = (rho * quantum).round() as u64; // ρ < 1 − 1e−12 keeps this < 2⁶⁴
    let th = ((theta.rem_euclid(1.0)) * quantum).round() as u128 as u64; // wraps 2⁶⁴ → 0
    let membership_threshold = r.wrapping_neg(); // 2⁶⁴ − R
    let values: Vec<f64> = (1..=l as u64)
        .map(|n| {
            let angle = th.wrapping_add(n.wrapping_mul(r));
            if angle >= membership_threshold {
                lambda
            } else {
                0.0
            }
        })
        .collect();
    Ok(PotentialSeq {
        values,
        sup_norm: lambda.abs(),
        provenance: format!("sturmian(lambda={lambda},rho={rho},theta={theta},L={l})"),
    })
}

/// Load a potential from a plain-text file: one real per line in site
/// order, with an optional first header line `sup_norm <value>`. Empty
/// lines and lines starting with `#` are skipped. If the header is present
/// it must bound every value; if absent the attained maximum is used.
pub fn load_potential_file(path: &std::path::Path) -> Result<PotentialSeq> {
    let text = std::fs::read_to_string(path)?;
    let mut declared_sup: Option<f64> = None;
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("sup_norm") {
            if declared_sup.is_some() || !values.is_empty() {
                return Err(CoreError::Parse(format!(
                    "{}:{}: sup_norm header must appear once, before any value",
                    path.display(),
                    lineno + 1
                )));
            }
            declared_sup = Some(rest.trim().parse::<f64>().map_err(|e| {
                CoreError::Parse(format!(
                    "{}:{}: bad sup_norm value: {e}",
                    path.display(),
                    lineno + 1
                ))
            })?);
            continue;
        }
        values.push(line.parse::<f64>().map_err(|e| {
            CoreError::Parse(format!(
                "{}:{}: bad potential value: {e}",
                path.display(),
                lineno + 1
            ))
        })?);
    }
    let mut seq = PotentialSeq::from_values(values, format!("file({})", path.display()))?;
    if let Some(sup) = declared_sup {
        if !sup.is_finite() || sup < seq.sup_norm {
            return Err(CoreError::InvalidParam(format!(
                "declared sup_norm {sup} is smaller than the attained maximum {}",
                seq.sup_norm
            )));
        }
        seq.sup_norm = sup;
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_valued_examples() {
        let v = two_valued(0.0, 1.0, &[0, 1, 1, 0]).unwrap();
        assert_eq!(v.values(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(v.sup_norm(), 1.0);
        assert_eq!(v.value(2), 1.0, "site indexing is 1-based");

        let degenerate = two_valued(5.0, 5.0, &[0, 1, 0]).unwrap();
        assert_eq!(degenerate.values(), &[5.0, 5.0, 5.0], "a = b is constant");

        let all_b = two_valued(0.0, 2.0, &[1, 1, 1, 1]).unwrap();
        assert_eq!(all_b.values(), &[2.0, 2.0, 2.0, 2.0]);

        assert!(two_valued(0.0, 1.0, &[]).is_err(), "empty pattern rejected");
        assert!(two_valued(0.0, 1.0, &[2]).is_err(), "non-binary letter rejected");
    }

    #[test]
    fn bernoulli_words_are_deterministic_and_calibrated() {
        let w1 = bernoulli_word(0.5, 12345, 2048).unwrap();
        let w2 = bernoulli_word(0.5, 12345, 2048).unwrap();
        assert_eq!(w1, w2, "identical (p, seed, N) must reproduce the word exactly");

        let w3 = bernoulli_word(0.5, 12346, 2048).unwrap();
        assert_ne!(w1.letters(), w3.letters(), "different seeds should differ");

        // Law of large numbers sanity band at p close to 1.
        let almost_all_zero = bernoulli_word(0.999, 7, 10_000).unwrap();
        let zero_frac = almost_all_zero
            .letters()
            .iter()
            .filter(|&&w| w == 0)
            .count() as f64
            / 10_000.0;
        assert!(
            (0.995..=1.0).contains(&zero_frac),
            "p = 0.999 should give almost all zeros, got fraction {zero_frac}"
        );

        // Binomial concentration at p = 1/2 (6σ ≈ 0.0095 at N = 1e5).
        let balanced = bernoulli_word(0.5, 99, 100_000).unwrap();
        let mean = balanced.letters().iter().map(|&w| w as f64).sum::<f64>() / 100_000.0;
        assert!(
            (mean - 0.5).abs() <= 0.01,
            "empirical mean {mean} should be within 0.01 of 0.5"
        );

        assert!(bernoulli_word(0.0, 1, 10).is_err(), "p = 0 rejected");
        assert!(bernoulli_word(1.0, 1, 10).is_err(), "p = 1 rejected");
    }

    #[test]
    fn bernoulli_streams_are_independent() {
        let a = bernoulli_word_stream(0.5, 5, 0, 256).unwrap();
        let b = bernoulli_word_stream(0.5, 5, 1, 256).unwrap();
        assert_ne!(a.letters(), b.letters(), "distinct streams must decorrelate");
    }

    #[test]
    fn thue_morse_prefix_and_closed_form() {
        let v = thue_morse(0.0, 1.0, 8).unwrap();
        // a,b,b,a,b,a,a,b after three substitution rounds.
        assert_eq!(v.values(), &[0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let two = thue_morse(0.0, 1.0, 2).unwrap();
        assert_eq!(two.values(), &[0.0, 1.0], "one substitution step gives ab");
    }

    #[test]
    fn thue_morse_matches_substitution_iteration() {
        // Independent oracle: iterate a → ab, b → ba from "a".
        let target = 1usize << 14;
        let mut word = vec![0u8];
        while word.len() < target {
            word = word
                .iter()
                .flat_map(|&w| if w == 0 { [0u8, 1u8] } else { [1u8, 0u8] })
                .collect();
        }
        let v = thue_morse(0.0, 1.0, target).unwrap();
        for (i, &letter) in word.iter().take(target).enumerate() {
            assert_eq!(
                v.value(i + 1),
                letter as f64,
                "digit-sum closed form disagrees with substitution at site {}",
                i + 1
            );
        }
    }

    const GOLDEN_RHO: f64 = 0.6180339887498949; // (√5 − 1)/2

    #[test]
    fn sturmian_golden_prefix() {
        let v = sturmian(1.0, GOLDEN_RHO, 0.0, 5).unwrap();
        assert_eq!(
            v.values(),
            &[1.0, 0.0, 1.0, 1.0, 0.0],
            "golden-mean prefix should be 1,0,1,1,0"
        );
        assert_eq!(v.sup_norm(), 1.0);
    }

    #[test]
    fn sturmian_rejects_bad_inputs() {
        assert!(sturmian(0.0, GOLDEN_RHO, 0.0, 5).is_err(), "λ = 0 rejected");
        assert!(sturmian(1.0, 0.5, 0.0, 5).is_err(), "rational ρ = 1/2 rejected");
        assert!(
            sturmian(1.0, 21.0 / 34.0, 0.0, 5).is_err(),
            "small-denominator rational rejected"
        );
        assert!(sturmian(1.0, 1.5, 0.0, 5).is_err(), "ρ outside (0,1) rejected");
    }

    #[test]
    fn sturmian_shift_equivariance() {
        // Shifting the phase by exactly ρ advances the sequence one index.
        let base = sturmian(1.0, GOLDEN_RHO, 0.25, 1001).unwrap();
        let shifted = sturmian(1.0, GOLDEN_RHO, 0.25 + GOLDEN_RHO, 1000).unwrap();
        for n in 1..=1000usize {
            assert_eq!(
                shifted.value(n),
                base.value(n + 1),
                "rotation equivariance failed at site {n}"
            );
        }
    }

    #[test]
    fn sturmian_letter_frequency_is_rho() {
        let l = 100_000usize;
        let v = sturmian(1.0, GOLDEN_RHO, 0.0, l).unwrap();
        let freq = v.values().iter().filter(|&&x| x != 0.0).count() as f64 / l as f64;
        assert!(
            (freq - GOLDEN_RHO).abs() <= 0.01,
            "equidistribution: λ-frequency {freq} should be within 0.01 of ρ = {GOLDEN_RHO}"
        );
    }

    #[test]
    fn sturmian_balance_property() {
        // Any two equal-length windows carry λ-counts differing by ≤ 1.
        let l = 10_000usize;
        let v = sturmian(1.0, GOLDEN_RHO, 0.0, l).unwrap();
        let bits: Vec<u32> = v.values().iter().map(|&x| (x != 0.0) as u32).collect();
        let mut prefix = vec![0u32; l + 1];
        for i in 0..l {
            prefix[i + 1] = prefix[i] + bits[i];
        }
        for w in (1..=100usize).step_by(7) {
            let mut lo = u32::MAX;
            let mut hi = 0u32;
            for start in 0..=(l - w) {
                let count = prefix[start + w] - prefix[start];
                lo = lo.min(count);
                hi = hi.max(count);
            }
            assert!(
                hi - lo <= 1,
                "balance violated for window {w}: counts range {lo}..{hi}"
            );
        }
    }

    #[test]
    fn potential_file_round_trip() {
        let dir = std::env::temp_dir().join("dirac_core_potentials_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pot.txt");
        std::fs::write(&path, "# example potential\nsup_norm 2.0\n0.5\n-1.25\n2.0\n").unwrap();
        let v = load_potential_file(&path).unwrap();
        assert_eq!(v.values(), &[0.5, -1.25, 2.0]);
        assert_eq!(v.sup_norm(), 2.0, "declared sup_norm is kept");

        let path2 = dir.join("pot_noheader.txt");
        std::fs::write(&path2, "1.0\n-3.0\n").unwrap();
        let v2 = load_potential_file(&path2).unwrap();
        assert_eq!(v2.sup_norm(), 3.0, "computed sup_norm is the attained max");

        let path3 = dir.join("pot_bad.txt");
        std::fs::write(&path3, "sup_norm 0.5\n1.0\n").unwrap();
        assert!(
            load_potential_file(&path3).is_err(),
            "declared bound below attained max must be rejected"
        );

        let path4 = dir.join("pot_garbage.txt");
        std::fs::write(&path4, "1.0\nnot-a-number\n").unwrap();
        assert!(matches!(
            load_potential_file(&path4),
            Err(CoreError::Parse(_))
        ));
    }

    #[test]
    fn cell_word_to_potential_maps_levels() {
        let w = CellWord::from_pattern(vec![0, 1, 1, 0], -1.0, 3.0).unwrap();
        let v = w.to_potential();
        assert_eq!(v.values(), &[-1.0, 3.0, 3.0, -1.0]);
        assert_eq!(v.sup_norm(), 3.0);
        assert_eq!(w.cell_value(1), 3.0);
        assert_eq!(w.letter(0), 0);
    }
}
