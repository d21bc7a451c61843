//! Atomic rules, the finite rule universe and the bit-vector encoding of
//! conjunctive rules.
//!
//! A conjunctive rule over a universe of `n` atoms is identified with its
//! characteristic vector in `{0,1}^n`. Conjunction of rules is union of their
//! conjunct sets, which becomes bitwise OR on the vectors, so `(BitRule, |)`
//! is a commutative idempotent monoid with the all-zeros vector as identity.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::{Cohort, Schema};
use crate::error::{Error, Result};

/// The boolean test an atom applies to a single record field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    NumericLe(f64),
    NumericGt(f64),
    CategoryEq(String),
}

impl Predicate {
    fn kind(&self) -> &'static str {
        match self {
            Predicate::NumericLe(_) => "le",
            Predicate::NumericGt(_) => "gt",
            Predicate::CategoryEq(_) => "eq",
        }
    }

    fn parameter(&self) -> String {
        match self {
            Predicate::NumericLe(t) | Predicate::NumericGt(t) => t.to_string(),
            Predicate::CategoryEq(level) => level.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicRule {
    pub id: usize,
    pub field: String,
    pub predicate: Predicate,
}

impl fmt::Display for AtomicRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.predicate {
            Predicate::NumericLe(t) => write!(f, "{} <= {}", self.field, t),
            Predicate::NumericGt(t) => write!(f, "{} > {}", self.field, t),
            Predicate::CategoryEq(level) => write!(f, "{} = {}", self.field, level),
        }
    }
}

/// Fixed-length packed bit vector; bit `i` set means atom `i` is a conjunct.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRule {
    words: Vec<u64>,
    len: usize,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitRule {
    /// The identity rule: no conjuncts, selects everything.
    pub fn zeros(len: usize) -> Self {
        BitRule {
            words: vec![0; word_count(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut r = Self::zeros(len);
        for i in 0..len {
            r.set(i, true);
        }
        r
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut r = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            r.set(i, b);
        }
        r
    }

    /// Builds a rule from the low `len` bits of `mask` (bit `i` of the mask is atom `i`).
    pub fn from_mask(mask: u64, len: usize) -> Self {
        assert!(len <= 64, "from_mask supports at most 64 atoms");
        let mut r = Self::zeros(len);
        if len > 0 {
            let keep = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
            r.words[0] = mask & keep;
        }
        r
    }

    /// Parses a string of `0`/`1` characters, atom 0 first.
    pub fn parse_bits(s: &str) -> Option<Self> {
        let bits: Option<Vec<bool>> = s
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.map(|b| Self::from_bools(&b))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let w = &mut self.words[i / 64];
        if value {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of set bits in increasing order.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    fn check_len(&self, other: &BitRule) -> Result<()> {
        if self.len != other.len {
            return Err(Error::UniverseMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        Ok(())
    }

    /// Conjunction of two rules: bitwise OR of their vectors.
    pub fn compose(&self, other: &BitRule) -> Result<BitRule> {
        self.check_len(other)?;
        Ok(BitRule {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
            len: self.len,
        })
    }

    /// Number of atoms in which the two rules differ.
    pub fn hamming(&self, other: &BitRule) -> Result<u32> {
        self.check_len(other)?;
        Ok(self.hamming_unchecked(other))
    }

    pub(crate) fn hamming_unchecked(&self, other: &BitRule) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Lexicographic comparison of the bit strings, atom 0 first, `0 < 1`.
    pub fn lex_cmp(&self, other: &BitRule) -> Ordering {
        for i in 0..self.len.min(other.len) {
            match (self.get(i), other.get(i)) {
                (false, true) => return Ordering::Less,
                (true, false) => return Ordering::Greater,
                _ => {}
            }
        }
        self.len.cmp(&other.len)
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for BitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitRule({})", self.to_bit_string())
    }
}

/// Prints the tuple form, e.g. `(0,0,1,0)`.
impl fmt::Display for BitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for i in 0..self.len {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        write!(f, ")")
    }
}

/// Ordered, finite set of atomic rules. Atom ids equal their positions.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleUniverse {
    atoms: Vec<AtomicRule>,
}

const UNIVERSE_MAGIC: &str = "# rulemonoid universe v1";

impl RuleUniverse {
    pub fn new(atoms: Vec<AtomicRule>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidUniverse("universe needs at least one atom".into()));
        }
        for (pos, atom) in atoms.iter().enumerate() {
            if atom.id != pos {
                return Err(Error::InvalidUniverse(format!(
                    "atom at position {pos} has id {}",
                    atom.id
                )));
            }
            if let Predicate::NumericLe(t) | Predicate::NumericGt(t) = atom.predicate {
                if !t.is_finite() {
                    return Err(Error::InvalidUniverse(format!("atom {pos} has non-finite threshold")));
                }
            }
        }
        Ok(RuleUniverse { atoms })
    }

    /// One atom per categorical level, grouped by field in schema order.
    pub fn categorical(schema: &Schema) -> Result<Self> {
        let mut atoms = Vec::new();
        push_categorical(schema, &mut atoms);
        Self::new(atoms)
    }

    /// Categorical atoms followed by numeric threshold atoms on a quantile grid
    /// of the cohort's observed values. `bins = 10` yields the deciles.
    pub fn from_cohort(cohort: &Cohort, bins: usize) -> Result<Self> {
        let schema = cohort.schema();
        let mut atoms = Vec::new();
        push_categorical(schema, &mut atoms);
        for (j, field) in schema.numeric.iter().enumerate() {
            let observed: Vec<f64> = cohort.records().iter().filter_map(|r| r.numeric[j]).collect();
            for t in quantile_grid(&observed, bins) {
                for predicate in [Predicate::NumericLe(t), Predicate::NumericGt(t)] {
                    atoms.push(AtomicRule {
                        id: atoms.len(),
                        field: field.name.clone(),
                        predicate,
                    });
                }
            }
        }
        Self::new(atoms)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[AtomicRule] {
        &self.atoms
    }

    pub fn atom(&self, id: usize) -> Option<&AtomicRule> {
        self.atoms.get(id)
    }

    /// Characteristic vector of a set of conjuncts.
    pub fn encode<I: IntoIterator<Item = usize>>(&self, conjuncts: I) -> Result<BitRule> {
        let mut rule = BitRule::zeros(self.len());
        for id in conjuncts {
            if id >= self.len() {
                return Err(Error::AtomOutOfRange { id, n: self.len() });
            }
            rule.set(id, true);
        }
        Ok(rule)
    }

    /// Human-readable conjunction, atoms in id order.
    pub fn decode(&self, rule: &BitRule) -> Result<String> {
        if rule.len() != self.len() {
            return Err(Error::UniverseMismatch {
                expected: self.len(),
                found: rule.len(),
            });
        }
        if rule.is_identity() {
            return Ok(IDENTITY_TEXT.to_string());
        }
        Ok(rule
            .ones_iter()
            .map(|i| self.atoms[i].to_string())
            .collect::<Vec<_>>()
            .join(" AND "))
    }

    /// Ids of atoms on numeric `field` with the given operator, with thresholds.
    pub(crate) fn numeric_atoms(&self, field: &str, greater: bool) -> Vec<(usize, f64)> {
        self.atoms
            .iter()
            .filter(|a| a.field == field)
            .filter_map(|a| match (&a.predicate, greater) {
                (Predicate::NumericLe(t), false) | (Predicate::NumericGt(t), true) => Some((a.id, *t)),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn category_atom(&self, field: &str, level: &str) -> Option<usize> {
        self.atoms
            .iter()
            .position(|a| a.field == field && matches!(&a.predicate, Predicate::CategoryEq(l) if l == level))
    }

    /// Tab-separated text form, one atom per line. `source` is recorded as a
    /// header so the file can be tied back to the cohort it was built from.
    pub fn to_text(&self, source: Option<&str>) -> String {
        let mut out = String::new();
        out.push_str(UNIVERSE_MAGIC);
        out.push('\n');
        if let Some(src) = source {
            out.push_str(&format!("# source: {src}\n"));
        }
        out.push_str("id\tfield\tkind\tparameter\n");
        for atom in &self.atoms {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                atom.id,
                atom.field,
                atom.predicate.kind(),
                atom.predicate.parameter()
            ));
        }
        out
    }

    /// Parses [`RuleUniverse::to_text`] output. Returns the universe and the
    /// recorded source hash, if any.
    pub fn from_text(text: &str, path: &Path) -> Result<(Self, Option<String>)> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: {message}", line + 1),
        };
        let mut source = None;
        let mut atoms = Vec::new();
        let mut saw_header = false;
        for (lineno, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix("# source: ") {
                source = Some(rest.trim().to_string());
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !saw_header {
                if line != "id\tfield\tkind\tparameter" {
                    return Err(parse_err(lineno, "expected column header".into()));
                }
                saw_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(parse_err(lineno, format!("expected 4 columns, got {}", cols.len())));
            }
            let id: usize = cols[0]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad id `{}`", cols[0])))?;
            let threshold = || {
                cols[3]
                    .parse::<f64>()
                    .map_err(|_| parse_err(lineno, format!("bad threshold `{}`", cols[3])))
            };
            let predicate = match cols[2] {
                "eq" => Predicate::CategoryEq(cols[3].to_string()),
                "le" => Predicate::NumericLe(threshold()?),
                "gt" => Predicate::NumericGt(threshold()?),
                other => return Err(parse_err(lineno, format!("unknown kind `{other}`"))),
            };
            atoms.push(AtomicRule {
                id,
                field: cols[1].to_string(),
                predicate,
            });
        }
        Ok((Self::new(atoms)?, source))
    }

    pub fn load(path: &Path) -> Result<(Self, Option<String>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }

    /// SHA-256 of the canonical text form (without source header).
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text(None).as_bytes()))
    }
}

pub const IDENTITY_TEXT: &str = "TRUE (no filtering)";

fn push_categorical(schema: &Schema, atoms: &mut Vec<AtomicRule>) {
    for field in &schema.categorical {
        for level in &field.levels {
            atoms.push(AtomicRule {
                id: atoms.len(),
                field: field.name.clone(),
                predicate: Predicate::CategoryEq(level.clone()),
            });
        }
    }
}

/// Interior quantiles `k / bins` for `k = 1..bins`, linear interpolation
/// between order statistics, duplicates removed.
pub fn quantile_grid(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() || bins < 2 {
        return Vec::new();
    }
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1) as f64;
    let mut grid: Vec<f64> = (1..bins)
        .map(|k| {
            let h = last * k as f64 / bins as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        })
        .collect();
    grid.dedup();
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn dry_eye_universe() -> RuleUniverse {
        let mut atoms = Vec::new();
        let fields: [(&str, &[&str]); 3] = [
            ("DED", &["healthy", "mild", "moderate", "severe"]),
            ("Gender", &["male", "female"]),
            ("MGD", &["absent", "present"]),
        ];
        for (field, levels) in fields {
            for level in levels {
                atoms.push(AtomicRule {
                    id: atoms.len(),
                    field: field.to_string(),
                    predicate: Predicate::CategoryEq(level.to_string()),
                });
            }
        }
        RuleUniverse::new(atoms).unwrap()
    }

    #[test]
    fn encodes_worked_example() {
        let u = dry_eye_universe();
        // a3 and a8 in one-based naming
        let r1 = u.encode([2, 7]).unwrap();
        let r2 = u.encode([5]).unwrap();
        assert_eq!(r1.to_string(), "(0,0,1,0,0,0,0,1)");
        assert_eq!(r2.to_string(), "(0,0,0,0,0,1,0,0)");
        let both = r1.compose(&r2).unwrap();
        assert_eq!(both.to_string(), "(0,0,1,0,0,1,0,1)");
        assert_eq!(r1.hamming(&r2).unwrap(), 3);
        assert_eq!(
            u.decode(&both).unwrap(),
            "DED = moderate AND Gender = female AND MGD = present"
        );
    }

    #[test]
    fn empty_conjunction_is_identity() {
        let u = dry_eye_universe();
        let e = u.encode([]).unwrap();
        assert!(e.is_identity());
        assert_eq!(u.decode(&e).unwrap(), IDENTITY_TEXT);
        let x = u.encode([1, 4]).unwrap();
        assert_eq!(x.compose(&e).unwrap(), x);
        assert_eq!(x.compose(&x).unwrap(), x);
        assert_eq!(x.hamming(&x).unwrap(), 0);
        assert_eq!(BitRule::zeros(8).hamming(&BitRule::ones(8)).unwrap(), 8);
    }

    #[test]
    fn out_of_range_and_length_mismatch() {
        let u = dry_eye_universe();
        assert!(matches!(u.encode([8]), Err(Error::AtomOutOfRange { id: 8, n: 8 })));
        let a = BitRule::zeros(8);
        let b = BitRule::zeros(9);
        assert!(matches!(a.compose(&b), Err(Error::UniverseMismatch { .. })));
        assert!(a.hamming(&b).is_err());
        assert!(u.decode(&b).is_err());
    }

    #[test]
    fn numeric_singleton_decodes() {
        let u = RuleUniverse::new(vec![AtomicRule {
            id: 0,
            field: "OSDI".into(),
            predicate: Predicate::NumericGt(12.0),
        }])
        .unwrap();
        assert_eq!(u.decode(&u.encode([0]).unwrap()).unwrap(), "OSDI > 12");
    }

    #[test]
    fn universe_validation() {
        assert!(RuleUniverse::new(vec![]).is_err());
        let bad_id = vec![AtomicRule {
            id: 3,
            field: "x".into(),
            predicate: Predicate::NumericLe(1.0),
        }];
        assert!(RuleUniverse::new(bad_id).is_err());
        let nan = vec![AtomicRule {
            id: 0,
            field: "x".into(),
            predicate: Predicate::NumericLe(f64::NAN),
        }];
        assert!(RuleUniverse::new(nan).is_err());
    }

    #[test]
    fn text_form_round_trips() {
        let mut atoms = dry_eye_universe().atoms().to_vec();
        atoms.push(AtomicRule {
            id: 8,
            field: "OSDI".into(),
            predicate: Predicate::NumericLe(0.1 + 0.2),
        });
        let u = RuleUniverse::new(atoms).unwrap();
        let text = u.to_text(Some("abc123"));
        let (back, src) = RuleUniverse::from_text(&text, Path::new("u.tsv")).unwrap();
        assert_eq!(back, u);
        assert_eq!(src.as_deref(), Some("abc123"));
        assert_eq!(back.digest(), u.digest());
    }

    #[test]
    fn quantile_grid_deciles() {
        let values: Vec<f64> = (0..=100).map(f64::from).collect();
        let grid = quantile_grid(&values, 10);
        assert_eq!(grid, vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0]);
        assert_eq!(quantile_grid(&[5.0, 5.0, 5.0], 10), vec![5.0]);
        assert!(quantile_grid(&[], 10).is_empty());
    }

    #[test]
    fn lex_order() {
        let a = BitRule::parse_bits("0100").unwrap();
        let b = BitRule::parse_bits("0010").unwrap();
        assert_eq!(a.lex_cmp(&b), Ordering::Greater);
        assert_eq!(BitRule::from_mask(0b0010, 4), a);
    }
}
