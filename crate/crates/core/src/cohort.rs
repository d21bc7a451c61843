//! Cohort data model: schema, records, CSV ingestion and synthetic generators.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::objective::AtomIndex;
use crate::rule::{BitRule, RuleUniverse};
use crate::seed::mix;

pub const RECORD_ID_COLUMN: &str = "record_id";
pub const HV_COLUMN: &str = "is_hv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalField {
    pub name: String,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericField {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl NumericField {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

/// Field layout of a cohort. Deserializes from a TOML declaration:
///
/// ```toml
/// biomarker = "protein"
///
/// [[categorical]]
/// name = "DED"
/// levels = ["healthy", "mild", "moderate", "severe"]
///
/// [[numeric]]
/// name = "OSDI"
/// min = 0.0
/// max = 100.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub categorical: Vec<CategoricalField>,
    #[serde(default)]
    pub numeric: Vec<NumericField>,
    pub biomarker: String,
}

impl Schema {
    pub fn validate(&self) -> Result<()> {
        if self.categorical.is_empty() && self.numeric.is_empty() {
            return Err(Error::InvalidSchema("schema declares no fields".into()));
        }
        let mut names = HashSet::new();
        let reserved = [RECORD_ID_COLUMN, HV_COLUMN];
        let all = self
            .categorical
            .iter()
            .map(|f| &f.name)
            .chain(self.numeric.iter().map(|f| &f.name))
            .chain(std::iter::once(&self.biomarker));
        for name in all {
            if reserved.contains(&name.as_str()) {
                return Err(Error::InvalidSchema(format!("`{name}` is a reserved column")));
            }
            if name.contains('\t') || name.is_empty() {
                return Err(Error::InvalidSchema(format!("bad field name `{name}`")));
            }
            if !names.insert(name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate field `{name}`")));
            }
        }
        for f in &self.categorical {
            if f.levels.len() < 2 {
                return Err(Error::InvalidSchema(format!(
                    "categorical field `{}` needs at least 2 levels",
                    f.name
                )));
            }
            let unique: HashSet<_> = f.levels.iter().collect();
            if unique.len() != f.levels.len() {
                return Err(Error::InvalidSchema(format!(
                    "categorical field `{}` has repeated levels",
                    f.name
                )));
            }
        }
        for f in &self.numeric {
            if !(f.min.is_finite() && f.max.is_finite() && f.min <= f.max) {
                return Err(Error::InvalidSchema(format!(
                    "numeric field `{}` needs finite min <= max",
                    f.name
                )));
            }
        }
        Ok(())
    }

    /// Four categorical fields, ten level atoms.
    pub fn dry_eye_discrete() -> Self {
        let cat = |name: &str, levels: &[&str]| CategoricalField {
            name: name.to_string(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
        };
        Schema {
            categorical: vec![
                cat("DED", &["healthy", "mild", "moderate", "severe"]),
                cat("Gender", &["male", "female"]),
                cat("MGD", &["absent", "present"]),
                cat("Smoker", &["no", "yes"]),
            ],
            numeric: Vec::new(),
            biomarker: "protein".to_string(),
        }
    }

    /// The discrete schema plus two numeric clinical scores.
    pub fn dry_eye_mixed() -> Self {
        let mut s = Self::dry_eye_discrete();
        s.numeric = vec![
            NumericField {
                name: "OSDI".into(),
                min: 0.0,
                max: 100.0,
            },
            NumericField {
                name: "TBUT".into(),
                min: 0.0,
                max: 30.0,
            },
        ];
        s
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let schema: Schema = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    /// Level index per categorical field.
    pub categorical: Vec<usize>,
    /// Value per numeric field; `None` when missing.
    pub numeric: Vec<Option<f64>>,
    pub biomarker: f64,
}

/// Validated, immutable record set.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    schema: Schema,
    records: Vec<Record>,
    hv: Vec<bool>,
    subjects: Vec<usize>,
    hv_mean: f64,
}

impl Cohort {
    pub fn new(schema: Schema, records: Vec<Record>, hv: Vec<bool>) -> Result<Self> {
        schema.validate()?;
        if records.len() != hv.len() {
            return Err(Error::Config("hv mask length differs from record count".into()));
        }
        for r in &records {
            if r.categorical.len() != schema.categorical.len() || r.numeric.len() != schema.numeric.len() {
                return Err(Error::SchemaMismatch(format!(
                    "record `{}` has wrong field count",
                    r.id
                )));
            }
            for (level, field) in r.categorical.iter().zip(&schema.categorical) {
                if *level >= field.levels.len() {
                    return Err(Error::SchemaMismatch(format!(
                        "record `{}` has level {level} for `{}`",
                        r.id, field.name
                    )));
                }
            }
            if r.numeric.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::SchemaMismatch(format!(
                    "record `{}` has a non-finite numeric value",
                    r.id
                )));
            }
            if !(r.biomarker > 0.0 && r.biomarker.is_finite()) {
                return Err(Error::SchemaMismatch(format!(
                    "record `{}` has non-positive biomarker",
                    r.id
                )));
            }
        }
        let subjects: Vec<usize> = (0..records.len()).filter(|&i| !hv[i]).collect();
        let hv_idx: Vec<usize> = (0..records.len()).filter(|&i| hv[i]).collect();
        if hv_idx.is_empty() {
            return Err(Error::EmptyHv);
        }
        if subjects.is_empty() {
            return Err(Error::EmptySubjects);
        }
        let hv_mean = hv_idx.iter().map(|&i| records[i].biomarker).sum::<f64>() / hv_idx.len() as f64;
        Ok(Cohort {
            schema,
            records,
            hv,
            subjects,
            hv_mean,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_hv(&self, i: usize) -> bool {
        self.hv[i]
    }

    pub fn hv_mask(&self) -> &[bool] {
        &self.hv
    }

    /// Indices of non-HV records, the population rules act on.
    pub fn subjects(&self) -> &[usize] {
        &self.subjects
    }

    pub fn hv_count(&self) -> usize {
        self.records.len() - self.subjects.len()
    }

    pub fn hv_mean(&self) -> f64 {
        self.hv_mean
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![RECORD_ID_COLUMN.to_string(), HV_COLUMN.to_string()];
        header.extend(self.schema.categorical.iter().map(|f| f.name.clone()));
        header.extend(self.schema.numeric.iter().map(|f| f.name.clone()));
        header.push(self.schema.biomarker.clone());
        w.write_record(&header)?;
        for (r, &hv) in self.records.iter().zip(&self.hv) {
            let mut row = vec![r.id.clone(), hv.to_string()];
            for (level, field) in r.categorical.iter().zip(&self.schema.categorical) {
                row.push(field.levels[*level].clone());
            }
            for v in &r.numeric {
                row.push(v.map(|x| x.to_string()).unwrap_or_default());
            }
            row.push(r.biomarker.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 csv")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// SHA-256 over the canonical CSV form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv_string().as_bytes()))
    }
}

/// Reads a cohort CSV, validating it against `schema`. `path` is used for diagnostics.
pub fn read_csv<R: Read>(reader: R, schema: &Schema, path: &Path) -> Result<Cohort> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let id_col = column(RECORD_ID_COLUMN)?;
    let hv_col = column(HV_COLUMN)?;
    let cat_cols: Vec<usize> = schema
        .categorical
        .iter()
        .map(|f| column(&f.name))
        .collect::<Result<_>>()?;
    let num_cols: Vec<usize> = schema.numeric.iter().map(|f| column(&f.name)).collect::<Result<_>>()?;
    let bio_col = column(&schema.biomarker)?;

    let mut records = Vec::new();
    let mut hv = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| Error::BadValue {
            path: path.to_path_buf(),
            line,
            message,
        };
        let get = |c: usize| row.get(c).unwrap_or("").trim();
        let is_hv = match get(hv_col) {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("is_hv must be true/false, got `{other}`"))),
        };
        let mut categorical = Vec::with_capacity(cat_cols.len());
        for (field, &c) in schema.categorical.iter().zip(&cat_cols) {
            let raw = get(c);
            let level = field
                .levels
                .iter()
                .position(|l| l == raw)
                .ok_or_else(|| Error::UnknownLevel {
                    path: path.to_path_buf(),
                    line,
                    field: field.name.clone(),
                    level: raw.to_string(),
                })?;
            categorical.push(level);
        }
        let mut numeric = Vec::with_capacity(num_cols.len());
        for (field, &c) in schema.numeric.iter().zip(&num_cols) {
            let raw = get(c);
            if raw.is_empty() || raw == "NA" {
                numeric.push(None);
                continue;
            }
            let v: f64 = raw
                .parse()
                .map_err(|_| bad(format!("`{}` is not a number for `{}`", raw, field.name)))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value for `{}`", field.name)));
            }
            numeric.push(Some(v));
        }
        let raw = get(bio_col);
        let biomarker: f64 = raw
            .parse()
            .map_err(|_| bad(format!("biomarker `{raw}` is not a number")))?;
        if !(biomarker > 0.0 && biomarker.is_finite()) {
            return Err(Error::NonPositiveBiomarker {
                path: path.to_path_buf(),
                line,
                value: biomarker,
            });
        }
        records.push(Record {
            id: get(id_col).to_string(),
            categorical,
            numeric,
            biomarker,
        });
        hv.push(is_hv);
    }
    Cohort::new(schema.clone(), records, hv)
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<Cohort> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_records: usize,
    pub hv_fraction: f64,
    /// Uniform support of the biomarker; must be positive.
    pub biomarker_range: (f64, f64),
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n_records: 500,
            hv_fraction: 0.2,
            biomarker_range: (0.5, 20.0),
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_records < 2 {
            return Err(Error::Config("synthetic cohort needs at least 2 records".into()));
        }
        if !(self.hv_fraction > 0.0 && self.hv_fraction < 1.0) {
            return Err(Error::Config(format!(
                "hv_fraction must lie in (0, 1), got {}",
                self.hv_fraction
            )));
        }
        let (lo, hi) = self.biomarker_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!(
                "biomarker range must be positive and ordered, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// Uniformly sampled cohort; a pure function of its arguments.
pub fn generate_synthetic(schema: &Schema, params: &SyntheticParams, seed: u64) -> Result<Cohort> {
    schema.validate()?;
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = params.biomarker_range;
    let width = (params.n_records - 1).to_string().len();
    let mut records = Vec::with_capacity(params.n_records);
    let mut hv = Vec::with_capacity(params.n_records);
    for i in 0..params.n_records {
        hv.push(rng.random_bool(params.hv_fraction));
        let categorical = schema
            .categorical
            .iter()
            .map(|f| rng.random_range(0..f.levels.len()))
            .collect();
        let numeric = schema
            .numeric
            .iter()
            .map(|f| Some(uniform(&mut rng, f.min, f.max)))
            .collect();
        records.push(Record {
            id: format!("r{i:0width$}"),
            categorical,
            numeric,
            biomarker: uniform(&mut rng, lo, hi),
        });
    }
    // both roles must be present
    if hv.iter().all(|&h| !h) {
        hv[0] = true;
    } else if hv.iter().all(|&h| h) {
        let last = hv.len() - 1;
        hv[last] = false;
    }
    Cohort::new(schema.clone(), records, hv)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// A synthetic cohort in which every non-HV record matched by `planted` has
/// its biomarker multiplied by `effect`.
#[derive(Debug, Clone)]
pub struct PlantedCohort {
    pub cohort: Cohort,
    pub planted: BitRule,
    pub planted_size: usize,
    pub attempts: usize,
}

pub const PLANT_ATTEMPTS: usize = 32;

pub fn generate_planted_optimum(
    schema: &Schema,
    params: &SyntheticParams,
    seed: u64,
    universe: &RuleUniverse,
    planted: &BitRule,
    effect: f64,
    min_subgroup_size: usize,
) -> Result<PlantedCohort> {
    if !(effect > 0.0 && effect.is_finite()) {
        return Err(Error::Config(format!("effect must be positive, got {effect}")));
    }
    for attempt in 0..PLANT_ATTEMPTS {
        let base = generate_synthetic(schema, params, mix(seed, attempt as u64))?;
        let index = AtomIndex::new(universe, &base)?;
        let matched = index.subjects(planted)?;
        if matched.count() < min_subgroup_size {
            continue;
        }
        let mut records = base.records().to_vec();
        let subjects = base.subjects();
        for pos in matched.iter_ones() {
            records[subjects[pos]].biomarker *= effect;
        }
        let cohort = Cohort::new(schema.clone(), records, base.hv_mask().to_vec())?;
        return Ok(PlantedCohort {
            cohort,
            planted: planted.clone(),
            planted_size: matched.count(),
            attempts: attempt + 1,
        });
    }
    Err(Error::InfeasiblePlant {
        required: min_subgroup_size,
        attempts: PLANT_ATTEMPTS,
    })
}

/// Picks `k` distinct categorical fields and one random level of each.
pub fn random_categorical_plant(schema: &Schema, universe: &RuleUniverse, k: usize, seed: u64) -> Result<BitRule> {
    if k == 0 || k > schema.categorical.len() {
        return Err(Error::Config(format!(
            "cannot plant {k} atoms over {} categorical fields",
            schema.categorical.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = sample(&mut rng, schema.categorical.len(), k).into_vec();
    fields.sort_unstable();
    let mut ids = Vec::with_capacity(k);
    for f in fields {
        let field = &schema.categorical[f];
        let level = &field.levels[rng.random_range(0..field.levels.len())];
        let id = universe
            .category_atom(&field.name, level)
            .ok_or_else(|| Error::SchemaMismatch(format!("no atom for {} = {level}", field.name)))?;
        ids.push(id);
    }
    universe.encode(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_csv(bio: &str, hv: &str) -> String {
        format!(
            "record_id,is_hv,DED,Gender,MGD,Smoker,protein\n\
             a,{hv},mild,male,absent,no,2.0\n\
             b,false,severe,female,present,yes,{bio}\n\
             c,false,healthy,male,present,no,3.5\n"
        )
    }

    fn read(text: &str) -> Result<Cohort> {
        read_csv(text.as_bytes(), &Schema::dry_eye_discrete(), Path::new("t.csv"))
    }

    #[test]
    fn loads_minimal_file() {
        let c = read(&tiny_csv("4.0", "true")).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.subjects(), &[1, 2]);
        assert_eq!(c.hv_mean(), 2.0);
        assert_eq!(c.records()[1].categorical, vec![3, 1, 1, 1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            read(&tiny_csv("0", "true")),
            Err(Error::NonPositiveBiomarker { value, .. }) if value == 0.0
        ));
        assert!(matches!(read(&tiny_csv("4.0", "false")), Err(Error::EmptyHv)));
        let unknown = tiny_csv("4.0", "true").replace("severe", "extreme");
        assert!(matches!(read(&unknown), Err(Error::UnknownLevel { level, .. }) if level == "extreme"));
        let missing = "record_id,is_hv,DED,Gender,MGD,protein\n";
        assert!(matches!(read(missing), Err(Error::MissingColumn { column, .. }) if column == "Smoker"));
    }

    #[test]
    fn missing_numeric_values_are_kept() {
        let text = "record_id,is_hv,DED,Gender,MGD,Smoker,OSDI,TBUT,protein\n\
                    a,true,mild,male,absent,no,,NA,2.0\n\
                    b,false,mild,male,absent,no,12.5,3,1.0\n";
        let c = read_csv(text.as_bytes(), &Schema::dry_eye_mixed(), Path::new("t.csv")).unwrap();
        assert_eq!(c.records()[0].numeric, vec![None, None]);
        assert_eq!(c.records()[1].numeric, vec![Some(12.5), Some(3.0)]);
        let back = read_csv(c.to_csv_string().as_bytes(), c.schema(), Path::new("x")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn schema_validation() {
        let mut s = Schema::dry_eye_discrete();
        s.categorical[0].levels.truncate(1);
        assert!(s.validate().is_err());
        let mut s = Schema::dry_eye_mixed();
        s.numeric[0].min = 200.0;
        assert!(s.validate().is_err());
        let s = Schema {
            categorical: vec![],
            numeric: vec![],
            biomarker: "b".into(),
        };
        assert!(generate_synthetic(&s, &SyntheticParams::default(), 1).is_err());
        let s = Schema::dry_eye_mixed();
        assert_eq!(Schema::from_toml(&s.to_toml(), Path::new("s.toml")).unwrap(), s);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let s = Schema::dry_eye_mixed();
        let p = SyntheticParams::default();
        let a = generate_synthetic(&s, &p, 7).unwrap();
        let b = generate_synthetic(&s, &p, 7).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        let c = generate_synthetic(&s, &p, 8).unwrap();
        assert_ne!(a.digest(), c.digest());
        for r in a.records() {
            assert!((0.5..20.0).contains(&r.biomarker));
            let osdi = r.numeric[0].unwrap();
            assert!((0.0..100.0).contains(&osdi));
        }
    }

    #[test]
    fn rejects_degenerate_hv_fraction() {
        let s = Schema::dry_eye_discrete();
        for f in [0.0, 1.0, -0.1] {
            let p = SyntheticParams {
                hv_fraction: f,
                ..Default::default()
            };
            assert!(generate_synthetic(&s, &p, 1).is_err());
        }
    }

    // Binomial concentration: |count - n p| <= 5 sqrt(n p (1 - p)).
    fn within_five_sigma(count: usize, n: usize, p: f64) -> bool {
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        (count as f64 - mean).abs() <= 5.0 * sd
    }

    #[test]
    fn level_and_hv_frequencies_concentrate() {
        let s = Schema::dry_eye_discrete();
        let p = SyntheticParams {
            n_records: 10_000,
            ..Default::default()
        };
        let c = generate_synthetic(&s, &p, 3).unwrap();
        for level in 0..4 {
            let count = c.records().iter().filter(|r| r.categorical[0] == level).count();
            assert!(within_five_sigma(count, 10_000, 0.25), "level {level}: {count}");
        }
        let p = SyntheticParams {
            n_records: 1000,
            hv_fraction: 0.5,
            ..Default::default()
        };
        let c = generate_synthetic(&s, &p, 4).unwrap();
        assert!(within_five_sigma(c.hv_count(), 1000, 0.5), "hv {}", c.hv_count());
    }

    #[test]
    fn planting_scales_matched_subjects() {
        let s = Schema::dry_eye_discrete();
        let u = RuleUniverse::categorical(&s).unwrap();
        let plant = u.encode([2, 7]).unwrap();
        let p = SyntheticParams::default();
        let neutral = generate_planted_optimum(&s, &p, 11, &u, &plant, 1.0, 10).unwrap();
        let base = generate_synthetic(&s, &p, mix(11, 0)).unwrap();
        assert_eq!(neutral.cohort, base);
        let boosted = generate_planted_optimum(&s, &p, 11, &u, &plant, 10.0, 10).unwrap();
        let mut scaled = 0;
        for (i, (a, b)) in base.records().iter().zip(boosted.cohort.records()).enumerate() {
            if b.biomarker != a.biomarker {
                assert!(!base.is_hv(i));
                assert_eq!(a.categorical[0], 2);
                assert_eq!(a.categorical[2], 1);
                assert!((b.biomarker - 10.0 * a.biomarker).abs() < 1e-12);
                scaled += 1;
            }
        }
        assert_eq!(scaled, boosted.planted_size);
    }

    #[test]
    fn infeasible_plant_is_reported() {
        let s = Schema::dry_eye_discrete();
        let u = RuleUniverse::categorical(&s).unwrap();
        let plant = u.encode([2, 7]).unwrap();
        let p = SyntheticParams {
            n_records: 20,
            ..Default::default()
        };
        assert!(matches!(
            generate_planted_optimum(&s, &p, 1, &u, &plant, 5.0, 100),
            Err(Error::InfeasiblePlant { required: 100, .. })
        ));
    }

    #[test]
    fn random_plant_uses_distinct_fields() {
        let s = Schema::dry_eye_discrete();
        let u = RuleUniverse::categorical(&s).unwrap();
        for seed in 0..20 {
            let r = random_categorical_plant(&s, &u, 2, seed).unwrap();
            assert_eq!(r.count_ones(), 2);
            let fields: HashSet<&str> = r.ones_iter().map(|i| u.atoms()[i].field.as_str()).collect();
            assert_eq!(fields.len(), 2);
        }
    }
}
