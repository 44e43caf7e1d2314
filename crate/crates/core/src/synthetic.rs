//! Minimal datasets that each isolate one characteristic, in numeric-class
//! and nominal-class variants.
//!
//! Every case also carries one numeric attribute, `carrier`, so that
//! predictors always have something to fit. NUMERIC_ATTRIBUTES is therefore
//! active in every case.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::characteristic::{Characteristic, CharacteristicSet, CharacteristicToken};
use crate::dataset::{extract_token, read_arff, to_arff_string, Attribute, AttributeKind, Cell, Dataset, LoadError, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassVariant {
    Nominal,
    Numeric,
}

impl ClassVariant {
    pub fn name(self) -> &'static str {
        match self {
            ClassVariant::Nominal => "nominal",
            ClassVariant::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCase {
    pub characteristic: Characteristic,
    pub class_variant: ClassVariant,
    pub dataset: Dataset,
}

impl SyntheticCase {
    /// `<CHARACTERISTIC>__<variant>`, also the dataset name.
    pub fn name(&self) -> String {
        case_name(self.characteristic, self.class_variant)
    }

    pub fn token(&self) -> CharacteristicToken {
        extract_token(&self.dataset)
    }
}

impl fmt::Display for SyntheticCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn case_name(c: Characteristic, v: ClassVariant) -> String {
    format!("{}__{}", c.name(), v.name())
}

/// Characteristics that necessarily accompany `c` in any dataset.
pub fn implied_by(c: Characteristic) -> CharacteristicSet {
    use Characteristic as C;
    let list: &[C] = match c {
        C::NominalClass => &[C::SymbolicClass],
        C::BinaryClass | C::UnaryClass => &[C::NominalClass, C::SymbolicClass],
        C::StringClass => &[C::SymbolicClass],
        C::BinaryAttributes => &[C::NominalAttributes],
        C::EmptyNominalAttributes => &[C::NominalAttributes, C::MissingValues],
        _ => &[],
    };
    list.iter().copied().collect()
}

/// The class-kind flag of a variant.
pub fn class_flag(v: ClassVariant) -> Characteristic {
    match v {
        ClassVariant::Nominal => Characteristic::NominalClass,
        ClassVariant::Numeric => Characteristic::NumericClass,
    }
}

/// The token a case is built to have: target, class-kind flag, carrier and
/// everything those imply.
pub fn expected_active(c: Characteristic, v: ClassVariant) -> CharacteristicSet {
    let mut set = CharacteristicSet::EMPTY.with(Characteristic::NumericAttributes);
    let defines_kind = matches!(c, Characteristic::NumericClass | Characteristic::DateClass | Characteristic::StringClass);
    let class = if defines_kind { c } else { class_flag(v) };
    for x in [c, class] {
        set.insert(x);
        set = set.union(implied_by(x));
    }
    set
}

/// What each case is and which class variant(s) it comes in.
fn case_plan() -> Vec<(Characteristic, ClassVariant)> {
    use Characteristic as C;
    let mut plan = Vec::new();
    for &c in &Characteristic::ATTRIBUTE_SIDE {
        plan.push((c, ClassVariant::Nominal));
        plan.push((c, ClassVariant::Numeric));
    }
    for &c in &Characteristic::CLASS_SIDE {
        match c {
            C::MissingClassValues => {
                plan.push((c, ClassVariant::Nominal));
                plan.push((c, ClassVariant::Numeric));
            }
            C::NumericClass | C::DateClass => plan.push((c, ClassVariant::Numeric)),
            _ => plan.push((c, ClassVariant::Nominal)),
        }
    }
    plan.sort_by(|a, b| (a.0.name(), a.1.name()).cmp(&(b.0.name(), b.1.name())));
    plan
}

const WEEK: [&str; 7] = ["2020-01-06", "2020-01-07", "2020-01-08", "2020-01-09", "2020-01-10", "2020-01-11", "2020-01-12"];

struct Builder {
    rng: ChaCha8Rng,
    rows: usize,
    attributes: Vec<Attribute>,
    columns: Vec<Vec<Cell>>,
}

impl Builder {
    fn numeric(&mut self, name: &str) -> &mut Vec<Cell> {
        let col = (0..self.rows).map(|_| Some(Value::Numeric(self.rng.gen::<f64>()))).collect();
        self.push(Attribute::numeric(name), col)
    }

    /// Nominal column over `cats` in which the first `force` categories all appear.
    fn nominal(&mut self, name: &str, cats: &[&str], force: usize) -> &mut Vec<Cell> {
        let mut col: Vec<Cell> =
            (0..self.rows).map(|_| Some(Value::Nominal(self.rng.gen_range(0..cats.len() as u32)))).collect();
        for (i, cell) in col.iter_mut().enumerate().take(force) {
            *cell = Some(Value::Nominal(i as u32));
        }
        self.push(Attribute::nominal(name, cats.iter().copied()), col)
    }

    fn dates(&mut self, name: &str) -> &mut Vec<Cell> {
        let col = (0..self.rows).map(|i| Some(Value::Date(WEEK[i % WEEK.len()].to_string()))).collect();
        self.push(Attribute::new(name, AttributeKind::DateKind), col)
    }

    fn push(&mut self, attribute: Attribute, col: Vec<Cell>) -> &mut Vec<Cell> {
        self.attributes.push(attribute);
        self.columns.push(col);
        self.columns.last_mut().expect("just pushed")
    }

    /// Blanks about a quarter of the cells, never the first `keep` rows.
    fn blank_some(&mut self, keep: usize) {
        let rows = self.rows;
        let mut blanked = false;
        for i in keep..rows {
            if self.rng.gen_bool(0.25) {
                self.columns.last_mut().expect("column")[i] = None;
                blanked = true;
            }
        }
        if !blanked {
            self.columns.last_mut().expect("column")[rows - 1] = None;
        }
    }

    fn finish(self, name: String) -> Dataset {
        let rows = (0..self.rows).map(|i| self.columns.iter().map(|c| c[i].clone()).collect()).collect();
        let class_index = self.attributes.len() - 1;
        Dataset::new(name, self.attributes, rows, class_index).expect("synthetic datasets are well formed")
    }
}

fn build_case(c: Characteristic, v: ClassVariant, rows: usize, seed: u64) -> SyntheticCase {
    use Characteristic as C;
    let name = case_name(c, v);
    let digest = Sha256::digest(name.as_bytes());
    let salt = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    let mut b = Builder { rng: ChaCha8Rng::seed_from_u64(seed ^ salt), rows, attributes: Vec::new(), columns: Vec::new() };
    b.numeric("carrier");
    match c {
        C::BinaryAttributes => {
            b.nominal("binary", &["a", "b"], 2);
        }
        C::DateAttributes => {
            b.dates("when");
        }
        C::EmptyNominalAttributes => {
            let col = b.nominal("empty", &["a", "b", "c"], 0);
            col.iter_mut().for_each(|cell| *cell = None);
        }
        C::MissingValues => {
            b.numeric("gappy");
            b.blank_some(2);
        }
        C::NominalAttributes => {
            b.nominal("colour", &["a", "b", "c"], 3);
        }
        C::UnaryAttributes => {
            let col = b.numeric("constant");
            col.iter_mut().for_each(|cell| *cell = Some(Value::Numeric(0.5)));
        }
        _ => {}
    }
    match (c, v) {
        (C::BinaryClass, _) => {
            b.nominal("class", &["a", "b"], 2);
        }
        (C::UnaryClass, _) => {
            let col = b.nominal("class", &["a", "b", "c"], 0);
            col.iter_mut().for_each(|cell| *cell = Some(Value::Nominal(0)));
        }
        (C::StringClass, _) => {
            let col = (0..rows).map(|i| Some(Value::Text(format!("s{i}")))).collect();
            b.push(Attribute::new("class", AttributeKind::StringKind), col);
        }
        (C::DateClass, _) => {
            b.dates("class");
        }
        (_, ClassVariant::Numeric) => {
            b.numeric("class");
        }
        (_, ClassVariant::Nominal) => {
            b.nominal("class", &["a", "b", "c"], 3);
        }
    }
    if c == C::MissingClassValues {
        b.blank_some(3);
    }
    SyntheticCase { characteristic: c, class_variant: v, dataset: b.finish(name) }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("a synthetic suite needs at least 8 rows, got {0}")]
pub struct TooFewRows(pub usize);

pub const DEFAULT_ROWS: usize = 16;

/// The full suite in (characteristic name, variant name) order.
pub fn generate_suite(rows: usize, seed: u64) -> Result<Vec<SyntheticCase>, TooFewRows> {
    if rows < 8 {
        return Err(TooFewRows(rows));
    }
    Ok(case_plan().into_iter().map(|(c, v)| build_case(c, v, rows, seed)).collect())
}

/// Hex SHA-256 over the ARFF serialisation of every case, in suite order.
pub fn suite_digest(cases: &[SyntheticCase]) -> String {
    let mut h = Sha256::new();
    for case in cases {
        h.update(case.name().as_bytes());
        h.update([0]);
        h.update(to_arff_string(&case.dataset).as_bytes());
        h.update([0]);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub characteristic: Characteristic,
    pub class_variant: ClassVariant,
    pub file: String,
    pub expected_token: CharacteristicToken,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub schema_version: u32,
    pub rows: usize,
    pub seed: u64,
    pub digest: String,
    pub cases: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Case { path: PathBuf, source: LoadError },
    #[error("case `{0}` does not have the token its manifest records")]
    TokenMismatch(String),
}

/// Writes each case as ARFF plus `manifest.json`.
pub fn write_suite(dir: &Path, cases: &[SyntheticCase], rows: usize, seed: u64) -> Result<SuiteManifest, SuiteError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SuiteError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut entries = Vec::new();
    for case in cases {
        let file = format!("{}.arff", case.name());
        let path = dir.join(&file);
        std::fs::write(&path, to_arff_string(&case.dataset)).map_err(io(&path))?;
        entries.push(ManifestEntry {
            name: case.name(),
            characteristic: case.characteristic,
            class_variant: case.class_variant,
            file,
            expected_token: case.token(),
        });
    }
    let manifest = SuiteManifest { schema_version: 1, rows, seed, digest: suite_digest(cases), cases: entries };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    std::fs::write(&path, text + "\n").map_err(io(&path))?;
    Ok(manifest)
}

/// Reads a suite written by [`write_suite`], checking each recorded token.
pub fn read_suite(dir: &Path) -> Result<Vec<SyntheticCase>, SuiteError> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|source| SuiteError::Io { path: path.clone(), source })?;
    let manifest: SuiteManifest =
        serde_json::from_str(&text).map_err(|source| SuiteError::Manifest { path: path.clone(), source })?;
    let mut cases = Vec::new();
    for entry in manifest.cases {
        let path = dir.join(&entry.file);
        let dataset =
            read_arff(&path, None).map_err(|source| SuiteError::Case { path, source })?.renamed(entry.name.clone());
        if extract_token(&dataset) != entry.expected_token {
            return Err(SuiteError::TokenMismatch(entry.name));
        }
        cases.push(SyntheticCase { characteristic: entry.characteristic, class_variant: entry.class_variant, dataset });
    }
    Ok(cases)
}
