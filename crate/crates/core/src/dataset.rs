//! Labeled coverage datasets and their canonical text document.
//!
//! A dataset is a boolean coverage matrix (tests x elements) together with an
//! element-to-method map, per-test outcomes, and the ground-truth buggy
//! elements. Element and test ids are their 0-based positions.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Pass,
    Fail,
    Unknown,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Unknown => "unknown",
        }
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Outcome::Pass),
            "fail" => Ok(Outcome::Fail),
            "unknown" => Ok(Outcome::Unknown),
            other => Err(Error::Malformed(format!("unknown outcome token {other:?}"))),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A coverage bit-vector; bit `i` addresses element `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coverage(Vec<bool>);

impl Coverage {
    pub fn new(bits: Vec<bool>) -> Self {
        Coverage(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Coverage(vec![false; len])
    }

    pub fn from_indices(len: usize, covered: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in covered {
            bits[i] = true;
        }
        Coverage(bits)
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Malformed(format!(
                    "coverage character {other:?} is not '0' or '1'"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Coverage)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: usize,
    pub method: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Test {
    pub id: usize,
    pub name: String,
    pub coverage: Coverage,
    pub outcome: Outcome,
}

/// A validated dataset. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    elements: Vec<Element>,
    methods: Vec<String>,
    method_elements: Vec<Vec<usize>>,
    tests: Vec<Test>,
    faults: Vec<usize>,
    initial_failing: Vec<usize>,
}

impl Dataset {
    /// Builds and validates a dataset.
    ///
    /// `elements` are `(method, name)` pairs; method ids are assigned in
    /// first-appearance order. `tests` are `(name, coverage, outcome)`.
    pub fn new(
        elements: Vec<(String, String)>,
        tests: Vec<(String, Coverage, Outcome)>,
        faults: Vec<usize>,
        initial_failing: Vec<usize>,
    ) -> Result<Self> {
        let mut methods: Vec<String> = Vec::new();
        let mut method_index: HashMap<String, usize> = HashMap::new();
        let mut method_elements: Vec<Vec<usize>> = Vec::new();
        let elements: Vec<Element> = elements
            .into_iter()
            .enumerate()
            .map(|(id, (method, name))| {
                let m = *method_index.entry(method.clone()).or_insert_with(|| {
                    methods.push(method);
                    method_elements.push(Vec::new());
                    methods.len() - 1
                });
                method_elements[m].push(id);
                Element {
                    id,
                    method: m,
                    name,
                }
            })
            .collect();

        let n = elements.len();
        let tests: Vec<Test> = tests
            .into_iter()
            .enumerate()
            .map(|(id, (name, coverage, outcome))| Test {
                id,
                name,
                coverage,
                outcome,
            })
            .collect();
        for t in &tests {
            if t.coverage.len() != n {
                return Err(Error::CoverageLength {
                    test: t.id,
                    found: t.coverage.len(),
                    expected: n,
                });
            }
        }

        let mut faults = faults;
        faults.sort_unstable();
        faults.dedup();
        if let Some(&bad) = faults.iter().find(|&&f| f >= n) {
            return Err(Error::InvalidDataset(format!(
                "fault id {bad} out of range (element count {n})"
            )));
        }

        for &t in &initial_failing {
            match tests.get(t) {
                None => {
                    return Err(Error::InvalidDataset(format!(
                        "initial failing test {t} does not exist"
                    )))
                }
                Some(test) if test.outcome != Outcome::Fail => {
                    return Err(Error::InvalidDataset(format!(
                        "initial failing test {t} has outcome {}",
                        test.outcome
                    )))
                }
                Some(_) => {}
            }
        }

        Ok(Dataset {
            elements,
            methods,
            method_elements,
            tests,
            faults,
            initial_failing,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_tests(&self) -> usize {
        self.tests.len()
    }

    pub fn num_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn tests(&self) -> &[Test] {
        &self.tests
    }

    pub fn test(&self, id: usize) -> Result<&Test> {
        self.tests.get(id).ok_or(Error::UnknownTest(id))
    }

    pub fn coverage(&self, test: usize) -> &Coverage {
        &self.tests[test].coverage
    }

    pub fn outcome(&self, test: usize) -> Outcome {
        self.tests[test].outcome
    }

    pub fn method_names(&self) -> &[String] {
        &self.methods
    }

    pub fn method_of(&self, element: usize) -> usize {
        self.elements[element].method
    }

    /// Elements of method `m` in ascending id order.
    pub fn method_elements(&self, m: usize) -> &[usize] {
        &self.method_elements[m]
    }

    pub fn faults(&self) -> &[usize] {
        &self.faults
    }

    /// Distinct methods containing a buggy element, ascending.
    pub fn buggy_methods(&self) -> Vec<usize> {
        let mut ms: Vec<usize> = self.faults.iter().map(|&e| self.method_of(e)).collect();
        ms.sort_unstable();
        ms.dedup();
        ms
    }

    pub fn initial_failing(&self) -> &[usize] {
        &self.initial_failing
    }

    pub fn failing_tests(&self) -> impl Iterator<Item = usize> + '_ {
        self.tests
            .iter()
            .filter(|t| t.outcome == Outcome::Fail)
            .map(|t| t.id)
    }

    /// A new dataset keeping only `keep` (in the given order), with test ids
    /// renumbered. Initial failing tests that are dropped disappear.
    pub fn restrict_tests(&self, keep: &[usize]) -> Result<Dataset> {
        let mut remap = HashMap::new();
        let mut tests = Vec::with_capacity(keep.len());
        for (new_id, &old) in keep.iter().enumerate() {
            let t = self.test(old)?;
            remap.insert(old, new_id);
            tests.push((t.name.clone(), t.coverage.clone(), t.outcome));
        }
        let initial_failing = self
            .initial_failing
            .iter()
            .filter_map(|t| remap.get(t).copied())
            .collect();
        Dataset::new(
            self.element_pairs(),
            tests,
            self.faults.clone(),
            initial_failing,
        )
    }

    /// A copy of this dataset with extra tests appended after the existing ones.
    pub fn with_extra_tests(&self, extra: Vec<(String, Coverage, Outcome)>) -> Result<Dataset> {
        let mut tests: Vec<_> = self
            .tests
            .iter()
            .map(|t| (t.name.clone(), t.coverage.clone(), t.outcome))
            .collect();
        tests.extend(extra);
        Dataset::new(
            self.element_pairs(),
            tests,
            self.faults.clone(),
            self.initial_failing.clone(),
        )
    }

    fn element_pairs(&self) -> Vec<(String, String)> {
        self.elements
            .iter()
            .map(|e| (self.methods[e.method].clone(), e.name.clone()))
            .collect()
    }

    pub fn to_document(&self) -> DatasetDocument {
        DatasetDocument {
            version: DATASET_VERSION,
            elements: self
                .elements
                .iter()
                .map(|e| ElementDoc {
                    id: e.id,
                    method: self.methods[e.method].clone(),
                    name: e.name.clone(),
                })
                .collect(),
            tests: self.tests.iter().map(TestDoc::from).collect(),
            faults: self.faults.clone(),
            initial_failing: self.initial_failing.clone(),
        }
    }

    /// Canonical serialization: fixed key order, two-space indentation,
    /// trailing newline.
    pub fn to_canonical_string(&self) -> String {
        self.to_document().to_canonical_string()
    }
}

/// Parses and validates a dataset document.
pub fn load_dataset(bytes: &[u8]) -> Result<Dataset> {
    let doc: DatasetDocument =
        serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
    doc.into_dataset()
}

pub fn load_dataset_file(path: impl AsRef<std::path::Path>) -> Result<Dataset> {
    load_dataset(&std::fs::read(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDocument {
    pub version: u32,
    pub elements: Vec<ElementDoc>,
    pub tests: Vec<TestDoc>,
    pub faults: Vec<usize>,
    pub initial_failing: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementDoc {
    pub id: usize,
    pub method: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestDoc {
    pub id: usize,
    pub name: String,
    pub coverage: String,
    pub outcome: String,
}

impl From<&Test> for TestDoc {
    fn from(t: &Test) -> Self {
        TestDoc {
            id: t.id,
            name: t.name.clone(),
            coverage: t.coverage.to_string(),
            outcome: t.outcome.as_str().to_string(),
        }
    }
}

impl DatasetDocument {
    pub fn to_canonical_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dataset document serializes");
        s.push('\n');
        s
    }

    pub fn into_dataset(self) -> Result<Dataset> {
        if self.version != DATASET_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: DATASET_VERSION,
            });
        }
        for (i, e) in self.elements.iter().enumerate() {
            if e.id != i {
                return Err(Error::Malformed(format!(
                    "element ids must be contiguous from 0; position {i} has id {}",
                    e.id
                )));
            }
        }
        let mut tests = Vec::with_capacity(self.tests.len());
        for (i, t) in self.tests.into_iter().enumerate() {
            if t.id != i {
                return Err(Error::Malformed(format!(
                    "test ids must be contiguous from 0; position {i} has id {}",
                    t.id
                )));
            }
            let coverage = Coverage::parse(&t.coverage)?;
            let outcome: Outcome = t.outcome.parse()?;
            tests.push((t.name, coverage, outcome));
        }
        let elements = self
            .elements
            .into_iter()
            .map(|e| (e.method, e.name))
            .collect();
        Dataset::new(elements, tests, self.faults, self.initial_failing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(coverage: &str, outcome: &str, faults: &str, initial: &str) -> String {
        format!(
            r#"{{"version":1,"elements":[{{"id":0,"method":"m","name":"s0"}}],
               "tests":[{{"id":0,"name":"t0","coverage":"{coverage}","outcome":"{outcome}"}}],
               "faults":{faults},"initial_failing":{initial}}}"#
        )
    }

    #[test]
    fn minimal_document_loads() {
        let d = load_dataset(doc("1", "fail", "[0]", "[0]").as_bytes()).unwrap();
        assert_eq!(d.num_elements(), 1);
        assert_eq!(d.num_tests(), 1);
        assert_eq!(d.initial_failing(), &[0]);
    }

    #[test]
    fn short_coverage_is_rejected() {
        let err = load_dataset(doc("", "fail", "[0]", "[0]").as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::CoverageLength {
                expected: 1,
                found: 0,
                ..
            }
        ));
    }

    #[test]
    fn bad_outcome_token() {
        let err = load_dataset(doc("1", "flaky", "[0]", "[0]").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed(_)));
    }

    #[test]
    fn fault_out_of_range() {
        let err = load_dataset(doc("1", "fail", "[3]", "[0]").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::InvalidDataset(_)));
    }

    #[test]
    fn initial_failing_must_fail() {
        let err = load_dataset(doc("1", "pass", "[0]", "[0]").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::InvalidDataset(_)));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(matches!(
            load_dataset(b"{not json"),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            load_dataset(doc("2", "fail", "[0]", "[0]").as_bytes()),
            Err(Error::Malformed(_))
        ));
    }

    #[test]
    fn wrong_version() {
        let text = doc("1", "fail", "[0]", "[0]").replace("\"version\":1", "\"version\":9");
        assert!(matches!(
            load_dataset(text.as_bytes()),
            Err(Error::Version { found: 9, .. })
        ));
    }

    #[test]
    fn canonical_round_trip_is_a_fixed_point() {
        let d = Dataset::new(
            vec![
                ("a".into(), "a.0".into()),
                ("a".into(), "a.1".into()),
                ("b".into(), "b.0".into()),
                ("c".into(), "c.0".into()),
            ],
            vec![
                ("t0".into(), Coverage::parse("1101").unwrap(), Outcome::Fail),
                ("t1".into(), Coverage::parse("0110").unwrap(), Outcome::Pass),
                (
                    "t2".into(),
                    Coverage::parse("0000").unwrap(),
                    Outcome::Unknown,
                ),
            ],
            vec![1],
            vec![0],
        )
        .unwrap();
        let first = d.to_canonical_string();
        let reloaded = load_dataset(first.as_bytes()).unwrap();
        assert_eq!(reloaded, d);
        assert_eq!(reloaded.to_canonical_string(), first);
    }

    #[test]
    fn methods_numbered_by_first_appearance() {
        let d = Dataset::new(
            vec![
                ("z".into(), "z0".into()),
                ("a".into(), "a0".into()),
                ("z".into(), "z1".into()),
            ],
            vec![("t".into(), Coverage::parse("101").unwrap(), Outcome::Fail)],
            vec![2],
            vec![0],
        )
        .unwrap();
        assert_eq!(d.method_names(), &["z".to_string(), "a".to_string()]);
        assert_eq!(d.method_elements(0), &[0, 2]);
        assert_eq!(d.buggy_methods(), vec![0]);
    }
}
