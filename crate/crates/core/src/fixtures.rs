//! A small hand-checked dataset: 28 statements in six methods, one failing
//! test `t0` and twenty passing tests `t1..t20`. The buggy statements are
//! `s12..s14`, all in method `m4`.
//!
//! Rows are statements, columns are tests `t0..t20`.

use crate::dataset::{Coverage, Dataset, Outcome};

const ROWS: [(&str, &str); 28] = [
    ("m1", "111111111101111001001"),
    ("m2", "110010000000000000000"),
    ("m3", "110010010000000000000"),
    ("m3", "110010010000000000000"),
    ("m3", "110010010000000000000"),
    ("m3", "110010010000000000000"),
    ("m3", "110010010000000000000"),
    ("m3", "110010010000000000000"),
    ("m4", "110000000000000000000"),
    ("m4", "111100000000000000000"),
    ("m4", "111000000000000000000"),
    ("m4", "111000000000000000000"),
    ("m4", "111000000000000000000"),
    ("m4", "110000000000000000000"),
    ("m4", "111100000000000000000"),
    ("m4", "110100000000000000000"),
    ("m4", "111100000000000000000"),
    ("m5", "111101100000100000001"),
    ("m6", "111101101100111001001"),
    ("m6", "111001101100110001001"),
    ("m6", "111101101100111001001"),
    ("m6", "111001101100110001000"),
    ("m6", "111101101100111001001"),
    ("m6", "111001101100110001000"),
    ("m6", "111001101100110001000"),
    ("m6", "111001101100110001000"),
    ("m6", "111001101100110001000"),
    ("m6", "111001101100110001000"),
];

pub const NUM_TESTS: usize = 21;

/// Element ids of the buggy statements `s12`, `s13`, `s14`.
pub const FAULTS: [usize; 3] = [11, 12, 13];

pub fn six_method_example() -> Dataset {
    let elements = ROWS
        .iter()
        .enumerate()
        .map(|(i, (m, _))| (m.to_string(), format!("s{}", i + 1)))
        .collect();
    let tests = (0..NUM_TESTS)
        .map(|t| {
            let bits = ROWS
                .iter()
                .map(|(_, row)| row.as_bytes()[t] == b'1')
                .collect();
            let outcome = if t == 0 { Outcome::Fail } else { Outcome::Pass };
            (format!("t{t}"), Coverage::new(bits), outcome)
        })
        .collect();
    Dataset::new(elements, tests, FAULTS.to_vec(), vec![0]).expect("fixture is valid")
}
