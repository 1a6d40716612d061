//! Golden regime masks on the 50 × 50 grid `α, β ∈ {1/50, …, 1}` at `d = 1`.
//!
//! Grid points are `α = i/50`, `β = j/50`, so every regime boundary at `d = 1`
//! is an integer condition on `(i, j)`; [`expected_bits`] encodes them without
//! floating point and is compared against both the fixture and the live code.

use std::path::PathBuf;

use drwave::regime::{golden_grid, mask_document, MaskDocument};

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/regime_masks_d1.json")
}

fn load_fixture() -> MaskDocument {
    let text = std::fs::read_to_string(fixture_path()).expect("fixture present; regenerate with --ignored");
    serde_json::from_str(&text).unwrap()
}

const GRID: usize = 50;
/// `(α + β)/2 ≥ 1/4`.
fn root(i: usize, j: usize) -> bool {
    i + j >= GRID / 2
}
/// `(α + β)/2 ≥ 1/2`.
fn very_smooth(i: usize, j: usize) -> bool {
    i + j >= GRID
}
/// `s ≥ 1/2`.
fn smooth(s: usize) -> bool {
    2 * s >= GRID
}
/// `x < min(y, 1/2)`.
fn rougher(x: usize, y: usize) -> bool {
    x < y.min(GRID / 2)
}

/// Achievability followed by the seven flags, in column order.
fn expected_bits(kind: &str, scheme: &str, i: usize, j: usize) -> [bool; 8] {
    let (min, max) = (i.min(j), i.max(j));
    let equal = i == j;
    let (a_rough, b_rough) = (rougher(i, j), rougher(j, i));
    // [achievable, predOptimal, underK1, underK2, overK1, overK2, underEither, overOther]
    match (kind, scheme) {
        ("INT", "double") | ("MC", "double") => {
            let achievable = kind == "INT" || root(i, j);
            [achievable, smooth(min), !smooth(j), !smooth(i), false, false, false, false]
        }
        ("IF", "double") => [true, smooth(max), false, false, false, false, !smooth(max), false],
        ("NR", "single") | ("NR", "double") => [true, smooth(i), false, !smooth(i), false, false, false, false],
        ("IF", "single") => [true, smooth(max), false, false, false, false, !smooth(max), !smooth(max)],
        ("INT", "single") | ("MC", "single") | ("INT", "none") => {
            [very_smooth(i, j), smooth(min) || equal, b_rough, a_rough, false, false, false, false]
        }
        ("MC", "none") => [very_smooth(i, j), smooth(min) || equal, b_rough, a_rough, a_rough, b_rough, false, false],
        ("IF", "none") => [very_smooth(i, j), smooth(min) || equal, false, false, a_rough, b_rough, false, false],
        ("NR", "none") => {
            let ok = i >= j.min(GRID / 2);
            [very_smooth(i, j), ok, false, !ok, false, false, false, false]
        }
        other => panic!("unexpected combination {other:?}"),
    }
}

fn check_against_integer_encoding(doc: &MaskDocument) {
    assert_eq!(doc.entries.len(), 12);
    for entry in &doc.entries {
        let mut masks = vec![&entry.achievable];
        for name in drwave_core::tuner::TuningFlags::NAMES {
            masks.push(&entry.flags[name]);
        }
        for (a, row_index) in (1..=GRID).zip(0..) {
            for (b, col) in (1..=GRID).zip(0..) {
                let want = expected_bits(&entry.kind, &entry.scheme, a, b);
                for (m, mask) in masks.iter().enumerate() {
                    let got = mask[row_index].as_bytes()[col] == b'1';
                    assert_eq!(got, want[m], "{} {} mask {m} at α={a}/50 β={b}/50", entry.kind, entry.scheme);
                }
            }
        }
    }
}

#[test]
fn live_masks_match_the_golden_file() {
    let grid = golden_grid();
    let live = mask_document(&grid, &grid, 1).unwrap();
    assert_eq!(live, load_fixture());
}

#[test]
fn golden_file_matches_the_integer_encoding() {
    check_against_integer_encoding(&load_fixture());
}

#[test]
#[ignore = "rewrites the golden fixture"]
fn generate_golden_masks() {
    let grid = golden_grid();
    let doc = mask_document(&grid, &grid, 1).unwrap();
    check_against_integer_encoding(&doc);
    std::fs::create_dir_all(fixture_path().parent().unwrap()).unwrap();
    std::fs::write(fixture_path(), serde_json::to_string_pretty(&doc).unwrap() + "\n").unwrap();
}
