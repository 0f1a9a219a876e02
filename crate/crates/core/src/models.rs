//! Built-in catalog of example processes.

use crate::lang::{load_program, Diagnostics, Program};

pub const QECC_SRC: &str = include_str!("../models/qecc.cqp");
pub const QECC2_SRC: &str = include_str!("../models/qecc2.cqp");
pub const MIXED_SRC: &str = include_str!("../models/mixed.cqp");
pub const TELEPORT_SRC: &str = include_str!("../models/teleport.cqp");
pub const SUBSTITUTION_SRC: &str = include_str!("../models/substitution.cqp");
pub const BROKEN_SRC: &str = include_str!("../models/broken.cqp");

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    /// File stem of the source under `models/`.
    pub file: &'static str,
    pub source: String,
    pub entry: &'static str,
    pub interface: Vec<&'static str>,
    pub equivalent_to: Vec<&'static str>,
    pub inequivalent_to: Vec<&'static str>,
}

impl CatalogEntry {
    pub fn program(&self) -> Result<Program, Diagnostics> {
        load_program(&self.source)
    }
}

fn entry(
    name: &'static str,
    file: &'static str,
    source: &str,
    interface: &[&'static str],
    equivalent_to: &[&'static str],
    inequivalent_to: &[&'static str],
) -> CatalogEntry {
    CatalogEntry {
        name,
        file,
        source: source.to_string(),
        entry: name,
        interface: interface.to_vec(),
        equivalent_to: equivalent_to.to_vec(),
        inequivalent_to: inequivalent_to.to_vec(),
    }
}

/// Every closed model with its expected relationships. Relationships refer
/// to entries in the same source file.
pub fn catalog() -> Vec<CatalogEntry> {
    let ad = ["a", "d"];
    vec![
        entry("QECC", "qecc", QECC_SRC, &ad, &["Identity"], &[]),
        entry("Identity", "qecc", QECC_SRC, &ad, &["QECC"], &[]),
        entry("QECC2", "qecc2", QECC2_SRC, &ad, &["BitFlip"], &["Identity"]),
        entry("BitFlip", "qecc2", QECC2_SRC, &ad, &["QECC2"], &["Identity"]),
        entry("P", "mixed", MIXED_SRC, &["a"], &["Q"], &[]),
        entry("Q", "mixed", MIXED_SRC, &["a"], &["P"], &[]),
        entry("PR", "mixed", MIXED_SRC, &["b"], &["QR"], &[]),
        entry("QR", "mixed", MIXED_SRC, &["b"], &["PR"], &[]),
        entry("Teleport", "teleport", TELEPORT_SRC, &ad, &["Identity"], &[]),
    ]
}

pub fn find(name: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.name == name)
}

/// Source of a bundled model by file stem, e.g. `qecc`.
pub fn source_by_stem(stem: &str) -> Option<&'static str> {
    match stem {
        "qecc" => Some(QECC_SRC),
        "qecc2" => Some(QECC2_SRC),
        "mixed" => Some(MIXED_SRC),
        "teleport" => Some(TELEPORT_SRC),
        "substitution" => Some(SUBSTITUTION_SRC),
        "broken" => Some(BROKEN_SRC),
        _ => None,
    }
}

/// Real rotation taking `|0>` to `sqrt(1-p)|0> + sqrt(p)|1>`, as matrix source text.
pub fn rotation_source(p: f64) -> String {
    let (c, s) = ((1.0 - p).sqrt(), p.sqrt());
    format!("[[{c:.17}, {:.17}], [{s:.17}, {c:.17}]]", -s)
}

/// `QECC2` with each noise qubit flipped with probability `p` instead of 1/2.
pub fn qecc2_with_noise(p: f64) -> CatalogEntry {
    assert!((0.0..=1.0).contains(&p), "flip probability out of range");
    let rot = rotation_source(p);
    let src = QECC2_SRC
        .replace("{u *= H}.{v *= H}.{w *= H}", &format!("{{u *= {rot}}}.{{v *= {rot}}}.{{w *= {rot}}}"))
        .replace("(qbit u) {u *= H}", &format!("(qbit u) {{u *= {rot}}}"));
    CatalogEntry { name: "QECC2", ..entry("QECC2", "qecc2", &src, &["a", "d"], &["BitFlip"], &["Identity"]) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_typechecks() {
        for e in catalog() {
            let p = e.program().unwrap_or_else(|d| panic!("{}: {d}", e.name));
            let def = p.get(e.entry).expect("entry defined");
            let params: Vec<&str> = def.params.iter().map(|p| p.name.as_str()).collect();
            assert_eq!(params, e.interface, "{}", e.name);
            for other in e.equivalent_to.iter().chain(&e.inequivalent_to) {
                assert!(p.get(other).is_some(), "{} refers to {other}", e.name);
            }
        }
    }

    #[test]
    fn broken_model_is_rejected_for_linearity() {
        let err = load_program(BROKEN_SRC).unwrap_err();
        assert!(err.iter().any(|e| e.is_linearity()));
    }

    #[test]
    fn open_terms_typecheck() {
        let p = load_program(SUBSTITUTION_SRC).unwrap();
        assert_eq!(p.definitions.len(), 3);
    }

    #[test]
    fn noisy_variant_replaces_every_hadamard_in_the_noise() {
        let e = qecc2_with_noise(0.25);
        assert!(!e.source.contains("{u *= H}"));
        assert!(!e.source.contains("{w *= H}"));
        e.program().unwrap();
    }
}
