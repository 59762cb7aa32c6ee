use super::{parse_case, CaseFormat, PowerCase};
use crate::{Error, Result};

const CASES: &[(&str, &str)] = &[
    ("case3", include_str!("../../data/case3.json")),
    ("case6ww", include_str!("../../data/case6ww.json")),
    ("case9", include_str!("../../data/case9.json")),
];

pub fn bundled_case_names() -> Vec<&'static str> {
    CASES.iter().map(|(name, _)| *name).collect()
}

pub fn bundled_case_source(name: &str) -> Option<&'static str> {
    CASES.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}

pub fn bundled_case(name: &str) -> Result<PowerCase> {
    let source = bundled_case_source(name).ok_or_else(|| Error::CaseNotFound { path: name.into() })?;
    parse_case(source.as_bytes(), CaseFormat::Json)
}
