//! Loading of pattern, decomposition and parameter files.

use std::fmt;
use std::path::Path;

use pmm_core::capacity::KPattern;
use pmm_core::fixtures;
use pmm_core::pattern::Pattern;
use serde::de::DeserializeOwned;

/// Exit status for usage errors and malformed input.
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<pmm_core::Error> for CliError {
    fn from(e: pmm_core::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

/// Bundled names accepted in place of a file, with the file names they answer to.
const ALIASES: [(&str, &str); 6] = [
    ("lambda_ex", "lambda_ex"),
    ("lambda_bcrl", "lambda_bcrl"),
    ("remark_binary", "remark_binary"),
    ("example_border", "example_border"),
    ("example_decomp", "example_border"),
    ("strassen", "strassen"),
];

fn bundled(name: &str) -> Option<&'static str> {
    ALIASES.iter().find(|(alias, _)| *alias == name).and_then(|(_, target)| fixtures::by_name(target))
}

/// Reads `builtin:<name>`, a file path, or (when no such file exists) the
/// bundled fixture whose name matches the file stem.
pub fn read_source(arg: &str) -> Result<(String, String), CliError> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return bundled(name)
            .map(|s| (s.to_string(), arg.to_string()))
            .ok_or_else(|| CliError::usage(format!("unknown builtin `{name}`")));
    }
    let path = Path::new(arg);
    match std::fs::read_to_string(path) {
        Ok(s) => Ok((s, arg.to_string())),
        Err(e) => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            match bundled(stem) {
                Some(s) if !path.exists() => Ok((s.to_string(), format!("builtin:{stem}"))),
                _ => Err(CliError::usage(format!("cannot read {arg}: {e}"))),
            }
        }
    }
}

/// Parses JSON, reporting the path of the offending field on failure.
pub fn parse<T: DeserializeOwned>(text: &str, source: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." { String::new() } else { format!(" at `{path}`") };
        CliError::usage(format!("malformed input in {source}{at}: {}", e.inner()))
    })
}

pub fn load<T: DeserializeOwned>(arg: &str) -> Result<T, CliError> {
    let (text, source) = read_source(arg)?;
    parse(&text, &source)
}

pub fn load_pattern(arg: &str) -> Result<Pattern, CliError> {
    load(arg)
}

/// A pattern with any number of factors: `{"tuples": …}` or the three-factor
/// `{"dims": …, "triples": …}` form.
pub fn load_kpattern(arg: &str) -> Result<KPattern, CliError> {
    let (text, source) = read_source(arg)?;
    let value: serde_json::Value = parse(&text, &source)?;
    if value.get("tuples").is_some() {
        return parse::<KPattern>(&text, &source);
    }
    let p: Pattern = parse(&text, &source)?;
    Ok(KPattern::try_from(&p)?)
}

/// A comma-separated list such as `1,1,0.5`, kept as one argument value.
#[derive(Clone, Debug)]
pub struct List<T>(pub Vec<T>);

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<List<T>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| format!("`{x}` is not a valid number")))
        .collect::<Result<_, _>>()
        .map(List)
}
