//! Extraction configuration: which globals are feature variables and how
//! files map onto components.
//!
//! File format (`#` comments, blank lines ignored):
//!
//! ```text
//! [features]
//! regex = ^F[A-Z]$
//! types = const-bool-global, enum-global
//!
//! [components]
//! c1/*.cpp = C1
//! c2.c = C2
//! ```
//!
//! Component entries are tried in order; the first matching glob wins.

use glob::Pattern;
use regex::Regex;

use super::ExtractError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureType {
    /// Global `bool` declared `const` or `extern`.
    ConstBoolGlobal,
    /// Global of enum type declared `const` or `extern`.
    EnumGlobal,
}

impl FeatureType {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureType::ConstBoolGlobal => "const-bool-global",
            FeatureType::EnumGlobal => "enum-global",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "const-bool-global" => Some(FeatureType::ConstBoolGlobal),
            "enum-global" => Some(FeatureType::EnumGlobal),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExtractionConfig {
    pub feature_regex: Regex,
    pub feature_types: Vec<FeatureType>,
    pub component_map: Vec<(Pattern, String)>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            feature_regex: Regex::new("^F[A-Za-z0-9_]*$").unwrap(),
            feature_types: vec![FeatureType::ConstBoolGlobal, FeatureType::EnumGlobal],
            component_map: Vec::new(),
        }
    }
}

impl ExtractionConfig {
    pub fn new(feature_regex: &str, feature_types: &[FeatureType]) -> Result<Self, ExtractError> {
        Ok(ExtractionConfig {
            feature_regex: Regex::new(feature_regex).map_err(|e| config_err(0, e.to_string()))?,
            feature_types: feature_types.to_vec(),
            component_map: Vec::new(),
        })
    }

    pub fn with_component(mut self, glob: &str, component: &str) -> Result<Self, ExtractError> {
        let pat = Pattern::new(glob).map_err(|e| config_err(0, e.to_string()))?;
        self.component_map.push((pat, component.to_string()));
        Ok(self)
    }

    pub fn accepts(&self, t: FeatureType) -> bool {
        self.feature_types.contains(&t)
    }

    /// Component of the file at `path` (relative, `/`-separated).
    pub fn component_of(&self, path: &str) -> Option<&str> {
        self.component_map
            .iter()
            .find(|(p, _)| p.matches(path))
            .map(|(_, c)| c.as_str())
    }

    pub fn parse(text: &str) -> Result<Self, ExtractError> {
        let mut cfg = ExtractionConfig::default();
        let mut section = "";
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name.trim() {
                    "features" => "features",
                    "components" => "components",
                    other => return Err(config_err(line_no, format!("unknown section `{other}`"))),
                };
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(line_no, "expected `key = value`".into()));
            };
            let (key, value) = (key.trim(), value.trim());
            match (section, key) {
                ("features", "regex") => {
                    cfg.feature_regex = Regex::new(value).map_err(|e| config_err(line_no, e.to_string()))?;
                }
                ("features", "types") => {
                    cfg.feature_types = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            FeatureType::parse(s)
                                .ok_or_else(|| config_err(line_no, format!("unknown feature type `{s}`")))
                        })
                        .collect::<Result<_, _>>()?;
                }
                ("features", other) => return Err(config_err(line_no, format!("unknown key `{other}`"))),
                ("components", glob) => {
                    if value.is_empty() || value.contains(char::is_whitespace) {
                        return Err(config_err(line_no, format!("bad component name `{value}`")));
                    }
                    let pat = Pattern::new(glob).map_err(|e| config_err(line_no, e.to_string()))?;
                    cfg.component_map.push((pat, value.to_string()));
                }
                _ => return Err(config_err(line_no, "entry outside of a section".into())),
            }
        }
        Ok(cfg)
    }
}

fn config_err(line: usize, message: String) -> ExtractError {
    ExtractError::Config { line, message }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = ExtractionConfig::parse(
            "# demo\n[features]\nregex = ^F[A-Z]$\ntypes = const-bool-global\n\n[components]\nc1/*.cpp = C1\n*.c = C2\n",
        )
        .unwrap();
        assert!(cfg.feature_regex.is_match("FA"));
        assert!(!cfg.feature_regex.is_match("FAB"));
        assert_eq!(cfg.feature_types, vec![FeatureType::ConstBoolGlobal]);
        assert_eq!(cfg.component_of("c1/a.cpp"), Some("C1"));
        assert_eq!(cfg.component_of("b.c"), Some("C2"));
        assert_eq!(cfg.component_of("b.h"), None);
    }

    #[test]
    fn first_glob_wins() {
        let cfg = ExtractionConfig::parse("[components]\nshared/* = Core\n* = Rest\n").unwrap();
        assert_eq!(cfg.component_of("shared/x.c"), Some("Core"));
        assert_eq!(cfg.component_of("x.c"), Some("Rest"));
    }

    #[test]
    fn errors_name_the_line() {
        match ExtractionConfig::parse("[features]\ntypes = weird\n") {
            Err(ExtractError::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(ExtractionConfig::parse("regex = x\n").is_err());
        assert!(ExtractionConfig::parse("[features]\nregex = (\n").is_err());
    }
}
