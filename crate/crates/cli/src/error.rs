use serde_json::json;

/// Failure of a run, carrying its exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad config, unknown column, unwritable output: exit 2.
    Config { kind: String, message: String, column: Option<String> },
    /// Any module failure on a valid config: exit 1.
    Runtime { kind: String, message: String },
}

/// `MissingColumn(..)` becomes `missing_column`.
fn variant_name(e: &linkage::Error) -> String {
    let debug = format!("{e:?}");
    let head = debug.split(|c: char| !c.is_ascii_alphanumeric()).next().unwrap_or("");
    let mut out = String::new();
    for (i, c) in head.chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            kind: "invalid_config".into(),
            message: message.into(),
            column: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Runtime { .. } => 1,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json_line(&self) -> String {
        let value = match self {
            CliError::Config { kind, message, column } => json!({
                "error": kind,
                "message": message,
                "column": column,
                "exit_code": 2,
            }),
            CliError::Runtime { kind, message } => json!({
                "error": kind,
                "message": message,
                "exit_code": 1,
            }),
        };
        value.to_string()
    }
}

impl From<linkage::Error> for CliError {
    fn from(e: linkage::Error) -> Self {
        let kind = variant_name(&e);
        let message = e.to_string();
        match e {
            linkage::Error::MissingColumn(c) | linkage::Error::UnknownSeries(c) => CliError::Config {
                kind,
                message,
                column: Some(c),
            },
            linkage::Error::InvalidConfig(_) => CliError::Config {
                kind,
                message,
                column: None,
            },
            _ => CliError::Runtime { kind, message },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config { message, .. } | CliError::Runtime { message, .. } => f.write_str(message),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_column_is_a_config_error_naming_it() {
        let e = CliError::from(linkage::Error::MissingColumn("Peanut".into()));
        assert_eq!(e.exit_code(), 2);
        let v: serde_json::Value = serde_json::from_str(&e.to_json_line()).unwrap();
        assert_eq!(v["error"], "missing_column");
        assert_eq!(v["column"], "Peanut");
        assert!(!e.to_json_line().contains('\n'));
    }

    #[test]
    fn module_failures_exit_one() {
        let e = CliError::from(linkage::Error::NonFiniteRecursion(7));
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_json_line().contains("\"non_finite_recursion\""));
    }
}
