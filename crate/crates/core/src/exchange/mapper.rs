//! Re-encodes property checks in place, keeping every other line where it was.

use crate::frontend::{parse, Program, PropertyEncoding};
use crate::logic::BExp;

use super::ExchangeError;

/// Source text of one check written in `style`, on a single line.
pub fn render_encoding(cond: &BExp, style: PropertyEncoding) -> String {
    match style {
        PropertyEncoding::ErrorLabel => format!("if (!({cond})) {{ Error: return 1; }}"),
        PropertyEncoding::VerifierErrorCall => format!("if (!({cond})) {{ verifier_error(); }}"),
        PropertyEncoding::AssertStmt => format!("assert({cond});"),
    }
}

/// Rewrites every property check of `program` into `target` style. Each rewritten check
/// keeps the line span of the original, padded with empty lines.
pub fn map_property(program: &Program, target: PropertyEncoding) -> Result<Program, ExchangeError> {
    let cfa = parse(program)?;
    if cfa.sites.is_empty() {
        return Err(ExchangeError::NoEncoding(program.path.clone()));
    }
    let mut sites = cfa.sites.clone();
    sites.sort_by_key(|s| s.start);
    let text = &program.text;
    let mut out = String::with_capacity(text.len());
    let mut at = 0;
    for s in &sites {
        out.push_str(&text[at..s.start]);
        let original = &text[s.start..s.end];
        if s.style == target {
            out.push_str(original);
        } else {
            out.push_str(&render_encoding(&s.condition, target));
            for _ in 0..original.matches('\n').count() {
                out.push('\n');
            }
        }
        at = s.end;
    }
    out.push_str(&text[at..]);
    Ok(Program::new(program.path.clone(), out))
}
