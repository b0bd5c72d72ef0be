//! Textual point-generator specifications.
//!
//! Coordinates are separated by `;`. Each is either `SEQ @ EXPR`, the product
//! `a(n) f(x)`, or `tower:EXPR^^SEQ`, the power `g(x)^b(n)`:
//!
//! ```text
//! identity @ x; identity @ x^2
//! tower:x^^identity; power:eps=0.5 @ sin(x)
//! ```

use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::sequences::SequenceSpec;
use crate::weyl::Recipe;

pub fn parse_recipe(text: &str) -> Result<Recipe> {
    let text = text.trim();
    if let Some(body) = text.strip_prefix("tower:") {
        let (base, exponent) = body
            .split_once("^^")
            .ok_or_else(|| Error::param(format!("tower coordinate `{text}` lacks `^^`")))?;
        return Ok(Recipe::PowerTower {
            base: parse_expr(base)?,
            exponent: exponent.parse()?,
        });
    }
    let (seq, factor) = text
        .rsplit_once('@')
        .ok_or_else(|| Error::param(format!("coordinate `{text}` must read `SEQ @ EXPR` or `tower:EXPR^^SEQ`")))?;
    Ok(Recipe::Product {
        seq: seq.parse::<SequenceSpec>()?,
        factor: parse_expr(factor)?,
    })
}

pub fn parse_recipes(text: &str) -> Result<Vec<Recipe>> {
    let parts: Vec<&str> = text.split(';').filter(|s| !s.trim().is_empty()).collect();
    if parts.is_empty() {
        return Err(Error::param("generator spec has no coordinates"));
    }
    parts.into_iter().map(parse_recipe).collect()
}

pub fn format_recipe(r: &Recipe) -> String {
    match r {
        Recipe::Product { seq, factor } => format!("{seq} @ {factor}"),
        Recipe::PowerTower { base, exponent } => format!("tower:{base}^^{exponent}"),
        Recipe::Raw(v) => format!("raw[{}]", v.len()),
    }
}
