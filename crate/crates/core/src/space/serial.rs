//! Line-structured text form for points.
//!
//! `euclidean:v1,...,vn` / `hyperbolic:x0,...,xn` / `spider:leg,r` /
//! `product:(...);(...)`. Scalars print in the shortest decimal form that
//! round-trips exactly.

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

use super::{Point, PointData, SpaceDescriptor};

pub(crate) fn encode<S: Scalar>(p: &Point<S>) -> String {
    match p.data() {
        PointData::Euclidean(c) => format!("euclidean:{}", join(c)),
        PointData::Hyperbolic(c) => format!("hyperbolic:{}", join(c)),
        PointData::Spider { leg, radius } => format!("spider:{leg},{radius}"),
        PointData::Product(comps) => {
            let body: Vec<String> = comps.iter().map(|c| format!("({})", encode(c))).collect();
            format!("product:{}", body.join(";"))
        }
    }
}

fn join<S: Scalar>(values: &[S]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn decode<S: Scalar>(
    text: &str,
    expected: Option<&SpaceDescriptor>,
) -> Result<Point<S>, S> {
    let text = text.trim();
    let (prefix, body) = text
        .split_once(':')
        .ok_or_else(|| Error::invalid(format!("point has no backend prefix: `{text}`")))?;
    let point = match prefix {
        "euclidean" => Point::euclidean(parse_values(body)?)?,
        "hyperbolic" => Point::hyperbolic(parse_values(body)?)?,
        "spider" => {
            let (leg_txt, r_txt) = body
                .split_once(',')
                .ok_or_else(|| Error::invalid(format!("spider point needs `leg,r`: `{body}`")))?;
            let leg: usize = leg_txt
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad leg index `{leg_txt}`")))?;
            let radius = parse_scalar(r_txt)?;
            let legs = match expected {
                Some(SpaceDescriptor::Spider(k)) => *k,
                Some(other) => return Err(Error::mismatch(other, &SpaceDescriptor::Spider(leg.max(2)))),
                None => leg.max(2),
            };
            Point::spider(legs, leg, radius)?
        }
        "product" => {
            let parts = split_components(body)?;
            let expected_parts: Option<&[SpaceDescriptor]> = match expected {
                Some(SpaceDescriptor::Product(parts_desc)) => {
                    if parts_desc.len() != parts.len() {
                        return Err(Error::invalid(format!(
                            "product point has {} components, expected {}",
                            parts.len(),
                            parts_desc.len()
                        )));
                    }
                    Some(parts_desc)
                }
                Some(other) => {
                    return Err(Error::invalid(format!(
                        "found a product point where {other} was expected"
                    )))
                }
                None => None,
            };
            let mut comps = Vec::with_capacity(parts.len());
            for (i, part) in parts.iter().enumerate() {
                let exp = expected_parts.map(|ps| &ps[i]);
                comps.push(decode(part, exp)?);
            }
            Point::product(comps)?
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown point backend `{other}` (expected euclidean, hyperbolic, spider, or product)"
            )))
        }
    };
    if let Some(exp) = expected {
        if point.space() != exp {
            return Err(Error::mismatch(exp, point.space()));
        }
    }
    Ok(point)
}

fn parse_values<S: Scalar>(body: &str) -> Result<Vec<S>, S> {
    body.split(',').map(parse_scalar).collect()
}

fn parse_scalar<S: Scalar>(token: &str) -> Result<S, S> {
    let token = token.trim();
    S::from_str(token).map_err(|_| Error::invalid(format!("bad numeric value `{token}`")))
}

/// Splits `(...);(...)` at top-level semicolons and strips the parentheses.
fn split_components<S: Scalar>(body: &str) -> Result<Vec<String>, S> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for ch in body.chars() {
        match ch {
            '(' => {
                if depth > 0 {
                    current.push(ch);
                }
                depth += 1;
            }
            ')' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| Error::invalid("unbalanced parentheses in product point"))?;
                if depth > 0 {
                    current.push(ch);
                }
            }
            ';' if depth == 0 => {}
            _ => {
                if depth == 0 && !ch.is_whitespace() {
                    return Err(Error::invalid(format!(
                        "unexpected `{ch}` between product components"
                    )));
                }
                if depth > 0 {
                    current.push(ch);
                }
            }
        }
        if depth == 0 && !current.is_empty() {
            parts.push(std::mem::take(&mut current));
        }
    }
    if depth != 0 {
        return Err(Error::invalid("unbalanced parentheses in product point"));
    }
    if parts.is_empty() {
        return Err(Error::invalid("product point has no components"));
    }
    Ok(parts)
}
