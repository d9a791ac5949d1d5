use super::linalg::solve;
use super::poly::{ensure_distinct, interpolate, Poly};
use super::{FieldCtx, FieldElem};
use crate::error::{Error, Result};

/// Berlekamp-Welch decoding of a Reed-Solomon word.
///
/// Finds the polynomial of degree `< degree_bound` that agrees with at least
/// `points.len() - max_errors` of the points. When no such polynomial exists
/// the word is reported as a [`Error::DecodingFailure`] instead of returning a
/// guess, so with `max_errors = 0` this is a pure consistency check that
/// detects up to `points.len() - degree_bound` corrupted values.
pub fn bw_decode(
    ctx: &FieldCtx,
    points: &[(FieldElem, FieldElem)],
    degree_bound: usize,
    max_errors: usize,
) -> Result<Poly> {
    let total = points.len();
    if degree_bound == 0 {
        return Err(Error::InvalidParameters("degree bound must be positive".into()));
    }
    if total < degree_bound || 2 * max_errors > total - degree_bound {
        return Err(Error::InvalidParameters(format!(
            "cannot correct {max_errors} errors from {total} points with degree bound {degree_bound}"
        )));
    }
    ensure_distinct(points.iter().map(|p| p.0))?;
    let candidate = if max_errors == 0 {
        interpolate(ctx, &points[..degree_bound])?
    } else {
        solve_key_equation(ctx, points, degree_bound, max_errors)?
    };
    let agreeing = points.iter().filter(|&&(x, y)| candidate.eval(ctx, x) == y).count();
    if agreeing + max_errors < total {
        return Err(Error::DecodingFailure(format!(
            "best candidate agrees with {agreeing} of {total} points, need {}",
            total - max_errors
        )));
    }
    Ok(candidate.trimmed())
}

/// Solves `Q(x_i) = y_i E(x_i)` with `E` monic of degree `e` and
/// `deg Q < e + k`, then returns `Q / E`.
fn solve_key_equation(
    ctx: &FieldCtx,
    points: &[(FieldElem, FieldElem)],
    k: usize,
    e: usize,
) -> Result<Poly> {
    let q_len = e + k;
    let mut rows = Vec::with_capacity(points.len());
    let mut rhs = Vec::with_capacity(points.len());
    for &(x, y) in points {
        let mut row = Vec::with_capacity(q_len + e);
        let mut power = FieldElem::ONE;
        let mut powers = Vec::with_capacity(q_len + 1);
        for _ in 0..=q_len {
            powers.push(power);
            power = ctx.mul(power, x);
        }
        row.extend_from_slice(&powers[..q_len]);
        row.extend(powers[..e].iter().map(|&p| ctx.neg(ctx.mul(y, p))));
        rows.push(row);
        rhs.push(ctx.mul(y, powers[e]));
    }
    let solution = solve(ctx, &rows, &rhs)
        .ok_or_else(|| Error::DecodingFailure("key equation has no solution".into()))?;
    let q_poly = Poly::new(solution[..q_len].to_vec());
    let mut e_coeffs = solution[q_len..].to_vec();
    e_coeffs.push(FieldElem::ONE);
    let (quot, rem) = q_poly.div_rem(ctx, &Poly::new(e_coeffs))?;
    if !rem.is_zero() {
        return Err(Error::DecodingFailure("error locator does not divide".into()));
    }
    Ok(quot)
}
