//! Plain-text matrix and vector files.
//!
//! A matrix file starts with `rows cols q` and lists the entries in row-major
//! order; a vector file starts with `len q`. Entries are whitespace separated
//! canonical integers in `[0, q)`.

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::matrix::FMatrix;

fn numbers(text: &str) -> impl Iterator<Item = Result<u64>> + '_ {
    text.split_whitespace()
        .map(|tok| tok.parse::<u64>().map_err(|_| Error::Parse(format!("'{tok}' is not a non-negative integer"))))
}

fn header(it: &mut impl Iterator<Item = Result<u64>>, what: &str) -> Result<u64> {
    it.next().ok_or_else(|| Error::Parse(format!("missing {what} in header")))?
}

fn check_modulus(ctx: &FieldCtx, q: u64) -> Result<()> {
    if q != ctx.modulus() {
        return Err(Error::Parse(format!("file is over q = {q}, expected q = {}", ctx.modulus())));
    }
    Ok(())
}

fn body(ctx: &FieldCtx, it: impl Iterator<Item = Result<u64>>, len: usize) -> Result<Vec<FieldElem>> {
    let values = it.collect::<Result<Vec<u64>>>()?;
    if values.len() != len {
        return Err(Error::Parse(format!("expected {len} entries, found {}", values.len())));
    }
    values.into_iter().map(|v| ctx.try_elem(v)).collect()
}

pub fn parse_matrix(ctx: &FieldCtx, text: &str) -> Result<FMatrix> {
    let mut it = numbers(text);
    let rows = header(&mut it, "row count")? as usize;
    let cols = header(&mut it, "column count")? as usize;
    check_modulus(ctx, header(&mut it, "modulus")?)?;
    let data = body(ctx, it, rows * cols)?;
    FMatrix::from_elems(rows, cols, data)
}

pub fn format_matrix(ctx: &FieldCtx, m: &FMatrix) -> String {
    let mut out = format!("{} {} {}\n", m.rows(), m.cols(), ctx.modulus());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|x| x.value().to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_vector(ctx: &FieldCtx, text: &str) -> Result<Vec<FieldElem>> {
    let mut it = numbers(text);
    let len = header(&mut it, "length")? as usize;
    check_modulus(ctx, header(&mut it, "modulus")?)?;
    body(ctx, it, len)
}

pub fn format_vector(ctx: &FieldCtx, v: &[FieldElem]) -> String {
    let line: Vec<String> = v.iter().map(|x| x.value().to_string()).collect();
    format!("{} {}\n{}\n", v.len(), ctx.modulus(), line.join(" "))
}
