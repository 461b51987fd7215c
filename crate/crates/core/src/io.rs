//! CSV tables: rough paths, controlled paths, coproducts and ★ products.
//!
//! Column sets are fixed:
//!
//! - rough path: `t_k,t_k1,forest,coefficient`
//! - controlled path: `time,forest,component,value`
//! - coproduct: `forest,left,right,coefficient`
//! - star product: `left,right,forest,coefficient`

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::controlled::ControlledPath;
use crate::driver::Grid;
use crate::error::{Error, Result};
use crate::forest::{enumerate_forests_over, Letter, PlanarForest};
use crate::hopf::{coproduct_mkw, StarTable, TensorSeries};
use crate::rough_path::RoughPath;
use crate::scalar::Real;

/// Bumped whenever a column of any dump changes.
pub const CSV_FORMAT_VERSION: u32 = 1;

pub const ROUGH_PATH_HEADER: [&str; 4] = ["t_k", "t_k1", "forest", "coefficient"];
pub const CONTROLLED_HEADER: [&str; 4] = ["time", "forest", "component", "value"];
pub const COPRODUCT_HEADER: [&str; 4] = ["forest", "left", "right", "coefficient"];
pub const STAR_HEADER: [&str; 4] = ["left", "right", "forest", "coefficient"];

/// One row per grid cell and basis forest.
pub fn write_rough_path<R: Real, W: Write>(x: &RoughPath<R>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROUGH_PATH_HEADER)?;
    let alg = x.algebra();
    for k in 0..x.cells() {
        let (t0, t1) = (x.grid().time(k).to_string(), x.grid().time(k + 1).to_string());
        let g = x.step(k);
        for i in 0..alg.dim() {
            w.write_record([t0.as_str(), t1.as_str(), &alg.forest(i).key(), &g[i].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_num<R: Real>(s: &str, what: &str) -> Result<R> {
    s.trim()
        .parse::<f64>()
        .map(R::of)
        .map_err(|e| Error::Invalid(format!("bad {what} `{s}`: {e}")))
}

/// Reads a rough-path table back; the base path starts at the origin.
pub fn read_rough_path<R: Real, Rd: Read>(input: Rd) -> Result<RoughPath<R>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &ROUGH_PATH_HEADER)?;
    let mut times: Vec<R> = Vec::new();
    let mut rows: Vec<(usize, PlanarForest, R)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let t0: R = parse_num(&rec[0], "time")?;
        let t1: R = parse_num(&rec[1], "time")?;
        if times.is_empty() {
            times.push(t0);
            times.push(t1);
        } else {
            let n = times.len();
            let same_cell = times[n - 2] == t0 && times[n - 1] == t1;
            if !same_cell {
                if times[n - 1] != t0 {
                    return Err(Error::Grid(format!("cell [{t0}, {t1}] does not continue the grid")));
                }
                times.push(t1);
            }
        }
        let forest = PlanarForest::parse(&rec[2])?;
        rows.push((times.len() - 2, forest, parse_num(&rec[3], "coefficient")?));
    }
    if rows.is_empty() {
        return Err(Error::Missing("rough-path table has no rows".into()));
    }
    let depth = rows.iter().map(|(_, f, _)| f.degree()).max().unwrap_or(0);
    let mut alphabet: Vec<Letter> = rows.iter().flat_map(|(_, f, _)| f.letters()).collect();
    alphabet.sort();
    alphabet.dedup();
    let grid = Grid::new(times)?;
    let alg = crate::algebra::TruncatedAlgebra::new(&alphabet, depth)?;
    let dim = alg.dim();
    let mut steps = vec![R::zero(); grid.cells() * dim];
    let mut seen = vec![false; grid.cells() * dim];
    for (k, f, v) in rows {
        let i = alg.require(&f)?;
        steps[k * dim + i] = v;
        seen[k * dim + i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Missing("rough-path table lacks some basis entries".into()));
    }
    let x0 = vec![R::zero(); alphabet.len()];
    RoughPath::from_steps(&alphabet, depth, grid, steps, &x0)
}

fn check_header(h: &csv::StringRecord, expect: &[&str]) -> Result<()> {
    if h.iter().map(str::trim).eq(expect.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("expected columns {}", expect.join(","))))
    }
}

pub fn write_controlled<R: Real, W: Write>(y: &ControlledPath<R>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONTROLLED_HEADER)?;
    let grid = y.rough().grid();
    for k in 0..y.nodes() {
        let t = grid.time(k).to_string();
        for (fi, f) in y.forests().forests().iter().enumerate() {
            let key = f.key();
            for (c, v) in y.coef(k, fi).iter().enumerate() {
                w.write_record([t.as_str(), &key, &c.to_string(), &v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Full coproduct table of `F^{≤depth}` over an alphabet.
pub fn write_coproduct<W: Write>(alphabet: &[Letter], depth: usize, out: W) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COPRODUCT_HEADER)?;
    let mut rows = 0;
    for f in enumerate_forests_over(alphabet, depth)? {
        let key = f.key();
        for (a, b, c) in coproduct_mkw::<i64>(&f).iter() {
            w.write_record([key.as_str(), &a.key(), &b.key(), &c.to_string()])?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

pub type CoproductTable = BTreeMap<PlanarForest, TensorSeries<i64>>;

pub fn read_coproduct<Rd: Read>(input: Rd) -> Result<CoproductTable> {
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &COPRODUCT_HEADER)?;
    let mut table = CoproductTable::new();
    for rec in r.records() {
        let rec = rec?;
        let f = PlanarForest::parse(&rec[0])?;
        let a = PlanarForest::parse(&rec[1])?;
        let b = PlanarForest::parse(&rec[2])?;
        let c: i64 = rec[3]
            .trim()
            .parse()
            .map_err(|e| Error::Invalid(format!("bad coefficient `{}`: {e}", &rec[3])))?;
        table.entry(f).or_insert_with(TensorSeries::zero).add_term(a, b, c);
    }
    Ok(table)
}

pub fn write_star<W: Write>(table: &StarTable<i64>, out: W) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STAR_HEADER)?;
    let mut rows = 0;
    for (a, b, f, c) in table.rows() {
        w.write_record([a.key(), b.key(), f.key(), c.to_string()])?;
        rows += 1;
    }
    w.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::base_alphabet;

    #[test]
    fn coproduct_round_trip() {
        let mut buf = Vec::new();
        let rows = write_coproduct(&base_alphabet(1), 2, &mut buf).unwrap();
        let table = read_coproduct(buf.as_slice()).unwrap();
        assert_eq!(table.len(), 4);
        assert_eq!(table.values().map(|t| t.len()).sum::<usize>(), rows);
        for (f, t) in &table {
            assert_eq!(*t, coproduct_mkw::<i64>(f));
        }
    }
}
