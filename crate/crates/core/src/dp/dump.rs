//! Plain-text dump of a value table for inspection.
//!
//! ```text
//! # schedsim value table v1
//! horizon = 26
//! discount = 0.95
//! grid = linear | geometric:<ratio> | explicit
//! grid_points = 512
//! grid_max = ...
//! consumption_choices = 65
//! income_digests = <hex>[,<hex>...]
//! return_digests = <hex>[,<hex>...]
//! asset,v_0,v_1,...,v_T
//! <one row per grid point>
//! ```

use std::io::Write;

use crate::dp::table::ValueTable;
use crate::error::Result;
use crate::model::Spacing;

pub const DUMP_MAGIC: &str = "# schedsim value table v1";

pub fn write_table<W: Write>(table: &ValueTable, mut out: W) -> Result<()> {
    let p = table.params();
    let grid = match p.grid.spacing() {
        Some(Spacing::Linear) => "linear".to_string(),
        Some(Spacing::Geometric { ratio }) => format!("geometric:{ratio}"),
        None => "explicit".to_string(),
    };
    let digests = |ds: &[crate::dp::DiscreteDistribution]| {
        ds.iter().map(|d| d.digest()).collect::<Vec<_>>().join(",")
    };
    writeln!(out, "{DUMP_MAGIC}")?;
    writeln!(out, "horizon = {}", p.horizon)?;
    writeln!(out, "discount = {}", p.discount)?;
    writeln!(out, "grid = {grid}")?;
    writeln!(out, "grid_points = {}", p.grid.len())?;
    writeln!(out, "grid_max = {}", p.grid.max())?;
    writeln!(out, "consumption_choices = {}", p.consumption_choices)?;
    writeln!(
        out,
        "income_digests = {}",
        digests(table.law().income_laws())
    )?;
    writeln!(
        out,
        "return_digests = {}",
        digests(table.law().return_laws())
    )?;
    write!(out, "asset")?;
    for t in 0..=p.horizon {
        write!(out, ",v_{t}")?;
    }
    writeln!(out)?;
    for (i, x) in p.grid.points().iter().enumerate() {
        write!(out, "{x}")?;
        for t in 0..=p.horizon {
            write!(out, ",{}", table.value(i, t))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
