//! CSV export of finite-difference solutions.

use std::io::Write;

use super::boundary::Frontier2D;
use super::one_d::VISolution1D;
use super::two_d::VISolution2D;
use crate::error::Result;

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_solution_1d_csv<W: Write>(sol: &VISolution1D, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["x", "u", "branch"])?;
    for (i, (u, l)) in sol.values.iter().zip(&sol.labels).enumerate() {
        w.write_record([sol.grid.x(i).to_string(), u.to_string(), l.id().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_solution_2d_csv<W: Write>(sol: &VISolution2D, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["x1", "x2", "u", "branch"])?;
    for i in 0..sol.grid.x1.n {
        for j in 0..sol.grid.x2.n {
            w.write_record([
                sol.grid.x1.x(i).to_string(),
                sol.grid.x2.x(j).to_string(),
                sol.value(i, j).to_string(),
                sol.label(i, j).id(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Polyline points as `side,x1,x2`, left side first.
pub fn write_frontier_csv<W: Write>(frontier: &Frontier2D, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["side", "x1", "x2"])?;
    for (side, pts) in [("left", &frontier.left), ("right", &frontier.right)] {
        for p in pts.iter() {
            w.write_record([side.to_string(), p[0].to_string(), p[1].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
