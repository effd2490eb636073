//! Plain-text problem dump for inspection and cross-checking with other solvers.
//!
//! ```text
//! sdp v1
//! block <index> <dim> <name>
//! scalar <index> <name>
//! objective
//! constraint <index> <relation> <rhs> <label>
//!   b <block> <row> <col> <re> <im>     (upper-triangle nonzeros)
//!   s <scalar> <coef>
//! ```

use std::io::{Result, Write};

use super::{LinearExpr, SdpProblem};

pub(super) fn write(p: &SdpProblem, out: &mut impl Write) -> Result<()> {
    writeln!(out, "sdp v1")?;
    for (i, b) in p.blocks.iter().enumerate() {
        writeln!(out, "block {i} {} {}", b.dim, b.name)?;
    }
    for (i, s) in p.scalars.iter().enumerate() {
        writeln!(out, "scalar {i} {s}")?;
    }
    writeln!(out, "objective")?;
    terms(&p.objective, out)?;
    for (i, c) in p.constraints.iter().enumerate() {
        writeln!(
            out,
            "constraint {i} {} {:e} {}",
            c.relation.symbol(),
            c.rhs,
            c.label
        )?;
        terms(&c.expr, out)?;
    }
    Ok(())
}

fn terms(expr: &LinearExpr, out: &mut impl Write) -> Result<()> {
    for (id, c) in &expr.blocks {
        let n = c.dim();
        for i in 0..n {
            for j in i..n {
                let z = c.get(i, j);
                if z.re != 0.0 || z.im != 0.0 {
                    writeln!(out, "  b {} {i} {j} {:e} {:e}", id.0, z.re, z.im)?;
                }
            }
        }
    }
    for (id, a) in &expr.scalars {
        writeln!(out, "  s {} {:e}", id.0, a)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use crate::hermitian::HermitianMatrix;
    use crate::sdp::{LinearExpr, Relation, SdpProblem};

    #[test]
    fn dump_lists_blocks_and_triplets() {
        let mut p = SdpProblem::new();
        let w = p.add_block("W", 2);
        let a = p.add_scalar("alpha");
        p.set_objective(LinearExpr::new().block(w, HermitianMatrix::identity(2)));
        p.add_constraint(
            "c0",
            LinearExpr::new()
                .block(w, HermitianMatrix::diag(&[1.0, 0.0]))
                .scalar(a, -2.0),
            Relation::Ge,
            1.5,
        );
        let mut buf = Vec::new();
        p.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sdp v1");
        assert_eq!(lines[1], "block 0 2 W");
        assert_eq!(lines[2], "scalar 0 alpha");
        assert!(lines.contains(&"constraint 0 >= 1.5e0 c0"));
        assert!(lines.contains(&"  b 0 0 0 1e0 0e0"));
        assert!(lines.contains(&"  s 0 -2e0"));
        assert_eq!(
            lines.iter().filter(|l| l.starts_with("  b 0 1 1")).count(),
            1
        );
    }
}
