use std::io::{Read, Write};

use super::{Field, FieldError, GridSpec};

const MAGIC: &[u8; 4] = b"CHQF";
const VERSION: u32 = 1;

/// Writes `u` in the `CHQF` binary layout.
pub fn write_field<W: Write>(mut w: W, u: &Field) -> Result<(), FieldError> {
    let g = u.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[g.dim as u8, 0, 0, 0])?;
    for _ in 0..g.dim {
        w.write_all(&(g.points_per_axis as u32).to_le_bytes())?;
    }
    w.write_all(&g.half_width.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * u.data().len());
    for v in u.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<Field, FieldError> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(FieldError::Format("missing CHQF magic".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(FieldError::Format(format!("unsupported version {version}")));
    }
    let dim = head[8] as usize;
    if !(2..=3).contains(&dim) {
        return Err(FieldError::Format(format!("dimension {dim} not in {{2, 3}}")));
    }
    let mut m = None;
    for _ in 0..dim {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        let ma = u32::from_le_bytes(b) as usize;
        if m.is_some_and(|m0| m0 != ma) {
            return Err(FieldError::Format("axes of unequal length".into()));
        }
        m = Some(ma);
    }
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let half_width = f64::from_le_bytes(b);
    let grid = GridSpec::new(dim, m.unwrap_or(0), half_width).map_err(|e| FieldError::Format(e.to_string()))?;
    let mut raw = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut raw)?;
    let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Field::from_vec(grid, data)
}

/// One row of a radial profile: the cell with the largest `|u|` in a shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialRow {
    pub r: f64,
    pub abs: f64,
    pub sign: i8,
}

/// Shells of width `width` about the origin, each summarized by its largest
/// `|u|`. Empty shells are skipped.
pub fn radial_profile(u: &Field, width: f64) -> Vec<RadialRow> {
    let g = u.grid();
    let rmax = g.half_width * (g.dim as f64).sqrt();
    let n = (rmax / width).ceil() as usize + 1;
    let mut best: Vec<Option<RadialRow>> = vec![None; n];
    for (i, &v) in u.data().iter().enumerate() {
        let x = g.position(i);
        let r = x[..g.dim].iter().map(|c| c * c).sum::<f64>().sqrt();
        let s = (r / width) as usize;
        let row = RadialRow { r, abs: v.abs(), sign: sign_of(v) };
        match &best[s] {
            Some(b) if b.abs >= row.abs => {}
            _ => best[s] = Some(row),
        }
    }
    best.into_iter().flatten().collect()
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn write_radial_csv<W: Write>(mut w: W, rows: &[RadialRow]) -> Result<(), FieldError> {
    writeln!(w, "r,abs_u,sign")?;
    for row in rows {
        writeln!(w, "{:.12e},{:.12e},{}", row.r, row.abs, row.sign)?;
    }
    Ok(())
}

/// One line per cell: coordinates followed by the value.
pub fn write_field_csv<W: Write>(mut w: W, u: &Field) -> Result<(), FieldError> {
    let g = u.grid();
    let names = ["x", "y", "z"];
    writeln!(w, "{},u", names[..g.dim].join(","))?;
    for (i, v) in u.data().iter().enumerate() {
        let x = g.position(i);
        for c in &x[..g.dim] {
            write!(w, "{c:.12e},")?;
        }
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}
