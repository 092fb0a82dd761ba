use std::fmt::Write;

use crate::error::{Error, Result};
use crate::hyperbolic::PoincareEmbedding;

const SIZE: f64 = 600.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// SVG scatter of a 2-D embedding inside the outline of the disk,
/// colored by label (gray when unlabeled).
pub fn disk_svg(embedding: &PoincareEmbedding, labels: Option<&[Option<usize>]>) -> Result<String> {
    if embedding.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "disk plots need a 2-D embedding, got dimension {}",
            embedding.dim()
        )));
    }
    if let Some(l) = labels {
        if l.len() != embedding.len() {
            return Err(Error::DimensionMismatch {
                expected: embedding.len(),
                got: l.len(),
            });
        }
    }
    let center = SIZE / 2.0;
    let radius = SIZE / 2.0 - 10.0;
    // the ball has Euclidean radius 1/√c
    let scale = radius * embedding.curvature().sqrt();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        s,
        r#"<circle cx="{center}" cy="{center}" r="{radius}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for v in 0..embedding.len() {
        let p = embedding.point(v);
        let color = labels
            .and_then(|l| l[v])
            .map_or("#999999", |y| PALETTE[y % PALETTE.len()]);
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="2" fill="{color}"/>"#,
            center + scale * p[0],
            center - scale * p[1]
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
