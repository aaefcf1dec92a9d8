//! Self-contained SVG rose diagrams and spoke plots.

use std::f64::consts::{PI, TAU};
use std::fmt::Write;

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::mobius::MobiusLink;

const SIZE: f64 = 400.0;
const CENTER: f64 = SIZE / 2.0;

/// Counts of angles in `bins` equal sectors starting at `-π`.
pub fn rose_bins(angles: &[Angle], bins: usize) -> Result<Vec<usize>> {
    if bins == 0 {
        return Err(Error::invalid("rose diagram needs at least one bin"));
    }
    let mut counts = vec![0usize; bins];
    for a in angles {
        let k = (((a.radians() + PI) / TAU) * bins as f64).floor() as usize;
        counts[k.min(bins - 1)] += 1;
    }
    Ok(counts)
}

// screen coordinates: 0 rad points right, angles increase counter-clockwise
fn point(radius: f64, theta: f64) -> (f64, f64) {
    (CENTER + radius * theta.cos(), CENTER - radius * theta.sin())
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <title>{}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Rose diagram with sector radius proportional to the square root of the
/// bin count (area-true).
pub fn rose_svg(angles: &[Angle], bins: usize, title: &str) -> Result<String> {
    if angles.is_empty() {
        return Err(Error::EmptyData);
    }
    let counts = rose_bins(angles, bins)?;
    let max = *counts.iter().max().unwrap_or(&1) as f64;
    let outer = 0.45 * SIZE;
    let mut s = header(title);
    let _ = writeln!(
        s,
        "<circle cx=\"{CENTER}\" cy=\"{CENTER}\" r=\"{outer}\" fill=\"none\" stroke=\"#999\"/>"
    );
    let width = TAU / bins as f64;
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let r = outer * (c as f64 / max).sqrt();
        let a0 = -PI + k as f64 * width;
        let (x0, y0) = point(r, a0);
        let (x1, y1) = point(r, a0 + width);
        let large = if width > PI { 1 } else { 0 };
        let _ = writeln!(
            s,
            "<path d=\"M {CENTER:.3} {CENTER:.3} L {x0:.3} {y0:.3} A {r:.3} {r:.3} 0 {large} 0 {x1:.3} {y1:.3} Z\" \
             fill=\"#4a78b5\" fill-opacity=\"0.7\" stroke=\"#234\"/>"
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Spoke endpoints: each covariate angle on the inner circle joined to the
/// link's predicted mean on the outer circle.
pub fn spoke_segments(link: &MobiusLink, covariates: &[Angle]) -> Result<Vec<(Angle, Angle)>> {
    covariates
        .iter()
        .map(|&x| Ok((x, link.apply(x.to_unit())?.arg())))
        .collect()
}

pub fn spoke_svg(segments: &[(Angle, Angle)], title: &str) -> Result<String> {
    if segments.is_empty() {
        return Err(Error::EmptyData);
    }
    let (inner, outer) = (0.25 * SIZE, 0.45 * SIZE);
    let mut s = header(title);
    for r in [inner, outer] {
        let _ = writeln!(
            s,
            "<circle cx=\"{CENTER}\" cy=\"{CENTER}\" r=\"{r}\" fill=\"none\" stroke=\"#999\"/>"
        );
    }
    for (from, to) in segments {
        let (x0, y0) = point(inner, from.radians());
        let (x1, y1) = point(outer, to.radians());
        let _ = writeln!(
            s,
            "<line x1=\"{x0:.3}\" y1=\"{y0:.3}\" x2=\"{x1:.3}\" y2=\"{y1:.3}\" stroke=\"#b5544a\"/>"
        );
        let _ = writeln!(s, "<circle cx=\"{x0:.3}\" cy=\"{y0:.3}\" r=\"2\" fill=\"#234\"/>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_rose_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 36_000;
        let draws: Vec<Angle> = (0..n).map(|_| Angle::new(rng.random_range(-PI..PI)).unwrap()).collect();
        let counts = rose_bins(&draws, 36).unwrap();
        let e = n as f64 / 36.0;
        let sd = (e * (1.0 - 1.0 / 36.0)).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - e).abs() < 5.0 * sd));
        let svg = rose_svg(&draws, 36, "uniform").unwrap();
        assert_eq!(svg.matches("<path").count(), 36);
    }

    #[test]
    fn concentrated_rose_uses_sectors_next_to_zero() {
        let draws: Vec<Angle> = (0..100).map(|k| Angle::new((k as f64 - 50.0) * 1e-3).unwrap()).collect();
        let counts = rose_bins(&draws, 36).unwrap();
        assert_eq!(counts[17] + counts[18], 100);
    }

    #[test]
    fn rotation_spokes_have_constant_offset() {
        let link = MobiusLink::from_polar(Angle::new(0.6).unwrap(), 0.0, Angle::ZERO).unwrap();
        let xs: Vec<Angle> = (0..20).map(|k| Angle::new(-3.0 + 0.3 * k as f64).unwrap()).collect();
        for (from, to) in spoke_segments(&link, &xs).unwrap() {
            assert!(((to - from).radians() - 0.6).abs() < 1e-12);
        }
        let svg = spoke_svg(&spoke_segments(&link, &xs).unwrap(), "s").unwrap();
        assert_eq!(svg.matches("<line").count(), 20);
    }
}
