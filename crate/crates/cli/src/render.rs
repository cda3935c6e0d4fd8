//! Binary PPM (P6) rendering of point clouds.
//!
//! One-dimensional clouds become a horizontal density strip; planar clouds a
//! raster with `y` pointing up. Empty pixels are white; occupied pixels are
//! grey, darker where more points land.

use gifs::{GifsError, PointSet};

const EMPTY: u8 = 255;
const LIGHTEST: f64 = 160.0;

fn bin(v: f64, lo: f64, hi: f64, n: usize) -> usize {
    if hi > lo {
        (((v - lo) / (hi - lo)) * n as f64)
            .floor()
            .clamp(0.0, (n - 1) as f64) as usize
    } else {
        n / 2
    }
}

fn shade(count: u32, max: u32) -> u8 {
    if count == 0 {
        EMPTY
    } else {
        (LIGHTEST * (1.0 - count as f64 / max as f64)).round() as u8
    }
}

/// Renders `set` to a `width x height` P6 image spanning its bounding box.
pub fn render_ppm(set: &PointSet, width: usize, height: usize) -> Result<Vec<u8>, GifsError> {
    if set.is_empty() {
        return Err(GifsError::InvalidParameter(
            "nothing to render: the point set is empty".into(),
        ));
    }
    if width == 0 || height == 0 {
        return Err(GifsError::InvalidParameter(
            "image size must be positive".into(),
        ));
    }
    let bb = set.bounding_box();
    let mut counts = vec![0u32; width * height];
    match set.dim() {
        1 => {
            let (lo, hi) = bb[0];
            for p in set.iter() {
                let c = bin(p[0], lo, hi, width);
                for r in 0..height {
                    counts[r * width + c] += 1;
                }
            }
        }
        2 => {
            let ((x0, x1), (y0, y1)) = (bb[0], bb[1]);
            for p in set.iter() {
                let c = bin(p[0], x0, x1, width);
                let r = height - 1 - bin(p[1], y0, y1, height);
                counts[r * width + c] += 1;
            }
        }
        d => {
            return Err(GifsError::InvalidParameter(format!(
                "only 1- and 2-dimensional point sets can be rendered, got {d}"
            )))
        }
    }
    let max = counts.iter().copied().max().unwrap_or(1).max(1);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(3 * width * height);
    for &c in &counts {
        let v = shade(c, max);
        out.extend_from_slice(&[v, v, v]);
    }
    Ok(out)
}

/// Header fields and pixel bytes of a P6 image produced by [`render_ppm`].
pub fn parse_ppm(bytes: &[u8]) -> Option<(usize, usize, &[u8])> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while bytes.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while !bytes.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
    }
    if fields[0] != "P6" || fields[3] != "255" {
        return None;
    }
    let (w, h) = (fields[1].parse().ok()?, fields[2].parse().ok()?);
    let pixels = bytes.get(pos + 1..)?;
    (pixels.len() == 3 * w * h).then_some((w, h, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_is_fully_dark() {
        let pts: Vec<Vec<f64>> = (0..=1000).map(|i| vec![i as f64 / 1000.0]).collect();
        let img = render_ppm(&PointSet::new(1, &pts).unwrap(), 100, 4).unwrap();
        let (w, h, px) = parse_ppm(&img).unwrap();
        assert_eq!((w, h), (100, 4));
        assert!(px.iter().all(|&v| v < 128));
    }

    #[test]
    fn plane_raster_flips_y() {
        let set = PointSet::new(2, &[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let img = render_ppm(&set, 2, 2).unwrap();
        let (_, _, px) = parse_ppm(&img).unwrap();
        let grey: Vec<u8> = px.chunks(3).map(|c| c[0]).collect();
        // top-right and bottom-left are set
        assert_eq!(grey, vec![255, 0, 0, 255]);
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(PointSet::from_csv("# no points\n").is_err());
        let one = PointSet::new(1, &[vec![0.5]]).unwrap();
        assert!(render_ppm(&one, 0, 10).is_err());
    }
}
