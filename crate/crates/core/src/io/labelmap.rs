//! Text grids: a `W H` header line followed by `H` lines of `W`
//! space-separated non-negative integers.
//!
//! [`LabelMap`] holds a superpixel partition (ids contiguous from 0).
//! [`ClassMask`] holds per-pixel class values (0 = background, class id + 1
//! otherwise) and has no contiguity requirement.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Location, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    ids: Vec<u32>,
    num_labels: usize,
}

impl LabelMap {
    /// Validates dimensions and that ids cover `0..K` with every id used.
    pub fn new(width: usize, height: usize, ids: Vec<u32>) -> Result<Self> {
        check_dims(width, height, ids.len())?;
        let max = *ids.iter().max().unwrap() as usize;
        let mut seen = vec![false; max + 1];
        for &id in &ids {
            seen[id as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!(
                "label ids are not contiguous: id {missing} unused but max id is {max}"
            )));
        }
        Ok(Self {
            width,
            height,
            ids,
            num_labels: max + 1,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.ids[y * self.width + x]
    }

    /// Number of distinct labels K.
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Pixel count per label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_labels];
        for &id in &self.ids {
            sizes[id as usize] += 1;
        }
        sizes
    }

    pub fn to_text(&self) -> String {
        grid_to_text(self.width, self.height, &self.ids)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (w, h, ids) = parse_grid(text)?;
        Self::new(w, h, ids)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMask {
    width: usize,
    height: usize,
    values: Vec<u32>,
}

impl ClassMask {
    pub fn new(width: usize, height: usize, values: Vec<u32>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.values[y * self.width + x]
    }

    pub fn to_text(&self) -> String {
        grid_to_text(self.width, self.height, &self.values)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (w, h, values) = parse_grid(text)?;
        Self::new(w, h, values)
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::validation(format!(
            "grid must be non-empty, got {width}x{height}"
        )));
    }
    if len != width * height {
        return Err(Error::validation(format!(
            "grid {width}x{height} needs {} values, got {len}",
            width * height
        )));
    }
    Ok(())
}

fn grid_to_text(width: usize, height: usize, values: &[u32]) -> String {
    let mut out = String::with_capacity(values.len() * 3 + 16);
    writeln!(out, "{width} {height}").unwrap();
    for row in values.chunks(width).take(height) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn parse_grid(text: &str) -> Result<(usize, usize, Vec<u32>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(Location::Line(1), "missing header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::parse(Location::Line(1), "header must be \"W H\""));
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::parse(Location::Line(1), format!("bad dimension {s:?}")))
    };
    let (w, h) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    if w == 0 || h == 0 {
        return Err(Error::parse(Location::Line(1), "zero dimension"));
    }
    let total = w
        .checked_mul(h)
        .ok_or_else(|| Error::parse(Location::Line(1), "dimensions overflow"))?;

    let mut values = Vec::with_capacity(total.min(1 << 24));
    let mut rows = 0;
    for (idx, line) in lines {
        let at = Location::Line(idx + 1);
        if line.trim().is_empty() {
            continue;
        }
        if rows == h {
            return Err(Error::parse(at, "more rows than header declares"));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            if tok.starts_with('-') {
                return Err(Error::parse(at, format!("negative id {tok}")));
            }
            let v: u32 = tok
                .parse()
                .map_err(|_| Error::parse(at, format!("bad id {tok:?}")))?;
            values.push(v);
        }
        if values.len() - before != w {
            return Err(Error::parse(
                at,
                format!("expected {w} values, found {}", values.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != h {
        return Err(Error::parse(
            Location::Line(rows + 2),
            format!("expected {h} rows, found {rows}"),
        ));
    }
    Ok((w, h, values))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    LabelMap::from_text(&read_text(path.as_ref())?)
}

pub fn write_label_map(m: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, m.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_class_mask(path: impl AsRef<Path>) -> Result<ClassMask> {
    ClassMask::from_text(&read_text(path.as_ref())?)
}

pub fn write_class_mask(m: &ClassMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, m.to_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_by_two() {
        let m = LabelMap::from_text("2 2\n0 0\n1 1\n").unwrap();
        assert_eq!(m.num_labels(), 2);
        assert_eq!(m.sizes(), vec![2, 2]);
    }

    #[test]
    fn non_contiguous_rejected() {
        assert!(matches!(
            LabelMap::from_text("2 1\n0 2\n"),
            Err(Error::Validation(_))
        ));
        // Masks accept gaps.
        assert!(ClassMask::from_text("2 1\n0 2\n").is_ok());
    }

    #[test]
    fn negative_id_rejected() {
        match LabelMap::from_text("2 1\n0 -1\n") {
            Err(Error::Parse { at, .. }) => assert_eq!(at, Location::Line(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_row_rejected() {
        assert!(LabelMap::from_text("3 2\n0 0 0\n0 0\n").is_err());
        assert!(LabelMap::from_text("3 2\n0 0 0\n").is_err());
    }

    #[test]
    fn random_round_trip_k10() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut ids: Vec<u32> = (0..256).map(|_| rng.random_range(0..10u32)).collect();
        // Guarantee every id is used.
        for k in 0..10 {
            ids[k as usize * 7] = k;
        }
        let m = LabelMap::new(16, 16, ids).unwrap();
        assert_eq!(m.num_labels(), 10);
        assert_eq!(LabelMap::from_text(&m.to_text()).unwrap(), m);
    }

    proptest! {
        #[test]
        fn grid_parser_never_panics(text in "[0-9 \\-\n]{0,40}") {
            let _ = LabelMap::from_text(&text);
            let _ = ClassMask::from_text(&text);
        }

        #[test]
        fn mask_round_trip(w in 1usize..6, h in 1usize..6, vals in proptest::collection::vec(0u32..5, 36)) {
            let m = ClassMask::new(w, h, vals[..w * h].to_vec()).unwrap();
            prop_assert_eq!(ClassMask::from_text(&m.to_text()).unwrap(), m);
        }
    }
}
