//! The trace matrix container, fast-time windowing and the SARM file format.
//!
//! SARM layout (little endian, no padding): magic `SARMATRX`, u32 version,
//! u64 rows, u64 cols, f64 amp_scale, `rows` f64 slow-time axis, `cols` f64
//! fast-time axis, then the row-major f64 payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const SARM_MAGIC: &[u8; 8] = b"SARMATRX";
pub const SARM_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 8 + 8;

/// Real matrix of traces; rows are slow time, columns fast time.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMatrix {
    pub data: DMatrix<f64>,
    pub s_axis: Vec<f64>,
    pub t_axis: Vec<f64>,
    /// Amplitude prefactor factored out of the entries.
    pub amp_scale: f64,
}

/// `count` samples `start + k * step`.
pub fn uniform_axis(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start + k as f64 * step).collect()
}

/// Symmetric axis `k * step` for `k = -half..=half`.
pub fn centered_axis(half: usize, step: f64) -> Vec<f64> {
    (0..=2 * half).map(|k| (k as f64 - half as f64) * step).collect()
}

fn check_axis(axis: &[f64]) -> Result<()> {
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::AxisMismatch);
    }
    if axis.len() < 2 {
        return Ok(());
    }
    let step = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::AxisMismatch);
    }
    let max_abs = axis.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // rounding in absolute axes (e.g. around a 67 us delay) limits how uniform
    // consecutive differences can be
    let tol = 1e-12 * step + 8.0 * f64::EPSILON * max_abs;
    for w in axis.windows(2) {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - step).abs() > tol {
            return Err(Error::AxisMismatch);
        }
    }
    Ok(())
}

impl TraceMatrix {
    pub fn new(data: DMatrix<f64>, s_axis: Vec<f64>, t_axis: Vec<f64>, amp_scale: f64) -> Result<Self> {
        if s_axis.len() != data.nrows() || t_axis.len() != data.ncols() {
            return Err(Error::AxisMismatch);
        }
        check_axis(&s_axis)?;
        check_axis(&t_axis)?;
        Ok(Self { data, s_axis, t_axis, amp_scale })
    }

    pub fn zeros_like(&self) -> Self {
        Self { data: DMatrix::zeros(self.rows(), self.cols()), ..self.clone() }
    }

    /// Same axes and scale, different entries.
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        if data.shape() != self.data.shape() {
            return Err(Error::Shape(format!("{:?} vs {:?}", data.shape(), self.data.shape())));
        }
        Ok(Self { data, ..self.clone() })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn dt(&self) -> f64 {
        axis_step(&self.t_axis)
    }

    pub fn ds(&self) -> f64 {
        axis_step(&self.s_axis)
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.data.row(j).iter().copied().collect()
    }

    /// Columns `start..start + width` as a new matrix.
    pub fn column_slice(&self, start: usize, width: usize) -> Self {
        Self {
            data: self.data.columns(start, width).into_owned(),
            s_axis: self.s_axis.clone(),
            t_axis: self.t_axis[start..start + width].to_vec(),
            amp_scale: self.amp_scale,
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.norm()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (rows, cols) = self.data.shape();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * (rows + cols + rows * cols));
        out.extend_from_slice(SARM_MAGIC);
        out.extend_from_slice(&SARM_VERSION.to_le_bytes());
        out.extend_from_slice(&(rows as u64).to_le_bytes());
        out.extend_from_slice(&(cols as u64).to_le_bytes());
        out.extend_from_slice(&self.amp_scale.to_le_bytes());
        for v in self.s_axis.iter().chain(&self.t_axis) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for j in 0..rows {
            for l in 0..cols {
                out.extend_from_slice(&self.data[(j, l)].to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::TruncatedHeader);
        }
        if &bytes[..8] != SARM_MAGIC {
            return Err(Error::BadMagic);
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != SARM_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let rows = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let cols = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
        let amp_scale = f64::from_le_bytes(bytes[28..36].try_into().unwrap());
        let overflow = Error::DimensionOverflow { rows, cols };
        let values = rows
            .checked_mul(cols)
            .and_then(|p| p.checked_add(rows))
            .and_then(|p| p.checked_add(cols))
            .and_then(|p| p.checked_mul(8))
            .and_then(|p| usize::try_from(p).ok())
            .ok_or(overflow)?;
        let expected = HEADER_LEN.checked_add(values).ok_or(Error::DimensionOverflow { rows, cols })?;
        if bytes.len() < expected {
            return Err(Error::TruncatedPayload { expected, found: bytes.len() });
        }
        if bytes.len() > expected {
            return Err(Error::AxisMismatch);
        }
        let (rows, cols) = (rows as usize, cols as usize);
        let mut floats = bytes[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let s_axis: Vec<f64> = floats.by_ref().take(rows).collect();
        let t_axis: Vec<f64> = floats.by_ref().take(cols).collect();
        let payload: Vec<f64> = floats.collect();
        let data = DMatrix::from_row_slice(rows, cols, &payload);
        Self::new(data, s_axis, t_axis, amp_scale)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Row-major CSV with 17 significant digits, no header.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        write_csv_rows(&mut w, &self.data).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn write_csv_rows(w: &mut impl Write, data: &DMatrix<f64>) -> std::io::Result<()> {
    for j in 0..data.nrows() {
        let line: Vec<String> = (0..data.ncols()).map(|l| format!("{:.16e}", data[(j, l)])).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}

pub(crate) fn axis_step(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        return 0.0;
    }
    (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
}

/// Fast-time windows of `width` columns sharing `overlap` columns with
/// their neighbour; the last window may be narrower.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowPlan {
    pub width: usize,
    pub overlap: usize,
    pub count: usize,
    cols: usize,
}

impl WindowPlan {
    pub fn new(width: usize, overlap: usize, cols: usize) -> Result<Self> {
        if width == 0 || overlap >= width {
            return Err(Error::param("window.overlap", format!("need 0 <= overlap < width, got {overlap} and {width}")));
        }
        if width > cols {
            return Err(Error::param("window.width", format!("width {width} exceeds the {cols} fast-time columns")));
        }
        let stride = width - overlap;
        let count = 1 + (cols - width).div_ceil(stride);
        Ok(Self { width, overlap, count, cols })
    }

    /// One window covering everything.
    pub fn single(cols: usize) -> Self {
        Self { width: cols, overlap: 0, count: 1, cols }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column range `(start, width)` of window `k`.
    pub fn span(&self, k: usize) -> (usize, usize) {
        let start = k * (self.width - self.overlap);
        (start, self.width.min(self.cols - start))
    }

    pub fn spans(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.count).map(|k| self.span(k))
    }
}

pub fn make_windows(tm: &TraceMatrix, plan: &WindowPlan) -> Result<Vec<TraceMatrix>> {
    if plan.cols() != tm.cols() {
        return Err(Error::Shape(format!("plan for {} columns applied to {}", plan.cols(), tm.cols())));
    }
    Ok(plan.spans().map(|(start, width)| tm.column_slice(start, width)).collect())
}

/// Inverse of [`make_windows`]; columns covered by several windows are averaged.
pub fn reassemble(parts: &[TraceMatrix], plan: &WindowPlan) -> Result<TraceMatrix> {
    if parts.len() != plan.count {
        return Err(Error::Shape(format!("{} parts for a {}-window plan", parts.len(), plan.count)));
    }
    let rows = parts[0].rows();
    let mut mean = DMatrix::zeros(rows, plan.cols());
    let mut hits = vec![0u32; plan.cols()];
    let mut t_axis = vec![0.0; plan.cols()];
    for (part, (start, width)) in parts.iter().zip(plan.spans()) {
        if part.rows() != rows || part.cols() != width {
            return Err(Error::Shape(format!(
                "window at column {start} is {}x{}, expected {rows}x{width}",
                part.rows(),
                part.cols()
            )));
        }
        for l in 0..width {
            // running mean, exact when the overlapping values agree
            hits[start + l] += 1;
            let k = hits[start + l] as f64;
            let mut col = mean.column_mut(start + l);
            for (acc, v) in col.iter_mut().zip(part.data.column(l).iter()) {
                *acc += (v - *acc) / k;
            }
            t_axis[start + l] = part.t_axis[l];
        }
    }
    TraceMatrix::new(mean, parts[0].s_axis.clone(), t_axis, parts[0].amp_scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(rows: usize, cols: usize) -> TraceMatrix {
        let data = DMatrix::from_fn(rows, cols, |j, l| ((j * 31 + l * 7) as f64 * 0.37).sin());
        TraceMatrix::new(data, centered_axis(rows / 2, 0.015)[..rows].to_vec(), uniform_axis(-1e-8, 2.6e-11, cols), 0.5)
            .unwrap()
    }

    #[test]
    fn paper_window_count() {
        let plan = WindowPlan::new(450, 0, 16384).unwrap();
        assert_eq!(plan.count, 37);
        assert_eq!(plan.span(36), (16200, 184));
    }

    #[test]
    fn full_width_is_single_window() {
        let tm = sample(4, 20);
        let plan = WindowPlan::new(20, 0, 20).unwrap();
        let w = make_windows(&tm, &plan).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0], tm);
        assert!(WindowPlan::new(21, 0, 20).is_err());
    }

    #[test]
    fn maximal_overlap_round_trip() {
        let tm = sample(3, 17);
        let plan = WindowPlan::new(5, 4, 17).unwrap();
        let back = reassemble(&make_windows(&tm, &plan).unwrap(), &plan).unwrap();
        assert!((back.data - &tm.data).abs().max() <= 1e-15);
    }

    #[test]
    fn overlap_is_averaged() {
        let plan = WindowPlan::new(4, 2, 6).unwrap();
        assert_eq!(plan.count, 2);
        let axis = uniform_axis(0.0, 1.0, 6);
        let mk = |v: f64, start: usize| {
            TraceMatrix::new(DMatrix::from_element(1, 4, v), vec![0.0], axis[start..start + 4].to_vec(), 1.0).unwrap()
        };
        let out = reassemble(&[mk(1.0, 0), mk(3.0, 2)], &plan).unwrap();
        assert_eq!(out.data.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn zero_parts_give_zero() {
        let tm = sample(2, 30).zeros_like();
        let plan = WindowPlan::new(7, 0, 30).unwrap();
        let out = reassemble(&make_windows(&tm, &plan).unwrap(), &plan).unwrap();
        assert_eq!(out.data.abs().max(), 0.0);
    }

    #[test]
    fn empty_file_is_truncated_header() {
        let err = TraceMatrix::from_bytes(&[]).unwrap_err();
        assert_eq!(err.to_string(), "truncated header");
    }

    #[test]
    fn axis_length_mismatch() {
        let err = TraceMatrix::new(DMatrix::zeros(2, 3), vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], 1.0).unwrap_err();
        assert_eq!(err.to_string(), "axis mismatch");
    }

    #[test]
    fn corrupt_files() {
        let tm = sample(3, 4);
        let mut bytes = tm.to_bytes();
        assert!(matches!(TraceMatrix::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::TruncatedPayload { .. })));
        bytes[0] = b'X';
        assert!(matches!(TraceMatrix::from_bytes(&bytes), Err(Error::BadMagic)));
        let mut huge = tm.to_bytes();
        huge[12..20].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(TraceMatrix::from_bytes(&huge), Err(Error::DimensionOverflow { .. })));
    }

    #[test]
    fn non_uniform_axis_rejected() {
        let err = TraceMatrix::new(DMatrix::zeros(1, 3), vec![0.0], vec![0.0, 1.0, 3.0], 1.0);
        assert!(err.is_err());
    }

    #[test]
    fn absolute_fast_axis_accepted() {
        let axis = uniform_axis(6.6e-5, 1.0 / 38.4e9, 5000);
        assert!(TraceMatrix::new(DMatrix::zeros(1, 5000), vec![0.0], axis, 1.0).is_ok());
    }

    proptest! {
        #[test]
        fn sarm_round_trip_is_bit_exact(rows in 1usize..9, cols in 1usize..9, seed in any::<u64>()) {
            let data = DMatrix::from_fn(rows, cols, |j, l| {
                let bits = seed.wrapping_mul(6364136223846793005).wrapping_add((j * 9 + l) as u64);
                f64::from_bits((bits >> 12) | 0x3ff0_0000_0000_0000) - 1.5
            });
            let tm = TraceMatrix::new(data, uniform_axis(-1.0, 0.25, rows), uniform_axis(3.0, 0.5, cols), 1e-7).unwrap();
            let back = TraceMatrix::from_bytes(&tm.to_bytes()).unwrap();
            prop_assert_eq!(back.to_bytes(), tm.to_bytes());
            prop_assert_eq!(back, tm);
        }

        #[test]
        fn windows_round_trip(cols in 2usize..120, width in 1usize..60, overlap_frac in 0.0f64..1.0) {
            let width = width.min(cols);
            let overlap = ((width as f64) * overlap_frac) as usize % width.max(1);
            let tm = sample(3, cols);
            let plan = WindowPlan::new(width, overlap, cols).unwrap();
            let spans: Vec<_> = plan.spans().collect();
            prop_assert_eq!(spans.last().map(|(s, w)| s + w), Some(cols));
            let back = reassemble(&make_windows(&tm, &plan).unwrap(), &plan).unwrap();
            if overlap == 0 {
                prop_assert_eq!(&back.data, &tm.data);
            } else {
                prop_assert!((back.data - &tm.data).abs().max() <= 1e-15);
            }
        }
    }
}
