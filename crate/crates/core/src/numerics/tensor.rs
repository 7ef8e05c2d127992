use std::fmt::Debug;

use num_traits::Float;

use crate::error::{dim_err, Error, Result};

/// Scalar type the numerical core is generic over.
///
/// Everything runs in `f32`; `f64` exists as a shadow precision for
/// gradient checking.
pub trait Real: Float + Default + Debug + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Channel × time matrix, channel-major and time-minor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2D<T = f32> {
    channels: usize,
    frames: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor2D<T> {
    pub fn new(channels: usize, frames: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 || frames == 0 {
            return Err(dim_err!("tensor must be non-empty, got {channels}x{frames}"));
        }
        if data.len() != channels * frames {
            return Err(dim_err!(
                "{channels}x{frames} tensor needs {} values, got {}",
                channels * frames,
                data.len()
            ));
        }
        Ok(Self { channels, frames, data })
    }

    pub fn zeros(channels: usize, frames: usize) -> Self {
        Self::filled(channels, frames, T::zero())
    }

    pub fn filled(channels: usize, frames: usize, value: T) -> Self {
        assert!(channels > 0 && frames > 0, "tensor must be non-empty");
        Self {
            channels,
            frames,
            data: vec![value; channels * frames],
        }
    }

    /// Builds a tensor from per-channel rows of equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let channels = rows.len();
        let frames = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != frames) {
            return Err(dim_err!("ragged rows"));
        }
        Self::new(channels, frames, rows.concat())
    }

    /// Builds a tensor from per-frame columns of equal length.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let frames = columns.len();
        let channels = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != channels) {
            return Err(dim_err!("ragged columns"));
        }
        let mut data = vec![T::zero(); channels * frames];
        for (t, col) in columns.iter().enumerate() {
            for (c, &v) in col.iter().enumerate() {
                data[c * frames + t] = v;
            }
        }
        Self::new(channels, frames, data)
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.frames)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, channel: usize, frame: usize) -> T {
        self.data[channel * self.frames + frame]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, frame: usize, value: T) {
        self.data[channel * self.frames + frame] = value;
    }

    #[inline]
    pub fn row(&self, channel: usize) -> &[T] {
        &self.data[channel * self.frames..(channel + 1) * self.frames]
    }

    #[inline]
    pub fn row_mut(&mut self, channel: usize) -> &mut [T] {
        &mut self.data[channel * self.frames..(channel + 1) * self.frames]
    }

    pub fn column(&self, frame: usize) -> Vec<T> {
        (0..self.channels).map(|c| self.get(c, frame)).collect()
    }

    /// Rows `start..start + len`.
    pub fn slice_channels(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.channels {
            return Err(dim_err!(
                "channel slice {start}..{} out of {}",
                start + len,
                self.channels
            ));
        }
        let data = self.data[start * self.frames..(start + len) * self.frames].to_vec();
        Self::new(len, self.frames, data)
    }

    /// Columns `start..start + len`.
    pub fn slice_frames(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.frames {
            return Err(dim_err!("frame slice {start}..{} out of {}", start + len, self.frames));
        }
        let mut data = Vec::with_capacity(self.channels * len);
        for c in 0..self.channels {
            data.extend_from_slice(&self.row(c)[start..start + len]);
        }
        Self::new(self.channels, len, data)
    }

    /// Appends one column in place.
    pub fn push_column(&mut self, column: &[T]) -> Result<()> {
        if column.len() != self.channels {
            return Err(dim_err!(
                "column of {} values for {} channels",
                column.len(),
                self.channels
            ));
        }
        let frames = self.frames + 1;
        let mut data = Vec::with_capacity(self.channels * frames);
        for (c, &v) in column.iter().enumerate() {
            data.extend_from_slice(self.row(c));
            data.push(v);
        }
        self.data = data;
        self.frames = frames;
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            channels: self.channels,
            frames: self.frames,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor2D<U> {
        Tensor2D {
            channels: self.channels,
            frames: self.frames,
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn ensure_shape(&self, channels: usize, frames: usize, what: &str) -> Result<()> {
        if self.shape() != (channels, frames) {
            return Err(dim_err!(
                "{what}: expected {channels}x{frames}, got {}x{}",
                self.channels,
                self.frames
            ));
        }
        Ok(())
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.shape() != other.shape() {
            return Err(dim_err!("{:?} vs {:?}", self.shape(), other.shape()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(Tensor2D::<f32>::new(2, 3, vec![0.0; 5]).is_err());
        assert!(Tensor2D::<f32>::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn rows_and_columns_agree() {
        let t = Tensor2D::from_rows(&[vec![1.0f32, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let u = Tensor2D::from_columns(&[vec![1.0f32, 4.0], vec![2.0, 5.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(t, u);
        assert_eq!(t.column(1), vec![2.0, 5.0]);
    }

    #[test]
    fn slices_and_push() {
        let mut t = Tensor2D::from_rows(&[vec![1.0f32, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(t.slice_channels(1, 1).unwrap().data(), &[3.0, 4.0]);
        assert_eq!(t.slice_frames(1, 1).unwrap().data(), &[2.0, 4.0]);
        t.push_column(&[9.0, 8.0]).unwrap();
        assert_eq!(t.row(0), &[1.0, 2.0, 9.0]);
        assert_eq!(t.row(1), &[3.0, 4.0, 8.0]);
        assert!(t.slice_frames(2, 2).is_err());
    }
}
