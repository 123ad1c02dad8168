//! Parameter row access for the SGD kernels.
//!
//! `DenseRows` is plain exclusive storage for the deterministic path.
//! `SharedRows` lets several workers update the same rows without locks:
//! each coordinate is an `AtomicU32` holding `f32` bits, read and written
//! with relaxed ordering, so concurrent read-modify-write can lose updates.

use std::sync::atomic::{AtomicU32, Ordering};

pub(crate) trait Rows {
    fn dot(&self, row: usize, v: &[f32]) -> f32;
    /// `out += a * row`
    fn add_scaled_into(&self, row: usize, a: f32, out: &mut [f32]);
    /// `row += a * v`
    fn axpy(&mut self, row: usize, a: f32, v: &[f32]);
}

/// Eight-lane dot product; a fixed summation order that vectorizes.
#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f32; 8];
    let chunks = n / 8;
    for k in 0..chunks {
        let (x, y) = (&a[k * 8..k * 8 + 8], &b[k * 8..k * 8 + 8]);
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0f32;
    for i in chunks * 8..n {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub(crate) struct DenseRows<'a> {
    data: &'a mut [f32],
    dim: usize,
}

impl<'a> DenseRows<'a> {
    pub fn new(data: &'a mut [f32], dim: usize) -> Self {
        Self { data, dim }
    }

    #[inline]
    fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }
}

impl Rows for DenseRows<'_> {
    #[inline]
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        dot(self.row(row), v)
    }

    #[inline]
    fn add_scaled_into(&self, row: usize, a: f32, out: &mut [f32]) {
        for (o, x) in out.iter_mut().zip(self.row(row)) {
            *o += a * x;
        }
    }

    #[inline]
    fn axpy(&mut self, row: usize, a: f32, v: &[f32]) {
        let dim = self.dim;
        for (x, y) in self.data[row * dim..(row + 1) * dim].iter_mut().zip(v) {
            *x += a * y;
        }
    }
}

pub(crate) struct SharedStore {
    data: Vec<AtomicU32>,
    dim: usize,
}

impl SharedStore {
    pub fn from_slice(values: &[f32], dim: usize) -> Self {
        Self {
            data: values.iter().map(|x| AtomicU32::new(x.to_bits())).collect(),
            dim,
        }
    }

    pub fn to_vec(&self) -> Vec<f32> {
        self.data
            .iter()
            .map(|a| f32::from_bits(a.load(Ordering::Relaxed)))
            .collect()
    }

    pub fn handle(&self) -> SharedRows<'_> {
        SharedRows {
            data: &self.data,
            dim: self.dim,
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) struct SharedRows<'a> {
    data: &'a [AtomicU32],
    dim: usize,
}

impl SharedRows<'_> {
    #[inline]
    fn row(&self, r: usize) -> impl Iterator<Item = f32> + '_ {
        self.data[r * self.dim..(r + 1) * self.dim]
            .iter()
            .map(|a| f32::from_bits(a.load(Ordering::Relaxed)))
    }
}

impl Rows for SharedRows<'_> {
    #[inline]
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        let mut buf = [0.0f32; 512];
        if self.dim <= buf.len() {
            for (b, x) in buf.iter_mut().zip(self.row(row)) {
                *b = x;
            }
            dot(&buf[..self.dim], v)
        } else {
            let r: Vec<f32> = self.row(row).collect();
            dot(&r, v)
        }
    }

    #[inline]
    fn add_scaled_into(&self, row: usize, a: f32, out: &mut [f32]) {
        for (o, x) in out.iter_mut().zip(self.row(row)) {
            *o += a * x;
        }
    }

    #[inline]
    fn axpy(&mut self, row: usize, a: f32, v: &[f32]) {
        for (cell, y) in self.data[row * self.dim..(row + 1) * self.dim]
            .iter()
            .zip(v)
        {
            let x = f32::from_bits(cell.load(Ordering::Relaxed));
            cell.store((x + a * y).to_bits(), Ordering::Relaxed);
        }
    }
}
