//! First-order fast marching for `|grad T| = 1` over the masked region.
//!
//! Unmasked pixels are the known boundary at distance 0. Masked pixels are
//! frozen in ascending arrival time from a min-heap; ties go to the smaller
//! `(row, column)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{InpaintError, Result};
use crate::imaging::BinaryMask;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PixelState {
    Known,
    Band,
    Inside,
}

/// Arrival times over a mask, together with the order in which masked pixels froze.
#[derive(Clone, Debug)]
pub struct DistanceField<F: Scalar> {
    width: usize,
    height: usize,
    distance: Vec<F>,
    state: Vec<PixelState>,
    order: Vec<usize>,
}

impl<F: Scalar> DistanceField<F> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Arrival time at (x, y); `+inf` for masked pixels no boundary can reach.
    pub fn get(&self, x: usize, y: usize) -> F {
        self.distance[y * self.width + x]
    }

    pub fn distances(&self) -> &[F] {
        &self.distance
    }

    pub fn state(&self, x: usize, y: usize) -> PixelState {
        self.state[y * self.width + x]
    }

    /// Row-major indices of masked pixels in the order they were frozen.
    pub fn freeze_order(&self) -> &[usize] {
        &self.order
    }

    pub fn inside_count(&self) -> usize {
        self.state.iter().filter(|&&s| s == PixelState::Inside).count()
    }
}

struct Candidate<F> {
    t: F,
    y: usize,
    x: usize,
}

impl<F: Scalar> PartialEq for Candidate<F> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<F: Scalar> Eq for Candidate<F> {}

impl<F: Scalar> PartialOrd for Candidate<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<F: Scalar> Ord for Candidate<F> {
    // reversed: BinaryHeap pops the smallest (t, y, x)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .partial_cmp(&self.t)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.y.cmp(&self.y))
            .then_with(|| other.x.cmp(&self.x))
    }
}

/// Upwind update from the smaller non-Inside neighbour on each axis.
pub(crate) fn upwind_update<F: Scalar>(a: F, b: F) -> F {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi.is_infinite() {
        return lo + F::one();
    }
    let d = hi - lo;
    if d < F::one() {
        (lo + hi + (F::of(2.0) - d * d).sqrt()) / F::of(2.0)
    } else {
        lo + F::one()
    }
}

struct Marcher<'a, F: Scalar> {
    w: usize,
    h: usize,
    distance: &'a [F],
    state: &'a [PixelState],
}

impl<F: Scalar> Marcher<'_, F> {
    fn axis_min(&self, neighbours: [Option<usize>; 2]) -> F {
        neighbours
            .into_iter()
            .flatten()
            .filter(|&n| self.state[n] != PixelState::Inside)
            .map(|n| self.distance[n])
            .fold(F::infinity(), F::min)
    }

    fn solve(&self, x: usize, y: usize) -> F {
        let idx = y * self.w + x;
        let left = (x > 0).then(|| idx - 1);
        let right = (x + 1 < self.w).then(|| idx + 1);
        let up = (y > 0).then(|| idx - self.w);
        let down = (y + 1 < self.h).then(|| idx + self.w);
        let a = self.axis_min([left, right]);
        let b = self.axis_min([up, down]);
        upwind_update(a, b)
    }
}

fn neighbours4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    [
        (x > 0).then(|| (x - 1, y)),
        (x + 1 < w).then(|| (x + 1, y)),
        (y > 0).then(|| (x, y - 1)),
        (y + 1 < h).then(|| (x, y + 1)),
    ]
    .into_iter()
    .flatten()
}

/// Marches arrival times into the positive pixels of `mask`, starting from
/// the unmasked pixels at distance 0.
pub fn fmm_distance<F: Scalar>(mask: &BinaryMask) -> Result<DistanceField<F>> {
    let (w, h) = mask.dims();
    if w < 3 || h < 3 {
        return Err(InpaintError::MaskTooSmall { width: w, height: h });
    }
    let n = w * h;
    let mut distance = vec![F::zero(); n];
    let mut state = vec![PixelState::Known; n];
    for (i, s) in state.iter_mut().enumerate() {
        if mask.is_on_idx(i) {
            *s = PixelState::Inside;
            distance[i] = F::infinity();
        }
    }

    let mut heap = BinaryHeap::new();
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if state[idx] != PixelState::Inside {
                continue;
            }
            if neighbours4(x, y, w, h).any(|(nx, ny)| !mask.is_on(nx, ny)) {
                let t = Marcher { w, h, distance: &distance, state: &state }.solve(x, y);
                distance[idx] = t;
                state[idx] = PixelState::Band;
                heap.push(Candidate { t, y, x });
            }
        }
    }

    let mut order = Vec::with_capacity(mask.count_on());
    while let Some(Candidate { t, y, x }) = heap.pop() {
        let idx = y * w + x;
        if state[idx] == PixelState::Known || t > distance[idx] {
            continue;
        }
        state[idx] = PixelState::Known;
        order.push(idx);
        for (nx, ny) in neighbours4(x, y, w, h) {
            let nidx = ny * w + nx;
            if state[nidx] == PixelState::Known {
                continue;
            }
            let t_new = Marcher { w, h, distance: &distance, state: &state }.solve(nx, ny);
            if state[nidx] == PixelState::Inside || t_new < distance[nidx] {
                state[nidx] = PixelState::Band;
                distance[nidx] = t_new;
                heap.push(Candidate { t: t_new, y: ny, x: nx });
            }
        }
    }

    Ok(DistanceField { width: w, height: h, distance, state, order })
}
