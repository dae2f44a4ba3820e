//! 8-connected component labelling for binary masks.

use std::collections::VecDeque;

use crate::imaging::BinaryMask;

/// One connected component: pixel indices in BFS order, anchored at its
/// first pixel in raster order.
#[derive(Clone, Debug)]
pub struct Component {
    pub anchor: usize,
    pub pixels: Vec<usize>,
}

/// Components in raster order of their anchors.
pub fn components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if seen[start] || !mask.is_on_idx(start) {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(idx) = queue.pop_front() {
            pixels.push(idx);
            let (x, y) = ((idx % w) as isize, (idx / w) as isize);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let n = ny as usize * w + nx as usize;
                    if !seen[n] && mask.is_on_idx(n) {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        out.push(Component { anchor: start, pixels });
    }
    out
}

/// Keeps only the largest 8-connected component; ties go to the component
/// whose first raster pixel comes first.
pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let comps = components(mask);
    let mut best: Option<&Component> = None;
    for c in &comps {
        if best.is_none_or(|b| c.pixels.len() > b.pixels.len()) {
            best = Some(c);
        }
    }
    let mut out = BinaryMask::empty(w, h).expect("dimensions already validated");
    if let Some(c) = best {
        for &idx in &c.pixels {
            out.set(idx % w, idx / w, true);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_and_single() {
        let empty = BinaryMask::empty(5, 5).unwrap();
        assert_eq!(largest_component(&empty), empty);
        let one = BinaryMask::from_fn(5, 5, |x, y| x + y == 4).unwrap(); // anti-diagonal, 8-connected
        assert_eq!(largest_component(&one), one);
    }

    #[test]
    fn keeps_bigger_of_five_and_three() {
        let m = BinaryMask::from_fn(10, 4, |x, y| (y == 0 && x < 5) || (y == 3 && (6..9).contains(&x))).unwrap();
        let out = largest_component(&m);
        assert_eq!(out.count_on(), 5);
        assert!(out.is_on(0, 0) && !out.is_on(6, 3));
    }

    #[test]
    fn tie_goes_to_first_anchor() {
        let m = BinaryMask::from_fn(7, 3, |x, y| (y == 2 && x < 2) || (y == 0 && x > 4)).unwrap();
        let out = largest_component(&m);
        // second component's anchor (5,0) precedes (0,2) in raster order
        assert!(out.is_on(5, 0) && !out.is_on(0, 2));
    }

    proptest! {
        #[test]
        fn output_is_subset(bits in proptest::collection::vec(any::<bool>(), 64)) {
            let m = BinaryMask::from_fn(8, 8, |x, y| bits[y * 8 + x]).unwrap();
            let out = largest_component(&m);
            prop_assert!(out.count_on() <= m.count_on());
            for i in 0..64 {
                prop_assert!(!out.is_on_idx(i) || m.is_on_idx(i));
            }
            let max = components(&m).iter().map(|c| c.pixels.len()).max().unwrap_or(0);
            prop_assert_eq!(out.count_on(), max);
        }
    }
}
