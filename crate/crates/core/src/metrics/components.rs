use crate::imgdata::Mask;

/// Which neighbors of a pixel count as connected to it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Connectivity {
    /// N, S, E and W.
    Four,
    /// All eight neighbors.
    #[default]
    Eight,
}

impl Connectivity {
    /// Already-scanned neighbors (above and to the left) in raster order.
    fn causal_offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1)],
            Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1)],
        }
    }
}

/// Component ids per pixel; 0 is background and ids start at 1 in order of
/// each component's first pixel in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u32>,
    /// `sizes[id - 1]` is the pixel count of component `id`.
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn label(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Mask of one component.
    pub fn component_mask(&self, id: u32) -> Mask {
        Mask::new(
            self.height,
            self.width,
            self.labels.iter().map(|&l| (l == id && id != 0) as u8).collect(),
        )
        .expect("labeling dimensions")
    }
}

/// Two-pass union-find labeling.
pub fn label_components(mask: &Mask, connectivity: Connectivity) -> ComponentLabeling {
    let (h, w) = mask.dims();
    let mut labels = vec![0u32; h * w];
    // parent[0] is unused so provisional labels can start at 1.
    let mut parent: Vec<u32> = vec![0];

    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            let mut current = 0u32;
            for &(dr, dc) in connectivity.causal_offsets() {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nc >= w as isize {
                    continue;
                }
                let neighbor = labels[nr as usize * w + nc as usize];
                if neighbor == 0 {
                    continue;
                }
                if current == 0 {
                    current = find(&mut parent, neighbor);
                } else {
                    current = union(&mut parent, current, neighbor);
                }
            }
            if current == 0 {
                current = parent.len() as u32;
                parent.push(current);
            }
            labels[r * w + c] = current;
        }
    }

    // Final ids follow the first appearance of each root in raster order.
    let mut final_id = vec![0u32; parent.len()];
    let mut sizes = Vec::new();
    for label in labels.iter_mut() {
        if *label == 0 {
            continue;
        }
        let root = find(&mut parent, *label) as usize;
        if final_id[root] == 0 {
            sizes.push(0);
            final_id[root] = sizes.len() as u32;
        }
        *label = final_id[root];
        sizes[*label as usize - 1] += 1;
    }

    ComponentLabeling {
        height: h,
        width: w,
        labels,
        sizes,
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let grand = parent[parent[x as usize] as usize];
        parent[x as usize] = grand;
        x = grand;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) -> u32 {
    let (ra, rb) = (find(parent, a), find(parent, b));
    let root = ra.min(rb);
    parent[ra as usize] = root;
    parent[rb as usize] = root;
    root
}

/// Keeps only the biggest component; ties go to the smallest id.
pub fn largest_component(mask: &Mask, connectivity: Connectivity) -> Mask {
    let labeling = label_components(mask, connectivity);
    let best = labeling
        .sizes
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, usize)>, (i, &size)| match best {
            Some((_, s)) if s >= size => best,
            _ => Some((i, size)),
        });
    match best {
        Some((i, _)) => labeling.component_mask(i as u32 + 1),
        None => Mask::zeros(mask.height(), mask.width()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn from_rows(rows: &[&str]) -> Mask {
        let h = rows.len();
        let w = rows[0].len();
        Mask::from_fn(h, w, |r, c| rows[r].as_bytes()[c] == b'#')
    }

    /// Flood-fill labeling used as an independent reference.
    fn flood_labels(mask: &Mask, conn: Connectivity) -> Vec<u32> {
        let (h, w) = mask.dims();
        let mut labels = vec![0u32; h * w];
        let mut next = 0;
        for start in 0..h * w {
            if !mask.get(start / w, start % w) || labels[start] != 0 {
                continue;
            }
            next += 1;
            labels[start] = next;
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                let (r, c) = ((i / w) as isize, (i % w) as isize);
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        if (dr == 0 && dc == 0) || (conn == Connectivity::Four && dr != 0 && dc != 0) {
                            continue;
                        }
                        if mask.get_signed(r + dr, c + dc) {
                            let j = (r + dr) as usize * w + (c + dc) as usize;
                            if labels[j] == 0 {
                                labels[j] = next;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        labels
    }

    #[test]
    fn empty_mask_has_no_components() {
        let l = label_components(&Mask::zeros(4, 4), Connectivity::Eight);
        assert_eq!(l.count(), 0);
        assert!(largest_component(&Mask::zeros(4, 4), Connectivity::Eight).is_empty());
    }

    #[test]
    fn blocks_split_by_background_row() {
        let mask = from_rows(&["###", "...", "###"]);
        for conn in [Connectivity::Four, Connectivity::Eight] {
            assert_eq!(label_components(&mask, conn).count(), 2);
        }
    }

    #[test]
    fn diagonal_touch() {
        let mask = from_rows(&[".#", "#."]);
        assert_eq!(label_components(&mask, Connectivity::Eight).count(), 1);
        assert_eq!(label_components(&mask, Connectivity::Four).count(), 2);
    }

    #[test]
    fn u_shape_merges_into_one_id() {
        let mask = from_rows(&["#.#", "#.#", "###"]);
        let l = label_components(&mask, Connectivity::Four);
        assert_eq!(l.count(), 1);
        assert_eq!(l.sizes, vec![7]);
    }

    #[test]
    fn largest_of_five_and_three() {
        let mask = from_rows(&["###..", "##...", ".....", "...##", "....#"]);
        let largest = largest_component(&mask, Connectivity::Eight);
        assert_eq!(largest, from_rows(&["###..", "##...", ".....", ".....", "....."]));
    }

    #[test]
    fn tie_goes_to_first_in_raster_order() {
        let mask = from_rows(&["...##", "...##", ".....", "##...", "##..."]);
        let largest = largest_component(&mask, Connectivity::Eight);
        assert_eq!(largest, from_rows(&["...##", "...##", ".....", ".....", "....."]));
    }

    #[test]
    fn single_component_unchanged() {
        let mask = from_rows(&[".##.", "..#.", "..##"]);
        assert_eq!(largest_component(&mask, Connectivity::Eight), mask);
    }

    proptest! {
        #[test]
        fn agrees_with_flood_fill(seed in any::<u64>(), h in 1usize..30, w in 1usize..30, eight in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask = Mask::from_fn(h, w, |_, _| rng.random_bool(0.45));
            let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
            let l = label_components(&mask, conn);
            prop_assert_eq!(&l.labels, &flood_labels(&mask, conn));
            prop_assert_eq!(l.sizes.iter().sum::<usize>(), mask.count());

            let largest = largest_component(&mask, conn);
            prop_assert!(largest.is_subset_of(&mask));
            prop_assert!(label_components(&largest, conn).count() <= 1);
            if let Some(&max) = l.sizes.iter().max() {
                prop_assert_eq!(largest.count(), max);
            }
        }
    }
}
