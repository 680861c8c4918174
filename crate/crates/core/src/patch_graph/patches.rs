use crate::error::{invalid, Result};
use crate::image::Image;
use crate::scalar::Real;

/// One vectorized `l x l` patch per pixel, centered on that pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSet<T> {
    count: usize,
    patch_side: usize,
    vectors: Vec<T>,
}

impl<T: Real> PatchSet<T> {
    /// Wraps pre-computed feature vectors, `dim` values each.
    pub fn from_vectors(dim: usize, vectors: Vec<T>) -> Result<Self> {
        if dim == 0 || !vectors.len().is_multiple_of(dim) {
            return invalid("patch vectors must be a whole number of dim-length rows");
        }
        let side = (dim as f64).sqrt().round() as usize;
        Ok(PatchSet {
            count: vectors.len() / dim,
            patch_side: if side * side == dim { side } else { 0 },
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn patch_side(&self) -> usize {
        self.patch_side
    }

    /// Length of each patch vector.
    pub fn dim(&self) -> usize {
        self.vectors.len().checked_div(self.count).unwrap_or(0)
    }

    #[inline]
    pub fn patch(&self, i: usize) -> &[T] {
        let d = self.dim();
        &self.vectors[i * d..(i + 1) * d]
    }
}

/// Mirror index without repeating the edge sample: `-1 -> 1`, `n -> n - 2`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Extracts the `n^2` overlapping `l x l` patches (row-major inside each patch),
/// with reflective padding at the image border.
pub fn extract_patches<T: Real>(img: &Image<T>, l: usize) -> Result<PatchSet<T>> {
    if l == 0 || l.is_multiple_of(2) {
        return invalid(format!("patch side must be odd and positive, got {l}"));
    }
    let n = img.side();
    let r = (l / 2) as isize;
    let mut vectors = Vec::with_capacity(n * n * l * l);
    for row in 0..n {
        for col in 0..n {
            for dr in -r..=r {
                let rr = reflect(row as isize + dr, n);
                for dc in -r..=r {
                    vectors.push(img.get(rr, reflect(col as isize + dc, n)));
                }
            }
        }
    }
    Ok(PatchSet {
        count: n * n,
        patch_side: l,
        vectors,
    })
}
