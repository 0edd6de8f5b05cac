//! Bounds-checked front end to the strided `dgemm` kernel.

/// Strided view of an `rows × cols` matrix inside a slice.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub data: &'a [f64],
    pub rs: usize,
    pub cs: usize,
}

impl<'a> View<'a> {
    pub fn row_major(data: &'a [f64], cols: usize) -> Self {
        View { data, rs: cols, cs: 1 }
    }

    pub fn transposed(data: &'a [f64], cols: usize) -> Self {
        View { data, rs: 1, cs: cols }
    }

    fn check(&self, rows: usize, cols: usize) {
        if rows > 0 && cols > 0 {
            assert!((rows - 1) * self.rs + (cols - 1) * self.cs < self.data.len(), "gemm operand out of bounds");
        }
    }
}

/// `C ← A·B + β C` with `A: m × k`, `B: k × n` and `C` dense row-major `m × n`.
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: View<'_>, b: View<'_>, beta: f64, c: &mut [f64]) {
    a.check(m, k);
    b.check(k, n);
    assert!(c.len() >= m * n, "gemm output out of bounds");
    if m == 0 || n == 0 {
        return;
    }
    let stride = |s: usize| isize::try_from(s).expect("stride fits isize");
    #[allow(unsafe_code)]
    // SAFETY: every element the kernel touches lies inside the slices, as
    // checked above; C is dense with unit column stride, so no two of its
    // elements alias, and it cannot overlap A or B through the borrow rules.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            stride(a.rs),
            stride(a.cs),
            b.data.as_ptr(),
            stride(b.rs),
            stride(b.cs),
            beta,
            c.as_mut_ptr(),
            stride(n),
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_product_and_transpose() {
        // A = [[1,2,3],[4,5,6]], B = Aᵀ
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut c = [7.0; 4];
        gemm(2, 3, 2, View::row_major(&a, 3), View::transposed(&a, 3), 0.0, &mut c);
        assert_eq!(c, [14.0, 32.0, 32.0, 77.0]);
        gemm(2, 3, 2, View::row_major(&a, 3), View::transposed(&a, 3), 1.0, &mut c);
        assert_eq!(c, [28.0, 64.0, 64.0, 154.0]);
    }

    #[test]
    #[should_panic(expected = "out of bounds")]
    fn rejects_short_operand() {
        let a = [1.0; 5];
        let mut c = [0.0; 4];
        gemm(2, 3, 2, View::row_major(&a, 3), View::transposed(&a, 3), 0.0, &mut c);
    }
}
