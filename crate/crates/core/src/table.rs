use crate::par;

/// Dense row-major matrix. Rows are directions (or SH coefficients), columns
/// are frequency bins, bands or samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Table<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }
}

impl<T> Table<T> {
    /// Wraps `data` (row-major); `None` when the length disagrees with the shape.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        // chunks() on an empty slice with cols == 0 would panic; guard it.
        let cols = self.cols.max(1);
        self.data.chunks(cols).take(self.rows)
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

impl<T: Send + Sync + Clone + Default> Table<T> {
    /// Builds a table by filling every row with `f(row_index, row)`, in
    /// parallel when available.
    pub fn par_from_fn<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(usize, &mut [T]) + Send + Sync,
    {
        let mut table = Self::filled(rows, cols, T::default());
        par::for_each_row(&mut table.data, cols, f);
        table
    }

    /// Applies `f` to each row in place.
    pub fn par_rows_mut<F>(&mut self, f: F)
    where
        F: Fn(usize, &mut [T]) + Send + Sync,
    {
        let cols = self.cols;
        par::for_each_row(&mut self.data, cols, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(Table::from_vec(2, 3, vec![0.0; 6]).is_some());
        assert!(Table::from_vec(2, 3, vec![0.0; 5]).is_none());
        assert!(Table::from_rows(vec![vec![1, 2], vec![3]]).is_none());
        let t = Table::from_rows(vec![vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(t.row(1), &[3, 4]);
        assert_eq!(*t.get(0, 1), 2);
        assert_eq!(t.iter_rows().count(), 2);
    }

    #[test]
    fn par_fill_matches_index() {
        let t: Table<usize> = Table::par_from_fn(5, 3, |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = i * 10 + j;
            }
        });
        assert_eq!(t.row(4), &[40, 41, 42]);
    }
}
