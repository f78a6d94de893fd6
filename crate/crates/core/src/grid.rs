use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

/// `(row, col)` position of one image token.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("grid must have at least one row and one column")]
    Empty,
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("{rows}x{cols} grid needs {} values, got {found}", rows * cols)]
    Length { rows: usize, cols: usize, found: usize },
}

/// Dense row-major matrix. Serializes as nested rows.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "Vec<Vec<T>>")]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::Empty);
        }
        if data.len() != rows * cols {
            return Err(GridError::Length {
                rows,
                cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, GridError> {
        let expected = rows.first().map(Vec::len).ok_or(GridError::Empty)?;
        let height = rows.len();
        let mut data = Vec::with_capacity(height * expected);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != expected {
                return Err(GridError::Ragged {
                    row,
                    expected,
                    found: values.len(),
                });
            }
            data.extend(values);
        }
        Self::new(height, expected, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(Cell) -> T) -> Result<Self, GridError> {
        let data = (0..rows * cols).map(|i| f((i / cols, i % cols))).collect();
        Self::new(rows, cols, data)
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, (row, col): Cell) -> &T {
        assert!(
            row < self.rows && col < self.cols,
            "cell ({row}, {col}) outside {}x{}",
            self.rows,
            self.cols
        );
        &self.data[row * self.cols + col]
    }

    pub fn set(&mut self, (row, col): Cell, value: T) {
        assert!(
            row < self.rows && col < self.cols,
            "cell ({row}, {col}) outside {}x{}",
            self.rows,
            self.cols
        );
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    /// Cells with their values in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (Cell, &T)> + '_ {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| ((i / cols, i % cols), v))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Result<Self, GridError> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols).map(<[T]>::to_vec).collect()
    }

    pub fn column(&self, col: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get((r, col)).clone()).collect()
    }
}

impl<T> TryFrom<Vec<Vec<T>>> for Grid<T> {
    type Error = GridError;

    fn try_from(rows: Vec<Vec<T>>) -> Result<Self, Self::Error> {
        Self::from_rows(rows)
    }
}

impl<T: Serialize> Serialize for Grid<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for row in self.data.chunks(self.cols) {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}
