//! Matrices over the rational-function field.
//!
//! Every pivot that is not identically zero is treated as invertible
//! (generic rank). Non-constant pivots are collected so callers can report
//! the genericity assumptions they rest on.

use std::fmt;

use crate::symkernel::{Expr, SymbolTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl ExprMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExprMatrix {
            rows,
            cols,
            data: vec![Expr::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ExprMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Expr::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        ExprMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Expr) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ExprMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn row(&self, i: usize) -> &[Expr] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> ExprMatrix {
        ExprMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &ExprMatrix) -> ExprMatrix {
        assert_eq!(self.cols, other.rows);
        ExprMatrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(Expr::zero(), |acc, k| {
                &acc + &(self.get(i, k) * other.get(k, j))
            })
        })
    }

    pub fn mul_vec(&self, v: &[Expr]) -> Vec<Expr> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Expr::zero(), |acc, k| &acc + &(self.get(i, k) * &v[k]))
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Expr::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Copy with columns reordered: column `k` of the result is column
    /// `order[k]` of `self`.
    pub fn permute_cols(&self, order: &[usize]) -> ExprMatrix {
        ExprMatrix::from_fn(self.rows, order.len(), |i, j| self.get(i, order[j]).clone())
    }

    pub fn select_cols(&self, cols: &[usize]) -> ExprMatrix {
        self.permute_cols(cols)
    }

    pub fn display<'a>(&'a self, table: &'a SymbolTable) -> MatrixDisplay<'a> {
        MatrixDisplay { m: self, table }
    }
}

pub struct MatrixDisplay<'a> {
    m: &'a ExprMatrix,
    table: &'a SymbolTable,
}

impl fmt::Display for MatrixDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.m.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.m.cols {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self.m.get(i, j).display(self.table))?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

/// Fraction-free (Bareiss) elimination rank.
pub fn rank_bareiss(m: &ExprMatrix) -> usize {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let mut prev = Expr::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a.get(i, c).is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                let t = a.get(p, j).clone();
                a.set(p, j, a.get(r, j).clone());
                a.set(r, j, t);
            }
        }
        let piv = a.get(r, c).clone();
        for i in r + 1..rows {
            let lead = a.get(i, c).clone();
            for j in c..cols {
                let num = &(&piv * a.get(i, j)) - &(&lead * a.get(r, j));
                let v = num.checked_div(&prev).expect("Bareiss divisor is a previous pivot");
                a.set(i, j, v);
            }
        }
        prev = piv;
        r += 1;
    }
    r
}

/// Result of Gauss–Jordan elimination on `[A | B]`, where `B` has any
/// number of extra columns carried along.
#[derive(Clone, Debug)]
pub struct Echelon {
    /// Reduced matrix (A block followed by the carried columns).
    pub reduced: ExprMatrix,
    /// `(row, col)` of each pivot in the A block, in column order.
    pub pivots: Vec<(usize, usize)>,
    /// Pivot values before normalization (the genericity assumptions).
    pub pivot_values: Vec<Expr>,
    /// Number of columns in the A block.
    pub a_cols: usize,
}

/// Gauss–Jordan elimination on the first `a_cols` columns, choosing in each
/// column the first row whose entry is not identically zero.
pub fn gauss_jordan(m: &ExprMatrix, a_cols: usize) -> Echelon {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let mut pivots = Vec::new();
    let mut pivot_values = Vec::new();
    let mut r = 0;
    for c in 0..a_cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a.get(i, c).is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                let t = a.get(p, j).clone();
                a.set(p, j, a.get(r, j).clone());
                a.set(r, j, t);
            }
        }
        let piv = a.get(r, c).clone();
        let inv = piv.recip().unwrap();
        for j in 0..cols {
            let v = a.get(r, j) * &inv;
            a.set(r, j, v);
        }
        for i in 0..rows {
            if i == r || a.get(i, c).is_zero() {
                continue;
            }
            let f = a.get(i, c).clone();
            for j in 0..cols {
                let v = a.get(i, j) - &(&f * a.get(r, j));
                a.set(i, j, v);
            }
        }
        pivots.push((r, c));
        pivot_values.push(piv);
        r += 1;
    }
    Echelon {
        reduced: a,
        pivots,
        pivot_values,
        a_cols,
    }
}

/// Rank by naive field elimination.
pub fn rank_field(m: &ExprMatrix) -> usize {
    gauss_jordan(m, m.cols).pivots.len()
}

pub fn rank(m: &ExprMatrix) -> usize {
    rank_bareiss(m)
}

/// Basis of the right kernel. Each vector has a 1 in its own free column and
/// zeros in the other free columns.
pub fn null_space(m: &ExprMatrix) -> Vec<Vec<Expr>> {
    let ech = gauss_jordan(m, m.cols);
    let pivot_cols: Vec<usize> = ech.pivots.iter().map(|&(_, c)| c).collect();
    (0..m.cols)
        .filter(|c| !pivot_cols.contains(c))
        .map(|f| {
            let mut v = vec![Expr::zero(); m.cols];
            v[f] = Expr::one();
            for &(r, c) in &ech.pivots {
                v[c] = -ech.reduced.get(r, f);
            }
            v
        })
        .collect()
}

/// Rescales a nonzero vector so its first nonzero entry is 1.
pub fn normalize_leading(v: &[Expr]) -> Vec<Expr> {
    match v.iter().find(|e| !e.is_zero()) {
        None => v.to_vec(),
        Some(lead) => {
            let inv = lead.recip().unwrap();
            v.iter().map(|e| e * &inv).collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinearSolution {
    /// `x = particular + Σ t_k · basis[k]`; `free` lists the free columns.
    Solved {
        particular: Vec<Expr>,
        basis: Vec<Vec<Expr>>,
        free: Vec<usize>,
        pivots: Vec<Expr>,
    },
    /// `yᵀA = 0` while `yᵀb = residual ≠ 0`.
    Inconsistent { witness: Vec<Expr>, residual: Expr },
}

/// All rows of `[A | b]` that reduce to `0 = residual`, each with the row
/// combination producing it. Residuals may be zero.
#[derive(Clone, Debug)]
pub struct AugmentedReduction {
    pub echelon: Echelon,
    pub residuals: Vec<(Vec<Expr>, Expr)>,
}

pub fn reduce_augmented(a: &ExprMatrix, b: &[Expr]) -> AugmentedReduction {
    let (rows, cols) = (a.rows, a.cols);
    assert_eq!(rows, b.len());
    let aug = ExprMatrix::from_fn(rows, cols + 1 + rows, |i, j| {
        if j < cols {
            a.get(i, j).clone()
        } else if j == cols {
            b[i].clone()
        } else if j - cols - 1 == i {
            Expr::one()
        } else {
            Expr::zero()
        }
    });
    let ech = gauss_jordan(&aug, cols);
    let rank = ech.pivots.len();
    let residuals = (rank..rows)
        .map(|i| {
            let y = (0..rows)
                .map(|k| ech.reduced.get(i, cols + 1 + k).clone())
                .collect();
            (y, ech.reduced.get(i, cols).clone())
        })
        .collect();
    AugmentedReduction {
        echelon: ech,
        residuals,
    }
}

/// Solves `A x = b`, pivoting on the lowest column first. Free columns are
/// set to zero in the particular solution.
pub fn solve_linear(a: &ExprMatrix, b: &[Expr]) -> LinearSolution {
    let red = reduce_augmented(a, b);
    if let Some((y, r)) = red.residuals.iter().find(|(_, r)| !r.is_zero()) {
        return LinearSolution::Inconsistent {
            witness: y.clone(),
            residual: r.clone(),
        };
    }
    let ech = &red.echelon;
    let cols = a.cols;
    let pivot_cols: Vec<usize> = ech.pivots.iter().map(|&(_, c)| c).collect();
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    let mut particular = vec![Expr::zero(); cols];
    for &(r, c) in &ech.pivots {
        particular[c] = ech.reduced.get(r, cols).clone();
    }
    let basis = free
        .iter()
        .map(|&f| {
            let mut v = vec![Expr::zero(); cols];
            v[f] = Expr::one();
            for &(r, c) in &ech.pivots {
                v[c] = -ech.reduced.get(r, f);
            }
            v
        })
        .collect();
    LinearSolution::Solved {
        particular,
        basis,
        free,
        pivots: ech.pivot_values.clone(),
    }
}
