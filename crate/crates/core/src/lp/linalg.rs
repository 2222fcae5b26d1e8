use crate::rational::Rational;

/// Incrementally built reduced row-echelon basis over the rationals.
#[derive(Debug, Clone)]
pub struct RowEchelon {
    width: usize,
    /// (pivot column, row normalized so that row[pivot] == 1); every stored
    /// row is zero in every other stored row's pivot column.
    rows: Vec<(usize, Vec<Rational>)>,
}

impl RowEchelon {
    pub fn new(width: usize) -> Self {
        RowEchelon { width, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn reduce(&self, mut row: Vec<Rational>) -> Vec<Rational> {
        for (p, basis) in &self.rows {
            if row[*p].is_zero() {
                continue;
            }
            let factor = row[*p].clone();
            for (k, b) in basis.iter().enumerate() {
                if !b.is_zero() {
                    row[k] -= &factor * b;
                }
            }
        }
        row
    }

    /// Adds `row` if it is independent of the rows already present.
    pub fn try_insert(&mut self, row: Vec<Rational>) -> bool {
        assert_eq!(row.len(), self.width, "row width mismatch");
        let mut row = self.reduce(row);
        let Some(pivot) = row.iter().position(|a| !a.is_zero()) else {
            return false;
        };
        let inv = row[pivot].recip();
        for a in row.iter_mut() {
            if !a.is_zero() {
                *a *= &inv;
            }
        }
        for (_, basis) in self.rows.iter_mut() {
            if basis[pivot].is_zero() {
                continue;
            }
            let factor = basis[pivot].clone();
            for (k, r) in row.iter().enumerate() {
                if !r.is_zero() {
                    basis[k] -= &factor * r;
                }
            }
        }
        self.rows.push((pivot, row));
        true
    }

    /// A nonzero vector orthogonal to every stored row, if the rank is deficient.
    pub fn null_vector(&self) -> Option<Vec<Rational>> {
        let mut is_pivot = vec![false; self.width];
        for (p, _) in &self.rows {
            is_pivot[*p] = true;
        }
        let free = is_pivot.iter().position(|p| !p)?;
        let mut d = vec![Rational::zero(); self.width];
        d[free] = Rational::one();
        for (p, row) in &self.rows {
            d[*p] = -&row[free];
        }
        Some(d)
    }
}

/// Rank of a dense matrix given by rows.
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let Some(first) = rows.first() else {
        return 0;
    };
    let mut ech = RowEchelon::new(first.len());
    for r in rows {
        ech.try_insert(r.clone());
    }
    ech.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&a| Rational::from_integer(a)).collect()
    }

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(rank(&[r(&[1, 0]), r(&[0, 1])]), 2);
        assert_eq!(rank(&[r(&[1, 2]), r(&[2, 4])]), 1);
        assert_eq!(rank(&[r(&[0, 0, 0])]), 0);
        assert_eq!(rank(&[r(&[1, 1, 0]), r(&[0, 1, 1]), r(&[1, 2, 1])]), 2);
        assert_eq!(rank(&[]), 0);
    }

    #[test]
    fn null_vector_is_orthogonal() {
        let rows = [r(&[1, 1, 0]), r(&[0, 1, 1])];
        let mut ech = RowEchelon::new(3);
        for row in &rows {
            assert!(ech.try_insert(row.clone()));
        }
        let d = ech.null_vector().unwrap();
        assert!(d.iter().any(|a| !a.is_zero()));
        for row in &rows {
            let dot: Rational = row.iter().zip(&d).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero());
        }
        assert!(ech.try_insert(r(&[0, 0, 1])));
        assert!(ech.null_vector().is_none());
    }
}
