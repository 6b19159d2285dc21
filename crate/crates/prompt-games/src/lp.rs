//! Minimax value of a zero-sum matrix game via linear programming.
//!
//! Used as an independent cross-check on the support-enumeration solver.
//! The matrix is shifted positive and the column player's program
//! `max sum(y) s.t. B y <= 1, y >= 0` is solved with a dense primal
//! simplex (Bland's rule, so no cycling). The game value is then
//! `1 / sum(y) - shift`.

const PIVOT_TOL: f64 = 1e-11;

/// Value of the zero-sum game with row-maximizer payoff matrix `payoff`.
///
/// Returns `None` only if the simplex iteration limit is hit, which does
/// not happen for well-posed desk-scale inputs.
pub fn zero_sum_value(payoff: &[Vec<f64>]) -> Option<f64> {
    let rows = payoff.len();
    let cols = payoff[0].len();
    let min = payoff
        .iter()
        .flatten()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;

    // Tableau: rows constraints (B y + s = 1), last row the objective.
    let width = cols + rows + 1;
    let mut tab = vec![vec![0.0; width]; rows + 1];
    for i in 0..rows {
        for j in 0..cols {
            tab[i][j] = payoff[i][j] + shift;
        }
        tab[i][cols + i] = 1.0;
        tab[i][width - 1] = 1.0;
    }
    for j in 0..cols {
        tab[rows][j] = -1.0; // maximize sum of y
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    for _ in 0..10_000 {
        // Entering column: Bland's rule, lowest index with negative cost.
        let Some(enter) = (0..cols + rows).find(|&j| tab[rows][j] < -PIVOT_TOL) else {
            break;
        };
        // Leaving row: minimum ratio, ties to the lowest basis index.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..rows {
            if tab[i][enter] > PIVOT_TOL {
                let ratio = tab[i][width - 1] / tab[i][enter];
                if ratio < best_ratio - PIVOT_TOL
                    || (ratio < best_ratio + PIVOT_TOL
                        && leave.is_some_and(|l| basis[i] < basis[l]))
                {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let leave = leave?; // unbounded cannot happen: B is strictly positive
        let pivot = tab[leave][enter];
        for v in tab[leave].iter_mut() {
            *v /= pivot;
        }
        for i in 0..=rows {
            if i != leave && tab[i][enter].abs() > 0.0 {
                let factor = tab[i][enter];
                for j in 0..width {
                    tab[i][j] -= factor * tab[leave][j];
                }
            }
        }
        basis[leave] = enter;
    }

    let objective = tab[rows][width - 1];
    if objective <= PIVOT_TOL {
        return None;
    }
    Some(1.0 / objective - shift)
}
