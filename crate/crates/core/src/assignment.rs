//! Rectangular minimum-cost assignment (Hungarian method with potentials).

/// Solves the assignment problem for a `rows x cols` cost matrix with
/// `rows <= cols`, returning the column chosen for every row and the total
/// cost.
///
/// Augmenting paths are grown one row at a time in increasing row order; the
/// column scan always keeps the lowest-index column among equal slacks, so the
/// result is fully deterministic.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> (Vec<usize>, i64) {
    let rows = cost.len();
    if rows == 0 {
        return (Vec::new(), 0);
    }
    let cols = cost[0].len();
    assert!(
        rows <= cols,
        "assignment needs at least as many columns as rows"
    );
    debug_assert!(cost.iter().all(|r| r.len() == cols));

    const INF: i64 = i64::MAX / 4;
    // 1-based internals; index 0 is the virtual root
    let mut u = vec![0i64; rows + 1];
    let mut v = vec![0i64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for row in 1..=rows {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut min_slack = vec![INF; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = INF;
            let mut col1 = 0usize;
            for col in 1..=cols {
                if used[col] {
                    continue;
                }
                let cur = cost[r0 - 1][col - 1] - u[r0] - v[col];
                if cur < min_slack[col] {
                    min_slack[col] = cur;
                    way[col] = col0;
                }
                if min_slack[col] < delta {
                    delta = min_slack[col];
                    col1 = col;
                }
            }
            for col in 0..=cols {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_slack[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut choice = vec![0usize; rows];
    for col in 1..=cols {
        if owner[col] != 0 {
            choice[owner[col] - 1] = col - 1;
        }
    }
    let total = choice.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    (choice, total)
}
