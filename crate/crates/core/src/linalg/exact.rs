/// Exact rank of an integer matrix by fraction-free elimination.
///
/// Rows are reduced by their content after every elimination step, which
/// keeps entries small for incidence-type matrices. Returns `None` if an
/// intermediate value would overflow `i128`.
pub fn integer_rank(rows: &[Vec<i64>]) -> Option<usize> {
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let nrows = a.len();
    let ncols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..nrows)
            .filter(|&r| a[r][col] != 0)
            .min_by_key(|&r| a[r][col].unsigned_abs())
        else {
            continue;
        };
        a.swap(rank, p);
        let pivot_row = a[rank].clone();
        let pv = pivot_row[col];
        for r in (rank + 1)..nrows {
            let f = a[r][col];
            if f == 0 {
                continue;
            }
            let g = gcd(pv, f);
            let (mp, mf) = (pv / g, f / g);
            let row = &mut a[r];
            for c in col..ncols {
                row[c] = row[c].checked_mul(mp)?.checked_sub(pivot_row[c].checked_mul(mf)?)?;
            }
            let content = row[col..].iter().fold(0i128, |acc, &v| gcd(acc, v));
            if content > 1 {
                row[col..].iter_mut().for_each(|v| *v /= content);
            }
        }
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    Some(rank)
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_ranks() {
        assert_eq!(integer_rank(&[vec![0, 0], vec![0, 0]]), Some(0));
        assert_eq!(integer_rank(&[vec![1, 2], vec![2, 4]]), Some(1));
        assert_eq!(integer_rank(&[vec![2, 3], vec![4, 5]]), Some(2));
        assert_eq!(integer_rank(&[]), Some(0));
    }

    #[test]
    fn triangle_graph_incidence() {
        // Edges of a triangle: rank V − 1 = 2.
        let d = vec![vec![-1, 1, 0], vec![-1, 0, 1], vec![0, -1, 1]];
        assert_eq!(integer_rank(&d), Some(2));
    }
}
