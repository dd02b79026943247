//! Data generation, masking, and adapters between matrices and external
//! formats (CSV, PNG images, ratings tables).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::fcnn::Activation;
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::{Error, Result};

// ─── synthetic generator ───

/// Synthetic completion target: a random low-rank matrix pushed through a
/// fixed nonlinearity.
///
/// With `A ∈ ℝ^{m×r}`, `B ∈ ℝ^{r×n}` standard normal, `P = AB`, and
/// `g(x) = 1.71·tanh(2x/3)` applied entrywise:
///
/// ```text
/// X = g(1.2·(0.5·g(P)² − g(P) − 1)) + P
/// ```
///
/// The result has an exactly rank-`r` linear part plus a bounded nonlinear
/// distortion, so it is *not* low-rank itself.
pub fn gen_synthetic(rows: usize, cols: usize, rank: usize, rng: &mut Rng) -> Result<Matrix> {
    if rank == 0 || rank > rows.min(cols) {
        return Err(Error::config(format!(
            "rank {rank} is impossible for a {rows}x{cols} matrix"
        )));
    }
    let a = Matrix::from_vec(rows, rank, (0..rows * rank).map(|_| rng.normal()).collect());
    let b = Matrix::from_vec(rank, cols, (0..rank * cols).map(|_| rng.normal()).collect());
    let p = a.matmul(&b);
    let g = |v: f64| Activation::ScaledTanh.apply(v);
    Ok(p.map(|v| {
        let gv = g(v);
        g(1.2 * (0.5 * gv * gv - gv - 1.0)) + v
    }))
}

// ─── masking ───

/// Hides an exact number of entries: `round(rho · m · n)` positions drawn
/// uniformly without replacement (partial Fisher–Yates on the flat index
/// set). Returns the zero-filled observed matrix and the 0/1 mask.
///
/// `rho` is the fraction *removed*. Fails if nothing would remain observed.
pub fn apply_mask(x: &Matrix, rho: f64, rng: &mut Rng) -> Result<(Matrix, Matrix)> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::config(format!(
            "missing fraction must lie in [0, 1], got {rho}"
        )));
    }
    let total = x.len();
    let n_remove = (rho * total as f64).round() as usize;
    if n_remove >= total {
        return Err(Error::data(format!(
            "removing {n_remove} of {total} entries leaves nothing observed"
        )));
    }

    let mut indices: Vec<usize> = (0..total).collect();
    for i in 0..n_remove {
        let j = i + rng.gen_range_usize(total - i);
        indices.swap(i, j);
    }

    let mut mask = Matrix::filled(x.rows(), x.cols(), 1.0);
    for &idx in &indices[..n_remove] {
        mask.as_mut_slice()[idx] = 0.0;
    }
    let observed = mask.hadamard(x);
    Ok((observed, mask))
}

// ─── dense and observed CSV ───

/// Writes a dense matrix as CSV with 17-significant-digit scientific
/// notation, enough for an exact `f64` round trip.
pub fn save_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{:.16e}", m.get(i, j)).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

/// Reads a dense CSV written by [`save_matrix_csv`] (or any numeric CSV
/// with equal-length rows).
pub fn load_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::data(format!(
                        "{}: line {}: {:?} is not a number",
                        path.display(),
                        lineno + 1,
                        cell
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::data(format!(
                    "{}: line {}: {} cells, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data(format!("{}: no rows", path.display())));
    }
    Ok(Matrix::from_rows(&rows))
}

/// Writes a partially observed matrix as CSV: observed entries in full
/// precision, missing entries as empty cells.
pub fn save_observed_csv(path: &Path, x: &Matrix, mask: &Matrix) -> Result<()> {
    if x.shape() != mask.shape() {
        return Err(Error::config(format!(
            "data is {:?} but mask is {:?}",
            x.shape(),
            mask.shape()
        )));
    }
    let mut out = String::new();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            if j > 0 {
                out.push(',');
            }
            if mask.get(i, j) != 0.0 {
                write!(out, "{:.16e}", x.get(i, j)).expect("writing to a String cannot fail");
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

/// Reads a CSV with empty cells for missing entries; returns the
/// zero-filled data matrix and the 0/1 observation mask.
pub fn load_observed_csv(path: &Path) -> Result<(Matrix, Matrix)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    let mut m_rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() && lineno + 1 == text.lines().count() {
            continue;
        }
        let mut x_row = Vec::new();
        let mut m_row = Vec::new();
        for cell in line.split(',') {
            let cell = cell.trim();
            if cell.is_empty() {
                x_row.push(0.0);
                m_row.push(0.0);
            } else {
                let v = cell.parse::<f64>().map_err(|_| {
                    Error::data(format!(
                        "{}: line {}: {:?} is not a number",
                        path.display(),
                        lineno + 1,
                        cell
                    ))
                })?;
                x_row.push(v);
                m_row.push(1.0);
            }
        }
        if let Some(first) = x_rows.first() {
            if x_row.len() != first.len() {
                return Err(Error::data(format!(
                    "{}: line {}: {} cells, expected {}",
                    path.display(),
                    lineno + 1,
                    x_row.len(),
                    first.len()
                )));
            }
        }
        x_rows.push(x_row);
        m_rows.push(m_row);
    }
    if x_rows.is_empty() {
        return Err(Error::data(format!("{}: no rows", path.display())));
    }
    Ok((Matrix::from_rows(&x_rows), Matrix::from_rows(&m_rows)))
}

// ─── images ───

/// Loads an RGB image as an `h × 3w` matrix `[R | G | B]` with entries
/// scaled to `[0, 1]`.
pub fn load_image_matrix(path: &Path) -> Result<Matrix> {
    let img = image::open(path)
        .map_err(|e| Error::data(format!("cannot open image {}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut m = Matrix::zeros(h, 3 * w);
    for y in 0..h {
        for x in 0..w {
            let px = img.get_pixel(x as u32, y as u32);
            m.set(y, x, px.0[0] as f64 / 255.0);
            m.set(y, w + x, px.0[1] as f64 / 255.0);
            m.set(y, 2 * w + x, px.0[2] as f64 / 255.0);
        }
    }
    Ok(m)
}

/// Writes an `h × 3w` channel-stacked matrix back to an RGB PNG, clamping
/// to `[0, 1]` and rounding half away from zero.
pub fn save_image_matrix(path: &Path, m: &Matrix) -> Result<()> {
    if m.cols() % 3 != 0 {
        return Err(Error::config(format!(
            "image matrix must have 3w columns, got {}",
            m.cols()
        )));
    }
    let (h, w) = (m.rows(), m.cols() / 3);
    let mut img = image::RgbImage::new(w as u32, h as u32);
    let to_byte = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    for y in 0..h {
        for x in 0..w {
            img.put_pixel(
                x as u32,
                y as u32,
                image::Rgb([
                    to_byte(m.get(y, x)),
                    to_byte(m.get(y, w + x)),
                    to_byte(m.get(y, 2 * w + x)),
                ]),
            );
        }
    }
    img.save(path)
        .map_err(|e| Error::data(format!("cannot write image {}: {e}", path.display())))
}

// ─── ratings ───

/// Sparse user–item ratings with fixed catalog dimensions.
#[derive(Debug, Clone)]
pub struct RatingsTable {
    pub n_users: usize,
    pub n_items: usize,
    /// `(user, item, rating)` with 0-based indices, in input order.
    pub entries: Vec<(usize, usize, f64)>,
}

impl RatingsTable {
    /// Densifies into a zero-filled ratings matrix (users × items) and its
    /// observation mask.
    pub fn to_matrices(&self) -> (Matrix, Matrix) {
        let mut x = Matrix::zeros(self.n_users, self.n_items);
        let mut mask = Matrix::zeros(self.n_users, self.n_items);
        for &(u, i, r) in &self.entries {
            x.set(u, i, r);
            mask.set(u, i, 1.0);
        }
        (x, mask)
    }
}

/// On-disk layouts of the two supported ratings datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovieLensFormat {
    /// Tab-separated `user item rating timestamp`, 943 users × 1682 items.
    Ml100kTab,
    /// `user::item::rating::timestamp`, 6040 users × 3952 items.
    Ml1mColons,
}

impl MovieLensFormat {
    fn dims(self) -> (usize, usize) {
        match self {
            MovieLensFormat::Ml100kTab => (943, 1682),
            MovieLensFormat::Ml1mColons => (6040, 3952),
        }
    }

    fn split(self, line: &str) -> Vec<&str> {
        match self {
            MovieLensFormat::Ml100kTab => line.split('\t').collect(),
            MovieLensFormat::Ml1mColons => line.split("::").collect(),
        }
    }
}

/// Parses ratings text in the given layout.
///
/// User and item ids are 1-based in the files and converted to 0-based
/// indices. Rejects malformed lines (with their line number), ids outside
/// the catalog, and duplicate `(user, item)` pairs.
pub fn parse_movielens(text: &str, format: MovieLensFormat) -> Result<RatingsTable> {
    let (n_users, n_items) = format.dims();
    let mut entries = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = format.split(line);
        if fields.len() != 4 {
            return Err(Error::data(format!(
                "line {}: expected 4 fields, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let user: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::data(format!("line {}: bad user id {:?}", lineno + 1, fields[0])))?;
        let item: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::data(format!("line {}: bad item id {:?}", lineno + 1, fields[1])))?;
        let rating: f64 = fields[2].trim().parse().map_err(|_| {
            Error::data(format!("line {}: bad rating {:?}", lineno + 1, fields[2]))
        })?;
        if user == 0 || user > n_users || item == 0 || item > n_items {
            return Err(Error::data(format!(
                "line {}: id ({user}, {item}) outside the {n_users}x{n_items} catalog",
                lineno + 1
            )));
        }
        let key = (user - 1, item - 1);
        if !seen.insert(key) {
            return Err(Error::data(format!(
                "line {}: duplicate rating for user {user}, item {item}",
                lineno + 1
            )));
        }
        entries.push((key.0, key.1, rating));
    }
    if entries.is_empty() {
        return Err(Error::data("no ratings found"));
    }
    Ok(RatingsTable {
        n_users,
        n_items,
        entries,
    })
}

/// Splits ratings into train and held-out tables by a seeded shuffle;
/// the train side gets `round(train_fraction · n)` entries.
pub fn split_ratings(
    table: &RatingsTable,
    train_fraction: f64,
    rng: &mut Rng,
) -> Result<(RatingsTable, RatingsTable)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::config(format!(
            "train fraction must lie in [0, 1], got {train_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..table.entries.len()).collect();
    rng.shuffle(&mut order);
    let n_train = (train_fraction * table.entries.len() as f64).round() as usize;
    let take = |ids: &[usize]| RatingsTable {
        n_users: table.n_users,
        n_items: table.n_items,
        entries: ids.iter().map(|&i| table.entries[i]).collect(),
    };
    Ok((take(&order[..n_train]), take(&order[n_train..])))
}

// ─── tests ───
