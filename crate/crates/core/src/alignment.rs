//! Closed-form linear maps between two sentence-vector spaces, fitted on a
//! line-aligned parallel corpus: `source * W ~= target`.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use log::warn;
use nalgebra::{Cholesky, ColPivQR, DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::format::format_g9;
use crate::{Error, Result};

pub const XMAP_MAGIC: &[u8; 4] = b"XMAP";

/// Relative pivot size below which a Gram matrix is treated as singular.
const RANK_TOL: f64 = 1e-10;

/// `M` aligned pairs of `p`-wide sentence vectors.
#[derive(Debug, Clone)]
pub struct ParallelBatch {
    source: DMatrix<f64>,
    target: DMatrix<f64>,
}

impl ParallelBatch {
    pub fn new(source: DMatrix<f64>, target: DMatrix<f64>) -> Result<Self> {
        if source.nrows() != target.nrows() {
            return Err(Error::AlignmentInput(format!(
                "source has {} rows but target has {}",
                source.nrows(),
                target.nrows()
            )));
        }
        if source.ncols() != target.ncols() {
            return Err(Error::AlignmentInput(format!(
                "source width {} differs from target width {}",
                source.ncols(),
                target.ncols()
            )));
        }
        if source.nrows() == 0 || source.ncols() == 0 {
            return Err(Error::EmptyInput("parallel batch is empty".into()));
        }
        if source.iter().chain(target.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "non-finite value in parallel batch".into(),
            ));
        }
        if source.nrows() < source.ncols() {
            warn!(
                "only {} pairs for width {}; the fit is underdetermined",
                source.nrows(),
                source.ncols()
            );
        }
        Ok(ParallelBatch { source, target })
    }

    pub fn source(&self) -> &DMatrix<f64> {
        &self.source
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn pairs(&self) -> usize {
        self.source.nrows()
    }

    pub fn width(&self) -> usize {
        self.source.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    LeastSquares,
    Procrustes,
}

impl Solver {
    pub fn id(self) -> u8 {
        match self {
            Solver::LeastSquares => 0,
            Solver::Procrustes => 1,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(Solver::LeastSquares),
            1 => Ok(Solver::Procrustes),
            other => Err(Error::Format(format!("unknown solver id {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Solver::LeastSquares => "lsq",
            Solver::Procrustes => "procrustes",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsq" | "least-squares" => Ok(Solver::LeastSquares),
            "procrustes" => Ok(Solver::Procrustes),
            other => Err(Error::Config(format!("unknown solver {other:?}"))),
        }
    }
}

/// A `p x p` map applied on the right of row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub matrix: DMatrix<f64>,
    pub solver: Solver,
    /// `||S W - T||_F / ||T||_F` on the fitting batch.
    pub fit_residual: f64,
}

impl LinearMap {
    pub fn identity(p: usize) -> Self {
        LinearMap {
            matrix: DMatrix::identity(p, p),
            solver: Solver::Procrustes,
            fit_residual: 0.0,
        }
    }

    pub fn width(&self) -> usize {
        self.matrix.nrows()
    }

    /// The reverse-direction map: transpose for Procrustes, Moore-Penrose
    /// pseudo-inverse for least squares.
    pub fn inverse(&self) -> Result<LinearMap> {
        let matrix = match self.solver {
            Solver::Procrustes => self.matrix.transpose(),
            Solver::LeastSquares => self
                .matrix
                .clone()
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::InvalidInput(e.to_string()))?,
        };
        Ok(LinearMap {
            matrix,
            solver: self.solver,
            fit_residual: f64::NAN,
        })
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let p = u32::try_from(self.width())
            .map_err(|_| Error::Format("map too wide for XMAP".into()))?;
        out.write_all(XMAP_MAGIC)?;
        out.write_u32::<LittleEndian>(p)?;
        out.write_u8(self.solver.id())?;
        out.write_f64::<LittleEndian>(self.fit_residual)?;
        for row in self.matrix.row_iter() {
            for &v in row.iter() {
                out.write_f64::<LittleEndian>(v)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut reader: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader
            .read_exact(&mut magic)
            .map_err(|_| Error::Format("truncated XMAP header".into()))?;
        if &magic != XMAP_MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}, expected XMAP")));
        }
        let p = reader.read_u32::<LittleEndian>()? as usize;
        let solver = Solver::from_id(reader.read_u8()?)?;
        let fit_residual = reader.read_f64::<LittleEndian>()?;
        let mut data = vec![0.0; p * p];
        reader.read_f64_into::<LittleEndian>(&mut data)?;
        Ok(LinearMap {
            matrix: DMatrix::from_row_slice(p, p, &data),
            solver,
            fit_residual,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    /// Human-readable dump: a `# solver=... p=... fit_residual=...` line,
    /// then the matrix rows.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# solver={} p={} fit_residual={}",
            self.solver,
            self.width(),
            format_g9(self.fit_residual)
        )?;
        for row in self.matrix.row_iter() {
            let fields: Vec<String> = row.iter().map(|v| format_g9(*v)).collect();
            writeln!(out, "{}", fields.join("\t"))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn relative_residual(source: &DMatrix<f64>, target: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let err = (source * w - target).norm();
    let scale = target.norm();
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// `argmin_W ||S W - T||_F^2 + ridge ||W||_F^2` through the normal equations.
pub fn fit_least_squares(batch: &ParallelBatch, ridge: f64) -> Result<LinearMap> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Config(format!(
            "ridge must be finite and >= 0, got {ridge}"
        )));
    }
    let s = batch.source();
    let t = batch.target();
    let p = batch.width();
    let mut gram = s.tr_mul(s);
    for i in 0..p {
        gram[(i, i)] += ridge;
    }
    let rhs = s.tr_mul(t);

    let max_diag = gram.diagonal().max();
    if max_diag <= 0.0 {
        return Err(Error::RankDeficient { rank: 0, dim: p });
    }

    let chol = Cholesky::new(gram.clone()).filter(|c| {
        let l = c.l_dirty();
        (0..p).all(|i| l[(i, i)] * l[(i, i)] > RANK_TOL * max_diag)
    });
    let matrix = match chol {
        Some(c) => c.solve(&rhs),
        None => {
            let qr = ColPivQR::new(gram);
            let r = qr.r();
            let lead = r[(0, 0)].abs();
            let rank = (0..p)
                .filter(|&i| r[(i, i)].abs() > RANK_TOL * lead)
                .count();
            if rank < p {
                return Err(Error::RankDeficient { rank, dim: p });
            }
            qr.solve(&rhs)
                .ok_or(Error::RankDeficient { rank, dim: p })?
        }
    };
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "least-squares solution is not finite".into(),
        ));
    }
    let fit_residual = relative_residual(s, t, &matrix);
    Ok(LinearMap {
        matrix,
        solver: Solver::LeastSquares,
        fit_residual,
    })
}

/// Orthogonal `W = U V^T` from the SVD `S^T T = U Sigma V^T`.
pub fn fit_procrustes(batch: &ParallelBatch) -> Result<LinearMap> {
    let s = batch.source();
    let t = batch.target();
    let cross = s.tr_mul(t);
    if cross.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite cross-covariance".into()));
    }
    let svd = SVD::try_new(cross, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::InvalidInput("SVD did not converge".into()))?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::InvalidInput("SVD factors unavailable".into())),
    };
    let matrix = u * v_t;
    let fit_residual = relative_residual(s, t, &matrix);
    Ok(LinearMap {
        matrix,
        solver: Solver::Procrustes,
        fit_residual,
    })
}

pub fn fit(batch: &ParallelBatch, solver: Solver, ridge: f64) -> Result<LinearMap> {
    match solver {
        Solver::LeastSquares => fit_least_squares(batch, ridge),
        Solver::Procrustes => fit_procrustes(batch),
    }
}

/// `vectors * map.matrix`, rows in order.
pub fn apply_map(map: &LinearMap, vectors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if vectors.ncols() != map.width() {
        return Err(Error::Dimension(format!(
            "vectors have width {} but the map expects {}",
            vectors.ncols(),
            map.width()
        )));
    }
    Ok(vectors * &map.matrix)
}

/// Subtracts the column means in place.
pub fn center_rows(m: &mut DMatrix<f64>) {
    if m.nrows() == 0 {
        return;
    }
    let mean = m.row_mean();
    for mut row in m.row_iter_mut() {
        row -= &mean;
    }
}

/// Scales every nonzero row to unit Euclidean length in place.
pub fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
}

/// Optional preprocessing applied to sentence vectors before fitting and
/// before evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocess {
    pub center: bool,
    pub normalize: bool,
}

impl Preprocess {
    pub fn apply(&self, m: &mut DMatrix<f64>) {
        if self.center {
            center_rows(m);
        }
        if self.normalize {
            normalize_rows(m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_batch() -> ParallelBatch {
        let s = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        ParallelBatch::new(s.clone(), s).unwrap()
    }

    #[test]
    fn identity_fits() {
        let b = identity_batch();
        let lsq = fit_least_squares(&b, 0.0).unwrap();
        assert_abs_diff_eq!(lsq.matrix, DMatrix::identity(2, 2), epsilon = 1e-12);
        assert_abs_diff_eq!(lsq.fit_residual, 0.0, epsilon = 1e-12);
        let pro = fit_procrustes(&b).unwrap();
        assert_abs_diff_eq!(pro.matrix, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn rank_one_source_is_rejected() {
        let s = DMatrix::from_fn(10, 3, |i, _| (i + 1) as f64);
        let t = DMatrix::from_fn(10, 3, |i, j| (i * j) as f64);
        let b = ParallelBatch::new(s, t).unwrap();
        assert!(matches!(
            fit_least_squares(&b, 0.0),
            Err(Error::RankDeficient { .. })
        ));
        assert!(fit_least_squares(&b, 0.1).is_ok());
    }

    #[test]
    fn negation_is_orthogonal_minimizer() {
        let s = DMatrix::from_fn(20, 4, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let t = -&s;
        let b = ParallelBatch::new(s.clone(), t.clone()).unwrap();
        let w = fit_procrustes(&b).unwrap();
        assert_abs_diff_eq!(w.matrix, -DMatrix::<f64>::identity(4, 4), epsilon = 1e-9);
        assert_abs_diff_eq!((&s * &w.matrix - t).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn batch_validation() {
        let a = DMatrix::<f64>::zeros(3, 2);
        let b = DMatrix::<f64>::zeros(4, 2);
        assert!(matches!(
            ParallelBatch::new(a.clone(), b),
            Err(Error::AlignmentInput(_))
        ));
        let mut c = DMatrix::<f64>::zeros(3, 2);
        c[(1, 1)] = f64::NAN;
        assert!(matches!(
            ParallelBatch::new(a, c),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn apply_map_checks_width() {
        let map = LinearMap::identity(3);
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(apply_map(&map, &x).unwrap(), x);
        assert_eq!(
            apply_map(&map, &DMatrix::zeros(4, 3)).unwrap(),
            DMatrix::<f64>::zeros(4, 3)
        );
        assert!(matches!(
            apply_map(&map, &DMatrix::zeros(2, 2)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn xmap_layout() {
        let map = LinearMap {
            matrix: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            solver: Solver::Procrustes,
            fit_residual: 0.25,
        };
        let mut buf = Vec::new();
        map.write(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 1 + 8 + 4 * 8);
        assert_eq!(&buf[..4], b"XMAP");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(buf[8], 1);
        assert_eq!(&buf[9..17], &0.25f64.to_le_bytes());
        assert_eq!(&buf[17..25], &1f64.to_le_bytes());
        assert_eq!(&buf[25..33], &2f64.to_le_bytes());
        assert_eq!(LinearMap::read(&buf[..]).unwrap(), map);

        let mut tsv = Vec::new();
        map.write_tsv(&mut tsv).unwrap();
        let text = String::from_utf8(tsv).unwrap();
        assert_eq!(
            text,
            "# solver=procrustes p=2 fit_residual=0.25\n1\t2\n3\t4\n"
        );
    }

    #[test]
    fn preprocessing() {
        let mut m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 6.0]);
        center_rows(&mut m);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[-1.0, -2.0, 1.0, 2.0]));
        let mut m = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]);
        normalize_rows(&mut m);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.6, 0.8, 0.0, 0.0]));
    }

    #[test]
    fn inverse_maps() {
        let r = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let pro = LinearMap {
            matrix: r.clone(),
            solver: Solver::Procrustes,
            fit_residual: 0.0,
        };
        assert_eq!(pro.inverse().unwrap().matrix, r.transpose());
        let lsq = LinearMap {
            matrix: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]),
            solver: Solver::LeastSquares,
            fit_residual: 0.0,
        };
        assert_abs_diff_eq!(
            lsq.inverse().unwrap().matrix,
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]),
            epsilon = 1e-12
        );
    }
}
