//! Plain-text matrix dumps and directory serialization of a [`LoadedSystem`].
//!
//! A matrix file starts with a `rows,cols` line followed by one CSV line per
//! row. Values are written with Rust's shortest round-trip formatting, so a
//! reload is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conceptor::Conceptor;
use crate::diagonal::ConceptionVector;
use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::loading::Readout;
use crate::reservoir::{Reservoir, ReservoirState};
use crate::trainer::{LoadedSystem, TrainMode};

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = format!("{},{}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", m[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_csv(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(path, 1, 1, "empty matrix file"))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::parse(path, 1, 1, format!("bad `rows,cols` header: {e}")))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::parse(path, 1, 1, "header must be `rows,cols`"));
    };
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::parse(path, i + 2, 1, format!("expected {rows} rows")))?;
        let cells: Vec<&str> = if cols == 0 { Vec::new() } else { line.split(',').collect() };
        if cells.len() != cols {
            return Err(Error::parse(path, i + 2, 1, format!("expected {cols} values, found {}", cells.len())));
        }
        for (j, c) in cells.iter().enumerate() {
            m[(i, j)] = c
                .trim()
                .parse()
                .map_err(|e| Error::parse(path, i + 2, j + 1, format!("{e}")))?;
        }
    }
    Ok(m)
}

fn column(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn as_vector(m: DMatrix<f64>, path: &Path) -> Result<DVector<f64>> {
    if m.ncols() != 1 {
        return Err(Error::parse(path, 1, 1, "expected a single column"));
    }
    Ok(DVector::from_column_slice(m.as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FilterKind {
    Conceptor,
    Conception,
}

#[derive(Debug, Serialize, Deserialize)]
struct SystemManifest {
    mode: TrainMode,
    #[serde(default)]
    readout: Readout,
    filter_kind: FilterKind,
    n_neurons: usize,
    n_inputs: usize,
    n_outputs: usize,
    n_patterns: usize,
    leaking_rate: f64,
    apertures: Vec<f64>,
}

const MANIFEST: &str = "system.toml";

impl LoadedSystem {
    /// Writes the system into `dir`, creating it if needed.
    pub fn save_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let kind = match self.filters.first() {
            Some(Filter::Conceptor(_)) | None => FilterKind::Conceptor,
            Some(Filter::Conception(_)) => FilterKind::Conception,
        };
        let manifest = SystemManifest {
            mode: self.mode,
            readout: self.readout,
            filter_kind: kind,
            n_neurons: self.n_neurons(),
            n_inputs: self.reservoir.n_inputs(),
            n_outputs: self.n_outputs(),
            n_patterns: self.n_patterns(),
            leaking_rate: self.reservoir.leaking_rate,
            apertures: self.filters.iter().map(Filter::aperture).collect(),
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
        let path = dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;

        write_matrix(dir.join("w.csv"), &self.w)?;
        write_matrix(dir.join("w_out.csv"), &self.w_out)?;
        write_matrix(dir.join("w_star.csv"), &self.reservoir.w_star)?;
        write_matrix(dir.join("w_in.csv"), &self.reservoir.w_in)?;
        write_matrix(dir.join("bias.csv"), &column(&self.reservoir.bias))?;
        for (j, (f, s)) in self.filters.iter().zip(&self.start_states).enumerate() {
            let m = match f {
                Filter::Conceptor(c) => c.matrix.clone(),
                Filter::Conception(c) => column(&c.weights),
            };
            write_matrix(dir.join(format!("filter_{j}.csv")), &m)?;
            write_matrix(dir.join(format!("start_{j}.csv")), &column(&s.x))?;
        }
        Ok(())
    }

    pub fn load_from_dir(dir: impl AsRef<Path>) -> Result<LoadedSystem> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: SystemManifest =
            toml::from_str(&text).map_err(|e| Error::parse(&path, 1, 1, e.to_string()))?;
        if manifest.apertures.len() != manifest.n_patterns {
            return Err(Error::parse(&path, 1, 1, "aperture count does not match n_patterns"));
        }

        let n = manifest.n_neurons;
        let expect = |name: &str, m: &DMatrix<f64>, shape: (usize, usize)| {
            if m.shape() == shape {
                Ok(())
            } else {
                Err(Error::parse(
                    dir.join(name),
                    1,
                    1,
                    format!("expected shape {shape:?}, found {:?}", m.shape()),
                ))
            }
        };
        let load = |name: &str, shape: (usize, usize)| {
            let m = read_matrix(dir.join(name))?;
            expect(name, &m, shape)?;
            Ok::<_, Error>(m)
        };
        let w = load("w.csv", (n, n))?;
        let w_out = load("w_out.csv", (manifest.n_outputs, n))?;
        let w_star = load("w_star.csv", (n, n))?;
        let w_in = load("w_in.csv", (n, manifest.n_inputs))?;
        let bias = as_vector(load("bias.csv", (n, 1))?, &dir.join("bias.csv"))?;

        let mut filters = Vec::with_capacity(manifest.n_patterns);
        let mut start_states = Vec::with_capacity(manifest.n_patterns);
        for (j, aperture) in manifest.apertures.iter().copied().enumerate() {
            let name = format!("filter_{j}.csv");
            filters.push(match manifest.filter_kind {
                FilterKind::Conceptor => Filter::Conceptor(Conceptor {
                    matrix: load(&name, (n, n))?,
                    aperture,
                }),
                FilterKind::Conception => Filter::Conception(ConceptionVector {
                    weights: as_vector(load(&name, (n, 1))?, &dir.join(&name))?,
                    aperture,
                }),
            });
            let name = format!("start_{j}.csv");
            start_states.push(ReservoirState {
                x: as_vector(load(&name, (n, 1))?, &dir.join(&name))?,
            });
        }
        Ok(LoadedSystem {
            w,
            w_out,
            filters,
            start_states,
            reservoir: Reservoir {
                w_star,
                w_in,
                bias,
                leaking_rate: manifest.leaking_rate,
            },
            mode: manifest.mode,
            readout: manifest.readout,
        })
    }
}
