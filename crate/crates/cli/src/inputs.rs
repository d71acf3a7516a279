//! Observable, state and channel specifications.
//!
//! Matrix files hold one row per line with whitespace-separated entries,
//! each `re` or `re:im`. Kraus files list operators as such blocks separated
//! by blank lines. `#` starts a comment.

use std::path::Path;

use qldp::channels::{depolarizing, QuantumChannel};
use qldp::pauli::{decompose_auto, PauliDecomposition, PauliLabel};
use qldp::qops::c;
use qldp::{CMatrix, DensityMatrix, HermitianOperator};

use crate::config::parse_real;
use crate::error::CliError;
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct Observable {
    pub operator: HermitianOperator,
    pub decomposition: PauliDecomposition,
}

impl Observable {
    pub fn num_qubits(&self) -> usize {
        self.decomposition.num_qubits()
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn gap(&self) -> f64 {
        self.decomposition.lambda_max() - self.decomposition.lambda_min()
    }
}

/// `Z`, `ZZ:0.5, XI:-1` (coefficient defaults to 1) or `file PATH`.
pub fn parse_observable(spec: &str) -> Result<Observable, CliError> {
    let spec = spec.trim();
    if let Some(path) = spec.strip_prefix("file ") {
        let m = read_matrix_file(Path::new(path.trim()))?;
        let operator = HermitianOperator::new(m)?;
        let decomposition = decompose_auto(&operator)?;
        return Ok(Observable { operator, decomposition });
    }
    let mut terms = Vec::new();
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (label, coef) = match tok.split_once(':') {
            Some((l, v)) => (l.trim(), parse_real(v).map_err(|m| CliError::Usage(format!("observable term '{tok}': {m}")))?),
            None => (tok, 1.0),
        };
        let label: PauliLabel = label
            .parse()
            .map_err(|e| CliError::Usage(format!("observable term '{tok}': {e}")))?;
        terms.push((label, coef));
    }
    let Some(first) = terms.first() else {
        return Err(CliError::Usage("empty observable".into()));
    };
    let m = first.0.num_qubits();
    let decomposition = PauliDecomposition::from_terms(m, &terms)?;
    Ok(Observable {
        operator: decomposition.reconstruct(),
        decomposition,
    })
}

/// `zero`, `one`, `plus`, `minus`, `mixed`, `basis K`, `diag p0,p1,...` or
/// `file PATH`, at dimension `d`.
pub fn parse_state(spec: &str, d: usize) -> Result<DensityMatrix, CliError> {
    let spec = spec.trim();
    let (head, rest) = spec.split_once(' ').map(|(h, r)| (h, r.trim())).unwrap_or((spec, ""));
    let uniform_phase = |sign: f64| {
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let s = if (i + j) % 2 == 1 { sign } else { 1.0 };
                m[(i, j)] = c(s / d as f64);
            }
        }
        DensityMatrix::new(m)
    };
    let rho = match head {
        "zero" => DensityMatrix::basis_state(d, 0),
        "one" => DensityMatrix::basis_state(d, d - 1),
        "plus" => uniform_phase(1.0)?,
        "minus" => uniform_phase(-1.0)?,
        "mixed" => DensityMatrix::maximally_mixed(d),
        "basis" => {
            let k: usize = rest
                .parse()
                .map_err(|_| CliError::Usage(format!("state 'basis {rest}': expected an index")))?;
            if k >= d {
                return Err(CliError::Usage(format!("basis index {k} out of range for dimension {d}")));
            }
            DensityMatrix::basis_state(d, k)
        }
        "diag" => {
            let probs = rest
                .split(',')
                .map(parse_real)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|m| CliError::Usage(format!("state diag: {m}")))?;
            DensityMatrix::diagonal(&probs)?
        }
        "file" => DensityMatrix::new(read_matrix_file(Path::new(rest))?)?,
        _ => return Err(CliError::Usage(format!("unknown state '{spec}'"))),
    };
    if rho.dim() != d {
        return Err(CliError::Usage(format!("state has dimension {}, observable needs {d}", rho.dim())));
    }
    Ok(rho)
}

/// `depolarizing D P` or `kraus PATH`.
pub fn parse_channel(spec: &str) -> Result<QuantumChannel, CliError> {
    let parts: Vec<&str> = spec.split_whitespace().collect();
    match parts.as_slice() {
        ["depolarizing", d, p] => {
            let d: usize = d
                .parse()
                .map_err(|_| CliError::Usage(format!("depolarizing dimension '{d}' is not an integer")))?;
            let p = parse_real(p).map_err(|m| CliError::Usage(format!("depolarizing parameter: {m}")))?;
            Ok(depolarizing(d, p)?)
        }
        ["kraus", path] => read_kraus_file(Path::new(path)),
        _ => Err(CliError::Usage(format!(
            "channel '{spec}' must be 'depolarizing D P' or 'kraus PATH'"
        ))),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_entry(tok: &str) -> Option<Complex64> {
    let (re, im) = match tok.split_once(':') {
        Some((r, i)) => (r.parse().ok()?, i.parse().ok()?),
        None => (tok.parse().ok()?, 0.0),
    };
    let z = Complex64::new(re, im);
    (z.re.is_finite() && z.im.is_finite()).then_some(z)
}

/// Matrices as blocks of rows; every block must be rectangular.
pub fn parse_matrix_blocks(text: &str) -> Result<Vec<CMatrix>, CliError> {
    let mut blocks = Vec::new();
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut block_start = 0;
    let flush = |rows: &mut Vec<Vec<Complex64>>, blocks: &mut Vec<CMatrix>| {
        if !rows.is_empty() {
            let (r, cols) = (rows.len(), rows[0].len());
            blocks.push(CMatrix::from_fn(r, cols, |i, j| rows[i][j]));
            rows.clear();
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            flush(&mut rows, &mut blocks);
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                parse_entry(t).ok_or_else(|| CliError::Parse {
                    line: lineno,
                    message: format!("bad matrix entry '{t}' (expected re or re:im)"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if rows.is_empty() {
            block_start = lineno;
        } else if row.len() != rows[0].len() {
            return Err(CliError::Parse {
                line: lineno,
                message: format!(
                    "row has {} entries, the block starting at line {block_start} has {}",
                    row.len(),
                    rows[0].len()
                ),
            });
        }
        rows.push(row);
    }
    flush(&mut rows, &mut blocks);
    Ok(blocks)
}

pub fn read_matrix_file(path: &Path) -> Result<CMatrix, CliError> {
    let mut blocks = parse_matrix_blocks(&read_text(path)?)?;
    match blocks.len() {
        1 => Ok(blocks.pop().expect("one block")),
        n => Err(CliError::Usage(format!("{} holds {n} matrices, expected one", path.display()))),
    }
}

pub fn parse_kraus(text: &str) -> Result<QuantumChannel, CliError> {
    let blocks = parse_matrix_blocks(text)?;
    let Some(first) = blocks.first() else {
        return Err(CliError::Parse {
            line: text.lines().count().max(1),
            message: "no Kraus operators".into(),
        });
    };
    let (dout, din) = (first.nrows(), first.ncols());
    Ok(QuantumChannel::from_kraus(din, dout, blocks)?)
}

pub fn read_kraus_file(path: &Path) -> Result<QuantumChannel, CliError> {
    parse_kraus(&read_text(path)?)
}
