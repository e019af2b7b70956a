//! Matrix Market text format, densified on read.

use std::io::Write;
use std::path::Path;

use chase_core::dense::DenseMatrix;
use chase_core::{Scalar, ScalarKind};
use num_complex::Complex64;

use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    Real(DenseMatrix<f64>),
    Complex(DenseMatrix<Complex64>),
}

impl AnyMatrix {
    pub fn kind(&self) -> ScalarKind {
        match self {
            AnyMatrix::Real(_) => ScalarKind::Real64,
            AnyMatrix::Complex(_) => ScalarKind::Complex128,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            AnyMatrix::Real(a) => a.shape(),
            AnyMatrix::Complex(a) => a.shape(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmRead {
    pub matrix: AnyMatrix,
    /// Set when the densified matrix is not Hermitian to `1e−12·‖A‖_F`.
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    /// Lower triangle only: `symmetric` for real data, `hermitian` for complex.
    Hermitian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sym {
    General,
    Symmetric,
    Hermitian,
}

fn perr<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(HarnessError::Parse {
        line,
        message: message.into(),
    })
}

fn parse_header(line: &str) -> Result<(Format, Field, Sym)> {
    let toks: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" {
        return perr(1, "expected `%%MatrixMarket matrix <format> <field> <symmetry>`");
    }
    if toks[1] != "matrix" {
        return perr(1, format!("unsupported object `{}`", toks[1]));
    }
    let format = match toks[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        f => return perr(1, format!("unsupported format `{f}`")),
    };
    let field = match toks[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        f => return perr(1, format!("unsupported field `{f}`")),
    };
    let sym = match toks[4].as_str() {
        "general" => Sym::General,
        "symmetric" => Sym::Symmetric,
        "hermitian" => Sym::Hermitian,
        s => return perr(1, format!("unsupported symmetry `{s}`")),
    };
    if sym == Sym::Hermitian && field != Field::Complex {
        return perr(1, "hermitian symmetry requires complex data");
    }
    Ok((format, field, sym))
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| HarnessError::Parse {
            line,
            message: format!("bad {what} `{tok}`"),
        })
}

fn parse_value(toks: &[&str], field: Field, line: usize) -> Result<Complex64> {
    let want = if field == Field::Complex { 2 } else { 1 };
    if toks.len() != want {
        return perr(line, format!("expected {want} value token(s), found {}", toks.len()));
    }
    let re = parse_num::<f64>(toks[0], line, "value")?;
    let im = if want == 2 {
        parse_num::<f64>(toks[1], line, "value")?
    } else {
        0.0
    };
    if !re.is_finite() || !im.is_finite() {
        return perr(line, "non-finite value");
    }
    Ok(Complex64::new(re, im))
}

/// Parses Matrix Market text. Line numbers in errors are 1-based.
pub fn parse_matrix_market(text: &str) -> Result<MmRead> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let Some((_, header)) = lines.next() else {
        return perr(1, "empty file");
    };
    let (format, field, sym) = parse_header(header)?;
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let Some((size_line, size)) = body.next() else {
        return perr(text.lines().count() + 1, "missing size line");
    };
    let dims: Vec<&str> = size.split_whitespace().collect();
    let want = if format == Format::Coordinate { 3 } else { 2 };
    if dims.len() != want {
        return perr(size_line, format!("size line needs {want} integers"));
    }
    let rows: usize = parse_num(dims[0], size_line, "row count")?;
    let cols: usize = parse_num(dims[1], size_line, "column count")?;
    if sym != Sym::General && rows != cols {
        return perr(size_line, format!("{rows}×{cols} matrix declared symmetric"));
    }
    let mut a = DenseMatrix::<Complex64>::zeros(rows, cols);
    let mut put = |i: usize, j: usize, v: Complex64, line: usize| -> Result<()> {
        if sym == Sym::Hermitian && i == j && v.im != 0.0 {
            return perr(line, "hermitian diagonal entry has nonzero imaginary part");
        }
        a[(i, j)] += v;
        if i != j {
            match sym {
                Sym::General => {}
                Sym::Symmetric => a[(j, i)] += v,
                Sym::Hermitian => a[(j, i)] += v.conj(),
            }
        }
        Ok(())
    };
    let mut last_line = size_line;
    match format {
        Format::Coordinate => {
            let nnz: usize = parse_num(dims[2], size_line, "entry count")?;
            let mut seen = 0;
            for (ln, l) in body {
                last_line = ln;
                if seen == nnz {
                    return perr(ln, format!("more than the declared {nnz} entries"));
                }
                let toks: Vec<&str> = l.split_whitespace().collect();
                if toks.len() < 2 {
                    return perr(ln, "entry needs row and column indices");
                }
                let i: usize = parse_num(toks[0], ln, "row index")?;
                let j: usize = parse_num(toks[1], ln, "column index")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return perr(ln, format!("index ({i}, {j}) outside {rows}×{cols}"));
                }
                let v = parse_value(&toks[2..], field, ln)?;
                put(i - 1, j - 1, v, ln)?;
                seen += 1;
            }
            if seen < nnz {
                return perr(last_line + 1, format!("expected {nnz} entries, found {seen}"));
            }
        }
        Format::Array => {
            let slots: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| {
                    let start = if sym == Sym::General { 0 } else { j };
                    (start..rows).map(move |i| (i, j))
                })
                .collect();
            let mut it = slots.iter();
            for (ln, l) in body {
                last_line = ln;
                let Some(&(i, j)) = it.next() else {
                    return perr(ln, format!("more than the expected {} values", slots.len()));
                };
                let toks: Vec<&str> = l.split_whitespace().collect();
                put(i, j, parse_value(&toks, field, ln)?, ln)?;
            }
            if it.next().is_some() {
                return perr(last_line + 1, format!("expected {} values", slots.len()));
            }
        }
    }
    let warning = if rows == cols {
        let defect = a.hermitian_defect();
        (defect > 1e-12 * a.frobenius_norm())
            .then(|| format!("matrix is not Hermitian (defect {defect:e})"))
    } else {
        Some(format!("matrix is {rows}×{cols}, not square"))
    };
    let matrix = if field == Field::Complex {
        AnyMatrix::Complex(a)
    } else {
        AnyMatrix::Real(DenseMatrix::from_fn(rows, cols, |i, j| a[(i, j)].re))
    };
    Ok(MmRead { matrix, warning })
}

pub fn read_matrix_market(path: &Path) -> Result<MmRead> {
    parse_matrix_market(&std::fs::read_to_string(path)?)
}

/// Writes coordinate format with 17 significant digits.
pub fn write_matrix_market<T: Scalar, W: Write>(
    mut w: W,
    a: &DenseMatrix<T>,
    symmetry: Symmetry,
) -> Result<()> {
    let complex = T::KIND == ScalarKind::Complex128;
    let field = if complex { "complex" } else { "real" };
    let sym = match (symmetry, complex) {
        (Symmetry::General, _) => "general",
        (Symmetry::Hermitian, false) => "symmetric",
        (Symmetry::Hermitian, true) => "hermitian",
    };
    if symmetry == Symmetry::Hermitian && a.rows() != a.cols() {
        return Err(HarnessError::Contract(format!(
            "{}×{} matrix written as {sym}",
            a.rows(),
            a.cols()
        )));
    }
    let entries: Vec<(usize, usize)> = (0..a.cols())
        .flat_map(|j| {
            let start = if symmetry == Symmetry::General { 0 } else { j };
            (start..a.rows()).map(move |i| (i, j))
        })
        .filter(|&(i, j)| a[(i, j)] != T::zero())
        .collect();
    let mut out = String::new();
    out.push_str(&format!("%%MatrixMarket matrix coordinate {field} {sym}\n"));
    out.push_str(&format!("{} {} {}\n", a.rows(), a.cols(), entries.len()));
    for (i, j) in entries {
        let v = a[(i, j)];
        if complex {
            out.push_str(&format!("{} {} {:.16e} {:.16e}\n", i + 1, j + 1, v.re(), v.im()));
        } else {
            out.push_str(&format!("{} {} {:.16e}\n", i + 1, j + 1, v.re()));
        }
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}
