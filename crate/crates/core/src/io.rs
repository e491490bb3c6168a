//! File formats: CSV tables, legacy ASCII VTK, Matrix Market.
//!
//! Floats are written with 17 significant digits so every value re-parses to
//! the same bits. All writers go through [`write_atomic`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::sparse::CsrMatrix;
use crate::C64;

/// Round-trip formatting of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: '{s}'")))
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let res = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

/// A CSV table with a header row. Cells are kept as text.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Table {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| parse_f64(&r[c])).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Table> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(String::from).collect());
        }
        Ok(Table { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Table> {
        Table::from_csv(&fs::read_to_string(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Contents of a legacy VTK unstructured grid of triangles.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub scalars: Vec<(String, Vec<f64>)>,
}

impl VtkData {
    /// Mesh only: nodes and triangles.
    pub fn from_mesh(mesh: &crate::mesh::Mesh) -> VtkData {
        VtkData {
            points: mesh.nodes.iter().map(|p| [p[0], p[1], 0.0]).collect(),
            triangles: mesh.triangles.clone(),
            scalars: Vec::new(),
        }
    }

    /// A complex dof field on all dofs of `space`, with real, imaginary and
    /// magnitude arrays. P2 triangles are written as their four sub-triangles.
    pub fn from_solution(space: &FeSpace, values: &[C64]) -> Result<VtkData> {
        if values.len() != space.ndof() {
            return Err(Error::invalid("field length differs from the dof count"));
        }
        let mut triangles = Vec::new();
        for d in &space.elem_dofs {
            if space.degree == 1 {
                triangles.push([d[0], d[1], d[2]]);
            } else {
                triangles.push([d[0], d[3], d[5]]);
                triangles.push([d[3], d[1], d[4]]);
                triangles.push([d[5], d[4], d[2]]);
                triangles.push([d[3], d[4], d[5]]);
            }
        }
        Ok(VtkData {
            points: space.dof_coords.iter().map(|p| [p[0], p[1], 0.0]).collect(),
            triangles,
            scalars: vec![
                ("real".into(), values.iter().map(|v| v.re).collect()),
                ("imag".into(), values.iter().map(|v| v.im).collect()),
                ("magnitude".into(), values.iter().map(|v| v.norm()).collect()),
            ],
        })
    }

    pub fn to_vtk(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "{}", title.lines().next().unwrap_or(""));
        let _ = writeln!(s, "ASCII");
        let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
        let _ = writeln!(s, "POINTS {} double", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]));
        }
        let nt = self.triangles.len();
        let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "CELL_TYPES {nt}");
        for _ in 0..nt {
            let _ = writeln!(s, "5");
        }
        if !self.scalars.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", self.points.len());
            for (name, vals) in &self.scalars {
                let _ = writeln!(s, "SCALARS {name} double 1");
                let _ = writeln!(s, "LOOKUP_TABLE default");
                for v in vals {
                    let _ = writeln!(s, "{}", fmt_f64(*v));
                }
            }
        }
        s
    }

    /// Parses files produced by [`VtkData::to_vtk`].
    pub fn parse(text: &str) -> Result<VtkData> {
        let mut tok = text.lines().skip(2).flat_map(str::split_whitespace);
        let mut next = || {
            tok.next()
                .ok_or_else(|| Error::Parse("unexpected end of VTK file".into()))
        };
        let expect = |want: &str, got: &str| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Parse(format!("expected '{want}', found '{got}'")))
            }
        };
        let count = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad count '{s}'")));
        let mut out = VtkData::default();
        expect("ASCII", next()?)?;
        expect("DATASET", next()?)?;
        expect("UNSTRUCTURED_GRID", next()?)?;
        expect("POINTS", next()?)?;
        let np = count(next()?)?;
        next()?;
        for _ in 0..np {
            out.points
                .push([parse_f64(next()?)?, parse_f64(next()?)?, parse_f64(next()?)?]);
        }
        expect("CELLS", next()?)?;
        let nt = count(next()?)?;
        next()?;
        for _ in 0..nt {
            expect("3", next()?)?;
            out.triangles.push([count(next()?)?, count(next()?)?, count(next()?)?]);
        }
        expect("CELL_TYPES", next()?)?;
        count(next()?)?;
        for _ in 0..nt {
            expect("5", next()?)?;
        }
        let Ok(word) = next() else {
            return Ok(out);
        };
        expect("POINT_DATA", word)?;
        count(next()?)?;
        while let Ok(word) = next() {
            expect("SCALARS", word)?;
            let name = next()?.to_string();
            next()?;
            next()?;
            expect("LOOKUP_TABLE", next()?)?;
            next()?;
            let vals = (0..np).map(|_| parse_f64(next()?)).collect::<Result<Vec<_>>>()?;
            out.scalars.push((name, vals));
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path, title: &str) -> Result<()> {
        write_atomic(path, self.to_vtk(title).as_bytes())
    }

    pub fn read(path: &Path) -> Result<VtkData> {
        VtkData::parse(&fs::read_to_string(path)?)
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.scalars.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

/// Matrix Market coordinate format, complex general.
pub fn matrix_market(a: &CsrMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate complex general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows, a.ncols, a.nnz());
    for i in 0..a.nrows {
        for (j, v) in a.row(i) {
            let _ = writeln!(s, "{} {} {} {}", i + 1, j + 1, fmt_f64(v.re), fmt_f64(v.im));
        }
    }
    s
}

pub fn parse_matrix_market(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let size: Vec<usize> = lines
        .next()
        .ok_or_else(|| Error::Parse("missing size line".into()))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad size entry '{t}'"))))
        .collect::<Result<_>>()?;
    let [nrows, ncols, nnz] = size[..] else {
        return Err(Error::Parse("size line needs three integers".into()));
    };
    let mut trip = Vec::with_capacity(nnz);
    for line in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::Parse(format!("bad entry line '{line}'")));
        }
        let idx = |t: &str| {
            t.parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| Error::Parse(format!("bad index '{t}'")))
        };
        trip.push((
            idx(f[0])? - 1,
            idx(f[1])? - 1,
            C64::new(parse_f64(f[2])?, parse_f64(f[3])?),
        ));
    }
    if trip.len() != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {}", trip.len())));
    }
    CsrMatrix::from_triplets(nrows, ncols, &trip)
}

pub fn write_matrix_market(path: &Path, a: &CsrMatrix) -> Result<()> {
    write_atomic(path, matrix_market(a).as_bytes())
}
