//! Line-oriented text format for exact series, and a directory store.
//!
//! ```text
//! sptree-series 1
//! class D
//! var x
//! trunc_x 20
//! trunc_y 40
//! y generic
//! 0 1 1/1
//! 1 1 4/1
//! ```
//!
//! `trunc_y` is `-` and `y` is a rational for series specialised in `y`; such
//! series store their coefficients with `m = 0`. Only nonzero coefficients
//! are written.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use rug::Rational;
use thiserror::Error;

use super::{BivariateEGF, Series, UnivariateSeries, Var, YPoly};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "sptree-series";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported cache format version {0}")]
    Version(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheHeader {
    pub class: String,
    pub var: Var,
    pub trunc_x: usize,
    /// `None` for series specialised in `y`.
    pub trunc_y: Option<usize>,
    /// The `y` value a univariate series was specialised at, if any.
    pub y: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CachedSeries {
    Univariate(UnivariateSeries),
    Bivariate(BivariateEGF),
}

impl CachedSeries {
    pub fn trunc(&self) -> usize {
        match self {
            CachedSeries::Univariate(s) => s.trunc(),
            CachedSeries::Bivariate(s) => s.trunc(),
        }
    }
}

pub fn write_univariate<W: Write>(mut w: W, class: &str, y: Option<&Rational>, s: &UnivariateSeries) -> io::Result<()> {
    write_header(&mut w, class, s.var(), s.trunc(), None, y)?;
    for (n, c) in s.coeffs().iter().enumerate() {
        if *c != 0 {
            writeln!(w, "{n} 0 {}/{}", c.numer(), c.denom())?;
        }
    }
    Ok(())
}

pub fn write_bivariate<W: Write>(mut w: W, class: &str, s: &BivariateEGF) -> io::Result<()> {
    write_header(&mut w, class, s.var(), s.trunc_x(), Some(s.trunc_y()), None)?;
    for (n, p) in s.coeffs().iter().enumerate() {
        for (m, c) in p.coeffs().iter().enumerate() {
            if *c != 0 {
                writeln!(w, "{n} {m} {}/{}", c.numer(), c.denom())?;
            }
        }
    }
    Ok(())
}

fn write_header<W: Write>(
    w: &mut W,
    class: &str,
    var: Var,
    trunc_x: usize,
    trunc_y: Option<usize>,
    y: Option<&Rational>,
) -> io::Result<()> {
    writeln!(w, "{MAGIC} {FORMAT_VERSION}")?;
    writeln!(w, "class {class}")?;
    writeln!(w, "var {}", var.name())?;
    writeln!(w, "trunc_x {trunc_x}")?;
    match trunc_y {
        Some(t) => writeln!(w, "trunc_y {t}")?,
        None => writeln!(w, "trunc_y -")?,
    }
    match y {
        Some(y) => writeln!(w, "y {}/{}", y.numer(), y.denom()),
        None => writeln!(w, "y generic"),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> CacheError {
    CacheError::Parse { line, msg: msg.into() }
}

fn parse_rational(line: usize, s: &str) -> Result<Rational, CacheError> {
    s.parse::<Rational>()
        .map_err(|e| parse_err(line, format!("bad rational `{s}`: {e}")))
}

fn parse_usize(line: usize, s: &str) -> Result<usize, CacheError> {
    s.parse::<usize>().map_err(|e| parse_err(line, format!("bad integer `{s}`: {e}")))
}

pub fn read_series<R: BufRead>(r: R) -> Result<(CacheHeader, CachedSeries), CacheError> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut field = |key: &str| -> Result<(usize, String), CacheError> {
        let (no, line) = lines.next().ok_or_else(|| parse_err(0, format!("missing `{key}` header")))?;
        let line = line?;
        let rest = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| parse_err(no, format!("expected `{key}`")))?;
        Ok((no, rest.trim().to_string()))
    };
    let (no, v) = field(MAGIC)?;
    let version: u32 = v.parse().map_err(|_| parse_err(no, "bad version"))?;
    if version != FORMAT_VERSION {
        return Err(CacheError::Version(version));
    }
    let (_, class) = field("class")?;
    let (no, var) = field("var")?;
    let var = match var.as_str() {
        "x" => Var::X,
        "u" => Var::U,
        other => return Err(parse_err(no, format!("unknown variable `{other}`"))),
    };
    let (no, tx) = field("trunc_x")?;
    let trunc_x = parse_usize(no, &tx)?;
    let (no, ty) = field("trunc_y")?;
    let trunc_y = if ty == "-" { None } else { Some(parse_usize(no, &ty)?) };
    let (no, y) = field("y")?;
    let y = if y == "generic" { None } else { Some(parse_rational(no, &y)?) };
    let header = CacheHeader {
        class,
        var,
        trunc_x,
        trunc_y,
        y,
    };

    let width = trunc_y.unwrap_or(0);
    let mut grid = vec![vec![Rational::new(); width + 1]; trunc_x + 1];
    for (no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(no, "expected `n m num/den`"));
        }
        let n = parse_usize(no, parts[0])?;
        let m = parse_usize(no, parts[1])?;
        if n > trunc_x || m > width {
            return Err(parse_err(no, format!("index ({n}, {m}) outside the declared truncation")));
        }
        if !parts[2].contains('/') {
            return Err(parse_err(no, "coefficient must be written as num/den"));
        }
        grid[n][m] = parse_rational(no, parts[2])?;
    }
    let series = match trunc_y {
        None => CachedSeries::Univariate(Series::from_coeffs(
            var,
            (),
            grid.into_iter().map(|mut row| row.swap_remove(0)).collect(),
        )),
        Some(t) => CachedSeries::Bivariate(Series::from_coeffs(
            var,
            t,
            grid.into_iter().map(|row| YPoly::from_coeffs(t, row)).collect(),
        )),
    };
    Ok((header, series))
}

/// Cache directory holding one file per `(class, truncation, y)` key.
#[derive(Clone, Debug)]
pub struct SeriesStore {
    dir: PathBuf,
}

impl SeriesStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SeriesStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(class: &str, trunc_x: usize, trunc_y: Option<usize>, y: Option<&Rational>) -> String {
        let ty = trunc_y.map_or("u".to_string(), |t| t.to_string());
        let y = y.map_or("generic".to_string(), |y| format!("{}_{}", y.numer(), y.denom()).replace('-', "m"));
        let class: String = class.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
        format!("{class}-{trunc_x}-{ty}-{y}.series")
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }

    pub fn load(&self, key: &str) -> Result<Option<(CacheHeader, CachedSeries)>, CacheError> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        let f = fs::File::open(path)?;
        read_series(io::BufReader::new(f)).map(Some)
    }

    /// Write through a temporary file so readers never see partial output.
    pub fn store_with(&self, key: &str, write: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>) -> Result<(), CacheError> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.path(&format!("{key}.tmp"));
        {
            let mut w = io::BufWriter::new(fs::File::create(&tmp)?);
            write(&mut w)?;
            w.flush()?;
        }
        fs::rename(tmp, self.path(key))?;
        Ok(())
    }

    pub fn remove(&self, key: &str) -> Result<(), CacheError> {
        let path = self.path(key);
        if path.exists() {
            fs::remove_file(path)?;
        }
        Ok(())
    }

    /// `(file name, size in bytes)` of every cached series.
    pub fn list(&self) -> Result<Vec<(String, u64)>, CacheError> {
        if !self.dir.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.ends_with(".series") {
                out.push((name, entry.metadata()?.len()));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Delete every cached series; returns how many were removed.
    pub fn purge(&self) -> Result<usize, CacheError> {
        let entries = self.list()?;
        for (name, _) in &entries {
            fs::remove_file(self.dir.join(name))?;
        }
        Ok(entries.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bivariate_round_trip() {
        let s = &BivariateEGF::monomial(4, 6, 2, 1, Rational::from((1, 2))) + &BivariateEGF::monomial(4, 6, 3, 3, Rational::from((-7, 3)));
        let mut buf = Vec::new();
        write_bivariate(&mut buf, "B", &s).unwrap();
        let (h, back) = read_series(&buf[..]).unwrap();
        assert_eq!(h.class, "B");
        assert_eq!(h.trunc_y, Some(6));
        assert_eq!(back, CachedSeries::Bivariate(s));
    }

    #[test]
    fn univariate_round_trip() {
        let s = UnivariateSeries::from_rationals(Var::U, vec![0.into(), (5, 24).into(), (3, 1).into()]);
        let y = Rational::from((1, 2));
        let mut buf = Vec::new();
        write_univariate(&mut buf, "G", Some(&y), &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("1 0 5/24"));
        let (h, back) = read_series(&buf[..]).unwrap();
        assert_eq!(h.y, Some(y));
        assert_eq!(back, CachedSeries::Univariate(s));
    }

    #[test]
    fn rejects_floats_and_bad_versions() {
        let text = "sptree-series 1\nclass D\nvar x\ntrunc_x 2\ntrunc_y -\ny generic\n1 0 0.5\n";
        assert!(matches!(read_series(text.as_bytes()), Err(CacheError::Parse { line: 7, .. })));
        let text = "sptree-series 9\nclass D\n";
        assert!(matches!(read_series(text.as_bytes()), Err(CacheError::Version(9))));
    }

    #[test]
    fn store_list_and_purge() {
        let dir = std::env::temp_dir().join(format!("sptree-store-{}", std::process::id()));
        let store = SeriesStore::new(&dir);
        let s = UnivariateSeries::one(Var::X, (), 3);
        let key = SeriesStore::key("C∅", 3, None, Some(&Rational::from(1)));
        store.store_with(&key, |w| write_univariate(w, "C∅", None, &s)).unwrap();
        assert_eq!(store.list().unwrap().len(), 1);
        let (_, back) = store.load(&key).unwrap().unwrap();
        assert_eq!(back, CachedSeries::Univariate(s));
        assert_eq!(store.purge().unwrap(), 1);
        assert!(store.load(&key).unwrap().is_none());
        fs::remove_dir_all(dir).ok();
    }
}
