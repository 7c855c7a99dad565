//! Datasets, train/test splits and region predicates.

use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSpec;

/// A predictor column, by position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl From<usize> for ColumnRef {
    fn from(i: usize) -> Self {
        ColumnRef::Index(i)
    }
}

impl From<&str> for ColumnRef {
    fn from(s: &str) -> Self {
        ColumnRef::Name(s.to_string())
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "#{i}"),
            ColumnRef::Name(s) => f.write_str(s),
        }
    }
}

impl ColumnRef {
    pub fn resolve(&self, names: Option<&[String]>, p: usize) -> Result<usize> {
        let idx = match self {
            ColumnRef::Index(i) => *i,
            ColumnRef::Name(name) => names
                .and_then(|ns| ns.iter().position(|n| n == name))
                .ok_or_else(|| Error::InvalidConfig(format!("unknown column '{name}'")))?,
        };
        if idx >= p {
            return Err(Error::InvalidConfig(format!(
                "column {self} out of range for {p} predictors"
            )));
        }
        Ok(idx)
    }
}

/// Rows of predictors with a real response. Row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    column_names: Option<Vec<String>>,
}

impl Dataset {
    /// `x` is row-major with `p` columns.
    pub fn new(x: Vec<f64>, p: usize, y: Vec<f64>, column_names: Option<Vec<String>>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidData("need at least one predictor".into()));
        }
        if y.is_empty() {
            return Err(Error::InvalidData("need at least one row".into()));
        }
        if x.len() != y.len() * p {
            return Err(Error::InvalidData(format!(
                "{} predictor values do not fill {} rows of {} columns",
                x.len(),
                y.len(),
                p
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite predictor at row {}, column {}",
                pos / p,
                pos % p
            )));
        }
        if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite response at row {pos}")));
        }
        if let Some(names) = &column_names {
            if names.len() != p {
                return Err(Error::InvalidData(format!(
                    "{} column names for {} columns",
                    names.len(),
                    p
                )));
            }
        }
        Ok(Dataset {
            n: y.len(),
            p,
            x,
            y,
            column_names,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidData("ragged rows".into()));
        }
        if rows.len() != y.len() {
            return Err(Error::InvalidData(format!(
                "{} rows but {} responses",
                rows.len(),
                y.len()
            )));
        }
        Dataset::new(rows.concat(), p, y, None)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::InvalidData(format!(
                "{} column names for {} columns",
                names.len(),
                self.p
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.p + j]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn column_index(&self, col: &ColumnRef) -> Result<usize> {
        col.resolve(self.column_names(), self.p)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, j)).collect()
    }

    /// Copies the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(rows.len() * self.p);
        let mut y = Vec::with_capacity(rows.len());
        for &i in rows {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Dataset {
            n: rows.len(),
            p: self.p,
            x,
            y,
            column_names: self.column_names.clone(),
        }
    }

    /// Header row, then one row per observation with the response last.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = match &self.column_names {
            Some(names) => names.clone(),
            None => (0..self.p).map(|j| format!("x{j}")).collect(),
        };
        header.push("y".into());
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for i in 0..self.n {
            let rec: Vec<String> = self
                .row(i)
                .iter()
                .chain(std::iter::once(&self.y[i]))
                .map(|v| v.to_string())
                .collect();
            w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Membership test over a predictor row. Intervals are open unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    All,
    Equals { column: ColumnRef, value: f64 },
    /// `x[column] < threshold`
    Below { column: ColumnRef, threshold: f64 },
    /// `x[column] <= threshold`
    AtMost { column: ColumnRef, threshold: f64 },
    /// `lo < x[c] < hi` for every listed column.
    Box {
        columns: Vec<ColumnRef>,
        lo: f64,
        hi: f64,
    },
    Not { region: std::boxed::Box<Region> },
}

/// A [`Region`] with column references resolved to indices.
#[derive(Debug, Clone, PartialEq)]
pub enum CompiledRegion {
    All,
    Equals(usize, f64),
    Below(usize, f64),
    AtMost(usize, f64),
    Box(Vec<usize>, f64, f64),
    Not(std::boxed::Box<CompiledRegion>),
}

impl Region {
    pub fn compile(&self, names: Option<&[String]>, p: usize) -> Result<CompiledRegion> {
        Ok(match self {
            Region::All => CompiledRegion::All,
            Region::Equals { column, value } => {
                CompiledRegion::Equals(column.resolve(names, p)?, *value)
            }
            Region::Below { column, threshold } => {
                CompiledRegion::Below(column.resolve(names, p)?, *threshold)
            }
            Region::AtMost { column, threshold } => {
                CompiledRegion::AtMost(column.resolve(names, p)?, *threshold)
            }
            Region::Box { columns, lo, hi } => {
                if !(lo < hi) {
                    return Err(Error::InvalidConfig(format!("empty box ({lo}, {hi})")));
                }
                let cols = columns
                    .iter()
                    .map(|c| c.resolve(names, p))
                    .collect::<Result<Vec<_>>>()?;
                CompiledRegion::Box(cols, *lo, *hi)
            }
            Region::Not { region } => {
                CompiledRegion::Not(std::boxed::Box::new(region.compile(names, p)?))
            }
        })
    }

    pub fn compile_for(&self, data: &Dataset) -> Result<CompiledRegion> {
        self.compile(data.column_names(), data.p())
    }

    pub fn complement(self) -> Region {
        Region::Not {
            region: std::boxed::Box::new(self),
        }
    }
}

impl CompiledRegion {
    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            CompiledRegion::All => true,
            CompiledRegion::Equals(j, v) => x[*j] == *v,
            CompiledRegion::Below(j, t) => x[*j] < *t,
            CompiledRegion::AtMost(j, t) => x[*j] <= *t,
            CompiledRegion::Box(cols, lo, hi) => cols.iter().all(|&j| *lo < x[j] && x[j] < *hi),
            CompiledRegion::Not(r) => !r.contains(x),
        }
    }

    pub fn mask(&self, data: &Dataset) -> Vec<bool> {
        (0..data.n()).map(|i| self.contains(data.row(i))).collect()
    }

    /// Subset of `rows` that fall inside the region, order preserved.
    pub fn filter(&self, data: &Dataset, rows: &[usize]) -> Vec<usize> {
        rows.iter()
            .copied()
            .filter(|&i| self.contains(data.row(i)))
            .collect()
    }
}

/// One train/test partition (0-based row indices, each list sorted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.train.is_empty() || self.test.is_empty() {
            return Err(Error::InvalidPlan("train and test must be nonempty".into()));
        }
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.test) {
            if i >= n {
                return Err(Error::InvalidPlan(format!("index {i} out of range for n={n}")));
            }
            if seen[i] {
                return Err(Error::InvalidPlan(format!("index {i} repeated")));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// Draws a uniformly random training subset of size `n1` without replacement;
/// the remaining rows form the test set.
///
/// With `stratify`, rows where the mask is `true` form stratum 0 and receive
/// `floor(|S0| * n1 / n)` training slots; stratum 1 gets the remainder.
pub fn make_split(n: usize, n1: usize, stratify: Option<&[bool]>, rng: &RngSpec) -> Result<Split> {
    if n1 == 0 || n1 >= n {
        return Err(Error::InvalidPlan(format!(
            "training size {n1} must satisfy 1 <= n1 < n = {n}"
        )));
    }
    let mut r = rng.rng();
    let (mut train, mut test) = match stratify {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut r);
            let test = idx.split_off(n1);
            (idx, test)
        }
        Some(mask) => {
            if mask.len() != n {
                return Err(Error::Stratification(format!(
                    "mask has {} entries for {n} rows",
                    mask.len()
                )));
            }
            let mut s0: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            let mut s1: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
            if s0.is_empty() || s1.is_empty() {
                return Err(Error::Stratification(format!(
                    "empty stratum ({} in, {} out)",
                    s0.len(),
                    s1.len()
                )));
            }
            let t0 = s0.len() * n1 / n;
            let t1 = n1 - t0;
            if t1 > s1.len() {
                return Err(Error::Stratification(format!(
                    "stratum 1 has {} rows but needs {t1}",
                    s1.len()
                )));
            }
            s0.shuffle(&mut r);
            s1.shuffle(&mut r);
            let test0 = s0.split_off(t0);
            let test1 = s1.split_off(t1);
            s0.extend(s1);
            let mut test = test0;
            test.extend(test1);
            (s0, test)
        }
    };
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;
    use proptest::prelude::*;

    fn spec(seed: u64) -> RngSpec {
        RngSpec::new(seed).purpose(Purpose::Split)
    }

    #[test]
    fn rejects_non_finite() {
        let err = Dataset::new(vec![1.0, f64::NAN], 1, vec![0.0, 1.0], None).unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
        let err = Dataset::new(vec![1.0, 2.0], 1, vec![0.0, f64::INFINITY], None).unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(Dataset::new(vec![1.0, 2.0, 3.0], 2, vec![0.0, 1.0], None).is_err());
        assert!(Dataset::new(vec![], 1, vec![], None).is_err());
    }

    #[test]
    fn small_split_is_partition() {
        let s = make_split(4, 2, None, &spec(11)).unwrap();
        assert_eq!(s.train.len(), 2);
        assert_eq!(s.test.len(), 2);
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
    }

    #[test]
    fn stratified_proportional_rounding() {
        let mut mask = vec![false; 10];
        for i in [1, 4, 6, 9] {
            mask[i] = true;
        }
        for seed in 0..20 {
            let s = make_split(10, 5, Some(&mask), &spec(seed)).unwrap();
            let inside = s.train.iter().filter(|&&i| mask[i]).count();
            assert_eq!(inside, 2);
            assert_eq!(s.train.len(), 5);
        }
    }

    #[test]
    fn split_is_deterministic() {
        let a = make_split(50, 20, None, &spec(3)).unwrap();
        let b = make_split(50, 20, None, &spec(3)).unwrap();
        assert_eq!(a, b);
        let c = make_split(50, 20, None, &spec(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            make_split(5, 5, None, &spec(0)),
            Err(Error::InvalidPlan(_))
        ));
        assert!(matches!(
            make_split(5, 0, None, &spec(0)),
            Err(Error::InvalidPlan(_))
        ));
        let mask = vec![false; 5];
        assert!(matches!(
            make_split(5, 2, Some(&mask), &spec(0)),
            Err(Error::Stratification(_))
        ));
    }

    #[test]
    fn region_compile_by_name() {
        let d = Dataset::new(vec![1.0, 60.0, 2.0, 30.0], 2, vec![0.0, 0.0], None)
            .unwrap()
            .with_names(vec!["a".into(), "AGE".into()])
            .unwrap();
        let r = Region::Below {
            column: "AGE".into(),
            threshold: 50.0,
        }
        .compile_for(&d)
        .unwrap();
        assert_eq!(r.mask(&d), vec![false, true]);
        let missing = Region::Below {
            column: "nope".into(),
            threshold: 1.0,
        };
        assert!(missing.compile_for(&d).is_err());
    }

    proptest! {
        #[test]
        fn split_partition_property(n in 2usize..200, frac in 0.01f64..0.99, seed in any::<u64>()) {
            let n1 = ((n as f64 * frac) as usize).clamp(1, n - 1);
            let s = make_split(n, n1, None, &spec(seed)).unwrap();
            prop_assert_eq!(s.train.len() + s.test.len(), n);
            prop_assert_eq!(s.train.len(), n1);
            s.validate(n).unwrap();
        }

        #[test]
        fn stratified_split_property(n in 4usize..120, k in 1usize..100, seed in any::<u64>()) {
            let k = k.min(n - 1);
            let mask: Vec<bool> = (0..n).map(|i| i < k).collect();
            let n1 = n / 2;
            prop_assume!(n1 >= 1);
            let s = make_split(n, n1, Some(&mask), &spec(seed)).unwrap();
            s.validate(n).unwrap();
            let inside = s.train.iter().filter(|&&i| mask[i]).count();
            prop_assert_eq!(inside, k * n1 / n);
            prop_assert_eq!(s.train.len(), n1);
        }
    }
}
