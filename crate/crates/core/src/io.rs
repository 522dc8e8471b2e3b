//! CSV persistence for measurement data, density matrices and grids.
//!
//! Every file starts with one metadata line `# key=value key=value ...`
//! followed by an ordinary CSV table with a header row. Floating-point
//! values are written with the shortest representation that parses back to
//! the same bits, so a write/read cycle is lossless.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::dn_tomo::TradeoffReport;
use crate::error::{Result, TomoError};
use crate::forward::{Acquisition, NoiseModel, PhaseScanSet, RotationSetting, Runs, SpinMarginalSet};
use crate::quasiprob::{GridAxis, QuasiprobGrid, QuasiprobKind};
use crate::scalar::{CMatrix, Real, C};
use crate::specfun::HalfInt;
use crate::states::{Basis, DensityMatrix};

/// Parsed `# key=value ...` header line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metadata(pub BTreeMap<String, String>);

impl Metadata {
    pub fn new(kind: &str) -> Self {
        let mut m = Metadata::default();
        m.set("kind", kind);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.0.get(key).map(String::as_str).ok_or_else(|| TomoError::Parse(format!("missing metadata key `{key}`")))
    }

    pub fn parse<V: FromStr>(&self, key: &str) -> Result<V> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| TomoError::Parse(format!("invalid value `{raw}` for `{key}`")))
    }

    fn expect_kind(&self, kind: &str) -> Result<()> {
        let got = self.get("kind")?;
        if got != kind {
            return Err(TomoError::Parse(format!("expected a `{kind}` file, found `{got}`")));
        }
        Ok(())
    }

    fn line(&self) -> String {
        let body: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# {}\n", body.join(" "))
    }

    fn from_line(line: &str) -> Result<Self> {
        let rest = line
            .trim_end()
            .strip_prefix('#')
            .ok_or_else(|| TomoError::Parse("first line must be a `#` metadata line".into()))?;
        let mut m = Metadata::default();
        for token in rest.split_whitespace() {
            let (k, v) =
                token.split_once('=').ok_or_else(|| TomoError::Parse(format!("malformed metadata token `{token}`")))?;
            m.set(k, v);
        }
        Ok(m)
    }
}

fn write_acquisition(meta: &mut Metadata, acq: &Acquisition) {
    meta.set(
        "runs",
        match acq.runs {
            Runs::Exact => "exact".to_string(),
            Runs::Finite(n) => n.to_string(),
        },
    );
    meta.set("seed", acq.seed);
    meta.set(
        "noise",
        match acq.noise {
            NoiseModel::Multinomial => "multinomial".to_string(),
            NoiseModel::Gaussian { width } => format!("gaussian:{width}"),
        },
    );
}

fn read_acquisition(meta: &Metadata) -> Result<Acquisition> {
    let runs = match meta.get("runs")? {
        "exact" => Runs::Exact,
        _ => Runs::Finite(meta.parse("runs")?),
    };
    let noise = match meta.get("noise")? {
        "multinomial" => NoiseModel::Multinomial,
        other => {
            let width = other
                .strip_prefix("gaussian:")
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| TomoError::Parse(format!("unknown noise model `{other}`")))?;
            NoiseModel::Gaussian { width }
        }
    };
    Ok(Acquisition { runs, seed: meta.parse("seed")?, noise })
}

fn table_writer<W: Write>(mut out: W, meta: &Metadata) -> Result<csv::Writer<W>> {
    out.write_all(meta.line().as_bytes())?;
    Ok(csv::WriterBuilder::new().from_writer(out))
}

type Table = (Metadata, Vec<String>, Vec<csv::StringRecord>);

fn read_table<R: Read>(input: R) -> Result<Table> {
    let mut buf = BufReader::new(input);
    let mut first = String::new();
    buf.read_line(&mut first)?;
    let meta = Metadata::from_line(&first)?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(buf);
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((meta, header, rows))
}

fn field<V: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<V> {
    let raw = rec.get(i).ok_or_else(|| TomoError::Parse(format!("row has no column {i}")))?;
    raw.trim().parse().map_err(|_| TomoError::Parse(format!("cannot parse `{raw}` in column {i}")))
}

fn row_values<T: Real>(rec: &csv::StringRecord, skip: usize) -> Result<Vec<T>> {
    (skip..rec.len()).map(|i| field(rec, i)).collect()
}

/// Writes Case I data: one row per setting, columns `theta, phi, m=-j..=j`.
pub fn write_spin_marginals<T: Real, W: Write>(set: &SpinMarginalSet<T>, out: W) -> Result<()> {
    let mut meta = Metadata::new("spin_marginals");
    meta.set("two_j", set.j.twice());
    write_acquisition(&mut meta, &set.acquisition);
    let mut w = table_writer(out, &meta)?;
    let mut header = vec!["theta".to_string(), "phi".to_string()];
    header.extend(set.j.projections().map(|m| format!("m={m}")));
    w.write_record(&header)?;
    for (s, row) in set.settings.iter().zip(&set.probs) {
        let mut rec = vec![s.theta.to_string(), s.phi.to_string()];
        rec.extend(row.iter().map(ToString::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spin_marginals<T: Real, R: Read>(input: R) -> Result<SpinMarginalSet<T>> {
    let (meta, header, rows) = read_table(input)?;
    meta.expect_kind("spin_marginals")?;
    let j = HalfInt::from_doubled(meta.parse("two_j")?);
    if header.len() != j.dim() + 2 {
        return Err(TomoError::Parse(format!("expected {} columns for j = {j}, found {}", j.dim() + 2, header.len())));
    }
    let mut settings = Vec::with_capacity(rows.len());
    let mut probs = Vec::with_capacity(rows.len());
    for rec in &rows {
        settings.push(RotationSetting { theta: field(rec, 0)?, phi: field(rec, 1)? });
        probs.push(row_values(rec, 2)?);
    }
    Ok(SpinMarginalSet { j, settings, probs, acquisition: read_acquisition(&meta)? })
}

/// Writes Case II data: one row per phase, columns `phase, n=0..=n_count`.
pub fn write_phase_scan<T: Real, W: Write>(scan: &PhaseScanSet<T>, out: W) -> Result<()> {
    let mut meta = Metadata::new("phase_scan");
    meta.set("beta_abs", scan.beta_abs).set("eta", scan.eta).set("n_count", scan.n_count);
    meta.set("random_phase", scan.random_phase);
    write_acquisition(&mut meta, &scan.acquisition);
    let mut w = table_writer(out, &meta)?;
    let mut header = vec!["phase".to_string()];
    header.extend((0..=scan.n_count).map(|n| format!("n={n}")));
    w.write_record(&header)?;
    for (ph, row) in scan.phases.iter().zip(&scan.probs) {
        let mut rec = vec![ph.to_string()];
        rec.extend(row.iter().map(ToString::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_phase_scan<T: Real, R: Read>(input: R) -> Result<PhaseScanSet<T>> {
    let (meta, header, rows) = read_table(input)?;
    meta.expect_kind("phase_scan")?;
    let n_count: usize = meta.parse("n_count")?;
    if header.len() != n_count + 2 {
        return Err(TomoError::Parse(format!("expected {} columns, found {}", n_count + 2, header.len())));
    }
    let mut phases = Vec::with_capacity(rows.len());
    let mut probs = Vec::with_capacity(rows.len());
    for rec in &rows {
        phases.push(field(rec, 0)?);
        probs.push(row_values(rec, 1)?);
    }
    Ok(PhaseScanSet {
        beta_abs: meta.parse("beta_abs")?,
        eta: meta.parse("eta")?,
        n_count,
        phases,
        probs,
        acquisition: read_acquisition(&meta)?,
        random_phase: meta.parse("random_phase")?,
    })
}

/// Writes a density matrix as two blocks, the real part followed by the
/// imaginary part. Columns are `part, row, c0, c1, ...`.
pub fn write_density<T: Real, W: Write>(rho: &DensityMatrix<T>, out: W) -> Result<()> {
    let mut meta = Metadata::new("density_matrix");
    match rho.basis {
        Basis::Fock { n_trunc } => meta.set("basis", "fock").set("n_trunc", n_trunc),
        Basis::Spin { j } => meta.set("basis", "spin").set("two_j", j.twice()),
    };
    let mut w = table_writer(out, &meta)?;
    let d = rho.dim();
    let mut header = vec!["part".to_string(), "row".to_string()];
    header.extend((0..d).map(|c| format!("c{c}")));
    w.write_record(&header)?;
    for (part, pick) in [("re", (|z: C<T>| z.re) as fn(C<T>) -> T), ("im", |z: C<T>| z.im)] {
        for r in 0..d {
            let mut rec = vec![part.to_string(), r.to_string()];
            rec.extend((0..d).map(|c| pick(rho.entries[(r, c)]).to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_density<T: Real, R: Read>(input: R) -> Result<DensityMatrix<T>> {
    let (meta, _, rows) = read_table(input)?;
    meta.expect_kind("density_matrix")?;
    let basis = match meta.get("basis")? {
        "fock" => Basis::Fock { n_trunc: meta.parse("n_trunc")? },
        "spin" => Basis::Spin { j: HalfInt::from_doubled(meta.parse("two_j")?) },
        other => return Err(TomoError::Parse(format!("unknown basis `{other}`"))),
    };
    let d = basis.dim();
    if rows.len() != 2 * d {
        return Err(TomoError::Parse(format!("expected {} rows, found {}", 2 * d, rows.len())));
    }
    let mut entries = CMatrix::<T>::zeros(d, d);
    for (i, rec) in rows.iter().enumerate() {
        let r: usize = field(rec, 1)?;
        let vals: Vec<T> = row_values(rec, 2)?;
        if r >= d || vals.len() != d {
            return Err(TomoError::Parse(format!("malformed density row {i}")));
        }
        for (c, v) in vals.into_iter().enumerate() {
            if i < d {
                entries[(r, c)].re = v;
            } else {
                entries[(r, c)].im = v;
            }
        }
    }
    Ok(DensityMatrix::from_raw(basis, entries))
}

fn grid_meta<T: Real>(grid: &QuasiprobGrid<T>) -> Metadata {
    let mut meta = Metadata::new(grid.kind.name());
    for (i, axis) in grid.axes.iter().enumerate() {
        meta.set(&format!("axis{i}_start"), axis.start);
        meta.set(&format!("axis{i}_step"), axis.step);
        meta.set(&format!("axis{i}_count"), axis.count);
    }
    meta
}

/// Writes a grid as a matrix: the header row holds the second-axis values,
/// the first column the first-axis values.
pub fn write_grid_matrix<T: Real, W: Write>(grid: &QuasiprobGrid<T>, out: W) -> Result<()> {
    let mut w = table_writer(out, &grid_meta(grid))?;
    let [a0, a1] = grid.kind.axis_names();
    let mut header = vec![format!("{a0}\\{a1}")];
    header.extend(grid.axes[1].values().iter().map(ToString::to_string));
    w.write_record(&header)?;
    for i in 0..grid.axes[0].count {
        let mut rec = vec![grid.axes[0].value(i).to_string()];
        rec.extend(grid.values.row(i).iter().map(ToString::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a grid in long format with columns `axis0, axis1, value`.
pub fn write_grid_long<T: Real, W: Write>(grid: &QuasiprobGrid<T>, out: W) -> Result<()> {
    let mut w = table_writer(out, &grid_meta(grid))?;
    let [a0, a1] = grid.kind.axis_names();
    w.write_record([a0, a1, "value"])?;
    for i in 0..grid.axes[0].count {
        for k in 0..grid.axes[1].count {
            w.write_record([
                grid.axes[0].value(i).to_string(),
                grid.axes[1].value(k).to_string(),
                grid.values[(i, k)].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a grid written by [`write_grid_matrix`].
pub fn read_grid_matrix<T: Real, R: Read>(input: R) -> Result<QuasiprobGrid<T>> {
    let (meta, _, rows) = read_table(input)?;
    let kind = match meta.get("kind")? {
        "q_plane" => QuasiprobKind::QPlane,
        "q_sphere" => QuasiprobKind::QSphere,
        "w_plane" => QuasiprobKind::WPlane,
        other => return Err(TomoError::Parse(format!("unknown grid kind `{other}`"))),
    };
    let axis = |i: usize| -> Result<GridAxis<T>> {
        Ok(GridAxis {
            start: meta.parse(&format!("axis{i}_start"))?,
            step: meta.parse(&format!("axis{i}_step"))?,
            count: meta.parse(&format!("axis{i}_count"))?,
        })
    };
    let axes = [axis(0)?, axis(1)?];
    if rows.len() != axes[0].count {
        return Err(TomoError::Parse(format!("expected {} rows, found {}", axes[0].count, rows.len())));
    }
    let mut values = DMatrix::zeros(axes[0].count, axes[1].count);
    for (i, rec) in rows.iter().enumerate() {
        let vals: Vec<T> = row_values(rec, 1)?;
        if vals.len() != axes[1].count {
            return Err(TomoError::Parse(format!("grid row {i} has {} values", vals.len())));
        }
        values.row_mut(i).iter_mut().zip(vals).for_each(|(d, v)| *d = v);
    }
    Ok(QuasiprobGrid { kind, axes, values, imag_residue: 0.0 })
}

/// Long-format tradeoff table with columns `beta, element, std_err`.
pub fn write_tradeoff<W: Write>(report: &TradeoffReport, out: W) -> Result<()> {
    let mut meta = Metadata::new("beta_tradeoff");
    meta.set("seeds", report.seeds.len());
    let mut w = table_writer(out, &meta)?;
    w.write_record(["beta", "element", "std_err"])?;
    for e in &report.entries {
        w.write_record([e.beta.to_string(), format!("rho_{}_{}", e.row, e.col), e.std_err.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
