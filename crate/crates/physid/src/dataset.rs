//! Push-record datasets: the line-delimited record format, splits and
//! folds, a synthetic generator, and a CSV import adapter.
//!
//! Each line of a record file is one JSON object with the keys `id`,
//! `x_before` (`[x, y, yaw]`), `contact` (`[cx, cy]`, object frame), `dir`
//! (`[dx, dy]`, world frame), `speed`, `duration`, `x_after`, `surface` and
//! `shape`, in that order. Units are SI (m, rad, m/s, s). Floats are written
//! with 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use physid_core::sim::{simulate_push, ObjectModel, Pose, PushAction, Shape, SimConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("not enough records: {0}")]
    Insufficient(String),
    #[error("invalid record: {0}")]
    Invalid(String),
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Synthetic,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushRecord {
    pub id: String,
    pub x_before: Pose,
    pub action: PushAction,
    pub x_after: Pose,
    /// Not stored in record files; loaded records are [`Source::Imported`].
    pub source: Source,
    pub surface: String,
    pub shape: String,
}

impl PushRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, p) in [("x_before", &self.x_before), ("x_after", &self.x_after)] {
            if !p.is_finite() {
                return Err(format!("{name} is not finite"));
            }
            if p.yaw.abs() > std::f64::consts::PI + 1e-8 {
                return Err(format!("{name} yaw is outside (-pi, pi]"));
            }
        }
        self.action.validate().map_err(|e| e.to_string())
    }

    pub fn observation(&self) -> physid_core::identification::PushObservation {
        physid_core::identification::PushObservation {
            x_before: self.x_before,
            action: self.action,
            x_after: self.x_after,
        }
    }
}

/// `%.9g`: 9 significant digits, shortest of fixed or exponent notation,
/// trailing zeros removed.
pub fn format_g9(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let e = format!("{v:.8e}");
    let (mantissa, exp) = e.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let s = format!("{:.*}", (8 - exp) as usize, v);
        trim_fraction(&s).to_string()
    } else {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to the precision of the record format.
pub fn quantize(v: f64) -> f64 {
    format_g9(v).parse().expect("formatted float parses")
}

fn quantize_pose(p: &Pose) -> Pose {
    Pose {
        x: quantize(p.x),
        y: quantize(p.y),
        yaw: quantize(p.yaw),
    }
}

fn write_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format_g9(*v));
    }
    out.push(']');
}

/// One record as a single line (no trailing newline).
pub fn record_to_line(r: &PushRecord) -> String {
    let q = |s: &str| serde_json::to_string(s).expect("strings serialize");
    let mut s = String::with_capacity(256);
    let _ = write!(s, "{{\"id\":{},\"x_before\":", q(&r.id));
    write_array(&mut s, &[r.x_before.x, r.x_before.y, r.x_before.yaw]);
    s.push_str(",\"contact\":");
    write_array(&mut s, &r.action.contact);
    s.push_str(",\"dir\":");
    write_array(&mut s, &r.action.direction);
    let _ = write!(
        s,
        ",\"speed\":{},\"duration\":{},\"x_after\":",
        format_g9(r.action.speed),
        format_g9(r.action.duration)
    );
    write_array(&mut s, &[r.x_after.x, r.x_after.y, r.x_after.yaw]);
    let _ = write!(s, ",\"surface\":{},\"shape\":{}}}", q(&r.surface), q(&r.shape));
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    id: String,
    x_before: [f64; 3],
    contact: [f64; 2],
    dir: [f64; 2],
    speed: f64,
    duration: f64,
    x_after: [f64; 3],
    surface: String,
    shape: String,
}

/// Parses one record line. Poses and actions are taken verbatim (no
/// renormalization) and then validated.
pub fn parse_line(text: &str) -> std::result::Result<PushRecord, String> {
    let l: Line = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let pose = |a: [f64; 3]| Pose {
        x: a[0],
        y: a[1],
        yaw: a[2],
    };
    let r = PushRecord {
        id: l.id,
        x_before: pose(l.x_before),
        action: PushAction {
            contact: l.contact,
            direction: l.dir,
            speed: l.speed,
            duration: l.duration,
        },
        x_after: pose(l.x_after),
        source: Source::Imported,
        surface: l.surface,
        shape: l.shape,
    };
    r.validate()?;
    Ok(r)
}

/// Reads a record file. Blank lines are skipped; an empty file yields no
/// records.
pub fn load_push_records(path: &Path) -> Result<Vec<PushRecord>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_line(&line).map_err(|reason| DatasetError::Parse { line: i + 1, reason })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_push_records(path: &Path, records: &[PushRecord]) -> Result<()> {
    let mut buf = String::new();
    for r in records {
        r.validate()
            .map_err(|e| DatasetError::Invalid(format!("{}: {e}", r.id)))?;
        buf.push_str(&record_to_line(r));
        buf.push('\n');
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(buf.as_bytes()).map_err(io_err(path))
}

/// How a dataset is partitioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitSpec {
    TrainTest { train: usize, test: usize, seed: u64 },
    KFold { k: usize, seed: u64 },
}

pub enum Split<T> {
    TrainTest(Vec<T>, Vec<T>),
    Folds(Vec<Vec<T>>),
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// `train` + `test` distinct items drawn by a seeded shuffle.
pub fn train_test_split<T: Clone>(items: &[T], train: usize, test: usize, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if train == 0 || test == 0 {
        return Err(DatasetError::Insufficient(
            "train and test counts must be at least 1".into(),
        ));
    }
    if train + test > items.len() {
        return Err(DatasetError::Insufficient(format!(
            "{train} train + {test} test requested from {} records",
            items.len()
        )));
    }
    let idx = shuffled(items.len(), seed);
    let pick = |r: &[usize]| r.iter().map(|&i| items[i].clone()).collect();
    Ok((pick(&idx[..train]), pick(&idx[train..train + test])))
}

/// `k` disjoint folds covering all items, sizes differing by at most one.
pub fn k_folds<T: Clone>(items: &[T], k: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    if k < 2 {
        return Err(DatasetError::Insufficient("k must be at least 2".into()));
    }
    if k > items.len() {
        return Err(DatasetError::Insufficient(format!(
            "{k} folds requested from {} records",
            items.len()
        )));
    }
    let idx = shuffled(items.len(), seed);
    let (base, extra) = (items.len() / k, items.len() % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].iter().map(|&i| items[i].clone()).collect());
        start += len;
    }
    Ok(folds)
}

pub fn split<T: Clone>(items: &[T], spec: &SplitSpec) -> Result<Split<T>> {
    match *spec {
        SplitSpec::TrainTest { train, test, seed } => {
            train_test_split(items, train, test, seed).map(|(a, b)| Split::TrainTest(a, b))
        }
        SplitSpec::KFold { k, seed } => k_folds(items, k, seed).map(Split::Folds),
    }
}

/// `n` items drawn without replacement (all of them, shuffled, if fewer).
pub fn select<T: Clone>(items: &[T], n: usize, seed: u64) -> Vec<T> {
    shuffled(items.len(), seed)
        .into_iter()
        .take(n)
        .map(|i| items[i].clone())
        .collect()
}

/// Parameters of the random push generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_pushes: usize,
    /// Std of Gaussian noise added to observed positions (m).
    pub position_noise: f64,
    /// Std of Gaussian noise added to observed yaw (rad).
    pub yaw_noise: f64,
    pub speed: (f64, f64),
    pub duration: (f64, f64),
    /// Largest angle between push direction and contact normal (rad).
    pub max_push_angle: f64,
    /// Fraction of each face usable as contact, centred on the face.
    pub face_fraction: f64,
    /// Objects closer than this to a table edge are moved back to the
    /// centre before the next push (m).
    pub edge_margin: f64,
    pub surface: String,
    pub shape_tag: String,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_pushes: 15,
            position_noise: 0.0,
            yaw_noise: 0.0,
            speed: (0.1, 0.4),
            duration: (0.1, 0.3),
            max_push_angle: 0.35,
            face_fraction: 0.8,
            edge_margin: 0.3,
            surface: "abs".into(),
            shape_tag: "rect1".into(),
        }
    }
}

fn random_contact(shape: &Shape, frac: f64, rng: &mut ChaCha8Rng) -> [f64; 2] {
    match *shape {
        Shape::Disk { radius } => {
            let a = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            [radius * a.cos(), radius * a.sin()]
        }
        Shape::Rectangle { width, depth } => {
            let (a, b) = (0.5 * width, 0.5 * depth);
            let t = if frac > 0.0 {
                rng.random_range(-frac..=frac)
            } else {
                0.0
            };
            match rng.random_range(0..4) {
                0 => [-a, t * b],
                1 => [a, t * b],
                2 => [t * a, -b],
                _ => [t * a, b],
            }
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Random pushes of an object with parameters `theta_gt`, chained so each
/// push starts where the previous one ended. Every value is rounded to the
/// record precision before it is used, so zero-noise records reproduce
/// exactly under `theta_gt`.
pub fn generate_synthetic_dataset(
    theta_gt: &ObjectModel,
    spec: &SyntheticSpec,
    seed: u64,
    sim_cfg: &SimConfig,
) -> Result<Vec<PushRecord>> {
    if spec.n_pushes == 0 {
        return Err(DatasetError::Insufficient("n_pushes must be at least 1".into()));
    }
    if !(spec.position_noise >= 0.0 && spec.yaw_noise >= 0.0) {
        return Err(DatasetError::Invalid("noise must be non-negative".into()));
    }
    let invalid = |e: physid_core::Error| DatasetError::Invalid(e.to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos_noise = Normal::new(0.0, spec.position_noise).map_err(|e| DatasetError::Invalid(e.to_string()))?;
    let yaw_noise = Normal::new(0.0, spec.yaw_noise).map_err(|e| DatasetError::Invalid(e.to_string()))?;
    let t = &sim_cfg.table;
    let centre = Pose::new(0.5 * (t.x_min + t.x_max), 0.5 * (t.y_min + t.y_max), 0.0);
    let near_edge = |p: &Pose| {
        p.x - t.x_min < spec.edge_margin
            || t.x_max - p.x < spec.edge_margin
            || p.y - t.y_min < spec.edge_margin
            || t.y_max - p.y < spec.edge_margin
    };
    let mut pose = quantize_pose(&centre);
    let mut out = Vec::with_capacity(spec.n_pushes);
    while out.len() < spec.n_pushes {
        if near_edge(&pose) {
            pose = quantize_pose(&Pose {
                yaw: pose.yaw,
                ..centre
            });
        }
        let contact = random_contact(&theta_gt.shape, spec.face_fraction, &mut rng);
        let n = theta_gt.shape.inward_normal(contact).map_err(invalid)?;
        let angle = n[1].atan2(n[0]) + rng.random_range(-spec.max_push_angle..=spec.max_push_angle);
        let world = pose.yaw + angle;
        let action = PushAction {
            contact: contact.map(quantize),
            direction: [quantize(world.cos()), quantize(world.sin())],
            speed: quantize(uniform(&mut rng, spec.speed)),
            duration: quantize(uniform(&mut rng, spec.duration)),
        };
        let traj = simulate_push(&pose, &action, theta_gt, sim_cfg).map_err(invalid)?;
        let end = traj.final_pose();
        if traj.dropped() {
            pose = quantize_pose(&Pose { yaw: end.yaw, ..centre });
            continue;
        }
        let observed = Pose::new(
            end.x + pos_noise.sample(&mut rng),
            end.y + pos_noise.sample(&mut rng),
            end.yaw + yaw_noise.sample(&mut rng),
        );
        out.push(PushRecord {
            id: format!("syn-{:04}", out.len()),
            x_before: pose,
            action,
            x_after: quantize_pose(&observed),
            source: Source::Synthetic,
            surface: spec.surface.clone(),
            shape: spec.shape_tag.clone(),
        });
        pose = quantize_pose(&end);
    }
    Ok(out)
}

/// Row of an external planar-push table. Poses are object centre and yaw
/// before and after; the pusher contact is given in the object frame.
#[derive(Debug, Deserialize)]
struct ExternalRow {
    id: Option<String>,
    x0: f64,
    y0: f64,
    yaw0: f64,
    contact_x: f64,
    contact_y: f64,
    push_dx: f64,
    push_dy: f64,
    push_speed: f64,
    push_duration: f64,
    x1: f64,
    y1: f64,
    yaw1: f64,
}

/// Imports a CSV export of an external push dataset with the header
/// `id,x0,y0,yaw0,contact_x,contact_y,push_dx,push_dy,push_speed,push_duration,x1,y1,yaw1`
/// (`id` optional). Directions are normalized and yaws wrapped.
pub fn import_csv(path: &Path, surface: &str, shape: &str) -> Result<Vec<PushRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => DatasetError::Io {
            path: path.display().to_string(),
            source,
        },
        other => DatasetError::Parse {
            line: 1,
            reason: format!("{other:?}"),
        },
    })?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ExternalRow>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| DatasetError::Parse {
            line,
            reason: e.to_string(),
        })?;
        let action = PushAction::new(
            [row.contact_x, row.contact_y],
            [row.push_dx, row.push_dy],
            row.push_speed,
            row.push_duration,
        )
        .map_err(|e| DatasetError::Parse {
            line,
            reason: e.to_string(),
        })?;
        let rec = PushRecord {
            id: row.id.unwrap_or_else(|| format!("ext-{:04}", i)),
            x_before: Pose::new(row.x0, row.y0, row.yaw0),
            action,
            x_after: Pose::new(row.x1, row.y1, row.yaw1),
            source: Source::Imported,
            surface: surface.to_string(),
            shape: shape.to_string(),
        };
        rec.validate().map_err(|reason| DatasetError::Parse { line, reason })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (std::f64::consts::PI, "3.14159265"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (9.9999999999, "10"),
            (-1e-300, "-1e-300"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g9(v), s, "{v}");
        }
    }

    #[test]
    fn folds_cover_everything() {
        let items: Vec<usize> = (0..23).collect();
        let folds = k_folds(&items, 5, 1).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort();
        assert_eq!(all, items);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}
