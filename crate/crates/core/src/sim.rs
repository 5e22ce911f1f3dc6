//! Deterministic planar pushing simulator.
//!
//! A point pusher moves at constant velocity for a fixed duration against a
//! rigid object sliding on a table with uniform pressure distribution.
//!
//! * At or below [`SimConfig::quasi_static_speed`] inertia is ignored: the
//!   object twist follows the ellipsoidal limit surface through the
//!   contact's motion cone, and the object stops when the pusher stops.
//! * Above it the object is integrated as a rigid body. The pusher tracks
//!   its commanded normal velocity with a force bounded by
//!   [`SimConfig::max_push_force`]; after release the object slides until
//!   kinetic friction brings it to rest.
//!
//! The object drops when its center leaves the table bounds.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, invalid_input};
use crate::policy_opt::PolicyParam;
use crate::Result;

/// Contact points within this distance of the boundary count as on it.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = libm::remainder(a, 2.0 * PI);
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Rectangle { width: f64, depth: f64 },
    Disk { radius: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Rectangle { width, depth } => width > 0.0 && depth > 0.0 && width.is_finite() && depth.is_finite(),
            Shape::Disk { radius } => radius > 0.0 && radius.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid_input("shape dimensions must be positive"))
        }
    }

    /// Mean distance of footprint points from the centroid. This is the
    /// ratio of maximum friction moment to maximum friction force for a
    /// uniform pressure distribution.
    pub fn mean_radius(&self) -> f64 {
        match *self {
            Shape::Disk { radius } => 2.0 * radius / 3.0,
            Shape::Rectangle { width, depth } => {
                let (a, b) = (0.5 * width, 0.5 * depth);
                let d = libm::hypot(a, b);
                let quadrant =
                    (2.0 * a * b * d + a * a * a * libm::log((b + d) / a) + b * b * b * libm::log((a + d) / b)) / 6.0;
                quadrant / (a * b)
            }
        }
    }

    /// Squared radius of gyration about the centroid.
    pub fn gyration_sq(&self) -> f64 {
        match *self {
            Shape::Disk { radius } => 0.5 * radius * radius,
            Shape::Rectangle { width, depth } => (width * width + depth * depth) / 12.0,
        }
    }

    /// Inward unit normal at a boundary point given in the object frame.
    pub fn inward_normal(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        match *self {
            Shape::Disk { radius } => {
                let r = libm::hypot(p[0], p[1]);
                if (r - radius).abs() > BOUNDARY_TOL || r == 0.0 {
                    return Err(invalid_input("contact point is not on the object boundary"));
                }
                Ok([-p[0] / r, -p[1] / r])
            }
            Shape::Rectangle { width, depth } => {
                let (a, b) = (0.5 * width, 0.5 * depth);
                let gx = (p[0].abs() - a).abs();
                let gy = (p[1].abs() - b).abs();
                let inside = p[0].abs() <= a + BOUNDARY_TOL && p[1].abs() <= b + BOUNDARY_TOL;
                if !inside || gx.min(gy) > BOUNDARY_TOL {
                    return Err(invalid_input("contact point is not on the object boundary"));
                }
                if gx <= gy {
                    Ok([-libm::copysign(1.0, p[0]), 0.0])
                } else {
                    Ok([0.0, -libm::copysign(1.0, p[1])])
                }
            }
        }
    }

    /// Boundary point hit by the ray from the centroid along `dir` (object
    /// frame).
    pub fn boundary_point(&self, dir: [f64; 2]) -> [f64; 2] {
        let n = libm::hypot(dir[0], dir[1]);
        let u = [dir[0] / n, dir[1] / n];
        match *self {
            Shape::Disk { radius } => [radius * u[0], radius * u[1]],
            Shape::Rectangle { width, depth } => {
                let tx = if u[0] != 0.0 {
                    0.5 * width / u[0].abs()
                } else {
                    f64::INFINITY
                };
                let ty = if u[1] != 0.0 {
                    0.5 * depth / u[1].abs()
                } else {
                    f64::INFINITY
                };
                let t = tx.min(ty);
                [t * u[0], t * u[1]]
            }
        }
    }

    /// Closest boundary point to an arbitrary object-frame point.
    pub fn project_to_boundary(&self, p: [f64; 2]) -> [f64; 2] {
        match *self {
            Shape::Disk { .. } => {
                if p == [0.0, 0.0] {
                    self.boundary_point([-1.0, 0.0])
                } else {
                    self.boundary_point(p)
                }
            }
            Shape::Rectangle { width, depth } => {
                let (a, b) = (0.5 * width, 0.5 * depth);
                let cx = p[0].clamp(-a, a);
                let cy = p[1].clamp(-b, b);
                if cx.abs() < a && cy.abs() < b {
                    // interior: push out through the nearest edge
                    if a - cx.abs() <= b - cy.abs() {
                        [libm::copysign(a, cx), cy]
                    } else {
                        [cx, libm::copysign(b, cy)]
                    }
                } else {
                    [cx, cy]
                }
            }
        }
    }
}

/// Identified physical parameters of an object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub mass: f64,
    pub mu_static: f64,
    pub mu_kinetic: f64,
    pub shape: Shape,
}

impl ObjectModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid_input("mass must be positive"));
        }
        if !(0.0 <= self.mu_kinetic && self.mu_kinetic <= self.mu_static && self.mu_static <= 2.0) {
            return Err(invalid_input("friction must satisfy 0 <= mu_kinetic <= mu_static <= 2"));
        }
        self.shape.validate()
    }
}

/// Planar pose; `yaw` is kept in `(−π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: wrap_angle(yaw),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.yaw.is_finite()
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    /// Object-frame vector expressed in the world frame.
    pub fn rotate(&self, v: [f64; 2]) -> [f64; 2] {
        let (s, c) = libm::sincos(self.yaw);
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }

    /// World-frame vector expressed in the object frame.
    pub fn unrotate(&self, v: [f64; 2]) -> [f64; 2] {
        let (s, c) = libm::sincos(self.yaw);
        [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
    }
}

/// A velocity-controlled push: the pusher touches `contact` (object frame,
/// on the boundary) and moves along the world-frame unit `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushAction {
    pub contact: [f64; 2],
    pub direction: [f64; 2],
    pub speed: f64,
    pub duration: f64,
}

impl PushAction {
    /// Builds an action, normalizing `direction`.
    pub fn new(contact: [f64; 2], direction: [f64; 2], speed: f64, duration: f64) -> Result<Self> {
        let n = libm::hypot(direction[0], direction[1]);
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid_input("push direction must be a non-zero vector"));
        }
        let a = Self {
            contact,
            direction: [direction[0] / n, direction[1] / n],
            speed,
            duration,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn with_angle(contact: [f64; 2], angle: f64, speed: f64, duration: f64) -> Result<Self> {
        let (s, c) = libm::sincos(angle);
        Self::new(contact, [c, s], speed, duration)
    }

    pub fn validate(&self) -> Result<()> {
        let n = libm::hypot(self.direction[0], self.direction[1]);
        if !((n - 1.0).abs() <= 1e-9) {
            return Err(invalid_input("push direction must be a unit vector"));
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return Err(invalid_input("push speed must be non-negative"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid_input("push duration must be positive"));
        }
        if !(self.contact[0].is_finite() && self.contact[1].is_finite()) {
            return Err(invalid_input("contact point must be finite"));
        }
        Ok(())
    }
}

/// Axis-aligned table surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl TableBounds {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// m/s².
    pub gravity: f64,
    pub table: TableBounds,
    /// Pusher speeds at or below this use the quasi-static model (m/s).
    pub quasi_static_speed: f64,
    /// Largest force the pusher can exert (N).
    pub max_push_force: f64,
    /// Coulomb coefficient between pusher and object.
    pub pusher_friction: f64,
    /// Speeds below this count as rest (m/s).
    pub rest_speed: f64,
    /// Hard cap on simulated time (s).
    pub max_time: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            gravity: 9.81,
            table: TableBounds {
                x_min: -1.0,
                x_max: 1.0,
                y_min: -0.75,
                y_max: 0.75,
            },
            quasi_static_speed: 0.05,
            max_push_force: 10.0,
            pusher_friction: 0.3,
            rest_speed: 1e-4,
            max_time: 20.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid_config("dt must be positive"));
        }
        if !(self.gravity > 0.0) {
            return Err(invalid_config("gravity must be positive"));
        }
        let t = &self.table;
        if !(t.x_max > t.x_min && t.y_max > t.y_min) {
            return Err(invalid_config("table bounds are degenerate"));
        }
        if !(self.quasi_static_speed >= 0.0 && self.max_push_force > 0.0 && self.pusher_friction >= 0.0) {
            return Err(invalid_config("pusher parameters must be non-negative"));
        }
        if !(self.rest_speed > 0.0 && self.max_time > 0.0) {
            return Err(invalid_config("rest_speed and max_time must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    OnTable,
    Dropped { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub t: f64,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub poses: Vec<TimedPose>,
    pub outcome: Outcome,
    /// Index of the pose at which the pusher released the object.
    pub release_index: usize,
}

impl Trajectory {
    pub fn final_pose(&self) -> Pose {
        self.poses.last().map(|p| p.pose).unwrap_or_default()
    }

    pub fn dropped(&self) -> bool {
        matches!(self.outcome, Outcome::Dropped { .. })
    }
}

/// Translation distance and absolute wrapped yaw change between the first
/// and last poses.
pub fn final_displacement(traj: &Trajectory) -> (f64, f64) {
    match (traj.poses.first(), traj.poses.last()) {
        (Some(a), Some(b)) => (a.pose.distance(&b.pose), wrap_angle(b.pose.yaw - a.pose.yaw).abs()),
        _ => (0.0, 0.0),
    }
}

#[inline]
fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Clamps a force direction into the friction cone around `n`.
fn cone_clamp(d: [f64; 2], n: [f64; 2], mu: f64) -> [f64; 2] {
    let dn = dot2(d, n);
    let t = [d[0] - dn * n[0], d[1] - dn * n[1]];
    let tn = libm::hypot(t[0], t[1]);
    if tn <= mu * dn {
        return d;
    }
    let f = [n[0] + mu * t[0] / tn, n[1] + mu * t[1] / tn];
    let fnorm = libm::hypot(f[0], f[1]);
    [f[0] / fnorm, f[1] / fnorm]
}

/// Object twist `(vx, vy, ω)` in the object frame under the ellipsoidal
/// limit surface with characteristic length `c`, for a point pusher at `p`
/// with inward normal `n` moving at `vp`. `None` when the pusher separates.
fn quasi_static_twist(p: [f64; 2], n: [f64; 2], vp: [f64; 2], c: f64, mu: f64) -> Option<[f64; 3]> {
    if dot2(vp, n) <= 0.0 {
        return None;
    }
    let c2 = c * c;
    let contact_vel = |f: [f64; 2]| {
        let w = (p[0] * f[1] - p[1] * f[0]) / c2;
        [f[0] - w * p[1], f[1] + w * p[0]]
    };
    let t = [-n[1], n[0]];
    let mut vl = contact_vel([n[0] + mu * t[0], n[1] + mu * t[1]]);
    let mut vr = contact_vel([n[0] - mu * t[0], n[1] - mu * t[1]]);
    if cross(vr, vl) < 0.0 {
        core::mem::swap(&mut vl, &mut vr);
    }
    let inside = cross(vr, vp) >= 0.0 && cross(vp, vl) >= 0.0;
    let vo = if inside {
        vp
    } else {
        let vb = if cross(vp, vl) < 0.0 { vl } else { vr };
        let k = dot2(vp, n) / dot2(vb, n);
        [k * vb[0], k * vb[1]]
    };
    let (px, py) = (p[0], p[1]);
    let den = c2 + px * px + py * py;
    let vx = ((c2 + px * px) * vo[0] + px * py * vo[1]) / den;
    let vy = (px * py * vo[0] + (c2 + py * py) * vo[1]) / den;
    let w = (px * vy - py * vx) / c2;
    Some([vx, vy, w])
}

/// Mass-independent friction decelerations and rest thresholds.
struct Friction {
    lin: f64,
    ang: f64,
    rest_v: f64,
    rest_w: f64,
}

impl Friction {
    fn new(model: &ObjectModel, cfg: &SimConfig) -> Self {
        let r = model.shape.mean_radius();
        let lin = model.mu_kinetic * cfg.gravity;
        Self {
            lin,
            ang: lin * r / model.shape.gyration_sq(),
            rest_v: cfg.rest_speed,
            rest_w: cfg.rest_speed / r,
        }
    }

    fn apply(&self, v: [f64; 2], w: f64, dt: f64) -> ([f64; 2], f64) {
        let s = libm::hypot(v[0], v[1]);
        let dv = self.lin * dt;
        let v2 = if s > dv && s > self.rest_v {
            let k = (s - dv) / s;
            [v[0] * k, v[1] * k]
        } else {
            [0.0, 0.0]
        };
        let dw = self.ang * dt;
        let w2 = if w.abs() > dw && w.abs() > self.rest_w {
            w - libm::copysign(dw, w)
        } else {
            0.0
        };
        (v2, w2)
    }
}

struct Recorder {
    poses: Vec<TimedPose>,
    t0: f64,
    dt: f64,
    step: u64,
}

impl Recorder {
    fn new(x0: Pose, dt: f64) -> Self {
        Self {
            poses: alloc::vec![TimedPose { t: 0.0, pose: x0 }],
            t0: 0.0,
            dt,
            step: 0,
        }
    }

    fn push(&mut self, pose: Pose) -> f64 {
        self.step += 1;
        let t = self.t0 + self.step as f64 * self.dt;
        self.poses.push(TimedPose { t, pose });
        t
    }

    fn finish(self, outcome: Outcome, release_index: usize) -> Trajectory {
        Trajectory {
            poses: self.poses,
            outcome,
            release_index,
        }
    }
}

fn advance(pose: Pose, v0: [f64; 2], v1: [f64; 2], w0: f64, w1: f64, dt: f64) -> Pose {
    Pose {
        x: pose.x + 0.5 * dt * (v0[0] + v1[0]),
        y: pose.y + 0.5 * dt * (v0[1] + v1[1]),
        yaw: wrap_angle(pose.yaw + 0.5 * dt * (w0 + w1)),
    }
}

fn check_inputs(x0: &Pose, model: &ObjectModel, cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    model.validate()?;
    if !x0.is_finite() {
        return Err(invalid_input("initial pose must be finite"));
    }
    if !cfg.table.contains(x0.x, x0.y) {
        return Err(invalid_input("initial pose is off the table"));
    }
    Ok(())
}

/// Simulates one push from `x0` and returns the full trajectory, including
/// the free slide after release.
pub fn simulate_push(x0: &Pose, action: &PushAction, model: &ObjectModel, cfg: &SimConfig) -> Result<Trajectory> {
    check_inputs(x0, model, cfg)?;
    action.validate()?;
    let normal = model.shape.inward_normal(action.contact)?;
    let x0 = Pose::new(x0.x, x0.y, x0.yaw);
    let steps = libm::round(action.duration / cfg.dt).max(1.0) as u64;
    let mut rec = Recorder::new(x0, cfg.dt);
    let breakaway = model.mu_static * model.mass * cfg.gravity;
    let movable = action.speed > 0.0 && cfg.max_push_force > breakaway;

    if !movable || action.speed <= cfg.quasi_static_speed {
        let c = model.shape.mean_radius();
        let mut pose = x0;
        for _ in 0..steps {
            let twist = if movable {
                let vp = pose.unrotate([action.speed * action.direction[0], action.speed * action.direction[1]]);
                quasi_static_twist(action.contact, normal, vp, c, cfg.pusher_friction)
            } else {
                None
            };
            if let Some([vx, vy, w]) = twist {
                let v = pose.rotate([vx, vy]);
                pose = Pose {
                    x: pose.x + cfg.dt * v[0],
                    y: pose.y + cfg.dt * v[1],
                    yaw: wrap_angle(pose.yaw + cfg.dt * w),
                };
            }
            let t = rec.push(pose);
            if !cfg.table.contains(pose.x, pose.y) {
                let n = rec.poses.len() - 1;
                return Ok(rec.finish(Outcome::Dropped { t }, n));
            }
        }
        let n = rec.poses.len() - 1;
        return Ok(rec.finish(Outcome::OnTable, n));
    }

    let fric = Friction::new(model, cfg);
    let inv_m = 1.0 / model.mass;
    let inv_i = 1.0 / (model.mass * model.shape.gyration_sq());
    let d = action.direction;
    let mut pose = x0;
    let mut v = [0.0, 0.0];
    let mut w = 0.0;
    for _ in 0..steps {
        let r = pose.rotate(action.contact);
        let n = pose.rotate(normal);
        let dn = dot2(d, n);
        let mut force = 0.0;
        let mut fhat = [0.0, 0.0];
        if dn > 0.0 {
            fhat = cone_clamp(d, n, cfg.pusher_friction);
            let (vf, wf) = fric.apply(v, w, cfg.dt);
            let vcn = dot2([vf[0] - wf * r[1], vf[1] + wf * r[0]], n);
            let compliance = dot2(fhat, n) * inv_m + cross(r, fhat) * cross(r, n) * inv_i;
            if compliance > 0.0 {
                force = ((action.speed * dn - vcn) / (compliance * cfg.dt)).clamp(0.0, cfg.max_push_force);
            }
        }
        let at_rest = v == [0.0, 0.0] && w == 0.0;
        let (v1, w1) = if at_rest && force <= breakaway {
            (v, w)
        } else {
            let a = force * inv_m * cfg.dt;
            let vb = [v[0] + a * fhat[0], v[1] + a * fhat[1]];
            let wb = w + force * cross(r, fhat) * inv_i * cfg.dt;
            fric.apply(vb, wb, cfg.dt)
        };
        pose = advance(pose, v, v1, w, w1, cfg.dt);
        v = v1;
        w = w1;
        let t = rec.push(pose);
        if !cfg.table.contains(pose.x, pose.y) {
            let n = rec.poses.len() - 1;
            return Ok(rec.finish(Outcome::Dropped { t }, n));
        }
    }
    let release = rec.poses.len() - 1;
    let outcome = slide(&mut rec, pose, v, w, &fric, cfg);
    Ok(rec.finish(outcome, release))
}

fn slide(rec: &mut Recorder, mut pose: Pose, mut v: [f64; 2], mut w: f64, fric: &Friction, cfg: &SimConfig) -> Outcome {
    let max_steps = libm::ceil(cfg.max_time / cfg.dt) as u64;
    let mut n = 0;
    while (v != [0.0, 0.0] || w != 0.0) && n < max_steps {
        let (v1, w1) = fric.apply(v, w, cfg.dt);
        pose = advance(pose, v, v1, w, w1, cfg.dt);
        v = v1;
        w = w1;
        n += 1;
        let t = rec.push(pose);
        if !cfg.table.contains(pose.x, pose.y) {
            return Outcome::Dropped { t };
        }
    }
    Outcome::OnTable
}

/// Free slide from an initial velocity with no pusher contact. Only the
/// kinetic friction coefficient and the shape enter, never the mass.
pub fn free_slide(
    x0: &Pose,
    velocity: [f64; 2],
    angular_velocity: f64,
    model: &ObjectModel,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    check_inputs(x0, model, cfg)?;
    if !(velocity[0].is_finite() && velocity[1].is_finite() && angular_velocity.is_finite()) {
        return Err(invalid_input("initial velocity must be finite"));
    }
    let mut rec = Recorder::new(*x0, cfg.dt);
    let fric = Friction::new(model, cfg);
    let outcome = slide(&mut rec, *x0, velocity, angular_velocity, &fric, cfg);
    Ok(rec.finish(outcome, 0))
}

/// Executes a sequence of pushes, chaining the final pose of each into the
/// next. Stops at the first drop.
pub fn rollout(x0: &Pose, pushes: &[PushAction], model: &ObjectModel, cfg: &SimConfig) -> Result<Trajectory> {
    let mut poses = alloc::vec![TimedPose { t: 0.0, pose: *x0 }];
    let mut release_index = 0;
    let mut outcome = Outcome::OnTable;
    if pushes.is_empty() {
        check_inputs(x0, model, cfg)?;
    }
    for action in pushes {
        let start = *poses.last().expect("non-empty");
        let seg = simulate_push(&start.pose, action, model, cfg)?;
        release_index = poses.len() - 1 + seg.release_index;
        poses.extend(seg.poses.iter().skip(1).map(|p| TimedPose {
            t: start.t + p.t,
            pose: p.pose,
        }));
        outcome = match seg.outcome {
            Outcome::Dropped { t } => Outcome::Dropped { t: start.t + t },
            o => o,
        };
        if matches!(outcome, Outcome::Dropped { .. }) {
            break;
        }
    }
    Ok(Trajectory {
        poses,
        outcome,
        release_index,
    })
}

/// Trajectory of an open-loop policy under `model`.
pub fn rollout_policy(x0: &Pose, policy: &PolicyParam, model: &ObjectModel, cfg: &SimConfig) -> Result<Trajectory> {
    let pushes = policy.actions()?;
    rollout(x0, &pushes, model, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> ObjectModel {
        ObjectModel {
            mass: 0.5,
            mu_static: 0.36,
            mu_kinetic: 0.3,
            shape: Shape::Disk { radius: 0.04 },
        }
    }

    fn block() -> ObjectModel {
        ObjectModel {
            mass: 0.3,
            mu_static: 0.3,
            mu_kinetic: 0.25,
            shape: Shape::Rectangle {
                width: 0.12,
                depth: 0.05,
            },
        }
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(-6.0) - (2.0 * PI - 6.0)).abs() < 1e-12);
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn rectangle_mean_radius_matches_quadrature() {
        let s = Shape::Rectangle { width: 0.3, depth: 0.1 };
        let n = 600;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -0.15 + 0.3 * (i as f64 + 0.5) / n as f64;
                let y = -0.05 + 0.1 * (j as f64 + 0.5) / n as f64;
                acc += libm::hypot(x, y);
            }
        }
        let q = acc / (n * n) as f64;
        assert!((s.mean_radius() - q).abs() < 1e-6, "{} vs {}", s.mean_radius(), q);
    }

    #[test]
    fn boundary_checks() {
        let s = Shape::Rectangle { width: 0.2, depth: 0.1 };
        assert_eq!(s.inward_normal([-0.1, 0.02]).unwrap(), [1.0, 0.0]);
        assert_eq!(s.inward_normal([0.03, 0.05]).unwrap(), [0.0, -1.0]);
        assert!(s.inward_normal([0.0, 0.0]).is_err());
        assert!(s.inward_normal([0.2, 0.0]).is_err());
        let d = Shape::Disk { radius: 0.05 };
        assert!(d.inward_normal([0.05, 0.0]).is_ok());
        assert!(d.inward_normal([0.04, 0.0]).is_err());
        assert_eq!(s.boundary_point([-1.0, 0.0]), [-0.1, 0.0]);
        assert_eq!(s.project_to_boundary([0.09, 0.01]), [0.1, 0.01]);
    }

    #[test]
    fn zero_speed_push_stays_put() {
        let x0 = Pose::new(0.1, -0.2, 0.4);
        let a = PushAction::new([-0.04, 0.0], [1.0, 0.0], 0.0, 0.3).unwrap();
        let traj = simulate_push(&x0, &a, &disk(), &SimConfig::default()).unwrap();
        assert_eq!(traj.final_pose(), x0);
        assert!(traj.poses.iter().all(|p| p.pose == x0));
    }

    #[test]
    fn centered_disk_push_translates() {
        for &speed in &[0.03, 0.4] {
            let x0 = Pose::new(0.0, 0.0, 0.0);
            let a = PushAction::new([-0.04, 0.0], [1.0, 0.0], speed, 0.3).unwrap();
            let traj = simulate_push(&x0, &a, &disk(), &SimConfig::default()).unwrap();
            let f = traj.final_pose();
            assert!(f.x > 0.0);
            assert!(f.yaw.abs() < 1e-9);
            assert!(f.y.abs() < 1e-12);
        }
    }

    #[test]
    fn quasi_static_stops_with_pusher() {
        let x0 = Pose::new(0.0, 0.0, 0.0);
        let a = PushAction::new([-0.04, 0.0], [1.0, 0.0], 0.04, 0.5).unwrap();
        let traj = simulate_push(&x0, &a, &disk(), &SimConfig::default()).unwrap();
        assert_eq!(traj.release_index, traj.poses.len() - 1);
        assert!((traj.final_pose().x - 0.02).abs() < 1e-9);
    }

    #[test]
    fn off_center_push_rotates() {
        let x0 = Pose::new(0.0, 0.0, 0.0);
        let a = PushAction::new([-0.06, 0.02], [1.0, 0.0], 0.3, 0.3).unwrap();
        let traj = simulate_push(&x0, &a, &block(), &SimConfig::default()).unwrap();
        // pushing the back face above the centroid turns the block clockwise
        assert!(traj.final_pose().yaw < -1e-3);
        let qs = PushAction { speed: 0.04, ..a };
        let traj = simulate_push(&x0, &qs, &block(), &SimConfig::default()).unwrap();
        assert!(traj.final_pose().yaw < -1e-3);
    }

    #[test]
    fn pusher_moving_away_does_nothing() {
        let x0 = Pose::new(0.0, 0.0, 0.0);
        let a = PushAction::new([-0.04, 0.0], [-1.0, 0.0], 0.5, 0.2).unwrap();
        let traj = simulate_push(&x0, &a, &disk(), &SimConfig::default()).unwrap();
        assert_eq!(traj.final_pose(), x0);
    }

    #[test]
    fn too_heavy_to_move() {
        let heavy = ObjectModel { mass: 10.0, ..disk() };
        let x0 = Pose::new(0.0, 0.0, 0.0);
        let a = PushAction::new([-0.04, 0.0], [1.0, 0.0], 0.5, 0.2).unwrap();
        let traj = simulate_push(&x0, &a, &heavy, &SimConfig::default()).unwrap();
        assert_eq!(traj.final_pose(), x0);
    }

    #[test]
    fn input_errors() {
        let x0 = Pose::new(0.0, 0.0, 0.0);
        let off = PushAction::new([-0.03, 0.0], [1.0, 0.0], 0.5, 0.2).unwrap();
        assert!(simulate_push(&x0, &off, &disk(), &SimConfig::default()).is_err());
        let a = PushAction::new([-0.04, 0.0], [1.0, 0.0], 0.5, 0.2).unwrap();
        let cfg = SimConfig {
            dt: 0.0,
            ..SimConfig::default()
        };
        assert!(matches!(
            simulate_push(&x0, &a, &disk(), &cfg),
            Err(crate::Error::InvalidConfig(_))
        ));
        let far = Pose::new(5.0, 0.0, 0.0);
        assert!(simulate_push(&far, &a, &disk(), &SimConfig::default()).is_err());
        assert!(PushAction::new([0.0, 0.0], [0.0, 0.0], 1.0, 1.0).is_err());
        assert!(PushAction::new([0.0, 0.0], [1.0, 0.0], -1.0, 1.0).is_err());
    }

    #[test]
    fn final_displacement_cases() {
        let mk = |a: Pose, b: Pose| Trajectory {
            poses: alloc::vec![TimedPose { t: 0.0, pose: a }, TimedPose { t: 1.0, pose: b }],
            outcome: Outcome::OnTable,
            release_index: 0,
        };
        let p = Pose::new(0.2, 0.1, 0.3);
        assert_eq!(final_displacement(&mk(p, p)), (0.0, 0.0));
        let (d, r) = final_displacement(&mk(Pose::new(0.0, 0.0, 0.0), Pose::new(0.3, 0.0, 0.0)));
        assert!((d - 0.3).abs() < 1e-15 && r == 0.0);
        let (_, r) = final_displacement(&mk(Pose::new(0.0, 0.0, 3.0), Pose::new(0.0, 0.0, -3.0)));
        assert!((r - 0.283_185_307_179_586_2).abs() < 1e-12);
    }

    #[test]
    fn timestamps_strictly_increase() {
        let x0 = Pose::new(0.0, 0.0, 0.0);
        let a = PushAction::new([-0.04, 0.0], [1.0, 0.0], 0.5, 0.2).unwrap();
        let traj = simulate_push(&x0, &a, &disk(), &SimConfig::default()).unwrap();
        assert_eq!(traj.poses[0].t, 0.0);
        assert!(traj.poses.windows(2).all(|w| w[1].t > w[0].t));
    }
}
