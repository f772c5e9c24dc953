//! The focus-stack state machine.
//!
//! A session starts with the whole object mapped onto the stage. Each
//! confirmed selection pushes a smaller focus cube and animates the object
//! up by the scale factor; ascending pops it again. The clip plane lives in
//! stage space and is untouched by scale changes.
//!
//! [`NavState`] is a plain value. Transitions mutate it in place and return
//! `Err(Rejection)` (leaving the state unchanged) when an input is not
//! allowed, so a log of inputs always replays to the same state.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    focus_to_stage, interpolate, octant_aabb, pick_child_octant, ray_aabb, ray_sphere,
    ray_triangle, Aabb, OctantIndex, Plane1D, Ray, Similarity, Vec3,
};
use crate::object_model::{clip_mesh, crop_mesh, DefectRegion, TriangleMesh};

/// The fixed world-space viewing volume.
pub const STAGE: Aabb = Aabb::UNIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NavStyle {
    Structured,
    Unstructured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DisplayMode {
    Selection,
    Everything,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("max_depth must be at least 1")]
    MaxDepth,
    #[error("animation_ms must be positive, got {0}")]
    Animation(f64),
    #[error("scale factor must exceed 1, got {0}")]
    ScaleFactor(f64),
    #[error("structured navigation subdivides into octants and requires scale factor 2, got {0}")]
    StructuredScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavConfig {
    pub style: NavStyle,
    pub display: DisplayMode,
    pub max_depth: u32,
    pub scale_factor: f64,
    pub animation_ms: f64,
}

impl NavConfig {
    pub const DEFAULT_MAX_DEPTH: u32 = 3;
    pub const DEFAULT_ANIMATION_MS: f64 = 500.0;

    pub fn new(style: NavStyle, display: DisplayMode) -> Self {
        Self {
            style,
            display,
            max_depth: Self::DEFAULT_MAX_DEPTH,
            scale_factor: 2.0,
            animation_ms: Self::DEFAULT_ANIMATION_MS,
        }
    }

    pub fn with_max_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_depth == 0 {
            return Err(ConfigError::MaxDepth);
        }
        if !(self.animation_ms > 0.0 && self.animation_ms.is_finite()) {
            return Err(ConfigError::Animation(self.animation_ms));
        }
        if !(self.scale_factor > 1.0 && self.scale_factor.is_finite()) {
            return Err(ConfigError::ScaleFactor(self.scale_factor));
        }
        if self.style == NavStyle::Structured && self.scale_factor != 2.0 {
            return Err(ConfigError::StructuredScale(self.scale_factor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameOrigin {
    Octant(OctantIndex),
    Freeform { center: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusFrame {
    #[serde(rename = "box")]
    pub bounds: Aabb,
    pub origin: FrameOrigin,
}

/// What the pointer currently selects inside the focus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AimResult {
    OctantHighlight(OctantIndex),
    /// Freeform selection cube; `anchor` is the surface point it was placed at.
    CursorCube {
        #[serde(rename = "box")]
        bounds: Aabb,
        anchor: Vec3,
    },
    Miss,
}

impl AimResult {
    pub fn is_valid(&self) -> bool {
        !matches!(self, AimResult::Miss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnimationKind {
    Descend,
    Ascend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Animation {
    pub kind: AnimationKind,
    pub from: Similarity,
    pub to: Similarity,
    pub elapsed_ms: f64,
}

/// Why an input left the state unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    #[error("an animation is running")]
    Animating,
    #[error("no valid selection under the cursor")]
    InvalidCursor,
    #[error("already at the deepest level")]
    MaxDepth,
    #[error("already at the top level")]
    TopLevel,
    #[error("input value is not finite")]
    InvalidInput,
    #[error("the clip plane has not yet cut the target")]
    GateClosed,
    #[error("a question is waiting for an answer")]
    QuestionPending,
    #[error("no question is pending")]
    NoQuestion,
}

/// Object geometry and markers needed for freeform picking.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneGeometry {
    pub object: TriangleMesh,
    pub defects: Vec<DefectRegion>,
}

#[derive(Debug, Clone)]
pub struct NavState {
    config: NavConfig,
    stack: Vec<FocusFrame>,
    transform: Similarity,
    animation: Option<Animation>,
    clip: Plane1D,
    cursor: Option<AimResult>,
    scene: Arc<SceneGeometry>,
}

impl PartialEq for NavState {
    fn eq(&self, o: &Self) -> bool {
        self.config == o.config
            && self.stack == o.stack
            && self.transform == o.transform
            && self.animation == o.animation
            && self.clip == o.clip
            && self.cursor == o.cursor
            && (Arc::ptr_eq(&self.scene, &o.scene) || self.scene == o.scene)
    }
}

/// Serializable view of a state, without the scene geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavSnapshot {
    pub depth: usize,
    pub focus: Aabb,
    pub stack: Vec<FocusFrame>,
    pub transform: Similarity,
    pub animation: Option<Animation>,
    pub clip: f64,
    pub cursor: Option<AimResult>,
}

impl NavState {
    pub fn new(
        config: NavConfig,
        object: TriangleMesh,
        defects: Vec<DefectRegion>,
    ) -> Result<Self, ConfigError> {
        Self::with_scene(config, Arc::new(SceneGeometry { object, defects }))
    }

    pub fn with_scene(config: NavConfig, scene: Arc<SceneGeometry>) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            config,
            stack: Vec::new(),
            transform: Similarity::IDENTITY,
            animation: None,
            clip: Plane1D::TOP,
            cursor: None,
            scene,
        })
    }

    pub fn config(&self) -> &NavConfig {
        &self.config
    }

    pub fn scene(&self) -> &Arc<SceneGeometry> {
        &self.scene
    }

    pub fn stack(&self) -> &[FocusFrame] {
        &self.stack
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn focus(&self) -> Aabb {
        self.stack.last().map_or(Aabb::UNIT, |f| f.bounds)
    }

    pub fn transform(&self) -> Similarity {
        self.transform
    }

    /// The transform the state settles on once any animation finishes.
    pub fn rest_transform(&self) -> Similarity {
        focus_to_stage(&self.focus(), &STAGE).expect("focus frames are non-degenerate cubes")
    }

    pub fn animation(&self) -> Option<&Animation> {
        self.animation.as_ref()
    }

    pub fn is_animating(&self) -> bool {
        self.animation.is_some()
    }

    pub fn clip(&self) -> Plane1D {
        self.clip
    }

    pub fn cursor(&self) -> Option<&AimResult> {
        self.cursor.as_ref()
    }

    pub fn snapshot(&self) -> NavSnapshot {
        NavSnapshot {
            depth: self.depth(),
            focus: self.focus(),
            stack: self.stack.clone(),
            transform: self.transform,
            animation: self.animation,
            clip: self.clip.height(),
            cursor: self.cursor,
        }
    }

    fn idle(&self) -> Result<(), Rejection> {
        if self.is_animating() {
            Err(Rejection::Animating)
        } else {
            Ok(())
        }
    }

    /// Updates the cursor from a world-space pointer ray.
    pub fn aim(&mut self, ray: &Ray) -> Result<(), Rejection> {
        self.idle()?;
        if !ray.origin.is_finite() || !ray.direction.is_finite() {
            return Err(Rejection::InvalidInput);
        }
        let local = self.transform.inverse_ray(ray);
        let focus = self.focus();
        let result = match self.config.style {
            NavStyle::Structured => {
                pick_child_octant(&local, &focus).map_or(AimResult::Miss, AimResult::OctantHighlight)
            }
            NavStyle::Unstructured => match self.first_visible_hit(&local, &focus) {
                Some(anchor) => AimResult::CursorCube {
                    bounds: self.cursor_cube(&focus, anchor),
                    anchor,
                },
                None => AimResult::Miss,
            },
        };
        self.cursor = Some(result);
        Ok(())
    }

    /// Child cube of `focus` centred as close to `anchor` as containment allows.
    fn cursor_cube(&self, focus: &Aabb, anchor: Vec3) -> Aabb {
        let side = focus.extents().x / self.config.scale_factor;
        let lo = (anchor - Vec3::splat(0.5 * side)).clamp(focus.min, focus.max - Vec3::splat(side));
        Aabb::new(lo, (lo + Vec3::splat(side)).min(focus.max))
    }

    fn is_pickable(&self, p: Vec3, focus: &Aabb) -> bool {
        focus.contains(p) && self.transform.apply(p).y <= self.clip.height()
    }

    /// First point along `ray` (object space) on geometry that is inside the
    /// focus and not hidden by the clip plane. Defect spheres count as geometry.
    fn first_visible_hit(&self, ray: &Ray, focus: &Aabb) -> Option<Vec3> {
        let span = ray_aabb(ray, focus)?;
        let (t_min, t_max) = (span.entry(), span.t_exit);
        let mut best = f64::INFINITY;
        let mesh = &self.scene.object;
        for t in 0..mesh.triangle_count() {
            let [a, b, c] = mesh.corners(t);
            if let Some(hit) = ray_triangle(ray, a, b, c) {
                if hit < best && hit >= t_min && hit <= t_max && self.is_pickable(ray.at(hit), focus) {
                    best = hit;
                }
            }
        }
        for d in &self.scene.defects {
            if let Some((t0, t1)) = ray_sphere(ray, d.center, d.radius) {
                for hit in [t0, t1] {
                    if hit >= 0.0 && hit < best && self.is_pickable(ray.at(hit), focus) {
                        best = hit;
                        break;
                    }
                }
            }
        }
        best.is_finite().then(|| ray.at(best))
    }

    /// Descends into the current selection.
    pub fn confirm(&mut self) -> Result<(), Rejection> {
        self.idle()?;
        if self.depth() >= self.config.max_depth as usize {
            return Err(Rejection::MaxDepth);
        }
        let focus = self.focus();
        let (frame, anchor) = match self.cursor {
            Some(AimResult::OctantHighlight(idx)) => (
                FocusFrame {
                    bounds: octant_aabb(&focus, idx).expect("focus is a cube"),
                    origin: FrameOrigin::Octant(idx),
                },
                None,
            ),
            Some(AimResult::CursorCube { bounds, anchor }) => (
                FocusFrame {
                    bounds,
                    origin: FrameOrigin::Freeform {
                        center: bounds.center(),
                    },
                },
                Some(anchor),
            ),
            Some(AimResult::Miss) | None => return Err(Rejection::InvalidCursor),
        };
        self.stack.push(frame);
        self.start_animation(AnimationKind::Descend);
        // a freeform cursor stays on its anchor so later levels need only a confirm
        self.cursor = match anchor {
            Some(anchor) if self.depth() < self.config.max_depth as usize => {
                Some(AimResult::CursorCube {
                    bounds: self.cursor_cube(&frame.bounds, anchor),
                    anchor,
                })
            }
            _ => None,
        };
        Ok(())
    }

    pub fn ascend(&mut self) -> Result<(), Rejection> {
        self.idle()?;
        if self.stack.pop().is_none() {
            return Err(Rejection::TopLevel);
        }
        self.start_animation(AnimationKind::Ascend);
        self.cursor = None;
        Ok(())
    }

    fn start_animation(&mut self, kind: AnimationKind) {
        self.animation = Some(Animation {
            kind,
            from: self.transform,
            to: self.rest_transform(),
            elapsed_ms: 0.0,
        });
    }

    /// Moves the clip plane (stage space), clamping into `[0, 1]`.
    pub fn set_clip_height(&mut self, h: f64) -> Result<(), Rejection> {
        if !h.is_finite() {
            return Err(Rejection::InvalidInput);
        }
        self.clip = Plane1D::new(h);
        Ok(())
    }

    /// Advances any running animation by `dt_ms`.
    pub fn tick(&mut self, dt_ms: f64) -> Result<(), Rejection> {
        if !(dt_ms >= 0.0 && dt_ms.is_finite()) {
            return Err(Rejection::InvalidInput);
        }
        let Some(anim) = self.animation.as_mut() else {
            return Ok(());
        };
        anim.elapsed_ms += dt_ms;
        if anim.elapsed_ms >= self.config.animation_ms {
            self.transform = anim.to;
            self.animation = None;
        } else {
            let u = anim.elapsed_ms / self.config.animation_ms;
            self.transform = interpolate(&anim.from, &anim.to, u);
        }
        Ok(())
    }

    /// Id of a defect whose sphere fits the focus once the deepest level is
    /// reached and the descent animation has finished.
    pub fn reveal_defect(&self, defects: &[DefectRegion]) -> Option<u32> {
        if self.depth() != self.config.max_depth as usize || self.is_animating() {
            return None;
        }
        let focus = self.focus();
        defects
            .iter()
            .find(|d| focus.contains_sphere(d.center, d.radius))
            .map(|d| d.id)
    }

    /// Geometry to draw in the current state.
    pub fn visible_set(&self, object: &TriangleMesh) -> RenderSet {
        let clip = |region: Region, tint: Option<Rgb>, mesh: &TriangleMesh| {
            let c = clip_mesh(mesh, self.clip, &self.transform);
            RenderPiece {
                region,
                tint,
                clipped: !c.hidden.is_empty(),
                mesh: c.visible,
            }
        };
        let pieces = if self.depth() == 0 {
            let colors = octant_colors();
            OctantIndex::all()
                .map(|i| {
                    let cell = octant_aabb(&Aabb::UNIT, i).expect("unit cube");
                    clip(
                        Region::Octant(i),
                        Some(colors[i.value() as usize]),
                        &crop_mesh(object, &cell),
                    )
                })
                .collect()
        } else {
            match self.config.display {
                DisplayMode::Selection => {
                    let focus = self.focus();
                    vec![clip(Region::Focus(focus), None, &crop_mesh(object, &focus))]
                }
                DisplayMode::Everything => vec![clip(Region::Whole, None, object)],
            }
        };
        RenderSet {
            transform: self.transform,
            pieces,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Rgb {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }
}

impl From<[f64; 3]> for Rgb {
    fn from(c: [f64; 3]) -> Self {
        Rgb::new(c[0], c[1], c[2])
    }
}

impl From<Rgb> for [f64; 3] {
    fn from(c: Rgb) -> Self {
        [c.r, c.g, c.b]
    }
}

/// Top-level octant tints: RGB-cube corners by index bits, with black
/// replaced by gray and white by orange.
pub fn octant_colors() -> [Rgb; 8] {
    std::array::from_fn(|i| match i {
        0 => Rgb::new(0.35, 0.35, 0.35),
        7 => Rgb::new(1.0, 0.6, 0.1),
        _ => Rgb::new(
            f64::from(i as u8 & 1),
            f64::from((i as u8 >> 1) & 1),
            f64::from((i as u8 >> 2) & 1),
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Whole,
    Octant(OctantIndex),
    Focus(Aabb),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderPiece {
    pub region: Region,
    pub tint: Option<Rgb>,
    /// The clip plane hid part of this piece.
    pub clipped: bool,
    /// Visible geometry in object space.
    pub mesh: TriangleMesh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSet {
    pub transform: Similarity,
    pub pieces: Vec<RenderPiece>,
}

impl RenderSet {
    pub fn triangle_count(&self) -> usize {
        self.pieces.iter().map(|p| p.mesh.triangle_count()).sum()
    }

    pub fn area(&self) -> f64 {
        self.pieces.iter().map(|p| p.mesh.area()).sum()
    }
}
