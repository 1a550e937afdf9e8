use clap::{Args, ValueEnum};
use pinchlab::{AnalyticShape, ShapeDescriptor};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeKind {
    Sphere,
    Ellipsoid,
    Torus,
    Perturbed,
}

impl ShapeKind {
    pub fn default_resolution(self) -> usize {
        match self {
            ShapeKind::Torus => 64,
            _ => 4,
        }
    }
}

/// Shape descriptor flags shared by `generate` and `analyze`.
#[derive(Args, Debug, Clone, Default)]
pub struct ShapeArgs {
    #[arg(long, value_enum)]
    pub shape: Option<ShapeKind>,
    /// Sphere / perturbed-sphere radius (default 1).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Ellipsoid semi-axes (default 1, 1, 1.5).
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Torus major radius (default 2).
    #[arg(long = "R")]
    pub major: Option<f64>,
    /// Torus minor radius (default 0.5).
    #[arg(long = "r")]
    pub minor: Option<f64>,
    /// Perturbation amplitude relative to the radius (default 0).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Spherical-harmonic degree of the perturbation (default 3).
    #[arg(long)]
    pub l: Option<u32>,
    /// Spherical-harmonic order of the perturbation (default 2).
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<i32>,
    /// Subdivision level (icosphere shapes, default 4) or grid size (torus, default 64).
    #[arg(long)]
    pub res: Option<usize>,
}

impl ShapeArgs {
    pub fn descriptor(&self) -> Result<ShapeDescriptor, Failure> {
        let kind = self
            .shape
            .ok_or_else(|| Failure::input("missing --shape"))?;
        let stray: Vec<&str> = [
            (
                "--radius",
                self.radius.is_some(),
                matches!(kind, ShapeKind::Sphere | ShapeKind::Perturbed),
            ),
            ("--a", self.a.is_some(), kind == ShapeKind::Ellipsoid),
            ("--b", self.b.is_some(), kind == ShapeKind::Ellipsoid),
            ("--c", self.c.is_some(), kind == ShapeKind::Ellipsoid),
            ("--R", self.major.is_some(), kind == ShapeKind::Torus),
            ("--r", self.minor.is_some(), kind == ShapeKind::Torus),
            (
                "--delta",
                self.delta.is_some(),
                kind == ShapeKind::Perturbed,
            ),
            ("--l", self.l.is_some(), kind == ShapeKind::Perturbed),
            ("--m", self.m.is_some(), kind == ShapeKind::Perturbed),
        ]
        .into_iter()
        .filter(|&(_, given, applies)| given && !applies)
        .map(|(name, ..)| name)
        .collect();
        if !stray.is_empty() {
            return Err(Failure::validation(format!(
                "{} not applicable to --shape {}",
                stray.join(", "),
                kind.to_possible_value()
                    .expect("no skipped variants")
                    .get_name()
            )));
        }
        let shape = match kind {
            ShapeKind::Sphere => AnalyticShape::Sphere {
                radius: self.radius.unwrap_or(1.0),
            },
            ShapeKind::Ellipsoid => AnalyticShape::Ellipsoid {
                a: self.a.unwrap_or(1.0),
                b: self.b.unwrap_or(1.0),
                c: self.c.unwrap_or(1.5),
            },
            ShapeKind::Torus => AnalyticShape::Torus {
                major: self.major.unwrap_or(2.0),
                minor: self.minor.unwrap_or(0.5),
            },
            ShapeKind::Perturbed => AnalyticShape::PerturbedSphere {
                radius: self.radius.unwrap_or(1.0),
                delta: self.delta.unwrap_or(0.0),
                l: self.l.unwrap_or(3),
                m: self.m.unwrap_or(2),
            },
        };
        shape
            .validate()
            .map_err(|e| Failure::validation(e.to_string()))?;
        Ok(ShapeDescriptor {
            shape,
            resolution: self.res.unwrap_or(kind.default_resolution()),
        })
    }
}
