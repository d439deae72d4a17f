//! Run configuration: an optional JSON file, then command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tkahler::kahler::Spacing;
use tkahler::sphere2::S2FamilyParams;

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `sphere:N`, `su_so:N` or `custom:<path>`.
    #[serde(default)]
    pub space: Option<String>,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    /// Parameters of the two-sphere family; only valid on `sphere:2`.
    #[serde(default)]
    pub s2: Option<S2FamilyParams>,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub z_h: Option<Vec<f64>>,
    #[serde(default)]
    pub c_k: Option<Vec<f64>>,
    #[serde(default)]
    pub c_m: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `f = 1/2 (x - center)^T q (x - center)`.
    Quadratic {
        q: Vec<Vec<f64>>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// Rank one: `f' = scale * sinh x`.
    Sinh { scale: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { min: 1e-2, max: 3.0, count: 64, spacing: Spacing::Log }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative deviation allowed in `det w`.
    pub det_constancy: f64,
    /// Relative deviation allowed in `|S|`.
    pub s_constancy: f64,
    /// Largest finite-difference Ricci entry.
    pub ricci: f64,
    /// Largest residual of `d omega`.
    pub closedness: f64,
    pub eguchi_hanson: f64,
    /// Allowed `|ratio - 1|` at the end of the completeness profile.
    pub asymptotic_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            det_constancy: 1e-10,
            s_constancy: 1e-8,
            ricci: 1e-4,
            closedness: 1e-7,
            eguchi_hanson: 1e-10,
            asymptotic_ratio: 1e-2,
        }
    }
}

/// Values given on the command line; `None` leaves the config untouched.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub space: Option<String>,
    pub c: Option<f64>,
    pub c1: Option<f64>,
    pub c_z: Option<f64>,
    pub c_y: Option<f64>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_count: Option<usize>,
    pub spacing: Option<Spacing>,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Overrides {
    fn touches_s2(&self) -> bool {
        self.c.is_some() || self.c1.is_some() || self.c_z.is_some() || self.c_y.is_some()
    }
}

pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = &o.space {
            self.space = Some(s.clone());
        }
        if o.touches_s2() {
            let base = self.ansatz.s2.unwrap_or(DEFAULT_S2);
            self.ansatz.s2 = Some(S2FamilyParams {
                c: o.c.unwrap_or(base.c),
                c1: o.c1.unwrap_or(base.c1),
                c_z: o.c_z.unwrap_or(base.c_z),
                c_y: o.c_y.unwrap_or(base.c_y),
            });
        }
        let g = &mut self.grid;
        g.min = o.grid_min.unwrap_or(g.min);
        g.max = o.grid_max.unwrap_or(g.max);
        g.count = o.grid_count.unwrap_or(g.count);
        g.spacing = o.spacing.unwrap_or(g.spacing);
        if o.json.is_some() {
            self.outputs.json = o.json.clone();
        }
        if o.csv.is_some() {
            self.outputs.csv = o.csv.clone();
        }
    }

    pub fn space(&self) -> &str {
        self.space.as_deref().unwrap_or("sphere:2")
    }

    pub fn is_two_sphere(&self) -> bool {
        self.space().replace(' ', "") == "sphere:2"
    }

    /// Family parameters, defaulting to the Eguchi-Hanson member.
    pub fn s2_params(&self) -> S2FamilyParams {
        self.ansatz.s2.unwrap_or(DEFAULT_S2)
    }

    pub fn validate(&self) -> Result<(), String> {
        let g = &self.grid;
        if !(g.min > 0.0) || !(g.max > g.min) || g.count < 2 {
            return Err(format!("grid needs 0 < min < max and count >= 2 (got {}, {}, {})", g.min, g.max, g.count));
        }
        if self.ansatz.s2.is_some() {
            if !self.is_two_sphere() {
                return Err("two-sphere family parameters need space sphere:2".into());
            }
            if self.ansatz.potential.is_some() {
                return Err("give either ansatz.s2 or ansatz.potential, not both".into());
            }
        }
        if let Some(p) = &self.ansatz.s2 {
            p.validate().map_err(|e| e.to_string())?;
        }
        let t = &self.tolerances;
        for v in [t.det_constancy, t.s_constancy, t.ricci, t.closedness, t.eguchi_hanson, t.asymptotic_ratio] {
            if !(v > 0.0) {
                return Err("tolerances must be positive".into());
            }
        }
        Ok(())
    }
}

pub const DEFAULT_S2: S2FamilyParams = S2FamilyParams { c: 1.0, c1: 0.0, c_z: 0.0, c_y: 0.0 };
