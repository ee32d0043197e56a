//! Scenario files: `[section]` headers followed by `key = value` lines.
//! `#` starts a comment. Every section except `[surface]` is optional.
//!
//! ```text
//! [surface]
//! ends = funnel-cusp
//! grid = 512
//!
//! [initial]
//! family = balanced_bump
//! amplitude = 0.2
//!
//! [flow]
//! t_end = 10
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use rflow_core::flow::{FlowConfig, Normalization, Stepper};
use rflow_core::surface::{BumpSpec, EndKind, Side};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioError {
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(k) => write!(f, "line {}: {}: {}", self.line, k, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

const SECTIONS: [(&str, &[&str]); 6] = [
    ("surface", &["ends", "grid", "length", "file"]),
    (
        "initial",
        &[
            "family",
            "amplitude",
            "center",
            "width",
            "second_center",
            "second_width",
            "count",
            "max_amplitude",
            "seed",
            "area",
        ],
    ),
    (
        "flow",
        &[
            "normalization",
            "constant",
            "dt",
            "t_end",
            "stepper",
            "threshold",
            "record_every",
            "startup_ramp",
            "ramp_growth",
        ],
    ),
    ("output", &["name", "csv", "svg"]),
    ("monitors", &["potential", "polyakov", "selberg"]),
    ("debug", &["corrupt_ledger"]),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SurfaceSpec {
    Model { left: EndKind, right: EndKind, grid: usize, length: f64 },
    /// A surface document; its factor, if any, is the initial data unless
    /// `[initial]` says otherwise.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum InitialSpec {
    Zero,
    /// From the surface document.
    File,
    Bump(BumpSpec),
    BalancedBump { first: BumpSpec, second: BumpSpec },
    RandomBumps { count: usize, max_amplitude: f64, seed: Option<u64> },
    /// Factor prescribing the renormalized area (per unit angle).
    Area(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub surface: SurfaceSpec,
    pub initial: InitialSpec,
    pub flow: FlowConfig,
    pub write_csv: bool,
    pub write_svg: bool,
    pub potential: bool,
    pub polyakov: bool,
    pub selberg: Option<PathBuf>,
    pub corrupt_ledger: bool,
}

#[derive(Default)]
struct Table {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

fn err(line: usize, field: Option<&str>, message: impl Into<String>) -> ScenarioError {
    ScenarioError { line, field: field.map(str::to_string), message: message.into() }
}

impl Table {
    fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut table = Table::default();
        let mut current: Option<(String, &[&str])> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, None, "unterminated section header"))?
                    .trim();
                let keys = SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .map(|(_, k)| *k)
                    .ok_or_else(|| err(line, None, format!("unknown section [{name}]")))?;
                if table.sections.contains_key(name) {
                    return Err(err(line, None, format!("section [{name}] repeated")));
                }
                table.sections.insert(name.to_string(), BTreeMap::new());
                current = Some((name.to_string(), keys));
                continue;
            }
            let (section, keys) = current
                .as_ref()
                .ok_or_else(|| err(line, None, "key outside of any section"))?;
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| err(line, None, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if !keys.contains(&k) {
                return Err(err(line, Some(k), format!("unknown key in [{section}]")));
            }
            if v.is_empty() {
                return Err(err(line, Some(k), "missing value"));
            }
            let entries = table.sections.get_mut(section).expect("section was inserted");
            if entries.insert(k.to_string(), (v.to_string(), line)).is_some() {
                return Err(err(line, Some(k), "key repeated"));
            }
        }
        Ok(table)
    }

    fn raw(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.sections.get(section)?.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn get<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ScenarioError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| err(line, Some(key), format!("cannot parse `{v}`"))),
        }
    }

    fn get_or<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, ScenarioError> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.raw(section, key).map_or(0, |(_, l)| l)
    }
}

fn end_kind(s: &str) -> Option<EndKind> {
    match s {
        "funnel" => Some(EndKind::Funnel),
        "cusp" => Some(EndKind::Cusp),
        _ => None,
    }
}

fn parse_surface(t: &Table) -> Result<SurfaceSpec, ScenarioError> {
    if !t.sections.contains_key("surface") {
        return Err(err(0, None, "missing [surface] section"));
    }
    if let Some((path, line)) = t.raw("surface", "file") {
        for k in ["ends", "grid", "length"] {
            if t.raw("surface", k).is_some() {
                return Err(err(line, Some("file"), format!("`file` excludes `{k}`")));
            }
        }
        return Ok(SurfaceSpec::File(PathBuf::from(path)));
    }
    let (ends, line) = t
        .raw("surface", "ends")
        .ok_or_else(|| err(0, Some("ends"), "missing in [surface]"))?;
    let (left, right) = ends
        .split_once('-')
        .and_then(|(l, r)| Some((end_kind(l)?, end_kind(r)?)))
        .ok_or_else(|| err(line, Some("ends"), format!("expected e.g. `funnel-cusp`, got `{ends}`")))?;
    let grid = t.get_or("surface", "grid", 512usize)?;
    let length = t.get_or("surface", "length", 1.0f64)?;
    if t.raw("surface", "length").is_some() && (left, right) != (EndKind::Funnel, EndKind::Funnel) {
        return Err(err(t.line_of("surface", "length"), Some("length"), "only for funnel-funnel"));
    }
    if !(length > 0.0) {
        return Err(err(t.line_of("surface", "length"), Some("length"), "must be positive"));
    }
    Ok(SurfaceSpec::Model { left, right, grid, length })
}

fn parse_initial(t: &Table, surface: &SurfaceSpec) -> Result<InitialSpec, ScenarioError> {
    let default = if matches!(surface, SurfaceSpec::File(_)) { "file" } else { "zero" };
    let family = t.get_or("initial", "family", default.to_string())?;
    let line = t.line_of("initial", "family");
    let amplitude = t.get_or("initial", "amplitude", 0.2)?;
    let first = BumpSpec {
        amplitude,
        center: t.get_or("initial", "center", 0.35)?,
        width: t.get_or("initial", "width", 0.15)?,
    };
    Ok(match family.as_str() {
        "zero" => InitialSpec::Zero,
        "file" => {
            if !matches!(surface, SurfaceSpec::File(_)) {
                return Err(err(line, Some("family"), "`file` needs a surface document"));
            }
            InitialSpec::File
        }
        "bump" => InitialSpec::Bump(first),
        "balanced_bump" => InitialSpec::BalancedBump {
            first,
            second: BumpSpec {
                amplitude: 1.0,
                center: t.get_or("initial", "second_center", 0.65)?,
                width: t.get_or("initial", "second_width", 0.15)?,
            },
        },
        "random_bumps" => InitialSpec::RandomBumps {
            count: t.get_or("initial", "count", 3usize)?,
            max_amplitude: t.get_or("initial", "max_amplitude", 0.3)?,
            seed: t.get("initial", "seed")?,
        },
        "area" => InitialSpec::Area(
            t.get("initial", "area")?
                .ok_or_else(|| err(line, Some("area"), "family `area` needs `area`"))?,
        ),
        other => return Err(err(line, Some("family"), format!("unknown family `{other}`"))),
    })
}

fn parse_flow(t: &Table) -> Result<FlowConfig, ScenarioError> {
    let d = FlowConfig::default();
    let norm = t.get_or("flow", "normalization", "fixed".to_string())?;
    let constant_line = t.line_of("flow", "constant");
    let normalization = match norm.as_str() {
        "fixed" => Normalization::Fixed(t.get_or("flow", "constant", -2.0)?),
        "average" => Normalization::RenormalizedAverage,
        "left" => Normalization::AsymptoticCurvature(Side::Left),
        "right" => Normalization::AsymptoticCurvature(Side::Right),
        other => {
            return Err(err(
                t.line_of("flow", "normalization"),
                Some("normalization"),
                format!("unknown normalization `{other}`"),
            ))
        }
    };
    if norm != "fixed" && t.raw("flow", "constant").is_some() {
        return Err(err(constant_line, Some("constant"), "only with `normalization = fixed`"));
    }
    let stepper = match t.get_or("flow", "stepper", "imex".to_string())?.as_str() {
        "imex" => Stepper::Imex,
        "rk4" => Stepper::ExplicitRk4,
        "euler" => Stepper::ExplicitEuler,
        other => {
            return Err(err(t.line_of("flow", "stepper"), Some("stepper"), format!("unknown stepper `{other}`")))
        }
    };
    let cfg = FlowConfig {
        normalization,
        dt: t.get_or("flow", "dt", d.dt)?,
        t_end: t.get_or("flow", "t_end", d.t_end)?,
        stepper,
        convergence_threshold: t.get_or("flow", "threshold", d.convergence_threshold)?,
        record_every: t.get_or("flow", "record_every", d.record_every)?,
        startup_ramp: t.get_or("flow", "startup_ramp", d.startup_ramp)?,
        ramp_growth: t.get_or("flow", "ramp_growth", d.ramp_growth)?,
    };
    cfg.validate()
        .map_err(|e| err(t.sections.get("flow").and_then(|s| s.values().map(|v| v.1).min()).unwrap_or(0), None, e.to_string()))?;
    Ok(cfg)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let t = Table::parse(text)?;
        let surface = parse_surface(&t)?;
        let initial = parse_initial(&t, &surface)?;
        let flow = parse_flow(&t)?;
        Ok(Scenario {
            name: t.get_or("output", "name", "run".to_string())?,
            surface,
            initial,
            flow,
            write_csv: t.get_or("output", "csv", true)?,
            write_svg: t.get_or("output", "svg", true)?,
            potential: t.get_or("monitors", "potential", false)?,
            polyakov: t.get_or("monitors", "polyakov", false)?,
            selberg: t.get::<String>("monitors", "selberg")?.map(PathBuf::from),
            corrupt_ledger: t.get_or("debug", "corrupt_ledger", false)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HORN: &str = "\
# horn with a balanced bump
[surface]
ends = funnel-cusp
grid = 256

[initial]
family = balanced_bump
amplitude = 0.25   # trailing comment

[flow]
t_end = 3
threshold = 0

[monitors]
polyakov = true
";

    #[test]
    fn parses_a_full_scenario() {
        let s = Scenario::parse(HORN).unwrap();
        assert_eq!(
            s.surface,
            SurfaceSpec::Model { left: EndKind::Funnel, right: EndKind::Cusp, grid: 256, length: 1.0 }
        );
        match s.initial {
            InitialSpec::BalancedBump { first, second } => {
                assert_eq!(first.amplitude, 0.25);
                assert_eq!(second.center, 0.65);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(s.flow.t_end, 3.0);
        assert_eq!(s.flow.convergence_threshold, 0.0);
        assert!(s.polyakov && !s.potential && !s.corrupt_ledger);
        assert_eq!(s.name, "run");
    }

    #[test]
    fn reports_line_and_field() {
        let e = Scenario::parse("[surface]\nends = funnel-cusp\ngrid = many\n").unwrap_err();
        assert_eq!((e.line, e.field.as_deref()), (3, Some("grid")));
        let e = Scenario::parse("[surface]\nends = funnel-cusp\n\n[flow]\nbogus = 1\n").unwrap_err();
        assert_eq!((e.line, e.field.as_deref()), (5, Some("bogus")));
        let e = Scenario::parse("ends = funnel-cusp\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = Scenario::parse("[surface]\nends = funnel-knot\n").unwrap_err();
        assert_eq!((e.line, e.field.as_deref()), (2, Some("ends")));
        assert!(e.to_string().starts_with("line 2: ends:"));
    }

    #[test]
    fn rejects_repeats_and_conflicts() {
        assert!(Scenario::parse("[surface]\nends = cusp-cusp\nends = cusp-cusp\n").is_err());
        assert!(Scenario::parse("[surface]\nends = cusp-cusp\n[surface]\n").is_err());
        assert!(Scenario::parse("[surface]\nends = cusp-cusp\nlength = 2\n").is_err());
        assert!(Scenario::parse("[surface]\nfile = a.json\ngrid = 8\n").is_err());
        assert!(Scenario::parse("[surface]\nends = cusp-cusp\n[flow]\nnormalization = average\nconstant = 1\n").is_err());
        assert!(Scenario::parse("[surface]\nends = cusp-cusp\n[flow]\ndt = -1\n").is_err());
        assert!(Scenario::parse("[initial]\nfamily = zero\n").is_err());
    }

    #[test]
    fn surface_file_defaults_to_its_factor() {
        let s = Scenario::parse("[surface]\nfile = horn.json\n").unwrap();
        assert_eq!(s.surface, SurfaceSpec::File("horn.json".into()));
        assert_eq!(s.initial, InitialSpec::File);
        assert!(Scenario::parse("[surface]\nends = cusp-cusp\n[initial]\nfamily = file\n").is_err());
    }
}
