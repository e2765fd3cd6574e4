//! Configuration schemas (JSON) and grid specifications.

use crate::geometry::{ModelGeometry, DEFAULT_BUMP_AMPLITUDE};
use crate::majorant::Majorant;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Majorant specification:
/// `{"type": "gevrey", "s": 1.5}`, `{"type": "denjoy", "level": 1}`, or
/// `{"type": "custom", "table": [[x, logM], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MajorantConfig {
    Gevrey { s: f64 },
    Denjoy { level: u32 },
    Custom { table: Vec<(f64, f64)> },
}

impl MajorantConfig {
    pub fn build(&self) -> Result<Majorant> {
        match self {
            MajorantConfig::Gevrey { s } => Majorant::gevrey(*s),
            MajorantConfig::Denjoy { level } => Majorant::denjoy(*level),
            MajorantConfig::Custom { table } => Majorant::from_table("custom", table),
        }
    }
}

/// Geometry specification:
/// `{"model": "fock"}`, `{"model": "cp1"}`, or
/// `{"model": "cp1", "perturbation": {"kind": "bump", "amplitude": 0.05}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub kind: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    DEFAULT_BUMP_AMPLITUDE
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ModelGeometry> {
        let pert = match &self.perturbation {
            None => None,
            Some(p) => {
                if p.kind != "bump" {
                    return Err(Error::Config(format!(
                        "unknown perturbation kind '{}' (only 'bump' is available)",
                        p.kind
                    )));
                }
                Some(p.amplitude)
            }
        };
        match (self.model.as_str(), pert) {
            ("fock", None) => Ok(ModelGeometry::fock()),
            ("fock", Some(_)) => Err(Error::Config(
                "the fock model does not accept a perturbation".to_string(),
            )),
            ("cp1", None) => Ok(ModelGeometry::cp1()),
            ("cp1", Some(a)) => ModelGeometry::cp1_perturbed(a),
            ("cp1-perturbed", a) => {
                ModelGeometry::cp1_perturbed(a.unwrap_or(DEFAULT_BUMP_AMPLITUDE))
            }
            (other, _) => Err(Error::Config(format!(
                "unknown geometry model '{other}' (expected fock | cp1 | cp1-perturbed)"
            ))),
        }
    }
}

/// k-grid specification `start,stop,points,log|lin`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KGridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: GridScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Log,
    Lin,
}

impl KGridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!(
                "k-grid '{s}' must be start,stop,points,log|lin"
            )));
        }
        let start: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad k-grid start '{}'", parts[0])))?;
        let stop: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad k-grid stop '{}'", parts[1])))?;
        let points: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad k-grid points '{}'", parts[2])))?;
        let scale = match parts[3].trim() {
            "log" => GridScale::Log,
            "lin" => GridScale::Lin,
            other => {
                return Err(Error::Config(format!(
                    "bad k-grid scale '{other}' (log|lin)"
                )))
            }
        };
        let spec = KGridSpec {
            start,
            stop,
            points,
            scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0) || !(self.stop > self.start) || self.points < 2 {
            return Err(Error::Config(format!(
                "k-grid needs 0 < start < stop and points >= 2 (got {self:?})"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        match self.scale {
            GridScale::Log => crate::numeric::geometric_grid(self.start, self.stop, self.points),
            GridScale::Lin => crate::numeric::linear_grid(self.start, self.stop, self.points),
        }
    }
}

/// Evaluation point-set specification:
/// `polar:rmin,rmax,nr:tmin,tmax,nt` (an `nr x nt` polar product set) or
/// `points:re+imi;re+imi;...` for explicit lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PointGridSpec {
    Polar {
        r: (f64, f64, usize),
        theta: (f64, f64, usize),
    },
    Points(Vec<(f64, f64)>),
}

impl PointGridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("polar:") {
            let segs: Vec<&str> = rest.split(':').collect();
            if segs.len() != 2 {
                return Err(Error::Config(format!(
                    "polar grid '{s}' must be polar:rmin,rmax,nr:tmin,tmax,nt"
                )));
            }
            let parse3 = |seg: &str| -> Result<(f64, f64, usize)> {
                let p: Vec<&str> = seg.split(',').collect();
                if p.len() != 3 {
                    return Err(Error::Config(format!("bad grid segment '{seg}'")));
                }
                Ok((
                    p[0].trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad number '{}'", p[0])))?,
                    p[1].trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad number '{}'", p[1])))?,
                    p[2].trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad count '{}'", p[2])))?,
                ))
            };
            let spec = PointGridSpec::Polar {
                r: parse3(segs[0])?,
                theta: parse3(segs[1])?,
            };
            if spec.points().is_empty() {
                return Err(Error::Config(format!("empty grid '{s}'")));
            }
            Ok(spec)
        } else if let Some(rest) = s.strip_prefix("points:") {
            let mut pts = Vec::new();
            for item in rest.split(';') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                let c: Vec<&str> = item.split(',').collect();
                if c.len() != 2 {
                    return Err(Error::Config(format!(
                        "bad point '{item}' (expected re,im)"
                    )));
                }
                pts.push((
                    c[0].trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad number '{}'", c[0])))?,
                    c[1].trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad number '{}'", c[1])))?,
                ));
            }
            if pts.is_empty() {
                return Err(Error::Config("empty point list".to_string()));
            }
            Ok(PointGridSpec::Points(pts))
        } else {
            Err(Error::Config(format!(
                "grid '{s}' must start with polar: or points:"
            )))
        }
    }

    pub fn points(&self) -> Vec<Complex64> {
        match self {
            PointGridSpec::Polar { r, theta } => {
                let (r0, r1, nr) = *r;
                let (t0, t1, nt) = *theta;
                let rs = if nr <= 1 {
                    vec![r0]
                } else {
                    crate::numeric::linear_grid(r0, r1, nr)
                };
                let ts = if nt <= 1 {
                    vec![t0]
                } else {
                    crate::numeric::linear_grid(t0, t1, nt)
                };
                let mut out = Vec::with_capacity(rs.len() * ts.len());
                for &rr in &rs {
                    for &tt in &ts {
                        out.push(Complex64::from_polar(rr, tt));
                    }
                }
                out
            }
            PointGridSpec::Points(pts) => {
                pts.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
            }
        }
    }
}

/// Top-level experiment configuration file: every field optional, merged
/// under the command-line flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub majorant: Option<MajorantConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

/// Parse JSON given either inline text (starting with `{`) or a file path.
pub fn load_json<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majorant_configs_round_trip() {
        let m: MajorantConfig = serde_json::from_str(r#"{"type": "gevrey", "s": 1.5}"#).unwrap();
        assert_eq!(m.build().unwrap().name(), "gevrey(1.5)");
        let m: MajorantConfig = serde_json::from_str(r#"{"type": "denjoy", "level": 2}"#).unwrap();
        assert_eq!(m.build().unwrap().name(), "denjoy(2)");
        let m: MajorantConfig =
            serde_json::from_str(r#"{"type": "custom", "table": [[1,0],[2,1.4],[3,3.3],[4,5.5]]}"#)
                .unwrap();
        assert!(m.build().is_ok());
        // Unknown variants name the offending value.
        let err = serde_json::from_str::<MajorantConfig>(r#"{"type": "gevray", "s": 2}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("gevray"), "{err}");
    }

    #[test]
    fn geometry_configs() {
        let g: GeometryConfig = serde_json::from_str(r#"{"model": "fock"}"#).unwrap();
        assert_eq!(g.build().unwrap().name(), "fock");
        let g: GeometryConfig = serde_json::from_str(
            r#"{"model": "cp1", "perturbation": {"kind": "bump", "amplitude": 0.05}}"#,
        )
        .unwrap();
        let built = g.build().unwrap();
        assert_eq!(built.name(), "cp1-perturbed");
        assert_eq!(built.perturbation().unwrap().amplitude, 0.05);
        let g: GeometryConfig = serde_json::from_str(r#"{"model": "cp1-perturbed"}"#).unwrap();
        assert_eq!(g.build().unwrap().perturbation().unwrap().amplitude, 0.05);
        let g: GeometryConfig =
            serde_json::from_str(r#"{"model": "cp1", "perturbation": {"kind": "wavelet"}}"#)
                .unwrap();
        assert!(g.build().is_err());
        let g: GeometryConfig = serde_json::from_str(r#"{"model": "torus"}"#).unwrap();
        assert!(matches!(g.build(), Err(Error::Config(_))));
    }

    #[test]
    fn k_grid_parsing() {
        let g = KGridSpec::parse("10,1e8,20,log").unwrap();
        let vals = g.values();
        assert_eq!(vals.len(), 20);
        assert!((vals[0] - 10.0).abs() < 1e-12);
        assert!((vals[19] - 1e8).abs() / 1e8 < 1e-12);
        assert!(KGridSpec::parse("10,1e8,20").is_err());
        assert!(KGridSpec::parse("0,1e8,20,log").is_err());
        assert!(KGridSpec::parse("1,2,20,cubic").is_err());
    }

    #[test]
    fn point_grids() {
        let g = PointGridSpec::parse("polar:0.1,0.8,5:-0.4,0.4,2").unwrap();
        assert_eq!(g.points().len(), 10);
        let g = PointGridSpec::parse("points:0.1,0.2;0.3,-0.4").unwrap();
        assert_eq!(g.points().len(), 2);
        assert!(PointGridSpec::parse("spiral:1,2,3").is_err());
    }
}
