//! On-disk instance format.

use dwsrp::instgen::{SuperInstance, GENERATOR_VERSION};
use dwsrp::{Crew, CrewId, Point, SkillVector, Task, TaskId, TravelModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const INSTANCE_VERSION: &str = "dwsrp-instance/1";
pub const METRIC: &str = "rectilinear";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub seed: Option<u64>,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub tau_max: f64,
    /// km/h.
    pub speed: f64,
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepotRecord {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrewRecord {
    pub id: u32,
    pub skills: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub id: u32,
    pub a: f64,
    pub e: f64,
    pub l: f64,
    pub p: f64,
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub skills: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub meta: Meta,
    pub depot: DepotRecord,
    pub crews: Vec<CrewRecord>,
    pub tasks: Vec<TaskRecord>,
}

fn skills(flags: &[u8], owner: &str) -> Result<SkillVector, CliError> {
    if let Some(bad) = flags.iter().find(|&&f| f > 1) {
        return Err(CliError::Input(format!("{owner}: skill flags must be 0 or 1, got {bad}")));
    }
    Ok(SkillVector::from_flags(flags))
}

impl InstanceFile {
    pub fn from_instance(inst: &SuperInstance) -> Self {
        Self {
            meta: Meta {
                seed: inst.seed,
                version: INSTANCE_VERSION.into(),
                generator: inst.seed.map(|_| GENERATOR_VERSION.into()),
                tau_max: inst.horizon,
                speed: inst.travel.speed_kmh,
                metric: METRIC.into(),
                intervals: inst.intervals,
            },
            depot: DepotRecord { x: inst.depot.x, y: inst.depot.y },
            crews: inst.crews.iter().map(|c| CrewRecord { id: c.id.0, skills: c.skills.to_flags() }).collect(),
            tasks: inst
                .tasks
                .iter()
                .map(|t| TaskRecord {
                    id: t.id.0,
                    a: t.arrival,
                    e: t.earliest,
                    l: t.latest,
                    p: t.process,
                    w: t.priority,
                    x: t.location.x,
                    y: t.location.y,
                    skills: t.skills.to_flags(),
                })
                .collect(),
        }
    }

    /// Converts and validates.
    pub fn to_instance(&self) -> Result<SuperInstance, CliError> {
        if self.meta.version != INSTANCE_VERSION {
            return Err(CliError::Input(format!(
                "unsupported instance version {:?}, expected {INSTANCE_VERSION:?}",
                self.meta.version
            )));
        }
        if self.meta.metric != METRIC {
            return Err(CliError::Input(format!("unsupported metric {:?}, expected {METRIC:?}", self.meta.metric)));
        }
        if !(self.meta.tau_max.is_finite() && self.meta.tau_max > 0.0) {
            return Err(CliError::Input(format!("tau_max must be positive, got {}", self.meta.tau_max)));
        }
        let crews = self
            .crews
            .iter()
            .map(|c| {
                Ok(Crew {
                    id: CrewId(c.id),
                    skills: skills(&c.skills, &format!("crew {}", c.id))?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let tasks = self
            .tasks
            .iter()
            .map(|t| {
                if t.id == 0 {
                    return Err(CliError::Input("task id 0 is reserved for the depot".into()));
                }
                Ok(Task {
                    id: TaskId(t.id),
                    arrival: t.a,
                    process: t.p,
                    priority: t.w,
                    earliest: t.e,
                    latest: t.l,
                    location: Point::new(t.x, t.y),
                    skills: skills(&t.skills, &format!("task {}", t.id))?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let inst = SuperInstance {
            seed: self.meta.seed,
            intervals: self.meta.intervals,
            horizon: self.meta.tau_max,
            travel: TravelModel { speed_kmh: self.meta.speed },
            depot: Point::new(self.depot.x, self.depot.y),
            crews,
            tasks,
        };
        inst.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(inst)
    }
}

pub fn parse_instance(text: &str) -> Result<SuperInstance, CliError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| CliError::Input(format!("instance: {e}")))?;
    file.to_instance()
}

pub fn render_instance(inst: &SuperInstance) -> String {
    let mut text = serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("instances serialize");
    text.push('\n');
    text
}
