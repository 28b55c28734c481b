use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;
use thiserror::Error;

use super::Time;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferSpec {
    pub id: String,
    pub capacity: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConveyorSpec {
    pub id: String,
    pub capacity: u32,
    /// Ticks a pallet spends on the station's input conveyor.
    pub transit: Time,
}

pub type MainConveyorSpec = ConveyorSpec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationSpec {
    pub id: String,
    pub machines: Vec<String>,
    pub buffer: BufferSpec,
    pub conveyor: ConveyorSpec,
}

/// Plant layout as read from / written to JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub stations: Vec<StationSpec>,
    pub main_conveyor: MainConveyorSpec,
    /// Longest a finished part may wait in a station buffer for its next leg.
    pub max_dwell: Time,
    /// Buffer hold for a part whose task has no successor.
    pub unload_dwell: Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResourceKind {
    #[serde(rename = "machine")]
    Machine,
    #[serde(rename = "buffer")]
    Buffer,
    #[serde(rename = "conveyor-link")]
    ConveyorLink,
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceKind::Machine => "machine",
            ResourceKind::Buffer => "buffer",
            ResourceKind::ConveyorLink => "conveyor-link",
        })
    }
}

/// Dense index of a resource inside a [`Plant`]. Ordering follows the plant
/// layout: per station its machines in listed order, then buffer, then
/// input conveyor; the main conveyor comes last.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResourceId(pub u32);

impl ResourceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resource {
    pub name: String,
    pub kind: ResourceKind,
    /// Owning station, or `"main"` for the inter-station conveyor.
    pub station: String,
    pub capacity: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StationLayout {
    pub name: String,
    pub machines: Vec<ResourceId>,
    pub buffer: ResourceId,
    pub conveyor: ResourceId,
    pub conveyor_transit: Time,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlantError {
    #[error("plant has no stations")]
    NoStations,
    #[error("station {0:?} has no machines")]
    NoMachines(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("resource {0:?} has zero capacity")]
    ZeroCapacity(String),
    #[error("conveyor {0:?} has zero transit time")]
    ZeroTransit(String),
    #[error("max_dwell and unload_dwell must be at least 1 tick")]
    ZeroDwell,
    #[error("unload_dwell {unload} exceeds max_dwell {max}")]
    UnloadExceedsMaxDwell { unload: Time, max: Time },
}

/// Lists every structural problem with a plant config.
pub fn validate_plant(config: &PlantConfig) -> Vec<PlantError> {
    let mut errs = Vec::new();
    if config.stations.is_empty() {
        errs.push(PlantError::NoStations);
    }
    let mut ids = HashSet::new();
    let mut claim = |id: &str, errs: &mut Vec<PlantError>| {
        if !ids.insert(id.to_string()) {
            errs.push(PlantError::DuplicateId(id.to_string()));
        }
    };
    for s in &config.stations {
        claim(&s.id, &mut errs);
        if s.machines.is_empty() {
            errs.push(PlantError::NoMachines(s.id.clone()));
        }
        for m in &s.machines {
            claim(m, &mut errs);
        }
        claim(&s.buffer.id, &mut errs);
        claim(&s.conveyor.id, &mut errs);
        if s.buffer.capacity == 0 {
            errs.push(PlantError::ZeroCapacity(s.buffer.id.clone()));
        }
        if s.conveyor.capacity == 0 {
            errs.push(PlantError::ZeroCapacity(s.conveyor.id.clone()));
        }
        if s.conveyor.transit == 0 {
            errs.push(PlantError::ZeroTransit(s.conveyor.id.clone()));
        }
    }
    let main = &config.main_conveyor;
    claim(&main.id, &mut errs);
    if main.capacity == 0 {
        errs.push(PlantError::ZeroCapacity(main.id.clone()));
    }
    if main.transit == 0 {
        errs.push(PlantError::ZeroTransit(main.id.clone()));
    }
    if config.max_dwell == 0 || config.unload_dwell == 0 {
        errs.push(PlantError::ZeroDwell);
    } else if config.unload_dwell > config.max_dwell {
        errs.push(PlantError::UnloadExceedsMaxDwell { unload: config.unload_dwell, max: config.max_dwell });
    }
    errs
}

/// A validated plant with dense resource indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plant {
    config: PlantConfig,
    resources: Vec<Resource>,
    stations: Vec<StationLayout>,
    station_index: HashMap<String, usize>,
    resource_index: HashMap<String, ResourceId>,
    main: ResourceId,
}

impl Plant {
    pub fn new(config: PlantConfig) -> Result<Self, PlantError> {
        if let Some(err) = validate_plant(&config).into_iter().next() {
            return Err(err);
        }
        let mut resources = Vec::new();
        let mut stations = Vec::new();
        let push = |resources: &mut Vec<Resource>, name: &str, kind, station: &str, capacity| {
            resources.push(Resource { name: name.to_string(), kind, station: station.to_string(), capacity });
            ResourceId(resources.len() as u32 - 1)
        };
        for s in &config.stations {
            let machines =
                s.machines.iter().map(|m| push(&mut resources, m, ResourceKind::Machine, &s.id, 1)).collect();
            let buffer = push(&mut resources, &s.buffer.id, ResourceKind::Buffer, &s.id, s.buffer.capacity);
            let conveyor =
                push(&mut resources, &s.conveyor.id, ResourceKind::ConveyorLink, &s.id, s.conveyor.capacity);
            stations.push(StationLayout {
                name: s.id.clone(),
                machines,
                buffer,
                conveyor,
                conveyor_transit: s.conveyor.transit,
            });
        }
        let main_spec = &config.main_conveyor;
        let main = push(&mut resources, &main_spec.id, ResourceKind::ConveyorLink, "main", main_spec.capacity);

        let station_index = stations.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
        let resource_index =
            resources.iter().enumerate().map(|(i, r)| (r.name.clone(), ResourceId(i as u32))).collect();
        Ok(Plant { config, resources, stations, station_index, resource_index, main })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn resource(&self, id: ResourceId) -> &Resource {
        &self.resources[id.index()]
    }

    pub fn resource_by_name(&self, name: &str) -> Option<ResourceId> {
        self.resource_index.get(name).copied()
    }

    pub fn stations(&self) -> &[StationLayout] {
        &self.stations
    }

    pub fn station(&self, name: &str) -> Option<&StationLayout> {
        self.station_index.get(name).map(|&i| &self.stations[i])
    }

    pub fn main_conveyor(&self) -> ResourceId {
        self.main
    }

    pub fn main_transit(&self) -> Time {
        self.config.main_conveyor.transit
    }

    pub fn max_dwell(&self) -> Time {
        self.config.max_dwell
    }

    pub fn unload_dwell(&self) -> Time {
        self.config.unload_dwell
    }

    /// Main-conveyor hop plus station input conveyor: the ticks between a
    /// task's first transport start and its machining start.
    pub fn transport_lead(&self, station: &StationLayout) -> Time {
        self.main_transit() + station.conveyor_transit
    }

    /// Longest possible single-task chain: transport, the given machining
    /// time and a full buffer hold.
    pub fn max_chain_len(&self, max_duration: Time) -> Time {
        let station_transit = self.stations.iter().map(|s| s.conveyor_transit).max().unwrap_or(0);
        self.main_transit() + station_transit + max_duration + self.max_dwell()
    }
}
