use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{haversine, Coord};
use crate::gtfs::TransitNetwork;

#[derive(Debug, Error)]
pub enum PlacesError {
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file} line {line}: {message}")]
    Invalid {
        file: String,
        line: u64,
        message: String,
    },
    #[error("no facility of kind {0} exists")]
    NoFacilityOfKind(FacilityKind),
    #[error("k must be at least 1")]
    ZeroK,
}

/// Rural–urban settlement scale, most urban first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SettlementClass {
    UrbanNearer,
    UrbanFurther,
    LargerRuralNearer,
    LargerRuralFurther,
    SmallerRuralNearer,
    SmallerRuralFurther,
}

impl SettlementClass {
    pub const ALL: [SettlementClass; 6] = [
        Self::UrbanNearer,
        Self::UrbanFurther,
        Self::LargerRuralNearer,
        Self::LargerRuralFurther,
        Self::SmallerRuralNearer,
        Self::SmallerRuralFurther,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Self::UrbanNearer => "UN1",
            Self::UrbanFurther => "UF1",
            Self::LargerRuralNearer => "RLN1",
            Self::LargerRuralFurther => "RLF1",
            Self::SmallerRuralNearer => "RSN1",
            Self::SmallerRuralFurther => "RSF1",
        }
    }

    pub fn is_rural(self) -> bool {
        !matches!(self, Self::UrbanNearer | Self::UrbanFurther)
    }
}

impl fmt::Display for SettlementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for SettlementClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        let class = match norm.as_str() {
            "un1" | "urban_nearer" => Self::UrbanNearer,
            "uf1" | "urban_further" => Self::UrbanFurther,
            "rln1" | "larger_rural_nearer" => Self::LargerRuralNearer,
            "rlf1" | "larger_rural_further" => Self::LargerRuralFurther,
            "rsn1" | "smaller_rural_nearer" => Self::SmallerRuralNearer,
            "rsf1" | "smaller_rural_further" => Self::SmallerRuralFurther,
            _ => return Err(format!("unknown settlement class {s:?}")),
        };
        Ok(class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FacilityKind {
    Hospital,
    Gp,
}

impl FacilityKind {
    pub const ALL: [FacilityKind; 2] = [Self::Hospital, Self::Gp];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hospital => "hospital",
            Self::Gp => "gp",
        }
    }
}

impl fmt::Display for FacilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FacilityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hospital" => Ok(Self::Hospital),
            "gp" => Ok(Self::Gp),
            other => Err(format!("unknown facility kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnappedStop {
    /// Index into the network's stop table.
    pub stop: usize,
    pub distance_m: f64,
}

/// An analysis zone positioned at its population-weighted centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub zone_id: String,
    pub centroid: Coord,
    pub lad_code: String,
    pub settlement_class: SettlementClass,
    pub snapped_stop: Option<SnappedStop>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facility {
    pub facility_id: String,
    pub kind: FacilityKind,
    pub location: Coord,
}

/// Attaches the zone to the stop closest to its centroid. Equidistant stops
/// resolve to the lexicographically smallest stop id. No distance cap is
/// applied; the distance is carried along for reporting.
pub fn snap_to_stop(zone: &Zone, network: &TransitNetwork) -> Zone {
    let mut best: Option<(usize, f64)> = None;
    for (idx, stop) in network.stops().iter().enumerate() {
        let d = haversine(zone.centroid, stop.coord);
        let better = match best {
            None => true,
            Some((b, bd)) => d < bd || (d == bd && stop.id < network.stops()[b].id),
        };
        if better {
            best = Some((idx, d));
        }
    }
    Zone {
        snapped_stop: best.map(|(stop, distance_m)| SnappedStop { stop, distance_m }),
        ..zone.clone()
    }
}

/// The `k` facilities of `kind` nearest to the zone centroid, closest first.
/// Ties are resolved by facility id.
pub fn nearest_facilities<'a>(
    zone: &Zone,
    facilities: &'a [Facility],
    kind: FacilityKind,
    k: usize,
) -> Result<Vec<(&'a Facility, f64)>, PlacesError> {
    if k == 0 {
        return Err(PlacesError::ZeroK);
    }
    let mut candidates: Vec<(&Facility, f64)> = facilities
        .iter()
        .filter(|f| f.kind == kind)
        .map(|f| (f, haversine(zone.centroid, f.location)))
        .collect();
    if candidates.is_empty() {
        return Err(PlacesError::NoFacilityOfKind(kind));
    }
    candidates.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then_with(|| a.0.facility_id.cmp(&b.0.facility_id))
    });
    candidates.truncate(k);
    Ok(candidates)
}

#[derive(Deserialize)]
struct ZoneRow {
    zone_id: String,
    lat: f64,
    lon: f64,
    lad_code: String,
    settlement_class: String,
}

#[derive(Deserialize)]
struct FacilityRow {
    facility_id: String,
    kind: String,
    lat: f64,
    lon: f64,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> PlacesError + '_ {
    move |source| PlacesError::Csv {
        file: path.display().to_string(),
        source,
    }
}

pub fn load_zones(path: &Path) -> Result<Vec<Zone>, PlacesError> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut seen = HashSet::new();
    let mut zones = Vec::new();
    for (i, row) in rdr.deserialize::<ZoneRow>().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let invalid = |message: String| PlacesError::Invalid {
            file: path.display().to_string(),
            line: i as u64 + 2,
            message,
        };
        let centroid = Coord::new(row.lat, row.lon);
        if !centroid.is_valid() {
            return Err(invalid(format!("zone {} has out-of-range coordinates", row.zone_id)));
        }
        if !seen.insert(row.zone_id.clone()) {
            return Err(invalid(format!("duplicate zone_id {}", row.zone_id)));
        }
        let settlement_class = row.settlement_class.parse().map_err(invalid)?;
        zones.push(Zone {
            zone_id: row.zone_id,
            centroid,
            lad_code: row.lad_code,
            settlement_class,
            snapped_stop: None,
        });
    }
    Ok(zones)
}

pub fn load_facilities(path: &Path) -> Result<Vec<Facility>, PlacesError> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<FacilityRow>().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let invalid = |message: String| PlacesError::Invalid {
            file: path.display().to_string(),
            line: i as u64 + 2,
            message,
        };
        let location = Coord::new(row.lat, row.lon);
        if !location.is_valid() {
            return Err(invalid(format!(
                "facility {} has out-of-range coordinates",
                row.facility_id
            )));
        }
        if !seen.insert(row.facility_id.clone()) {
            return Err(invalid(format!("duplicate facility_id {}", row.facility_id)));
        }
        out.push(Facility {
            facility_id: row.facility_id,
            kind: row.kind.parse().map_err(invalid)?,
            location,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn facility(id: &str, kind: FacilityKind, lat: f64, lon: f64) -> Facility {
        Facility {
            facility_id: id.into(),
            kind,
            location: Coord::new(lat, lon),
        }
    }

    fn zone_at(lat: f64, lon: f64) -> Zone {
        Zone {
            zone_id: "Z".into(),
            centroid: Coord::new(lat, lon),
            lad_code: "L".into(),
            settlement_class: SettlementClass::UrbanNearer,
            snapped_stop: None,
        }
    }

    #[test]
    fn fewer_facilities_than_k_returns_all() {
        let fs = vec![
            facility("h1", FacilityKind::Hospital, 0.0, 0.1),
            facility("h2", FacilityKind::Hospital, 0.0, 0.3),
            facility("g1", FacilityKind::Gp, 0.0, 0.0),
            facility("h3", FacilityKind::Hospital, 0.0, 0.2),
        ];
        let got = nearest_facilities(&zone_at(0.0, 0.0), &fs, FacilityKind::Hospital, 5).unwrap();
        let ids: Vec<_> = got.iter().map(|(f, _)| f.facility_id.as_str()).collect();
        assert_eq!(ids, ["h1", "h3", "h2"]);
    }

    #[test]
    fn facility_at_centroid_is_zero_distance() {
        let fs = vec![facility("g", FacilityKind::Gp, 51.0, -1.0)];
        let got = nearest_facilities(&zone_at(51.0, -1.0), &fs, FacilityKind::Gp, 1).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].1, 0.0);
    }

    #[test]
    fn missing_kind_is_an_error() {
        let fs = vec![facility("g", FacilityKind::Gp, 51.0, -1.0)];
        assert!(matches!(
            nearest_facilities(&zone_at(0.0, 0.0), &fs, FacilityKind::Hospital, 5),
            Err(PlacesError::NoFacilityOfKind(FacilityKind::Hospital))
        ));
        assert!(matches!(
            nearest_facilities(&zone_at(0.0, 0.0), &fs, FacilityKind::Gp, 0),
            Err(PlacesError::ZeroK)
        ));
    }

    #[test]
    fn settlement_codes_round_trip() {
        for class in SettlementClass::ALL {
            assert_eq!(class.code().parse::<SettlementClass>().unwrap(), class);
        }
        assert!("metropolis".parse::<SettlementClass>().is_err());
        assert!(SettlementClass::LargerRuralNearer.is_rural());
        assert!(!SettlementClass::UrbanFurther.is_rural());
    }
}
