//! Built-in table of the 30 configured airports with location, time-zone
//! rule and default runway headings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Up to four ASCII uppercase letters or digits, stored inline.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AirportCode([u8; 4]);

impl AirportCode {
    pub fn new(code: &str) -> Option<Self> {
        let bytes = code.as_bytes();
        if bytes.is_empty() || bytes.len() > 4 || !bytes.iter().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit()) {
            return None;
        }
        let mut buf = [0u8; 4];
        buf[..bytes.len()].copy_from_slice(bytes);
        Some(Self(buf))
    }

    pub fn as_str(&self) -> &str {
        let len = self.0.iter().position(|&b| b == 0).unwrap_or(4);
        std::str::from_utf8(&self.0[..len]).expect("ASCII by construction")
    }

    /// Index in the built-in table, or `None` for external airports.
    pub fn id(&self) -> Option<usize> {
        AIRPORTS.iter().position(|a| a.code == self.as_str())
    }

    pub fn info(&self) -> Option<&'static AirportInfo> {
        self.id().map(|i| &AIRPORTS[i])
    }
}

impl fmt::Display for AirportCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for AirportCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AirportCode({})", self.as_str())
    }
}

impl FromStr for AirportCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s.trim()).ok_or_else(|| format!("invalid airport code {s:?}"))
    }
}

impl Serialize for AirportCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AirportCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AirportInfo {
    pub code: &'static str,
    pub lat: f64,
    pub lon: f64,
    /// Standard-time offset from UTC in hours.
    pub utc_offset_hours: i32,
    /// Whether the airport follows US daylight saving time.
    pub observes_dst: bool,
    pub arr_runway_hdg: f64,
    pub dep_runway_hdg: f64,
}

const fn ap(
    code: &'static str,
    lat: f64,
    lon: f64,
    utc_offset_hours: i32,
    observes_dst: bool,
    arr_runway_hdg: f64,
    dep_runway_hdg: f64,
) -> AirportInfo {
    AirportInfo {
        code,
        lat,
        lon,
        utc_offset_hours,
        observes_dst,
        arr_runway_hdg,
        dep_runway_hdg,
    }
}

pub const AIRPORTS: [AirportInfo; 30] = [
    ap("ATL", 33.6407, -84.4277, -5, true, 265.0, 275.0),
    ap("BOS", 42.3656, -71.0096, -5, true, 330.0, 40.0),
    ap("BWI", 39.1754, -76.6683, -5, true, 330.0, 280.0),
    ap("CLT", 35.2140, -80.9431, -5, true, 180.0, 180.0),
    ap("DCA", 38.8512, -77.0402, -5, true, 10.0, 10.0),
    ap("DEN", 39.8561, -104.6737, -7, true, 350.0, 250.0),
    ap("DFW", 32.8998, -97.0403, -6, true, 170.0, 180.0),
    ap("DTW", 42.2162, -83.3554, -5, true, 220.0, 210.0),
    ap("EWR", 40.6895, -74.1745, -5, true, 40.0, 40.0),
    ap("FLL", 26.0742, -80.1506, -5, true, 100.0, 100.0),
    ap("HNL", 21.3245, -157.9251, -10, false, 80.0, 80.0),
    ap("IAD", 38.9531, -77.4565, -5, true, 10.0, 300.0),
    ap("IAH", 29.9902, -95.3368, -6, true, 260.0, 150.0),
    ap("JFK", 40.6413, -73.7781, -5, true, 40.0, 310.0),
    ap("LAS", 36.0840, -115.1537, -8, true, 260.0, 10.0),
    ap("LAX", 33.9416, -118.4085, -8, true, 250.0, 250.0),
    ap("LGA", 40.7769, -73.8740, -5, true, 220.0, 130.0),
    ap("MCO", 28.4312, -81.3081, -5, true, 180.0, 180.0),
    ap("MDW", 41.7868, -87.7522, -6, true, 310.0, 310.0),
    ap("MEM", 35.0424, -89.9767, -6, true, 180.0, 180.0),
    ap("MIA", 25.7959, -80.2870, -5, true, 90.0, 80.0),
    ap("MSP", 44.8848, -93.2223, -6, true, 300.0, 300.0),
    ap("ORD", 41.9742, -87.9073, -6, true, 270.0, 280.0),
    ap("PHL", 39.8744, -75.2424, -5, true, 270.0, 270.0),
    ap("PHX", 33.4352, -112.0101, -7, false, 260.0, 260.0),
    ap("SAN", 32.7338, -117.1933, -8, true, 270.0, 270.0),
    ap("SEA", 47.4502, -122.3088, -8, true, 160.0, 160.0),
    ap("SFO", 37.6213, -122.3790, -8, true, 280.0, 10.0),
    ap("SLC", 40.7899, -111.9791, -7, true, 340.0, 340.0),
    ap("TPA", 27.9755, -82.5332, -5, true, 10.0, 10.0),
];

pub fn lookup(code: &str) -> Option<&'static AirportInfo> {
    AIRPORTS.iter().find(|a| a.code == code)
}

pub fn code_of(id: usize) -> AirportCode {
    AirportCode::new(AIRPORTS[id].code).expect("table codes are valid")
}
