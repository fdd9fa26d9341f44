//! Labeled synthetic arrivals for three traffic classes.
//!
//! Each track is flown by a small kinematic integrator: pure-pursuit steering
//! with a turn-rate limit, a speed schedule, and a constant descent rate,
//! sampled once per `sample_interval_s` with Gaussian position, course and
//! speed noise. Ground-truth classes go to a separate labels table so they
//! never appear in the track records.
//!
//! * helicopters fly curved, low paths to a pad off the runway and stop there;
//! * general aviation intercepts the extended centerline and lands;
//! * commercial traffic flies a long, stabilized straight-in final.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::trackdata::{
    window_arrival, AircraftClass, LocalFrame, RegistrationRecord, Runway, Track, TrackPoint, FT_PER_KM, KM_PER_NM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackClass {
    Helicopter,
    #[serde(rename = "ga")]
    GeneralAviation,
    Commercial,
}

impl TrackClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Helicopter => "helicopter",
            Self::GeneralAviation => "ga",
            Self::Commercial => "commercial",
        }
    }
}

impl fmt::Display for TrackClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrackClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "helicopter" => Ok(Self::Helicopter),
            "ga" | "general_aviation" => Ok(Self::GeneralAviation),
            "commercial" => Ok(Self::Commercial),
            other => Err(format!("unknown track class {other:?}")),
        }
    }
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
}

impl Band {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.max == self.min {
            self.min
        } else {
            Uniform::new_inclusive(self.min, self.max).sample(rng)
        }
    }

    fn valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassKinematics {
    pub speed_kt: Band,
    pub descent_fpm: Band,
    pub turn_rate_dps: Band,
    /// Standard deviation of reported position noise (ft).
    pub alignment_noise_ft: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub helicopters: usize,
    pub general_aviation: usize,
    pub commercial: usize,
    pub airport: String,
    pub runway: Runway,
    pub helicopter: ClassKinematics,
    pub ga: ClassKinematics,
    pub airline: ClassKinematics,
    pub sample_interval_s: f64,
    pub start_time: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            helicopters: 100,
            general_aviation: 100,
            commercial: 100,
            airport: "DVT".into(),
            runway: Runway {
                runway_id: "07R".into(),
                threshold_lat: 33.6836,
                threshold_lon: -112.0867,
                threshold_elev: 1476.0,
                centerline_course: 70.0,
                length: 8196.0,
            },
            helicopter: ClassKinematics {
                speed_kt: Band::new(40.0, 120.0),
                descent_fpm: Band::new(300.0, 800.0),
                turn_rate_dps: Band::new(1.5, 5.0),
                alignment_noise_ft: 60.0,
            },
            ga: ClassKinematics {
                speed_kt: Band::new(60.0, 140.0),
                descent_fpm: Band::new(400.0, 800.0),
                turn_rate_dps: Band::new(2.0, 4.0),
                alignment_noise_ft: 100.0,
            },
            airline: ClassKinematics {
                speed_kt: Band::new(120.0, 180.0),
                descent_fpm: Band::new(600.0, 900.0),
                turn_rate_dps: Band::new(1.0, 3.0),
                alignment_noise_ft: 30.0,
            },
            sample_interval_s: 1.0,
            start_time: 1_569_888_000.0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("invalid scenario: {0}")]
pub struct ScenarioError(pub String);

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.runway.validate().map_err(ScenarioError)?;
        for (name, k) in [("helicopter", &self.helicopter), ("ga", &self.ga), ("airline", &self.airline)] {
            if !(k.speed_kt.valid() && k.descent_fpm.valid() && k.turn_rate_dps.valid()) {
                return Err(ScenarioError(format!("{name}: bands need finite min <= max")));
            }
            if !(k.speed_kt.min > 0.0 && k.turn_rate_dps.min > 0.0 && k.descent_fpm.min >= 0.0) {
                return Err(ScenarioError(format!("{name}: speeds and turn rates must be positive")));
            }
            if !(k.alignment_noise_ft >= 0.0) {
                return Err(ScenarioError(format!("{name}: noise must be >= 0")));
            }
        }
        if !(self.sample_interval_s > 0.0 && self.sample_interval_s <= 5.0) {
            return Err(ScenarioError("sample interval must be in (0, 5] s".into()));
        }
        Ok(())
    }
}

/// Generated tracks, their classes, and a registration snapshot covering
/// most of the aircraft.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub tracks: Vec<Track>,
    pub labels: Vec<(String, TrackClass)>,
    pub registration: Vec<RegistrationRecord>,
    /// Runways referenced by the tracks (the landing runway and its reciprocal).
    pub runways: Vec<Runway>,
}

/// Helicopter type designators used by the generator.
pub const HELICOPTER_TYPES: [&str; 7] = ["EC30", "AS50", "R44", "B407", "EC35", "S76", "H60"];

/// `(type designator, model, manufacturer)`.
const HELI_MODELS: [(&str, &str, &str); 5] = [
    ("EC30", "EC130 T2", "EUROCOPTER"),
    ("AS50", "AS350 B3", "EUROCOPTER"),
    ("R44", "R44 II", "ROBINSON"),
    ("B407", "407", "BELL"),
    ("EC35", "EC135 P2+", "EUROCOPTER"),
];
const GA_MODELS: [(&str, &str, &str); 4] = [
    ("C172", "172S", "CESSNA"),
    ("PA28", "PA-28-181", "PIPER"),
    ("SR22", "SR22", "CIRRUS"),
    ("BE36", "A36", "BEECH"),
];
const AIRLINE_MODELS: [(&str, &str, &str); 4] = [
    ("B738", "737-823", "BOEING"),
    ("A320", "A320-214", "AIRBUS"),
    ("E75L", "ERJ 170-200 LR", "EMBRAER"),
    ("CRJ9", "CL-600-2D24", "BOMBARDIER"),
];
const AIRLINES: [&str; 4] = ["AAL", "SWA", "UAL", "SKW"];

/// Reciprocal end of a runway.
pub fn reciprocal(rw: &Runway) -> Runway {
    let frame = rw.frame();
    let u = rw.centerline_course.to_radians();
    let len_km = rw.length / FT_PER_KM;
    let (lat, lon) = frame.to_geodetic(len_km * u.sin(), len_km * u.cos());
    let num: u32 = rw.runway_id.trim_end_matches(char::is_alphabetic).parse().unwrap_or(0);
    let side = match rw.runway_id.chars().last() {
        Some('R') => "L",
        Some('L') => "R",
        Some('C') => "C",
        _ => "",
    };
    let opp = if num == 0 { 0 } else { (num + 17) % 36 + 1 };
    Runway {
        runway_id: format!("{opp:02}{side}"),
        threshold_lat: lat,
        threshold_lon: lon,
        threshold_elev: rw.threshold_elev,
        centerline_course: (rw.centerline_course + 180.0) % 360.0,
        length: rw.length,
    }
}

#[derive(Debug, Clone, Copy)]
struct State {
    east: f64,
    north: f64,
    heading: f64,
    speed: f64,
    alt: f64,
}

fn bearing_deg(from: (f64, f64), to: (f64, f64)) -> f64 {
    (to.0 - from.0).atan2(to.1 - from.1).to_degrees().rem_euclid(360.0)
}

fn turn_towards(heading: f64, target: f64, max_turn: f64) -> f64 {
    let mut d = (target - heading).rem_euclid(360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    (heading + d.clamp(-max_turn, max_turn)).rem_euclid(360.0)
}

fn advance(s: &mut State, dt: f64) {
    let km = s.speed * KM_PER_NM / 3600.0 * dt;
    let h = s.heading.to_radians();
    s.east += km * h.sin();
    s.north += km * h.cos();
}

fn kmps(kt: f64) -> f64 {
    kt * KM_PER_NM / 3600.0
}

/// Raw flown states (before noise).
struct Flight {
    states: Vec<State>,
}

/// Landing aircraft: steer to a lookahead point on the extended centerline,
/// cross the threshold, then roll out along the runway.
fn fly_landing<R: Rng>(rng: &mut R, spec: &ScenarioSpec, kin: &ClassKinematics, straight_in: bool) -> Flight {
    let rw = &spec.runway;
    let dt = spec.sample_interval_s;
    let u = rw.centerline_course.to_radians();
    let (ue, un) = (u.sin(), u.cos());
    let v0 = kin.speed_kt.sample(rng);
    // stabilized approach: final speed within 20% of the entry speed
    let v_final = Band::new((0.8 * v0).max(kin.speed_kt.min), v0).sample(rng);
    let time_to_go = Uniform::new_inclusive(140.0, 200.0).sample(rng);
    let along0 = kmps(0.5 * (v0 + v_final)) * time_to_go;
    let lateral0 = if straight_in {
        Normal::new(0.0, 0.08).unwrap().sample(rng)
    } else {
        let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        side * Uniform::new_inclusive(0.8, 2.0).sample(rng)
    };
    // start behind the threshold, offset to the right of the course by lateral0
    let east0 = -along0 * ue + lateral0 * un;
    let north0 = -along0 * un - lateral0 * ue;
    let intercept = if straight_in {
        Normal::new(0.0, 2.0).unwrap().sample(rng)
    } else {
        -lateral0.signum() * Uniform::new_inclusive(20.0, 45.0).sample(rng)
    };
    let turn = kin.turn_rate_dps.sample(rng);
    let rate = kin.descent_fpm.sample(rng);
    let crossing_ft = if straight_in { 50.0 } else { 30.0 };
    let alt0 = rw.threshold_elev + crossing_ft + rate * time_to_go / 60.0;
    let lookahead = if straight_in { 2.5 } else { 1.2 };

    let mut s = State {
        east: east0,
        north: north0,
        heading: (rw.centerline_course + intercept).rem_euclid(360.0),
        speed: v0,
        alt: alt0,
    };
    let mut states = vec![s];
    let mut t = 0.0;
    // approach
    loop {
        let along = s.east * ue + s.north * un; // negative before the threshold
        if along >= 0.0 || states.len() > 2000 {
            break;
        }
        let target_along = (along + lookahead).min(0.0);
        let target = (target_along * ue, target_along * un);
        let brg = bearing_deg((s.east, s.north), target);
        s.heading = turn_towards(s.heading, brg, turn * dt);
        let frac = (t / time_to_go).min(1.0);
        s.speed = v0 + (v_final - v0) * frac;
        s.alt = (s.alt - rate / 60.0 * dt).max(rw.threshold_elev + crossing_ft);
        advance(&mut s, dt);
        t += dt;
        states.push(s);
    }
    // rollout
    let rollout = rng.gen_range(10..=20);
    let decel = (s.speed - 30.0).max(0.0) / rollout as f64;
    for _ in 0..rollout {
        s.heading = turn_towards(s.heading, rw.centerline_course, turn * dt);
        s.speed = (s.speed - decel).max(30.0);
        s.alt = rw.threshold_elev;
        advance(&mut s, dt);
        states.push(s);
    }
    Flight { states }
}

/// Helicopter: curved pursuit of a pad off the runway, slowing on approach.
fn fly_helicopter<R: Rng>(rng: &mut R, spec: &ScenarioSpec, kin: &ClassKinematics) -> Flight {
    let rw = &spec.runway;
    let dt = spec.sample_interval_s;
    let u = rw.centerline_course.to_radians();
    let (ue, un) = (u.sin(), u.cos());
    // pad at least ~700 ft from the extended centerline
    let pad = loop {
        let r = Uniform::new_inclusive(0.35, 1.2).sample(rng) * KM_PER_NM;
        let b = Uniform::new(0.0, 360.0f64).sample(rng).to_radians();
        let p = (r * b.sin(), r * b.cos());
        let cross_ft = (p.0 * un - p.1 * ue).abs() * FT_PER_KM;
        if cross_ft > 700.0 {
            break p;
        }
    };
    let v_min = kin.speed_kt.min;
    let v0 = Band::new((v_min + 30.0).min(kin.speed_kt.max), kin.speed_kt.max).sample(rng);
    let time_to_go = Uniform::new_inclusive(140.0, 220.0).sample(rng);
    let dist0 = kmps(0.5 * (v0 + v_min)) * time_to_go * 0.85;
    let away = bearing_deg((0.0, 0.0), pad) + Uniform::new_inclusive(-70.0, 70.0).sample(rng);
    let a = away.to_radians();
    let start = (pad.0 + dist0 * a.sin(), pad.1 + dist0 * a.cos());
    let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let offset = side * Uniform::new_inclusive(30.0, 90.0).sample(rng);
    let turn = kin.turn_rate_dps.sample(rng);
    let rate = kin.descent_fpm.sample(rng);
    let pad_elev = rw.threshold_elev + Uniform::new_inclusive(-20.0, 20.0).sample(rng);
    let agl0 = Uniform::new_inclusive(500.0, 1500.0).sample(rng);
    let decel_km = Uniform::new_inclusive(0.8, 1.6).sample(rng);

    let mut s = State {
        east: start.0,
        north: start.1,
        heading: (bearing_deg(start, pad) + offset).rem_euclid(360.0),
        speed: v0,
        alt: pad_elev + agl0,
    };
    let mut states = vec![s];
    loop {
        let dist = (pad.0 - s.east).hypot(pad.1 - s.north);
        if dist < kmps(s.speed) * dt || states.len() > 2000 {
            break;
        }
        let brg = bearing_deg((s.east, s.north), pad);
        s.heading = turn_towards(s.heading, brg, turn * dt);
        s.speed = v_min + (v0 - v_min) * (dist / decel_km).min(1.0);
        // glide toward the pad, never faster than the class descent rate
        let to_go_s = dist / kmps(s.speed).max(1e-6);
        let needed = (s.alt - pad_elev) / to_go_s.max(dt) * dt;
        s.alt = (s.alt - needed.min(rate / 60.0 * dt)).max(pad_elev);
        advance(&mut s, dt);
        states.push(s);
    }
    Flight { states }
}

struct Identity {
    declared_type: Option<String>,
    callsign: String,
    tail: Option<String>,
    mode_s: Option<String>,
    scratchpad: bool,
    registration: Option<RegistrationRecord>,
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &'a [(&'a str, &'a str, &'a str)]) -> (&'a str, &'a str, &'a str) {
    *xs.choose(rng).unwrap()
}

fn n_number(index: usize) -> String {
    const LETTERS: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ";
    let a = LETTERS[index % LETTERS.len()] as char;
    let b = LETTERS[(index / LETTERS.len()) % LETTERS.len()] as char;
    format!("N{}{b}{a}", 100 + index / (LETTERS.len() * LETTERS.len()) * 7 + index % 97)
}

fn identity<R: Rng>(rng: &mut R, class: TrackClass, index: usize) -> Identity {
    let tail = n_number(index);
    let mode_s = format!("{:06X}", 0xA0_0000 + index * 4099 % 0x5F_FFFF);
    let (models, class_reg): (&[_], _) = match class {
        TrackClass::Helicopter => (&HELI_MODELS, AircraftClass::Rotorcraft),
        TrackClass::GeneralAviation => (&GA_MODELS, AircraftClass::FixedWing),
        TrackClass::Commercial => (&AIRLINE_MODELS, AircraftClass::FixedWing),
    };
    let (designator, model, maker) = pick(rng, models);
    let roll: f64 = rng.gen();
    let declared_type = match class {
        TrackClass::Helicopter => {
            if roll < 0.35 {
                None
            } else if roll < 0.60 {
                Some(if rng.gen_bool(0.5) { "HELO" } else { "HELI" }.to_string())
            } else if roll < 0.90 {
                Some(designator.to_string())
            } else {
                Some("FLGT".to_string())
            }
        }
        TrackClass::GeneralAviation => (roll >= 0.5).then(|| designator.to_string()),
        TrackClass::Commercial => Some(designator.to_string()),
    };
    let callsign = match class {
        TrackClass::Commercial => format!("{}{}", AIRLINES[index % AIRLINES.len()], 100 + rng.gen_range(0..900)),
        _ => tail.clone(),
    };
    let (p_tail, p_mode_s, p_scratch) = match class {
        TrackClass::Helicopter => (0.6, 0.8, 0.05),
        TrackClass::GeneralAviation => (0.6, 0.7, 0.3),
        TrackClass::Commercial => (0.5, 1.0, 0.8),
    };
    let has_tail = rng.gen_bool(p_tail);
    let has_mode_s = rng.gen_bool(p_mode_s);
    let registered = rng.gen_bool(0.9);
    Identity {
        declared_type,
        callsign,
        tail: has_tail.then(|| tail.clone()),
        mode_s: has_mode_s.then(|| mode_s.clone()),
        scratchpad: rng.gen_bool(p_scratch),
        registration: registered.then(|| RegistrationRecord {
            n_number: tail,
            mode_s_code: Some(mode_s),
            model: model.to_string(),
            manufacturer: maker.to_string(),
            aircraft_class: class_reg,
            type_designator: Some(designator.to_string()),
        }),
    }
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

fn render(spec: &ScenarioSpec, kin: &ClassKinematics, flight: &Flight, t0: f64, rng: &mut ChaCha8Rng) -> Vec<TrackPoint> {
    let frame = LocalFrame::new(spec.runway.threshold_lat, spec.runway.threshold_lon);
    let pos_noise = Normal::new(0.0, kin.alignment_noise_ft / FT_PER_KM).unwrap();
    let course_noise = Normal::new(0.0, 1.0).unwrap();
    let speed_noise = Normal::new(0.0, 1.0).unwrap();
    let alt_noise = Normal::new(0.0, 15.0).unwrap();
    flight
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (lat, lon) = frame.to_geodetic(s.east + pos_noise.sample(rng), s.north + pos_noise.sample(rng));
            let course = round_to((s.heading + course_noise.sample(rng)).rem_euclid(360.0), 0.1) % 360.0;
            TrackPoint {
                t: t0 + i as f64 * spec.sample_interval_s,
                lat: round_to(lat, 1e-6),
                lon: round_to(lon, 1e-6),
                alt: round_to(s.alt + alt_noise.sample(rng), 1.0),
                course,
                gs: round_to((s.speed + speed_noise.sample(rng)).max(0.0), 0.1),
            }
        })
        .collect()
}

fn generate_one(spec: &ScenarioSpec, index: usize, class: TrackClass) -> (Track, Option<RegistrationRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64 + 1);
    let kin = match class {
        TrackClass::Helicopter => &spec.helicopter,
        TrackClass::GeneralAviation => &spec.ga,
        TrackClass::Commercial => &spec.airline,
    };
    let id = identity(&mut rng, class, index);
    let t0 = spec.start_time + index as f64 * 600.0;
    for _ in 0..100 {
        let flight = match class {
            TrackClass::Helicopter => fly_helicopter(&mut rng, spec, kin),
            TrackClass::GeneralAviation => fly_landing(&mut rng, spec, kin, false),
            TrackClass::Commercial => fly_landing(&mut rng, spec, kin, true),
        };
        let points = render(spec, kin, &flight, t0, &mut rng);
        let track = Track {
            track_id: format!("T{:05}", index + 1),
            callsign: Some(id.callsign.clone()),
            mode_s: id.mode_s.clone(),
            tail_number: id.tail.clone(),
            declared_type: id.declared_type.clone(),
            arrival_airport: Some(spec.airport.clone()),
            runway_id: Some(spec.runway.runway_id.clone()),
            scratchpad_runway: Some(id.scratchpad),
            points,
        };
        // keep only tracks that are valid and windowable with margin
        if track.points.len() >= 120
            && track.validate().is_ok()
            && window_arrival(&track, &spec.runway).is_ok_and(|w| w.closest_index + 1 >= 110)
        {
            return (track, id.registration);
        }
    }
    panic!("scenario parameters never produced a usable {class} track");
}

/// Generates the scenario. Track `i` draws from its own random stream keyed by
/// `(seed, i)`, so output does not depend on the worker count.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario, ScenarioError> {
    spec.validate()?;
    let mut classes: Vec<TrackClass> = std::iter::repeat_n(TrackClass::Helicopter, spec.helicopters)
        .chain(std::iter::repeat_n(TrackClass::GeneralAviation, spec.general_aviation))
        .chain(std::iter::repeat_n(TrackClass::Commercial, spec.commercial))
        .collect();
    let mut order_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order_rng.set_stream(0);
    classes.shuffle(&mut order_rng);

    let made: Vec<(Track, Option<RegistrationRecord>)> = classes
        .par_iter()
        .enumerate()
        .map(|(i, &c)| generate_one(spec, i, c))
        .collect();
    let labels = made.iter().zip(&classes).map(|((t, _), &c)| (t.track_id.clone(), c)).collect();
    let mut registration = Vec::new();
    let mut tracks = Vec::with_capacity(made.len());
    for (t, r) in made {
        registration.extend(r);
        tracks.push(t);
    }
    Ok(Scenario {
        tracks,
        labels,
        registration,
        runways: vec![spec.runway.clone(), reciprocal(&spec.runway)],
    })
}

pub fn write_labels<W: std::io::Write>(w: W, labels: &[(String, TrackClass)]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["track_id", "class"])?;
    for (id, c) in labels {
        wtr.write_record([id.as_str(), c.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_labels<R: std::io::Read>(r: R) -> Result<Vec<(String, TrackClass)>, String> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.len() != 2 {
            return Err(format!("expected 2 fields, found {}", rec.len()));
        }
        out.push((rec[0].to_string(), rec[1].parse()?));
    }
    Ok(out)
}

pub fn write_registration<W: std::io::Write>(w: W, records: &[RegistrationRecord]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["n_number", "mode_s_code", "model", "manufacturer", "aircraft_class", "type_designator"])?;
    for r in records {
        wtr.write_record([
            r.n_number.as_str(),
            r.mode_s_code.as_deref().unwrap_or(""),
            r.model.as_str(),
            r.manufacturer.as_str(),
            r.aircraft_class.as_str(),
            r.type_designator.as_deref().unwrap_or(""),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64, h: usize, g: usize, c: usize) -> ScenarioSpec {
        ScenarioSpec {
            seed,
            helicopters: h,
            general_aviation: g,
            commercial: c,
            ..ScenarioSpec::default()
        }
    }

    #[test]
    fn empty_counts() {
        let s = generate(&small(1, 0, 0, 0)).unwrap();
        assert!(s.tracks.is_empty() && s.labels.is_empty());
    }

    #[test]
    fn deterministic_bytes() {
        let a = generate(&small(3, 4, 4, 4)).unwrap();
        let b = generate(&small(3, 4, 4, 4)).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        crate::trackdata::write_tracks(&mut ba, &a.tracks).unwrap();
        crate::trackdata::write_tracks(&mut bb, &b.tracks).unwrap();
        assert_eq!(ba, bb);
        assert_eq!(a.labels, b.labels);
        let c = generate(&small(4, 4, 4, 4)).unwrap();
        assert_ne!(a.tracks, c.tracks);
    }

    #[test]
    fn labels_stay_out_of_tracks() {
        let s = generate(&small(5, 3, 3, 3)).unwrap();
        let mut buf = Vec::new();
        crate::trackdata::write_tracks(&mut buf, &s.tracks).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("helicopter") && !text.contains("commercial"));
    }

    #[test]
    fn invalid_bands_rejected() {
        let mut spec = small(1, 1, 0, 0);
        spec.helicopter.speed_kt = Band::new(90.0, 40.0);
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn reciprocal_runway() {
        let rw = ScenarioSpec::default().runway;
        let r = reciprocal(&rw);
        assert_eq!(r.runway_id, "25L");
        assert_eq!(r.centerline_course, 250.0);
        let (e, n) = rw.frame().to_local(r.threshold_lat, r.threshold_lon);
        assert!((e.hypot(n) * FT_PER_KM - rw.length).abs() < 1.0);
    }

    #[test]
    fn labels_csv_round_trip() {
        let labels = vec![("T1".to_string(), TrackClass::Helicopter), ("T2".to_string(), TrackClass::GeneralAviation)];
        let mut buf = Vec::new();
        write_labels(&mut buf, &labels).unwrap();
        assert_eq!(read_labels(buf.as_slice()).unwrap(), labels);
    }
}
