//! Synthetic benchmark with planted ground truth.
//!
//! Articles come in ten layouts (by index modulo 10) that decide which
//! method can find the planted event:
//!
//! | k     | mentions                          | centroid | GIPSY | agentic |
//! |-------|-----------------------------------|----------|-------|---------|
//! | 0, 1  | site ×2                           | yes      | yes   | yes     |
//! | 2, 3  | site ×3, enclosing region ×1      | no       | yes   | yes     |
//! | 4, 5  | decoy ×3, site ×2, region ×2      | no       | yes   | yes     |
//! | 6–8   | decoy ×3, site ×1                 | no       | no    | yes     |
//! | 9     | two places, no event planted      | no       | no    | no      |
//!
//! The scripted article agent proposes places in order of relevance, the
//! decoy first where there is one; k = 6 starts with a name that cannot be
//! geocoded.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{ArticleFixture, ProposalFixture};
use crate::clients::PlantedEvent;
use crate::config::{
    AgentSettings, GeocoderSettings, ImagerySettings, RunConfig, SyntheticImagerySettings,
};
use crate::extraction::{ArticleRecord, GazetteerEntry};
use crate::geo::{GeoBoundingBox, GeoCoordinate};
use crate::pipeline::{Method, DEFAULT_MAX_ATTEMPTS};

pub const MAX_BENCHMARK_ARTICLES: usize = 100;

const SYLLABLES: &[&str] = &[
    "ka", "lo", "ven", "tar", "mi", "sor", "bel", "dun", "rha", "qui", "zen", "pol", "mar", "fen",
    "tis", "gor", "ul", "bra", "nev", "osk",
];

const EVENTS: &[&str] = &[
    "flood",
    "wildfire",
    "landslide",
    "dam construction project",
    "volcanic eruption",
    "port expansion",
    "mine collapse",
    "reservoir drawdown",
];

const MENTIONS: &[&str] = &[
    "Residents of {} described the damage to reporters.",
    "Emergency crews were sent to {} on Tuesday.",
    "Officials in {} said the situation was being monitored.",
    "Aid groups gathered supplies near {}.",
    "Local radio in {} carried hourly updates.",
    "Farmers around {} reported losses.",
];

const UNGEOCODABLE: &str = "the northern floodplain";

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub articles: Vec<ArticleRecord>,
    pub gazetteer: Vec<GazetteerEntry>,
    pub planted: Vec<PlantedEvent>,
    pub fixtures: BTreeMap<String, ArticleFixture>,
    /// Detections each method should make, by construction.
    pub expected: BTreeMap<Method, usize>,
    pub seed: u64,
}

fn name(rng: &mut ChaCha8Rng, used: &mut HashSet<String>) -> String {
    loop {
        let n = rng.random_range(2..=3);
        let raw: String = (0..n)
            .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
            .collect();
        let mut chars = raw.chars();
        let first = chars.next().expect("non-empty").to_ascii_uppercase();
        let candidate = format!("{first}{}", chars.as_str());
        if candidate.len() >= 5 && used.insert(candidate.to_lowercase()) {
            return candidate;
        }
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn place(name: &str, lat: f64, lon: f64, half: f64) -> GazetteerEntry {
    let (lat, lon) = (round4(lat), round4(lon));
    GazetteerEntry {
        name: name.to_string(),
        coordinate: GeoCoordinate::new(lat, lon).expect("benchmark coordinates are valid"),
        bbox: GeoBoundingBox::new(
            round4(lat - half),
            round4(lat + half),
            round4(lon - half),
            round4(lon + half),
        )
        .expect("benchmark boxes are valid"),
    }
}

/// Region whose box spans [-1°, +5°] around the site in both axes.
fn region(name: &str, site_lat: f64, site_lon: f64) -> GazetteerEntry {
    let (s, n) = (round4(site_lat - 1.0), round4(site_lat + 5.0));
    let (w, e) = (round4(site_lon - 1.0), round4(site_lon + 5.0));
    GazetteerEntry {
        name: name.to_string(),
        coordinate: GeoCoordinate::new((s + n) / 2.0, (w + e) / 2.0).expect("valid"),
        bbox: GeoBoundingBox::new(s, n, w, e).expect("valid"),
    }
}

fn proposal(name: &str, published: NaiveDate, rationale: &str) -> ProposalFixture {
    ProposalFixture {
        name: name.to_string(),
        start: Some(published - Duration::days(10)),
        end: Some(published + Duration::days(20)),
        rationale: Some(rationale.to_string()),
    }
}

/// Builds `count` articles (at most [`MAX_BENCHMARK_ARTICLES`]) from `seed`.
pub fn generate_benchmark(count: usize, seed: u64) -> Result<Benchmark, String> {
    if count > MAX_BENCHMARK_ARTICLES {
        return Err(format!(
            "at most {MAX_BENCHMARK_ARTICLES} articles keep every site isolated, got {count}"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = HashSet::new();
    let day0 = NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date");
    let mut bench = Benchmark {
        articles: Vec::new(),
        gazetteer: Vec::new(),
        planted: Vec::new(),
        fixtures: BTreeMap::new(),
        expected: Method::ALL.iter().map(|m| (*m, 0)).collect(),
        seed,
    };
    for i in 0..count {
        let (group, k) = (i / 10, i % 10);
        // sites are at least 12° apart, decoys and regions stay within 5°
        let lat = round4(-55.0 + 12.0 * group as f64 + rng.random_range(0.0..1.0));
        let lon = round4(-165.0 + 33.0 * k as f64 + rng.random_range(0.0..1.0));
        let published = day0 + Duration::days(3 * i as i64);
        let id = format!("bench-{i:03}");
        let kind = EVENTS[rng.random_range(0..EVENTS.len())];

        let site = name(&mut rng, &mut used);
        let mut mentions: Vec<(String, usize)> = Vec::new();
        let mut proposals = Vec::new();
        let mut planted = true;
        match k {
            0 | 1 => {
                bench.gazetteer.push(place(&site, lat, lon, 0.02));
                mentions.push((site.clone(), 2));
                proposals.push(proposal(&site, published, "the only place named"));
            }
            2 | 3 => {
                let reg = name(&mut rng, &mut used);
                bench.gazetteer.push(place(&site, lat, lon, 0.02));
                bench.gazetteer.push(region(&reg, lat, lon));
                mentions.extend([(site.clone(), 3), (reg.clone(), 1)]);
                proposals.push(proposal(&site, published, "most specific place"));
                proposals.push(proposal(&reg, published, "surrounding region"));
            }
            4 | 5 => {
                let decoy = name(&mut rng, &mut used);
                let reg = name(&mut rng, &mut used);
                bench.gazetteer.push(place(&site, lat, lon, 0.02));
                bench.gazetteer.push(place(&decoy, lat - 4.0, lon - 4.0, 0.02));
                bench.gazetteer.push(region(&reg, lat, lon));
                mentions.extend([(decoy.clone(), 3), (site.clone(), 2), (reg.clone(), 2)]);
                proposals.push(proposal(&decoy, published, "most mentioned place"));
                proposals.push(proposal(&site, published, "next most mentioned"));
                proposals.push(proposal(&reg, published, "surrounding region"));
            }
            6..=8 => {
                let decoy = name(&mut rng, &mut used);
                bench.gazetteer.push(place(&site, lat, lon, 0.02));
                bench.gazetteer.push(place(&decoy, lat + 1.0, lon + 1.0, 0.02));
                mentions.extend([(decoy.clone(), 3), (site.clone(), 1)]);
                if k == 6 {
                    proposals.push(proposal(UNGEOCODABLE, published, "described landform"));
                }
                proposals.push(proposal(&decoy, published, "most mentioned place"));
                proposals.push(proposal(&site, published, "also named in the article"));
            }
            _ => {
                let other = name(&mut rng, &mut used);
                bench.gazetteer.push(place(&site, lat, lon, 0.02));
                bench.gazetteer.push(place(&other, lat + 1.0, lon + 1.0, 0.02));
                mentions.extend([(site.clone(), 2), (other.clone(), 1)]);
                proposals.push(proposal(&site, published, "most mentioned place"));
                proposals.push(proposal(&other, published, "also named in the article"));
                planted = false;
            }
        }
        if planted {
            bench.planted.push(PlantedEvent {
                lat,
                lon,
                start: published - Duration::days(6),
                end: published + Duration::days(8),
                label: format!("{id}: {kind}"),
            });
        }
        let (c, g, a) = match k {
            0 | 1 => (1, 1, 1),
            2..=5 => (0, 1, 1),
            6..=8 => (0, 0, 1),
            _ => (0, 0, 0),
        };
        *bench.expected.get_mut(&Method::Centroid).expect("present") += c;
        *bench.expected.get_mut(&Method::Gipsy).expect("present") += g;
        *bench.expected.get_mut(&Method::Agentic).expect("present") += a;

        let mut sentences: Vec<String> = mentions
            .iter()
            .flat_map(|(n, times)| std::iter::repeat_n(n.clone(), *times))
            .map(|n| MENTIONS[rng.random_range(0..MENTIONS.len())].replace("{}", &n))
            .collect();
        sentences.shuffle(&mut rng);
        let text = format!("Reports describe a {kind} this week. {}", sentences.join(" "));
        bench.articles.push(ArticleRecord {
            id: id.clone(),
            text,
            published,
            source_url: None,
        });
        bench.fixtures.insert(
            id,
            ArticleFixture {
                proposals,
                ..ArticleFixture::default()
            },
        );
    }
    Ok(bench)
}

impl Benchmark {
    /// Config pointing at the files written by [`Benchmark::write`].
    pub fn config(&self) -> RunConfig {
        RunConfig {
            gazetteer: "gazetteer.tsv".into(),
            geocoder: GeocoderSettings::Gazetteer {},
            imagery: ImagerySettings::Synthetic(SyntheticImagerySettings {
                planted_events: Some("planted.json".into()),
                cadence_days: 7,
                radius_deg: 0.05,
                source_label: "synthetic".into(),
            }),
            agents: AgentSettings::Scripted {
                fixtures: "fixtures.json".into(),
            },
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            concurrency: 4,
            seed: self.seed,
            requeue_infra_errors: false,
            output_dir: None,
        }
    }

    /// Writes `corpus.jsonl`, `gazetteer.tsv`, `planted.json`,
    /// `fixtures.json`, `expected.json` and `config.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut corpus = Vec::new();
        for a in &self.articles {
            serde_json::to_writer(&mut corpus, a)?;
            corpus.push(b'\n');
        }
        fs::write(dir.join("corpus.jsonl"), corpus)?;

        let mut tsv = String::from("# name\tlat\tlon\tsouth\tnorth\twest\teast\n");
        for e in &self.gazetteer {
            tsv.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.name,
                e.coordinate.lat(),
                e.coordinate.lon(),
                e.bbox.south(),
                e.bbox.north(),
                e.bbox.west(),
                e.bbox.east()
            ));
        }
        fs::write(dir.join("gazetteer.tsv"), tsv)?;

        fs::write(dir.join("planted.json"), pretty(&self.planted))?;
        fs::write(dir.join("fixtures.json"), pretty(&self.fixtures))?;
        let expected: BTreeMap<&str, usize> =
            self.expected.iter().map(|(m, n)| (m.as_str(), *n)).collect();
        fs::write(dir.join("expected.json"), pretty(&expected))?;
        fs::write(dir.join("config.json"), pretty(&self.config()))
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("benchmark data serializes");
    s.push('\n');
    s
}
