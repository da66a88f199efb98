mod common;

use common::{closed_port_url, StubServer};
use eventloc::agents::EventTimeline;
use eventloc::clients::{
    ClientError, ForwardGeocoder, GeocodeResult, HttpGeocoder, HttpGeocoderConfig, HttpImagery,
    HttpImageryConfig, HttpSettings, ImageryProvider,
};
use eventloc::geo::{GeoBoundingBox, GeoCoordinate};

fn fast() -> HttpSettings {
    HttpSettings {
        timeout_secs: 5.0,
        retries: 1,
        max_in_flight: 2,
        backoff_ms: 1,
    }
}

fn geocoder(url: &str, token_env: &str) -> HttpGeocoder {
    HttpGeocoder::new(HttpGeocoderConfig {
        endpoint: format!("{url}/geocode"),
        token_env: token_env.into(),
        http: fast(),
    })
}

#[test]
fn geocoder_parses_stub_payload() {
    let server = StubServer::fixed(
        200,
        r#"{"type":"FeatureCollection","features":[
            {"place_name":"Springfield","center":[-89.65,39.8],"bbox":[-89.8,39.7,-89.5,39.9]},
            {"place_name":"Springfield, MO","center":[-93.3,37.2],"bbox":[-93.5,37.0,-93.1,37.4]}]}"#,
    );
    std::env::set_var("EVENTLOC_TEST_GEOCODE_TOKEN", "s3cret");
    let g = geocoder(&server.url, "EVENTLOC_TEST_GEOCODE_TOKEN");
    let r = g.geocode("Springfield").unwrap().unwrap();
    assert_eq!(
        r,
        GeocodeResult::new(
            GeoCoordinate::new(39.8, -89.65).unwrap(),
            GeoBoundingBox::new(39.7, 39.9, -89.8, -89.5).unwrap()
        )
        .unwrap()
    );
    let reqs = server.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].method, "GET");
    assert!(reqs[0].target.starts_with("/geocode?q=Springfield"), "{}", reqs[0].target);
    assert_eq!(reqs[0].header("authorization"), Some("Bearer s3cret"));
}

#[test]
fn geocoder_not_found_and_errors() {
    let empty = StubServer::fixed(200, r#"{"features":[]}"#);
    assert_eq!(geocoder(&empty.url, "UNSET_TOKEN_VAR").geocode("Xyzzyville").unwrap(), None);

    let missing = StubServer::fixed(404, "{}");
    assert_eq!(geocoder(&missing.url, "UNSET_TOKEN_VAR").geocode("X").unwrap(), None);

    let denied = StubServer::fixed(403, "{}");
    assert!(matches!(
        geocoder(&denied.url, "UNSET_TOKEN_VAR").geocode("X"),
        Err(ClientError::Status { status: 403, .. })
    ));

    let broken = StubServer::fixed(503, "down");
    let err = geocoder(&broken.url, "UNSET_TOKEN_VAR").geocode("X").unwrap_err();
    assert!(err.is_transport(), "{err:?}");
    assert_eq!(broken.requests().len(), 2, "one retry after the first 503");

    let err = geocoder(&closed_port_url(), "UNSET_TOKEN_VAR").geocode("X").unwrap_err();
    assert!(err.is_transport());
}

#[test]
fn geocoder_retries_then_succeeds() {
    let server = StubServer::start(|_, i| {
        if i == 0 {
            (500, "oops".into())
        } else {
            (200, r#"{"features":[{"center":[1.0,2.0]}]}"#.into())
        }
    });
    let r = geocoder(&server.url, "UNSET_TOKEN_VAR").geocode("P").unwrap().unwrap();
    assert_eq!(r.coordinate, GeoCoordinate::new(2.0, 1.0).unwrap());
}

fn imagery(url: &str) -> HttpImagery {
    HttpImagery::new(imagery_config(url))
}

fn imagery_config(url: &str) -> HttpImageryConfig {
    HttpImageryConfig {
        endpoint: format!("{url}/search"),
        window_deg: 0.05,
        limit: 50,
        source_label: "catalog".into(),
        token_env: None,
        download_dir: None,
        http: fast(),
    }
}

fn timeline() -> EventTimeline {
    EventTimeline::new("2024-03-01".parse().unwrap(), "2024-03-31".parse().unwrap()).unwrap()
}

#[test]
fn catalog_scenes_come_back_sorted() {
    let server = StubServer::fixed(
        200,
        r#"{"type":"FeatureCollection","features":[
          {"id":"c","properties":{"datetime":"2024-03-20T10:00:00Z","eo:cloud_cover":40},"assets":{"visual":{"href":"https://x/c.tif"}}},
          {"id":"a","properties":{"datetime":"2024-03-02T10:00:00Z","eo:cloud_cover":5},"assets":{"visual":{"href":"https://x/a.tif"}}},
          {"id":"b","properties":{"datetime":"2024-03-11T10:00:00Z","eo:cloud_cover":0},"assets":{"thumbnail":{"href":"https://x/b.png"}}}
        ]}"#,
    );
    let c = GeoCoordinate::new(48.85, 2.35).unwrap();
    let seq = imagery(&server.url).fetch(c, &timeline()).unwrap();
    let ids: Vec<&str> = seq.frames.iter().map(|f| f.scene_id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    assert_eq!(seq.frames[2].cloud_fraction, 0.4);
    assert_eq!(seq.frames[1].image_ref, "https://x/b.png");
    assert!(seq.frames.iter().all(|f| f.planted_event.is_none()));
    seq.validate().unwrap();

    let req = &server.requests()[0];
    assert_eq!(req.method, "POST");
    let body = req.json();
    assert_eq!(body["limit"], 50);
    assert_eq!(body["datetime"], "2024-03-01T00:00:00Z/2024-03-31T23:59:59Z");
    let bbox: Vec<f64> = serde_json::from_value(body["bbox"].clone()).unwrap();
    assert!((bbox[0] - 2.30).abs() < 1e-9 && (bbox[3] - 48.90).abs() < 1e-9);
}

#[test]
fn empty_catalog_is_an_empty_sequence() {
    let server = StubServer::fixed(200, r#"{"features":[]}"#);
    let c = GeoCoordinate::new(0.0, 0.0).unwrap();
    let seq = imagery(&server.url).fetch(c, &timeline()).unwrap();
    assert!(seq.is_empty());
}

#[test]
fn catalog_transport_failure() {
    let c = GeoCoordinate::new(0.0, 0.0).unwrap();
    assert!(imagery(&closed_port_url())
        .fetch(c, &timeline())
        .unwrap_err()
        .is_transport());
}

#[test]
fn catalog_download_writes_local_files() {
    let files = StubServer::fixed(200, "PIXELS");
    let href = format!("{}/files/a.tif", files.url);
    let catalog = StubServer::fixed(
        200,
        format!(
            r#"{{"features":[{{"id":"../a","properties":{{"datetime":"2024-03-02T10:00:00Z"}},"assets":{{"visual":{{"href":"{href}"}}}}}}]}}"#
        ),
    );
    let dir = tempfile::tempdir().unwrap();
    let img = HttpImagery::new(HttpImageryConfig {
        download_dir: Some(dir.path().to_path_buf()),
        ..imagery_config(&catalog.url)
    });
    let seq = img
        .fetch(GeoCoordinate::new(1.0, 1.0).unwrap(), &timeline())
        .unwrap();
    assert_eq!(seq.len(), 1);
    let local = std::path::Path::new(&seq.frames[0].image_ref);
    assert_eq!(local.parent().unwrap(), dir.path());
    assert_eq!(std::fs::read_to_string(local).unwrap(), "PIXELS");
    assert_eq!(files.requests()[0].target, "/files/a.tif");
}
