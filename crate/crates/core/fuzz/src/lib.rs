// SPDX-License-Identifier: Apache-2.0

//! Fuzz entry points. Each takes raw input, must not panic, and checks that
//! whatever parses also survives a write/parse cycle unchanged.

use std::io::Cursor;
use std::str;

use adf_core::experiment::Budget;
use adf_core::flow::{parse_trace as trace, write_trace, SourceSpec};
use adf_core::placement::{parse_placement as placement, PlacementResult};
use adf_core::protocol::{
    decode, encode, read_frame as frame, respond, shared_table, write_frame, Message,
};
use adf_core::rulegen::{parse_rule_file as rule_file, write_rule_file};
use adf_core::topology::{
    load_topology as topology, write_topology, AttackConfig, FilterProfile, VolumeModel,
};
use adf_core::Objective;

fn text<E: std::fmt::Debug>(f: impl Fn(&[u8]) -> Result<Vec<u8>, E>, data: &[u8]) {
    if let Ok(once) = f(data) {
        let twice = f(&once).expect("written output must parse");
        assert_eq!(str::from_utf8(&once), str::from_utf8(&twice));
    }
}

pub fn parse_trace(data: &[u8]) {
    text(
        |d| {
            trace(Cursor::new(d)).map(|t| {
                let mut out = Vec::new();
                write_trace(&t, &mut out).unwrap();
                out
            })
        },
        data,
    );
}

pub fn load_topology(data: &[u8]) {
    text(
        |d| {
            topology(Cursor::new(d)).map(|(t, _)| {
                let mut out = Vec::new();
                write_topology(&t, &mut out).unwrap();
                out
            })
        },
        data,
    );
}

pub fn parse_rule_file(data: &[u8]) {
    text(
        |d| {
            rule_file(Cursor::new(d)).map(|r| {
                let mut out = Vec::new();
                write_rule_file(&r, &mut out).unwrap();
                out
            })
        },
        data,
    );
}

pub fn parse_placement(data: &[u8]) {
    if let Ok(placed) = placement(Cursor::new(data)) {
        let result = PlacementResult {
            placed,
            ..Default::default()
        };
        let mut out = Vec::new();
        result.write(&mut out).unwrap();
        assert_eq!(placement(Cursor::new(out)).unwrap(), result.placed);
    }
}

pub fn decode_message(data: &[u8]) {
    if let Ok(msg) = decode(data) {
        assert_eq!(encode(&msg), data);
    }
}

/// One framed message handed to a node, as a server would.
pub fn read_frame(data: &[u8]) {
    let mut r = data;
    let Ok(body) = frame(&mut r) else { return };
    let mut again = Vec::new();
    write_frame(&mut again, &body).unwrap();
    assert_eq!(frame(&mut again.as_slice()).unwrap(), body);
    let table = shared_table(4);
    let ack = respond(&table, &body, 1_000);
    assert_eq!(decode(&encode(&Message::Ack(ack))), Ok(Message::Ack(ack)));
}

pub fn parse_attack_config(data: &[u8]) {
    text(
        |d| AttackConfig::parse(Cursor::new(d)).map(|c| c.to_string().into_bytes()),
        data,
    );
}

/// Single-value parsers used by the file formats and the command line.
pub fn parse_spec(data: &[u8]) {
    let Ok(s) = str::from_utf8(data) else { return };
    if let Ok(spec) = s.parse::<SourceSpec>() {
        assert_eq!(spec.to_string().parse::<SourceSpec>(), Ok(spec));
    }
    if let Ok(v) = s.parse::<VolumeModel>() {
        assert_eq!(
            v.to_string().parse::<VolumeModel>().map(|w| w.to_string()),
            Ok(v.to_string())
        );
    }
    if let Ok(b) = s.parse::<Budget>() {
        assert!(b.to_string().parse::<Budget>().is_ok());
    }
    let _ = s.parse::<FilterProfile>();
    let _ = s.parse::<Objective>();
}
