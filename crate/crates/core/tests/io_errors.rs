//! File-format validation: malformed rows are reported with their line
//! number, and graphs re-emitted to disk reload identically.

use std::fs;

use triad_core::error::Error;
use triad_core::graph::SECONDS_PER_DAY;
use triad_core::io;

const DAY: i64 = SECONDS_PER_DAY;

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn malformed_row_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let events = write(
        &dir,
        "events.csv",
        "kind,src,dst,timestamp,product_id,category_id,price,quantity\n\
         message,1,2,100,,,,\n\
         trade,1,2,oops,p1,3,9.5,1\n",
    );
    let err = io::read_events(&events, (0, 10 * DAY)).unwrap_err();
    match err {
        Error::Malformed { line, .. } => assert_eq!(line, 3),
        other => panic!("expected Malformed, got {other:?}"),
    }
}

#[test]
fn self_loop_and_window_violations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let events = write(
        &dir,
        "events.csv",
        "kind,src,dst,timestamp,product_id,category_id,price,quantity\n\
         message,4,4,100,,,,\n",
    );
    assert!(matches!(
        io::read_events(&events, (0, 10 * DAY)).unwrap_err(),
        Error::SelfLoop {
            line: 2,
            node: 4,
            ..
        }
    ));

    let events = write(
        &dir,
        "events2.csv",
        "kind,src,dst,timestamp,product_id,category_id,price,quantity\n\
         trade,1,2,999999999,p1,3,9.5,1\n",
    );
    assert!(matches!(
        io::read_events(&events, (0, 10 * DAY)).unwrap_err(),
        Error::OutOfWindow { line: 2, .. }
    ));

    let contacts = write(&dir, "contacts.csv", "u,v\n7,7\n");
    assert!(matches!(
        io::read_contacts(&contacts).unwrap_err(),
        Error::SelfLoop {
            line: 2,
            node: 7,
            ..
        }
    ));
}

#[test]
fn message_rows_with_trade_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let events = write(
        &dir,
        "events.csv",
        "kind,src,dst,timestamp,product_id,category_id,price,quantity\n\
         message,1,2,100,p1,,,\n",
    );
    assert!(io::read_events(&events, (0, 10 * DAY)).is_err());
}

#[test]
fn trade_rows_need_positive_price_and_quantity() {
    let dir = tempfile::tempdir().unwrap();
    let bad_price = write(
        &dir,
        "p.csv",
        "kind,src,dst,timestamp,product_id,category_id,price,quantity\n\
         trade,1,2,100,p1,3,0,1\n",
    );
    assert!(io::read_events(&bad_price, (0, 10 * DAY)).is_err());
    let bad_qty = write(
        &dir,
        "q.csv",
        "kind,src,dst,timestamp,product_id,category_id,price,quantity\n\
         trade,1,2,100,p1,3,2.5,0\n",
    );
    assert!(io::read_events(&bad_qty, (0, 10 * DAY)).is_err());
}

#[test]
fn emitted_files_reload_to_the_same_graph() {
    let dir = tempfile::tempdir().unwrap();
    let events_path = write(
        &dir,
        "events.csv",
        "kind,src,dst,timestamp,product_id,category_id,price,quantity\n\
         trade,10,20,86400,p1,3,9.5,1\n\
         message,20,10,172800,,,,\n\
         trade,10,20,259200,p1,3,9.5,2\n",
    );
    let contacts_path = write(&dir, "contacts.csv", "u,v\n10,20\n30,10\n");
    let g = io::load_dataset(&events_path, &contacts_path, (0, 10 * DAY)).unwrap();

    let mut events_out = Vec::new();
    io::write_events(&mut events_out, &g).unwrap();
    let mut contacts_out = Vec::new();
    io::write_contacts(&mut contacts_out, &g).unwrap();
    let e2 = write(
        &dir,
        "events_rt.csv",
        &String::from_utf8(events_out).unwrap(),
    );
    let c2 = write(
        &dir,
        "contacts_rt.csv",
        &String::from_utf8(contacts_out).unwrap(),
    );
    let g2 = io::load_dataset(&e2, &c2, (0, 10 * DAY)).unwrap();

    assert_eq!(g.num_nodes(), g2.num_nodes());
    assert_eq!(g.num_events(), g2.num_events());
    assert_eq!(g.external_ids(), g2.external_ids());
    assert_eq!(g.contact_pairs(), g2.contact_pairs());

    let mut id_map = Vec::new();
    io::write_id_map(&mut id_map, &g).unwrap();
    let id_map = String::from_utf8(id_map).unwrap();
    assert_eq!(id_map.lines().next(), Some("external_id,internal_id"));
    assert_eq!(id_map.lines().count(), 1 + g.num_nodes());
    assert!(id_map.lines().any(|l| l == "10,0"));
}
