use hcbi::output::{read_csv_f64, write_csv, Cell, CsvSink, Table};

#[test]
fn empty_table_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    write_csv(&Table::new(["t", "value"]), &p).unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), "t,value\n");
}

#[test]
fn floats_round_trip_bit_exactly() {
    let values = [
        0.1,
        1.0 / 3.0,
        -2.5e-310,
        f64::MIN_POSITIVE,
        f64::MAX,
        -0.0,
        std::f64::consts::PI * 1e17,
        6.02214076e23,
        f64::EPSILON,
    ];
    let mut t = Table::new(["x", "y"]);
    for (k, &v) in values.iter().enumerate() {
        t.push(vec![Cell::Num(v), Cell::Num(k as f64 + v)]);
    }
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    write_csv(&t, &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(!text.contains('\r'));
    let (headers, rows) = read_csv_f64(&p).unwrap();
    assert_eq!(headers, ["x", "y"]);
    for (k, &v) in values.iter().enumerate() {
        assert_eq!(rows[k][0].to_bits(), v.to_bits(), "row {k}");
        assert_eq!(rows[k][1].to_bits(), (k as f64 + v).to_bits(), "row {k}");
    }
}

/// Streams a million-row path table to disk; the sink holds one row at a
/// time, so the file is written without materializing a table.
#[test]
fn million_rows_stream_to_disk() {
    const ROWS: usize = 1_000_000;
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("paths.csv");
    let headers = vec!["t".to_string(), "z".to_string()];
    let mut sink = CsvSink::create(&p, &headers).unwrap();
    for k in 0..ROWS {
        let t = k as f64 * 1e-3;
        sink.write_floats(&[t, (t * 0.37).sin()]).unwrap();
    }
    sink.finish().unwrap();
    let (_, rows) = read_csv_f64(&p).unwrap();
    assert_eq!(rows.len(), ROWS);
    let k = 765_432;
    assert_eq!(
        rows[k][1].to_bits(),
        ((k as f64 * 1e-3) * 0.37).sin().to_bits()
    );
}

#[test]
fn sink_into_memory_matches_write_csv() {
    let mut t = Table::new(["n", "label", "v"]);
    t.push(vec![
        Cell::Int(3),
        Cell::Text("a,b".into()),
        Cell::Num(f64::NAN),
    ]);
    let sink = CsvSink::new(Vec::new(), &t.headers).unwrap();
    let mut sink = sink;
    for r in &t.rows {
        sink.write_cells(r).unwrap();
    }
    let bytes = sink.finish().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    write_csv(&t, &p).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), bytes);
    assert_eq!(
        String::from_utf8(bytes).unwrap(),
        "n,label,v\n3,\"a,b\",NaN\n"
    );
}
