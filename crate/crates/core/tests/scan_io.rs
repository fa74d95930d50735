use trotterlab_core::hamiltonian::ModelSpec;
use trotterlab_core::product_formula::Order;
use trotterlab_core::scan::{fit_scan, find_fit, run_scan, ErrorScanConfig, TGrid, CSV_HEADER};
use trotterlab_core::Error;

fn cfg(n: usize, r: u64, grid: &str, orders: Vec<Order>) -> ErrorScanConfig {
    ErrorScanConfig {
        model: ModelSpec::heisenberg(n),
        r,
        t_grid: grid.parse().unwrap(),
        orders,
        k_max: 4,
    }
}

#[test]
fn csv_layout() {
    let res = run_scan(&cfg(4, 50, "0.5,2", vec![Order::One, Order::Two])).unwrap();
    let csv = res.to_csv_string();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 5);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&first[..6], &["heisenberg", "4", "open", "1", "50", "5.000000000e-1"]);
    assert_eq!(first.len(), 11);
    let pf2: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(pf2[3], "2");
    assert_eq!(&pf2[9..], &["NaN", "NaN"]);
}

#[test]
fn scans_are_deterministic_and_ordered() {
    let c = cfg(5, 30, "log:0.1:20:25", vec![Order::Four, Order::One]);
    let a = run_scan(&c).unwrap();
    let b = run_scan(&c).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    assert_eq!(a.rows[0].order, Order::Four);
    assert!(a.rows_for(Order::One).zip(a.rows_for(Order::One).skip(1)).all(|(x, y)| x.t < y.t));
}

#[test]
fn config_validation() {
    let mut c = cfg(13, 10, "1", vec![Order::One]);
    assert!(matches!(run_scan(&c), Err(Error::Capacity(_))));
    c.model.n = 4;
    c.r = 0;
    assert!(matches!(run_scan(&c), Err(Error::Argument(_))));
    c.r = 10;
    c.orders = vec![Order::One, Order::One];
    assert!(run_scan(&c).is_err());
    let json = r#"{"model":{"model":"heisenberg","n":4},"r":10,"t_grid":"lin:1:2:3","orders":[1,4]}"#;
    let parsed: ErrorScanConfig = serde_json::from_str(json).unwrap();
    assert_eq!(parsed.orders, vec![Order::One, Order::Four]);
    assert_eq!(parsed.k_max, 6);
    let bad = r#"{"model":{"model":"heisenberg","n":4},"r":10,"t_grid":"1","orders":[3]}"#;
    assert!(serde_json::from_str::<ErrorScanConfig>(bad).is_err());
    let extra = r#"{"model":{"model":"heisenberg","n":4},"r":10,"t_grid":"1","orders":[1],"x":0}"#;
    assert!(serde_json::from_str::<ErrorScanConfig>(extra).is_err());
}

#[test]
fn grid_rejects_bad_specs() {
    for s in ["", "log:0:1:3", "lin:2:1:3", "3,2", "1,1", "lin:1:2:0", "foo:1:2:3", "-1,2"] {
        assert!(s.parse::<TGrid>().is_err(), "{s}");
    }
    let g: TGrid = "lin:1:2:5".parse().unwrap();
    assert!((g.values()[2] - 1.5).abs() < 1e-15);
    assert_eq!(g.to_string(), "lin:1:2:5");
}

#[test]
fn fits_find_first_order_regimes() {
    let res = run_scan(&cfg(6, 10_000, "log:0.5:1000:60", vec![Order::One])).unwrap();
    let fits = fit_scan(&res);
    let small = find_fit(&fits, 1, "error_norm", "small_t").unwrap();
    assert!((small.slope - 1.0).abs() < 0.15, "{small:?}");
    let tri = find_fit(&fits, 1, "triangle_estimate", "pre_saturation").unwrap();
    assert!((tri.slope - 2.0).abs() < 0.15, "{tri:?}");
    assert!(res.rows.iter().all(|r| r.error_norm <= 2.0 + 1e-9));
}
