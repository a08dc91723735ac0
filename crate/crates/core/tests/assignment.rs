use spinsim_core::assignment::{reconstruct_levels, verify_diagram, ConnectivityMatrix, Edge};

fn eq13() -> ConnectivityMatrix {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/eq13.cm")).unwrap();
    ConnectivityMatrix::parse(&text).unwrap()
}

#[test]
fn eq13_admits_diagram_with_isolated_ninth_transition() {
    let cm = eq13().padded(&[9]);
    let r = reconstruct_levels(&cm, 3, 64).unwrap();
    assert_eq!(r.ambiguous, vec![9]);
    println!("{} diagrams, truncated {}", r.diagrams.len(), r.truncated);
    let mut hit = false;
    for d in &r.diagrams {
        assert!(verify_diagram(d, &cm).0);
        let e9: Edge = d.edges[8].1;
        let others = &d.edges[..8];
        let untouched = others.iter().all(|(_, e)| {
            let lv = |m, k| (m, k);
            let set = [lv(e.m, e.lo), lv(e.m + 1, e.up)];
            !set.contains(&(e9.m, e9.lo)) && !set.contains(&(e9.m + 1, e9.up))
        });
        if e9.m == 1 && untouched {
            hit = true;
            print!("{}", d.to_text());
        }
    }
    assert!(hit);
}
