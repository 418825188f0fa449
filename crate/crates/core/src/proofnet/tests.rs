use std::collections::BTreeSet;

use crate::formulas::{Atom, Polarity};

use super::*;

fn atom(s: &str) -> Atom {
    Atom::new(s)
}

/// One bipole worth of structure: a positive link consuming `g`, a unary
/// negative hyperlink above producing `u`.
fn elementary() -> ProofStructure {
    let mut net = ProofStructure::new();
    let pg = net.new_place(Some(atom("g")));
    let j = net.new_place(None);
    let x = net.new_link(Polarity::Positive, [j], [pg]);
    net.new_hyperlink(Polarity::Positive, [x]);
    let pu = net.new_place(Some(atom("u")));
    let n = net.new_link(Polarity::Negative, [pu], [j]);
    net.new_hyperlink(Polarity::Negative, [n]);
    net
}

/// A two-branch additive structure: the first bipole produces `a`/`b` under a
/// two-link negative hyperlink; a second two-variant positive hyperlink
/// consumes them (sharing an open place `x`), toggled by jumps.
fn additive_pair() -> (ProofStructure, [LinkId; 5]) {
    let mut net = ProofStructure::new();
    let pg = net.new_place(Some(atom("g")));
    let px = net.new_place(Some(atom("x")));
    let j = net.new_place(None);
    let root = net.new_link(Polarity::Positive, [j], [pg]);
    net.new_hyperlink(Polarity::Positive, [root]);
    let pa = net.new_place(Some(atom("a")));
    let pb = net.new_place(Some(atom("b")));
    let la = net.new_link(Polarity::Negative, [pa], [j]);
    let lb = net.new_link(Polarity::Negative, [pb], [j]);
    net.new_hyperlink(Polarity::Negative, [la, lb]);
    let va = net.new_link(Polarity::Positive, [], [px, pa]);
    let vb = net.new_link(Polarity::Positive, [], [px, pb]);
    net.new_hyperlink(Polarity::Positive, [va, vb]);
    net.add_jump_edge(va, la);
    net.add_jump_edge(vb, lb);
    (net, [root, la, lb, va, vb])
}

/// An incorrect multiplicative shape: one positive link fans out to two
/// unary negative hyperlinks whose outputs are reunited by a single
/// positive link above.
fn bridge() -> (ProofStructure, [LinkId; 4]) {
    let mut net = ProofStructure::new();
    let pw = net.new_place(Some(atom("w")));
    let j1 = net.new_place(None);
    let j2 = net.new_place(None);
    let x = net.new_link(Polarity::Positive, [j1, j2], [pw]);
    net.new_hyperlink(Polarity::Positive, [x]);
    let pu = net.new_place(Some(atom("u")));
    let pv = net.new_place(Some(atom("v")));
    let nu = net.new_link(Polarity::Negative, [pu], [j1]);
    net.new_hyperlink(Polarity::Negative, [nu]);
    let nv = net.new_link(Polarity::Negative, [pv], [j2]);
    net.new_hyperlink(Polarity::Negative, [nv]);
    let b = net.new_link(Polarity::Positive, [], [pu, pv]);
    net.new_hyperlink(Polarity::Positive, [b]);
    (net, [x, nu, nv, b])
}

#[test]
fn elementary_structure_is_valid_and_correct() {
    let net = elementary();
    assert!(net.validate().is_ok());
    assert_eq!(net.slices().count(), 1);
    assert!(is_proof_net(&net));
    let slice = net.slices().next().unwrap();
    assert!(find_singularity_free_loop(&net, &slice).is_none());
}

#[test]
fn empty_structure_with_goal_places_is_correct() {
    let mut net = ProofStructure::new();
    net.new_place(Some(atom("g")));
    assert!(net.validate().is_ok());
    assert!(is_proof_net(&net));
    assert_eq!(net.conclusion_places().len(), 1);
    assert_eq!(net.open_places().len(), 1);
    assert!(!net.is_closed());
}

#[test]
fn additive_pair_is_valid() {
    let (net, _) = additive_pair();
    let report = net.validate();
    assert!(report.is_ok(), "{report}");
    assert!(is_proof_net(&net));
}

#[test]
fn untoggled_pair_is_reported() {
    // the additive pair, rebuilt without jumps
    let net = {
        let mut fresh = ProofStructure::new();
        let pg = fresh.new_place(Some(atom("g")));
        let px = fresh.new_place(Some(atom("x")));
        let j = fresh.new_place(None);
        let root = fresh.new_link(Polarity::Positive, [j], [pg]);
        fresh.new_hyperlink(Polarity::Positive, [root]);
        let pa = fresh.new_place(Some(atom("a")));
        let pb = fresh.new_place(Some(atom("b")));
        let la = fresh.new_link(Polarity::Negative, [pa], [j]);
        let lb = fresh.new_link(Polarity::Negative, [pb], [j]);
        fresh.new_hyperlink(Polarity::Negative, [la, lb]);
        let va = fresh.new_link(Polarity::Positive, [], [px, pa]);
        let vb = fresh.new_link(Polarity::Positive, [], [px, pb]);
        fresh.new_hyperlink(Polarity::Positive, [va, vb]);
        fresh
    };
    let report = net.validate();
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::Toggling { .. })));
}

#[test]
fn bad_link_arity_is_reported() {
    let text = "\
place p0 a
place p1 b
place p2 c
link l0 - top=p2 bottom=p0,p1
hyper h0 - links=l0
";
    let net = net_from_text(text).unwrap();
    assert!(net
        .validate()
        .violations
        .iter()
        .any(|v| matches!(v, Violation::LinkArity { .. })));

    // a positive link with no bottom at all
    let text = "\
place p0 a
link l0 + top=p0 bottom=
hyper h0 + links=l0
";
    let net = net_from_text(text).unwrap();
    assert!(net
        .validate()
        .violations
        .iter()
        .any(|v| matches!(v, Violation::LinkArity { .. })));
}

#[test]
fn shared_jump_place_is_reported() {
    let text = "\
place p0 g
place p1 a
place p2 b
place p3
link l0 + top= bottom=p1 jump=p3
link l1 + top= bottom=p2 jump=p3
hyper h0 + links=l0
hyper h1 + links=l1
";
    let net = net_from_text(text).unwrap();
    let report = net.validate();
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::JumpPlaceSharing { .. })));
}

#[test]
fn same_polarity_adjacency_is_reported() {
    let mut net = ProofStructure::new();
    let pg = net.new_place(Some(atom("g")));
    let pm = net.new_place(Some(atom("m")));
    let x = net.new_link(Polarity::Positive, [pm], [pg]);
    net.new_hyperlink(Polarity::Positive, [x]);
    let y = net.new_link(Polarity::Positive, [], [pm]);
    net.new_hyperlink(Polarity::Positive, [y]);
    let report = net.validate();
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::PolarityAlternation { .. })));
}

#[test]
fn cross_hyperlink_bottom_sharing_is_reported() {
    let mut net = ProofStructure::new();
    let pg = net.new_place(Some(atom("g")));
    let x = net.new_link(Polarity::Positive, [], [pg]);
    net.new_hyperlink(Polarity::Positive, [x]);
    let y = net.new_link(Polarity::Positive, [], [pg]);
    net.new_hyperlink(Polarity::Positive, [y]);
    let report = net.validate();
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::Disjointness { .. })));
}

#[test]
fn additive_pair_has_two_slices_with_expected_erasure() {
    let (net, [_, la, lb, va, vb]) = additive_pair();
    let slices: Vec<Slice> = net.slices().collect();
    assert_eq!(slices.len(), 2);
    assert_eq!(net.resolution_count(), 2);

    let slice_a = &slices[0];
    assert!(slice_a.live_links.contains(&la));
    assert!(!slice_a.live_links.contains(&lb));
    assert!(slice_a.live_links.contains(&va));
    assert!(!slice_a.live_links.contains(&vb), "erasure cascades upward");
    assert!(slice_a.jumps.contains(&(va, la)));
    assert!(!slice_a.jumps.contains(&(vb, lb)));

    let slice_b = &slices[1];
    assert!(slice_b.live_links.contains(&vb));
    assert!(!slice_b.live_links.contains(&va));
}

#[test]
fn purely_multiplicative_structure_has_one_slice() {
    let (net, _) = bridge();
    assert_eq!(net.slices().count(), 1);
}

#[test]
fn cascading_erasure_collapses_resolutions() {
    // a with-pair above the `a` branch only: resolutions that kill the
    // branch all erase the pair, so distinct slices fall short of the
    // resolution product
    let mut net = ProofStructure::new();
    let pg = net.new_place(Some(atom("g")));
    let j = net.new_place(None);
    let root = net.new_link(Polarity::Positive, [j], [pg]);
    net.new_hyperlink(Polarity::Positive, [root]);
    let pa = net.new_place(Some(atom("a")));
    let pb = net.new_place(Some(atom("b")));
    let la = net.new_link(Polarity::Negative, [pa], [j]);
    let lb = net.new_link(Polarity::Negative, [pb], [j]);
    net.new_hyperlink(Polarity::Negative, [la, lb]);

    let j2 = net.new_place(None);
    let q = net.new_link(Polarity::Positive, [j2], [pa]);
    net.new_hyperlink(Polarity::Positive, [q]);
    let pc = net.new_place(Some(atom("c")));
    let pd = net.new_place(Some(atom("d")));
    let lc = net.new_link(Polarity::Negative, [pc], [j2]);
    let ld = net.new_link(Polarity::Negative, [pd], [j2]);
    net.new_hyperlink(Polarity::Negative, [lc, ld]);
    assert!(net.validate().is_ok());

    assert_eq!(net.resolution_count(), 4);
    let slices: Vec<Slice> = net.slices().collect();
    assert_eq!(slices.len(), 4, "one slice per resolution");
    let distinct: BTreeSet<Vec<LinkId>> = slices
        .iter()
        .map(|s| s.live_links.iter().copied().collect())
        .collect();
    assert_eq!(distinct.len(), 3, "the two b-side resolutions coincide");
}

#[test]
fn bridge_has_singularity_free_loop() {
    let (net, [x, nu, nv, b]) = bridge();
    assert!(net.validate().is_ok());
    let slice = net.slices().next().unwrap();
    let trip = find_singularity_free_loop(&net, &slice).expect("loop exists");
    trip.validate(&net, &slice).expect("returned trip is sound");
    assert!(trip.is_proper());
    let links: BTreeSet<LinkId> = trip.steps.iter().map(|s| s.link).collect();
    assert_eq!(links, BTreeSet::from([x, nu, nv, b]));
    assert!(!is_proof_net(&net));
}

#[test]
fn two_link_loops_are_not_proper() {
    // mutually adjacent pair: the only cycle spans two links
    let text = "\
place p0 u
place p1
link l0 + top=p1 bottom=p0
link l1 - top=p0 bottom=p1
hyper h0 + links=l0
hyper h1 - links=l1
";
    let net = net_from_text(text).unwrap();
    assert!(net.validate().is_ok());
    let slice = net.full_slice();
    assert!(find_singularity_free_loop(&net, &slice).is_none());
}

#[test]
fn singularity_blocks_top_to_top_pass() {
    // like `bridge`, but the reunited outputs come from one shared negative
    // link, so every loop has to bounce on it
    let mut net = ProofStructure::new();
    let pw = net.new_place(Some(atom("w")));
    let j1 = net.new_place(None);
    let x = net.new_link(Polarity::Positive, [j1], [pw]);
    net.new_hyperlink(Polarity::Positive, [x]);
    let pu = net.new_place(Some(atom("u")));
    let pv = net.new_place(Some(atom("v")));
    let n = net.new_link(Polarity::Negative, [pu, pv], [j1]);
    net.new_hyperlink(Polarity::Negative, [n]);
    let b = net.new_link(Polarity::Positive, [], [pu, pv]);
    net.new_hyperlink(Polarity::Positive, [b]);
    assert!(net.validate().is_ok());
    assert!(is_proof_net(&net));
}

#[test]
fn restricted_search_honors_allowed_set() {
    let (net, [x, nu, nv, b]) = bridge();
    let slice = net.slices().next().unwrap();
    // forbidding one of the negatives removes the only loop
    let allowed: BTreeSet<LinkId> = [x, nu, b].into_iter().collect();
    let found = find_loop(
        &net,
        &slice,
        &LoopSearch {
            allowed: Some(allowed),
            through: None,
        },
    );
    assert!(found.is_none());
    let through: BTreeSet<LinkId> = [b].into_iter().collect();
    let found = find_loop(
        &net,
        &slice,
        &LoopSearch {
            allowed: None,
            through: Some(through),
        },
    );
    assert!(found.is_some());
    let _ = nv;
}

#[test]
fn net_text_roundtrip() {
    for net in [elementary(), additive_pair().0, bridge().0] {
        let text = net_to_text(&net);
        let reparsed = net_from_text(&text).unwrap();
        assert_eq!(net_to_text(&reparsed), text);
        assert_eq!(reparsed.validate().is_ok(), net.validate().is_ok());
    }
}

#[test]
fn net_text_rejects_unknown_and_duplicate_ids() {
    assert!(matches!(
        net_from_text("link l0 + top= bottom=p9\n"),
        Err(NetTextError::UnknownId { .. })
    ));
    assert!(matches!(
        net_from_text("place p0 a\nplace p0 b\n"),
        Err(NetTextError::DuplicateId { .. })
    ));
    assert!(matches!(
        net_from_text("place p0 a\nconclusion p0,p1\n"),
        Err(NetTextError::Malformed { .. })
            | Err(NetTextError::UnknownId { .. })
            | Err(NetTextError::ConclusionMismatch { .. })
    ));
}

#[test]
fn conclusion_line_is_verified() {
    let net = elementary();
    let mut text = net_to_text(&net);
    text = text.replace("conclusion p0", "conclusion p3");
    assert!(matches!(
        net_from_text(&text),
        Err(NetTextError::ConclusionMismatch { .. })
    ));
}

#[test]
fn dot_export_mentions_shapes_and_dashed_jumps() {
    let (net, _) = additive_pair();
    let dot = dot::net_to_dot(&net);
    assert!(dot.contains("shape=circle"));
    assert!(dot.contains("shape=triangle"));
    assert!(dot.contains("style=dashed"));
    assert!(dot.starts_with("digraph"));
}

#[test]
fn closedness_requires_every_branch_handled() {
    let (net, _) = additive_pair();
    assert!(net.is_closed());

    // drop the second consumer variant: the `b` branch is now unhandled
    let mut partial = ProofStructure::new();
    let pg = partial.new_place(Some(atom("g")));
    let px = partial.new_place(Some(atom("x")));
    let j = partial.new_place(None);
    let root = partial.new_link(Polarity::Positive, [j], [pg]);
    partial.new_hyperlink(Polarity::Positive, [root]);
    let pa = partial.new_place(Some(atom("a")));
    let pb = partial.new_place(Some(atom("b")));
    let la = partial.new_link(Polarity::Negative, [pa], [j]);
    let lb = partial.new_link(Polarity::Negative, [pb], [j]);
    partial.new_hyperlink(Polarity::Negative, [la, lb]);
    let va = partial.new_link(Polarity::Positive, [], [px, pa]);
    partial.new_hyperlink(Polarity::Positive, [va]);
    let _ = lb;
    assert!(!partial.is_closed());
}
