//! DOT export: triangles for negative links, circles for positive links,
//! dashed arrows for jump edges. Places are drawn as small labeled nodes;
//! junction and jump places as points.

use crate::formulas::Polarity;

use super::ProofStructure;

pub fn net_to_dot(net: &ProofStructure) -> String {
    let mut out = String::from("digraph net {\n  rankdir=BT;\n");
    for p in net.places() {
        match &p.label {
            Some(a) => out.push_str(&format!(
                "  {} [shape=ellipse,fontsize=10,label=\"{}\\n{}\"];\n",
                p.id, a, p.id
            )),
            None => out.push_str(&format!("  {} [shape=point,label=\"\"];\n", p.id)),
        }
    }
    for l in net.links() {
        let (shape, suffix) = match l.polarity {
            Polarity::Positive => ("circle", "+"),
            Polarity::Negative => ("triangle", "-"),
        };
        let hyper = net
            .hyper_of(l.id)
            .map(|h| h.to_string())
            .unwrap_or_else(|| "?".to_string());
        // polarity inverters (unary producers inserted for bare monopole
        // atoms) are drawn filled
        let dummy = l.polarity == Polarity::Negative
            && l.top.len() == 1
            && net
                .hyper_of(l.id)
                .and_then(|h| net.hyperlink(h))
                .map(|h| h.links.len() == 1)
                .unwrap_or(false);
        let style = if dummy {
            ",style=filled,fillcolor=lightgrey"
        } else {
            ""
        };
        out.push_str(&format!(
            "  {} [shape={shape}{style},label=\"{}{suffix}\\n{hyper}\"];\n",
            l.id, l.id
        ));
    }
    for l in net.links() {
        for p in &l.bottom {
            out.push_str(&format!("  {} -> {};\n", p, l.id));
        }
        for p in &l.top {
            out.push_str(&format!("  {} -> {};\n", l.id, p));
        }
        if let Some(star) = l.jump {
            match l.polarity {
                Polarity::Positive => out.push_str(&format!(
                    "  {} -> {} [style=dotted,arrowhead=none];\n",
                    star, l.id
                )),
                Polarity::Negative => out.push_str(&format!(
                    "  {} -> {} [style=dotted,arrowhead=none];\n",
                    l.id, star
                )),
            }
        }
    }
    for (x, y) in net.jump_edges() {
        out.push_str(&format!("  {x} -> {y} [style=dashed,constraint=false];\n"));
    }
    out.push_str("}\n");
    out
}
