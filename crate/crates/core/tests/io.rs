use ctxseg::config::PipelineConfig;
use ctxseg::io::{
    graph_from_bytes, graph_to_bytes, parse_detections, parse_pnm, scores_from_bytes, scores_to_bytes,
    to_pnm_text, ClassMask, FeatureMatrix, LabelMap,
};
use ctxseg::propagation::{ContextScores, ScoreMatrix};
use ctxseg::simgraph::SimilarityGraph;
use ctxseg::superpixel::Image;
use proptest::prelude::*;

fn finite_matrix() -> impl Strategy<Value = FeatureMatrix> {
    (1usize..12, 1usize..6).prop_flat_map(|(n, d)| {
        prop::collection::vec(-1e30f32..1e30, n * d).prop_map(move |data| FeatureMatrix::new(n, d, data).unwrap())
    })
}

fn graph() -> impl Strategy<Value = SimilarityGraph> {
    (2usize..15).prop_flat_map(|n| {
        prop::collection::btree_map((0..n as u32, 0..n as u32), 0.001f32..2.0, 0..3 * n).prop_map(move |m| {
            // A ring keeps every node connected.
            let ring = (0..n as u32).map(|i| ((i, (i + 1) % n as u32), 0.5));
            let mut weights = std::collections::BTreeMap::new();
            for ((i, j), w) in ring.chain(m) {
                if i != j {
                    weights.insert((i.min(j), i.max(j)), w);
                }
            }
            let entries: Vec<(u32, u32, f32)> =
                weights.into_iter().flat_map(|((i, j), w)| [(i, j, w), (j, i, w)]).collect();
            SimilarityGraph::from_entries(n, &entries).unwrap()
        })
    })
}

fn scores() -> impl Strategy<Value = ContextScores> {
    (2usize..10, 1usize..4).prop_flat_map(|(n, c)| {
        prop::collection::vec(prop::collection::btree_map((0..n, 0..n), 1e-6f64..10.0, 0..12), c * c).prop_map(
            move |blocks| {
                let mut s = ContextScores::new(n, c);
                for (k, b) in blocks.into_iter().enumerate() {
                    if !b.is_empty() {
                        // Binary scores are stored as f32.
                        let b = b.into_iter().map(|((i, j), v)| (i, j, v as f32 as f64)).collect();
                        s.insert((k / c, k % c), ScoreMatrix::from_triples(n, b).unwrap()).unwrap();
                    }
                }
                s
            },
        )
    })
}

proptest! {
    #[test]
    fn fmx_round_trip_is_bit_exact(m in finite_matrix()) {
        let back = FeatureMatrix::from_fmx_bytes(&m.to_fmx_bytes()).unwrap();
        let bits = |f: &FeatureMatrix| f.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!((back.rows(), back.dim()), (m.rows(), m.dim()));
        prop_assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn graph_round_trip(g in graph()) {
        prop_assert_eq!(graph_from_bytes(&graph_to_bytes(&g)).unwrap(), g);
    }

    #[test]
    fn scores_round_trip(s in scores()) {
        prop_assert_eq!(scores_from_bytes(&scores_to_bytes(&s)).unwrap(), s);
    }

    #[test]
    fn pgm_round_trip(w in 1usize..10, h in 1usize..10, seed in any::<u64>(), rgb in any::<bool>()) {
        let ch = if rgb { 3 } else { 1 };
        let data = (0..w * h * ch)
            .map(|i| ((seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) % 256) as f32 / 255.0)
            .collect();
        let img = Image::new(w, h, ch, data).unwrap();
        prop_assert_eq!(parse_pnm(&to_pnm_text(&img)).unwrap(), img);
    }

    #[test]
    fn label_map_text_round_trip(w in 1usize..9, h in 1usize..9, k in 1u32..5) {
        let ids: Vec<u32> = (0..(w * h) as u32).map(|i| if i < k { i } else { i % k }).collect();
        if let Ok(m) = LabelMap::new(w, h, ids.clone()) {
            prop_assert_eq!(LabelMap::from_text(&m.to_text()).unwrap(), m);
        }
        let c = ClassMask::new(w, h, ids).unwrap();
        prop_assert_eq!(ClassMask::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn binary_parsers_survive_arbitrary_bytes(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = FeatureMatrix::from_fmx_bytes(&bytes);
        let _ = graph_from_bytes(&bytes);
        let _ = scores_from_bytes(&bytes);
    }

    #[test]
    fn binary_parsers_survive_corrupted_files(g in graph(), s in scores(), pos in any::<prop::sample::Index>(), byte in any::<u8>()) {
        for mut bytes in [graph_to_bytes(&g), scores_to_bytes(&s)] {
            let k = pos.index(bytes.len());
            bytes[k] = byte;
            let _ = graph_from_bytes(&bytes);
            let _ = scores_from_bytes(&bytes);
            bytes.truncate(k);
            let _ = graph_from_bytes(&bytes);
            let _ = scores_from_bytes(&bytes);
        }
    }

    #[test]
    fn text_parsers_survive_arbitrary_text(text in "[ -~\\n]{0,200}") {
        let _ = parse_pnm(&text);
        let _ = parse_detections(&text);
        let _ = LabelMap::from_text(&text);
        let _ = ClassMask::from_text(&text);
        let _ = FeatureMatrix::from_csv_str(&text);
        let _ = PipelineConfig::from_toml_str(&text);
    }

    #[test]
    fn text_parsers_survive_near_valid_input(w in 0usize..5, h in 0usize..5, vals in prop::collection::vec(-3i64..300, 0..30)) {
        let body: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        let body = body.join(" ");
        let _ = parse_pnm(&format!("P2\n{w} {h}\n255\n{body}\n"));
        let _ = parse_pnm(&format!("P3\n{w} {h}\n255\n{body}\n"));
        let _ = LabelMap::from_text(&format!("{w} {h}\n{body}\n"));
        let _ = ClassMask::from_text(&format!("{w} {h}\n{body}\n"));
    }
}

#[test]
fn corrupted_fmx_is_rejected() {
    let m = FeatureMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let bytes = m.to_fmx_bytes();
    assert!(FeatureMatrix::from_fmx_bytes(&bytes[..bytes.len() - 1]).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(FeatureMatrix::from_fmx_bytes(&extra).is_err());
    let mut nan = bytes;
    let tail = nan.len() - 4;
    nan[tail..].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(FeatureMatrix::from_fmx_bytes(&nan).is_err());
}
