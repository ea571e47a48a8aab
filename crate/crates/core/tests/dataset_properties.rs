use attnground_core::{
    crop_dims, detokenize, evaluate, filter_boxes, parse_box, point_in_bbox, select_span, BBox, CropSpec, ElementType,
    Error, GroundTruthElement, GroupBy, OcrRecord, Platform, Prediction, TokenRecord,
};
use proptest::prelude::*;

fn records(texts: &[String]) -> Vec<TokenRecord> {
    let mut pos = 0u64;
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let len = t.chars().count() as u64;
            let r = TokenRecord {
                index: i as u64,
                text: t.clone(),
                char_start: pos,
                char_end: pos + len,
            };
            pos += len;
            r
        })
        .collect()
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

proptest! {
    #[test]
    fn span_covers_minimally_and_first(
        texts in proptest::collection::vec("[ab ]{1,3}", 1..12),
        a in 0usize..40,
        b in 0usize..40,
    ) {
        let tokens = records(&texts);
        let text = detokenize(&tokens).unwrap();
        let chars: Vec<char> = text.chars().collect();
        prop_assert_eq!(chars.len() as u64, tokens.last().unwrap().char_end);

        let (s, e) = (a.min(b) % chars.len(), (a.max(b) % chars.len()) + 1);
        let s = s.min(e - 1);
        let description: String = chars[s..e].iter().collect();
        prop_assume!(!description.trim().is_empty());

        let span = select_span(&tokens, &description).unwrap();
        let (ms, me) = span.char_range;
        // coverage
        let first = &tokens[span.token_indices[0]];
        let last = &tokens[*span.token_indices.last().unwrap()];
        prop_assert!(first.char_start <= ms && me <= last.char_end);
        // minimality
        prop_assert!(first.char_end > ms);
        prop_assert!(last.char_start < me);
        // contiguity
        for w in span.token_indices.windows(2) {
            prop_assert_eq!(w[1], w[0] + 1);
        }
        // the match is the description up to whitespace runs, found no later than the sampled copy
        prop_assert_eq!(collapse(&span.matched_text), collapse(&description));
        let trimmed_start = s + description.chars().take_while(|c| c.is_whitespace()).count();
        prop_assert!(ms as usize <= trimmed_start);
    }

    #[test]
    fn whole_text_selects_every_token(texts in proptest::collection::vec("[a-z]{1,3}( [a-z]{1,2})?", 1..10)) {
        let tokens = records(&texts);
        let text = detokenize(&tokens).unwrap();
        let span = select_span(&tokens, &text).unwrap();
        prop_assert_eq!(span.token_indices, (0..tokens.len()).collect::<Vec<_>>());
    }

    #[test]
    fn parse_box_is_linear_in_image_size(
        c in proptest::array::uniform4(0u32..=1000),
        w in 1u32..5000,
        h in 1u32..5000,
    ) {
        let text = format!("<box>{} {} {} {}</box>", c[0], c[1], c[2], c[3]);
        let one = parse_box(&text, w, h).unwrap();
        let two = parse_box(&text, 2 * w, 2 * h).unwrap();
        prop_assert_eq!(two.bbox.xmin, 2.0 * one.bbox.xmin);
        prop_assert_eq!(two.bbox.ymin, 2.0 * one.bbox.ymin);
        prop_assert_eq!(two.bbox.xmax, 2.0 * one.bbox.xmax);
        prop_assert_eq!(two.bbox.ymax, 2.0 * one.bbox.ymax);
    }

    #[test]
    fn point_in_bbox_is_translation_invariant(
        b in proptest::array::uniform4(-500i32..500),
        p in proptest::array::uniform2(-600i32..600),
        d in proptest::array::uniform2(-1000i32..1000),
    ) {
        let bbox = BBox::new(b[0].min(b[2]).into(), b[1].min(b[3]).into(), b[0].max(b[2]).into(), b[1].max(b[3]).into());
        let point = (f64::from(p[0]), f64::from(p[1]));
        let (dx, dy) = (f64::from(d[0]), f64::from(d[1]));
        prop_assert_eq!(
            point_in_bbox(point, &bbox),
            point_in_bbox((point.0 + dx, point.1 + dy), &bbox.translated(dx, dy))
        );
    }

    #[test]
    fn crop_matches_ideal_rectangle_within_a_pixel(w in 1u32..4000, h in 1u32..4000, rw in 1u32..30, rh in 1u32..30) {
        let spec = CropSpec::new(rw, rh).unwrap();
        match crop_dims(w, h, &spec) {
            Ok((cw, ch)) => {
                let s = (f64::from(w) / f64::from(rw)).min(f64::from(h) / f64::from(rh));
                prop_assert!(cw <= w && ch <= h);
                prop_assert!((f64::from(cw) - s * f64::from(rw)).abs() < 1.0 + 1e-9);
                prop_assert!((f64::from(ch) - s * f64::from(rh)).abs() < 1.0 + 1e-9);
                prop_assert!(cw == w || ch == h);
            }
            Err(Error::DegenerateCrop { .. }) => {
                let s = (f64::from(w) / f64::from(rw)).min(f64::from(h) / f64::from(rh));
                prop_assert!(s * f64::from(rw) < 1.0 || s * f64::from(rh) < 1.0);
            }
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }

    #[test]
    fn filtered_boxes_stay_inside_and_grow_with_crop(
        boxes in proptest::collection::vec((0u32..900, 0u32..900, 1u32..200, 1u32..200), 0..30),
        small in (1u32..600, 1u32..600),
        grow in (0u32..400, 0u32..400),
    ) {
        let recs: Vec<OcrRecord> = boxes
            .iter()
            .enumerate()
            .map(|(i, &(x, y, w, h))| OcrRecord {
                text: i.to_string(),
                bbox_px: BBox::new(x.into(), y.into(), (x + w).into(), (y + h).into()),
            })
            .collect();
        let a = BBox::new(0.0, 0.0, small.0.into(), small.1.into());
        let b = BBox::new(0.0, 0.0, (small.0 + grow.0).into(), (small.1 + grow.1).into());
        let in_a = filter_boxes(&recs, &a);
        let in_b = filter_boxes(&recs, &b);
        for r in &in_a {
            prop_assert!(a.contains_box(&r.bbox_px));
            prop_assert!(r.bbox_px.check().is_ok());
            prop_assert!(in_b.iter().any(|o| o.text == r.text));
        }
    }
}

fn gt(id: &str, ratio: &str) -> GroundTruthElement {
    GroundTruthElement {
        sample_id: id.into(),
        image_ref: id.into(),
        query_text: "q".into(),
        bbox_px: BBox::new(0.0, 0.0, 10.0, 10.0),
        element_type: ElementType::Text,
        platform: Platform::Web,
        aspect_ratio: ratio.into(),
        image_w_px: Some(20),
        image_h_px: Some(20),
    }
}

#[test]
fn evaluation_ignores_record_order() {
    let ratios = ["1:4", "4:3", "2:1"];
    let gts: Vec<_> = (0..30).map(|i| gt(&format!("s{i}"), ratios[i % 3])).collect();
    let preds: Vec<_> = (0..30)
        .filter(|i| i % 4 != 0)
        .map(|i| Prediction {
            sample_id: format!("s{i}"),
            x: (i % 13) as f64,
            y: 5.0,
            meta: None,
        })
        .collect();
    let base = evaluate(&preds, &gts, GroupBy::AspectRatio).unwrap();
    let mut g2 = gts.clone();
    let mut p2 = preds.clone();
    g2.reverse();
    p2.rotate_left(7);
    assert_eq!(evaluate(&p2, &g2, GroupBy::AspectRatio).unwrap(), base);
    assert!(base.groups.iter().all(|(_, s)| (0.0..=1.0).contains(&s.accuracy)));
    assert_eq!(base.total, base.groups.iter().map(|g| g.1.total).sum::<usize>());
}

#[test]
fn adding_a_correct_sample_never_lowers_numerator() {
    let gts: Vec<_> = (0..5).map(|i| gt(&format!("s{i}"), "1:1")).collect();
    let preds = vec![Prediction {
        sample_id: "s0".into(),
        x: 1.0,
        y: 1.0,
        meta: None,
    }];
    let before = evaluate(&preds, &gts, GroupBy::None).unwrap();
    let mut more_gts = gts.clone();
    more_gts.push(gt("extra", "1:1"));
    let mut more_preds = preds.clone();
    more_preds.push(Prediction {
        sample_id: "extra".into(),
        x: 2.0,
        y: 2.0,
        meta: None,
    });
    let after = evaluate(&more_preds, &more_gts, GroupBy::None).unwrap();
    assert_eq!(after.correct, before.correct + 1);
}

#[test]
fn gt_box_outside_image_is_rejected() {
    let mut g = gt("a", "1:1");
    g.bbox_px = BBox::new(0.0, 0.0, 25.0, 10.0);
    assert!(matches!(evaluate(&[], &[g], GroupBy::None), Err(Error::InvalidBox(_))));
}
