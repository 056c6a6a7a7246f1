use proptest::prelude::*;

use madpg::array::{
    assemble, heat_diagram, local_extent, mapping_view, scatter, ArrayError, ArrayInfo, ArraySnapshot, ArrayValues,
    Distribution, ElementType, GlobalArrayView,
};
use madpg::ids::{EventRef, ProcessId};

fn info(shape: Vec<usize>, dist: Distribution, grid: Vec<usize>, owner: usize) -> ArrayInfo {
    ArrayInfo {
        collection_id: "a".into(),
        element_type: ElementType::Int64,
        distribution: vec![dist; shape.len()],
        global_shape: shape,
        process_grid: grid,
        owner_rank: ProcessId(owner),
    }
}

fn snap(info: ArrayInfo, values: Vec<i64>) -> ArraySnapshot {
    let at_event = EventRef::new(info.owner_rank.0, 0);
    ArraySnapshot {
        info,
        local_values: ArrayValues::Int64(values),
        at_event,
    }
}

#[test]
fn local_extent_examples() {
    let ext = local_extent(&info(vec![8], Distribution::Block, vec![2], 0)).unwrap();
    assert_eq!(ext.indices, vec![vec![0, 1, 2, 3]]);
    let ext = local_extent(&info(vec![8], Distribution::Cyclic, vec![2], 1)).unwrap();
    assert_eq!(ext.indices, vec![vec![1, 3, 5, 7]]);
    let ext = local_extent(&info(vec![7], Distribution::Block, vec![2], 1)).unwrap();
    assert_eq!(ext.indices, vec![vec![4, 5, 6]]);
}

#[test]
fn assemble_examples() {
    let a = snap(info(vec![8], Distribution::Block, vec![2], 0), vec![0, 1, 2, 3]);
    let b = snap(info(vec![8], Distribution::Block, vec![2], 1), vec![4, 5, 6, 7]);
    let full = assemble(&[&a, &b]).unwrap();
    assert_eq!(full.values, ArrayValues::Int64((0..8).collect()));
    assert!(full.present_mask.iter().all(|&p| p));

    let half = assemble(&[&a]).unwrap();
    assert_eq!(half.present_mask, vec![true, true, true, true, false, false, false, false]);

    let other = snap(info(vec![16], Distribution::Block, vec![2], 1), vec![0; 8]);
    assert!(matches!(assemble(&[&a, &other]), Err(ArrayError::InfoMismatch(_))));
}

fn view(values: Vec<i64>, present: Vec<bool>) -> GlobalArrayView {
    GlobalArrayView {
        collection_id: "a".into(),
        shape: vec![values.len()],
        values: ArrayValues::Int64(values),
        present_mask: present,
        contributing: Default::default(),
    }
}

#[test]
fn heat_examples() {
    let h = heat_diagram(&view(vec![0, 5, 10], vec![true; 3])).unwrap();
    assert_eq!(h.values, vec![Some(0.0), Some(0.5), Some(1.0)]);
    assert_eq!((h.min, h.max), (0.0, 10.0));
    let h = heat_diagram(&view(vec![7, 7, 7], vec![true; 3])).unwrap();
    assert_eq!(h.values, vec![Some(0.5); 3]);
    assert_eq!((h.min, h.max), (7.0, 7.0));
    let h = heat_diagram(&view(vec![2, 100, 4], vec![true, false, true])).unwrap();
    assert_eq!(h.values, vec![Some(0.0), None, Some(1.0)]);
}

#[test]
fn mapping_examples() {
    let m = mapping_view(&info(vec![8], Distribution::Block, vec![2], 0), 2).unwrap();
    assert_eq!(m.owners, vec![0, 0, 0, 0, 1, 1, 1, 1]);
    let m = mapping_view(&info(vec![8], Distribution::Cyclic, vec![2], 0), 2).unwrap();
    assert_eq!(m.owners, vec![0, 1, 0, 1, 0, 1, 0, 1]);
    let m = mapping_view(&info(vec![4, 4], Distribution::Block, vec![2, 2], 0), 4).unwrap();
    #[rustfmt::skip]
    let quadrants = vec![
        0, 0, 1, 1,
        0, 0, 1, 1,
        2, 2, 3, 3,
        2, 2, 3, 3,
    ];
    assert_eq!(m.owners, quadrants);
}

proptest! {
    /// Scatter then assemble is the identity for any shape and grid the
    /// distributions can cover.
    #[test]
    fn scatter_assemble_identity(
        rows in 1usize..9,
        cols in 1usize..9,
        gr in 1usize..4,
        gc in 1usize..4,
        cyclic in any::<bool>(),
        seed in any::<i64>(),
    ) {
        let dist = if cyclic { Distribution::Cyclic } else { Distribution::Block };
        let base = info(vec![rows, cols], dist, vec![gr, gc], 0);
        let global = ArrayValues::Int64((0..(rows * cols) as i64).map(|k| k.wrapping_mul(seed)).collect());
        let parts = scatter(&base, &global).unwrap();
        let snaps: Vec<ArraySnapshot> = parts
            .into_iter()
            .enumerate()
            .map(|(r, local)| ArraySnapshot { info: base.with_owner(r), local_values: local, at_event: EventRef::new(r, 0) })
            .collect();
        let view = assemble(&snaps.iter().collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(view.values, global);
        prop_assert!(view.present_mask.iter().all(|&p| p));
    }
}
