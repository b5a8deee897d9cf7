use mmwave_plan::channel::{gb_plm, mapl, pl_los, pl_nlos, ChannelParams, LinkBudget};
use proptest::prelude::*;

proptest! {
    #[test]
    fn path_loss_orders(d in 1.0f64..2000.0, dd in 0.0f64..100.0, fc in 1.0f64..100.0) {
        let los = pl_los(d, fc).unwrap();
        let nlos = pl_nlos(d, fc, 1.5).unwrap();
        prop_assert!(nlos >= los);
        prop_assert!(pl_los(d + dd, fc).unwrap() >= los);
        prop_assert!(pl_nlos(d + dd, fc, 1.5).unwrap() >= nlos);
        // the direct-link blend sits between the two
        let p = ChannelParams { fc_ghz: fc, ..ChannelParams::default() };
        let b = gb_plm(true, false, d, d, &p).unwrap();
        prop_assert!(b >= los - 1e-9 && b <= nlos + 1e-9);
    }

    #[test]
    fn mapl_is_120_minus_sinr(s in -10.0f64..30.0) {
        let b = LinkBudget { sinr_db: s, ..LinkBudget::default() };
        prop_assert!((mapl(&b) - (120.0 - s)).abs() < 1e-12);
    }
}
