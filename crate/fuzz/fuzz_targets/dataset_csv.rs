#![no_main]

use gradgp::problems::{parse_dataset_csv, write_dataset_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(es) = parse_dataset_csv(data) {
        // anything accepted must survive a write/read round trip unchanged
        let mut buf = Vec::new();
        write_dataset_csv(&es, &mut buf).expect("writing a parsed dataset");
        let back = parse_dataset_csv(buf.as_slice()).expect("re-reading a written dataset");
        assert_eq!(back.points(), es.points());
        assert_eq!(back.values(), es.values());
        assert_eq!(back.gradients(), es.gradients());
    }
});
