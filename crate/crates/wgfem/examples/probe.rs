// scratch: table comparison for both Case 1 families
use wgfem::cases::{run_case, CaseId, RunOptions};

fn main() {
    let rect_l2 = [1.3782e-1, 3.5717e-2, 9.0101e-3, 2.2576e-3, 5.6472e-4, 1.4120e-4];
    let rect_edge = [1.7244e-2, 4.5321e-3, 1.1362e-3, 2.8401e-4, 7.0995e-5, 1.7748e-5];
    let tri_l2 = [1.5399e-1, 3.9419e-2, 9.9131e-3, 2.4819e-3, 6.2072e-4, 1.5519e-4];
    let tri_edge = [6.5585e-2, 1.3106e-2, 3.0102e-3, 7.3455e-4, 1.8249e-4, 4.5550e-5];
    let opts = RunOptions::default();
    for (case, l2t, edget) in [
        (CaseId::OneRect, rect_l2, rect_edge),
        (CaseId::OneTri, tri_l2, tri_edge),
    ] {
        println!("{}:", case.name());
        let rep = run_case(case, 6, &opts).unwrap();
        for (i, l) in rep.levels.iter().enumerate() {
            println!(
                "  n={:>4}: L2 {:.5e} (dev {:+.2}%)  edge {:.5e} (dev {:+.2}%)",
                l.h_inv_label,
                l.errors.e_l2,
                (l.errors.e_l2 / l2t[i] - 1.0) * 100.0,
                l.errors.e_edge,
                (l.errors.e_edge / edget[i] - 1.0) * 100.0,
            );
        }
    }
}
