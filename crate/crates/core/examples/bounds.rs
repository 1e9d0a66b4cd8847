//! Evaluates the carry and regret bounds for one set of inputs.

use uclip::harness::bounds_report;
use uclip::theory;
use uclip::BoundInputs;

fn main() -> uclip::Result<()> {
    let inp = BoundInputs {
        grad_bound: 1.5,
        alpha: 0.1,
        gamma_plus: 2.0,
        beta: 0.5,
        sigma_min_sq: 0.1,
        gamma: 2.0,
        dim: 1,
        horizon: 10_000,
        lr: 0.1,
        carry_bound: 0.5,
        update_bound_sum: 11_000.0,
        update_bound_sq_sum: 12_100.0,
        initial_distance: 100.0,
        iterate_radius: 100.0,
        noise_sigma: 0.3,
        gamma_mean: 2.0,
        gamma_sq_mean: 4.0,
    };
    println!("c_alpha            = {:.6e}", theory::c_alpha(inp.alpha, inp.grad_bound)?);
    println!("E carry            <= {:.4}", theory::carry_expectation_bound(&inp)?);
    println!("carry w.p. 0.99    <= {:.4}", theory::carry_highprob_bound(&inp, 0.01)?);
    let adaptive = theory::adaptive_carry_bounds(&inp, 0.01, inp.horizon)?;
    println!("adaptive carry     <= {:.4} (E {:.4})", adaptive.high_prob, adaptive.expectation);
    println!();
    print!("{}", bounds_report(&inp, 0.01, 1.0, 1000).to_csv_string()?);
    Ok(())
}
