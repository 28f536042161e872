//! Data-aided and blind Cramer-Rao bounds against the least-squares
//! estimator's empirical MSE.

use modclass::channel::{flat_rayleigh, transmit, MimoChannel};
use modclass::crb::{crb_from_fim, fim_blind_mc, fim_data_aided, ls_channel_estimate};
use modclass::rng::derive;
use modclass::signal::{draw_symbols, noise_variance_from_snr, Modulation};

fn main() -> modclass::Result<()> {
    let bpsk = Modulation::Bpsk.constellation();
    let (mt, mr, kn) = (2, 4, 50);
    let mut rng = derive(14, &[]);
    let h = flat_rayleigh(mr, mt, &mut rng);
    println!("snr_db  crb_da     crb_blind  mse_ls");
    for snr in [0.0, 5.0, 10.0, 15.0] {
        let sigma2 = noise_variance_from_snr(snr, mt);
        let s = draw_symbols(&bpsk, mt, kn, &mut rng)?;
        let da = crb_from_fim(&fim_data_aided(&s, sigma2, mr)?)?;
        let blind = crb_from_fim(&fim_blind_mc(&h, &bpsk, sigma2, kn, 1000, &mut rng)?)?;
        let trials = 500;
        let mut sq = 0.0;
        for _ in 0..trials {
            let block = transmit(&MimoChannel::flat(h.clone()), &s, sigma2, &mut rng)?;
            sq += (ls_channel_estimate(&block, &s)?.reference()[(0, 0)].re - h[(0, 0)].re).powi(2);
        }
        println!(
            "{snr:6.1}  {:.3e}  {:.3e}  {:.3e}",
            da.get(0, 0, false),
            blind.get(0, 0, false),
            sq / trials as f64
        );
    }
    let sigma2 = noise_variance_from_snr(10.0, mt);
    let s = draw_symbols(&bpsk, mt, kn, &mut rng)?;
    print!("{}", crb_from_fim(&fim_data_aided(&s, sigma2, mr)?)?.to_csv());
    Ok(())
}
