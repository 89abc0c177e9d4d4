//! Derived constants of a lossy medium across frequency.
use cluster_scattering::media::Medium;

fn main() -> cluster_scattering::Result<()> {
    let gel = Medium::new(1.4, 0.7, 0.1)?;
    println!("omega,nu,beta_re,beta_im,k_re,k_im,zeta");
    for omega in [0.1, 1.0, 3.0, 10.0] {
        let d = gel.derive(omega)?;
        println!(
            "{omega},{},{},{},{},{},{}",
            d.nu, d.beta.re, d.beta.im, d.k.re, d.k.im, d.zeta
        );
    }
    Ok(())
}
