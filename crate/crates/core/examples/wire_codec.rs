// Encoding slices for the wire and carrying them over a jittery channel.

use korrontea::transport::{decode_slice, encode_slice, ChannelConfig, SimChannel, TransportError};
use korrontea::{FlowId, SiteId, SynchronousSlice};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let site = SiteId::new("L1")?;
    let flow = FlowId::new("F0")?;
    let slice = SynchronousSlice::single(42, site.clone(), flow.clone(), b"frame".to_vec());

    let bytes = encode_slice(&slice)?;
    println!("{} bytes: {:02x?}", bytes.len(), &bytes[..12]);
    assert_eq!(decode_slice(&bytes)?, slice);

    let mut truncated = bytes.clone();
    truncated.pop();
    match decode_slice(&truncated) {
        Err(TransportError::MalformedFrame(why)) => println!("truncated frame rejected: {why}"),
        other => println!("unexpected: {other:?}"),
    }

    let mut channel = SimChannel::new(ChannelConfig::simulated(2, 6, 99));
    for t in (0..50).step_by(10) {
        let s = SynchronousSlice::single(t, site.clone(), flow.clone(), vec![t as u8]);
        let at = channel.send(&s, t)?;
        println!("sent {t:>2}, arrives {at:>2}");
    }
    channel.close();
    let delivered = channel.deliver(i64::MAX)?;
    println!("delivered {} slices in order", delivered.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
