//! TCP front end for the infrastructure services.
//!
//! Each connection carries any number of requests. A request is a
//! 32-bit big-endian length followed by that many bytes of an encoded
//! wire message; the response comes back in the same framing. Unknown
//! or unparseable requests receive an error frame rather than a
//! dropped connection, and the world state is persisted after every
//! request so a restarted server carries on where it stopped.

use anyhow::{bail, Context, Result};
use lpki_core::wire::{WireMessage, REASON_MALFORMED};
use lpki_core::world::World;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;

/// A frame larger than this is treated as hostile and refused.
const MAX_FRAME: u32 = 16 * 1024 * 1024;

fn read_frame(stream: &mut TcpStream) -> Result<Option<Vec<u8>>> {
    let mut len_buf = [0u8; 4];
    match stream.read_exact(&mut len_buf) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(len_buf);
    if len > MAX_FRAME {
        bail!("frame length {len} exceeds the {MAX_FRAME}-byte limit");
    }
    let mut frame = vec![0u8; len as usize];
    stream.read_exact(&mut frame).context("short frame")?;
    Ok(Some(frame))
}

fn write_frame(stream: &mut TcpStream, bytes: &[u8]) -> Result<()> {
    stream.write_all(&(bytes.len() as u32).to_be_bytes())?;
    stream.write_all(bytes)?;
    stream.flush()?;
    Ok(())
}

fn handle_connection(world: &mut World, state_file: &Path, stream: &mut TcpStream) -> Result<()> {
    while let Some(frame) = read_frame(stream)? {
        let response = match WireMessage::decode(&frame) {
            Ok(request) => world.service_answer(&request),
            Err(e) => WireMessage::error(REASON_MALFORMED, &e.to_string()),
        };
        write_frame(stream, &response.encode())?;
        std::fs::write(state_file, world.snapshot())
            .with_context(|| format!("persisting state to {}", state_file.display()))?;
    }
    Ok(())
}

/// Binds `listen`, announces the bound address on stdout, then serves
/// requests until the process is killed. `:0` picks a free port; the
/// announcement line is how callers learn which one.
pub fn run(mut world: World, state_file: &Path, listen: &str) -> Result<()> {
    let listener = TcpListener::bind(listen)
        .with_context(|| format!("binding listen address {listen}"))?;
    let local = listener.local_addr().context("reading bound address")?;
    println!("listening on {local}");
    std::io::stdout().flush().ok();
    for stream in listener.incoming() {
        let mut stream = match stream {
            Ok(s) => s,
            Err(_) => continue,
        };
        if let Err(e) = handle_connection(&mut world, state_file, &mut stream) {
            eprintln!("connection error: {e:#}");
        }
    }
    Ok(())
}
