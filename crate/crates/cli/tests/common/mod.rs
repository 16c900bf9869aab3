#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fgest::png::{self, BitDepth};
use fgest_core::{compose, AlphaMatte, Image};

/// Smooth foreground and background over a soft disk.
pub struct Scene {
    pub fg: Image,
    pub bg: Image,
    pub alpha: AlphaMatte,
    pub image: Image,
}

pub fn scene(w: usize, h: usize) -> Scene {
    let (fw, fh) = (w as f64, h as f64);
    let fg = Image::from_fn(w, h, 3, |x, y, c| {
        0.6 + 0.25 * ((x as f64 / fw * 5.0 + c as f64).sin() * (y as f64 / fh * 3.0).cos())
    });
    let bg = Image::from_fn(w, h, 3, |x, y, c| {
        0.3 + 0.2 * ((y as f64 / fh * 4.0 - c as f64 * 2.0).sin() + (x as f64 / fw * 2.0).cos()) / 2.0
    });
    let alpha = AlphaMatte::from_fn(w, h, |x, y| {
        let (dx, dy) = ((x as f64 + 0.5) / fw - 0.5, (y as f64 + 0.5) / fh - 0.5);
        (0.3 - (dx * dx + dy * dy).sqrt()) / 0.15 + 0.5
    });
    let image = compose(&fg, &bg, &alpha).unwrap();
    Scene { fg, bg, alpha, image }
}

/// Writes the scene's layers as 16-bit PNGs in `dir`.
pub struct ScenePaths {
    pub fg: PathBuf,
    pub bg: PathBuf,
    pub alpha: PathBuf,
    pub image: PathBuf,
}

pub fn write_scene(dir: &Path, s: &Scene) -> ScenePaths {
    let p = ScenePaths {
        fg: dir.join("fg.png"),
        bg: dir.join("bg.png"),
        alpha: dir.join("alpha.png"),
        image: dir.join("image.png"),
    };
    png::write_image(&p.fg, &s.fg, BitDepth::Sixteen).unwrap();
    png::write_image(&p.bg, &s.bg, BitDepth::Sixteen).unwrap();
    png::write_alpha(&p.alpha, &s.alpha, BitDepth::Sixteen).unwrap();
    png::write_image(&p.image, &s.image, BitDepth::Sixteen).unwrap();
    p
}

pub fn fgest<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_fgest")).args(args).output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs and asserts success.
pub fn fgest_ok<I, S>(args: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let o = fgest(args);
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(&o));
    stdout(&o)
}
