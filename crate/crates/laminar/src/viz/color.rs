//! Color ramps for the figure renderers.

/// An sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(&self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

/// Viridis anchors at nine evenly spaced stops.
const VIRIDIS: [(f64, f64, f64); 9] = [
    (68.0, 1.0, 84.0),
    (71.0, 44.0, 122.0),
    (59.0, 81.0, 139.0),
    (44.0, 113.0, 142.0),
    (33.0, 144.0, 141.0),
    (39.0, 173.0, 129.0),
    (92.0, 200.0, 99.0),
    (170.0, 220.0, 50.0),
    (253.0, 231.0, 37.0),
];

/// Perceptually uniform ramp; `t = 0` dark purple, `t = 1` bright yellow.
pub fn viridis(t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    let mix = |a: f64, b: f64| a + frac * (b - a);
    Rgb(
        mix(VIRIDIS[lo].0, VIRIDIS[hi].0).round() as u8,
        mix(VIRIDIS[lo].1, VIRIDIS[hi].1).round() as u8,
        mix(VIRIDIS[lo].2, VIRIDIS[hi].2).round() as u8,
    )
}

/// Diverging blue–white–red ramp for `t in [-1, 1]`, neutral at 0.
pub fn diverging(t: f64) -> Rgb {
    let t = t.clamp(-1.0, 1.0);
    let blue = (59.0, 76.0, 192.0);
    let white = (242.0, 242.0, 242.0);
    let red = (180.0, 4.0, 38.0);
    let (from, to, u) = if t < 0.0 {
        (white, blue, -t)
    } else {
        (white, red, t)
    };
    let mix = |a: f64, b: f64| a + u * (b - a);
    Rgb(
        mix(from.0, to.0).round() as u8,
        mix(from.1, to.1).round() as u8,
        mix(from.2, to.2).round() as u8,
    )
}

/// HSV to sRGB; hue in degrees (wraps), saturation and value in [0, 1].
pub fn hsv_to_rgb(hue_deg: f64, saturation: f64, value: f64) -> Rgb {
    let h = hue_deg.rem_euclid(360.0) / 60.0;
    let s = saturation.clamp(0.0, 1.0);
    let v = value.clamp(0.0, 1.0);
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    Rgb(
        ((r + m) * 255.0).round() as u8,
        ((g + m) * 255.0).round() as u8,
        ((b + m) * 255.0).round() as u8,
    )
}

/// Greyscale ramp from light (`t = 0`) to dark (`t = 1`).
pub fn greyscale(t: f64) -> Rgb {
    let v = (204.0 - 153.0 * t.clamp(0.0, 1.0)).round() as u8;
    Rgb(v, v, v)
}
