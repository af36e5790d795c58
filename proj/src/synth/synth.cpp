#include "mmhar/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mmhar/core/errors.hpp"

namespace mmhar::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// Per-class signature beyond the Table I triple: modulation shape, finger
// lobes, nominal contact site and hand posture (deg).
struct Template {
  Modulation mod;
  int lobes;
  double lobe_step;   // rad between lobes
  double theta0;      // rad
  double z_frac;      // nominal height as a fraction of the cylinder
  double shear_z_cm;  // static drag along the axis
  double pitch, roll, flex;
  double excursion;   // slide / circle / tremor amplitude, cm
};

const Template& template_of(ActionClass c) {
  static const std::array<Template, kNumClasses> t = {{
      {Modulation::Pulse, 2, kPi, 0.5, 0.75, 0.0, 10, 0, 50, 0.0},            // pinching
      {Modulation::Static, 1, 0.0, 2.0, 0.55, -1.2, -30, 10, 40, 0.0},        // pulling
      {Modulation::Static, 1, 0.0, 3.5, 0.45, 0.0, 40, -10, 5, 0.0},          // pushing
      {Modulation::Slide, 1, 0.0, 1.0, 0.35, 0.0, 5, 25, 10, 1.6},            // rubbing (along theta)
      {Modulation::Pulse, 1, 0.0, 4.5, 0.65, 0.0, -10, -25, 0, 0.0},          // patting
      {Modulation::Pulse, 3, 0.35, 5.5, 0.30, 0.0, 25, 20, 30, 0.0},          // tapping
      {Modulation::Slide, 4, 0.30, 0.0, 0.50, 0.0, 30, 0, 70, 1.5},           // scratching (along z)
      {Modulation::Static, 1, 0.0, 3.0, 0.80, 0.0, -5, 5, 15, 0.0},           // lingering
      {Modulation::Circle, 1, 0.0, 4.0, 0.40, 0.0, 15, -20, 35, 1.2},         // massaging
      {Modulation::Static, 4, kPi / 2, 0.8, 0.50, 0.0, -20, -5, 80, 0.0},     // squeezing
      {Modulation::Tremor, 1, 0.0, 2.5, 0.70, 0.0, 0, 35, 20, 0.3},           // trembling
      {Modulation::Tremor, 1, 0.0, 5.0, 0.50, 0.0, -35, -30, 45, 1.0},        // shaking
      {Modulation::Slide, 1, 0.0, 1.8, 0.50, 0.0, 20, 40, 5, 3.0},            // stroking (along z)
      {Modulation::Pulse, 1, 0.0, 3.8, 0.25, 0.0, 45, 15, 60, 0.0},           // poking
      {Modulation::None, 0, 0.0, 0.0, 0.50, 0.0, 0, 0, 0, 0.0},               // idle
  }};
  return t[static_cast<std::size_t>(class_index(c))];
}

bool slides_along_theta(ActionClass c) { return c == ActionClass::Rubbing; }

}  // namespace

SubjectStyle SubjectStyle::draw(Rng& rng, double spread, Hand hand) {
  SubjectStyle s;
  s.pitch_deg = spread * uniform(rng, -4.0, 4.0);
  s.roll_deg = spread * uniform(rng, -4.0, 4.0);
  s.flex_deg = spread * uniform(rng, -5.0, 5.0);
  s.amplitude_scale = 1.0 + spread * uniform(rng, -0.15, 0.15);
  s.frequency_scale = 1.0 + spread * uniform(rng, -0.07, 0.07);
  s.theta_offset = spread * uniform(rng, -0.15, 0.15);
  s.z_offset_cm = spread * uniform(rng, -0.8, 0.8);
  s.hand = hand;
  return s;
}

double area_radius_cm(Level a) {
  switch (a) {
    case Level::Low: return 0.5;
    case Level::Medium: return 1.5;
    case Level::High: return 3.0;
  }
  return 0.0;
}

double pressure_depth(Level p) {
  switch (p) {
    case Level::Low: return 0.2;
    case Level::Medium: return 0.5;
    case Level::High: return 0.9;
  }
  return 0.0;
}

double frequency_hz(Level f) {
  switch (f) {
    case Level::Low: return 0.5;
    case Level::Medium: return 2.0;
    case Level::High: return 5.0;
  }
  return 0.0;
}

Modulation modulation_of(ActionClass c) { return template_of(c).mod; }

const std::vector<Contact>& ContactProfile::at(double t) const {
  static const std::vector<Contact> none;
  if (samples.empty()) return none;
  auto k = static_cast<std::ptrdiff_t>(std::lround(t * rate_hz));
  k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(samples.size()) - 1);
  return samples[static_cast<std::size_t>(k)];
}

ContactProfile make_contact_profile(ActionClass c, double duration_s, Rng& rng, const SubjectStyle& style,
                                    double rate_hz) {
  if (!(duration_s > 0.0) || !(rate_hz > 0.0)) throw ConfigError("contact profile: duration and rate must be positive");
  ContactProfile p;
  p.cls = c;
  p.duration_s = duration_s;
  p.rate_hz = rate_hz;
  const auto attr = action_attributes(c);
  if (!attr) return p;

  const Template& tp = template_of(c);
  const SensorGeometry geo;
  p.modulation = tp.mod;
  p.radius_cm = area_radius_cm(attr->contact_area) * uniform(rng, 0.8, 1.2);
  p.depth = std::min(1.0, pressure_depth(attr->pressure_intensity) * uniform(rng, 0.9, 1.1));
  p.frequency_hz = frequency_hz(attr->frequency) * style.frequency_scale * uniform(rng, 0.95, 1.05);
  const double phase = uniform(rng, 0.0, 2.0 * kPi);
  const double phase2 = uniform(rng, 0.0, 2.0 * kPi);
  const double theta0 = tp.theta0 + style.theta_offset + uniform(rng, -0.15, 0.15);
  const double z0 = std::clamp(tp.z_frac * geo.cylinder_height_cm + style.z_offset_cm + uniform(rng, -1.0, 1.0), 1.0,
                               geo.cylinder_height_cm - 1.0);
  const double R = geo.cylinder_radius_cm;
  const double w = 2.0 * kPi * p.frequency_hz;
  const double mirror = style.hand == Hand::Left ? -1.0 : 1.0;

  const auto n = static_cast<std::size_t>(std::max(1.0, std::floor(duration_s * rate_hz)));
  p.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / rate_hz;
    double dtheta = 0.0, dz = 0.0, depth = p.depth;
    switch (tp.mod) {
      case Modulation::Pulse: {
        const double s = 0.5 - 0.5 * std::cos(w * t + phase);
        depth = p.depth * s * s;
        break;
      }
      case Modulation::Slide: {
        const double s = std::sin(w * t + phase);
        if (slides_along_theta(c)) dtheta = tp.excursion * s / R;
        else dz = tp.excursion * s;
        break;
      }
      case Modulation::Circle:
        dtheta = tp.excursion * std::cos(w * t + phase) / R;
        dz = tp.excursion * std::sin(w * t + phase);
        break;
      case Modulation::Tremor: {
        const double s = std::sin(w * t + phase) + 0.5 * std::sin(1.7 * w * t + phase2);
        dtheta = tp.excursion * s / R;
        dz = tp.excursion * 0.6 * std::sin(1.3 * w * t + phase2);
        break;
      }
      case Modulation::Static:
        depth = p.depth * (1.0 + 0.05 * std::sin(w * t + phase));
        break;
      case Modulation::None: break;
    }
    auto& lobes = p.samples[k];
    lobes.resize(static_cast<std::size_t>(tp.lobes));
    for (int l = 0; l < tp.lobes; ++l) {
      const double off = (l - 0.5 * (tp.lobes - 1)) * tp.lobe_step;
      Contact& ct = lobes[static_cast<std::size_t>(l)];
      ct.theta = mirror * (theta0 + off + dtheta);
      ct.z_cm = std::clamp(z0 + dz, 0.0, geo.cylinder_height_cm);
      ct.radius_cm = p.radius_cm;
      ct.depth = std::clamp(depth, 0.0, 1.0);
      ct.shear_theta = 0.0;
      ct.shear_z_cm = tp.shear_z_cm * (depth / std::max(p.depth, 1e-9));
    }
  }
  return p;
}

namespace {

struct MarkerPose {
  double theta;
  double z;
  double indent;  // image-space inward shift, px
  double weight;  // summed contact weight
};

MarkerPose deform(std::span<const Contact> contacts, const SensorGeometry& g, const RenderOptions& opt, double theta,
                  double z) {
  MarkerPose m{theta, z, 0.0, 0.0};
  const double R = g.cylinder_radius_cm;
  for (const auto& c : contacts) {
    double dth = std::remainder(theta - c.theta, 2.0 * kPi);
    const double s2 = (R * dth) * (R * dth) + (z - c.z_cm) * (z - c.z_cm);
    const double sig = c.radius_cm + opt.falloff_extra_cm;
    const double w = std::exp(-s2 / (2.0 * sig * sig));
    m.theta += w * c.shear_theta;
    m.z += w * c.shear_z_cm;
    m.indent += opt.indent_px * c.depth * w;
    m.weight += w * c.depth;
  }
  return m;
}

PixelPoint project(const SensorGeometry& g, CameraId cam, double theta, double z, double indent) {
  const double half = 0.5 * g.cylinder_height_cm;
  const double u = cam == CameraId::Top ? (g.cylinder_height_cm - z) / half : z / half;
  const double r = std::max(0.0, g.outer_ring_radius_px * (1.0 - 0.75 * u) - indent);
  const double phi = cam == CameraId::Top ? theta : kPi - theta;
  const PixelPoint& c = g.ring_center(cam);
  return {c.x + r * std::cos(phi), c.y + r * std::sin(phi)};
}

bool visible(const SensorGeometry& g, CameraId cam, int row) {
  return cam == CameraId::Top ? row >= g.marker_rows / 2 : row < g.marker_rows / 2;
}

double marker_theta(const SensorGeometry& g, int col) { return 2.0 * kPi * (col + 0.5) / g.marker_cols; }
double marker_z(const SensorGeometry& g, int row) { return g.cylinder_height_cm * (row + 0.5) / g.marker_rows; }

}  // namespace

bool marker_pixel(std::span<const Contact> contacts, const SensorGeometry& g, CameraId cam, const RenderOptions& opt,
                  int row, int col, PixelPoint& rest, PixelPoint& moved) {
  if (!visible(g, cam, row)) return false;
  const double th = marker_theta(g, col), z = marker_z(g, row);
  rest = project(g, cam, th, z, 0.0);
  const MarkerPose m = deform(contacts, g, opt, th, z);
  moved = project(g, cam, m.theta, m.z, m.indent);
  return true;
}

TactileFrame render_frame(std::span<const Contact> contacts, const SensorGeometry& g, CameraId cam,
                          const RenderOptions& opt, Micros timestamp, Rng* noise_rng) {
  g.validate();
  const int W = opt.width, H = opt.height;
  std::vector<float> img(static_cast<std::size_t>(W) * H, static_cast<float>(opt.background));
  const PixelPoint& c = g.ring_center(cam);
  const double ring_sigma = 1.5;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double d = std::hypot(x - c.x, y - c.y) - g.outer_ring_radius_px;
      if (std::abs(d) < 4.0 * ring_sigma)
        img[static_cast<std::size_t>(y) * W + x] += static_cast<float>(opt.ring_intensity * std::exp(-d * d / (2.0 * ring_sigma * ring_sigma)));
    }
  for (int row = 0; row < g.marker_rows; ++row) {
    if (!visible(g, cam, row)) continue;
    for (int col = 0; col < g.marker_cols; ++col) {
      const double th = marker_theta(g, col), z = marker_z(g, row);
      const MarkerPose m = deform(contacts, g, opt, th, z);
      const PixelPoint p = project(g, cam, m.theta, m.z, m.indent);
      const double sig = opt.marker_sigma_px * (1.0 + 0.3 * std::min(m.weight, 1.0));
      const int reach = static_cast<int>(std::ceil(3.0 * sig));
      const int x0 = static_cast<int>(std::floor(p.x)), y0 = static_cast<int>(std::floor(p.y));
      for (int y = std::max(0, y0 - reach); y <= std::min(H - 1, y0 + reach); ++y)
        for (int x = std::max(0, x0 - reach); x <= std::min(W - 1, x0 + reach); ++x) {
          const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
          img[static_cast<std::size_t>(y) * W + x] += static_cast<float>(opt.marker_peak * std::exp(-d2 / (2.0 * sig * sig)));
        }
    }
  }
  TactileFrame f;
  f.camera = cam;
  f.timestamp = timestamp;
  f.width = W;
  f.height = H;
  f.pixels.resize(img.size());
  std::normal_distribution<double> noise(0.0, opt.pixel_noise);
  for (std::size_t i = 0; i < img.size(); ++i) {
    double v = img[i];
    if (opt.pixel_noise > 0.0 && noise_rng) v += noise(*noise_rng);
    f.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return f;
}

FramePair render_frames(const ContactProfile& p, const SensorGeometry& g, const RenderOptions& opt, Micros t0) {
  FramePair out;
  const auto n = p.empty() ? static_cast<std::size_t>(std::max(1.0, std::floor(p.duration_s * p.rate_hz)))
                           : p.samples.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Micros t = t0 + static_cast<Micros>(std::llround(static_cast<double>(k) * 1e6 / p.rate_hz));
    const auto& contacts = p.empty() ? p.at(0.0) : p.samples[k];
    out.top.push_back(render_frame(contacts, g, CameraId::Top, opt, t));
    out.bottom.push_back(render_frame(contacts, g, CameraId::Bottom, opt, t));
  }
  return out;
}

namespace {

constexpr std::array<double, kImuModules> kFlexWeight = {0.0, 0.5, 0.8, 1.0, 1.4, 1.0, 0.9, 0.8};

double module_gain(Level area, int m) {
  if (m == 0) return 0.6;
  const bool thumb_index = m >= 1 && m <= 4;
  switch (area) {
    case Level::Low: return thumb_index ? 1.0 : 0.25;
    case Level::Medium: return (thumb_index || m == 5) ? 1.0 : 0.4;
    case Level::High: return 1.0;
  }
  return 1.0;
}

// Narrow-band oscillation: carrier plus two close sidebands.
struct Band {
  double w, p0, p1, p2;
  double operator()(double t) const {
    return (std::sin(w * t + p0) + 0.3 * std::sin(0.92 * w * t + p1) + 0.3 * std::sin(1.08 * w * t + p2)) / 1.6;
  }
};

std::array<double, 3> rotate_body(const std::array<double, 3>& v, double pitch, double roll) {
  // World -> sensor frame: pitch about y, then roll about x.
  const double cp = std::cos(pitch), sp = std::sin(pitch), cr = std::cos(roll), sr = std::sin(roll);
  const double x1 = cp * v[0] - sp * v[2];
  const double z1 = sp * v[0] + cp * v[2];
  const double y1 = v[1];
  return {x1, cr * y1 + sr * z1, -sr * y1 + cr * z1};
}

}  // namespace

ImuProfile make_imu_profile(ActionClass c, double duration_s, Rng& rng, const SubjectStyle& style,
                            const ImuNoise& noise, double rate_hz) {
  if (!(duration_s > 0.0) || !(rate_hz > 0.0)) throw ConfigError("imu profile: duration and rate must be positive");
  ImuProfile p;
  p.cls = c;
  p.rate_hz = rate_hz;
  const Template& tp = template_of(c);
  const auto attr = action_attributes(c);

  double acc_amp = 0.0, gyro_amp = 0.0;
  Level area = Level::High;
  if (attr) {
    static constexpr std::array<double, 3> kAcc = {0.06, 0.15, 0.30};
    static constexpr std::array<double, 3> kGyro = {15.0, 40.0, 80.0};
    acc_amp = kAcc[static_cast<std::size_t>(attr->pressure_intensity)] * style.amplitude_scale;
    gyro_amp = kGyro[static_cast<std::size_t>(attr->pressure_intensity)] * style.amplitude_scale;
    area = attr->contact_area;
    p.frequency_hz = frequency_hz(attr->frequency) * style.frequency_scale * uniform(rng, 0.95, 1.05);
    if (tp.mod == Modulation::Static) {
      acc_amp *= 0.2;
      gyro_amp *= 0.2;
    }
  }
  const double w = 2.0 * kPi * p.frequency_hz;
  Band band{w, uniform(rng, 0, 2 * kPi), uniform(rng, 0, 2 * kPi), uniform(rng, 0, 2 * kPi)};
  Band band_q{w, band.p0 + kPi / 2, band.p1 + kPi / 2, band.p2 + kPi / 2};
  std::array<double, 3> tremor_axis{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
  {
    const double n = std::hypot(tremor_axis[0], tremor_axis[1], tremor_axis[2]) + 1e-12;
    for (double& v : tremor_axis) v /= n;
  }
  const double pitch = (tp.pitch + style.pitch_deg + uniform(rng, -1.5, 1.5)) * kDeg;
  const double roll = (tp.roll + style.roll_deg + uniform(rng, -1.5, 1.5)) * kDeg;
  const double flex = (tp.flex + style.flex_deg + uniform(rng, -2.0, 2.0)) * kDeg;
  const double drift_phase = uniform(rng, 0, 2 * kPi);
  const std::array<double, 3> field = {22.0, 5.0, -42.0};
  const double mirror = style.hand == Hand::Left ? -1.0 : 1.0;
  std::normal_distribution<double> na(0.0, noise.accel_g), ng(0.0, noise.gyro_dps), nm(0.0, noise.mag_ut);

  const auto n = static_cast<std::size_t>(std::max(1.0, std::floor(duration_s * rate_hz)));
  p.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / rate_hz;
    const double s = band(t), q = band_q(t);
    std::array<double, 3> osc{0, 0, 0}, rot{0, 0, 0};
    switch (tp.mod) {
      case Modulation::Pulse: osc = {0, 0, s}; rot = {0, s, 0}; break;
      case Modulation::Slide:
        if (slides_along_theta(c)) { osc = {s, 0, 0}; rot = {0, 0, s}; }
        else { osc = {0, s, 0}; rot = {s, 0, 0}; }
        break;
      case Modulation::Circle: osc = {s, q, 0}; rot = {q, s, 0}; break;
      case Modulation::Tremor:
        osc = {tremor_axis[0] * s, tremor_axis[1] * s, tremor_axis[2] * s};
        rot = {tremor_axis[1] * q, tremor_axis[2] * q, tremor_axis[0] * q};
        break;
      case Modulation::Static: osc = {0, 0, s}; rot = {0, s, 0}; break;
      case Modulation::None: break;
    }
    const double drift = 0.5 * std::sin(2.0 * kPi * 0.2 * t + drift_phase);
    for (int m = 0; m < kImuModules; ++m) {
      const double mp = pitch + flex * kFlexWeight[static_cast<std::size_t>(m)];
      const auto g = rotate_body({0.0, 0.0, 1.0}, mp, roll);
      const auto b = rotate_body(field, mp, roll);
      const double gain = module_gain(area, m);
      auto& ch = p.samples[k][static_cast<std::size_t>(m)];
      for (int a = 0; a < 3; ++a) {
        ch[static_cast<std::size_t>(a)] = static_cast<float>(g[static_cast<std::size_t>(a)] + gain * acc_amp * osc[static_cast<std::size_t>(a)] + na(rng));
        ch[static_cast<std::size_t>(3 + a)] = static_cast<float>(gain * gyro_amp * rot[static_cast<std::size_t>(a)] + ng(rng));
        ch[static_cast<std::size_t>(6 + a)] = static_cast<float>(b[static_cast<std::size_t>(a)] + drift + nm(rng));
      }
      if (mirror < 0.0) {
        ch[1] = -ch[1];
        ch[3] = -ch[3];
        ch[5] = -ch[5];
        ch[7] = -ch[7];
      }
    }
  }
  return p;
}

void SynthScript::validate() const {
  if (items.empty()) throw ConfigError("script: no items");
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!(items[i].duration_s > 0.0) || !std::isfinite(items[i].duration_s))
      throw ConfigError("script: item " + std::to_string(i) + " has non-positive duration");
  if (gap_s < 0.0 || !std::isfinite(gap_s)) throw ConfigError("script: gap_s must be >= 0");
  if (!(frame_rate_hz > 0.0) || !(imu_rate_hz > 0.0)) throw ConfigError("script: rates must be positive");
  if (jitter_us < 0) throw ConfigError("script: jitter_us must be >= 0");
  if (start_us < 0) throw ConfigError("script: start_us must be >= 0");
  if (2 * jitter_us >= static_cast<Micros>(1e6 / std::max(frame_rate_hz, imu_rate_hz)))
    throw ConfigError("script: jitter_us too large for the sample rates");
  if (style_spread < 0.0) throw ConfigError("script: style_spread must be >= 0");
}

double SynthScript::total_seconds() const {
  double t = 0.0;
  for (const auto& it : items) t += it.duration_s;
  if (gap_s > 0.0) t += gap_s * static_cast<double>(items.size() + 1);
  return t;
}

SynthScript SynthScript::parse(const KvDocument& doc) {
  doc.reject_unknown({"seed", "gap_s", "subject", "hand", "style_spread", "jitter_us", "start_us", "frame_rate_hz",
                      "imu_rate_hz", "pixel_noise"});
  SynthScript s;
  s.seed = static_cast<std::uint64_t>(doc.get_int("seed", 1));
  s.gap_s = doc.get_double("gap_s", 0.0);
  s.subject = doc.get_or("subject", "synthetic");
  const std::string hand = doc.get_or("hand", "right");
  if (hand == "left") s.hand = Hand::Left;
  else if (hand == "right") s.hand = Hand::Right;
  else throw ConfigError("script: hand must be left or right, got '" + hand + "'");
  s.style_spread = doc.get_double("style_spread", 1.0);
  s.jitter_us = doc.get_int("jitter_us", 1000);
  s.start_us = doc.get_int("start_us", 1'000'000);
  s.frame_rate_hz = doc.get_double("frame_rate_hz", 30.0);
  s.imu_rate_hz = doc.get_double("imu_rate_hz", 40.0);
  s.pixel_noise = doc.get_double("pixel_noise", 0.0);
  for (const auto& line : doc.body()) {
    std::istringstream in(line);
    std::string name;
    double dur = 0.0;
    if (!(in >> name >> dur)) throw ConfigError("script: expected '<class> <seconds>', got '" + line + "'");
    std::string rest;
    if (in >> rest) throw ConfigError("script: trailing text in '" + line + "'");
    const auto c = parse_action(name);
    if (!c) throw ConfigError("script: unknown class '" + name + "'");
    s.items.push_back({*c, dur});
  }
  s.validate();
  return s;
}

KvDocument SynthScript::to_document() const {
  std::ostringstream text;
  text.precision(17);
  text << "seed = " << seed << "\ngap_s = " << gap_s << "\nsubject = " << subject
       << "\nhand = " << (hand == Hand::Left ? "left" : "right") << "\nstyle_spread = " << style_spread
       << "\njitter_us = " << jitter_us << "\nstart_us = " << start_us << "\nframe_rate_hz = " << frame_rate_hz
       << "\nimu_rate_hz = " << imu_rate_hz << "\npixel_noise = " << pixel_noise << '\n';
  for (const auto& it : items) text << to_string(it.cls) << ' ' << it.duration_s << '\n';
  return KvDocument::parse(text.str());
}

namespace {

struct Segment {
  ActionClass cls;
  double start_s;
  double duration_s;
};

std::vector<Segment> timeline(const SynthScript& s) {
  std::vector<Segment> out;
  double t = 0.0;
  auto gap = [&] {
    if (s.gap_s > 0.0) {
      out.push_back({ActionClass::Idle, t, s.gap_s});
      t += s.gap_s;
    }
  };
  gap();
  for (const auto& it : s.items) {
    out.push_back({it.cls, t, it.duration_s});
    t += it.duration_s;
    gap();
  }
  return out;
}

Micros to_us(double s) { return static_cast<Micros>(std::llround(s * 1e6)); }

}  // namespace

LabelStream script_labels(const SynthScript& s) {
  s.validate();
  std::vector<LabelEntry> entries;
  for (const auto& seg : timeline(s)) {
    if (!entries.empty() && entries.back().label == seg.cls) continue;
    entries.push_back({s.start_us + to_us(seg.start_s), seg.cls});
  }
  return LabelStream(std::move(entries), s.start_us + to_us(s.total_seconds()));
}

ingest::Recording gen_recording(const SynthScript& s, const SensorGeometry& g, const RenderOptions& opt_in) {
  s.validate();
  g.validate();
  RenderOptions opt = opt_in;
  if (s.pixel_noise > 0.0) opt.pixel_noise = s.pixel_noise;
  Rng rng(s.seed);
  Rng jitter_rng(s.seed ^ 0x9E3779B97F4A7C15ULL);
  Rng noise_rng(s.seed ^ 0xC2B2AE3D27D4EB4FULL);
  const SubjectStyle style = SubjectStyle::draw(rng, s.style_spread, s.hand);
  const auto segs = timeline(s);

  std::vector<ContactProfile> contacts;
  std::vector<ImuProfile> imus;
  for (const auto& seg : segs) {
    contacts.push_back(make_contact_profile(seg.cls, seg.duration_s, rng, style, s.frame_rate_hz));
    imus.push_back(make_imu_profile(seg.cls, seg.duration_s, rng, style, {}, s.imu_rate_hz));
  }

  ingest::Recording rec;
  rec.meta.subject_id = s.subject;
  rec.meta.hand = s.hand;
  rec.meta.geometry = g;
  rec.meta.start_time = s.start_us;
  rec.meta.source_width = opt.width;
  rec.meta.source_height = opt.height;
  rec.labels = script_labels(s);

  const double total = s.total_seconds();
  std::uniform_int_distribution<Micros> jit(-s.jitter_us, s.jitter_us);
  auto segment_at = [&](double t) {
    std::size_t i = 0;
    while (i + 1 < segs.size() && t >= segs[i + 1].start_s) ++i;
    return i;
  };

  const auto frames = static_cast<std::size_t>(std::floor(total * s.frame_rate_hz + 1e-9));
  rec.top.reserve(frames);
  rec.bottom.reserve(frames);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / s.frame_rate_hz;
    while (seg + 1 < segs.size() && t >= segs[seg + 1].start_s) ++seg;
    const auto& cts = contacts[seg].at(t - segs[seg].start_s);
    const Micros ideal = s.start_us + to_us(t);
    rec.top.push_back(render_frame(cts, g, CameraId::Top, opt, std::max<Micros>(s.start_us, ideal + jit(jitter_rng)), &noise_rng));
    rec.bottom.push_back(render_frame(cts, g, CameraId::Bottom, opt, std::max<Micros>(s.start_us, ideal + jit(jitter_rng)), &noise_rng));
  }

  const auto imu_n = static_cast<std::size_t>(std::floor(total * s.imu_rate_hz + 1e-9));
  rec.imu.reserve(imu_n * kImuModules);
  for (std::size_t k = 0; k < imu_n; ++k) {
    const double t = static_cast<double>(k) / s.imu_rate_hz;
    const std::size_t si = segment_at(t);
    const auto& prof = imus[si];
    auto idx = static_cast<std::size_t>(std::lround((t - segs[si].start_s) * s.imu_rate_hz));
    idx = std::min(idx, prof.samples.size() - 1);
    const Micros ideal = s.start_us + to_us(t);
    for (int m = 0; m < kImuModules; ++m) {
      ImuSample smp;
      smp.module_id = static_cast<std::uint8_t>(m);
      smp.timestamp = std::max<Micros>(s.start_us, ideal + jit(jitter_rng));
      const auto& ch = prof.samples[idx][static_cast<std::size_t>(m)];
      for (int a = 0; a < 3; ++a) {
        smp.accel[static_cast<std::size_t>(a)] = ch[static_cast<std::size_t>(a)];
        smp.gyro[static_cast<std::size_t>(a)] = ch[static_cast<std::size_t>(3 + a)];
        smp.mag[static_cast<std::size_t>(a)] = ch[static_cast<std::size_t>(6 + a)];
      }
      rec.imu.push_back(smp);
    }
  }
  std::stable_sort(rec.imu.begin(), rec.imu.end(),
                   [](const ImuSample& a, const ImuSample& b) { return a.timestamp < b.timestamp; });
  rec.validate();
  return rec;
}

SynthScript make_script(std::span<const ActionClass> classes, double action_s, double gap_s, std::uint64_t seed,
                        bool shuffle) {
  SynthScript s;
  s.seed = seed;
  s.gap_s = gap_s;
  std::vector<ActionClass> order(classes.begin(), classes.end());
  if (shuffle) {
    Rng rng(seed * 7919ULL + 17ULL);
    std::shuffle(order.begin(), order.end(), rng);
  }
  for (auto c : order) s.items.push_back({c, action_s});
  s.validate();
  return s;
}

}  // namespace mmhar::synth
